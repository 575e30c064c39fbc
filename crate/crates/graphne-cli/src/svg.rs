//! SVG scatter rendering for 2D embeddings.

use std::fmt::Write as _;

use graphne::Embedding;

pub const VIEWPORT: f64 = 1000.0;
pub const MARGIN_FRACTION: f64 = 0.05;
pub const RADIUS: f64 = 2.0;
pub const DEFAULT_COLOR: &str = "#808080";

/// Fixed 20-color cycle (tab20 ordering).
pub const PALETTE: [&str; 20] = [
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896",
    "#9467bd", "#c5b0d5", "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7",
    "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
];

/// Renders one circle per node, positions linearly mapped per axis into the
/// viewport with a 5% margin, colored by label through the 20-color cycle.
pub fn render(e: &Embedding, labels: Option<&[Option<usize>]>) -> String {
    let n = e.n();
    let margin = VIEWPORT * MARGIN_FRACTION;
    let span = VIEWPORT - 2.0 * margin;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for i in 0..n {
        for axis in 0..2 {
            lo[axis] = lo[axis].min(e.row(i)[axis]);
            hi[axis] = hi[axis].max(e.row(i)[axis]);
        }
    }
    let map = |v: f64, axis: usize| -> f64 {
        let range = hi[axis] - lo[axis];
        if range == 0.0 {
            VIEWPORT / 2.0
        } else {
            margin + (v - lo[axis]) / range * span
        }
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{VIEWPORT}\" height=\"{VIEWPORT}\" viewBox=\"0 0 {VIEWPORT} {VIEWPORT}\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{VIEWPORT}\" height=\"{VIEWPORT}\" fill=\"white\"/>"
    );
    for i in 0..n {
        let cx = map(e.row(i)[0], 0);
        // flip the y axis so larger coordinates draw higher
        let cy = VIEWPORT - map(e.row(i)[1], 1);
        let color = labels
            .and_then(|l| l[i])
            .map_or(DEFAULT_COLOR, |c| PALETTE[c % PALETTE.len()]);
        let _ = writeln!(
            out,
            "<circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{RADIUS}\" fill=\"{color}\"/>"
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use graphne::Metric;

    #[test]
    fn one_circle_per_node() {
        let e = Embedding::new(3, 2, vec![0.0, 0.0, 1.0, 0.5, -2.0, 3.0], Metric::Euclidean)
            .unwrap();
        let doc = render(&e, None);
        assert_eq!(doc.matches("<circle").count(), 3);
        assert_eq!(doc.matches(DEFAULT_COLOR).count(), 3);
    }

    #[test]
    fn corners_map_inside_the_margin_box() {
        let e = Embedding::new(
            4,
            2,
            vec![-5.0, -5.0, 5.0, -5.0, -5.0, 5.0, 5.0, 5.0],
            Metric::Euclidean,
        )
        .unwrap();
        let doc = render(&e, None);
        for line in doc.lines().filter(|l| l.starts_with("<circle")) {
            let cx: f64 = line.split("cx=\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap();
            let cy: f64 = line.split("cy=\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap();
            assert!((50.0..=950.0).contains(&cx));
            assert!((50.0..=950.0).contains(&cy));
        }
    }

    #[test]
    fn labels_color_through_the_cycle() {
        let e = Embedding::new(2, 2, vec![0.0, 0.0, 1.0, 1.0], Metric::Euclidean).unwrap();
        let labels = vec![Some(0), Some(21)];
        let doc = render(&e, Some(&labels));
        assert!(doc.contains(PALETTE[0]));
        assert!(doc.contains(PALETTE[1])); // 21 % 20
    }
}
