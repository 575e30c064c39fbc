//! Benchmark harness: run embed + eval per (dataset, method, seed) and
//! report mean and standard deviation per metric.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use graphne::{
    degree_normalized_affinity, evaluate, laplacian_eigenmaps, run_cne, run_tsne, CneParams,
    Embedding, EvalReport, Graph, LabelSet, TsneParams,
};

use crate::config::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Tsne,
    Cne,
    /// CNE with learnable temperature.
    CneTau,
}

impl Method {
    fn parse(s: &str) -> Result<Method> {
        match s {
            "tsne" => Ok(Method::Tsne),
            "cne" => Ok(Method::Cne),
            "cne-tau" => Ok(Method::CneTau),
            other => bail!("unknown method {other:?} (expected tsne, cne, or cne-tau)"),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Method::Tsne => "tsne",
            Method::Cne => "cne",
            Method::CneTau => "cne-tau",
        }
    }
}

struct DatasetSpec {
    name: String,
    edges: String,
    labels: String,
}

pub fn run(config_path: &Path, out_prefix: Option<&str>, _seed: u64, quiet: bool) -> Result<()> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let cfg = Config::parse(&text)?;

    let mut datasets = Vec::new();
    for spec in cfg.all("dataset") {
        let toks: Vec<&str> = spec.split_whitespace().collect();
        if toks.len() != 3 {
            bail!("dataset entry {spec:?}: expected \"name edges_path labels_path\"");
        }
        datasets.push(DatasetSpec {
            name: toks[0].to_string(),
            edges: toks[1].to_string(),
            labels: toks[2].to_string(),
        });
    }
    if datasets.is_empty() {
        bail!("config declares no datasets");
    }
    let mut methods = Vec::new();
    for m in cfg.all("method") {
        methods.push(Method::parse(m)?);
    }
    if methods.is_empty() {
        methods = vec![Method::Tsne, Method::Cne];
    }
    let seeds: Vec<u64> = match cfg.get("seeds") {
        None => vec![0, 1, 2],
        Some(s) => s
            .split(',')
            .map(|t| t.trim().parse().with_context(|| format!("seed {t:?}")))
            .collect::<Result<_>>()?,
    };
    let cne_dim: usize = cfg.get_parsed("cne.dim")?.unwrap_or(128);

    let mut csv = String::from("dataset,method,d,recall,knn_acc,linear_acc,seed\n");
    let mut table_rows: Vec<[String; 6]> = Vec::new();

    for ds in &datasets {
        let (g, labels) = load_dataset(ds)?;
        if !quiet {
            eprintln!(
                "dataset {}: {} nodes, {} edges (largest component)",
                ds.name,
                g.n(),
                g.num_edges()
            );
        }
        // spectral initialization is deterministic; share it across seeds
        let mut inits: HashMap<usize, Embedding> = HashMap::new();
        for &method in &methods {
            let d = match method {
                Method::Tsne => 2,
                Method::Cne | Method::CneTau => cne_dim,
            };
            let mut reports: Vec<EvalReport> = Vec::new();
            for &seed in &seeds {
                if !inits.contains_key(&d) {
                    inits.insert(
                        d,
                        laplacian_eigenmaps(&g, d, 0)
                            .with_context(|| format!("{}: init d={d}", ds.name))?,
                    );
                }
                let init = &inits[&d];
                let emb = run_method(&g, method, init, seed, &cfg)
                    .with_context(|| format!("{}: {} seed {seed}", ds.name, method.name()))?;
                let report = evaluate(&g, &emb, &labels, seed)
                    .with_context(|| format!("{}: eval seed {seed}", ds.name))?;
                csv.push_str(&report.csv_row(&ds.name, method.name(), emb.d()));
                csv.push('\n');
                if !quiet {
                    eprintln!(
                        "  {} {} seed {seed}: recall {:.3} knn {:.3} linear {:.3}",
                        ds.name, method.name(), report.recall, report.knn_accuracy,
                        report.linear_accuracy
                    );
                }
                reports.push(report);
            }
            let stat = |f: fn(&EvalReport) -> f64| -> String {
                let vals: Vec<f64> = reports.iter().map(f).collect();
                let (mean, std) = mean_std(&vals);
                format!("{:.1} \u{00b1} {:.1}", 100.0 * mean, 100.0 * std)
            };
            table_rows.push([
                ds.name.clone(),
                method.name().to_string(),
                d.to_string(),
                stat(|r| r.recall),
                stat(|r| r.knn_accuracy),
                stat(|r| r.linear_accuracy),
            ]);
        }
    }

    let table = render_table(&table_rows);
    println!("{table}");
    let prefix = out_prefix.or(cfg.get("out"));
    if let Some(prefix) = prefix {
        std::fs::write(format!("{prefix}.csv"), &csv)
            .with_context(|| format!("writing {prefix}.csv"))?;
        std::fs::write(format!("{prefix}.txt"), &table)
            .with_context(|| format!("writing {prefix}.txt"))?;
        if !quiet {
            eprintln!("wrote {prefix}.csv and {prefix}.txt");
        }
    }
    Ok(())
}

fn load_dataset(ds: &DatasetSpec) -> Result<(Graph, LabelSet)> {
    let edges = std::fs::read_to_string(&ds.edges)
        .with_context(|| format!("{}: reading {}", ds.name, ds.edges))?;
    let g = graphne::parse_edge_list(&edges).with_context(|| format!("{}: parse", ds.name))?;
    let labels_text = std::fs::read_to_string(&ds.labels)
        .with_context(|| format!("{}: reading {}", ds.name, ds.labels))?;
    let labels =
        graphne::parse_label_file(&labels_text, &g).with_context(|| format!("{}: labels", ds.name))?;
    let (g, labels, _) = graphne::largest_connected_component(&g, Some(&labels))
        .with_context(|| format!("{}: lcc", ds.name))?;
    Ok((g, labels.expect("labels were provided")))
}

fn run_method(
    g: &Graph,
    method: Method,
    init: &Embedding,
    seed: u64,
    cfg: &Config,
) -> Result<Embedding> {
    match method {
        Method::Tsne => {
            let p = degree_normalized_affinity(g)?;
            let mut params = TsneParams::default();
            params.seed = seed;
            if let Some(v) = cfg.get_parsed("tsne.iters")? {
                params.total_iters = v;
            }
            if let Some(v) = cfg.get_parsed("tsne.exaggeration-iters")? {
                params.exaggeration_iters = v;
            }
            if let Some(v) = cfg.get_parsed("tsne.exaggeration")? {
                params.exaggeration_factor = v;
            }
            if let Some(v) = cfg.get_parsed("tsne.learning-rate")? {
                params.learning_rate = Some(v);
            }
            if let Some(v) = cfg.get_parsed("tsne.theta")? {
                params.bh_theta = v;
            }
            Ok(run_tsne(&p, init, &params)?)
        }
        Method::Cne | Method::CneTau => {
            let params = CneParams {
                d: init.d(),
                learnable_tau: method == Method::CneTau,
                tau: cfg.get_parsed("cne.tau")?.unwrap_or(0.05),
                epochs: cfg.get_parsed("cne.epochs")?.unwrap_or(100),
                batch_pairs: cfg.get_parsed("cne.batch-size")?,
                adam_lr: cfg.get_parsed("cne.adam-lr")?.unwrap_or(1e-3),
                seed,
                ..CneParams::default()
            };
            let (emb, _) = run_cne(g, &params, init)?;
            Ok(emb)
        }
    }
}

fn mean_std(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn render_table(rows: &[[String; 6]]) -> String {
    let header = ["dataset", "method", "d", "recall", "knn_acc", "linear_acc"];
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let fmt_row = |cells: &[String]| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = fmt_row(&header.map(String::from));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row.as_slice()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_of_three_runs() {
        let (m, s) = mean_std(&[0.1, 0.2, 0.3]);
        assert!((m - 0.2).abs() < 1e-15);
        assert!((s - 0.1).abs() < 1e-12);
        let (m, s) = mean_std(&[0.5]);
        assert_eq!((m, s), (0.5, 0.0));
    }

    #[test]
    fn table_is_aligned() {
        let rows = vec![
            [
                "toy".into(),
                "tsne".into(),
                "2".into(),
                "50.0 \u{00b1} 0.0".into(),
                "100.0 \u{00b1} 0.0".into(),
                "33.3 \u{00b1} 1.2".into(),
            ],
        ];
        let t = render_table(&rows);
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[0].starts_with("dataset"));
        assert!(lines[2].contains("tsne"));
    }
}
