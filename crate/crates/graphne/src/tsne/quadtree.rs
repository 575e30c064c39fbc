//! Quadtree for Barnes-Hut approximation of the t-SNE repulsive field.

const NONE: u32 = u32::MAX;
const MAX_DEPTH: usize = 64;

struct Node {
    center: [f64; 2],
    half: f64,
    com: [f64; 2],
    mass: f64,
    children: [u32; 4],
    /// Exact position held by a leaf; internal nodes keep `None`.
    point: Option<[f64; 2]>,
}

impl Node {
    fn new(center: [f64; 2], half: f64) -> Node {
        Node {
            center,
            half,
            com: [0.0, 0.0],
            mass: 0.0,
            children: [NONE; 4],
            point: None,
        }
    }

    fn is_leaf(&self) -> bool {
        self.children == [NONE; 4]
    }
}

pub struct QuadTree {
    nodes: Vec<Node>,
}

impl QuadTree {
    /// Builds the tree by sequential insertion; points at identical
    /// positions (or beyond the depth limit) share one leaf.
    pub fn build(y: &[f64], n: usize) -> QuadTree {
        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            min_x = min_x.min(y[2 * i]);
            max_x = max_x.max(y[2 * i]);
            min_y = min_y.min(y[2 * i + 1]);
            max_y = max_y.max(y[2 * i + 1]);
        }
        let center = [(min_x + max_x) / 2.0, (min_y + max_y) / 2.0];
        let half = 0.5 * ((max_x - min_x).max(max_y - min_y)).max(f64::MIN_POSITIVE) * (1.0 + 1e-9);
        let mut tree = QuadTree {
            nodes: vec![Node::new(center, half)],
        };
        for i in 0..n {
            tree.insert(0, [y[2 * i], y[2 * i + 1]], 0);
        }
        tree
    }

    fn insert(&mut self, idx: usize, pos: [f64; 2], depth: usize) {
        // center of mass as a running mean over inserted points
        let node = &mut self.nodes[idx];
        node.mass += 1.0;
        node.com[0] += (pos[0] - node.com[0]) / node.mass;
        node.com[1] += (pos[1] - node.com[1]) / node.mass;

        if node.is_leaf() {
            match node.point {
                None => {
                    node.point = Some(pos);
                    return;
                }
                Some(existing) => {
                    if existing == pos || depth >= MAX_DEPTH {
                        return; // coincident bucket, mass already counted
                    }
                    // push the resident point down, then fall through
                    node.point = None;
                    let count = node.mass - 1.0;
                    let child = self.descend(idx, existing);
                    let cnode = &mut self.nodes[child];
                    cnode.mass = count;
                    cnode.com = existing;
                    cnode.point = Some(existing);
                }
            }
        }
        let child = self.descend(idx, pos);
        self.insert(child, pos, depth + 1);
    }

    /// Child quadrant of `idx` containing `pos`, created on demand.
    fn descend(&mut self, idx: usize, pos: [f64; 2]) -> usize {
        let (center, half) = {
            let node = &self.nodes[idx];
            (node.center, node.half)
        };
        let qx = (pos[0] >= center[0]) as usize;
        let qy = (pos[1] >= center[1]) as usize;
        let quadrant = qy * 2 + qx;
        if self.nodes[idx].children[quadrant] == NONE {
            let h = half / 2.0;
            let ccenter = [
                center[0] + if qx == 1 { h } else { -h },
                center[1] + if qy == 1 { h } else { -h },
            ];
            self.nodes.push(Node::new(ccenter, h));
            let new_idx = (self.nodes.len() - 1) as u32;
            self.nodes[idx].children[quadrant] = new_idx;
        }
        self.nodes[idx].children[quadrant] as usize
    }

    /// Accumulates the repulsive numerator `sum mass * w^2 * (q - com)` and
    /// the kernel sum `sum mass * w` for one query point, over all points
    /// including the query itself (callers subtract the self term w = 1).
    ///
    /// A cell is summarized when `side / dist < theta`, otherwise opened.
    pub fn accumulate(&self, q: [f64; 2], theta: f64) -> ([f64; 2], f64) {
        let mut force = [0.0, 0.0];
        let mut z = 0.0;
        let theta_sq = theta * theta;
        self.walk(0, q, theta_sq, &mut force, &mut z);
        (force, z)
    }

    fn walk(&self, idx: usize, q: [f64; 2], theta_sq: f64, force: &mut [f64; 2], z: &mut f64) {
        let node = &self.nodes[idx];
        let dx = q[0] - node.com[0];
        let dy = q[1] - node.com[1];
        let dist_sq = dx * dx + dy * dy;
        let side = 2.0 * node.half;
        if node.is_leaf() || side * side < theta_sq * dist_sq {
            let w = 1.0 / (1.0 + dist_sq);
            let ww = node.mass * w * w;
            *z += node.mass * w;
            force[0] += ww * dx;
            force[1] += ww * dy;
            return;
        }
        for &c in &node.children {
            if c != NONE {
                self.walk(c as usize, q, theta_sq, force, z);
            }
        }
    }
}
