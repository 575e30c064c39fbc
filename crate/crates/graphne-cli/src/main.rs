mod bench;
mod config;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use graphne::{
    degree_normalized_affinity, evaluate, global_normalized_affinity, knn_graph,
    laplacian_eigenmaps, largest_connected_component, parse_edge_list, parse_label_file,
    random_init, run_cne, run_tsne_logged, sbm_generate, CneKernel, CneParams, Embedding, Graph,
    LabelSet, TsneParams, VectorSet,
};

#[derive(Parser)]
#[command(
    name = "graphne",
    version,
    about = "Graph layouts (graph t-SNE) and node embeddings (graph CNE)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every stochastic stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Deterministic mode: pins the thread count to 1 unless --threads is
    /// given. All reductions use a fixed order either way.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelArg {
    Cosine,
    Cauchy,
}

impl From<KernelArg> for CneKernel {
    fn from(k: KernelArg) -> CneKernel {
        match k {
            KernelArg::Cosine => CneKernel::CosineTemperature,
            KernelArg::Cauchy => CneKernel::Cauchy,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a 2D layout: LCC, degree-normalized affinities, Laplacian
    /// Eigenmaps init, then t-SNE gradient descent.
    Layout {
        /// Edge-list file: one "u v" pair per line, '#' comments.
        edges: PathBuf,
        /// Output embedding file.
        #[arg(short, long)]
        out: PathBuf,
        /// Label file; only validated against the graph here.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Use whole-matrix normalization instead of per-node (ablation).
        #[arg(long)]
        global_norm: bool,
        /// Use random instead of Laplacian Eigenmaps initialization.
        #[arg(long)]
        random_init: bool,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        exaggeration_iters: Option<usize>,
        #[arg(long)]
        exaggeration: Option<f64>,
        /// Learning rate (default: number of nodes).
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Barnes-Hut opening angle.
        #[arg(long)]
        theta: Option<f64>,
        /// Largest node count using the exact O(n^2) gradient.
        #[arg(long)]
        exact_threshold: Option<usize>,
        /// Write "iter,loss" CSV sampled every 50 iterations.
        #[arg(long)]
        loss_log: Option<PathBuf>,
        /// Dump the affinity entries as "i j p_ij" text.
        #[arg(long)]
        affinity_dump: Option<PathBuf>,
    },
    /// Optimize node embeddings with InfoNCE (d = 128 cosine by default).
    Embed {
        edges: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = KernelArg::Cosine)]
        kernel: KernelArg,
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
        /// Optimize the temperature jointly (log-space, 0.5 start).
        #[arg(long)]
        learn_tau: bool,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        /// Pairs per batch (default: min(8192, n/10)).
        #[arg(long)]
        batch_size: Option<usize>,
        /// Negatives per pair (default: 2b-2, full-batch repulsion).
        #[arg(long)]
        negatives: Option<usize>,
        #[arg(long, default_value_t = 1e-3)]
        adam_lr: f64,
        #[arg(long)]
        random_init: bool,
        /// Write "epoch,mean_loss,tau" CSV.
        #[arg(long)]
        train_log: Option<PathBuf>,
    },
    /// Evaluate an embedding: neighbor recall, kNN and linear accuracy.
    Eval {
        edges: PathBuf,
        embedding: PathBuf,
        labels: PathBuf,
        /// Dataset name for the CSV row (default: edges file stem).
        #[arg(long)]
        dataset: Option<String>,
        /// Method name for the CSV row (default: embedding file stem).
        #[arg(long)]
        method: Option<String>,
        /// Append the row to this CSV file as well as stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate a stochastic block model graph.
    Sbm {
        /// Block sizes: "10x8000" (count x size) or "3,3,4".
        #[arg(long)]
        blocks: String,
        #[arg(long)]
        p_in: f64,
        #[arg(long)]
        p_out: f64,
        /// Output edge-list file.
        #[arg(short, long)]
        out: PathBuf,
        /// Output label file (block index per node).
        #[arg(long)]
        labels_out: Option<PathBuf>,
    },
    /// Build the exact Euclidean kNN graph of a vector file.
    KnnGraph {
        /// Vectors in the embedding file format ("n d metric" header).
        vectors: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Render a 2D embedding as an SVG scatter plot.
    Plot {
        embedding: PathBuf,
        /// Label file; node ids are embedding row indices here.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run a benchmark config: embed + eval per (dataset, method, seed).
    Bench {
        config: PathBuf,
        /// Output prefix for <prefix>.csv and <prefix>.txt.
        #[arg(short, long)]
        out: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match (cli.threads, cli.deterministic) {
        (Some(t), _) => Some(t),
        (None, true) => Some(1),
        (None, false) => None,
    };
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: could not configure {t} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Parse + LCC pipeline shared by layout, embed, eval, and bench.
fn load_graph(edges: &Path, labels: Option<&Path>) -> Result<(Graph, Option<LabelSet>)> {
    let g = parse_edge_list(&read_text(edges)?).context("parse")?;
    let labels = match labels {
        Some(p) => Some(parse_label_file(&read_text(p)?, &g).context("labels")?),
        None => None,
    };
    let (g, labels, _) = largest_connected_component(&g, labels.as_ref()).context("lcc")?;
    Ok((g, labels))
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    let quiet = cli.quiet;
    match cli.command {
        Command::Layout {
            edges,
            out,
            labels,
            global_norm,
            random_init: use_random,
            iters,
            exaggeration_iters,
            exaggeration,
            learning_rate,
            theta,
            exact_threshold,
            loss_log,
            affinity_dump,
        } => {
            let (g, _) = load_graph(&edges, labels.as_deref())?;
            if !quiet {
                eprintln!("graph: {} nodes, {} edges (largest component)", g.n(), g.num_edges());
            }
            let p = if global_norm {
                global_normalized_affinity(&g).context("affinity")?
            } else {
                degree_normalized_affinity(&g).context("affinity")?
            };
            if let Some(path) = affinity_dump {
                std::fs::write(&path, p.to_dump())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let init = if use_random {
                random_init(g.n(), 2, seed).context("init")?
            } else {
                laplacian_eigenmaps(&g, 2, seed).context("init")?
            };
            let mut params = TsneParams::default();
            params.seed = seed;
            if let Some(v) = iters {
                params.total_iters = v;
            }
            if let Some(v) = exaggeration_iters {
                params.exaggeration_iters = v;
            }
            if let Some(v) = exaggeration {
                params.exaggeration_factor = v;
            }
            params.learning_rate = learning_rate;
            if let Some(v) = theta {
                params.bh_theta = v;
            }
            if let Some(v) = exact_threshold {
                params.exact_threshold = v;
            }
            let mut log_rows = String::from("iter,loss\n");
            let log_every = if loss_log.is_some() { 50 } else { 0 };
            let emb = run_tsne_logged(&p, &init, &params, log_every, |it, loss| {
                log_rows.push_str(&format!("{it},{loss:.10}\n"));
            })
            .context("tsne")?;
            if let Some(path) = loss_log {
                std::fs::write(&path, log_rows)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            emb.write_file(&out).context("output")?;
            if !quiet {
                eprintln!("wrote {}", out.display());
            }
            Ok(())
        }
        Command::Embed {
            edges,
            out,
            dim,
            kernel,
            tau,
            learn_tau,
            epochs,
            batch_size,
            negatives,
            adam_lr,
            random_init: use_random,
            train_log,
        } => {
            let (g, _) = load_graph(&edges, None)?;
            if !quiet {
                eprintln!("graph: {} nodes, {} edges (largest component)", g.n(), g.num_edges());
            }
            let init = if use_random {
                random_init(g.n(), dim, seed).context("init")?
            } else {
                laplacian_eigenmaps(&g, dim, seed).context("init")?
            };
            let params = CneParams {
                d: dim,
                kernel: kernel.into(),
                tau,
                learnable_tau: learn_tau,
                epochs,
                batch_pairs: batch_size,
                negatives,
                adam_lr,
                seed,
                ..CneParams::default()
            };
            let (emb, stats) = run_cne(&g, &params, &init).context("cne")?;
            if let Some(path) = train_log {
                let mut rows = String::from("epoch,mean_loss,tau\n");
                for s in &stats {
                    rows.push_str(&format!("{},{:.10},{:.10}\n", s.epoch, s.mean_loss, s.tau));
                }
                std::fs::write(&path, rows)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            emb.write_file(&out).context("output")?;
            if !quiet {
                eprintln!("wrote {}", out.display());
            }
            Ok(())
        }
        Command::Eval {
            edges,
            embedding,
            labels,
            dataset,
            method,
            out,
        } => {
            let (g, label_set) = load_graph(&edges, Some(&labels))?;
            let label_set = label_set.expect("labels loaded");
            let emb = Embedding::read_file(&embedding).context("embedding")?;
            if emb.n() != g.n() {
                bail!(
                    "embedding has {} rows but the largest component has {} nodes",
                    emb.n(),
                    g.n()
                );
            }
            let report = evaluate(&g, &emb, &label_set, seed).context("eval")?;
            let dataset = dataset.unwrap_or_else(|| file_stem(&edges));
            let method = method.unwrap_or_else(|| file_stem(&embedding));
            let row = report.csv_row(&dataset, &method, emb.d());
            println!("{row}");
            if let Some(path) = out {
                use std::io::Write as _;
                let mut f = std::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&path)
                    .with_context(|| format!("opening {}", path.display()))?;
                writeln!(f, "{row}")?;
            }
            Ok(())
        }
        Command::Sbm {
            blocks,
            p_in,
            p_out,
            out,
            labels_out,
        } => {
            let sizes = parse_blocks(&blocks)?;
            let (g, labels) = sbm_generate(&sizes, p_in, p_out, seed).context("sbm")?;
            std::fs::write(&out, g.to_edge_list())
                .with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = labels_out {
                let mut text = String::new();
                for (node, &label) in labels.labels().iter().enumerate() {
                    text.push_str(&format!("{node} {label}\n"));
                }
                std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if !quiet {
                eprintln!("wrote {} ({} nodes, {} edges)", out.display(), g.n(), g.num_edges());
            }
            Ok(())
        }
        Command::KnnGraph { vectors, k, out } => {
            let emb = Embedding::read_file(&vectors).context("vectors")?;
            let rows: Vec<Vec<f64>> = (0..emb.n()).map(|i| emb.row(i).to_vec()).collect();
            let vs = VectorSet::from_rows(&rows).context("vectors")?;
            let g = knn_graph(&vs, k).context("knn")?;
            std::fs::write(&out, g.to_edge_list())
                .with_context(|| format!("writing {}", out.display()))?;
            if !quiet {
                eprintln!("wrote {} ({} edges)", out.display(), g.num_edges());
            }
            Ok(())
        }
        Command::Plot {
            embedding,
            labels,
            out,
        } => {
            let emb = Embedding::read_file(&embedding).context("embedding")?;
            if emb.d() != 2 {
                bail!("plot requires a 2D embedding, got d = {}", emb.d());
            }
            let label_rows = match labels {
                Some(path) => Some(parse_row_labels(&read_text(&path)?, emb.n()).context("labels")?),
                None => None,
            };
            let doc = svg::render(&emb, label_rows.as_deref());
            std::fs::write(&out, doc).with_context(|| format!("writing {}", out.display()))?;
            if !quiet {
                eprintln!("wrote {}", out.display());
            }
            Ok(())
        }
        Command::Bench { config, out } => bench::run(&config, out.as_deref(), seed, quiet),
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unknown".into())
}

/// "NxM" (N blocks of M nodes) or a comma-separated size list.
fn parse_blocks(spec: &str) -> Result<Vec<usize>> {
    if let Some((count, size)) = spec.split_once(['x', 'X']) {
        let count: usize = count.trim().parse().context("block count")?;
        let size: usize = size.trim().parse().context("block size")?;
        return Ok(vec![size; count]);
    }
    spec.split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("block size {t:?}")))
        .collect()
}

/// Label file keyed by embedding row index; missing rows stay unlabeled.
fn parse_row_labels(text: &str, n: usize) -> Result<Vec<Option<usize>>> {
    let mut classes: Vec<String> = Vec::new();
    let mut out = vec![None; n];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (idx, label) = line
            .split_once(char::is_whitespace)
            .with_context(|| format!("label line {}: expected \"row label\"", lineno + 1))?;
        let idx: usize = idx
            .parse()
            .with_context(|| format!("label line {}: bad row index", lineno + 1))?;
        let label = label.trim();
        let class = match classes.iter().position(|c| c == label) {
            Some(c) => c,
            None => {
                classes.push(label.to_string());
                classes.len() - 1
            }
        };
        if idx < n {
            out[idx] = Some(class);
        }
    }
    Ok(out)
}
