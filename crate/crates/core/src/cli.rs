//! Command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::eval::{cross_validate, KernelMatrix};
use crate::graph::{read_dataset, validate_dataset, write_dataset, GraphDataset};
use crate::stack::{fingerprints_to_csv, inspect_fingerprints, read_stack, save_stack, train_stack};
use crate::synth::{gen_cycles, gen_random_graphs, gen_two_hop, CycleSpec, RandomGraphSpec};
use crate::{eval, seed, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "cgmm", version, about = "Contextual graph Markov model: graph encoding and classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a stack on a labeled dataset and save it.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write fingerprints of a dataset as CSV.
    Fingerprint {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the precomputed kernel matrix.
        #[arg(long)]
        kernel_out: Option<PathBuf>,
    },
    /// Cross-validate the whole pipeline and print `mean (std)` accuracy.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the `cv` config key.
        #[arg(long, value_parser = ["tenfold", "nested"])]
        scheme: Option<String>,
    },
    /// Write per-class mean fingerprints as CSV.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic dataset.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Check a dataset file and report the first violation.
    Validate {
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SynthOut {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SynthKind {
    /// Star-of-stars graphs separable only through 2-hop context.
    TwoHop {
        #[arg(long, default_value_t = 50)]
        n_per_class: usize,
        #[command(flatten)]
        out: SynthOut,
    },
    /// Directed random graphs with uniform labels.
    Random {
        #[arg(long, default_value_t = 100)]
        n_graphs: usize,
        #[arg(long, default_value_t = 5)]
        min_vertices: usize,
        #[arg(long, default_value_t = 20)]
        max_vertices: usize,
        #[arg(long, default_value_t = 0.1)]
        edge_prob: f64,
        #[arg(long, default_value_t = 3)]
        labels: usize,
        #[arg(long, default_value_t = 1)]
        arc_labels: usize,
        #[command(flatten)]
        out: SynthOut,
    },
    /// Single-cycle graphs.
    Cycle {
        #[arg(long, default_value_t = 20)]
        n_graphs: usize,
        #[arg(long, default_value_t = 3)]
        min_length: usize,
        #[arg(long, default_value_t = 50)]
        max_length: usize,
        #[arg(long, default_value_t = 3)]
        labels: usize,
        #[arg(long)]
        undirected: bool,
        #[command(flatten)]
        out: SynthOut,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let config = match path {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    eprintln!("# resolved config");
    for line in config.to_text().lines() {
        eprintln!("#   {line}");
    }
    Ok(config)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(job)
}

fn labeled(path: &Path) -> Result<GraphDataset> {
    let ds = read_dataset(path)?;
    ds.check()?;
    Ok(ds)
}

pub fn cmd_train(data: &Path, config: Option<&Path>, out: &Path) -> Result<()> {
    let run = load_config(config)?;
    let ds = labeled(data)?;
    let cfg = run.primary();
    let targets = ds
        .targets()
        .ok_or_else(|| Error::InvalidData(format!("{}: every graph needs a target", data.display())))?;
    let split = eval::stratified_holdout(&targets, cfg.validation_fraction, seed::derive_seed(cfg.seed, "holdout", &[]));
    let model = with_threads(run.threads, || train_stack(&ds, &split, &cfg))?;
    for d in &model.log.depths {
        eprintln!(
            "depth {}: validation accuracy {:.4} (pool member {}){}",
            d.depth,
            d.accuracy,
            d.winner,
            if d.kept { "" } else { ", discarded" }
        );
    }
    eprintln!("stop: {}; kept {} layer(s)", model.log.stop, model.depth());
    let mut w = create(out)?;
    save_stack(&model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_fingerprint(model: &Path, data: &Path, config: Option<&Path>, out: &Path, kernel_out: Option<&Path>) -> Result<()> {
    let run = load_config(config)?;
    let stack = read_stack(model)?;
    let ds = read_dataset(data)?;
    let mode = run.primary().fingerprint;
    let fps = with_threads(run.threads, || stack.fingerprints(&ds, mode.ngram))?;
    write_text(out, &fingerprints_to_csv(&fps, mode.layers))?;
    if let Some(path) = kernel_out {
        let ids = fps.iter().map(|f| f.graph_id.clone()).collect();
        let vectors: Vec<Vec<f64>> = fps.iter().map(|f| f.features(&mode)).collect();
        let matrix = with_threads(run.threads, || KernelMatrix::compute(run.kernel_kind(), ids, &vectors))?;
        write_text(path, &matrix.to_text())?;
    }
    Ok(())
}

pub fn cmd_eval(data: &Path, config: Option<&Path>, scheme: Option<&str>) -> Result<String> {
    let mut run = load_config(config)?;
    match scheme {
        Some("nested") => run.cv = eval::CvScheme::Nested,
        Some(_) => run.cv = eval::CvScheme::TenFold,
        None => {}
    }
    let ds = labeled(data)?;
    let report = with_threads(run.threads, || cross_validate(&ds, &run.grid(), run.cv, run.seed))?;
    let depths: Vec<String> = report.depths().iter().map(usize::to_string).collect();
    let configs: Vec<String> = report.results.iter().map(|r| r.config.to_string()).collect();
    eprintln!("fold depths: {}", depths.join(" "));
    eprintln!("fold grid points: {}", configs.join(" "));
    Ok(report.to_string())
}

pub fn cmd_inspect(model: &Path, data: &Path, config: Option<&Path>, out: &Path) -> Result<()> {
    let run = load_config(config)?;
    let stack = read_stack(model)?;
    let ds = read_dataset(data)?;
    let csv = with_threads(run.threads, || inspect_fingerprints(&stack, &ds, run.primary().fingerprint.ngram))?;
    write_text(out, &csv)
}

pub fn cmd_synth(kind: &SynthKind) -> Result<()> {
    let (ds, out) = match kind {
        SynthKind::TwoHop { n_per_class, out } => {
            if *n_per_class < 1 {
                return Err(Error::Config("n-per-class must be at least 1".into()));
            }
            (gen_two_hop(*n_per_class, out.seed), out)
        }
        SynthKind::Random {
            n_graphs,
            min_vertices,
            max_vertices,
            edge_prob,
            labels,
            arc_labels,
            out,
        } => {
            if *min_vertices < 1 || min_vertices > max_vertices || !(0.0..=1.0).contains(edge_prob) || *labels < 1 || *arc_labels < 1 {
                return Err(Error::Config("invalid random graph parameters".into()));
            }
            let spec = RandomGraphSpec {
                n_graphs: *n_graphs,
                min_vertices: *min_vertices,
                max_vertices: *max_vertices,
                edge_prob: *edge_prob,
                n_labels: *labels,
                n_arc_labels: *arc_labels,
                seed: out.seed,
            };
            (gen_random_graphs(&spec), out)
        }
        SynthKind::Cycle {
            n_graphs,
            min_length,
            max_length,
            labels,
            undirected,
            out,
        } => {
            if *min_length < 3 || min_length > max_length || *labels < 1 {
                return Err(Error::Config("cycles need 3 <= min-length <= max-length".into()));
            }
            let spec = CycleSpec {
                n_graphs: *n_graphs,
                min_length: *min_length,
                max_length: *max_length,
                n_labels: *labels,
                undirected: *undirected,
                seed: out.seed,
            };
            (gen_cycles(&spec), out)
        }
    };
    let mut w = create(&out.out)?;
    write_dataset(&ds, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Returns the number of violations found.
pub fn cmd_validate(data: &Path) -> Result<usize> {
    let ds = read_dataset(data)?;
    let violations = validate_dataset(&ds);
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        println!("ok: {} graphs, {} vertices", ds.len(), ds.n_vertices());
    }
    Ok(violations.len())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Train { data, config, out } => cmd_train(data, config.as_deref(), out),
        Command::Fingerprint {
            model,
            data,
            config,
            out,
            kernel_out,
        } => cmd_fingerprint(model, data, config.as_deref(), out, kernel_out.as_deref()),
        Command::Eval { data, config, scheme } => cmd_eval(data, config.as_deref(), scheme.as_deref()).map(|s| println!("{s}")),
        Command::Inspect {
            model,
            data,
            config,
            out,
        } => cmd_inspect(model, data, config.as_deref(), out),
        Command::Synth { kind } => cmd_synth(kind),
        Command::Validate { data } => match cmd_validate(data) {
            Ok(0) => Ok(()),
            Ok(n) => Err(Error::InvalidData(format!("{n} violation(s)"))),
            Err(e) => Err(e),
        },
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
