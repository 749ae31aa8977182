//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs without the libtest harness so the report is always printed.
//! Set `CGMM_MUTAG_PATH` to a MUTAG file in the dataset text format to run
//! the optional real-data check.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cgmm::eval::{cross_validate, stratified_holdout, CvScheme};
use cgmm::graph::{read_dataset, GraphDataset, NeighborIndex};
use cgmm::layer::{
    expected_counts, infer_states, neighbor_frequency, train_layer_observed, EmConfig, LayerParams, LayerShape,
    NeighborFrequency, StateAssignments,
};
use cgmm::stack::{train_stack, NGram, PredecessorMode, StackConfig};
use cgmm::synth::{gen_cycles, gen_random_graphs, gen_two_hop, CycleSpec, RandomGraphSpec};
use common::{gradient_check, oracle_discrepancy, permutation, random_problem, ProblemSize, TINY};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn single_thread<T: Send>(job: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(job)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let (mut resp, mut ll, mut mismatches) = (0.0f64, 0.0f64, 0);
    for seed in 0..200 {
        // each random graph is checked as a base and as a deep layer
        for deep in [false, true] {
            let (r, l, m) = oracle_discrepancy(&random_problem(seed, &TINY, deep));
            resp = resp.max(r);
            ll = ll.max(l);
            mismatches += m;
        }
    }
    let t = start.elapsed();
    ensure(
        resp <= 1e-12 && ll <= 1e-12 && mismatches == 0 && t < Duration::from_secs(10),
        format!("max responsibility error {resp:.1e}, max relative log-likelihood error {ll:.1e}, argmax mismatches {mismatches}, {t:.2?}"),
    )
}

/// Worst per-step decrease and worst normalization error over 50 EM runs.
fn em_runs() -> (f64, f64, Duration) {
    let start = Instant::now();
    let size = ProblemSize {
        n_graphs: 8,
        max_vertices: 10,
        max_states: 5,
        max_labels: 4,
        max_arc_labels: 3,
        edge_prob: 0.25,
    };
    let (mut drop, mut norm) = (0.0f64, 0.0f64);
    for run in 0..50u64 {
        let p = random_problem(1000 + run, &size, run % 2 == 1);
        let cfg = EmConfig {
            n_states: p.params.n_states(),
            max_iters: 30,
            tol: 0.0,
            smoothing: 0.0,
        };
        let trained = train_layer_observed(&p.dataset, &p.freq, &cfg, run, |params, _| {
            norm = norm.max(params.max_normalization_error());
        })
        .unwrap();
        for w in trained.trace.windows(2) {
            drop = drop.max(w[0] - w[1]);
        }
    }
    (drop, norm, start.elapsed())
}

fn em_monotonicity() -> Outcome {
    let (drop, _, t) = em_runs();
    ensure(
        drop <= 1e-9 && t < Duration::from_secs(60),
        format!("largest log-likelihood decrease {drop:.1e} over 50 runs, {t:.2?}"),
    )
}

fn normalization() -> Outcome {
    let (_, norm, _) = em_runs();
    ensure(norm <= 1e-12, format!("largest |sum - 1| after init and every M-step {norm:.1e}"))
}

fn two_hop_config(seed: u64) -> StackConfig {
    StackConfig {
        em: EmConfig {
            n_states: 20,
            ..EmConfig::default()
        },
        max_layers: 5,
        pool_size: 10,
        patience: 3,
        predecessors: PredecessorMode::All,
        seed,
        ..StackConfig::default()
    }
}

fn context_propagation() -> Outcome {
    let start = Instant::now();
    let ds = gen_two_hop(50, 1);
    let split = stratified_holdout(&ds.targets().unwrap(), 0.2, 2);
    let model = train_stack(&ds, &split, &two_hop_config(1)).unwrap();
    let base_equal = ds.graphs.chunks(2).all(|pair| {
        let a = model.fingerprint(&pair[0], NGram::Unigram).unwrap();
        let b = model.fingerprint(&pair[1], NGram::Unigram).unwrap();
        a.blocks[0] == b.blocks[0]
    });
    let report = cross_validate(&ds, &[two_hop_config(0)], CvScheme::TenFold, 1).unwrap();
    let depths = report.depths();
    let t = start.elapsed();
    ensure(
        base_equal && report.mean == 1.0 && depths.iter().all(|&d| d >= 2) && t < Duration::from_secs(120),
        format!("layer-1 pairs equal: {base_equal}, 10-fold accuracy {report}, fold depths {depths:?}, {t:.2?}"),
    )
}

fn isomorphism_invariance() -> Outcome {
    let ds = gen_random_graphs(&RandomGraphSpec {
        n_graphs: 100,
        min_vertices: 1,
        max_vertices: 15,
        edge_prob: 0.2,
        n_labels: 4,
        n_arc_labels: 2,
        seed: 3,
    });
    let cfg = StackConfig {
        em: EmConfig {
            n_states: 5,
            max_iters: 20,
            ..EmConfig::default()
        },
        max_layers: 3,
        pool_size: 2,
        patience: 3,
        ..StackConfig::default()
    };
    let split = stratified_holdout(&ds.targets().unwrap(), 0.2, 0);
    let model = train_stack(&ds, &split, &cfg).unwrap();
    let mut differing = 0;
    for (i, g) in ds.graphs.iter().enumerate() {
        let p = g.permuted(&permutation(g.n_vertices(), 77 + i as u64));
        for ngram in [NGram::Unigram, NGram::UniBigram] {
            if model.fingerprint(g, ngram).unwrap().blocks != model.fingerprint(&p, ngram).unwrap().blocks {
                differing += 1;
            }
        }
    }
    ensure(differing == 0, format!("{differing} of 200 fingerprints changed under permutation, stack depth {}", model.depth()))
}

fn cyclic_handling() -> Outcome {
    let mut worst_iters = 0;
    let mut bad = Vec::new();
    for undirected in [false, true] {
        let ds = gen_cycles(&CycleSpec {
            n_graphs: 48,
            min_length: 3,
            max_length: 50,
            n_labels: 3,
            undirected,
            seed: 11,
        });
        let cfg = EmConfig {
            n_states: 5,
            max_iters: 25,
            ..EmConfig::default()
        };
        let mut sa = StateAssignments::new(ds.len());
        let idx: Vec<_> = ds.graphs.iter().map(|g| NeighborIndex::build(g, 1)).collect();
        for depth in 0..3 {
            let freq = if depth == 0 {
                NeighborFrequency::base(ds.graphs.iter().map(|g| g.n_vertices()), 1)
            } else {
                neighbor_frequency(&idx, &sa, &[depth - 1]).unwrap()
            };
            let mut passes = 0;
            let trained = train_layer_observed(&ds, &freq, &cfg, depth as u64, |_, ll| {
                passes += 1;
                if !ll.is_finite() {
                    bad.push(format!("non-finite log-likelihood at depth {depth}"));
                }
            })
            .unwrap();
            if passes != trained.iterations() + 1 {
                bad.push(format!("{passes} passes for {} iterations", trained.iterations()));
            }
            worst_iters = worst_iters.max(trained.iterations());
            sa.push_layer(cfg.n_states, infer_states(&trained.params, &ds, &freq).unwrap()).unwrap();
        }
    }
    ensure(
        bad.is_empty(),
        format!("directed and undirected cycles of length 3-50, 3 layers each, at most {worst_iters} iterations; problems: {bad:?}"),
    )
}

/// Deep-layer E-step problem over roughly `n_vertices` vertices.
fn scaling_problem(n_vertices: usize) -> (GraphDataset, NeighborFrequency, LayerParams) {
    let ds = gen_random_graphs(&RandomGraphSpec {
        n_graphs: n_vertices / 100,
        min_vertices: 100,
        max_vertices: 100,
        edge_prob: 0.04,
        n_labels: 5,
        n_arc_labels: 3,
        seed: 17,
    });
    let c = 20;
    let base = LayerParams::random(LayerShape::base(c, 5, 3), 1).unwrap();
    let f0 = NeighborFrequency::base(ds.graphs.iter().map(|g| g.n_vertices()), 3);
    let mut sa = StateAssignments::new(ds.len());
    sa.push_layer(c, infer_states(&base, &ds, &f0).unwrap()).unwrap();
    let idx: Vec<_> = ds.graphs.iter().map(|g| NeighborIndex::build(g, 3)).collect();
    let freq = neighbor_frequency(&idx, &sa, &[0]).unwrap();
    let params = LayerParams::random(LayerShape::deep(c, 5, 3, sa.predecessors(&[0]).unwrap()), 2).unwrap();
    (ds, freq, params)
}

fn e_step_once(problem: &(GraphDataset, NeighborFrequency, LayerParams)) -> Duration {
    let (ds, freq, params) = problem;
    let t = Instant::now();
    // the fused pass EM runs; the materializing `e_step` adds allocation
    // cost that is not part of the model's complexity
    std::hint::black_box(expected_counts(params, ds, freq).unwrap());
    t.elapsed()
}

fn scaling() -> Outcome {
    let small = scaling_problem(10_000);
    let large = scaling_problem(20_000);
    let (v1, v2) = (small.0.n_vertices(), large.0.n_vertices());
    // alternate the two sizes so drift in machine load hits both alike
    let (t1, t2) = single_thread(|| {
        let (mut t1, mut t2) = (Duration::MAX, Duration::MAX);
        for _ in 0..15 {
            t1 = t1.min(e_step_once(&small));
            t2 = t2.min(e_step_once(&large));
        }
        (t1, t2)
    });
    let ratio = t2.as_secs_f64() / t1.as_secs_f64();
    let throughput = v2 as f64 / (t2.as_secs_f64() * 1e3);
    ensure(
        (1.5..=2.5).contains(&ratio),
        format!("{v1} vertices {t1:.2?}, {v2} vertices {t2:.2?}, ratio {ratio:.2}; single-thread throughput {throughput:.0} vertices/ms"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let data = dir.path().join("data.txt");
    let mut f = std::fs::File::create(&data).unwrap();
    cgmm::graph::write_dataset(&gen_two_hop(20, 5), &mut f).unwrap();
    let mut files = Vec::new();
    for (run, threads) in [1, 4, 1, 4].into_iter().enumerate() {
        let cfg = dir.path().join(format!("c{run}.cfg"));
        std::fs::write(&cfg, format!("states = 8\npool_size = 4\nmax_layers = 3\nseed = 42\nthreads = {threads}\n")).unwrap();
        let out = dir.path().join(format!("m{run}.txt"));
        cgmm::cli::cmd_train(&data, Some(&cfg), &out).unwrap();
        files.push(std::fs::read(&out).unwrap());
    }
    let same = files.iter().all(|f| f == &files[0]);
    ensure(same, format!("4 runs at 1 and 4 threads, model files identical: {same} ({} bytes)", files[0].len()))
}

fn gradient() -> Outcome {
    let worst = (0..20).map(gradient_check).fold(0.0, f64::max);
    ensure(worst < 1e-6, format!("worst relative error {worst:.1e} over 20 instances"))
}

fn mutag() -> Outcome {
    let Ok(path) = std::env::var("CGMM_MUTAG_PATH") else {
        return Outcome::Skip("CGMM_MUTAG_PATH is not set".into());
    };
    let start = Instant::now();
    let ds = read_dataset(&path).unwrap();
    let run = cgmm::config::RunConfig::default();
    let report = cross_validate(&ds, &run.grid(), CvScheme::TenFold, 0).unwrap();
    let t = start.elapsed();
    ensure(
        ds.len() == 188 && report.mean >= 0.85 && t < Duration::from_secs(1800),
        format!("{} graphs, 10-fold accuracy {report}, {t:.0?}", ds.len()),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("EM monotonicity", em_monotonicity),
        ("normalization", normalization),
        ("context propagation", context_propagation),
        ("isomorphism invariance", isomorphism_invariance),
        ("cyclic handling", cyclic_handling),
        ("E-step scaling", scaling),
        ("training determinism", determinism),
        ("classifier gradient check", gradient),
        ("MUTAG accuracy (optional)", mutag),
    ];
    // libtest flags such as --list or a name filter are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} criterion {:>2} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all required criteria passed");
}
