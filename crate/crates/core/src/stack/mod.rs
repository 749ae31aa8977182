//! Incrementally built stacks of frozen layers.
//!
//! Depth `d` trains a pool of candidate layers on the training part of a
//! holdout split, with context taken from the frozen states of earlier
//! layers. Each candidate is scored by the accuracy of the built-in linear
//! classifier on the validation part, using fingerprints up to depth `d`.
//! The best candidate is frozen; construction stops when validation accuracy
//! has not beaten the best depth so far for `patience` consecutive depths,
//! and the stack is cut back to that best depth.

mod fingerprint;
mod io;

pub use fingerprint::{
    class_means_csv, fingerprints_to_csv, write_fingerprints, Fingerprint, FingerprintMode, LayerSelection, NGram,
};
pub use io::{load_stack, read_stack, save_stack, MODEL_HEADER};

use std::fmt;

use rayon::prelude::*;

use crate::eval::linear::{LinearConfig, LinearModel};
use crate::eval::split::HoldoutSplit;
use crate::graph::{Graph, GraphDataset, NeighborIndex};
use crate::layer::{
    infer_graph_states, infer_states, neighbor_frequency, train_layer, EmConfig, GraphFrequency, LayerParams,
    NeighborFrequency, StateAssignments,
};
use crate::seed::derive_seed;
use crate::{Error, Result};

/// Which frozen layers a new layer draws context from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredecessorMode {
    /// The `n` most recent layers.
    Window(usize),
    All,
}

impl PredecessorMode {
    /// Predecessor layer indices, ascending, for a layer at `depth` (0-based).
    pub fn layers(&self, depth: usize) -> Vec<usize> {
        match *self {
            PredecessorMode::Window(n) => (depth.saturating_sub(n)..depth).collect(),
            PredecessorMode::All => (0..depth).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackConfig {
    pub em: EmConfig,
    pub max_layers: usize,
    pub pool_size: usize,
    pub predecessors: PredecessorMode,
    /// Consecutive non-improving depths tolerated before stopping.
    pub patience: usize,
    pub fingerprint: FingerprintMode,
    pub classifier: LinearConfig,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for StackConfig {
    fn default() -> Self {
        StackConfig {
            em: EmConfig::default(),
            max_layers: 8,
            pool_size: 10,
            predecessors: PredecessorMode::Window(1),
            patience: 1,
            fingerprint: FingerprintMode::default(),
            classifier: LinearConfig::default(),
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxLayers,
    NoImprovement,
    /// Built without the incremental procedure.
    None,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MaxLayers => "max-layers",
            StopReason::NoImprovement => "no-improvement",
            StopReason::None => "none",
        })
    }
}

impl std::str::FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-layers" => Ok(StopReason::MaxLayers),
            "no-improvement" => Ok(StopReason::NoImprovement),
            "none" => Ok(StopReason::None),
            _ => Err(Error::ModelFormat(format!("unknown stop reason `{s}`"))),
        }
    }
}

/// Outcome of the pool at one depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRecord {
    /// 1-based depth.
    pub depth: usize,
    /// Validation accuracy of the winner.
    pub accuracy: f64,
    /// Pool position of the winner.
    pub winner: usize,
    /// Whether the layer survived the final truncation.
    pub kept: bool,
    pub seeds: Vec<u64>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionLog {
    pub depths: Vec<DepthRecord>,
    pub stop: StopReason,
}

impl ConstructionLog {
    pub fn empty() -> Self {
        ConstructionLog {
            depths: Vec::new(),
            stop: StopReason::None,
        }
    }

    /// Winner validation accuracy per depth.
    pub fn accuracy_trace(&self) -> Vec<f64> {
        self.depths.iter().map(|d| d.accuracy).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackModel {
    layers: Vec<LayerParams>,
    n_labels: usize,
    n_arc_labels: usize,
    pub log: ConstructionLog,
}

impl StackModel {
    /// Checks that alphabets agree and every layer only looks at earlier ones.
    pub fn new(layers: Vec<LayerParams>, n_labels: usize, n_arc_labels: usize, log: ConstructionLog) -> Result<Self> {
        for (l, p) in layers.iter().enumerate() {
            let shape = p.shape();
            if shape.n_labels != n_labels || shape.n_arc_labels != n_arc_labels {
                return Err(Error::InvalidParams(format!("layer {l} alphabet differs from the stack")));
            }
            if l == 0 && !p.is_base() {
                return Err(Error::InvalidParams("the first layer must be a base layer".into()));
            }
            if l > 0 && p.is_base() {
                return Err(Error::InvalidParams(format!("layer {l} has no predecessors")));
            }
            for pred in p.predecessors() {
                if pred.layer >= l || layers[pred.layer].n_states() != pred.n_states {
                    return Err(Error::InvalidParams(format!(
                        "layer {l} has an invalid predecessor {}:{}",
                        pred.layer, pred.n_states
                    )));
                }
            }
        }
        Ok(StackModel {
            layers,
            n_labels,
            n_arc_labels,
            log,
        })
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn n_arc_labels(&self) -> usize {
        self.n_arc_labels
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(LayerParams::n_states).collect()
    }

    /// The first `n` layers.
    pub fn truncated(&self, n: usize) -> StackModel {
        StackModel {
            layers: self.layers[..n].to_vec(),
            log: self.log.clone(),
            ..*self
        }
    }

    fn check_graph(&self, graph: &Graph) -> Result<()> {
        if graph.labels.iter().any(|&y| y == 0 || y > self.n_labels) {
            return Err(Error::InvalidData(format!("graph `{}` has a vertex label outside 1..={}", graph.id, self.n_labels)));
        }
        if graph.arcs.iter().any(|a| a.label == 0 || a.label > self.n_arc_labels) {
            return Err(Error::InvalidData(format!(
                "graph `{}` has an arc label outside 1..={}",
                graph.id, self.n_arc_labels
            )));
        }
        if graph.arcs.iter().any(|a| a.src >= graph.n_vertices() || a.dst >= graph.n_vertices()) {
            return Err(Error::InvalidData(format!("graph `{}` has an arc to a missing vertex", graph.id)));
        }
        Ok(())
    }

    /// Most likely state of every vertex at every layer, `[layer][vertex]`.
    pub fn infer_graph(&self, graph: &Graph) -> Result<Vec<Vec<usize>>> {
        if self.layers.is_empty() {
            return Err(Error::EmptyStack);
        }
        self.check_graph(graph)?;
        let index = NeighborIndex::build(graph, self.n_arc_labels);
        let mut states: Vec<Vec<usize>> = Vec::with_capacity(self.layers.len());
        for params in &self.layers {
            let freq = if params.is_base() {
                GraphFrequency::empty(graph.n_vertices())
            } else {
                GraphFrequency::compute(&index, &states, params.predecessors())?
            };
            states.push(infer_graph_states(params, graph, &freq));
        }
        Ok(states)
    }

    pub fn fingerprint(&self, graph: &Graph, ngram: NGram) -> Result<Fingerprint> {
        let states = self.infer_graph(graph)?;
        Ok(Fingerprint::from_states(graph, &states, &self.layer_sizes(), ngram))
    }

    /// Fingerprints of every graph, in dataset order.
    pub fn fingerprints(&self, dataset: &GraphDataset, ngram: NGram) -> Result<Vec<Fingerprint>> {
        dataset.graphs.par_iter().map(|g| self.fingerprint(g, ngram)).collect()
    }
}

pub fn compute_fingerprint(model: &StackModel, graph: &Graph, ngram: NGram) -> Result<Fingerprint> {
    model.fingerprint(graph, ngram)
}

/// Per-class mean fingerprints of `dataset`, as CSV.
pub fn inspect_fingerprints(model: &StackModel, dataset: &GraphDataset, ngram: NGram) -> Result<String> {
    if dataset.targets().is_none() {
        return Err(Error::InvalidData("inspection needs a labeled dataset".into()));
    }
    class_means_csv(&model.fingerprints(dataset, ngram)?)
}

/// Frozen states of one part of the split, grown one layer at a time.
struct Part {
    data: GraphDataset,
    targets: Vec<usize>,
    indices: Vec<NeighborIndex>,
    assignments: StateAssignments,
}

impl Part {
    fn new(dataset: &GraphDataset, positions: &[usize]) -> Result<Self> {
        let data = dataset.subset(positions);
        let targets = data
            .targets()
            .ok_or_else(|| Error::InvalidData("stack training needs a labeled dataset".into()))?;
        let indices = data.graphs.par_iter().map(|g| NeighborIndex::build(g, data.n_arc_labels)).collect();
        let assignments = StateAssignments::new(data.len());
        Ok(Part {
            data,
            targets,
            indices,
            assignments,
        })
    }

    fn frequency(&self, predecessor_layers: &[usize]) -> Result<NeighborFrequency> {
        if predecessor_layers.is_empty() {
            Ok(NeighborFrequency::base(
                self.data.graphs.iter().map(Graph::n_vertices),
                self.data.n_arc_labels,
            ))
        } else {
            neighbor_frequency(&self.indices, &self.assignments, predecessor_layers)
        }
    }

    /// Features of every graph given the frozen layers plus `extra`.
    fn features(&self, extra: &[Vec<usize>], n_states: usize, mode: &FingerprintMode) -> Vec<Vec<f64>> {
        let mut sizes = self.assignments.layer_sizes().to_vec();
        sizes.push(n_states);
        self.data
            .graphs
            .iter()
            .enumerate()
            .map(|(g, graph)| {
                let mut states = self.assignments.graph(g).to_vec();
                states.push(extra[g].clone());
                Fingerprint::from_states(graph, &states, &sizes, mode.ngram).features(mode)
            })
            .collect()
    }
}

struct Candidate {
    params: LayerParams,
    train_states: Vec<Vec<usize>>,
    validation_states: Vec<Vec<usize>>,
    score: f64,
}

/// Validation accuracy of the linear classifier trained on `train` features.
fn score_features(
    train: &[Vec<f64>],
    train_targets: &[usize],
    validation: &[Vec<f64>],
    validation_targets: &[usize],
    config: &LinearConfig,
) -> Result<f64> {
    let model = LinearModel::train(train, train_targets, config)?;
    Ok(model.accuracy(validation, validation_targets))
}

fn train_candidate(train: &Part, validation: &Part, predecessor_layers: &[usize], config: &StackConfig, seed: u64) -> Result<Candidate> {
    let freq_train = train.frequency(predecessor_layers)?;
    let freq_validation = validation.frequency(predecessor_layers)?;
    let trained = train_layer(&train.data, &freq_train, &config.em, seed)?;
    let train_states = infer_states(&trained.params, &train.data, &freq_train)?;
    let validation_states = infer_states(&trained.params, &validation.data, &freq_validation)?;
    let c = trained.params.n_states();
    let score = score_features(
        &train.features(&train_states, c, &config.fingerprint),
        &train.targets,
        &validation.features(&validation_states, c, &config.fingerprint),
        &validation.targets,
        &config.classifier,
    )?;
    Ok(Candidate {
        params: trained.params,
        train_states,
        validation_states,
        score,
    })
}

/// Seed of pool member `member` at 0-based `depth`.
pub fn pool_seed(master: u64, depth: usize, member: usize) -> u64 {
    derive_seed(master, "layer", &[depth as u64, member as u64])
}

/// Trains the stack on `split.train` and scores depths on `split.validation`;
/// both hold positions into `dataset`.
pub fn train_stack(dataset: &GraphDataset, split: &HoldoutSplit, config: &StackConfig) -> Result<StackModel> {
    if config.pool_size < 1 {
        return Err(Error::InvalidParams("pool size must be at least 1".into()));
    }
    if config.max_layers < 1 {
        return Err(Error::InvalidParams("max_layers must be at least 1".into()));
    }
    if split.train.is_empty() || split.validation.is_empty() {
        return Err(Error::TooFewSamples("both sides of the validation split need graphs".into()));
    }
    dataset.check()?;
    let mut train = Part::new(dataset, &split.train)?;
    let mut validation = Part::new(dataset, &split.validation)?;
    let mut classes = train.targets.clone();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::TooFewSamples("training targets contain fewer than two classes".into()));
    }

    let mut layers = Vec::new();
    let mut log = ConstructionLog::empty();
    let mut best: Option<(f64, usize)> = None;
    let mut stale = 0;
    for depth in 0..config.max_layers {
        let predecessor_layers = config.predecessors.layers(depth);
        let seeds: Vec<u64> = (0..config.pool_size).map(|m| pool_seed(config.seed, depth, m)).collect();
        let candidates = seeds
            .par_iter()
            .map(|&s| train_candidate(&train, &validation, &predecessor_layers, config, s))
            .collect::<Result<Vec<_>>>()?;
        let winner = (0..candidates.len())
            .max_by(|&a, &b| {
                candidates[a]
                    .score
                    .total_cmp(&candidates[b].score)
                    .then(seeds[b].cmp(&seeds[a]))
            })
            .expect("pool is not empty");
        let scores = candidates.iter().map(|c| c.score).collect();
        let chosen = candidates.into_iter().nth(winner).unwrap();
        let accuracy = chosen.score;
        let c = chosen.params.n_states();
        train.assignments.push_layer(c, chosen.train_states)?;
        validation.assignments.push_layer(c, chosen.validation_states)?;
        layers.push(chosen.params);
        log.depths.push(DepthRecord {
            depth: depth + 1,
            accuracy,
            winner,
            kept: false,
            seeds,
            scores,
        });

        if best.is_none_or(|(b, _)| accuracy > b) {
            best = Some((accuracy, depth + 1));
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience.max(1) {
                log.stop = StopReason::NoImprovement;
                break;
            }
        }
    }
    if log.stop == StopReason::None {
        log.stop = StopReason::MaxLayers;
    }
    let keep = best.map_or(0, |(_, d)| d);
    layers.truncate(keep);
    for record in &mut log.depths {
        record.kept = record.depth <= keep;
    }
    StackModel::new(layers, dataset.n_labels, dataset.n_arc_labels, log)
}
