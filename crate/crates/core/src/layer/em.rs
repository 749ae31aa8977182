//! Expectation-maximization for a single layer.
//!
//! The E-step responsibility of a vertex `u` for the configuration
//! `(state i, predecessor p, arc a, neighbor state j)` is proportional to
//!
//! ```text
//! P(y_u | i) * P(L = p) * P^p(S = a) * f[u, p, a][j] * T^{p,a}(i | j)
//! ```
//!
//! where `f` is the empirical neighbor-state frequency. Its normalizer is the
//! per-vertex likelihood, so one pass yields both the sufficient statistics
//! and the log-likelihood of the current parameters.
//!
//! Graphs are reduced in fixed chunks whose partial sums are merged in graph
//! order, which keeps every result bit-identical across thread counts.

use rayon::prelude::*;

use super::context::{ContextEntry, GraphFrequency, NeighborFrequency};
use super::params::LayerParams;
use super::LayerShape;
use crate::graph::{Graph, GraphDataset};
use crate::{Error, Result};

const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub n_states: usize,
    pub max_iters: usize,
    /// Relative log-likelihood improvement below which training stops.
    pub tol: f64,
    /// Pseudo-count added to every M-step accumulator.
    pub smoothing: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            n_states: 20,
            max_iters: 50,
            tol: 1e-4,
            smoothing: 1e-8,
        }
    }
}

/// Precomputed `P(L = p) * P^p(S = a)` for every `(p, a)`.
pub(crate) struct Mixer<'a> {
    pub(crate) params: &'a LayerParams,
    mix: Vec<f64>,
}

impl<'a> Mixer<'a> {
    pub(crate) fn new(params: &'a LayerParams) -> Self {
        let a = params.shape.n_arc_labels;
        let mix = params
            .layer_weight
            .iter()
            .enumerate()
            .flat_map(|(p, &lw)| params.arc_weight[p * a..(p + 1) * a].iter().map(move |&aw| lw * aw))
            .collect();
        Mixer { params, mix }
    }

    /// Fills `out` with the unnormalized joint terms of one vertex, slot-major,
    /// and returns their sum. A base layer has a single slot.
    pub(crate) fn vertex_terms(&self, label: usize, entries: &[ContextEntry], out: &mut Vec<f64>) -> f64 {
        let params = self.params;
        let c = params.shape.n_states;
        let emit = params.emission_column(label);
        out.clear();
        if params.is_base() {
            out.extend(emit.iter().zip(&params.prior).map(|(e, p)| e * p));
        } else {
            let a_count = params.shape.n_arc_labels;
            for e in entries {
                let block = e.pred as usize * a_count + e.arc as usize;
                let w = self.mix[block] * e.weight;
                let at = params.offsets[block] + e.state as usize * c;
                let column = &params.transition[at..at + c];
                out.extend(emit.iter().zip(column).map(|(em, t)| em * w * t));
            }
        }
        out.iter().sum()
    }
}

fn check_inputs(params: &LayerParams, dataset: &GraphDataset, freq: &NeighborFrequency) -> Result<()> {
    let shape = &params.shape;
    if dataset.n_labels != shape.n_labels || dataset.n_arc_labels != shape.n_arc_labels {
        return Err(Error::InvalidParams(format!(
            "layer alphabets ({}, {}) differ from dataset alphabets ({}, {})",
            shape.n_labels, shape.n_arc_labels, dataset.n_labels, dataset.n_arc_labels
        )));
    }
    if freq.predecessors != shape.predecessors {
        return Err(Error::InvalidParams("neighbor frequencies were built for other predecessors".into()));
    }
    if freq.graphs.len() != dataset.len()
        || freq.graphs.iter().zip(&dataset.graphs).any(|(f, g)| f.n_vertices() != g.n_vertices())
    {
        return Err(Error::InvalidParams("neighbor frequencies do not match the dataset".into()));
    }
    Ok(())
}

fn degenerate(graph: &Graph, vertex: usize) -> Error {
    Error::DegenerateVertex {
        graph: graph.id.clone(),
        vertex,
    }
}

/// Reduces per-graph work over fixed chunks, merging partials in graph order.
fn chunked_reduce<T, I, B, M>(n_graphs: usize, init: I, body: B, merge: M) -> Result<T>
where
    T: Send,
    I: Fn() -> T + Sync,
    B: Fn(&mut T, usize) -> Result<()> + Sync,
    M: Fn(&mut T, T),
{
    let partials: Vec<Result<T>> = (0..n_graphs.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc = init();
            for g in chunk * CHUNK..((chunk + 1) * CHUNK).min(n_graphs) {
                body(&mut acc, g)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = init();
    for part in partials {
        merge(&mut total, part?);
    }
    Ok(total)
}

/// Sufficient statistics of one layer, in the same layout as [`LayerParams`].
#[derive(Debug, Clone)]
pub struct ExpectedCounts {
    emission: Vec<f64>,
    prior: Vec<f64>,
    layer: Vec<f64>,
    arc: Vec<f64>,
    transition: Vec<f64>,
    pub(crate) log_likelihood: f64,
}

impl ExpectedCounts {
    /// Log-likelihood of the parameters the statistics were collected under.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    fn zeros(shape: &LayerShape, transition_len: usize) -> Self {
        let base = shape.is_base();
        let np = shape.predecessors.len();
        ExpectedCounts {
            emission: vec![0.0; shape.n_states * shape.n_labels],
            prior: vec![0.0; if base { shape.n_states } else { 0 }],
            layer: vec![0.0; np],
            arc: vec![0.0; np * shape.n_arc_labels],
            transition: vec![0.0; transition_len],
            log_likelihood: 0.0,
        }
    }

    fn add_vertex(&mut self, shape: &LayerShape, offsets: &[usize], label: usize, keys: &[ContextEntry], resp: &[f64]) {
        let c = shape.n_states;
        let emission = &mut self.emission[(label - 1) * c..label * c];
        if shape.is_base() {
            for i in 0..c {
                emission[i] += resp[i];
                self.prior[i] += resp[i];
            }
            return;
        }
        let a_count = shape.n_arc_labels;
        for (key, r) in keys.iter().zip(resp.chunks_exact(c)) {
            let block = key.pred as usize * a_count + key.arc as usize;
            let at = offsets[block] + key.state as usize * c;
            let column = &mut self.transition[at..at + c];
            let mut mass = 0.0;
            for i in 0..c {
                emission[i] += r[i];
                column[i] += r[i];
                mass += r[i];
            }
            self.layer[key.pred as usize] += mass;
            self.arc[block] += mass;
        }
    }

    fn merge(&mut self, other: ExpectedCounts) {
        fn add(a: &mut [f64], b: &[f64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        add(&mut self.emission, &other.emission);
        add(&mut self.prior, &other.prior);
        add(&mut self.layer, &other.layer);
        add(&mut self.arc, &other.arc);
        add(&mut self.transition, &other.transition);
        self.log_likelihood += other.log_likelihood;
    }

    /// Closed-form maximizer of the expected complete-data log-likelihood.
    ///
    /// A distribution whose accumulators are all zero (possible only without
    /// smoothing) carries no probability mass anywhere and is set uniform.
    pub(crate) fn into_params(self, shape: &LayerShape, smoothing: f64) -> LayerParams {
        fn finish(xs: &mut [f64], eps: f64) {
            xs.iter_mut().for_each(|x| *x += eps);
            let s: f64 = xs.iter().sum();
            if s > 0.0 {
                xs.iter_mut().for_each(|x| *x /= s);
            } else {
                let u = 1.0 / xs.len() as f64;
                xs.iter_mut().for_each(|x| *x = u);
            }
        }

        let c = shape.n_states;
        let m = shape.n_labels;
        let mut emission = self.emission;
        for i in 0..c {
            let mut row: Vec<f64> = (0..m).map(|k| emission[k * c + i]).collect();
            finish(&mut row, smoothing);
            for (k, x) in row.into_iter().enumerate() {
                emission[k * c + i] = x;
            }
        }
        let mut prior = self.prior;
        let mut layer_weight = self.layer;
        let mut arc_weight = self.arc;
        let mut transition = self.transition;
        if shape.is_base() {
            finish(&mut prior, smoothing);
        } else {
            finish(&mut layer_weight, smoothing);
            for row in arc_weight.chunks_mut(shape.n_arc_labels) {
                finish(row, smoothing);
            }
            for col in transition.chunks_mut(c) {
                finish(col, smoothing);
            }
        }
        LayerParams {
            shape: shape.clone(),
            emission,
            prior,
            layer_weight,
            arc_weight,
            transition,
            offsets: shape.transition_offsets(),
        }
    }
}

/// Fused E-step: accumulates sufficient statistics without materializing
/// the posterior. This is the pass EM training runs.
pub fn expected_counts(
    params: &LayerParams,
    dataset: &GraphDataset,
    freq: &NeighborFrequency,
) -> Result<ExpectedCounts> {
    check_inputs(params, dataset, freq)?;
    let mixer = Mixer::new(params);
    let zeros = ExpectedCounts::zeros(&params.shape, params.transition.len());
    chunked_reduce(
        dataset.len(),
        || zeros.clone(),
        |acc, g| {
            let graph = &dataset.graphs[g];
            let gf = &freq.graphs[g];
            let mut terms = Vec::new();
            for (u, &label) in graph.labels.iter().enumerate() {
                let keys = gf.vertex(u);
                let z = mixer.vertex_terms(label, keys, &mut terms);
                if !(z > 0.0) || !z.is_finite() {
                    return Err(degenerate(graph, u));
                }
                terms.iter_mut().for_each(|t| *t /= z);
                acc.add_vertex(&params.shape, &params.offsets, label, keys, &terms);
                acc.log_likelihood += z.ln();
            }
            Ok(())
        },
        ExpectedCounts::merge,
    )
}

/// Posterior responsibilities of one graph.
///
/// Vertex `u` owns slots `offsets[u]..offsets[u + 1]`, each holding
/// `n_states` responsibilities. In a deep layer the slots mirror the
/// vertex's neighbor-frequency entries (`keys`); configurations whose
/// frequency is zero have no slot and an implicit responsibility of 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPosterior {
    offsets: Vec<usize>,
    keys: Vec<ContextEntry>,
    resp: Vec<f64>,
}

impl GraphPosterior {
    fn base_offsets(n: usize) -> Vec<usize> {
        (0..=n).collect()
    }

    pub fn n_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Slot-major responsibilities of vertex `u`.
    pub fn vertex(&self, u: usize, n_states: usize) -> &[f64] {
        &self.resp[self.offsets[u] * n_states..self.offsets[u + 1] * n_states]
    }

    /// Slot keys of vertex `u`; empty in a base layer.
    pub fn keys(&self, u: usize) -> &[ContextEntry] {
        if self.keys.is_empty() {
            &[]
        } else {
            &self.keys[self.offsets[u]..self.offsets[u + 1]]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    shape: LayerShape,
    graphs: Vec<GraphPosterior>,
}

impl Posterior {
    pub fn shape(&self) -> &LayerShape {
        &self.shape
    }

    pub fn graph(&self, g: usize) -> &GraphPosterior {
        &self.graphs[g]
    }

    pub fn n_graphs(&self) -> usize {
        self.graphs.len()
    }

    /// `P(Q_u = · | g)` marginalized over every other variable.
    pub fn state_marginal(&self, g: usize, u: usize) -> Vec<f64> {
        let c = self.shape.n_states;
        let mut out = vec![0.0; c];
        for slot in self.graphs[g].vertex(u, c).chunks_exact(c) {
            out.iter_mut().zip(slot).for_each(|(o, r)| *o += r);
        }
        out
    }

    /// `E[z_{u,i,p,a,j}]` for a deep layer; `arc_label` is 1-based.
    pub fn responsibility(&self, g: usize, u: usize, state: usize, pred: usize, arc_label: usize, neighbor: usize) -> f64 {
        let c = self.shape.n_states;
        let gp = &self.graphs[g];
        gp.keys(u)
            .iter()
            .zip(gp.vertex(u, c).chunks_exact(c))
            .find(|(k, _)| k.pred as usize == pred && k.arc as usize + 1 == arc_label && k.state as usize == neighbor)
            .map_or(0.0, |(_, r)| r[state])
    }

    /// Sum of all responsibilities of vertex `u`.
    pub fn vertex_total(&self, g: usize, u: usize) -> f64 {
        self.graphs[g].vertex(u, self.shape.n_states).iter().sum()
    }
}

/// Materialized E-step.
pub fn e_step(params: &LayerParams, dataset: &GraphDataset, freq: &NeighborFrequency) -> Result<Posterior> {
    check_inputs(params, dataset, freq)?;
    let mixer = Mixer::new(params);
    let c = params.shape.n_states;
    let graphs = dataset
        .graphs
        .par_iter()
        .zip(&freq.graphs)
        .map(|(graph, gf)| graph_posterior(&mixer, graph, gf, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(Posterior {
        shape: params.shape.clone(),
        graphs,
    })
}

fn graph_posterior(mixer: &Mixer<'_>, graph: &Graph, gf: &GraphFrequency, c: usize) -> Result<GraphPosterior> {
    let base = mixer.params.is_base();
    let n = graph.n_vertices();
    let slots = if base { n } else { gf.n_entries() };
    let mut resp = Vec::with_capacity(slots * c);
    let mut terms = Vec::new();
    for (u, &label) in graph.labels.iter().enumerate() {
        let z = mixer.vertex_terms(label, gf.vertex(u), &mut terms);
        if !(z > 0.0) || !z.is_finite() {
            return Err(degenerate(graph, u));
        }
        resp.extend(terms.iter().map(|t| t / z));
    }
    let (offsets, keys) = if base {
        (GraphPosterior::base_offsets(n), Vec::new())
    } else {
        (gf.offsets.clone(), gf.entries.clone())
    };
    Ok(GraphPosterior { offsets, keys, resp })
}

/// M-step from a materialized posterior.
pub fn m_step(posterior: &Posterior, dataset: &GraphDataset, smoothing: f64) -> Result<LayerParams> {
    let shape = &posterior.shape;
    if posterior.graphs.len() != dataset.len() {
        return Err(Error::InvalidParams("posterior and dataset differ in size".into()));
    }
    let offsets = shape.transition_offsets();
    let transition_len = *offsets.last().unwrap();
    let c = shape.n_states;
    let counts = chunked_reduce(
        dataset.len(),
        || ExpectedCounts::zeros(shape, transition_len),
        |acc, g| {
            let gp = &posterior.graphs[g];
            for (u, &label) in dataset.graphs[g].labels.iter().enumerate() {
                acc.add_vertex(shape, &offsets, label, gp.keys(u), gp.vertex(u, c));
            }
            Ok(())
        },
        ExpectedCounts::merge,
    )?;
    Ok(counts.into_params(shape, smoothing))
}

/// Sum over vertices of the log of the per-vertex mixture likelihood.
pub fn log_likelihood(params: &LayerParams, dataset: &GraphDataset, freq: &NeighborFrequency) -> Result<f64> {
    check_inputs(params, dataset, freq)?;
    let mixer = Mixer::new(params);
    chunked_reduce(
        dataset.len(),
        || 0.0,
        |acc, g| {
            let graph = &dataset.graphs[g];
            let mut terms = Vec::new();
            for (u, &label) in graph.labels.iter().enumerate() {
                let z = mixer.vertex_terms(label, freq.graphs[g].vertex(u), &mut terms);
                if !(z > 0.0) {
                    return Err(Error::NonFinite(format!(
                        "log-likelihood is -inf at graph `{}`, vertex {u}",
                        graph.id
                    )));
                }
                *acc += z.ln();
            }
            Ok(())
        },
        |a, b| *a += b,
    )
}

#[derive(Debug, Clone)]
pub struct TrainedLayer {
    pub params: LayerParams,
    /// Log-likelihood of the initial parameters followed by one value per iteration.
    pub trace: Vec<f64>,
}

impl TrainedLayer {
    pub fn iterations(&self) -> usize {
        self.trace.len() - 1
    }
}

pub fn train_layer(
    dataset: &GraphDataset,
    freq: &NeighborFrequency,
    config: &EmConfig,
    seed: u64,
) -> Result<TrainedLayer> {
    train_layer_observed(dataset, freq, config, seed, |_, _| {})
}

/// Like [`train_layer`], calling `observe(params, log_likelihood)` after
/// initialization and after every M-step.
pub fn train_layer_observed<F>(
    dataset: &GraphDataset,
    freq: &NeighborFrequency,
    config: &EmConfig,
    seed: u64,
    mut observe: F,
) -> Result<TrainedLayer>
where
    F: FnMut(&LayerParams, f64),
{
    let shape = LayerShape::deep(
        config.n_states,
        dataset.n_labels,
        dataset.n_arc_labels,
        freq.predecessors.clone(),
    );
    let mut params = LayerParams::random(shape.clone(), seed)?;
    let mut counts = expected_counts(&params, dataset, freq)?;
    let mut trace = vec![counts.log_likelihood];
    observe(&params, counts.log_likelihood);

    for _ in 0..config.max_iters {
        let prev = counts.log_likelihood;
        params = counts.into_params(&shape, config.smoothing);
        counts = expected_counts(&params, dataset, freq)?;
        let ll = counts.log_likelihood;
        if !ll.is_finite() {
            return Err(Error::NonFinite(format!("log-likelihood {ll} during EM")));
        }
        trace.push(ll);
        observe(&params, ll);
        if (ll - prev).abs() <= config.tol * ll.abs() {
            break;
        }
    }
    Ok(TrainedLayer { params, trace })
}
