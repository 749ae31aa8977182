use rayon::prelude::*;

use super::context::{ContextEntry, GraphFrequency, NeighborFrequency};
use super::em::Mixer;
use super::params::LayerParams;
use crate::graph::{Graph, GraphDataset};
use crate::{Error, Result};

/// Unnormalized `P(Q_u = i | g)` for every state `i`.
pub fn state_scores(params: &LayerParams, label: usize, entries: &[ContextEntry]) -> Vec<f64> {
    let mut terms = Vec::new();
    Mixer::new(params).vertex_terms(label, entries, &mut terms);
    fold_slots(&terms, params.n_states())
}

fn fold_slots(terms: &[f64], c: usize) -> Vec<f64> {
    let mut scores = vec![0.0; c];
    for slot in terms.chunks_exact(c) {
        scores.iter_mut().zip(slot).for_each(|(s, t)| *s += t);
    }
    scores
}

/// Index of the largest score; ties go to the smallest index.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Most likely state of every vertex of one graph.
pub fn infer_graph_states(params: &LayerParams, graph: &Graph, freq: &GraphFrequency) -> Vec<usize> {
    let mixer = Mixer::new(params);
    let c = params.n_states();
    let mut terms = Vec::new();
    graph
        .labels
        .iter()
        .enumerate()
        .map(|(u, &label)| {
            mixer.vertex_terms(label, freq.vertex(u), &mut terms);
            argmax(&fold_slots(&terms, c))
        })
        .collect()
}

/// Most likely state of every vertex, indexed `[graph][vertex]`.
pub fn infer_states(params: &LayerParams, dataset: &GraphDataset, freq: &NeighborFrequency) -> Result<Vec<Vec<usize>>> {
    if freq.n_graphs() != dataset.len() || freq.predecessors() != params.predecessors() {
        return Err(Error::InvalidParams("neighbor frequencies do not match the layer or dataset".into()));
    }
    Ok(dataset
        .graphs
        .par_iter()
        .enumerate()
        .map(|(g, graph)| infer_graph_states(params, graph, freq.graph(g)))
        .collect())
}
