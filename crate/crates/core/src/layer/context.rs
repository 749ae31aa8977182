use super::Predecessor;
use crate::graph::NeighborIndex;
use crate::{Error, Result};

/// Frozen most-likely states, indexed `[graph][layer][vertex]`.
///
/// Layers are only ever appended; an existing layer cannot be modified.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateAssignments {
    n_states: Vec<usize>,
    graphs: Vec<Vec<Vec<usize>>>,
}

impl StateAssignments {
    pub fn new(n_graphs: usize) -> Self {
        StateAssignments {
            n_states: Vec::new(),
            graphs: vec![Vec::new(); n_graphs],
        }
    }

    pub fn n_graphs(&self) -> usize {
        self.graphs.len()
    }

    pub fn n_layers(&self) -> usize {
        self.n_states.len()
    }

    /// Number of hidden states of each frozen layer.
    pub fn layer_sizes(&self) -> &[usize] {
        &self.n_states
    }

    /// Freezes a new layer; `states[g]` holds one state per vertex of graph `g`.
    pub fn push_layer(&mut self, n_states: usize, states: Vec<Vec<usize>>) -> Result<()> {
        if states.len() != self.graphs.len() {
            return Err(Error::InvalidParams(format!(
                "assignments cover {} graphs, expected {}",
                states.len(),
                self.graphs.len()
            )));
        }
        if states.iter().flatten().any(|&q| q >= n_states) {
            return Err(Error::InvalidParams("state index out of range".into()));
        }
        for (g, s) in self.graphs.iter_mut().zip(states) {
            g.push(s);
        }
        self.n_states.push(n_states);
        Ok(())
    }

    pub fn states(&self, graph: usize, layer: usize) -> &[usize] {
        &self.graphs[graph][layer]
    }

    /// All frozen layers of one graph.
    pub fn graph(&self, graph: usize) -> &[Vec<usize>] {
        &self.graphs[graph]
    }

    /// Assignments restricted to the first `n_layers` layers.
    pub fn truncated(&self, n_layers: usize) -> StateAssignments {
        StateAssignments {
            n_states: self.n_states[..n_layers].to_vec(),
            graphs: self.graphs.iter().map(|g| g[..n_layers].to_vec()).collect(),
        }
    }

    /// Resolves layer indices into predecessors carrying their state counts.
    pub fn predecessors(&self, layers: &[usize]) -> Result<Vec<Predecessor>> {
        layers
            .iter()
            .map(|&l| {
                self.n_states
                    .get(l)
                    .map(|&c| Predecessor::new(l, c))
                    .ok_or(Error::MissingAssignment(l))
            })
            .collect()
    }
}

/// One non-zero entry of the empirical neighbor-state frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextEntry {
    /// Predecessor slot (position in the layer's predecessor list).
    pub pred: u32,
    /// 0-based arc label index.
    pub arc: u32,
    /// Neighbor state; equal to the predecessor's state count for bottom.
    pub state: u32,
    /// Fraction of `Ne^{pred,arc}(u)` in `state`, or 1 for the bottom symbol.
    pub weight: f64,
}

/// Sparse neighbor-state frequencies of one graph.
///
/// Entries of vertex `u` are `entries[offsets[u]..offsets[u + 1]]`, sorted by
/// `(pred, arc, state)`. Every `(pred, arc)` pair has at least one entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GraphFrequency {
    pub(crate) offsets: Vec<usize>,
    pub(crate) entries: Vec<ContextEntry>,
}

impl GraphFrequency {
    /// Frequencies for a base layer: no entries at all.
    pub fn empty(n_vertices: usize) -> Self {
        GraphFrequency {
            offsets: vec![0; n_vertices + 1],
            entries: Vec::new(),
        }
    }

    pub fn compute(index: &NeighborIndex, layers: &[Vec<usize>], predecessors: &[Predecessor]) -> Result<Self> {
        let n = index.n_vertices();
        let n_arcs = index.n_arc_labels();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut entries = Vec::with_capacity(n * predecessors.len() * n_arcs);
        let mut buf = Vec::new();
        offsets.push(0);
        for u in 0..n {
            for (p, pred) in predecessors.iter().enumerate() {
                let states = layers.get(pred.layer).ok_or(Error::MissingAssignment(pred.layer))?;
                for a in 0..n_arcs {
                    let ne = index.neighbors(u, a + 1);
                    if ne.is_empty() {
                        entries.push(ContextEntry {
                            pred: p as u32,
                            arc: a as u32,
                            state: pred.bottom() as u32,
                            weight: 1.0,
                        });
                        continue;
                    }
                    buf.clear();
                    buf.extend(ne.iter().map(|&v| states[v]));
                    buf.sort_unstable();
                    let total = ne.len() as f64;
                    for run in buf.chunk_by(|x, y| x == y) {
                        entries.push(ContextEntry {
                            pred: p as u32,
                            arc: a as u32,
                            state: run[0] as u32,
                            weight: run.len() as f64 / total,
                        });
                    }
                }
            }
            offsets.push(entries.len());
        }
        Ok(GraphFrequency { offsets, entries })
    }

    pub fn n_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn vertex(&self, u: usize) -> &[ContextEntry] {
        &self.entries[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }
}

/// Empirical neighbor-state frequencies for every vertex of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborFrequency {
    pub(crate) predecessors: Vec<Predecessor>,
    pub(crate) n_arc_labels: usize,
    pub(crate) graphs: Vec<GraphFrequency>,
}

impl NeighborFrequency {
    /// Base-layer frequencies (no predecessors) for the given graph sizes.
    pub fn base(vertex_counts: impl IntoIterator<Item = usize>, n_arc_labels: usize) -> Self {
        NeighborFrequency {
            predecessors: Vec::new(),
            n_arc_labels,
            graphs: vertex_counts.into_iter().map(GraphFrequency::empty).collect(),
        }
    }

    pub fn from_graphs(predecessors: Vec<Predecessor>, n_arc_labels: usize, graphs: Vec<GraphFrequency>) -> Self {
        NeighborFrequency {
            predecessors,
            n_arc_labels,
            graphs,
        }
    }

    pub fn predecessors(&self) -> &[Predecessor] {
        &self.predecessors
    }

    pub fn n_graphs(&self) -> usize {
        self.graphs.len()
    }

    pub fn graph(&self, g: usize) -> &GraphFrequency {
        &self.graphs[g]
    }

    /// Dense frequency vector `f[u, pred, arc_label]` of length `C_pred + 1`.
    pub fn dense(&self, g: usize, u: usize, pred: usize, arc_label: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.predecessors[pred].n_states + 1];
        for e in self.graphs[g].vertex(u) {
            if e.pred as usize == pred && e.arc as usize == arc_label - 1 {
                out[e.state as usize] = e.weight;
            }
        }
        out
    }
}

/// Computes neighbor-state frequencies over frozen `assignments` for the
/// given predecessor layer indices.
pub fn neighbor_frequency(
    indices: &[NeighborIndex],
    assignments: &StateAssignments,
    predecessor_layers: &[usize],
) -> Result<NeighborFrequency> {
    use rayon::prelude::*;

    let predecessors = assignments.predecessors(predecessor_layers)?;
    if indices.len() != assignments.n_graphs() {
        return Err(Error::InvalidParams("neighbor index and assignments cover different graphs".into()));
    }
    let n_arc_labels = indices.first().map_or(1, NeighborIndex::n_arc_labels);
    let graphs = indices
        .par_iter()
        .enumerate()
        .map(|(g, idx)| GraphFrequency::compute(idx, assignments.graph(g), &predecessors))
        .collect::<Result<Vec<_>>>()?;
    Ok(NeighborFrequency {
        predecessors,
        n_arc_labels,
        graphs,
    })
}
