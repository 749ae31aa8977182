//! A single contextual layer.
//!
//! Every vertex carries a categorical hidden state that emits the vertex
//! label. In the base layer the state has a plain prior. In a deep layer the
//! state is drawn from a switching-parent mixture: pick a predecessor layer,
//! pick an arc label, then transition from the frozen state of a neighbor
//! reached through arcs with that label. Neighbors sharing the arc label
//! contribute equally, and an empty neighborhood is represented by an extra
//! "bottom" neighbor state with its own learned transition column.
//!
//! Hidden states are 0-based indices. For a predecessor with `c` states the
//! neighbor state `c` is the bottom symbol.

mod context;
mod em;
mod infer;
mod io;
mod params;

pub use context::{neighbor_frequency, ContextEntry, GraphFrequency, NeighborFrequency, StateAssignments};
pub use em::{
    e_step, expected_counts, log_likelihood, m_step, train_layer, train_layer_observed, EmConfig, ExpectedCounts,
    GraphPosterior, Posterior,
    TrainedLayer,
};
pub use infer::{infer_graph_states, infer_states, state_scores};
pub(crate) use io::parse_layer;
pub use io::{parse_layer_section, write_layer_section};
pub use params::LayerParams;

/// A frozen layer feeding context into the layer being built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Predecessor {
    /// Index of the layer in the stack.
    pub layer: usize,
    /// Number of hidden states of that layer.
    pub n_states: usize,
}

impl Predecessor {
    pub fn new(layer: usize, n_states: usize) -> Self {
        Predecessor { layer, n_states }
    }

    /// Index of the bottom symbol among this predecessor's neighbor states.
    pub fn bottom(&self) -> usize {
        self.n_states
    }
}

/// Dimensions of a layer; an empty predecessor list means a base layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerShape {
    pub n_states: usize,
    pub n_labels: usize,
    pub n_arc_labels: usize,
    pub predecessors: Vec<Predecessor>,
}

impl LayerShape {
    pub fn base(n_states: usize, n_labels: usize, n_arc_labels: usize) -> Self {
        LayerShape {
            n_states,
            n_labels,
            n_arc_labels,
            predecessors: Vec::new(),
        }
    }

    pub fn deep(n_states: usize, n_labels: usize, n_arc_labels: usize, predecessors: Vec<Predecessor>) -> Self {
        LayerShape {
            n_states,
            n_labels,
            n_arc_labels,
            predecessors,
        }
    }

    pub fn is_base(&self) -> bool {
        self.predecessors.is_empty()
    }

    /// Offsets of every `(predecessor, arc)` transition block, plus the total length.
    pub(crate) fn transition_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.predecessors.len() * self.n_arc_labels + 1);
        let mut at = 0;
        for p in &self.predecessors {
            for _ in 0..self.n_arc_labels {
                offsets.push(at);
                at += (p.n_states + 1) * self.n_states;
            }
        }
        offsets.push(at);
        offsets
    }
}
