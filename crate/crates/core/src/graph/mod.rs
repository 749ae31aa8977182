//! Labeled graphs with directed, labeled arcs.
//!
//! Vertex indices are 0-based within a graph. Vertex labels live in
//! `1..=n_labels` and arc labels in `1..=n_arc_labels`; label 0 is never
//! valid. An undirected edge is stored as two directed arcs sharing a label.

mod text;

pub use text::{parse_dataset, read_dataset, serialize_dataset, write_dataset};

use std::fmt;

/// A directed arc `src -> dst` carrying a 1-based label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arc {
    pub src: usize,
    pub dst: usize,
    pub label: usize,
}

impl Arc {
    pub fn new(src: usize, dst: usize, label: usize) -> Self {
        Arc { src, dst, label }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub id: String,
    /// Vertex labels, indexed by vertex.
    pub labels: Vec<usize>,
    pub arcs: Vec<Arc>,
    /// Class label for supervised tasks.
    pub target: Option<usize>,
}

impl Graph {
    pub fn new(id: impl Into<String>, labels: Vec<usize>, arcs: Vec<Arc>, target: Option<usize>) -> Self {
        Graph {
            id: id.into(),
            labels,
            arcs,
            target,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn n_arcs(&self) -> usize {
        self.arcs.len()
    }

    /// Adds both orientations of an undirected edge.
    pub fn push_undirected(&mut self, u: usize, v: usize, label: usize) {
        self.arcs.push(Arc::new(u, v, label));
        self.arcs.push(Arc::new(v, u, label));
    }

    /// Returns the graph with vertex `u` renamed to `perm[u]`.
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.n_vertices(), "permutation length");
        let mut labels = vec![0; self.labels.len()];
        for (u, &label) in self.labels.iter().enumerate() {
            labels[perm[u]] = label;
        }
        let arcs = self
            .arcs
            .iter()
            .map(|a| Arc::new(perm[a.src], perm[a.dst], a.label))
            .collect();
        Graph::new(self.id.clone(), labels, arcs, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDataset {
    pub name: String,
    /// Size of the vertex-label alphabet.
    pub n_labels: usize,
    /// Size of the arc-label alphabet.
    pub n_arc_labels: usize,
    pub graphs: Vec<Graph>,
}

impl GraphDataset {
    pub fn new(name: impl Into<String>, n_labels: usize, n_arc_labels: usize, graphs: Vec<Graph>) -> Self {
        GraphDataset {
            name: name.into(),
            n_labels,
            n_arc_labels,
            graphs,
        }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn n_vertices(&self) -> usize {
        self.graphs.iter().map(Graph::n_vertices).sum()
    }

    /// Targets of every graph, or `None` if any graph is unlabeled.
    pub fn targets(&self) -> Option<Vec<usize>> {
        self.graphs.iter().map(|g| g.target).collect()
    }

    /// A dataset with the same alphabets holding clones of the selected graphs.
    pub fn subset(&self, indices: &[usize]) -> GraphDataset {
        GraphDataset {
            name: self.name.clone(),
            n_labels: self.n_labels,
            n_arc_labels: self.n_arc_labels,
            graphs: indices.iter().map(|&i| self.graphs[i].clone()).collect(),
        }
    }

    /// Fails with the list of violations if the dataset is malformed.
    pub fn check(&self) -> crate::Result<()> {
        let violations = validate_dataset(self);
        if violations.is_empty() {
            Ok(())
        } else {
            let msg = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            Err(crate::Error::InvalidData(msg))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyAlphabet { which: &'static str },
    VertexLabel { graph: String, vertex: usize, label: usize },
    ArcLabel { graph: String, arc: Arc },
    ArcEndpoint { graph: String, arc: Arc },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyAlphabet { which } => write!(f, "{which} alphabet is empty"),
            Violation::VertexLabel { graph, vertex, label } => {
                write!(f, "graph `{graph}`: vertex {vertex} has label {label} outside the alphabet")
            }
            Violation::ArcLabel { graph, arc } => write!(
                f,
                "graph `{graph}`: arc {}->{} has label {} outside the alphabet",
                arc.src, arc.dst, arc.label
            ),
            Violation::ArcEndpoint { graph, arc } => write!(
                f,
                "graph `{graph}`: arc {}->{} references a missing vertex",
                arc.src, arc.dst
            ),
        }
    }
}

/// Lists every invariant violation; empty iff the dataset is well formed.
pub fn validate_dataset(dataset: &GraphDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    if dataset.n_labels == 0 {
        out.push(Violation::EmptyAlphabet { which: "vertex-label" });
    }
    if dataset.n_arc_labels == 0 {
        out.push(Violation::EmptyAlphabet { which: "arc-label" });
    }
    for g in &dataset.graphs {
        for (vertex, &label) in g.labels.iter().enumerate() {
            if label == 0 || label > dataset.n_labels {
                out.push(Violation::VertexLabel {
                    graph: g.id.clone(),
                    vertex,
                    label,
                });
            }
        }
        for &arc in &g.arcs {
            if arc.src >= g.n_vertices() || arc.dst >= g.n_vertices() {
                out.push(Violation::ArcEndpoint { graph: g.id.clone(), arc });
            }
            if arc.label == 0 || arc.label > dataset.n_arc_labels {
                out.push(Violation::ArcLabel { graph: g.id.clone(), arc });
            }
        }
    }
    out
}

/// Incoming neighborhoods split by arc label.
///
/// `neighbors(u, a)` lists the source of every arc `v -> u` labeled `a`,
/// with multiplicity, in ascending source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborIndex {
    n_arc_labels: usize,
    offsets: Vec<usize>,
    sources: Vec<usize>,
}

impl NeighborIndex {
    pub fn build(graph: &Graph, n_arc_labels: usize) -> Self {
        let n = graph.n_vertices();
        let slots = n * n_arc_labels;
        let slot = |arc: &Arc| arc.dst * n_arc_labels + (arc.label - 1);

        let mut counts = vec![0usize; slots + 1];
        for arc in &graph.arcs {
            counts[slot(arc) + 1] += 1;
        }
        for s in 0..slots {
            counts[s + 1] += counts[s];
        }
        let offsets = counts;
        let mut fill = offsets.clone();
        let mut sources = vec![0; graph.arcs.len()];
        for arc in &graph.arcs {
            let s = slot(arc);
            sources[fill[s]] = arc.src;
            fill[s] += 1;
        }
        for s in 0..slots {
            sources[offsets[s]..offsets[s + 1]].sort_unstable();
        }
        NeighborIndex {
            n_arc_labels,
            offsets,
            sources,
        }
    }

    pub fn n_vertices(&self) -> usize {
        (self.offsets.len() - 1) / self.n_arc_labels.max(1)
    }

    pub fn n_arc_labels(&self) -> usize {
        self.n_arc_labels
    }

    /// Sources of arcs into `u` with the 1-based label `arc_label`.
    pub fn neighbors(&self, u: usize, arc_label: usize) -> &[usize] {
        let s = u * self.n_arc_labels + (arc_label - 1);
        &self.sources[self.offsets[s]..self.offsets[s + 1]]
    }

    /// In-degree of `u`, counting duplicate arcs.
    pub fn in_degree(&self, u: usize) -> usize {
        let base = u * self.n_arc_labels;
        self.offsets[base + self.n_arc_labels] - self.offsets[base]
    }

    pub fn total(&self) -> usize {
        self.sources.len()
    }
}

pub fn build_neighbor_index(graph: &Graph, n_arc_labels: usize) -> NeighborIndex {
    NeighborIndex::build(graph, n_arc_labels)
}
