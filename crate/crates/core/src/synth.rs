//! Deterministic dataset generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Arc, Graph, GraphDataset};

/// Directed Erdős–Rényi graphs with uniform vertex and arc labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomGraphSpec {
    pub n_graphs: usize,
    pub min_vertices: usize,
    pub max_vertices: usize,
    /// Probability of each ordered pair `(u, v)`, `u != v`, being an arc.
    pub edge_prob: f64,
    pub n_labels: usize,
    pub n_arc_labels: usize,
    pub seed: u64,
}

/// Graph `i` gets target `i % 2`; self-loops are never generated.
pub fn gen_random_graphs(spec: &RandomGraphSpec) -> GraphDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let graphs = (0..spec.n_graphs)
        .map(|i| {
            let n = rng.random_range(spec.min_vertices..=spec.max_vertices.max(spec.min_vertices));
            let labels = (0..n).map(|_| rng.random_range(1..=spec.n_labels)).collect();
            let mut arcs = Vec::new();
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.random_bool(spec.edge_prob) {
                        arcs.push(Arc::new(u, v, rng.random_range(1..=spec.n_arc_labels)));
                    }
                }
            }
            Graph::new(format!("random-{i}"), labels, arcs, Some(i % 2))
        })
        .collect();
    GraphDataset::new("random", spec.n_labels, spec.n_arc_labels, graphs)
}

/// Two classes of star-of-stars graphs that only differ at distance two.
///
/// A center (label 1) connects to `2r` spokes (label 2); every spoke has two
/// leaves labeled 3 or 4. Class 0 gives half of the spokes two label-3
/// leaves and the other half two label-4 leaves; class 1 gives every spoke
/// one leaf of each. Both classes share label histograms and the multiset of
/// `(label, label, arc)` triples. Graph `2k` is class 0 and graph `2k + 1` is
/// its class-1 partner with the same `r`. Vertex order is shuffled.
pub fn gen_two_hop(n_per_class: usize, seed: u64) -> GraphDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(2 * n_per_class);
    for k in 0..n_per_class {
        let r = rng.random_range(1..=3usize);
        for class in 0..2 {
            let leaves: Vec<[usize; 2]> = (0..2 * r)
                .map(|t| match (class, t < r) {
                    (0, true) => [3, 3],
                    (0, false) => [4, 4],
                    _ => [3, 4],
                })
                .collect();
            graphs.push(star_of_stars(format!("two-hop-{class}-{k}"), &leaves, class, &mut rng));
        }
    }
    GraphDataset::new("two-hop", 4, 1, graphs)
}

fn star_of_stars(id: String, leaves: &[[usize; 2]], class: usize, rng: &mut ChaCha8Rng) -> Graph {
    let n = 1 + leaves.len() * 3;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut g = Graph::new(id, vec![0; n], Vec::new(), Some(class));
    g.labels[perm[0]] = 1;
    let mut next = 1;
    for pair in leaves {
        let spoke = perm[next];
        next += 1;
        g.labels[spoke] = 2;
        g.push_undirected(perm[0], spoke, 1);
        for &leaf_label in pair {
            let leaf = perm[next];
            next += 1;
            g.labels[leaf] = leaf_label;
            g.push_undirected(spoke, leaf, 1);
        }
    }
    g
}

/// A single cycle over `labels` (in order), directed `i -> i+1` or undirected.
pub fn gen_cycle(id: impl Into<String>, labels: &[usize], undirected: bool) -> Graph {
    assert!(labels.len() >= 3, "a cycle needs at least 3 vertices");
    let n = labels.len();
    let mut g = Graph::new(id, labels.to_vec(), Vec::new(), None);
    for u in 0..n {
        if undirected {
            g.push_undirected(u, (u + 1) % n, 1);
        } else {
            g.arcs.push(Arc::new(u, (u + 1) % n, 1));
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleSpec {
    pub n_graphs: usize,
    pub min_length: usize,
    pub max_length: usize,
    pub n_labels: usize,
    pub undirected: bool,
    pub seed: u64,
}

/// Cycles of random length with uniform labels; graph `i` gets target `i % 2`.
pub fn gen_cycles(spec: &CycleSpec) -> GraphDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let graphs = (0..spec.n_graphs)
        .map(|i| {
            let n = rng.random_range(spec.min_length.max(3)..=spec.max_length.max(spec.min_length.max(3)));
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(1..=spec.n_labels)).collect();
            let mut g = gen_cycle(format!("cycle-{i}"), &labels, spec.undirected);
            g.target = Some(i % 2);
            g
        })
        .collect();
    GraphDataset::new("cycles", spec.n_labels, 1, graphs)
}
