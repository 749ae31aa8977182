//! Shared test support: a dense brute-force evaluator of a layer and random
//! problem generators.
#![allow(dead_code)]

use cgmm::graph::{Arc, Graph, GraphDataset, NeighborIndex};
use cgmm::layer::{neighbor_frequency, LayerParams, LayerShape, NeighborFrequency, StateAssignments};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every joint term of one vertex, written out in full.
pub struct VertexOracle {
    /// `(state, pred, arc_label, neighbor, joint)`; base layers use `(state, 0, 0, 0, joint)`.
    pub terms: Vec<(usize, usize, usize, usize, f64)>,
    pub z: f64,
}

impl VertexOracle {
    pub fn responsibility(&self, state: usize, pred: usize, arc_label: usize, neighbor: usize) -> f64 {
        self.terms
            .iter()
            .find(|t| (t.0, t.1, t.2, t.3) == (state, pred, arc_label, neighbor))
            .map_or(0.0, |t| t.4 / self.z)
    }

    /// Unnormalized score of each state.
    pub fn scores(&self, n_states: usize) -> Vec<f64> {
        let mut s = vec![0.0; n_states];
        for t in &self.terms {
            s[t.0] += t.4;
        }
        s
    }

    pub fn argmax(&self, n_states: usize) -> usize {
        let s = self.scores(n_states);
        let mut best = 0;
        for i in 1..n_states {
            if s[i] > s[best] {
                best = i;
            }
        }
        best
    }
}

/// Neighbor-state frequency of `u` for predecessor states `frozen`, counted
/// straight from the arc list: `f[j]` over `0..=c_p`, bottom last.
pub fn dense_frequency(graph: &Graph, frozen: &[usize], c_p: usize, u: usize, arc_label: usize) -> Vec<f64> {
    let mut f = vec![0.0; c_p + 1];
    let mut n = 0.0;
    for arc in &graph.arcs {
        if arc.dst == u && arc.label == arc_label {
            f[frozen[arc.src]] += 1.0;
            n += 1.0;
        }
    }
    if n == 0.0 {
        f[c_p] = 1.0;
    } else {
        f.iter_mut().for_each(|x| *x /= n);
    }
    f
}

/// Brute-force evaluation of vertex `u`. `frozen[p]` holds the states of
/// every vertex at the layer of predecessor slot `p`.
pub fn oracle_vertex(params: &LayerParams, graph: &Graph, frozen: &[Vec<usize>], u: usize) -> VertexOracle {
    let c = params.n_states();
    let y = graph.labels[u];
    let mut terms = Vec::new();
    if params.is_base() {
        for i in 0..c {
            terms.push((i, 0, 0, 0, params.emission(i, y) * params.prior()[i]));
        }
    } else {
        let a_count = params.shape().n_arc_labels;
        for (p, pred) in params.predecessors().iter().enumerate() {
            for a in 1..=a_count {
                let f = dense_frequency(graph, &frozen[p], pred.n_states, u, a);
                for j in 0..=pred.n_states {
                    for i in 0..c {
                        let joint = params.emission(i, y)
                            * params.layer_weight()[p]
                            * params.arc_weight(p)[a - 1]
                            * f[j]
                            * params.transition(p, a, i, j);
                        terms.push((i, p, a, j, joint));
                    }
                }
            }
        }
    }
    let z = terms.iter().map(|t| t.4).sum();
    VertexOracle { terms, z }
}

/// A random layer problem: dataset, frozen predecessor states, frequencies
/// and parameters.
pub struct Problem {
    pub dataset: GraphDataset,
    pub assignments: StateAssignments,
    pub predecessor_layers: Vec<usize>,
    pub freq: NeighborFrequency,
    pub params: LayerParams,
}

impl Problem {
    /// Frozen states of graph `g` at each predecessor slot.
    pub fn frozen(&self, g: usize) -> Vec<Vec<usize>> {
        self.predecessor_layers
            .iter()
            .map(|&l| self.assignments.states(g, l).to_vec())
            .collect()
    }
}

pub struct ProblemSize {
    pub n_graphs: usize,
    pub max_vertices: usize,
    pub max_states: usize,
    pub max_labels: usize,
    pub max_arc_labels: usize,
    pub edge_prob: f64,
}

pub const TINY: ProblemSize = ProblemSize {
    n_graphs: 1,
    max_vertices: 5,
    max_states: 3,
    max_labels: 3,
    max_arc_labels: 2,
    edge_prob: 0.35,
};

pub fn random_graph(rng: &mut ChaCha8Rng, id: String, n: usize, m: usize, a: usize, edge_prob: f64) -> Graph {
    let labels = (0..n).map(|_| rng.random_range(1..=m)).collect();
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            // self-loops allowed here on purpose
            if rng.random_bool(edge_prob) {
                arcs.push(Arc::new(u, v, rng.random_range(1..=a)));
            }
        }
    }
    if n > 1 && rng.random_bool(0.3) {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        arcs.push(Arc::new(u, v, 1));
        arcs.push(Arc::new(u, v, 1));
    }
    Graph::new(id, labels, arcs, Some(rng.random_range(0..2)))
}

/// `deep = false` gives a base-layer problem.
pub fn random_problem(seed: u64, size: &ProblemSize, deep: bool) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=size.max_labels);
    let a = rng.random_range(1..=size.max_arc_labels);
    let c = rng.random_range(1..=size.max_states);
    let graphs: Vec<Graph> = (0..size.n_graphs)
        .map(|i| {
            let n = rng.random_range(1..=size.max_vertices);
            random_graph(&mut rng, format!("g{i}"), n, m, a, size.edge_prob)
        })
        .collect();
    let dataset = GraphDataset::new("random", m, a, graphs);

    let mut assignments = StateAssignments::new(dataset.len());
    let (predecessor_layers, freq) = if deep {
        let n_layers = rng.random_range(1..=3);
        for _ in 0..n_layers {
            let c_l = rng.random_range(1..=size.max_states);
            let states = dataset
                .graphs
                .iter()
                .map(|g| (0..g.n_vertices()).map(|_| rng.random_range(0..c_l)).collect())
                .collect();
            assignments.push_layer(c_l, states).unwrap();
        }
        let mut layers: Vec<usize> = (0..n_layers).filter(|_| rng.random_bool(0.6)).collect();
        if layers.is_empty() {
            layers.push(n_layers - 1);
        }
        let indices: Vec<NeighborIndex> = dataset.graphs.iter().map(|g| NeighborIndex::build(g, a)).collect();
        let freq = neighbor_frequency(&indices, &assignments, &layers).unwrap();
        (layers, freq)
    } else {
        (vec![], NeighborFrequency::base(dataset.graphs.iter().map(Graph::n_vertices), a))
    };
    let shape = LayerShape::deep(c, m, a, freq.predecessors().to_vec());
    let params = LayerParams::random(shape, rng.random()).unwrap();
    Problem {
        dataset,
        assignments,
        predecessor_layers,
        freq,
        params,
    }
}

/// Random vertex permutation.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng);
    p
}

/// Largest violation of the oracle checks over a whole problem:
/// `(responsibility error, relative log-likelihood error, argmax mismatches)`.
pub fn oracle_discrepancy(problem: &Problem) -> (f64, f64, usize) {
    use cgmm::layer::{e_step, infer_states, log_likelihood};
    let params = &problem.params;
    let c = params.n_states();
    let post = e_step(params, &problem.dataset, &problem.freq).unwrap();
    let ll = log_likelihood(params, &problem.dataset, &problem.freq).unwrap();
    let states = infer_states(params, &problem.dataset, &problem.freq).unwrap();
    let mut resp_err: f64 = 0.0;
    let mut ll_oracle = 0.0;
    let mut mismatches = 0;
    for (g, graph) in problem.dataset.graphs.iter().enumerate() {
        let frozen = problem.frozen(g);
        for u in 0..graph.n_vertices() {
            let o = oracle_vertex(params, graph, &frozen, u);
            ll_oracle += o.z.ln();
            if o.argmax(c) != states[g][u] {
                mismatches += 1;
            }
            if params.is_base() {
                let marginal = post.state_marginal(g, u);
                for i in 0..c {
                    resp_err = resp_err.max((marginal[i] - o.responsibility(i, 0, 0, 0)).abs());
                }
            } else {
                for &(i, p, a, j, _) in &o.terms {
                    let got = post.responsibility(g, u, i, p, a, j);
                    resp_err = resp_err.max((got - o.responsibility(i, p, a, j)).abs());
                }
            }
        }
    }
    let ll_err = (ll - ll_oracle).abs() / ll_oracle.abs().max(1.0);
    (resp_err, ll_err, mismatches)
}

/// Central-difference check of the classifier objective; returns the worst
/// relative error over all coordinates.
pub fn gradient_check(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..12);
    let d = rng.random_range(1..5);
    let k = rng.random_range(2..4);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    let w: Vec<f64> = (0..k * (d + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let l2 = rng.random_range(0.0..0.5);
    let (_, grad) = cgmm::eval::logistic_objective(&w, &x, &y, k, l2);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..w.len() {
        let mut plus = w.clone();
        let mut minus = w.clone();
        plus[i] += h;
        minus[i] -= h;
        let numeric = (cgmm::eval::logistic_objective(&plus, &x, &y, k, l2).0 - cgmm::eval::logistic_objective(&minus, &x, &y, k, l2).0) / (2.0 * h);
        let rel = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-3);
        worst = worst.max(rel);
    }
    worst
}
