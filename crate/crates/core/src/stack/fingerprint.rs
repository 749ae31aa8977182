//! State-count fingerprints.

use std::fmt::Write as _;
use std::io::Write;

use crate::graph::Graph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NGram {
    Unigram,
    /// Unigram counts followed by ordered state-pair counts over arcs.
    UniBigram,
}

/// Which layers feed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSelection {
    Last,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FingerprintMode {
    pub ngram: NGram,
    pub layers: LayerSelection,
    /// Divide counts by the number of vertices before classification.
    pub normalize: bool,
}

impl Default for FingerprintMode {
    fn default() -> Self {
        FingerprintMode {
            ngram: NGram::Unigram,
            layers: LayerSelection::All,
            normalize: false,
        }
    }
}

/// Per-layer state counts of one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    pub graph_id: String,
    pub target: Option<usize>,
    pub n_vertices: usize,
    /// Block `l` holds `C_l` unigram counts, then `C_l^2` bigram counts
    /// (row-major over `(q_src, q_dst)`) when bigrams are enabled.
    pub blocks: Vec<Vec<u64>>,
}

impl Fingerprint {
    /// Counts states given frozen per-layer assignments of `graph`.
    pub fn from_states(graph: &Graph, states: &[Vec<usize>], sizes: &[usize], ngram: NGram) -> Self {
        let blocks = states
            .iter()
            .zip(sizes)
            .map(|(q, &c)| {
                let len = match ngram {
                    NGram::Unigram => c,
                    NGram::UniBigram => c + c * c,
                };
                let mut block = vec![0u64; len];
                for &s in q {
                    block[s] += 1;
                }
                if ngram == NGram::UniBigram {
                    for arc in &graph.arcs {
                        block[c + q[arc.src] * c + q[arc.dst]] += 1;
                    }
                }
                block
            })
            .collect();
        Fingerprint {
            graph_id: graph.id.clone(),
            target: graph.target,
            n_vertices: graph.n_vertices(),
            blocks,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.blocks.len()
    }

    pub fn selected(&self, layers: LayerSelection) -> &[Vec<u64>] {
        match layers {
            LayerSelection::All => &self.blocks,
            LayerSelection::Last => &self.blocks[self.blocks.len().saturating_sub(1)..],
        }
    }

    /// Concatenated counts of the selected layers.
    pub fn counts(&self, layers: LayerSelection) -> Vec<u64> {
        self.selected(layers).concat()
    }

    /// Classifier input.
    pub fn features(&self, mode: &FingerprintMode) -> Vec<f64> {
        let scale = if mode.normalize && self.n_vertices > 0 {
            1.0 / self.n_vertices as f64
        } else {
            1.0
        };
        self.counts(mode.layers).into_iter().map(|c| c as f64 * scale).collect()
    }

    /// Fingerprint of the first `n_layers` layers.
    pub fn truncated(&self, n_layers: usize) -> Fingerprint {
        Fingerprint {
            blocks: self.blocks[..n_layers].to_vec(),
            ..self.clone()
        }
    }
}

/// `graph_id,target,c_1,...,c_K`; unlabeled graphs get `-` as target.
pub fn fingerprints_to_csv(fingerprints: &[Fingerprint], layers: LayerSelection) -> String {
    let k = fingerprints.first().map_or(0, |f| f.counts(layers).len());
    let mut out = String::from("graph_id,target");
    for i in 1..=k {
        write!(out, ",c_{i}").unwrap();
    }
    out.push('\n');
    for f in fingerprints {
        out.push_str(&f.graph_id);
        match f.target {
            Some(t) => write!(out, ",{t}").unwrap(),
            None => out.push_str(",-"),
        }
        for c in f.counts(layers) {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_fingerprints<W: Write>(fingerprints: &[Fingerprint], layers: LayerSelection, mut sink: W) -> Result<()> {
    sink.write_all(fingerprints_to_csv(fingerprints, layers).as_bytes())?;
    Ok(())
}

/// Per-class mean fingerprints as CSV `class,layer,s_1,...`; one row per
/// class and layer, classes ascending. Shorter blocks leave trailing cells empty.
pub fn class_means_csv(fingerprints: &[Fingerprint]) -> Result<String> {
    let mut classes: Vec<usize> = fingerprints
        .iter()
        .map(|f| {
            f.target
                .ok_or_else(|| Error::InvalidData(format!("graph `{}` has no target", f.graph_id)))
        })
        .collect::<Result<_>>()?;
    classes.sort_unstable();
    classes.dedup();
    let n_layers = fingerprints.first().map_or(0, Fingerprint::n_layers);
    let width = fingerprints
        .iter()
        .flat_map(|f| f.blocks.iter().map(Vec::len))
        .max()
        .unwrap_or(0);

    let mut out = String::from("class,layer");
    for i in 1..=width {
        write!(out, ",s_{i}").unwrap();
    }
    out.push('\n');
    for &class in &classes {
        let members: Vec<&Fingerprint> = fingerprints.iter().filter(|f| f.target == Some(class)).collect();
        for l in 0..n_layers {
            let len = members[0].blocks[l].len();
            write!(out, "{class},{}", l + 1).unwrap();
            for i in 0..width {
                if i < len {
                    let sum: u64 = members.iter().map(|f| f.blocks[l][i]).sum();
                    write!(out, ",{}", sum as f64 / members.len() as f64).unwrap();
                } else {
                    out.push(',');
                }
            }
            out.push('\n');
        }
    }
    Ok(out)
}
