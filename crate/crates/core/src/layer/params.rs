use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{LayerShape, Predecessor};
use crate::{Error, Result};

/// Tolerance used when validating user-supplied distributions.
const INPUT_TOLERANCE: f64 = 1e-9;

/// All multinomials of one layer.
///
/// Emission is stored label-major so that `P(y | Q = ·)` for a fixed label
/// is contiguous. Transition blocks are stored per `(predecessor, arc)` as
/// `n_states + 1` neighbor-state columns, each a distribution over the
/// destination state.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub(crate) shape: LayerShape,
    pub(crate) emission: Vec<f64>,
    pub(crate) prior: Vec<f64>,
    pub(crate) layer_weight: Vec<f64>,
    pub(crate) arc_weight: Vec<f64>,
    pub(crate) transition: Vec<f64>,
    pub(crate) offsets: Vec<usize>,
}

fn dirichlet_ones(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = Exp1.sample(rng);
    }
    normalize(out);
}

pub(crate) fn normalize(xs: &mut [f64]) {
    let s: f64 = xs.iter().sum();
    for x in xs.iter_mut() {
        *x /= s;
    }
}

fn check_distribution(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParams(format!("{name} has a negative or non-finite entry")));
    }
    let s: f64 = xs.iter().sum();
    if (s - 1.0).abs() > INPUT_TOLERANCE {
        return Err(Error::InvalidParams(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

impl LayerParams {
    /// Samples every distribution from a symmetric Dirichlet(1).
    pub fn random(shape: LayerShape, seed: u64) -> Result<Self> {
        validate_shape(&shape)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = shape.n_states;
        let m = shape.n_labels;
        let a = shape.n_arc_labels;

        // Sample state-major rows, then transpose into label-major storage.
        let mut rows = vec![0.0; c * m];
        for row in rows.chunks_mut(m) {
            dirichlet_ones(&mut rng, row);
        }
        let mut emission = vec![0.0; c * m];
        for i in 0..c {
            for k in 0..m {
                emission[k * c + i] = rows[i * m + k];
            }
        }

        let offsets = shape.transition_offsets();
        let mut prior = Vec::new();
        let mut layer_weight = Vec::new();
        let mut arc_weight = Vec::new();
        let mut transition = vec![0.0; *offsets.last().unwrap()];
        if shape.is_base() {
            prior = vec![0.0; c];
            dirichlet_ones(&mut rng, &mut prior);
        } else {
            let p = shape.predecessors.len();
            layer_weight = vec![0.0; p];
            dirichlet_ones(&mut rng, &mut layer_weight);
            arc_weight = vec![0.0; p * a];
            for row in arc_weight.chunks_mut(a) {
                dirichlet_ones(&mut rng, row);
            }
            for col in transition.chunks_mut(c) {
                dirichlet_ones(&mut rng, col);
            }
        }
        Ok(LayerParams {
            shape,
            emission,
            prior,
            layer_weight,
            arc_weight,
            transition,
            offsets,
        })
    }

    /// Builds a base layer from explicit `emission[state][label - 1]` rows and a prior.
    pub fn base(emission: Vec<Vec<f64>>, prior: Vec<f64>) -> Result<Self> {
        let c = emission.len();
        let m = emission.first().map_or(0, Vec::len);
        if prior.len() != c {
            return Err(Error::InvalidParams("prior length differs from number of states".into()));
        }
        check_distribution("prior", &prior)?;
        let shape = LayerShape::base(c, m, 1);
        let mut params = Self::empty(shape)?;
        params.set_emission(&emission)?;
        params.prior = prior;
        Ok(params)
    }

    /// Builds a deep layer from explicit parts.
    ///
    /// `transition[p][a][j]` is the distribution over destination states given
    /// neighbor state `j` (with `j == predecessors[p].n_states` the bottom
    /// symbol) for predecessor slot `p` and 0-based arc index `a`.
    pub fn deep(
        n_arc_labels: usize,
        predecessors: Vec<Predecessor>,
        emission: Vec<Vec<f64>>,
        layer_weight: Vec<f64>,
        arc_weight: Vec<Vec<f64>>,
        transition: Vec<Vec<Vec<Vec<f64>>>>,
    ) -> Result<Self> {
        let c = emission.len();
        let m = emission.first().map_or(0, Vec::len);
        let shape = LayerShape::deep(c, m, n_arc_labels, predecessors);
        if shape.is_base() {
            return Err(Error::InvalidParams("a deep layer needs at least one predecessor".into()));
        }
        let mut params = Self::empty(shape)?;
        params.set_emission(&emission)?;
        let np = params.shape.predecessors.len();
        if layer_weight.len() != np || arc_weight.len() != np || transition.len() != np {
            return Err(Error::InvalidParams("predecessor count mismatch".into()));
        }
        check_distribution("layer weight", &layer_weight)?;
        params.layer_weight = layer_weight;
        for (p, row) in arc_weight.iter().enumerate() {
            if row.len() != n_arc_labels {
                return Err(Error::InvalidParams(format!("arc weight {p} has wrong length")));
            }
            check_distribution(&format!("arc weight {p}"), row)?;
            params.arc_weight.extend_from_slice(row);
        }
        for (p, per_arc) in transition.iter().enumerate() {
            let cp = params.shape.predecessors[p].n_states;
            if per_arc.len() != n_arc_labels {
                return Err(Error::InvalidParams(format!("transition {p} has wrong arc count")));
            }
            for (a, cols) in per_arc.iter().enumerate() {
                if cols.len() != cp + 1 {
                    return Err(Error::InvalidParams(format!("transition ({p},{a}) needs {} columns", cp + 1)));
                }
                for (j, col) in cols.iter().enumerate() {
                    if col.len() != c {
                        return Err(Error::InvalidParams(format!("transition ({p},{a},{j}) has wrong length")));
                    }
                    check_distribution(&format!("transition ({p},{a},{j})"), col)?;
                    let at = params.offsets[p * n_arc_labels + a] + j * c;
                    params.transition[at..at + c].copy_from_slice(col);
                }
            }
        }
        Ok(params)
    }

    /// Declares the arc alphabet of a base layer, which does not depend on it.
    pub fn with_arc_alphabet(mut self, n_arc_labels: usize) -> Result<Self> {
        if !self.is_base() || n_arc_labels == 0 {
            return Err(Error::InvalidParams("arc alphabet can only be reset on a base layer".into()));
        }
        self.shape.n_arc_labels = n_arc_labels;
        self.offsets = self.shape.transition_offsets();
        Ok(self)
    }

    fn empty(shape: LayerShape) -> Result<Self> {
        validate_shape(&shape)?;
        let offsets = shape.transition_offsets();
        let np = shape.predecessors.len();
        Ok(LayerParams {
            emission: vec![0.0; shape.n_states * shape.n_labels],
            prior: if shape.is_base() { vec![0.0; shape.n_states] } else { Vec::new() },
            layer_weight: vec![0.0; np],
            arc_weight: Vec::with_capacity(np * shape.n_arc_labels),
            transition: vec![0.0; *offsets.last().unwrap()],
            offsets,
            shape,
        })
    }

    fn set_emission(&mut self, rows: &[Vec<f64>]) -> Result<()> {
        let c = self.shape.n_states;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != self.shape.n_labels {
                return Err(Error::InvalidParams(format!("emission row {i} has wrong length")));
            }
            check_distribution(&format!("emission row {i}"), row)?;
            for (k, &x) in row.iter().enumerate() {
                self.emission[k * c + i] = x;
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> &LayerShape {
        &self.shape
    }

    pub fn n_states(&self) -> usize {
        self.shape.n_states
    }

    pub fn predecessors(&self) -> &[Predecessor] {
        &self.shape.predecessors
    }

    pub fn is_base(&self) -> bool {
        self.shape.is_base()
    }

    /// `P(y = label | Q = state)` with a 1-based label.
    pub fn emission(&self, state: usize, label: usize) -> f64 {
        self.emission[(label - 1) * self.shape.n_states + state]
    }

    /// `P(y = label | Q = ·)` over all states.
    pub fn emission_column(&self, label: usize) -> &[f64] {
        let c = self.shape.n_states;
        &self.emission[(label - 1) * c..label * c]
    }

    /// `P(y = · | Q = state)`.
    pub fn emission_row(&self, state: usize) -> Vec<f64> {
        (1..=self.shape.n_labels).map(|k| self.emission(state, k)).collect()
    }

    /// Base-layer state prior; empty for deep layers.
    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// `P(L = p)` over predecessor slots; empty for the base layer.
    pub fn layer_weight(&self) -> &[f64] {
        &self.layer_weight
    }

    /// `P^p(S = ·)` over arc labels for predecessor slot `p`.
    pub fn arc_weight(&self, pred: usize) -> &[f64] {
        let a = self.shape.n_arc_labels;
        &self.arc_weight[pred * a..(pred + 1) * a]
    }

    /// Distribution over destination states given `neighbor` at predecessor
    /// slot `pred` through arcs with the 1-based `arc_label`.
    pub fn transition_column(&self, pred: usize, arc_label: usize, neighbor: usize) -> &[f64] {
        let c = self.shape.n_states;
        let at = self.offsets[pred * self.shape.n_arc_labels + arc_label - 1] + neighbor * c;
        &self.transition[at..at + c]
    }

    pub fn transition(&self, pred: usize, arc_label: usize, state: usize, neighbor: usize) -> f64 {
        self.transition_column(pred, arc_label, neighbor)[state]
    }

    /// Every distribution of the layer as a slice, in a fixed order.
    pub fn distributions(&self) -> Vec<Vec<f64>> {
        let c = self.shape.n_states;
        let mut out: Vec<Vec<f64>> = (0..c).map(|i| self.emission_row(i)).collect();
        if self.is_base() {
            out.push(self.prior.clone());
        } else {
            out.push(self.layer_weight.clone());
            out.extend(self.arc_weight.chunks(self.shape.n_arc_labels).map(<[f64]>::to_vec));
            out.extend(self.transition.chunks(c).map(<[f64]>::to_vec));
        }
        out
    }

    /// Largest deviation of any distribution's sum from 1.
    pub fn max_normalization_error(&self) -> f64 {
        self.distributions()
            .iter()
            .map(|d| (d.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Whether every entry is finite and non-negative.
    pub fn is_valid(&self) -> bool {
        self.distributions().iter().flatten().all(|&x| x.is_finite() && x >= 0.0)
    }
}

fn validate_shape(shape: &LayerShape) -> Result<()> {
    if shape.n_states == 0 || shape.n_labels == 0 || shape.n_arc_labels == 0 {
        return Err(Error::InvalidParams("states and alphabets must be at least 1".into()));
    }
    if shape.predecessors.iter().any(|p| p.n_states == 0) {
        return Err(Error::InvalidParams("predecessor with zero states".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_init_is_deterministic_and_normalized() {
        let shape = LayerShape::base(2, 2, 1);
        let a = LayerParams::random(shape.clone(), 7).unwrap();
        let b = LayerParams::random(shape.clone(), 7).unwrap();
        assert_eq!(a, b);
        assert!(a.max_normalization_error() <= 1e-12);
        let c = LayerParams::random(shape, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn deep_random_init_is_normalized() {
        let shape = LayerShape::deep(4, 3, 2, vec![Predecessor::new(0, 3), Predecessor::new(1, 5)]);
        let p = LayerParams::random(shape, 1).unwrap();
        assert!(p.max_normalization_error() <= 1e-12);
        assert_eq!(p.transition_column(1, 2, 5).len(), 4);
        // 4 emission rows, layer weight, one arc row per predecessor, (4 + 6) * 2 columns
        assert_eq!(p.distributions().len(), 4 + 1 + 2 + 20);
    }

    #[test]
    fn explicit_base_layer() {
        let p = LayerParams::base(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![0.5, 0.5]).unwrap();
        assert_eq!(p.emission(0, 1), 0.9);
        assert_eq!(p.emission_column(2), &[0.1, 0.9]);
        assert!(LayerParams::base(vec![vec![0.5, 0.6]], vec![1.0]).is_err());
        assert!(LayerParams::base(vec![vec![1.0]], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn zero_sized_shapes_are_rejected() {
        assert!(LayerParams::random(LayerShape::base(0, 1, 1), 0).is_err());
        assert!(LayerParams::random(LayerShape::base(1, 0, 1), 0).is_err());
    }
}
