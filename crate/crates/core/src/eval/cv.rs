//! Cross-validation of the full pipeline.
//!
//! Every training fold builds its own stack (pooling included) from scratch,
//! so test graphs never influence layers, selection or the classifier.

use std::fmt;

use rayon::prelude::*;

use super::linear::LinearModel;
use super::split::{stratified_folds, stratified_holdout};
use crate::graph::GraphDataset;
use crate::seed::derive_seed;
use crate::stack::{train_stack, StackConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvScheme {
    /// Grid point chosen by mean accuracy over the same ten folds it is reported on.
    TenFold,
    /// Grid point chosen per outer fold by an inner 5-fold CV on its training part.
    Nested,
}

impl fmt::Display for CvScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CvScheme::TenFold => "tenfold",
            CvScheme::Nested => "nested",
        })
    }
}

/// Test-fold outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub accuracy: f64,
    /// Depth of the stack built on the training fold.
    pub depth: usize,
    /// Grid index of the configuration used.
    pub config: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub scheme: CvScheme,
    /// Test folds, as positions into the dataset.
    pub folds: Vec<Vec<usize>>,
    pub results: Vec<FoldResult>,
    /// Mean accuracy in `[0, 1]`.
    pub mean: f64,
    /// Population standard deviation of the fold accuracies.
    pub std: f64,
}

impl CvReport {
    fn new(scheme: CvScheme, folds: Vec<Vec<usize>>, results: Vec<FoldResult>) -> Self {
        let n = results.len() as f64;
        let mean = results.iter().map(|r| r.accuracy).sum::<f64>() / n;
        let var = results.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / n;
        CvReport {
            scheme,
            folds,
            results,
            mean,
            std: var.sqrt(),
        }
    }

    pub fn fold_accuracies(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.accuracy).collect()
    }

    pub fn depths(&self) -> Vec<usize> {
        self.results.iter().map(|r| r.depth).collect()
    }
}

/// Percent accuracy as `mean (std)`.
impl fmt::Display for CvReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ({:.2})", 100.0 * self.mean, 100.0 * self.std)
    }
}

/// Trains on `train`, reports accuracy on `test` and the stack depth.
pub fn evaluate_split(dataset: &GraphDataset, train: &[usize], test: &[usize], config: &StackConfig) -> Result<(f64, usize)> {
    let train_set = dataset.subset(train);
    let test_set = dataset.subset(test);
    let train_targets = train_set
        .targets()
        .ok_or_else(|| Error::InvalidData("evaluation needs a labeled dataset".into()))?;
    let test_targets = test_set
        .targets()
        .ok_or_else(|| Error::InvalidData("evaluation needs a labeled dataset".into()))?;
    let holdout = stratified_holdout(
        &train_targets,
        config.validation_fraction,
        derive_seed(config.seed, "holdout", &[]),
    );
    let model = train_stack(&train_set, &holdout, config)?;
    let ngram = config.fingerprint.ngram;
    let features = |ds: &GraphDataset| -> Result<Vec<Vec<f64>>> {
        Ok(model
            .fingerprints(ds, ngram)?
            .iter()
            .map(|f| f.features(&config.fingerprint))
            .collect())
    };
    let classifier = LinearModel::train(&features(&train_set)?, &train_targets, &config.classifier)?;
    Ok((classifier.accuracy(&features(&test_set)?, &test_targets), model.depth()))
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut is_test = vec![false; n];
    test.iter().for_each(|&i| is_test[i] = true);
    (0..n).filter(|&i| !is_test[i]).collect()
}

/// Stack seed for fold `fold` (and inner fold `inner`, if any).
fn fold_config(config: &StackConfig, master: u64, path: &[u64]) -> StackConfig {
    StackConfig {
        seed: derive_seed(master, "fold", path),
        ..config.clone()
    }
}

/// Index of the largest mean; ties go to the earlier grid point.
fn best_index(means: &[f64]) -> usize {
    let mut best = 0;
    for (i, &m) in means.iter().enumerate() {
        if m > means[best] {
            best = i;
        }
    }
    best
}

/// Ten stratified folds over `dataset`, deterministic in `seed`.
pub fn outer_folds(dataset: &GraphDataset, seed: u64) -> Result<Vec<Vec<usize>>> {
    let targets = dataset
        .targets()
        .ok_or_else(|| Error::InvalidData("cross-validation needs a labeled dataset".into()))?;
    stratified_folds(&targets, 10, derive_seed(seed, "folds", &[]))
}

pub fn cross_validate(dataset: &GraphDataset, grid: &[StackConfig], scheme: CvScheme, seed: u64) -> Result<CvReport> {
    if grid.is_empty() {
        return Err(Error::Config("empty configuration grid".into()));
    }
    dataset.check()?;
    let folds = outer_folds(dataset, seed)?;
    let n = dataset.len();

    let results = match scheme {
        CvScheme::TenFold => {
            let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..folds.len()).map(move |f| (g, f))).collect();
            let outcomes = jobs
                .par_iter()
                .map(|&(g, f)| {
                    let cfg = fold_config(&grid[g], seed, &[f as u64]);
                    evaluate_split(dataset, &complement(n, &folds[f]), &folds[f], &cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            let k = folds.len();
            let means: Vec<f64> = outcomes
                .chunks(k)
                .map(|c| c.iter().map(|(a, _)| a).sum::<f64>() / k as f64)
                .collect();
            let g = best_index(&means);
            outcomes[g * k..(g + 1) * k]
                .iter()
                .map(|&(accuracy, depth)| FoldResult {
                    accuracy,
                    depth,
                    config: g,
                })
                .collect()
        }
        CvScheme::Nested => (0..folds.len())
            .into_par_iter()
            .map(|f| {
                let train = complement(n, &folds[f]);
                let inner_set = dataset.subset(&train);
                let inner_targets = inner_set.targets().expect("checked by outer_folds");
                let inner = stratified_folds(&inner_targets, 5, derive_seed(seed, "inner-folds", &[f as u64]))?;
                let m = inner_set.len();
                let means = grid
                    .par_iter()
                    .map(|cfg| {
                        let mut total = 0.0;
                        for (i, test) in inner.iter().enumerate() {
                            let c = fold_config(cfg, seed, &[f as u64, i as u64]);
                            total += evaluate_split(&inner_set, &complement(m, test), test, &c)?.0;
                        }
                        Ok(total / inner.len() as f64)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let g = best_index(&means);
                let cfg = fold_config(&grid[g], seed, &[f as u64]);
                let (accuracy, depth) = evaluate_split(dataset, &train, &folds[f], &cfg)?;
                Ok(FoldResult {
                    accuracy,
                    depth,
                    config: g,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(CvReport::new(scheme, folds, results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_format() {
        let results = [0.8, 1.0]
            .iter()
            .map(|&accuracy| FoldResult {
                accuracy,
                depth: 1,
                config: 0,
            })
            .collect();
        let r = CvReport::new(CvScheme::TenFold, vec![], results);
        assert_eq!(r.to_string(), "90.00 (10.00)");
    }

    #[test]
    fn complement_and_ties() {
        assert_eq!(complement(5, &[1, 3]), vec![0, 2, 4]);
        assert_eq!(best_index(&[0.5, 0.7, 0.7]), 1);
    }
}
