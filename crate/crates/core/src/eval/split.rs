//! Stratified splits.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Training and validation positions within some index space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldoutSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

fn by_class(targets: &[usize], seed: u64) -> BTreeMap<usize, Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &t) in targets.iter().enumerate() {
        groups.entry(t).or_default().push(i);
    }
    for members in groups.values_mut() {
        members.shuffle(&mut rng);
    }
    groups
}

/// Holds out `fraction` of every class (at least one member of any class
/// with two or more members). Index lists are sorted.
pub fn stratified_holdout(targets: &[usize], fraction: f64, seed: u64) -> HoldoutSplit {
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for members in by_class(targets, seed).into_values() {
        let mut k = (members.len() as f64 * fraction).round() as usize;
        if members.len() >= 2 {
            k = k.clamp(1, members.len() - 1);
        } else {
            k = 0;
        }
        validation.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    HoldoutSplit { train, validation }
}

/// Test indices of `k` stratified folds.
///
/// Shuffled class members are dealt round-robin, continuing the fold
/// counter across classes, so fold sizes differ by at most one.
pub fn stratified_folds(targets: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let groups = by_class(targets, seed);
    if let Some((class, members)) = groups.iter().find(|(_, m)| m.len() < k) {
        return Err(Error::TooFewSamples(format!(
            "class {class} has {} members, fewer than the {k} folds",
            members.len()
        )));
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for members in groups.into_values() {
        for i in members {
            folds[next % k].push(i);
            next += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_the_samples() {
        let targets: Vec<usize> = (0..53).map(|i| (i % 3).min(1)).collect();
        let folds = stratified_folds(&targets, 10, 4).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..53).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(folds, stratified_folds(&targets, 10, 4).unwrap());
    }

    #[test]
    fn too_few_samples_for_folds() {
        let targets = vec![0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        assert!(matches!(stratified_folds(&targets, 5, 0), Err(Error::TooFewSamples(_))));
    }

    #[test]
    fn holdout_keeps_class_ratios() {
        let targets: Vec<usize> = (0..100).map(|i| usize::from(i >= 60)).collect();
        let s = stratified_holdout(&targets, 0.2, 1);
        assert_eq!(s.validation.len(), 20);
        assert_eq!(s.validation.iter().filter(|&&i| targets[i] == 0).count(), 12);
        assert_eq!(s.train.len() + s.validation.len(), 100);
    }
}
