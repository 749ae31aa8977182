//! Graph classification on top of fingerprints.

pub mod cv;
pub mod kernel;
pub mod linear;
pub mod split;

pub use cv::{cross_validate, evaluate_split, outer_folds, CvReport, CvScheme, FoldResult};
pub use kernel::{export_kernel_matrix, jaccard_kernel, rbf_kernel, KernelKind, KernelMatrix};
pub use linear::{logistic_objective, LinearConfig, LinearModel};
pub use split::{stratified_folds, stratified_holdout, HoldoutSplit};
