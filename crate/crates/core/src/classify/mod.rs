//! Multigroup classification: labeled data, scatter operators,
//! regularization, the LDA decision rule and cross-validation.

mod cv;
mod dataset;
mod lda;
mod scatter;

pub use cv::{
    cross_validate, evaluate_split, mean_sd, run_method, stratified_folds, FitOptions, FoldOutcome, Method,
    Projection,
};
pub use dataset::{synth_ortner, LabelSource, LabeledDataset};
pub use lda::LdaModel;
pub use scatter::{regularized_pencil, ScatterModel};
