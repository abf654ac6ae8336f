//! Dataset ingestion, normalization, target encoding and fold assignment.

mod csv_io;
mod dataset;
mod folds;
mod normalize;
pub mod synthetic;

pub use csv_io::{load_csv, load_features, write_csv, LabelColumn};
pub use dataset::{accuracy, argmax_rows, one_hot, Dataset};
pub use folds::{stratified_kfold, FoldPlan};
pub use normalize::{normalize, NormMethod, NormalizationParams};
