//! Nonparametric ordinal classifiers: weighted nearest neighbours on interval
//! distances, random and ordinal forests, the kernel-induced ordinal forest,
//! and kernel PCA followed by POLR.

mod forest;
mod kiof;
mod kpca;
mod ordinal_forest;
mod wknn;

pub use forest::{forest_fit, ForestModel, ForestParams, Node, RegressionTree};
pub use kiof::{kernel_feature_map, KiofModel};
pub use kpca::{double_center, select_dim, KpcaModel, KpcaParams, KpcaPolr, EIGEN_FLOOR};
pub use ordinal_forest::{average_borders, bin_midpoints, class_from_score, of_fit, OfModel, OfParams, ScoreSet};
pub use wknn::{wknn_vote, WeightKernel, WknnConfig, WknnModel};
