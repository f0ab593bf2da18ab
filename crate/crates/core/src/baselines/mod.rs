//! Conventional subsamplers and filter/sensitivity feature rankings to
//! compare the wrapper selection against.

pub mod filter;
pub mod fqi;
pub mod pca;
pub mod subsample;

pub use filter::{
    filter_scores, fisher_feature_scores, laplacian_feature_scores, FeatureScoreTable,
    FilterMethod, LAPLACIAN_KNN, LAPLACIAN_MAX_FRAMES,
};
pub use fqi::{fqi_indices, fqi_scores};
pub use pca::{pcs_indices, PcaModel};
pub use subsample::{magnitude_indices, random_indices, top_k, uniform_indices};
