//! Wrapper selection of sample positions: z-scoring so that zeroing a
//! position equals replacing it with its training mean, greedy removal
//! ranking with one ranker, and a three-ranker tiered ensemble.

pub mod holistic;
pub mod removal;
pub mod standardize;
pub mod subnet;

pub use holistic::{holistic_ranking, holistic_select, tier_divide, HolisticRanking, TierTable};
pub use removal::{removal_scores, RemovalScore};
pub use standardize::{standardize, StandardizeStats, STD_FLOOR};
pub use subnet::{subsampler_net, SelectionResult, SelectionStep};
