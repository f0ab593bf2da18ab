//! Deterministic epsilon-greedy tree search over sample subsets and the
//! per-SNR orchestration that widens the search until accuracy improves.

pub mod ensemble;
pub mod leaf;
pub mod plan;
pub mod tree;

pub use ensemble::{ensemble_subsample, ensemble_subsample_logged, SnrSearchLog};
pub use leaf::NeuralLeafTrainer;
pub use plan::SelectionPlan;
pub use tree::{
    epsilon_greedy, Leaf, LeafTrainer, SearchConfig, SearchOutcome, SearchResult, SearchStats,
    Searcher, DEFAULT_LEAF_BUDGET,
};
