//! Ranker networks and the Gaussian naive Bayes benchmark.

pub mod arch;
pub mod gnb;
pub mod ranker;

pub use arch::ArchKind;
pub use gnb::{gnb_fit, gnb_predict, GnbModel, VARIANCE_FLOOR};
pub use ranker::{make_ranker, MaskedClassifier, NeuralRanker, RankerModel};
