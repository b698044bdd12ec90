//! Subsequence occurrence counts in random text: exact counting, first and
//! second moments, the Hoeffding decomposition, Monte Carlo experiments and
//! deletion-channel mutual information.

pub mod channel;
pub mod counting;
pub mod decomposition;
pub mod error;
pub mod lognum;
pub mod moments;
pub mod presets;
pub mod simulation;
pub mod source;
pub mod stats;

pub use error::{Error, Result};
pub use lognum::LogNum;
pub use source::{Alphabet, ExactDist, Pattern, SourceDist, Symbol, Text};
