//! Rank-one cutting-and-stacking constructions with stochastic or
//! primitive-root spacer sequences, exact checks of their window-sum
//! properties, and empirical mixing diagnostics on the symbolic word.

pub mod bits;
pub mod cli;
pub mod mixlab;
pub mod numtheory;
pub mod rng;
pub mod spacergen;
pub mod tower;

pub use bits::BitWord;
pub use mixlab::{LevelSet, MixReport, ParityReport, ShiftRange, TriangularLaw};
pub use numtheory::{PrimeModulus, ResidueSequence};
pub use spacergen::{DiffHistogram, PartialSumTable, SpacerScheme, SpacerSequence};
pub use tower::{ConstructionParams, PositionAddress, RankOneWord, StagePlan, StageSummary};
