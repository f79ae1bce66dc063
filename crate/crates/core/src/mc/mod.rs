//! Monte Carlo sampling of the lattice measure and Euclidean observables.

pub mod metropolis;
pub mod observables;
pub mod stats;

pub use metropolis::{action, run_chains, Chain, ChainOutput, MCParams};
pub use observables::{
    exact_2d_wilson, expectation_wilson, mass_gap_fit, temporal_correlator, CorrelatorResult,
    MassGapResult, WilsonResult,
};
pub use stats::{jackknife, ObservableSeries};
