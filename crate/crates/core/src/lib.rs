//! Exchangeable fragmentation-coalescence processes restricted to `[n]`.
//!
//! The crate builds the finite-state chain `Π|[n]` from the characteristics
//! `(c_e, c_k, ν_Disl, ν_Coag)`, solves for its stationary law, simulates
//! paths, and runs the one-dimensional chains that describe block counts and
//! dust.


pub mod equilibrium;
pub mod measures;
pub mod par;
pub mod partition;
pub mod rates;
pub mod rng;
pub mod scalar;
pub mod simulator;


pub use measures::{Characteristics, DiscreteMeasure, RankedMasses};
pub use par::Execution;
pub use partition::{Partition, Permutation};
pub use rates::{build_generator, compatibility_gaps, Generator, RateEngine};
