//! Normalised Kloosterman sums modulo prime powers, their paths, the random
//! Fourier series that models them, and the statistics used to compare the two.

pub mod error;
pub mod io;
pub mod kloosterman;
pub mod modular;
pub mod random_series;
pub mod report;
pub mod statistics;
pub mod summation;
pub mod verify;

pub use error::{Error, Result};
pub use kloosterman::{kl_closed, kl_complete, kl_naive, path_eval, KloostermanParams, KloostermanPath};
pub use modular::{PrimePowerModulus, Residue};
pub use random_series::{MuDistribution, SeriesVariate};
pub use report::ExperimentReport;
