//! Checks of the integrator against exact and independent solutions.

pub mod conservation;
pub mod convergence;
pub mod fission;
pub mod integrable;
pub mod oracle;
pub mod stability;

pub use conservation::{conservation_audit, ConservationAudit};
pub use convergence::{ConvergenceReport, SolitonBenchmark};
pub use fission::{fission_census, CrestDetector, FissionReport, FissionSetup};
pub use integrable::{integrable_pair_check, PairReport, TravelingPair};
pub use oracle::KdvSoliton;
pub use stability::{stability_probe, StabilityReport};
