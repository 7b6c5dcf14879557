//! Internal gravity waves in a constant-N stratified tank, described by a
//! truncated vertical mode expansion whose horizontal amplitudes obey a
//! coupled Korteweg-de Vries (cKdV) system.
//!
//! The pipeline is:
//!
//! 1. [`modal_basis`]: closed-form vertical eigenfunctions `Z^n(z)`, phase
//!    speeds `c_n` and the `N²`-weighted inner product.
//! 2. [`coeff_engine`]: nonlinear tensor `g^n_{m,k}` and dispersion `d_n`,
//!    by quadrature and by triple-sine identities.
//! 3. [`scenario`]: paddle-style initial condition projected on the basis.
//! 4. [`solver`]: two-stage (half-step) finite-difference integrator, plus
//!    the one-stage forward scheme used for comparison.
//! 5. [`field`]: reconstruction of the stream function `ψ(z, x, t)`.
//! 6. [`verify`]: exact-solution oracles, convergence fits, conservation
//!    audits, stability probes and soliton counting.

// `!(x > 0.0)` reads as "not positive, or NaN".
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeff_engine;
pub mod error;
pub mod field;
pub mod io;
pub mod modal_basis;
pub mod quadrature;
pub mod scenario;
pub mod solver;
pub mod verify;

pub use coeff_engine::{CoefficientMethod, CoefficientSet};
pub use error::{Error, Result};
pub use field::FieldSnapshot;
pub use modal_basis::{ModeBasis, Stratification};
pub use scenario::ScenarioConfig;
pub use solver::{Grid, ModeState, RunReport, Scheme, SchemeParams};
