//! Switching dynamics of a particle leaving a site coupled to a semi-infinite
//! tight-binding chain.
//!
//! Engines: a Crank–Nicolson propagator, the exact Bessel series for constant
//! coupling, asymptotic and pole-component forms, walk-counting perturbation
//! theory, and the fitting and experiment layer used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod model;
pub mod numeric;
pub mod perturbation;
pub mod propagator;
pub mod regimes;
pub mod series;

pub use error::{Error, Result};
pub use model::{
    apply_hamiltonian, ChainTrajectory, CustomProfile, HandoffState, ModelParams, ProfileKind,
    SwitchingProfile,
};
pub use num_complex::Complex64;
pub use propagator::{Propagator, PropagatorConfig};
pub use regimes::{AsymptoticForm, ExponentialForm, RegimeAnsatz};
pub use series::{ExactSolution, FourierCoefficients};
