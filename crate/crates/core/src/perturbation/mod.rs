//! Time-evolution-operator perturbation theory in the first-link coupling.
//!
//! Terms of the evolution operator are drawn as nearest-neighbour walks on
//! the half-line. Their counts are closed-form binomial expressions, which
//! turn the first-order amplitudes into single power series and the
//! asymptotic sums for a linear ramp into double series with elementary
//! closed forms.

mod amplitudes;
mod diagrams;
mod identities;
mod memory;

pub use amplitudes::{perturbative_amplitude_constant, perturbative_amplitude_linear};
pub use diagrams::{
    count_diagrams_bruteforce, count_diagrams_formula, count_walks, DiagramCount,
    MAX_BRUTEFORCE_LINES,
};
pub use identities::{appendix_identities, IdentityCheck, IdentityReport};
pub use memory::{memory_asymptotic, memory_sums_closed_form, memory_sums_series, MemorySums};
