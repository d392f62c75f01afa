//! Configured runs, figure presets and their artifact bundles.

mod artifact;
mod config;
mod presets;
mod runs;

pub use artifact::{ArtifactBundle, Cell, Comparison, NamedFit, Table};
pub use config::{
    load_custom_profile, parse_custom_profile, ExperimentConfig, OutputFormat, ProfileSpec,
    ToleranceProfile,
};
pub use presets::{
    fig3, fig5, fig6, log_residual_rms, memory_grid, memory_sum_curve, modulation_samples,
    ramp_runs, reproduce, MemoryPoint, Preset, RampRun, LATE_WINDOW, MEMORY_DELTAS, PRESET_DELTA,
    RAMP_RISE_TIMES,
};
pub use runs::{
    handoff_state, run_analytic, run_diagrams, run_identities, run_propagate, run_regimes, sweep,
    SweepParam, Tolerances,
};
