use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifact::{ArtifactBundle, Cell, Comparison, Table};
use super::config::{ExperimentConfig, ToleranceProfile};
use crate::error::{Error, Result};
use crate::fit::{fit_exponential_rate, fit_oscillation, fit_powerlaw_envelope};
use crate::model::{ChainTrajectory, HandoffState, ModelParams, SwitchingProfile};
use crate::perturbation::{
    appendix_identities, count_diagrams_bruteforce, count_diagrams_formula, memory_sums_closed_form,
    memory_sums_series,
};
use crate::propagator::{site_state, Propagator, PropagatorConfig};
use crate::regimes::{asymptotic_valid, RegimeAnsatz};
use crate::series::ExactSolution;

/// Declared tolerances for each kind of comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Propagator against the exact series, per amplitude.
    pub engine_amplitude: f64,
    /// Regime ansatz against the exact series in the asymptotic range.
    pub ansatz_amplitude: f64,
    /// Relative error of a fitted decay rate.
    pub rate_relative: f64,
    /// Absolute error of a fitted phase.
    pub phase: f64,
    /// Relative error of an envelope or modulation factor.
    pub envelope_relative: f64,
    /// Memory sums against their first-order closed forms, in units of `Delta^2`.
    pub memory_sum: f64,
    /// RMS of `ln P - ln |c_1^(e)|^2` in the exponential window.
    pub log_rms: f64,
    /// Double series against closed forms.
    pub series_identity: f64,
}

impl ToleranceProfile {
    pub fn tolerances(self) -> Tolerances {
        match self {
            ToleranceProfile::Strict => Tolerances {
                engine_amplitude: 1e-6,
                ansatz_amplitude: 1e-4,
                rate_relative: 0.01,
                phase: 0.02,
                envelope_relative: 0.01,
                memory_sum: 0.25,
                log_rms: 0.05,
                series_identity: 1e-12,
            },
            ToleranceProfile::Figure => Tolerances {
                engine_amplitude: 1e-4,
                ansatz_amplitude: 1e-3,
                rate_relative: 0.02,
                phase: 0.05,
                envelope_relative: 0.05,
                memory_sum: 0.5,
                log_rms: 0.1,
                series_identity: 1e-12,
            },
        }
    }
}

/// State at the end of the switching interval.
///
/// A sudden switch hands off the initial site unchanged; otherwise the
/// propagator is run across the rise interval.
pub fn handoff_state(
    profile: &SwitchingProfile,
    initial_site: usize,
    propagator: &PropagatorConfig,
) -> Result<HandoffState> {
    let rise = profile.rise_time();
    if rise == 0.0 {
        return HandoffState::site(initial_site);
    }
    let cfg = PropagatorConfig {
        t_max: rise,
        ..*propagator
    };
    let psi = Propagator::new(cfg)?.evolve_to(&site_state(initial_site), profile, rise)?;
    HandoffState::new(psi)
}

pub(crate) fn trajectory(cfg: &ExperimentConfig, profile: &SwitchingProfile) -> Result<ChainTrajectory> {
    Propagator::new(cfg.propagator_config())?.run(&site_state(cfg.initial_site), profile)
}

/// `(t - T, P_1)` for samples at or after the rise time.
pub(crate) fn shifted_survival(traj: &ChainTrajectory) -> Vec<(f64, f64)> {
    let rise = traj.rise_time;
    traj.survival_probability()
        .into_iter()
        .filter(|&(t, _)| t >= rise)
        .map(|(t, p)| (t - rise, p))
        .collect()
}

fn shift(window: [f64; 2], rise: f64) -> (f64, f64) {
    (window[0] - rise, window[1] - rise)
}

fn describe(bundle: &mut ArtifactBundle, cfg: &ExperimentConfig, params: &ModelParams, profile: &SwitchingProfile) {
    bundle.meta("delta", params.delta());
    bundle.meta("profile", &cfg.profile);
    bundle.meta("rise_time", profile.rise_time());
    bundle.meta("initial_site", cfg.initial_site);
    bundle.meta("t_max", cfg.t_max);
    bundle.meta("step", cfg.step);
    bundle.meta("output_stride", cfg.output_stride);
    bundle.meta("gamma", params.gamma());
    bundle.meta("lifetime", params.lifetime());
    bundle.meta("tolerance_profile", format!("{:?}", cfg.tolerance_profile).to_lowercase());
}

/// Propagates the configured state, tabulates site probabilities and runs
/// whichever fits have windows configured.
pub fn run_propagate(cfg: &ExperimentConfig) -> Result<ArtifactBundle> {
    cfg.validate()?;
    let params = cfg.params()?;
    let profile = cfg.switching_profile()?;
    let tol = cfg.tolerance_profile.tolerances();
    let traj = trajectory(cfg, &profile)?;
    let mut bundle = ArtifactBundle::new("propagate");
    describe(&mut bundle, cfg, &params, &profile);

    let sites = cfg.sites.min(traj.n_sites);
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=sites).map(|n| format!("p{n}")));
    cols.push("norm".into());
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut table = Table::new("trajectory", &col_refs);
    let mut drift = Vec::with_capacity(traj.len());
    for (i, &t) in traj.times.iter().enumerate() {
        let mut row = vec![t];
        row.extend(traj.amplitudes[i][..sites].iter().map(|c| c.norm_sqr()));
        let norm = traj.norm_at(i);
        row.push(norm);
        drift.push((norm - 1.0).abs());
        table.push_nums(&row);
    }
    bundle.tables.push(table);
    bundle
        .comparisons
        .push(Comparison::from_deviations("norm-drift", &drift, cfg.norm_tolerance));

    add_window_fits(&mut bundle, cfg, &params, &traj, &tol)?;
    Ok(bundle)
}

fn add_window_fits(
    bundle: &mut ArtifactBundle,
    cfg: &ExperimentConfig,
    params: &ModelParams,
    traj: &ChainTrajectory,
    tol: &Tolerances,
) -> Result<()> {
    let survival = traj.survival_probability();
    let shifted = shifted_survival(traj);
    let rise = traj.rise_time;
    if let Some(w) = cfg.exponential_window {
        let f = fit_exponential_rate(&survival, (w[0], w[1]))?;
        bundle.comparisons.push(Comparison::scalar(
            "exponential-rate",
            (f.value - params.gamma()) / params.gamma(),
            tol.rate_relative,
        ));
        bundle.fit("exponential-rate", f);
    }
    if let Some(w) = cfg.powerlaw_window {
        bundle.fit("powerlaw-slope", fit_powerlaw_envelope(&shifted, shift(w, rise))?);
    }
    if let Some(w) = cfg.oscillation_window {
        let f = fit_oscillation(&shifted, shift(w, rise), -FRAC_PI_4)?;
        bundle.fit("node-phase", f.phase);
        bundle.fit("node-spacing", f.spacing);
    }
    Ok(())
}

/// Exact series from the handoff state, compared with the propagator.
pub fn run_analytic(cfg: &ExperimentConfig) -> Result<ArtifactBundle> {
    cfg.validate()?;
    let params = cfg.params()?;
    let profile = cfg.switching_profile()?;
    let tol = cfg.tolerance_profile.tolerances();
    let pcfg = cfg.propagator_config();
    let handoff = handoff_state(&profile, cfg.initial_site, &pcfg)?;
    let exact = ExactSolution::new(&handoff, &params)?;
    let traj = trajectory(cfg, &profile)?;
    let rise = profile.rise_time();

    let mut bundle = ArtifactBundle::new("analytic");
    describe(&mut bundle, cfg, &params, &profile);
    bundle.meta("fourier_terms", exact.coefficients().len());
    let sites = cfg.sites;
    let mut cols = vec!["t".to_string()];
    for n in 1..=sites {
        cols.push(format!("p{n}_exact"));
        cols.push(format!("p{n}_tdse"));
    }
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut table = Table::new("amplitudes", &col_refs);
    let mut devs = Vec::new();
    for (i, &t) in traj.times.iter().enumerate() {
        if t < rise {
            continue;
        }
        let c = exact.amplitudes(sites, t - rise)?;
        let mut row = vec![t];
        for (n, &cx) in c.iter().enumerate() {
            let tdse = traj.amplitudes[i].get(n).copied().unwrap_or_default();
            row.push(cx.norm_sqr());
            row.push(tdse.norm_sqr());
            devs.push((cx - tdse).norm());
        }
        table.push_nums(&row);
    }
    bundle.tables.push(table);
    bundle.comparisons.push(Comparison::from_deviations(
        "exact-vs-tdse-amplitude",
        &devs,
        tol.engine_amplitude,
    ));
    Ok(bundle)
}

/// Regime decomposition of the survival amplitude: asymptotic sums, pole
/// coefficient, and the two components against the exact series.
pub fn run_regimes(cfg: &ExperimentConfig) -> Result<ArtifactBundle> {
    cfg.validate()?;
    let params = cfg.params()?;
    let profile = cfg.switching_profile()?;
    let tol = cfg.tolerance_profile.tolerances();
    let handoff = handoff_state(&profile, cfg.initial_site, &cfg.propagator_config())?;
    let mut bundle = ArtifactBundle::new("regimes");
    describe(&mut bundle, cfg, &params, &profile);
    let table = regime_table(&mut bundle, &handoff, &params, &profile, cfg, &tol, "regimes")?;
    bundle.tables.push(table);
    Ok(bundle)
}

/// Tabulates `P_1` from the exact series together with the exponential,
/// asymptotic and combined regime forms on the output grid, and records the
/// ansatz-vs-exact comparison over the range where the asymptotic form holds.
pub(crate) fn regime_table(
    bundle: &mut ArtifactBundle,
    handoff: &HandoffState,
    params: &ModelParams,
    profile: &SwitchingProfile,
    cfg: &ExperimentConfig,
    tol: &Tolerances,
    name: &str,
) -> Result<Table> {
    let ansatz = RegimeAnsatz::new(handoff, params)?;
    let exact = ExactSolution::new(handoff, params)?;
    let a = &ansatz.asymptotic;
    bundle.meta("s_odd", a.s_odd);
    bundle.meta("s_even", a.s_even);
    bundle.meta("asymptotic_amplitude", a.amplitude);
    bundle.meta("asymptotic_phase", a.phase);
    bundle.meta("phase_structured", a.phase_structured);
    bundle.meta("pole_coefficient_site1", ansatz.exponential.coefficient(1));
    bundle.meta("pole_rate", ansatz.exponential.rate);

    let rise = profile.rise_time();
    let dt = cfg.step * cfg.output_stride as f64;
    let samples = ((cfg.t_max - rise) / dt).floor() as usize;
    let mut table = Table::new(
        name,
        &["t", "p1_exact", "p1_exponential", "p1_asymptotic", "p1_ansatz"],
    );
    let mut devs = Vec::new();
    for k in 0..=samples {
        let tt = k as f64 * dt;
        let ce = ansatz.exponential.amplitude(1, tt);
        let (ca, cs) = if tt > 0.0 {
            let ca = crate::regimes::asymptotic_amplitude(a, 1, tt)?;
            (ca, ce + ca)
        } else {
            (Complex64::new(f64::NAN, 0.0), Complex64::new(f64::NAN, 0.0))
        };
        let cx = exact.amplitude(1, tt)?;
        if tt >= 10.0 && asymptotic_valid(1, tt) {
            devs.push((cs - cx).norm());
        }
        table.push_nums(&[tt + rise, cx.norm_sqr(), ce.norm_sqr(), ca.norm_sqr(), cs.norm_sqr()]);
    }
    bundle.comparisons.push(Comparison::from_deviations(
        "ansatz-vs-exact-amplitude",
        &devs,
        tol.ansatz_amplitude,
    ));
    Ok(table)
}

/// Walk counts from the closed formula against direct enumeration for every
/// diagram of at most `max_lines` lines.
pub fn run_diagrams(max_lines: u32) -> Result<ArtifactBundle> {
    let mut bundle = ArtifactBundle::new("diagrams");
    bundle.meta("max_lines", max_lines);
    let mut table = Table::new("diagrams", &["lines", "end_site", "formula", "enumerated", "agree"]);
    let mut devs = Vec::new();
    for m in 0..=max_lines {
        for n in 1..=m + 1 {
            if (m + 1 - n) % 2 != 0 {
                continue;
            }
            let l = (m + 1 - n) / 2;
            let f = count_diagrams_formula(n, l)?;
            let b = count_diagrams_bruteforce(n, m)?;
            let agree = f.count == b.count;
            devs.push(if agree { 0.0 } else { 1.0 });
            table.push(vec![
                Cell::from(m as usize),
                Cell::from(n as usize),
                Cell::from(f.count.to_string()),
                Cell::from(b.count.to_string()),
                Cell::from(agree as usize),
            ]);
        }
    }
    bundle.tables.push(table);
    bundle
        .comparisons
        .push(Comparison::from_deviations("formula-vs-enumeration", &devs, 0.0));
    Ok(bundle)
}

/// Exact rational identities up to `k_max`, and the memory double series
/// against their closed forms.
pub fn run_identities(k_max: u32, delta: f64) -> Result<ArtifactBundle> {
    let params = ModelParams::new(delta)?;
    let mut bundle = ArtifactBundle::new("identities");
    bundle.meta("k_max", k_max);
    bundle.meta("delta", delta);
    let report = appendix_identities(k_max)?;
    let mut table = Table::new("identities", &["identity", "k", "lhs", "rhs", "holds"]);
    for c in &report.checks {
        table.push(vec![
            Cell::from(c.identity.as_str()),
            Cell::from(c.k as usize),
            Cell::from(c.lhs.as_str()),
            Cell::from(c.rhs.as_str()),
            Cell::from(c.holds as usize),
        ]);
    }
    bundle.tables.push(table);
    let failures: Vec<f64> = report.checks.iter().map(|c| if c.holds { 0.0 } else { 1.0 }).collect();
    bundle
        .comparisons
        .push(Comparison::from_deviations("rational-identities", &failures, 0.0));

    let tol = ToleranceProfile::Strict.tolerances().series_identity;
    let mut series = Table::new(
        "memory_series",
        &["rise_time", "s_odd_series", "s_odd_closed", "s_even_im_series", "s_even_im_closed"],
    );
    let mut devs = Vec::new();
    for &rise in &[0.1, 0.5, 1.0, 2.0, std::f64::consts::PI] {
        let s = memory_sums_series(rise, &params, 60)?;
        let c = memory_sums_closed_form(rise, &params)?;
        devs.push((s.s_odd - c.s_odd).abs());
        devs.push((s.s_even - c.s_even).norm());
        series.push_nums(&[rise, s.s_odd, c.s_odd, s.s_even.im, c.s_even.im]);
    }
    bundle.tables.push(series);
    bundle
        .comparisons
        .push(Comparison::from_deviations("memory-series-vs-closed", &devs, tol));
    Ok(bundle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Delta,
    RiseTime,
    InitialSite,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(Self::Delta),
            "rise-time" | "rise_time" => Ok(Self::RiseTime),
            "initial-site" | "initial_site" => Ok(Self::InitialSite),
            _ => Err(Error::Config(format!("unknown sweep parameter '{s}'"))),
        }
    }
}

impl SweepParam {
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        match self {
            SweepParam::Delta => cfg.delta = value,
            SweepParam::RiseTime => cfg.rise_time = value,
            SweepParam::InitialSite => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("initial site must be a positive integer, got {value}")));
                }
                cfg.initial_site = value as usize;
            }
        }
        Ok(cfg)
    }
}

/// Runs `run_propagate` at each value concurrently. Results come back in the
/// order of `values`.
pub fn sweep(base: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Vec<Result<ArtifactBundle>> {
    values
        .par_iter()
        .map(|&v| param.apply(base, v).and_then(|cfg| run_propagate(&cfg)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            t_max: 12.0,
            step: 2e-3,
            output_stride: 50,
            sites: 3,
            ..Default::default()
        }
    }

    #[test]
    fn propagate_is_deterministic() {
        let cfg = ExperimentConfig {
            exponential_window: Some([2.0, 10.0]),
            ..small()
        };
        let a = run_propagate(&cfg).unwrap();
        let b = run_propagate(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.passed());
        assert_eq!(a.tables[0].columns, ["t", "p1", "p2", "p3", "norm"]);
    }

    #[test]
    fn analytic_agrees_with_propagator() {
        let b = run_analytic(&small()).unwrap();
        let c = b.comparison("exact-vs-tdse-amplitude").unwrap();
        assert!(c.passed, "{c:?}");
        let cfg = ExperimentConfig {
            profile: super::super::config::ProfileSpec::Linear,
            rise_time: 1.5,
            ..small()
        };
        assert!(run_analytic(&cfg).unwrap().passed());
    }

    #[test]
    fn diagrams_and_identities_pass() {
        assert!(run_diagrams(12).unwrap().passed());
        assert!(run_identities(8, 0.3).unwrap().passed());
    }

    #[test]
    fn sweep_keeps_order() {
        let base = small();
        let out = sweep(&base, SweepParam::RiseTime, &[0.5, 1.0, 2.0]);
        let cfg = ExperimentConfig {
            profile: super::super::config::ProfileSpec::Linear,
            ..base.clone()
        };
        let out2 = sweep(&cfg, SweepParam::RiseTime, &[0.5, 1.0]);
        assert!(out.iter().all(|r| r.is_ok()));
        for (r, t) in out2.iter().zip([0.5, 1.0]) {
            assert_eq!(r.as_ref().unwrap().metadata["rise_time"], t.to_string());
        }
        assert!(sweep(&base, SweepParam::InitialSite, &[1.5])[0].is_err());
    }
}
