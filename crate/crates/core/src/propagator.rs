//! Crank-Nicolson integration of the time-dependent Schrodinger equation on
//! the truncated chain.
//!
//! Each step solves `(1 + i h H/2) psi' = (1 - i h H/2) psi` with the
//! first-link coupling evaluated at the step midpoint. The Cayley factor is
//! unitary for real symmetric `H`, so the norm only drifts through rounding.
//! `H` is tridiagonal with zero diagonal, and the linear solve is a Thomas
//! sweep whose forward elimination is reused while the coupling is constant.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChainTrajectory, SwitchingProfile};

/// Probability allowed in the last ten sites before the run is declared
/// truncated.
pub const BOUNDARY_TOLERANCE: f64 = 1e-20;
const BOUNDARY_SITES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub step: f64,
    pub t_max: f64,
    pub output_stride: usize,
    pub norm_tolerance: f64,
    /// Chain length; `None` picks `ceil(2.5 t_max) + 64` plus the initial support.
    pub n_sites: Option<usize>,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            t_max: 50.0,
            output_stride: 100,
            norm_tolerance: 1e-9,
            n_sites: None,
        }
    }
}

impl PropagatorConfig {
    pub fn with_t_max(t_max: f64) -> Self {
        Self {
            t_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.step
            )));
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_max must be finite and non-negative, got {}",
                self.t_max
            )));
        }
        if self.output_stride == 0 {
            return Err(Error::InvalidParameter("output stride must be >= 1".into()));
        }
        if !(self.norm_tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "norm tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Chain length used for an initial state supported on `support` sites.
    pub fn sites_for(&self, support: usize) -> usize {
        self.n_sites
            .unwrap_or_else(|| (2.5 * self.t_max).ceil() as usize + 64 + support)
            .max(support + BOUNDARY_SITES + 2)
    }
}

/// Forward-eliminated Cayley system for one value of the first-link coupling.
struct CayleySolver {
    delta: f64,
    // off-diagonal of i h H / 2
    off: Vec<Complex64>,
    // modified superdiagonal and inverse pivots of the Thomas sweep
    c_prime: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
}

impl CayleySolver {
    fn new(n: usize, h: f64, delta: f64) -> Self {
        let half = Complex64::new(0.0, 0.5 * h);
        let off: Vec<Complex64> = (0..n - 1)
            .map(|i| half * if i == 0 { -delta } else { -1.0 })
            .collect();
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        let one = Complex64::new(1.0, 0.0);
        inv_pivot[0] = one;
        c_prime[0] = off[0];
        for i in 1..n {
            let pivot = one - off[i - 1] * c_prime[i - 1];
            inv_pivot[i] = pivot.inv();
            if i < n - 1 {
                c_prime[i] = off[i] * inv_pivot[i];
            }
        }
        Self {
            delta,
            off,
            c_prime,
            inv_pivot,
        }
    }

    /// Advances `psi` by one step in place, using `rhs` as scratch.
    fn step(&self, psi: &mut [Complex64], rhs: &mut [Complex64]) {
        let n = psi.len();
        let off = &self.off;
        // rhs = (1 - i h H/2) psi
        rhs[0] = psi[0] - off[0] * psi[1];
        for i in 1..n - 1 {
            rhs[i] = psi[i] - off[i - 1] * psi[i - 1] - off[i] * psi[i + 1];
        }
        rhs[n - 1] = psi[n - 1] - off[n - 2] * psi[n - 2];
        // forward substitution
        psi[0] = rhs[0] * self.inv_pivot[0];
        for i in 1..n {
            psi[i] = (rhs[i] - off[i - 1] * psi[i - 1]) * self.inv_pivot[i];
        }
        // back substitution
        for i in (0..n - 1).rev() {
            let next = psi[i + 1];
            psi[i] -= self.c_prime[i] * next;
        }
    }
}

/// Time-stepping driver for a fixed configuration.
#[derive(Debug, Clone, Copy)]
pub struct Propagator {
    config: PropagatorConfig,
}

impl Propagator {
    pub fn new(config: PropagatorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.config
    }

    /// Integrates from `t = 0` to `t_max`, emitting a sample every
    /// `output_stride` steps. The switching interval is covered by an integer
    /// number of steps so that `t = T` is always sampled exactly.
    pub fn run(&self, initial: &[Complex64], profile: &SwitchingProfile) -> Result<ChainTrajectory> {
        let mut times = Vec::new();
        let mut amplitudes = Vec::new();
        let n_sites = self.observe(initial, profile, |t, psi| {
            times.push(t);
            amplitudes.push(psi.to_vec());
        })?;
        Ok(ChainTrajectory {
            n_sites,
            times,
            amplitudes,
            rise_time: profile.rise_time(),
        })
    }

    /// Same time grid as [`Propagator::run`], but hands each sampled state to
    /// `sample` instead of storing it. Returns the chain length.
    pub fn observe(
        &self,
        initial: &[Complex64],
        profile: &SwitchingProfile,
        mut sample: impl FnMut(f64, &[Complex64]),
    ) -> Result<usize> {
        let cfg = &self.config;
        let mut psi = self.prepare(initial)?;
        let n = psi.len();
        sample(0.0, &psi);
        let mut emit = |t: f64, psi: &[Complex64]| -> Result<()> {
            self.check_state(t, psi)?;
            sample(t, psi);
            Ok(())
        };

        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        let mut solver: Option<CayleySolver> = None;

        let ramp_end = profile.rise_time().min(cfg.t_max);
        let (ramp_steps, ramp_h) = Self::split(ramp_end, cfg.step);
        for k in 0..ramp_steps {
            let mid = (k as f64 + 0.5) * ramp_h;
            let d = profile.value_at(mid)?;
            let s = Self::solver_for(&mut solver, n, ramp_h, d);
            s.step(&mut psi, &mut rhs);
            if (k + 1) % cfg.output_stride == 0 || k + 1 == ramp_steps {
                emit((k + 1) as f64 * ramp_h, &psi)?;
            }
        }

        let (plateau_steps, plateau_h) = Self::split(cfg.t_max - ramp_end, cfg.step);
        let d = profile.final_delta();
        solver = None;
        for k in 0..plateau_steps {
            let s = Self::solver_for(&mut solver, n, plateau_h, d);
            s.step(&mut psi, &mut rhs);
            if (k + 1) % cfg.output_stride == 0 || k + 1 == plateau_steps {
                let t = if k + 1 == plateau_steps {
                    cfg.t_max
                } else {
                    ramp_end + (k + 1) as f64 * plateau_h
                };
                emit(t, &psi)?;
            }
        }
        Ok(n)
    }

    /// State at `t_end` without recording a trajectory.
    pub fn evolve_to(
        &self,
        initial: &[Complex64],
        profile: &SwitchingProfile,
        t_end: f64,
    ) -> Result<Vec<Complex64>> {
        let cfg = PropagatorConfig {
            t_max: t_end,
            output_stride: usize::MAX,
            ..self.config
        };
        let mut psi = Propagator::new(cfg)?.prepare(initial)?;
        let n = psi.len();
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        let mut solver: Option<CayleySolver> = None;
        let ramp_end = profile.rise_time().min(t_end);
        let (ramp_steps, ramp_h) = Self::split(ramp_end, cfg.step);
        for k in 0..ramp_steps {
            let d = profile.value_at((k as f64 + 0.5) * ramp_h)?;
            Self::solver_for(&mut solver, n, ramp_h, d).step(&mut psi, &mut rhs);
        }
        let (plateau_steps, plateau_h) = Self::split(t_end - ramp_end, cfg.step);
        solver = None;
        for _ in 0..plateau_steps {
            Self::solver_for(&mut solver, n, plateau_h, profile.final_delta())
                .step(&mut psi, &mut rhs);
        }
        self.check_state(t_end, &psi)?;
        Ok(psi)
    }

    fn split(span: f64, step: f64) -> (usize, f64) {
        if span <= 0.0 {
            return (0, step);
        }
        let steps = (span / step - 1e-9).ceil().max(1.0) as usize;
        (steps, span / steps as f64)
    }

    fn solver_for(slot: &mut Option<CayleySolver>, n: usize, h: f64, delta: f64) -> &CayleySolver {
        if slot.as_ref().is_none_or(|s| s.delta != delta) {
            *slot = Some(CayleySolver::new(n, h, delta));
        }
        slot.as_ref().unwrap()
    }

    fn prepare(&self, initial: &[Complex64]) -> Result<Vec<Complex64>> {
        if initial.is_empty() {
            return Err(Error::Dimension("initial state is empty".into()));
        }
        let norm: f64 = initial.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "initial state must be normalized, sum |c|^2 = {norm}"
            )));
        }
        let support = initial
            .iter()
            .rposition(|c| c.norm() > 0.0)
            .map_or(1, |i| i + 1);
        let n = self.config.sites_for(support);
        if initial.len() > n {
            return Err(Error::Dimension(format!(
                "initial state has {} sites, chain has {n}",
                initial.len()
            )));
        }
        let mut psi = vec![Complex64::new(0.0, 0.0); n];
        psi[..initial.len()].copy_from_slice(initial);
        Ok(psi)
    }

    fn check_state(&self, t: f64, psi: &[Complex64]) -> Result<()> {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        let drift = (norm - 1.0).abs();
        if drift > self.config.norm_tolerance {
            return Err(Error::IntegrationFailure {
                time: t,
                drift,
                tolerance: self.config.norm_tolerance,
            });
        }
        let tail: f64 = psi[psi.len() - BOUNDARY_SITES..]
            .iter()
            .map(|c| c.norm_sqr())
            .sum();
        if tail > BOUNDARY_TOLERANCE {
            return Err(Error::Truncation {
                what: format!(
                    "wavefront reached the last {BOUNDARY_SITES} of {} sites at t = {t}",
                    psi.len()
                ),
                bound: tail,
            });
        }
        Ok(())
    }
}

/// Unit occupation of site `q` on its own, padded by the propagator.
pub fn site_state(q: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); q.max(1)];
    v[q.max(1) - 1] = Complex64::new(1.0, 0.0);
    v
}

/// `(t, |c_1(t)|^2)` for every sample of `traj`.
pub fn survival_probability(traj: &ChainTrajectory) -> Vec<(f64, f64)> {
    traj.survival_probability()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply_hamiltonian, ModelParams};

    #[test]
    fn decoupled_site_is_stationary() {
        let prop = Propagator::new(PropagatorConfig::with_t_max(5.0)).unwrap();
        let traj = prop.run(&site_state(1), &SwitchingProfile::decoupled()).unwrap();
        for c in &traj.amplitudes {
            assert!((c[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            assert!(c[1..].iter().all(|a| a.norm() == 0.0));
        }
    }

    #[test]
    fn survival_starts_at_initial_occupation() {
        let p = ModelParams::new(0.3).unwrap();
        let prop = Propagator::new(PropagatorConfig::with_t_max(1.0)).unwrap();
        let traj = prop.run(&site_state(1), &SwitchingProfile::sudden(&p)).unwrap();
        assert_eq!(survival_probability(&traj)[0], (0.0, 1.0));
        let traj = prop.run(&site_state(2), &SwitchingProfile::sudden(&p)).unwrap();
        assert_eq!(survival_probability(&traj)[0], (0.0, 0.0));
    }

    #[test]
    fn one_step_matches_cayley_definition() {
        // residual of (1 + ihH/2) psi' - (1 - ihH/2) psi
        let init: Vec<Complex64> = (0..16)
            .map(|i| Complex64::new((i as f64 * 0.3).cos(), (i as f64 * 0.7).sin()) / 2.85)
            .collect();
        let mut psi = init.clone();
        let mut scratch = vec![Complex64::new(0.0, 0.0); 16];
        CayleySolver::new(16, 0.05, 0.4).step(&mut psi, &mut scratch);
        let ih2 = Complex64::new(0.0, 0.025);
        let lhs: Vec<Complex64> = apply_hamiltonian(&psi, 0.4)
            .unwrap()
            .iter()
            .zip(&psi)
            .map(|(hp, p)| p + ih2 * hp)
            .collect();
        let rhs: Vec<Complex64> = apply_hamiltonian(&init, 0.4)
            .unwrap()
            .iter()
            .zip(&init)
            .map(|(hp, p)| p - ih2 * hp)
            .collect();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_config_and_state() {
        assert!(Propagator::new(PropagatorConfig {
            step: 0.0,
            ..Default::default()
        })
        .is_err());
        let prop = Propagator::new(PropagatorConfig::with_t_max(1.0)).unwrap();
        let p = ModelParams::new(0.3).unwrap();
        let bad = vec![Complex64::new(0.5, 0.0)];
        assert!(prop.run(&bad, &SwitchingProfile::sudden(&p)).is_err());
    }

    #[test]
    fn boundary_contact_is_reported() {
        let p = ModelParams::new(0.9).unwrap();
        let cfg = PropagatorConfig {
            t_max: 20.0,
            n_sites: Some(20),
            ..Default::default()
        };
        let prop = Propagator::new(cfg).unwrap();
        let err = prop.run(&site_state(1), &SwitchingProfile::sudden(&p)).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn rise_time_is_sampled_exactly() {
        let p = ModelParams::new(0.3).unwrap();
        let prof = SwitchingProfile::linear(&p, 0.7777).unwrap();
        let prop = Propagator::new(PropagatorConfig::with_t_max(2.0)).unwrap();
        let traj = prop.run(&site_state(1), &prof).unwrap();
        assert!(traj.times.iter().any(|&t| (t - 0.7777).abs() < 1e-14));
        assert!((traj.times.last().unwrap() - 2.0).abs() < 1e-9);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn observe_sees_the_run_samples() {
        let p = ModelParams::new(0.5).unwrap();
        let prof = SwitchingProfile::linear(&p, 1.3).unwrap();
        let prop = Propagator::new(PropagatorConfig {
            output_stride: 37,
            ..PropagatorConfig::with_t_max(4.0)
        })
        .unwrap();
        let traj = prop.run(&site_state(2), &prof).unwrap();
        let mut seen = Vec::new();
        let n = prop
            .observe(&site_state(2), &prof, |t, psi| seen.push((t, psi[0], psi[1])))
            .unwrap();
        assert_eq!(n, traj.n_sites);
        assert_eq!(seen.len(), traj.len());
        for (i, &(t, c1, c2)) in seen.iter().enumerate() {
            assert_eq!(t, traj.times[i]);
            assert_eq!(c1, traj.amplitudes[i][0]);
            assert_eq!(c2, traj.amplitudes[i][1]);
        }
    }
}
