//! Domain types for the defect chain: model parameters, switching profiles,
//! handoff states, trajectories, and the action of the hopping Hamiltonian.
//!
//! All quantities are dimensionless. Energies are measured in units of the
//! bulk hopping constant and times in units of its inverse.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coupling ratio of the first link and the quantities derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    delta: f64,
    alpha_sq: f64,
    alpha: f64,
}

impl ModelParams {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling ratio must lie in (0, 1), got {delta}"
            )));
        }
        let alpha_sq = 1.0 - delta * delta;
        Ok(Self {
            delta,
            alpha_sq,
            alpha: alpha_sq.sqrt(),
        })
    }

    /// Coupling ratio between the defect link and the bulk hopping.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Decoupling parameter `1 - delta^2`.
    pub fn alpha_sq(&self) -> f64 {
        self.alpha_sq
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exponential decay constant of the survival probability, `2 delta^2 / alpha`.
    pub fn gamma(&self) -> f64 {
        2.0 * self.delta * self.delta / self.alpha
    }

    /// Decay rate of the amplitudes, `(1 - alpha^2) / alpha`.
    pub fn half_gamma(&self) -> f64 {
        (1.0 - self.alpha_sq) / self.alpha
    }

    pub fn lifetime(&self) -> f64 {
        1.0 / self.gamma()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Sudden,
    Linear,
    Custom,
}

/// A tabulated switching curve, linearly interpolated between samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomProfile {
    samples: Vec<(f64, f64)>,
    average: f64,
}

impl CustomProfile {
    /// Builds a profile from `(t, value)` samples.
    ///
    /// The first sample must sit at `t = 0`, times must increase strictly, and
    /// the last sample fixes both the rise time and the plateau coupling. The
    /// declared average is checked against the trapezoid average of the table.
    pub fn new(samples: Vec<(f64, f64)>, declared_average: Option<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidProfile(
                "a custom profile needs at least two samples".into(),
            ));
        }
        if samples[0].0 != 0.0 {
            return Err(Error::InvalidProfile(
                "custom profile must start at t = 0".into(),
            ));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidProfile(
                "custom profile times must increase strictly".into(),
            ));
        }
        let plateau = samples[samples.len() - 1].1;
        if !(plateau > 0.0 && plateau < 1.0) {
            return Err(Error::InvalidProfile(format!(
                "plateau coupling must lie in (0, 1), got {plateau}"
            )));
        }
        if samples.iter().any(|&(_, v)| v < 0.0 || v > plateau) {
            return Err(Error::InvalidProfile(
                "custom profile values must stay within [0, plateau]".into(),
            ));
        }
        let rise = samples[samples.len() - 1].0;
        let area: f64 = samples
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum();
        let computed = area / rise;
        let average = match declared_average {
            Some(avg) => {
                if (avg - computed).abs() > 1e-3 * plateau {
                    return Err(Error::InvalidProfile(format!(
                        "declared average {avg} disagrees with tabulated average {computed}"
                    )));
                }
                avg
            }
            None => computed,
        };
        Ok(Self { samples, average })
    }

    /// Tabulates `delta * sin^2(pi t / 2T)` on `points` samples; its mean over
    /// the ramp is exactly half the plateau coupling.
    pub fn sine_ramp(delta: f64, rise_time: f64, points: usize) -> Result<Self> {
        if points < 2 || !(rise_time > 0.0) {
            return Err(Error::InvalidProfile(
                "sine ramp needs a positive rise time and at least two points".into(),
            ));
        }
        let samples = (0..points)
            .map(|i| {
                let t = rise_time * i as f64 / (points - 1) as f64;
                let s = (std::f64::consts::FRAC_PI_2 * t / rise_time).sin();
                (t, delta * s * s)
            })
            .collect();
        Self::new(samples, Some(0.5 * delta))
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    fn value_at(&self, t: f64) -> f64 {
        let last = self.samples[self.samples.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        let idx = self.samples.partition_point(|&(ts, _)| ts <= t);
        let (t0, v0) = self.samples[idx - 1];
        let (t1, v1) = self.samples[idx];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// Time dependence of the first-link coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SwitchingProfile {
    /// Coupling switched on instantaneously at `t = 0`.
    Sudden { delta: f64 },
    /// `delta * t / T` for `t <= T`, constant afterwards.
    Linear { delta: f64, rise_time: f64 },
    Custom(CustomProfile),
}

impl SwitchingProfile {
    pub fn sudden(params: &ModelParams) -> Self {
        Self::Sudden {
            delta: params.delta(),
        }
    }

    /// A site that never couples to the chain.
    pub fn decoupled() -> Self {
        Self::Sudden { delta: 0.0 }
    }

    pub fn linear(params: &ModelParams, rise_time: f64) -> Result<Self> {
        if !(rise_time > 0.0) || !rise_time.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "linear rise needs T > 0 (use the sudden profile for T = 0), got {rise_time}"
            )));
        }
        Ok(Self::Linear {
            delta: params.delta(),
            rise_time,
        })
    }

    pub fn kind(&self) -> ProfileKind {
        match self {
            Self::Sudden { .. } => ProfileKind::Sudden,
            Self::Linear { .. } => ProfileKind::Linear,
            Self::Custom(_) => ProfileKind::Custom,
        }
    }

    /// Plateau coupling reached for `t >= T`.
    pub fn final_delta(&self) -> f64 {
        match self {
            Self::Sudden { delta } | Self::Linear { delta, .. } => *delta,
            Self::Custom(c) => c.samples[c.samples.len() - 1].1,
        }
    }

    pub fn rise_time(&self) -> f64 {
        match self {
            Self::Sudden { .. } => 0.0,
            Self::Linear { rise_time, .. } => *rise_time,
            Self::Custom(c) => c.samples[c.samples.len() - 1].0,
        }
    }

    /// Mean coupling over the rise interval (the plateau value when sudden).
    pub fn average(&self) -> f64 {
        match self {
            Self::Sudden { delta } => *delta,
            Self::Linear { delta, .. } => 0.5 * delta,
            Self::Custom(c) => c.average,
        }
    }

    /// Coupling at time `t >= 0`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("profile evaluated at t = {t} < 0")));
        }
        match self {
            Self::Sudden { delta } => Ok(*delta),
            Self::Linear { delta, rise_time } => {
                if !(*rise_time > 0.0) {
                    return Err(Error::InvalidProfile(
                        "linear rise with T = 0; use the sudden profile".into(),
                    ));
                }
                Ok(if t >= *rise_time {
                    *delta
                } else {
                    t * delta / rise_time
                })
            }
            Self::Custom(c) => Ok(c.value_at(t)),
        }
    }

    pub fn is_constant_after(&self, t: f64) -> bool {
        t >= self.rise_time()
    }
}

/// Site amplitudes at the end of the switching interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandoffState {
    amplitudes: Vec<Complex64>,
}

impl HandoffState {
    pub const NORM_TOLERANCE: f64 = 1e-8;

    /// Wraps amplitudes `c_1, c_2, ...` after checking normalization.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Dimension("handoff state is empty".into()));
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "handoff state is not normalized: sum |c|^2 = {norm}"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Unit occupation on site `q` (1-based).
    pub fn site(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("sites are numbered from 1".into()));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); q];
        amplitudes[q - 1] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Amplitude on site `q` (1-based); zero beyond the stored support.
    pub fn get(&self, q: usize) -> Complex64 {
        self.amplitudes
            .get(q.wrapping_sub(1))
            .copied()
            .unwrap_or_default()
    }

    /// Support length after dropping trailing amplitudes below `threshold`.
    pub fn support(&self, threshold: f64) -> usize {
        self.amplitudes
            .iter()
            .rposition(|c| c.norm() > threshold)
            .map_or(0, |i| i + 1)
    }

    /// Amplitudes weighted for the first-link coupling: site 1 as is, every
    /// other site multiplied by `delta`.
    pub fn scaled(&self, params: &ModelParams) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, &c)| if i == 0 { c } else { c * params.delta() })
            .collect()
    }
}

/// Sampled site amplitudes on a truncated chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrajectory {
    pub n_sites: usize,
    pub times: Vec<f64>,
    /// One amplitude vector per entry of `times`.
    pub amplitudes: Vec<Vec<Complex64>>,
    pub rise_time: f64,
}

impl ChainTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `(t, |c_1(t)|^2)` at every sample.
    pub fn survival_probability(&self) -> Vec<(f64, f64)> {
        self.site_probability(1)
    }

    pub fn site_probability(&self, n: usize) -> Vec<(f64, f64)> {
        self.times
            .iter()
            .zip(&self.amplitudes)
            .map(|(&t, c)| (t, c.get(n - 1).map_or(0.0, |a| a.norm_sqr())))
            .collect()
    }

    pub fn site_amplitude(&self, n: usize) -> Vec<(f64, Complex64)> {
        self.times
            .iter()
            .zip(&self.amplitudes)
            .map(|(&t, c)| (t, c.get(n - 1).copied().unwrap_or_default()))
            .collect()
    }

    /// Time measured from the end of the switching interval.
    pub fn shifted_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.iter().map(move |t| t - self.rise_time)
    }

    /// Index of the sample closest to `t`.
    pub fn index_near(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
    }

    pub fn norm_at(&self, idx: usize) -> f64 {
        self.amplitudes[idx].iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Applies the truncated chain Hamiltonian to `state`.
///
/// Site energies vanish; the first link carries `-delta_at_t`, every other
/// link `-1`, and the last site only couples inward.
pub fn apply_hamiltonian(state: &[Complex64], delta_at_t: f64) -> Result<Vec<Complex64>> {
    let n = state.len();
    if n < 2 {
        return Err(Error::Dimension(format!(
            "the chain needs at least two sites, got {n}"
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    out[0] = -delta_at_t * state[1];
    out[1] = -delta_at_t * state[0];
    if n > 2 {
        out[1] -= state[2];
    }
    for i in 2..n {
        out[i] -= state[i - 1];
        if i + 1 < n {
            out[i] -= state[i + 1];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(n: usize, k: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[k - 1] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn params_reject_out_of_range() {
        assert!(ModelParams::new(0.0).is_err());
        assert!(ModelParams::new(1.0).is_err());
        assert!(ModelParams::new(f64::NAN).is_err());
    }

    #[test]
    fn decay_constant_forms_agree() {
        for &d in &[0.05, 0.3, 0.5, 0.9] {
            let p = ModelParams::new(d).unwrap();
            assert_eq!(p.alpha_sq(), 1.0 - d * d);
            assert!((p.gamma() / 2.0 - p.half_gamma()).abs() < 1e-15);
        }
        let p = ModelParams::new(0.3).unwrap();
        assert!((p.gamma() - 0.188_691_270_6).abs() < 1e-9);
    }

    #[test]
    fn hamiltonian_rows() {
        let h = apply_hamiltonian(&unit(6, 1), 0.3).unwrap();
        assert_eq!(h[1], Complex64::new(-0.3, 0.0));
        assert!(h.iter().enumerate().all(|(i, c)| i == 1 || c.norm() == 0.0));

        let h = apply_hamiltonian(&unit(6, 3), 0.7).unwrap();
        assert_eq!(h[1], Complex64::new(-1.0, 0.0));
        assert_eq!(h[3], Complex64::new(-1.0, 0.0));
        assert_eq!(h.iter().filter(|c| c.norm() > 0.0).count(), 2);

        let h = apply_hamiltonian(&unit(6, 2), 0.0).unwrap();
        assert_eq!(h[0], Complex64::new(0.0, 0.0));
        assert_eq!(h[2], Complex64::new(-1.0, 0.0));

        // hard wall
        let h = apply_hamiltonian(&unit(6, 6), 0.3).unwrap();
        assert_eq!(h[4], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn hamiltonian_needs_two_sites() {
        assert!(matches!(
            apply_hamiltonian(&[Complex64::new(1.0, 0.0)], 0.3),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn linear_profile_values() {
        let p = ModelParams::new(0.3).unwrap();
        let lin = SwitchingProfile::linear(&p, 2.0).unwrap();
        assert!((lin.value_at(1.0).unwrap() - 0.15).abs() < 1e-15);
        assert_eq!(lin.value_at(5.0).unwrap(), 0.3);
        assert_eq!(lin.value_at(2.0).unwrap(), 0.3);
        assert_eq!(lin.average(), 0.15);
        let sudden = SwitchingProfile::sudden(&p);
        assert_eq!(sudden.value_at(1e-12).unwrap(), 0.3);
        assert_eq!(sudden.rise_time(), 0.0);
    }

    #[test]
    fn linear_profile_rejects_zero_rise() {
        let p = ModelParams::new(0.3).unwrap();
        assert!(matches!(
            SwitchingProfile::linear(&p, 0.0),
            Err(Error::InvalidProfile(_))
        ));
        let raw = SwitchingProfile::Linear {
            delta: 0.3,
            rise_time: 0.0,
        };
        assert!(matches!(raw.value_at(1.0), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn linear_average_is_half() {
        let p = ModelParams::new(0.3).unwrap();
        let lin = SwitchingProfile::linear(&p, 1.7).unwrap();
        let n = 10_000;
        let h = 1.7 / n as f64;
        let area: f64 = (0..n)
            .map(|i| lin.value_at((i as f64 + 0.5) * h).unwrap() * h)
            .sum();
        assert!((area / 1.7 - 0.15).abs() < 1e-12);
    }

    #[test]
    fn sine_ramp_average() {
        let c = CustomProfile::sine_ramp(0.3, 1.0, 2001).unwrap();
        let prof = SwitchingProfile::Custom(c);
        assert_eq!(prof.average(), 0.15);
        assert_eq!(prof.rise_time(), 1.0);
        assert_eq!(prof.final_delta(), 0.3);
        assert!((prof.value_at(0.5).unwrap() - 0.15).abs() < 1e-6);
        assert_eq!(prof.value_at(3.0).unwrap(), 0.3);
    }

    #[test]
    fn custom_profile_validation() {
        assert!(CustomProfile::new(vec![(0.1, 0.0), (1.0, 0.3)], None).is_err());
        assert!(CustomProfile::new(vec![(0.0, 0.0), (0.0, 0.3)], None).is_err());
        assert!(CustomProfile::new(vec![(0.0, 0.5), (1.0, 0.3)], None).is_err());
        assert!(CustomProfile::new(vec![(0.0, 0.0), (1.0, 0.3)], Some(0.2)).is_err());
        let ok = CustomProfile::new(vec![(0.0, 0.0), (1.0, 0.3)], Some(0.15)).unwrap();
        assert_eq!(ok.average, 0.15);
    }

    #[test]
    fn handoff_scaling() {
        let h = HandoffState::new(vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
        ])
        .unwrap();
        let p = ModelParams::new(0.5).unwrap();
        let s = h.scaled(&p);
        assert_eq!(s[0], Complex64::new(0.6, 0.0));
        assert_eq!(s[1], Complex64::new(0.0, 0.4));
        assert!(HandoffState::new(vec![Complex64::new(0.5, 0.0)]).is_err());
        assert_eq!(HandoffState::site(3).unwrap().get(3), Complex64::new(1.0, 0.0));
        assert_eq!(HandoffState::site(3).unwrap().get(7), Complex64::new(0.0, 0.0));
    }

    fn cvec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
            .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
    }

    proptest! {
        #[test]
        fn hamiltonian_is_symmetric(a in cvec(17), b in cvec(17), d in 0.0..1.0f64) {
            let ha = apply_hamiltonian(&a, d).unwrap();
            let hb = apply_hamiltonian(&b, d).unwrap();
            let lhs: Complex64 = a.iter().zip(&hb).map(|(x, y)| x.conj() * y).sum();
            let rhs: Complex64 = ha.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn profile_stays_within_bounds(t in 0.0..10.0f64, rise in 0.01..5.0f64) {
            let p = ModelParams::new(0.4).unwrap();
            let lin = SwitchingProfile::linear(&p, rise).unwrap();
            let v = lin.value_at(t).unwrap();
            prop_assert!((0.0..=0.4).contains(&v));
            if t >= rise { prop_assert_eq!(v, 0.4); }
        }
    }
}
