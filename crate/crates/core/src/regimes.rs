//! Closed-form regime decompositions of the post-handoff evolution: the
//! long-time oscillatory tail, the Gamow-pole exponential component, and
//! their sum.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HandoffState, ModelParams};
use crate::numeric::{i_pow, ComplexSum};

/// Tolerance on the imaginary residue of `S_o` and `X_e` below which the
/// handoff is treated as having the `i^(q-1)` phase structure.
pub const PHASE_STRUCTURE_TOLERANCE: f64 = 1e-9;

/// Summed odd and even handoff weights that fix the asymptotic amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticForm {
    pub s_odd: Complex64,
    pub s_even: Complex64,
    /// `-i S_e`.
    pub x_even: Complex64,
    /// `sqrt(S_o^2 + X_e^2)` from the real parts.
    pub amplitude: f64,
    /// Phase in `(-pi/2, pi/2]`.
    pub phase: f64,
    /// True when `S_o` and `X_e` are real to [`PHASE_STRUCTURE_TOLERANCE`].
    pub phase_structured: bool,
    pub params: ModelParams,
}

impl AsymptoticForm {
    /// `sign(S_o) * A`, so that `S_o sin x + X_e cos x = signed_amplitude * sin(x + phase)`.
    pub fn signed_amplitude(&self) -> f64 {
        let full = self.x_even.re.atan2(self.s_odd.re);
        if full > FRAC_PI_2 || full <= -FRAC_PI_2 {
            -self.amplitude
        } else {
            self.amplitude
        }
    }

    /// Envelope coefficient of `|c_1|`: `A / (sqrt(pi) (1 + alpha^2)^2)`.
    pub fn envelope_coefficient(&self) -> f64 {
        let s = 1.0 + self.params.alpha_sq();
        self.amplitude / (PI.sqrt() * s * s)
    }
}

/// Weight `q (1 + alpha^2) - 2 alpha^2` of site `q` in the asymptotic sums.
pub fn site_weight(q: usize, params: &ModelParams) -> f64 {
    let a2 = params.alpha_sq();
    q as f64 * (1.0 + a2) - 2.0 * a2
}

/// Odd and even sums over the scaled handoff amplitudes.
pub fn asymptotic_sums(handoff: &HandoffState, params: &ModelParams) -> Result<AsymptoticForm> {
    let scaled = handoff.scaled(params);
    let weighted: Vec<f64> = scaled
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm() * site_weight(i + 1, params).abs())
        .collect();
    if let Some(bound) = undecayed_tail(&weighted) {
        return Err(Error::Truncation {
            what: "handoff amplitudes do not decay before the end of the support".into(),
            bound,
        });
    }
    let mut odd = ComplexSum::new();
    let mut even = ComplexSum::new();
    for (i, &c) in scaled.iter().enumerate() {
        let q = i + 1;
        let term = c * site_weight(q, params);
        if q % 2 == 1 {
            odd.add(term);
        } else {
            even.add(term);
        }
    }
    Ok(form_from_sums(odd.value(), even.value(), params))
}

/// Short handoffs are taken as exact finite support. Longer ones come from a
/// truncated chain and must have decayed over their last three sites;
/// returns the offending relative tail otherwise.
fn undecayed_tail(weighted: &[f64]) -> Option<f64> {
    const SHORT: usize = 16;
    if weighted.len() <= SHORT {
        return None;
    }
    let peak = weighted.iter().copied().fold(0.0, f64::max);
    let tail = weighted[weighted.len() - 3..].iter().copied().fold(0.0, f64::max);
    (peak > 0.0 && tail > 1e-10 * peak).then_some(tail / peak)
}

/// Builds the amplitude/phase representation from given sums.
pub fn form_from_sums(s_odd: Complex64, s_even: Complex64, params: &ModelParams) -> AsymptoticForm {
    let x_even = Complex64::new(0.0, -1.0) * s_even;
    let scale = s_odd.norm().max(x_even.norm()).max(1e-300);
    let phase_structured = s_odd.im.abs() <= PHASE_STRUCTURE_TOLERANCE * scale
        && x_even.im.abs() <= PHASE_STRUCTURE_TOLERANCE * scale;
    let so = s_odd.re;
    let xe = x_even.re;
    let amplitude = so.hypot(xe);
    let mut phase = xe.atan2(so);
    if phase > FRAC_PI_2 {
        phase -= PI;
    } else if phase <= -FRAC_PI_2 {
        phase += PI;
    }
    AsymptoticForm {
        s_odd,
        s_even,
        x_even,
        amplitude,
        phase,
        phase_structured,
        params: *params,
    }
}

/// Whether the leading asymptotic form is trusted for site `n` at `t_tilde`
/// (`2 t >= n pi + 10`).
pub fn asymptotic_valid(n: usize, t_tilde: f64) -> bool {
    2.0 * t_tilde >= n as f64 * PI + 10.0
}

/// Long-time oscillatory amplitude on site `n`.
pub fn asymptotic_amplitude(form: &AsymptoticForm, n: usize, t_tilde: f64) -> Result<Complex64> {
    if !(t_tilde > 0.0) {
        return Err(Error::Domain(format!(
            "asymptotic form needs t > 0, got {t_tilde}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("sites are numbered from 1".into()));
    }
    let p = &form.params;
    let s = 1.0 + p.alpha_sq();
    let base = 1.0 / (PI.sqrt() * s * s * t_tilde.powf(1.5));
    let minus_i = Complex64::new(0.0, -1.0);
    if n == 1 {
        let x = 2.0 * t_tilde - FRAC_PI_4;
        return Ok(base * (form.s_odd * x.sin() + minus_i * form.s_even * x.cos()));
    }
    let nf = n as f64;
    let pref = i_pow(n as i64 - 1) * (base * (nf + p.alpha_sq() * (nf - 2.0)) / p.delta());
    let odd_phase = 2.0 * t_tilde - (nf + 0.5) * FRAC_PI_2;
    let even_phase = 2.0 * t_tilde - (nf - 0.5) * FRAC_PI_2;
    Ok(pref * (form.s_odd * odd_phase.cos() + minus_i * form.s_even * even_phase.cos()))
}

/// Pole contribution: a site-dependent prefactor times `exp(-gamma t / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialForm {
    /// `sum_q theta~_q i^q / alpha^q`.
    pub pole_sum: Complex64,
    /// Amplitude decay rate `gamma / 2`.
    pub rate: f64,
    pub params: ModelParams,
}

impl ExponentialForm {
    pub fn new(handoff: &HandoffState, params: &ModelParams) -> Result<Self> {
        let alpha = params.alpha();
        let scaled = handoff.scaled(params);
        let mut sum = ComplexSum::new();
        let mut weighted = Vec::with_capacity(scaled.len());
        for (i, &c) in scaled.iter().enumerate() {
            let q = (i + 1) as i32;
            let w = alpha.powi(-q);
            if !w.is_finite() {
                return Err(Error::Domain(format!(
                    "alpha^-{q} overflows; handoff support too long"
                )));
            }
            let term = c * i_pow(q as i64) * w;
            weighted.push(term.norm());
            sum.add(term);
        }
        if let Some(last) = undecayed_tail(&weighted) {
            return Err(Error::Domain(format!(
                "alpha^-q weighted handoff sum does not converge (tail {last:e})"
            )));
        }
        Ok(Self {
            pole_sum: sum.value(),
            rate: params.half_gamma(),
            params: *params,
        })
    }

    /// Prefactor of `exp(-gamma t / 2)` on site `k`.
    pub fn coefficient(&self, k: usize) -> Complex64 {
        let p = &self.params;
        let a = p.alpha();
        let s = 1.0 + p.alpha_sq();
        if k == 1 {
            self.pole_sum * s / Complex64::new(0.0, 2.0 * a)
        } else {
            self.pole_sum * i_pow(k as i64 - 2) * (p.delta() * s / (2.0 * a.powi(k as i32)))
        }
    }

    pub fn amplitude(&self, k: usize, t_tilde: f64) -> Complex64 {
        self.coefficient(k) * (-self.rate * t_tilde).exp()
    }
}

/// Exponentially decaying component on site `k` at `t_tilde`.
pub fn exponential_amplitude(
    handoff: &HandoffState,
    params: &ModelParams,
    k: usize,
    t_tilde: f64,
) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::InvalidParameter("sites are numbered from 1".into()));
    }
    Ok(ExponentialForm::new(handoff, params)?.amplitude(k, t_tilde))
}

/// Both regime components for one handoff, evaluated together.
#[derive(Debug, Clone, Copy)]
pub struct RegimeAnsatz {
    pub asymptotic: AsymptoticForm,
    pub exponential: ExponentialForm,
}

impl RegimeAnsatz {
    pub fn new(handoff: &HandoffState, params: &ModelParams) -> Result<Self> {
        Ok(Self {
            asymptotic: asymptotic_sums(handoff, params)?,
            exponential: ExponentialForm::new(handoff, params)?,
        })
    }

    pub fn amplitude(&self, n: usize, t_tilde: f64) -> Result<Complex64> {
        Ok(self.exponential.amplitude(n, t_tilde) + asymptotic_amplitude(&self.asymptotic, n, t_tilde)?)
    }
}

/// `c^(e) + c^(a)` on site `n`.
pub fn regime_ansatz(
    handoff: &HandoffState,
    params: &ModelParams,
    n: usize,
    t_tilde: f64,
) -> Result<Complex64> {
    RegimeAnsatz::new(handoff, params)?.amplitude(n, t_tilde)
}

/// Envelope of `|c_1|^2` in the sudden case, `(Delta^2/(1+alpha^2)^2)^2 / (pi t^3)`.
pub fn sudden_envelope(params: &ModelParams, t_tilde: f64) -> f64 {
    let s = 1.0 + params.alpha_sq();
    let c = params.delta() * params.delta() / (s * s);
    c * c / (PI * t_tilde.powi(3))
}

/// Window in which the survival probability is dominated by the pole term:
/// `[T + 2 tau/5, T + 4 tau]`, clipped to where `P` exceeds ten times the
/// sudden asymptotic envelope.
pub fn exponential_window(params: &ModelParams, rise_time: f64, series: &[(f64, f64)]) -> (f64, f64) {
    let tau = params.lifetime();
    let lo = rise_time + 0.4 * tau;
    let mut hi = rise_time + 4.0 * tau;
    if let Some(&(t, _)) = series
        .iter()
        .filter(|(t, _)| *t >= lo && *t <= hi)
        .find(|(t, p)| *p <= 10.0 * sudden_envelope(params, t - rise_time))
    {
        hi = t;
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p03() -> ModelParams {
        ModelParams::new(0.3).unwrap()
    }

    #[test]
    fn sudden_sums() {
        let f = asymptotic_sums(&HandoffState::site(1).unwrap(), &p03()).unwrap();
        assert!((f.s_odd.re - 0.09).abs() < 1e-15);
        assert_eq!(f.s_even, Complex64::new(0.0, 0.0));
        assert_eq!(f.phase, 0.0);
        assert!(f.phase_structured);
        // envelope constant (1 - a^2)/(1 + a^2)^2 at a^2 = 0.91
        assert!((f.amplitude / 3.6481 - 0.024_670_376_360_297_14).abs() < 1e-15);
    }

    #[test]
    fn odd_and_even_site_sums() {
        let p = p03();
        let f = asymptotic_sums(&HandoffState::site(3).unwrap(), &p).unwrap();
        assert!((f.s_odd.re - 0.3 * (3.0 + 0.91)).abs() < 1e-14);
        let g = asymptotic_sums(&HandoffState::site(4).unwrap(), &p).unwrap();
        assert!((g.s_even.re - 0.3 * (4.0 * 1.91 - 1.82)).abs() < 1e-14);
    }

    #[test]
    fn weight_identity() {
        for &d in &[0.1, 0.3, 0.77] {
            let p = ModelParams::new(d).unwrap();
            for q in 1..50usize {
                let lhs = site_weight(q, &p);
                let rhs = 2.0 * (q as f64 - 1.0) - d * d * (q as f64 - 2.0);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_site_asymptotics() {
        let p = p03();
        let s2 = 1.91f64 * 1.91;
        let t = 40.3f64;
        let base = 1.0 / (PI.sqrt() * t.powf(1.5));
        for q in [1usize, 3, 5] {
            let f = asymptotic_sums(&HandoffState::site(q).unwrap(), &p).unwrap();
            let c = asymptotic_amplitude(&f, 1, t).unwrap();
            let scale = if q == 1 { 1.0 } else { 0.3 };
            let want = scale * (q as f64 * 1.91 - 1.82) / s2 * base * (2.0 * t - FRAC_PI_4).sin();
            assert!((c - Complex64::new(want, 0.0)).norm() < 1e-15);
        }
        let f = asymptotic_sums(&HandoffState::site(2).unwrap(), &p).unwrap();
        let c = asymptotic_amplitude(&f, 1, t).unwrap();
        let want = -0.3 * (2.0 * 1.91 - 1.82) / s2 * base * (2.0 * t - FRAC_PI_4).cos();
        assert!((c - Complex64::new(0.0, want)).norm() < 1e-15);
        assert!(asymptotic_amplitude(&f, 1, 0.0).is_err());
    }

    #[test]
    fn case_one_consistency() {
        // odd-site coefficient with its explicit delta removed, at q = 1
        let p = p03();
        let a2 = p.alpha_sq();
        let q = 1.0;
        let general = (q * (1.0 + a2) - 2.0 * a2) / (1.0 + a2).powi(2);
        let sudden = (1.0 - a2) / (1.0 + a2).powi(2);
        assert!((general - sudden).abs() < 1e-16);
    }

    #[test]
    fn pole_amplitudes() {
        let p = p03();
        let e = ExponentialForm::new(&HandoffState::site(1).unwrap(), &p).unwrap();
        assert!((e.coefficient(1) - Complex64::new(1.91 / 1.82, 0.0)).norm() < 1e-14);
        assert!((e.coefficient(1).re - 1.049_450_549_450_549_5).abs() < 1e-14);
        assert!((e.rate - 0.094_345_635_304_972_64).abs() < 1e-15);
        let a = p.alpha();
        for k in 2..6usize {
            let want = i_pow(k as i64 - 1) * (0.3 * 1.91 / (2.0 * a.powi(k as i32 + 1)));
            assert!((e.coefficient(k) - want).norm() < 1e-13);
        }
        // single odd/even sites
        for q in 2..7usize {
            let e = ExponentialForm::new(&HandoffState::site(q).unwrap(), &p).unwrap();
            let want = -i_pow(q as i64 + 1) * (0.3 * 1.91 / (2.0 * a.powi(q as i32 + 1)));
            assert!((e.coefficient(1) - want).norm() < 1e-13, "q={q}");
            for k in 2..5usize {
                let want = -i_pow((k + q) as i64) * (0.09 * 1.91 / (2.0 * a.powi((k + q) as i32)));
                assert!((e.coefficient(k) - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn pole_decay_rate_is_universal() {
        let p = p03();
        for q in 1..5usize {
            let e = ExponentialForm::new(&HandoffState::site(q).unwrap(), &p).unwrap();
            for k in 1..5usize {
                let r = e.amplitude(k, 7.0).norm() / e.amplitude(k, 0.0).norm();
                assert!((r - (-p.half_gamma() * 7.0).exp()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gamow_pole_inside_unit_circle() {
        for k in 1..100 {
            let p = ModelParams::new(k as f64 / 100.0).unwrap();
            assert!(p.alpha() < 1.0 && p.gamma() > 0.0);
        }
    }

    #[test]
    fn node_spacing_of_tail() {
        let f = asymptotic_sums(&HandoffState::site(1).unwrap(), &p03()).unwrap();
        // zeros of sin(2t - pi/4) at t_k = (k pi + pi/4) / 2
        for k in 60..70 {
            let t = (k as f64 * PI + FRAC_PI_4) / 2.0;
            assert!(asymptotic_amplitude(&f, 1, t).unwrap().norm() < 1e-18);
            let t_next = t + FRAC_PI_2;
            assert!(asymptotic_amplitude(&f, 1, t_next).unwrap().norm() < 1e-18);
        }
    }

    #[test]
    fn phase_mapping() {
        let p = p03();
        let f = form_from_sums(Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0), &p);
        // X_e = 1, S_o = -1
        assert!((f.phase + FRAC_PI_4).abs() < 1e-15);
        assert!(f.signed_amplitude() < 0.0);
        let x = 0.37f64;
        let lhs = -x.sin() + x.cos();
        assert!((lhs - f.signed_amplitude() * (x + f.phase).sin()).abs() < 1e-15);
    }
}
