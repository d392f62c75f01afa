//! Memory sums carried by the handoff from a linear ramp, and the late-time
//! amplitudes they produce.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::{i_pow, sinc, CompensatedSum};

/// Odd- and even-site sums of a ramp handoff, to first order in `Delta`.
///
/// `s_even` is purely imaginary at this order; it is kept complex so that it
/// plugs straight into the asymptotic forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemorySums {
    pub rise_time: f64,
    pub s_odd: f64,
    pub s_even: Complex64,
}

fn check_rise(rise: f64) -> Result<()> {
    if !(rise >= 0.0) || !rise.is_finite() {
        return Err(Error::InvalidParameter(format!("rise time must be >= 0, got {rise}")));
    }
    Ok(())
}

/// `S_o = Delta^2 sin(2T)/(2T)`, `S_e = i Delta^2 sin^2(T)/T`.
pub fn memory_sums_closed_form(rise: f64, params: &ModelParams) -> Result<MemorySums> {
    check_rise(rise)?;
    let d2 = params.delta() * params.delta();
    let s = sinc(rise);
    Ok(MemorySums {
        rise_time: rise,
        s_odd: d2 * sinc(2.0 * rise),
        s_even: Complex64::new(0.0, d2 * rise * s * s),
    })
}

/// The same sums from their double power series, truncated at total order
/// `l + s <= k_max`. Fails if the last retained shell is not negligible.
pub fn memory_sums_series(rise: f64, params: &ModelParams, k_max: usize) -> Result<MemorySums> {
    check_rise(rise)?;
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let d2 = params.delta() * params.delta();
    // pw[a] = T^a / a!
    let mut pw = vec![1.0f64; 3 * k_max + 2];
    for a in 1..pw.len() {
        pw[a] = pw[a - 1] * rise / a as f64;
    }
    let mut odd = CompensatedSum::new();
    let mut even = CompensatedSum::new();
    let mut last_shell = 0.0;
    for k in 1..=k_max {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        let mut shell_odd = CompensatedSum::new();
        let mut shell_even = CompensatedSum::new();
        for l in 1..=k {
            let s = k - l;
            let lf = l as f64;
            shell_odd.add(lf * lf * pw[s] * pw[2 * l + s]);
            let w = 2.0 * lf - 1.0;
            shell_even.add(w * w * pw[s] * pw[2 * l + s - 1]);
        }
        let o = sign * shell_odd.value() / ((2.0 * kf + 1.0) * kf);
        let e = sign * shell_even.value() / (kf * (2.0 * kf - 1.0));
        odd.add(o);
        even.add(e);
        last_shell = o.abs().max(e.abs());
    }
    if last_shell > 1e-14 {
        return Err(Error::Truncation {
            what: format!("memory series at k_max = {k_max}"),
            bound: last_shell,
        });
    }
    Ok(MemorySums {
        rise_time: rise,
        s_odd: d2 * (1.0 + 4.0 * odd.value()),
        s_even: Complex64::new(0.0, -d2 * even.value()),
    })
}

/// Late-time amplitude on site `n` after a ramp of length `T`, at `t > T`.
///
/// Compared with a sudden switch the envelope is scaled by `sin(T)/T` and the
/// oscillation is shifted by `T` in phase, with time counted from `T`.
pub fn memory_asymptotic(n: usize, t: f64, rise: f64, params: &ModelParams) -> Result<Complex64> {
    check_rise(rise)?;
    if n == 0 {
        return Err(Error::InvalidParameter("sites are numbered from 1".into()));
    }
    if !(t > rise) {
        return Err(Error::Domain(format!("needs t > T, got t = {t}, T = {rise}")));
    }
    let d = params.delta();
    let a2 = params.alpha_sq();
    let tau = t - rise;
    let base = sinc(rise) / (PI.sqrt() * tau.powf(1.5) * (1.0 + a2).powi(2));
    if n == 1 {
        let v = d * d * base * (2.0 * tau - PI / 4.0 + rise).sin();
        return Ok(Complex64::new(v, 0.0));
    }
    let nf = n as f64;
    let phase = 2.0 * tau - (nf - 0.5) * PI / 2.0 + rise;
    Ok(i_pow(n as i64 - 1) * ((nf + a2 * (nf - 2.0)) * d * base * phase.sin()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regimes::{asymptotic_amplitude, form_from_sums};

    fn p() -> ModelParams {
        ModelParams::new(0.3).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let m = memory_sums_closed_form(1.0, &p()).unwrap();
        // 0.09 sin 2 / 2 and 0.09 sin^2 1
        assert!((m.s_odd - 0.040_918_384_207_155_68).abs() < 1e-12);
        assert!((m.s_even.im - 0.063_726_607_644_621_4).abs() < 1e-12);
        assert_eq!(m.s_even.re, 0.0);
        let m = memory_sums_closed_form(PI / 2.0, &p()).unwrap();
        assert!(m.s_odd.abs() < 1e-17);
        let m = memory_sums_closed_form(0.0, &p()).unwrap();
        assert!((m.s_odd - 0.09).abs() < 1e-17 && m.s_even.im == 0.0);
    }

    #[test]
    fn series_matches_closed_form() {
        for &t in &[0.0, 0.1, 0.5, 1.0, 2.0, PI] {
            let c = memory_sums_closed_form(t, &p()).unwrap();
            let s = memory_sums_series(t, &p(), 40).unwrap();
            assert!((c.s_odd - s.s_odd).abs() < 1e-12, "T={t}");
            assert!((c.s_even - s.s_even).norm() < 1e-12, "T={t}");
        }
    }

    #[test]
    fn series_truncation_is_reported() {
        assert!(matches!(
            memory_sums_series(6.0, &p(), 5),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn reduces_to_asymptotic_form_with_memory_sums() {
        let pp = p();
        let rise = 1.7;
        let m = memory_sums_closed_form(rise, &pp).unwrap();
        let form = form_from_sums(Complex64::new(m.s_odd, 0.0), m.s_even, &pp);
        for n in 1..6 {
            for &t in &[30.0, 55.5, 120.0] {
                let a = memory_asymptotic(n, t + rise, rise, &pp).unwrap();
                let b = asymptotic_amplitude(&form, n, t).unwrap();
                assert!((a - b).norm() < 1e-12 * b.norm() + 1e-16, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn sudden_limit() {
        let pp = p();
        let a = memory_asymptotic(1, 40.0, 0.0, &pp).unwrap();
        let e = 0.09 / (PI.sqrt() * 40f64.powf(1.5) * (1.0 + pp.alpha_sq()).powi(2))
            * (80.0 - PI / 4.0).sin();
        assert!((a.re - e).abs() < 1e-15);
        assert!(memory_asymptotic(1, 1.0, 1.0, &pp).is_err());
    }
}
