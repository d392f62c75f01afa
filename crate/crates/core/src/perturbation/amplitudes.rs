use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ModelParams, SwitchingProfile};
use crate::numeric::{i_pow, CompensatedSum};

const MAX_TERMS: usize = 10_000;

/// Sums `sum_l sign_l * a_l * w_l` where `a_{l+1} = a_l * ratio(l)`, until the
/// terms are negligible past their peak.
fn alternating_series(
    first: f64,
    ratio: impl Fn(usize) -> f64,
    weight: impl Fn(usize) -> f64,
) -> Result<f64> {
    let mut a = first;
    let mut sum = CompensatedSum::new();
    for l in 0..MAX_TERMS {
        let term = a * weight(l);
        let signed = if l % 2 == 0 { term } else { -term };
        sum.add(signed);
        let next_ratio = ratio(l);
        if l > 0 && next_ratio < 1.0 && term.abs() <= 1e-17 * sum.value().abs().max(1e-300) {
            return Ok(sum.value());
        }
        a *= next_ratio;
        if a == 0.0 {
            return Ok(sum.value());
        }
    }
    Err(Error::Truncation {
        what: format!("power series did not converge in {MAX_TERMS} terms"),
        bound: a.abs(),
    })
}

/// Amplitude on site `n` for constant coupling, to lowest non-trivial order.
///
/// Sites `n >= 2` carry the first-order term. Site 1 returns `1` plus the
/// second-order term from diagrams that visit site 1 only at their ends.
pub fn perturbative_amplitude_constant(n: usize, t: f64, params: &ModelParams) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidParameter("sites are numbered from 1".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("negative time {t}")));
    }
    let d = params.delta();
    if n == 1 {
        // sum_{l>=1} (-1)^l t^{2l} / ((4l-2) (l!)^2), indexed from l = 1
        let s = alternating_series(
            t * t,
            |j| {
                let l = (j + 1) as f64;
                t * t / ((l + 1.0) * (l + 1.0))
            },
            |j| 1.0 / (4.0 * (j + 1) as f64 - 2.0),
        )?;
        return Ok(Complex64::new(1.0 - d * d * s, 0.0));
    }
    let m = (n - 1) as f64;
    // a_l = t^{n-1+2l} / (l! (n-1+l)!)
    let first = t.powi(n as i32 - 1) / (1..n).map(|k| k as f64).product::<f64>();
    let s = alternating_series(
        first,
        |l| t * t / ((l + 1) as f64 * (m + l as f64 + 1.0)),
        |l| m / (m + 2.0 * l as f64),
    )?;
    Ok(i_pow(n as i64 - 1) * (d * s))
}

/// First-order amplitude on site `n` at `t <= T` during a linear ramp.
///
/// The ramp enters only through the first hop, which integrates to
/// `t^2 / 2T`; every term of the constant-coupling series gains one power of
/// `t` and the factor `1/T`. The first-order contribution to site 1
/// vanishes, so `n = 1` returns the unperturbed amplitude `1`.
pub fn perturbative_amplitude_linear(
    n: usize,
    t: f64,
    profile: &SwitchingProfile,
    params: &ModelParams,
) -> Result<Complex64> {
    let rise = match profile {
        SwitchingProfile::Linear { rise_time, .. } if *rise_time > 0.0 => *rise_time,
        _ => {
            return Err(Error::InvalidProfile(
                "the ramp series needs a linear profile with T > 0".into(),
            ))
        }
    };
    if n == 0 {
        return Err(Error::InvalidParameter("sites are numbered from 1".into()));
    }
    if !(t >= 0.0) || t > rise {
        return Err(Error::Domain(format!(
            "ramp series holds for 0 <= t <= T = {rise}, got t = {t}"
        )));
    }
    if n == 1 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let nf = n as f64;
    let m = nf - 1.0;
    // b_s = t^{n+2s} / (s! (n-1+s)!)
    let first = t.powi(n as i32) / (1..n).map(|k| k as f64).product::<f64>();
    let s = alternating_series(
        first,
        |s| t * t / ((s + 1) as f64 * (m + s as f64 + 1.0)),
        |s| {
            let s = s as f64;
            m / ((nf + 2.0 * s) * (m + 2.0 * s))
        },
    )?;
    Ok(i_pow(n as i64 - 1) * (params.delta() / rise * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::{count_diagrams_formula, count_walks};
    use num_traits::ToPrimitive;

    fn p(d: f64) -> ModelParams {
        ModelParams::new(d).unwrap()
    }

    /// Diagram sum oracle: Delta^2 sum_l (it)^{2l}/(2l)! W_{2l-2}(2->2 above 1).
    fn second_order_by_diagrams(t: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for l in 1..=12u32 {
            let m = 2 * l;
            fact *= ((m - 1) * m) as f64;
            let walks = count_walks(2, 2, m - 2, 2).unwrap().to_f64().unwrap();
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * t.powi(m as i32) / fact * walks;
        }
        sum
    }

    #[test]
    fn second_order_survival_term() {
        let oracle = second_order_by_diagrams(1.0);
        assert!((oracle + 0.460_990_875_010_771).abs() < 1e-15);
        let c1 = perturbative_amplitude_constant(1, 1.0, &p(0.3)).unwrap();
        assert!((c1.re - 1.0 - 0.09 * oracle).abs() < 1e-15);
        assert!((c1.re - 1.0 + 0.041_489_178_750_969_39).abs() < 1e-15);
    }

    #[test]
    fn first_order_leading_terms() {
        let t = 1e-5;
        let c2 = perturbative_amplitude_constant(2, t, &p(0.3)).unwrap();
        assert!((c2 - Complex64::new(0.0, 0.3 * t)).norm() < 1e-9 * t, "{c2}");
        let lin = SwitchingProfile::linear(&p(0.3), 2.0).unwrap();
        let c2 = perturbative_amplitude_linear(2, t, &lin, &p(0.3)).unwrap();
        assert!((c2 - Complex64::new(0.0, 0.3 * t * t / 4.0)).norm() < 1e-9 * t * t);
    }

    #[test]
    fn constant_series_matches_diagram_counts() {
        // c_n^(1) = Delta sum_l (it)^{n-1+2l}/(n-1+2l)! * (walks 2->n above 1 of n-2+2l hops)
        let t = 1.3f64;
        for n in 2..6u32 {
            let mut re = 0.0;
            let mut im = 0.0;
            let mut fact = (1..n).map(f64::from).product::<f64>();
            for l in 0..10u32 {
                let m = n - 1 + 2 * l;
                if l > 0 {
                    fact *= ((m - 1) * m) as f64;
                }
                let walks = count_walks(2, n, m - 1, 2).unwrap().to_f64().unwrap();
                let z = i_pow(m as i64) * (t.powi(m as i32) / fact * walks * 0.2);
                re += z.re;
                im += z.im;
            }
            let got = perturbative_amplitude_constant(n as usize, t, &p(0.2)).unwrap();
            assert!((got - Complex64::new(re, im)).norm() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn delta_one_sums_reproduce_bessel() {
        // with Delta = 1 every diagram counts fully: sum_l (it)^m/m! N_m^{1->n}
        let t = 0.8f64;
        for n in 1..5u32 {
            let mut z = Complex64::new(0.0, 0.0);
            for l in 0..20u32 {
                let m = n - 1 + 2 * l;
                let fact: f64 = (1..=m).map(f64::from).product();
                let count = count_diagrams_formula(n, l).unwrap().count.to_f64().unwrap();
                z += i_pow(m as i64) * (t.powi(m as i32) / fact * count);
            }
            let j = crate::bessel::bessel_j(n as usize, 2.0 * t);
            let want = i_pow(n as i64 - 1) * (n as f64 * j / t);
            assert!((z - want).norm() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn ramp_amplitudes_at_rise_time() {
        // first-order values at T = 2, Delta = 0.3; frozen from a direct summation
        let pp = p(0.3);
        let lin = SwitchingProfile::linear(&pp, 2.0).unwrap();
        let expect = [0.222_447_010_505_458, 0.136_383_376_877_377, 0.067_493_760_903_692, 0.027_385_975_632_564];
        for (i, e) in expect.iter().enumerate() {
            let c = perturbative_amplitude_linear(i + 2, 2.0, &lin, &pp).unwrap();
            assert!((c.norm() - e).abs() < 1e-13, "n={}", i + 2);
        }
    }

    #[test]
    fn ramp_phase_structure() {
        let pp = p(0.3);
        let lin = SwitchingProfile::linear(&pp, 3.0).unwrap();
        for n in 1..12usize {
            for k in 0..=10 {
                let t = 0.3 * k as f64;
                let c = perturbative_amplitude_linear(n, t, &lin, &pp).unwrap();
                let r = c * i_pow(1 - n as i64);
                assert!(r.im.abs() <= 1e-15 * r.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn ramp_domain_errors() {
        let pp = p(0.3);
        let lin = SwitchingProfile::linear(&pp, 1.0).unwrap();
        assert!(matches!(
            perturbative_amplitude_linear(2, 1.5, &lin, &pp),
            Err(Error::Domain(_))
        ));
        assert!(perturbative_amplitude_linear(2, 0.5, &SwitchingProfile::sudden(&pp), &pp).is_err());
    }
}
