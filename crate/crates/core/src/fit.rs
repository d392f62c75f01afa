//! Least-squares fits on sampled survival curves: exponential rate, power-law
//! envelope slope and oscillation nodes.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::linear_regression;

/// Minimum number of samples a fit window must hold.
pub const MIN_WINDOW_SAMPLES: usize = 10;
pub const MIN_ENVELOPE_MAXIMA: usize = 5;
pub const MIN_NODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    ExponentialRate,
    PowerlawSlope,
    NodePhase,
    NodeSpacing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: FitKind,
    pub value: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub residual_norm: f64,
    /// Points that entered the regression (samples, maxima or nodes).
    pub points: usize,
}

fn windowed(series: &[(f64, f64)], window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty fit window [{lo}, {hi}]")));
    }
    let pts: Vec<_> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= lo && t <= hi)
        .collect();
    if pts.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "window [{lo}, {hi}] holds {} samples, need {MIN_WINDOW_SAMPLES}",
            pts.len()
        )));
    }
    Ok(pts)
}

/// Fits `ln P = a - gamma t` and reports `gamma`.
pub fn fit_exponential_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult> {
    let pts = windowed(series, window)?;
    if let Some(&(t, p)) = pts.iter().find(|(_, p)| !(*p > 0.0)) {
        return Err(Error::Domain(format!("non-positive probability {p} at t = {t}")));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (_, slope, se, rss) = linear_regression(&xs, &ys);
    Ok(FitResult {
        kind: FitKind::ExponentialRate,
        value: -slope,
        stderr: se,
        window,
        residual_norm: rss.sqrt(),
        points: pts.len(),
    })
}

/// Vertex of the parabola through three equally weighted samples.
fn parabola_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> (f64, f64) {
    let (x0, y0) = a;
    let (x1, y1) = b;
    let (x2, y2) = c;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv == 0.0 {
        return b;
    }
    let xv = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
    if !(xv >= x0 && xv <= x2) {
        return b;
    }
    let yv = y1 + d01 * (xv - x1) + curv * (xv - x0) * (xv - x1);
    (xv, yv)
}

fn extrema(series: &[(f64, f64)], window: (f64, f64), maxima: bool) -> Vec<(f64, f64)> {
    let sign = if maxima { 1.0 } else { -1.0 };
    series
        .windows(3)
        .filter(|w| w[1].0 >= window.0 && w[1].0 <= window.1)
        .filter(|w| sign * (w[1].1 - w[0].1) > 0.0 && sign * (w[1].1 - w[2].1) >= 0.0)
        .map(|w| parabola_vertex(w[0], w[1], w[2]))
        .collect()
}

/// Local maxima of a sampled curve, refined by a three-point parabola.
pub fn local_maxima(series: &[(f64, f64)], window: (f64, f64)) -> Vec<(f64, f64)> {
    extrema(series, window, true)
}

/// Local minima of a sampled curve, refined by a three-point parabola.
pub fn local_minima(series: &[(f64, f64)], window: (f64, f64)) -> Vec<(f64, f64)> {
    extrema(series, window, false)
}

/// Sign changes of a sampled real curve, located by linear interpolation.
pub fn zero_crossings(series: &[(f64, f64)], window: (f64, f64)) -> Vec<f64> {
    series
        .windows(2)
        .filter(|w| w[0].0 >= window.0 && w[1].0 <= window.1)
        .filter(|w| w[0].1 == 0.0 || w[0].1 * w[1].1 < 0.0)
        .map(|w| {
            let (t0, y0) = w[0];
            let (t1, y1) = w[1];
            if y0 == 0.0 {
                t0
            } else {
                t0 - y0 * (t1 - t0) / (y1 - y0)
            }
        })
        .collect()
}

/// Slope of `ln P_max` against `ln t` over the local maxima of `P` in the
/// window. Times are used as given, so pass shifted times when the clock
/// should start at the end of the switching interval.
pub fn fit_powerlaw_envelope(series: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult> {
    windowed(series, window)?;
    if window.0 <= 0.0 {
        return Err(Error::Domain("power-law window must start at t > 0".into()));
    }
    let peaks: Vec<_> = local_maxima(series, window)
        .into_iter()
        .filter(|&(_, p)| p > 0.0)
        .collect();
    if peaks.len() < MIN_ENVELOPE_MAXIMA {
        return Err(Error::InsufficientData(format!(
            "{} envelope maxima in [{}, {}], need {MIN_ENVELOPE_MAXIMA}",
            peaks.len(),
            window.0,
            window.1
        )));
    }
    let xs: Vec<f64> = peaks.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = peaks.iter().map(|p| p.1.ln()).collect();
    let (_, slope, se, rss) = linear_regression(&xs, &ys);
    Ok(FitResult {
        kind: FitKind::PowerlawSlope,
        value: slope,
        stderr: se,
        window,
        residual_norm: rss.sqrt(),
        points: peaks.len(),
    })
}

/// Phase and spacing read off oscillation nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationFit {
    pub nodes: Vec<f64>,
    pub phase: FitResult,
    pub spacing: FitResult,
}

/// Matches nodes `t_k` to `2 t_k + offset + Phi = k pi` and returns `Phi`
/// in `(-pi/2, pi/2]` (circular mean modulo `pi`), together with the mean
/// node spacing.
///
/// For `|c_1|^2` in the asymptotic regime `offset = -pi/4`.
pub fn fit_nodes(nodes: &[f64], offset: f64, window: (f64, f64)) -> Result<OscillationFit> {
    if nodes.len() < MIN_NODES {
        return Err(Error::InsufficientData(format!(
            "{} nodes in [{}, {}], need {MIN_NODES}",
            nodes.len(),
            window.0,
            window.1
        )));
    }
    // each node gives Phi modulo pi; average on the doubled circle
    let doubled: Vec<f64> = nodes.iter().map(|&t| -2.0 * (2.0 * t + offset)).collect();
    let (s, c) = doubled
        .iter()
        .fold((0.0, 0.0), |(s, c), &a| (s + a.sin(), c + a.cos()));
    let mean = s.atan2(c);
    let mut phi = 0.5 * mean;
    if phi <= -FRAC_PI_2 {
        phi += PI;
    }
    let dev: Vec<f64> = doubled
        .iter()
        .map(|&a| 0.5 * (a - mean + PI).rem_euclid(2.0 * PI) - FRAC_PI_2)
        .collect();
    let n = nodes.len() as f64;
    let rss: f64 = dev.iter().map(|d| d * d).sum();
    let phase = FitResult {
        kind: FitKind::NodePhase,
        value: phi,
        stderr: (rss / (n - 1.0)).sqrt() / n.sqrt(),
        window,
        residual_norm: rss.sqrt(),
        points: nodes.len(),
    };

    let gaps: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
    let m = gaps.len() as f64;
    let mean_gap = gaps.iter().sum::<f64>() / m;
    let gap_rss: f64 = gaps.iter().map(|g| (g - mean_gap).powi(2)).sum();
    let spacing = FitResult {
        kind: FitKind::NodeSpacing,
        value: mean_gap,
        stderr: if m > 1.0 {
            (gap_rss / (m - 1.0)).sqrt() / m.sqrt()
        } else {
            f64::INFINITY
        },
        window,
        residual_norm: gap_rss.sqrt(),
        points: nodes.len(),
    };
    Ok(OscillationFit {
        nodes: nodes.to_vec(),
        phase,
        spacing,
    })
}

/// Node fit on a probability curve: nodes are the refined local minima.
pub fn fit_oscillation(series: &[(f64, f64)], window: (f64, f64), offset: f64) -> Result<OscillationFit> {
    windowed(series, window)?;
    let nodes: Vec<f64> = local_minima(series, window).into_iter().map(|m| m.0).collect();
    fit_nodes(&nodes, offset, window)
}

/// Node fit on a real amplitude curve: nodes are its zero crossings.
pub fn fit_oscillation_signed(
    series: &[(f64, f64)],
    window: (f64, f64),
    offset: f64,
) -> Result<OscillationFit> {
    windowed(series, window)?;
    fit_nodes(&zero_crossings(series, window), offset, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(lo: f64, hi: f64, h: f64) -> Vec<f64> {
        let n = ((hi - lo) / h).round() as usize;
        (0..=n).map(|i| lo + i as f64 * h).collect()
    }

    #[test]
    fn exponential_rate_of_pure_decay() {
        let s: Vec<_> = grid(0.0, 30.0, 0.1).into_iter().map(|t| (t, 0.7 * (-0.1887 * t).exp())).collect();
        let f = fit_exponential_rate(&s, (5.0, 25.0)).unwrap();
        assert!((f.value - 0.1887).abs() < 1e-12);
        assert!(f.stderr < 1e-10);
        let flat: Vec<_> = grid(0.0, 30.0, 0.1).into_iter().map(|t| (t, 1.0)).collect();
        assert_eq!(fit_exponential_rate(&flat, (5.0, 25.0)).unwrap().value, 0.0);
    }

    #[test]
    fn exponential_rate_errors() {
        let s: Vec<_> = grid(0.0, 30.0, 0.1).into_iter().map(|t| (t, (t - 10.0).sin())).collect();
        assert!(matches!(fit_exponential_rate(&s, (5.0, 25.0)), Err(Error::Domain(_))));
        assert!(matches!(
            fit_exponential_rate(&s, (5.0, 5.5)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn powerlaw_of_synthetic_envelope() {
        // t^-3 sin^2: maxima sit slightly off the sine peaks, so compare to a
        // pure t^-3 sample set as well
        let pure: Vec<_> = grid(10.0, 100.0, 0.05)
            .into_iter()
            .map(|t| (t, t.powi(-3) * (1.0 + 0.5 * (2.0 * t).cos())))
            .collect();
        let f = fit_powerlaw_envelope(&pure, (20.0, 90.0)).unwrap();
        assert!((f.value + 3.0).abs() < 5e-3, "{}", f.value);
        // symmetric peaks sitting exactly on t^-3
        let mut exact = Vec::new();
        for k in 0..40 {
            let t = 10.0 + k as f64;
            let p = t.powi(-3);
            exact.extend([(t - 0.3, 0.5 * p), (t, p), (t + 0.3, 0.5 * p), (t + 0.5, 0.0)]);
        }
        let f = fit_powerlaw_envelope(&exact, (9.0, 50.0)).unwrap();
        assert!((f.value + 3.0).abs() < 1e-12, "{}", f.value);
        assert_eq!(f.points, 40);
        let s: Vec<_> = grid(10.0, 200.0, 0.05)
            .into_iter()
            .map(|t| (t, t.powi(-3) * (2.0 * t - 0.3).sin().powi(2)))
            .collect();
        let f = fit_powerlaw_envelope(&s, (50.0, 190.0)).unwrap();
        assert!((f.value + 3.0).abs() < 5e-3, "{}", f.value);
        assert!(fit_powerlaw_envelope(&s, (50.0, 52.0)).is_err());
    }

    #[test]
    fn node_phase_and_spacing() {
        for &phi in &[0.0, 1.0, -0.7, 1.5] {
            let s: Vec<_> = grid(20.0, 60.0, 0.01)
                .into_iter()
                .map(|t| (t, (2.0 * t - PI / 4.0 + phi).sin().powi(2) / t.powi(3)))
                .collect();
            let f = fit_oscillation(&s, (25.0, 55.0), -PI / 4.0).unwrap();
            assert!((f.phase.value - phi).abs() < 1e-4, "phi={phi}: {}", f.phase.value);
            assert!((f.spacing.value - FRAC_PI_2).abs() < 1e-4);
            let signed: Vec<_> = grid(20.0, 60.0, 0.01)
                .into_iter()
                .map(|t| (t, (2.0 * t - PI / 4.0 + phi).sin() / t.powf(1.5)))
                .collect();
            let g = fit_oscillation_signed(&signed, (25.0, 55.0), -PI / 4.0).unwrap();
            assert!((g.phase.value - phi).abs() < 1e-4);
        }
        assert!(fit_nodes(&[1.0, 2.0], 0.0, (0.0, 3.0)).is_err());
    }

    proptest! {
        #[test]
        fn exponential_fit_recovers_rate(rate in 0.01f64..2.0, amp in 1e-3f64..1.0) {
            let s: Vec<_> = grid(0.0, 10.0, 0.05).into_iter().map(|t| (t, amp * (-rate * t).exp())).collect();
            let f = fit_exponential_rate(&s, (1.0, 9.0)).unwrap();
            prop_assert!((f.value - rate).abs() < 1e-10 * rate.max(1.0));
            prop_assert!(f.stderr.is_finite());
        }

        #[test]
        fn phase_lies_in_principal_interval(phi in -3.0f64..3.0) {
            let nodes: Vec<f64> = (10..20).map(|k| (k as f64 * PI + PI / 4.0 - phi) / 2.0).collect();
            let f = fit_nodes(&nodes, -PI / 4.0, (0.0, 100.0)).unwrap();
            prop_assert!(f.phase.value > -FRAC_PI_2 && f.phase.value <= FRAC_PI_2);
            let d = (f.phase.value - phi).rem_euclid(PI);
            prop_assert!(d < 1e-9 || PI - d < 1e-9);
        }
    }
}
