//! Exact solution for constant coupling.
//!
//! The amplitudes after the handoff are weighted integrals over the
//! stationary modes of the semi-infinite chain. Expanding the weight in a
//! Fourier series with coefficients `T_N`, every site amplitude becomes a
//! sum of `T_N` times differences of phased Bessel functions `i^q J_q(2t)`.
//! The `T_N` follow from the handoff amplitudes by a forward recurrence.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bessel::PhasedBessel;
use crate::error::{Error, Result};
use crate::model::{HandoffState, ModelParams};
use crate::numeric::{i_pow, ComplexSum};

/// Coefficients smaller than this no longer affect any amplitude.
pub const TAIL_TOLERANCE: f64 = 1e-16;
const MAX_COEFFICIENTS: usize = 4_000_000;

/// A stationary solution of the chain at Bloch angle `phi`, energy `-2 cos phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryMode {
    pub phi: f64,
    params: ModelParams,
}

impl StationaryMode {
    pub fn new(phi: f64, params: ModelParams) -> Self {
        Self { phi, params }
    }

    pub fn energy(&self) -> f64 {
        -2.0 * self.phi.cos()
    }

    /// Mode amplitude on site `n` (1-based).
    pub fn u(&self, n: usize) -> Complex64 {
        let phi = self.phi;
        let i2 = Complex64::new(0.0, 2.0);
        if n == 1 {
            i2 * self.params.delta() * phi.sin()
        } else {
            let n = n as f64;
            i2 * ((n * phi).sin() + self.params.alpha_sq() * ((n - 2.0) * phi).sin())
        }
    }

    /// Ratio of outgoing to incoming wave amplitude.
    pub fn reflection(&self) -> Complex64 {
        let a2 = self.params.alpha_sq();
        let e2 = Complex64::from_polar(1.0, 2.0 * self.phi);
        (a2 + e2.conj()) / (a2 + e2)
    }
}

/// Fourier coefficients `T_1..T_{N_max}` of the spectral weight.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    /// `coeffs[N - 1] = T_N`.
    coeffs: Vec<Complex64>,
    params: ModelParams,
    /// Sites carrying handoff amplitude; past this the recurrence is homogeneous.
    support: usize,
}

impl FourierCoefficients {
    /// Runs the recurrence `T_1 = c_1`, `T_2 = delta c_2`,
    /// `T_N = delta c_N - alpha^2 T_{N-2}` up to `n_max`.
    pub fn compute(handoff: &HandoffState, params: &ModelParams, n_max: usize) -> Self {
        let d = params.delta();
        let a2 = params.alpha_sq();
        let mut coeffs = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let t = if n == 1 {
                handoff.get(1)
            } else {
                let prev = if n >= 3 { coeffs[n - 3] } else { Complex64::new(0.0, 0.0) };
                d * handoff.get(n) - a2 * prev
            };
            coeffs.push(t);
        }
        Self {
            coeffs,
            params: *params,
            support: handoff.amplitudes().len(),
        }
    }

    /// Extends the recurrence until the geometric tail falls below
    /// [`TAIL_TOLERANCE`] relative to the largest coefficient.
    pub fn converged(handoff: &HandoffState, params: &ModelParams) -> Result<Self> {
        let support = handoff.amplitudes().len();
        let a2 = params.alpha_sq();
        // after the support, each pair of orders shrinks by alpha^2
        let pairs = (TAIL_TOLERANCE.ln() / a2.ln()).ceil() as usize;
        let n_max = support + 2 * pairs + 2;
        if n_max > MAX_COEFFICIENTS {
            return Err(Error::Resource(format!(
                "coupling {} needs {n_max} Fourier coefficients",
                params.delta()
            )));
        }
        Ok(Self::compute(handoff, params, n_max))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `T_N`, with `T_0 = 0` and zero beyond the computed range.
    pub fn get(&self, n: usize) -> Complex64 {
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs.get(n - 1).copied().unwrap_or_default()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Largest magnitude among the last two coefficients relative to the
    /// largest overall; bounds what truncating the sum discards.
    fn tail_ratio(&self) -> f64 {
        let n = self.coeffs.len();
        if n < 2 || n <= self.support {
            return f64::INFINITY;
        }
        let last = self.coeffs[n - 1].norm().max(self.coeffs[n - 2].norm());
        let peak = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            0.0
        } else {
            last / peak
        }
    }

    /// Number of coefficients that matter at time `t_tilde` for site `n`.
    fn effective_len(&self, n: usize, t_tilde: f64) -> Result<usize> {
        let x = 2.0 * t_tilde;
        // J_q(x) is below 1e-17 once q exceeds x by this margin
        let bessel_cap = (x + 40.0 + 12.0 * x.cbrt()).ceil() as usize + n;
        if self.coeffs.len() >= bessel_cap {
            return Ok(bessel_cap);
        }
        let ratio = self.tail_ratio();
        let bound = ratio / (1.0 - self.params.alpha_sq()).max(1e-300);
        if bound > 1e-12 {
            return Err(Error::Truncation {
                what: format!(
                    "{} Fourier coefficients do not converge at t = {t_tilde}",
                    self.coeffs.len()
                ),
                bound,
            });
        }
        Ok(self.coeffs.len())
    }
}

/// `i^q J_q(x)`.
pub use crate::bessel::caligraphic_j;

/// Amplitude on site `n` at time `t_tilde` after the handoff.
pub fn exact_amplitude(coeffs: &FourierCoefficients, n: usize, t_tilde: f64) -> Result<Complex64> {
    let len = coeffs.effective_len(n, t_tilde)?;
    let table = PhasedBessel::new(len + n + 2, 2.0 * t_tilde);
    amplitude_from_table(coeffs, &table, len, n, t_tilde)
}

fn amplitude_from_table(
    coeffs: &FourierCoefficients,
    table: &PhasedBessel,
    len: usize,
    n: usize,
    t_tilde: f64,
) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidParameter("sites are numbered from 1".into()));
    }
    if !(t_tilde >= 0.0) {
        return Err(Error::Domain(format!("negative time {t_tilde}")));
    }
    let mut sum = ComplexSum::new();
    if n == 1 {
        if t_tilde == 0.0 {
            return Ok(coeffs.get(1));
        }
        // T_N i^(N-1) N J_N(2t) / t
        for big_n in 1..=len {
            let w = i_pow(big_n as i64 - 1) * (big_n as f64 * table.j(big_n as i64) / t_tilde);
            sum.add(coeffs.get(big_n) * w);
        }
        return Ok(sum.value());
    }
    let a2 = coeffs.params().alpha_sq();
    let ni = n as i64;
    for big_n in 1..=len {
        let t = coeffs.get(big_n);
        if t == Complex64::new(0.0, 0.0) {
            continue;
        }
        let bn = big_n as i64;
        let bracket = (table.get(bn - ni) - table.get(bn + ni))
            + a2 * (table.get(bn - ni + 2) - table.get(bn + ni - 2));
        sum.add(t * bracket);
    }
    Ok(sum.value() / coeffs.params().delta())
}

/// Amplitudes on sites `1..=n_sites` at one time, sharing a single Bessel table.
pub fn exact_amplitudes(
    coeffs: &FourierCoefficients,
    n_sites: usize,
    t_tilde: f64,
) -> Result<Vec<Complex64>> {
    let len = coeffs.effective_len(n_sites, t_tilde)?;
    let table = PhasedBessel::new(len + n_sites + 2, 2.0 * t_tilde);
    (1..=n_sites)
        .map(|n| amplitude_from_table(coeffs, &table, len, n, t_tilde))
        .collect()
}

/// The constant-coupling evolution of one handoff state.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    coeffs: FourierCoefficients,
}

impl ExactSolution {
    pub fn new(handoff: &HandoffState, params: &ModelParams) -> Result<Self> {
        Ok(Self {
            coeffs: FourierCoefficients::converged(handoff, params)?,
        })
    }

    pub fn coefficients(&self) -> &FourierCoefficients {
        &self.coeffs
    }

    pub fn amplitude(&self, n: usize, t_tilde: f64) -> Result<Complex64> {
        exact_amplitude(&self.coeffs, n, t_tilde)
    }

    pub fn amplitudes(&self, n_sites: usize, t_tilde: f64) -> Result<Vec<Complex64>> {
        exact_amplitudes(&self.coeffs, n_sites, t_tilde)
    }

    /// `|c_1|^2` at each time.
    pub fn survival(&self, times: &[f64]) -> Result<Vec<f64>> {
        times
            .iter()
            .map(|&t| self.amplitude(1, t).map(|c| c.norm_sqr()))
            .collect()
    }
}

/// Which algebraic route to use for [`integral_i_pn`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralForm {
    /// `i^(N-p) J_(N-p) - i^(N+p) J_(N+p)`.
    BesselDifference,
    /// The telescoped sum `sum_m (N+p+1-2m)/(i t) i^k J_k`, `k = N+p+1-2m`.
    Telescoped,
}

/// The mode integral `(i/pi) int sin(p phi) exp(i(2t cos phi - N phi)) dphi`.
pub fn integral_i_pn(p: u32, big_n: i64, t_tilde: f64, form: IntegralForm) -> Result<Complex64> {
    if p == 0 {
        return Err(Error::InvalidParameter("p must be >= 1".into()));
    }
    if !(t_tilde > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t_tilde}")));
    }
    let p = p as i64;
    let max = (big_n.abs() + p + 2) as usize;
    let table = PhasedBessel::new(max, 2.0 * t_tilde);
    Ok(match form {
        IntegralForm::BesselDifference => table.get(big_n - p) - table.get(big_n + p),
        IntegralForm::Telescoped => {
            let mut sum = ComplexSum::new();
            for m in 1..=p {
                let k = big_n + p + 1 - 2 * m;
                sum.add(table.get(k) * k as f64 / Complex64::new(0.0, t_tilde));
            }
            sum.value()
        }
    })
}

/// Leading large-time form of [`integral_i_pn`].
pub fn integral_i_pn_asymptotic(p: u32, big_n: i64, t_tilde: f64) -> Complex64 {
    let p = p as i64;
    let phase = 2.0 * t_tilde - ((big_n + p) as f64 - 0.5) * PI / 2.0;
    i_pow(big_n + p - 2) * ((big_n * p) as f64 * phase.cos() / (PI.sqrt() * t_tilde.powf(1.5)))
}
