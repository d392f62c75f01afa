//! Integer-order Bessel functions of the first kind by Miller's backward
//! recurrence.
//!
//! The recurrence `J_{k-1} = (2k/x) J_k - J_{k+1}` is run downward from an
//! order well above both the requested maximum and the argument, then the
//! whole table is normalized with `J_0 + 2 sum_k J_{2k} = 1`. One pass yields
//! every order `0..=max_order`, which is what the series engines need.

use num_complex::Complex64;

use crate::numeric::{i_pow, CompensatedSum};

const RESCALE_ABOVE: f64 = 1e250;

/// Order at which the backward recurrence is started.
fn start_order(max_order: usize, x: f64) -> usize {
    let base = (max_order as f64).max(x.ceil());
    let m = base + 40.0 + (60.0 * base).sqrt();
    let m = m as usize;
    m + (m & 1)
}

/// `J_0(x), ..., J_max_order(x)` for `x >= 0`.
pub fn bessel_j_orders(max_order: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0, "Bessel argument must be non-negative, got {x}");
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let m = start_order(max_order, x);
    let two_over_x = 2.0 / x;
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-300; // J_k
    let mut norm = CompensatedSum::new();
    // norm collects J_0 + 2 sum J_{2k} in the same (unnormalized) scale
    for k in (1..=m).rev() {
        if k <= max_order {
            out[k] = j_cur;
        }
        if k % 2 == 0 {
            norm.add(2.0 * j_cur);
        }
        let j_prev = k as f64 * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > RESCALE_ABOVE {
            let f = 1.0 / RESCALE_ABOVE;
            j_cur *= f;
            j_next *= f;
            if k <= max_order {
                for v in &mut out[k..] {
                    *v *= f;
                }
            }
            let partial = norm.value() * f;
            norm = CompensatedSum::new();
            norm.add(partial);
        }
    }
    out[0] = j_cur;
    norm.add(j_cur);
    let inv = 1.0 / norm.value();
    for v in &mut out {
        *v *= inv;
    }
    out
}

pub fn bessel_j(n: usize, x: f64) -> f64 {
    bessel_j_orders(n, x)[n]
}

/// Table of `i^q J_q(x)` for `|q| <= max_order`, with the reflection
/// `J_{-q} = (-1)^q J_q` folded in so that entries are even in `q`.
#[derive(Debug, Clone)]
pub struct PhasedBessel {
    values: Vec<f64>,
}

impl PhasedBessel {
    pub fn new(max_order: usize, x: f64) -> Self {
        Self {
            values: bessel_j_orders(max_order, x),
        }
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    /// `J_|q|(x)`; zero beyond the table.
    pub fn j(&self, q: i64) -> f64 {
        self.values
            .get(q.unsigned_abs() as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// `i^q J_q(x)`, equal for `q` and `-q`.
    pub fn get(&self, q: i64) -> Complex64 {
        let a = q.abs();
        i_pow(a) * self.j(a)
    }
}

/// `i^q J_q(x)`.
pub fn caligraphic_j(q: i64, x: f64) -> Complex64 {
    let a = q.unsigned_abs() as usize;
    i_pow(a as i64) * bessel_j(a, x)
}
