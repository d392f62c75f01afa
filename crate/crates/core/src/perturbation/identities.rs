//! Exact rational checks of the finite sums behind the memory-sum closed
//! forms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub k: u32,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub k_max: u32,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

struct Factorials(Vec<BigInt>);

impl Factorials {
    fn new(n: usize) -> Self {
        let mut v = vec![BigInt::one()];
        for i in 1..=n {
            let next = &v[i - 1] * BigInt::from(i);
            v.push(next);
        }
        Self(v)
    }

    fn inv_pair(&self, a: usize, b: usize) -> BigRational {
        BigRational::new(BigInt::one(), &self.0[a] * &self.0[b])
    }

    fn binom(&self, m: usize, s: usize) -> BigInt {
        &self.0[m] / (&self.0[s] * &self.0[m - s])
    }
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn sum_weighted(f: &Factorials, m: usize, lo: usize, hi: usize, w: impl Fn(i64) -> i64) -> BigRational {
    (lo..=hi).fold(BigRational::zero(), |acc, s| acc + rat(w(s as i64)) * f.inv_pair(s, m - s))
}

/// Verifies every identity for `k = 1..=k_max` in exact rational arithmetic.
/// The first failure is reported as an error naming the identity and `k`.
pub fn appendix_identities(k_max: u32) -> Result<IdentityReport> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let f = Factorials::new(2 * k_max as usize + 2);
    let mut checks = Vec::new();
    let mut push = |name: &str, k: u32, lhs: BigRational, rhs: BigRational| -> Result<()> {
        let holds = lhs == rhs;
        checks.push(IdentityCheck {
            identity: name.to_string(),
            k,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            holds,
        });
        if holds {
            Ok(())
        } else {
            Err(Error::IdentityFailure { identity: name.to_string(), k })
        }
    };
    for k in 1..=k_max {
        let ku = k as usize;
        let ki = k as i64;
        let m = 2 * ku;

        // the s = k term of sum (k-s)^2 / (s!(2k-s)!) vanishes
        let sq = |s: i64| (ki - s) * (ki - s);
        push("drop-middle-term", k, sum_weighted(&f, m, 0, ku, sq), sum_weighted(&f, m, 0, ku - 1, sq))?;

        // symmetric half of the even-length sum
        push(
            "even-half-sum",
            k,
            sum_weighted(&f, m, 0, ku, sq),
            sum_weighted(&f, m, 0, m, sq) / rat(2),
        )?;

        // (k-s)^2 = k^2 - (2k-1) s + s(s-1)
        for s in 0..=ki {
            let lhs = rat(sq(s));
            let rhs = rat(ki * ki - (2 * ki - 1) * s + s * (s - 1));
            push("even-square-split", k, lhs, rhs)?;
        }

        // binomial moments for m = 2k and m = 2k - 1
        for mm in [m, m - 1] {
            let mi = mm as i64;
            let two = |e: i64| {
                if e < 0 {
                    BigRational::new(BigInt::one(), BigInt::from(2).pow((-e) as u32))
                } else {
                    BigRational::from_integer(BigInt::from(2).pow(e as u32))
                }
            };
            let moment = |w: &dyn Fn(i64) -> i64| {
                (0..=mm).fold(BigRational::zero(), |acc, s| {
                    acc + BigRational::from_integer(f.binom(mm, s) * BigInt::from(w(s as i64)))
                })
            };
            push("binomial-sum", k, moment(&|_| 1), two(mi))?;
            push("binomial-first-moment", k, moment(&|s| s), rat(mi) * two(mi - 1))?;
            push(
                "binomial-factorial-moment",
                k,
                moment(&|s| s * (s - 1)),
                rat(mi * (mi - 1)) * two(mi - 2),
            )?;
        }

        // odd-length analogue
        let m_odd = m - 1;
        let sq_odd = |s: i64| (2 * ki - 1 - 2 * s) * (2 * ki - 1 - 2 * s);
        let half_odd = sum_weighted(&f, m_odd, 0, ku - 1, sq_odd);
        push("odd-half-sum", k, half_odd.clone(), sum_weighted(&f, m_odd, 0, m_odd, sq_odd) / rat(2))?;

        for s in 0..=(2 * ki - 1) {
            let lhs = rat(sq_odd(s));
            let rhs = rat((2 * ki - 1).pow(2) - 8 * (ki - 1) * s + 4 * s * (s - 1));
            push("odd-square-split", k, lhs, rhs)?;
        }

        let closed = BigRational::new(BigInt::from(2).pow(2 * k - 2), f.0[m - 2].clone());
        push("odd-closed-form", k, half_odd, closed)?;

        let even_closed = BigRational::new(
            BigInt::from(k) * BigInt::from(2).pow(2 * k - 2),
            f.0[m].clone(),
        );
        push("even-closed-form", k, sum_weighted(&f, m, 0, ku, sq), even_closed)?;
    }
    Ok(IdentityReport { k_max, checks })
}
