use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest walk the explicit enumeration accepts.
pub const MAX_BRUTEFORCE_LINES: u32 = 24;

/// Number of distinct `lines`-hop diagrams from `start` to `end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramCount {
    pub lines: u32,
    pub start: u32,
    pub end: u32,
    pub count: BigUint,
}

fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// `n (n-1+2l)! / (l! (n+l)!)`: walks of `n - 1 + 2l` hops from site 1 to
/// site `n` on the half-line.
pub fn count_diagrams_formula(n: u32, l: u32) -> Result<DiagramCount> {
    if n == 0 {
        return Err(Error::InvalidParameter("sites are numbered from 1".into()));
    }
    let lines = n - 1 + 2 * l;
    let count = BigUint::from(n) * factorial(lines) / (factorial(l) * factorial(n + l));
    Ok(DiagramCount {
        lines,
        start: 1,
        end: n,
        count,
    })
}

/// Counts nearest-neighbour walks of exactly `steps` hops from `start` to
/// `end` that never visit a site below `floor`.
///
/// Walks are generated depth-first with the count of every
/// `(site, remaining steps)` state memoized.
pub fn count_walks(start: u32, end: u32, steps: u32, floor: u32) -> Result<BigUint> {
    if steps > MAX_BRUTEFORCE_LINES {
        return Err(Error::Resource(format!(
            "walk enumeration limited to {MAX_BRUTEFORCE_LINES} lines, asked for {steps}"
        )));
    }
    if floor == 0 || start < floor || end < floor {
        return Err(Error::InvalidParameter(
            "start and end must lie on the half-line above the floor".into(),
        ));
    }
    let mut memo = HashMap::new();
    Ok(walks_from(start, end, steps, floor, &mut memo))
}

fn walks_from(
    site: u32,
    end: u32,
    remaining: u32,
    floor: u32,
    memo: &mut HashMap<(u32, u32), BigUint>,
) -> BigUint {
    if remaining == 0 {
        return if site == end { BigUint::one() } else { BigUint::zero() };
    }
    if site.abs_diff(end) > remaining {
        return BigUint::zero();
    }
    if let Some(c) = memo.get(&(site, remaining)) {
        return c.clone();
    }
    let mut total = walks_from(site + 1, end, remaining - 1, floor, memo);
    if site > floor {
        total += walks_from(site - 1, end, remaining - 1, floor, memo);
    }
    memo.insert((site, remaining), total.clone());
    total
}

/// Walks of `lines` hops from site 1 to site `n`, by enumeration.
pub fn count_diagrams_bruteforce(n: u32, lines: u32) -> Result<DiagramCount> {
    let count = count_walks(1, n, lines, 1)?;
    Ok(DiagramCount {
        lines,
        start: 1,
        end: n,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn catalan_counts() {
        let got: Vec<BigUint> = (0..4).map(|l| count_diagrams_formula(1, l).unwrap().count).collect();
        assert_eq!(got, vec![big(1), big(1), big(2), big(5)]);
        assert_eq!(count_diagrams_formula(2, 0).unwrap().count, big(1));
        assert_eq!(count_diagrams_formula(2, 1).unwrap().count, big(2));
        assert_eq!(count_diagrams_formula(3, 0).unwrap().count, big(1));
    }

    #[test]
    fn small_enumerations() {
        assert_eq!(count_diagrams_bruteforce(1, 2).unwrap().count, big(1));
        assert_eq!(count_diagrams_bruteforce(1, 4).unwrap().count, big(2));
        assert_eq!(count_diagrams_bruteforce(3, 2).unwrap().count, big(1));
        assert_eq!(count_diagrams_bruteforce(1, 3).unwrap().count, big(0));
    }

    #[test]
    fn enumeration_limit() {
        assert!(matches!(
            count_diagrams_bruteforce(1, MAX_BRUTEFORCE_LINES + 2),
            Err(Error::Resource(_))
        ));
        assert!(count_diagrams_bruteforce(1, MAX_BRUTEFORCE_LINES).is_ok());
    }

    #[test]
    fn formula_matches_enumeration() {
        for lines in 0..=MAX_BRUTEFORCE_LINES {
            for n in 1..=lines + 1 {
                let brute = count_diagrams_bruteforce(n, lines).unwrap().count;
                if (lines + 1 - n) % 2 == 0 {
                    let l = (lines + 1 - n) / 2;
                    assert_eq!(brute, count_diagrams_formula(n, l).unwrap().count);
                } else {
                    assert!(brute.is_zero());
                }
            }
        }
    }

    #[test]
    fn restricted_walk_lemma() {
        for l in 0..=6 {
            let restricted = count_walks(2, 2, 2 * l, 2).unwrap();
            assert_eq!(restricted, count_diagrams_formula(1, l).unwrap().count);
        }
    }

    #[test]
    fn counts_do_not_overflow() {
        // N_{2l}^{1->1} at l = 40 exceeds u64
        let c = count_diagrams_formula(1, 40).unwrap().count;
        assert!(c > big(u64::MAX));
        assert_eq!(c.to_string(), "2622127042276492108820");
    }
}
