//! Closed-form deletion-rate and retention results.
//!
//! Deletion rate is the coupon-collector expectation `mL * H(m * min(B, L))`:
//! under uniform requests over the `m*L` slices the system fails once every
//! slice that tops some sequence has been hit, and diverse plans put
//! `min(B, L)` distinct slices on top in each shard.
//!
//! Retention compares the chance that a shard still has a model with at
//! least `k` active layers after `r` single-shard requests.

use serde::{Deserialize, Serialize};

use crate::math::{ln, powi};
use crate::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Saturation cap for the falling factorial `L!/(L-k)!`.
pub const FALLING_FACTORIAL_CAP: u64 = 1 << 62;

/// `H_n = 1 + 1/2 + ... + 1/n`, summed exactly (smallest terms first).
pub fn harmonic(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("harmonic number needs n >= 1".into()));
    }
    Ok((1..=n).rev().map(|i| 1.0 / i as f64).sum())
}

/// `min(B, L)`: the number of distinct slices that can top a sequence.
pub fn effective_budget(slices: usize, budget: usize) -> usize {
    budget.min(slices)
}

/// Expected requests until failure with `B` diverse sequences per shard:
/// `mL * H(m * min(B, L))`.
pub fn s3t_deletion_bound(shards: usize, slices: usize, budget: usize) -> Result<f64> {
    check_dims(shards, slices)?;
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    let coupons = (shards * effective_budget(slices, budget)) as u64;
    Ok((shards * slices) as f64 * harmonic(coupons)?)
}

/// `mL * H(m)`; the single-sequence case of [`s3t_deletion_bound`].
pub fn sisa_deletion_bound(shards: usize, slices: usize) -> Result<f64> {
    s3t_deletion_bound(shards, slices, 1)
}

/// Large-`n` expansion `mL ln(mB') + gamma mL + 1/2` of the harmonic bound.
/// Informational only.
pub fn asymptotic_deletion_bound(shards: usize, slices: usize, budget: usize) -> f64 {
    let ml = (shards * slices) as f64;
    let coupons = (shards * effective_budget(slices, budget)) as f64;
    ml * ln(coupons) + EULER_GAMMA * ml + 0.5
}

fn check_dims(shards: usize, slices: usize) -> Result<()> {
    if shards == 0 || slices == 0 {
        return Err(Error::InvalidArgument("m and L must be at least 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub b_prime: usize,
    pub sisa_bound: f64,
    pub s3t_bound: f64,
}

pub fn bound_report(shards: usize, slices: usize, budget: usize) -> Result<BoundReport> {
    Ok(BoundReport {
        m: shards,
        l: slices,
        b: budget,
        b_prime: effective_budget(slices, budget),
        sisa_bound: sisa_deletion_bound(shards, slices)?,
        s3t_bound: s3t_deletion_bound(shards, slices, budget)?,
    })
}

/// Number of ordered `k`-prefixes of `L` slices, `L!/(L-k)!`, saturating at
/// [`FALLING_FACTORIAL_CAP`].
pub fn falling_factorial(slices: usize, k: usize) -> u64 {
    let mut acc: u64 = 1;
    for i in 0..k.min(slices) {
        acc = acc.saturating_mul((slices - i) as u64);
        if acc >= FALLING_FACTORIAL_CAP {
            return FALLING_FACTORIAL_CAP;
        }
    }
    if k > slices {
        0
    } else {
        acc
    }
}

/// `min(B, L!/(L-k)!)`.
pub fn retention_budget(k: usize, slices: usize, budget: usize) -> usize {
    let space = falling_factorial(slices, k);
    if space >= FALLING_FACTORIAL_CAP || (budget as u64) <= space {
        budget
    } else {
        space as usize
    }
}

fn check_retention(k: usize, slices: usize) -> Result<()> {
    if slices == 0 || k == 0 || k > slices {
        return Err(Error::InvalidArgument(alloc::format!(
            "retention needs 1 <= k <= L, got k={k}, L={slices}"
        )));
    }
    Ok(())
}

/// Probability that none of `r` uniform requests hits the first `k` slices
/// of a single sequence: `(1 - k/L)^r`.
pub fn retention_prob_sisa(k: usize, slices: usize, r: u64) -> Result<f64> {
    check_retention(k, slices)?;
    Ok(powi(1.0 - k as f64 / slices as f64, r))
}

/// `1 - (1 - (1-k/L)^r)^B'` with `B' = min(B, L!/(L-k)!)`.
pub fn retention_prob_s3t(k: usize, slices: usize, r: u64, budget: usize) -> Result<f64> {
    let alpha = retention_prob_sisa(k, slices, r)?;
    check_budget(budget)?;
    let b_eff = retention_budget(k, slices, budget);
    Ok(1.0 - powi(1.0 - alpha, b_eff as u64))
}

/// `zeta * (1 - zeta^(B'-1))` with `zeta = 1 - (1-k/L)^r`.
pub fn retention_gap(k: usize, slices: usize, r: u64, budget: usize) -> Result<f64> {
    let alpha = retention_prob_sisa(k, slices, r)?;
    check_budget(budget)?;
    let zeta = 1.0 - alpha;
    let b_eff = retention_budget(k, slices, budget);
    Ok(zeta * (1.0 - powi(zeta, b_eff as u64 - 1)))
}

fn check_budget(budget: usize) -> Result<()> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionPoint {
    pub k: usize,
    pub r: u64,
    pub p_sisa: f64,
    pub p_s3t: f64,
    pub gap: f64,
    pub b_eff: usize,
}

pub fn retention_point(k: usize, slices: usize, r: u64, budget: usize) -> Result<RetentionPoint> {
    Ok(RetentionPoint {
        k,
        r,
        p_sisa: retention_prob_sisa(k, slices, r)?,
        p_s3t: retention_prob_s3t(k, slices, r, budget)?,
        gap: retention_gap(k, slices, r, budget)?,
        b_eff: retention_budget(k, slices, budget),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(1).unwrap(), 1.0);
        assert!(close(harmonic(5).unwrap(), 1.0 + 0.5 + 1.0 / 3.0 + 0.25 + 0.2, 1e-15));
        let h40: f64 = (1..=40).map(|i| 1.0 / i as f64).sum();
        assert!(close(harmonic(40).unwrap(), h40, 1e-13));
        assert!(close(harmonic(40).unwrap(), 4.278_543, 1e-6));
        assert!(harmonic(0).is_err());
    }

    #[test]
    fn deletion_bounds() {
        assert!(close(s3t_deletion_bound(5, 4, 1).unwrap(), 45.666_666_666_666_66, 1e-9));
        assert!(close(s3t_deletion_bound(5, 32, 8).unwrap(), 160.0 * harmonic(40).unwrap(), 1e-9));
        assert!(close(s3t_deletion_bound(5, 32, 8).unwrap(), 684.567, 1e-3));
        assert_eq!(s3t_deletion_bound(1, 1, 1).unwrap(), 1.0);
        assert!(close(sisa_deletion_bound(5, 32).unwrap(), 365.333, 1e-3));
        assert_eq!(sisa_deletion_bound(1, 7).unwrap(), 7.0);
    }

    #[test]
    fn report_fields() {
        let r = bound_report(5, 4, 9).unwrap();
        assert_eq!(r.b_prime, 4);
        assert!(r.s3t_bound > r.sisa_bound);
        let r1 = bound_report(5, 4, 1).unwrap();
        assert_eq!(r1.s3t_bound, r1.sisa_bound);
    }

    #[test]
    fn retention_examples() {
        assert_eq!(retention_prob_sisa(4, 4, 1).unwrap(), 0.0);
        assert_eq!(retention_prob_sisa(3, 4, 0).unwrap(), 1.0);
        assert!(close(retention_prob_sisa(2, 4, 3).unwrap(), 0.125, 1e-15));
        assert!(close(retention_prob_s3t(2, 4, 1, 2).unwrap(), 0.75, 1e-15));
        assert!(close(retention_prob_s3t(1, 4, 1, 100).unwrap(), 0.996_093_75, 1e-15));
        assert!(close(retention_gap(2, 4, 1, 2).unwrap(), 0.25, 1e-15));
        assert_eq!(retention_gap(2, 4, 3, 1).unwrap(), 0.0);
        assert_eq!(retention_gap(2, 4, 0, 5).unwrap(), 0.0);
        assert_eq!(retention_prob_s3t(2, 4, 3, 1).unwrap(), retention_prob_sisa(2, 4, 3).unwrap());
    }

    #[test]
    fn falling_factorial_saturates() {
        assert_eq!(falling_factorial(4, 2), 12);
        assert_eq!(falling_factorial(4, 4), 24);
        assert_eq!(falling_factorial(64, 40), FALLING_FACTORIAL_CAP);
        assert_eq!(retention_budget(2, 4, 100), 12);
        assert_eq!(retention_budget(40, 64, 1_000_000), 1_000_000);
    }

    #[test]
    fn retention_rejects_bad_k() {
        assert!(retention_prob_sisa(0, 4, 1).is_err());
        assert!(retention_prob_sisa(5, 4, 1).is_err());
        assert!(retention_prob_s3t(2, 4, 1, 0).is_err());
    }
}
