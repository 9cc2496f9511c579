//! Identifiers and value types shared by every module.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute tolerance on the sum of a deletion prior.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-9;

/// 0-based slice position within a shard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SliceIndex(pub usize);

/// 0-based shard number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShardIndex(pub usize);

impl SliceIndex {
    pub fn get(self) -> usize {
        self.0
    }
}

impl ShardIndex {
    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for SliceIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ShardIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordering of the slices `0..L`, i.e. the training sequence of one
/// model variant. Always bijective.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    order: Vec<SliceIndex>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        Self::validate(&order)?;
        Ok(Self {
            order: order.into_iter().map(SliceIndex).collect(),
        })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            order: (0..len).map(SliceIndex).collect(),
        }
    }

    /// Checks bijectivity onto `0..order.len()` in O(L).
    pub fn validate(order: &[usize]) -> Result<()> {
        if order.is_empty() {
            return Err(Error::InvalidPermutation("empty sequence".into()));
        }
        let mut seen = alloc::vec![false; order.len()];
        for &s in order {
            if s >= order.len() {
                return Err(Error::InvalidPermutation(format!(
                    "slice {s} out of range for length {}",
                    order.len()
                )));
            }
            if core::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidPermutation(format!("slice {s} repeated")));
            }
        }
        Ok(())
    }

    pub(crate) fn from_vec_unchecked(order: Vec<usize>) -> Self {
        debug_assert!(Self::validate(&order).is_ok());
        Self {
            order: order.into_iter().map(SliceIndex).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[SliceIndex] {
        &self.order
    }

    pub fn at(&self, position: usize) -> SliceIndex {
        self.order[position]
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.order.iter().map(|s| s.0).collect()
    }

    /// `positions()[s]` is the position of slice `s` in this ordering.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = alloc::vec![0; self.order.len()];
        for (q, s) in self.order.iter().enumerate() {
            pos[s.0] = q;
        }
        pos
    }

    pub fn is_identity(&self) -> bool {
        self.order.iter().enumerate().all(|(q, s)| s.0 == q)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(order: Vec<usize>) -> Result<Self> {
        Self::new(order)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.to_indices()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.order.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str(")")
    }
}

/// Per-slice probability that the next deletion request hits that slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DeletionPrior {
    probs: Vec<f64>,
}

impl DeletionPrior {
    /// Validates and renormalizes. Sums within [`PRIOR_SUM_TOLERANCE`] of 1
    /// are rescaled to exactly sum to 1; anything further off is rejected.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPrior("empty probability vector".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0 + PRIOR_SUM_TOLERANCE).contains(&p) {
                return Err(Error::InvalidPrior(format!("entry {i} = {p} outside [0, 1]")));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(Error::InvalidPrior(format!("entries sum to {sum}, expected 1")));
        }
        let probs = probs.into_iter().map(|p| (p / sum).min(1.0)).collect();
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            probs: alloc::vec![1.0 / len as f64; len],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, slice: SliceIndex) -> f64 {
        self.probs[slice.0]
    }
}

impl TryFrom<Vec<f64>> for DeletionPrior {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<DeletionPrior> for Vec<f64> {
    fn from(p: DeletionPrior) -> Self {
        p.probs
    }
}

/// Number of sequences trained per shard; at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Budget(usize);

impl Budget {
    pub fn new(value: usize) -> Result<Self> {
        if value == 0 {
            return Err(Error::InvalidArgument("budget must be at least 1".into()));
        }
        Ok(Self(value))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Budget {
    type Error = Error;

    fn try_from(value: usize) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Budget> for usize {
    fn from(b: Budget) -> Self {
        b.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 1, 2]).is_ok());
        assert!(Permutation::new(vec![0, 0, 2]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert!(Permutation::new(vec![]).is_err());
    }

    #[test]
    fn permutation_positions_invert() {
        let p = Permutation::new(vec![3, 1, 0, 2]).unwrap();
        let pos = p.positions();
        for (q, s) in p.order().iter().enumerate() {
            assert_eq!(pos[s.0], q);
        }
    }

    #[test]
    fn permutation_serde_validates() {
        let p: Permutation = serde_json::from_str("[2,0,1]").unwrap();
        assert_eq!(p.to_indices(), vec![2, 0, 1]);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[2,0,1]");
        assert!(serde_json::from_str::<Permutation>("[2,2,1]").is_err());
    }

    #[test]
    fn prior_renormalizes_within_tolerance() {
        let p = DeletionPrior::new(vec![0.5, 0.4, 0.1 + 5e-10]).unwrap();
        let s: f64 = p.probs().iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        assert!(DeletionPrior::new(vec![0.5, 0.4, 0.2]).is_err());
        assert!(DeletionPrior::new(vec![1.5, -0.5]).is_err());
        assert!(DeletionPrior::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn budget_positive() {
        assert!(Budget::new(0).is_err());
        assert_eq!(Budget::new(3).unwrap().get(), 3);
        assert!(serde_json::from_str::<Budget>("0").is_err());
    }
}
