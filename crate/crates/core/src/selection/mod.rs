//! Budgeted selection of slice orderings.
//!
//! Uniform priors use the cyclic-rotation family; known priors use
//! bipartite-matching selection ([`bms_select`]) for `B <= L` and conditional
//! sampling beyond that.

mod bms;
mod diversity;
mod matching;
mod rotation;
mod sampling;
mod scoring;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Budget, DeletionPrior, Error, Permutation, Result};

pub use bms::{bms_extended, bms_select};
pub use diversity::{avg_pairwise_diversity, is_position_diverse, positional_distance};
pub use matching::max_weight_perfect_matching;
pub use rotation::{cyclic_permutations, iterative_cyclic_rotation, rotate_right, sorted_cyclic_rotation};
pub use sampling::{
    conditional_draw, conditional_sample, random_diverse_select, random_select, sampling_weight,
};
pub use scoring::{prefix_score, sequence_score, total_score};

/// Scoring horizon used when none is given.
pub const DEFAULT_HORIZON: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMethod {
    Cyclic,
    Bms,
    Conditional,
    SortedCyclic,
    Random,
    /// Sequences supplied by the caller.
    Explicit,
}

impl SelectionMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cyclic => "cyclic",
            Self::Bms => "bms",
            Self::Conditional => "conditional",
            Self::SortedCyclic => "sorted-cyclic",
            Self::Random => "random",
            Self::Explicit => "explicit",
        }
    }

    pub fn needs_prior(self) -> bool {
        matches!(self, Self::Bms | Self::Conditional | Self::SortedCyclic)
    }

    /// Seeded methods may return a different plan for a different seed.
    pub fn is_randomized(self) -> bool {
        matches!(self, Self::Conditional | Self::Random)
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cyclic" => Self::Cyclic,
            "bms" => Self::Bms,
            "conditional" => Self::Conditional,
            "sorted-cyclic" => Self::SortedCyclic,
            "random" => Self::Random,
            "explicit" => Self::Explicit,
            other => {
                return Err(Error::InvalidArgument(alloc::format!(
                    "unknown selection method {other:?}"
                )))
            }
        })
    }
}

/// A set of distinct, equal-length orderings chosen for one shard.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PlanRepr", into = "PlanRepr")]
pub struct SelectionPlan {
    method: SelectionMethod,
    sequences: Vec<Permutation>,
}

#[derive(Serialize, Deserialize)]
struct PlanRepr {
    method: SelectionMethod,
    sequences: Vec<Permutation>,
}

impl SelectionPlan {
    pub fn new(method: SelectionMethod, sequences: Vec<Permutation>) -> Result<Self> {
        let Some(first) = sequences.first() else {
            return Err(Error::InvalidConfig("selection plan is empty".into()));
        };
        let len = first.len();
        if sequences.iter().any(|s| s.len() != len) {
            return Err(Error::InvalidConfig("plan sequences differ in length".into()));
        }
        let distinct: BTreeSet<&Permutation> = sequences.iter().collect();
        if distinct.len() != sequences.len() {
            return Err(Error::InvalidConfig("plan sequences are not distinct".into()));
        }
        Ok(Self { method, sequences })
    }

    pub fn method(&self) -> SelectionMethod {
        self.method
    }

    pub fn sequences(&self) -> &[Permutation] {
        &self.sequences
    }

    pub fn into_sequences(self) -> Vec<Permutation> {
        self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Slice count `L`.
    pub fn slices(&self) -> usize {
        self.sequences[0].len()
    }

    pub fn scores(&self, prior: &DeletionPrior, horizon: u32) -> Vec<f64> {
        self.sequences
            .iter()
            .map(|s| sequence_score(s, prior, horizon))
            .collect()
    }
}

impl TryFrom<PlanRepr> for SelectionPlan {
    type Error = Error;

    fn try_from(r: PlanRepr) -> Result<Self> {
        Self::new(r.method, r.sequences)
    }
}

impl From<SelectionPlan> for PlanRepr {
    fn from(p: SelectionPlan) -> Self {
        Self {
            method: p.method,
            sequences: p.sequences,
        }
    }
}

pub(crate) fn check_permutation_budget(slices: usize, budget: Budget) -> Result<()> {
    let space = crate::math::factorial_saturating(slices);
    if budget.get() as u128 > space {
        return Err(Error::BudgetExceedsPermutationSpace {
            budget: budget.get(),
            space,
        });
    }
    Ok(())
}

pub(crate) fn check_prior_len(prior: &DeletionPrior, slices: usize) -> Result<()> {
    if prior.len() != slices {
        return Err(Error::InvalidPrior(alloc::format!(
            "prior has {} entries, expected L={slices}",
            prior.len()
        )));
    }
    Ok(())
}

/// Runs `method` for one shard.
///
/// `prior` is required for prior-aware methods; `seed` only matters for the
/// randomized ones (and for BMS budgets above `L`).
pub fn select(
    method: SelectionMethod,
    slices: usize,
    budget: Budget,
    prior: Option<&DeletionPrior>,
    horizon: u32,
    seed: u64,
) -> Result<SelectionPlan> {
    if slices == 0 {
        return Err(Error::InvalidConfig("L must be at least 1".into()));
    }
    if let Some(p) = prior {
        check_prior_len(p, slices)?;
    }
    let need_prior = || {
        prior.ok_or_else(|| {
            Error::InvalidConfig(alloc::format!("method {method} requires a deletion prior"))
        })
    };
    match method {
        SelectionMethod::Cyclic => iterative_cyclic_rotation(slices, budget),
        SelectionMethod::Bms => bms_extended(need_prior()?, horizon, budget, seed),
        SelectionMethod::Conditional => conditional_sample(need_prior()?, budget, seed),
        SelectionMethod::SortedCyclic => sorted_cyclic_rotation(need_prior()?, budget),
        SelectionMethod::Random => random_select(slices, budget, seed),
        SelectionMethod::Explicit => Err(Error::InvalidConfig(
            "explicit plans are supplied, not selected".into(),
        )),
    }
}
