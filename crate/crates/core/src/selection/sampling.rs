use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_permutation_budget, SelectionMethod, SelectionPlan};
use crate::{Budget, DeletionPrior, Error, Permutation, Result};

/// Consecutive duplicate draws tolerated per requested sequence.
const REJECTIONS_PER_SEQUENCE: usize = 1000;

/// Relative chance of drawing a slice with deletion probability `p` next.
/// Slices unlikely to be deleted are favoured.
pub fn sampling_weight(p: f64) -> f64 {
    1.0 - p
}

/// Draws one ordering slice by slice without replacement, each remaining
/// slice weighted by [`sampling_weight`]. When every remaining weight is zero
/// the choice is uniform.
pub fn conditional_draw<R: Rng + ?Sized>(prior: &DeletionPrior, rng: &mut R) -> Permutation {
    let mut remaining: Vec<usize> = (0..prior.len()).collect();
    let mut order = Vec::with_capacity(prior.len());
    while !remaining.is_empty() {
        let weights: Vec<f64> = remaining
            .iter()
            .map(|&s| sampling_weight(prior.probs()[s]).max(0.0))
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for (k, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(k);
                    if u < w {
                        break;
                    }
                    u -= w;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            rng.random_range(0..remaining.len())
        };
        order.push(remaining.remove(pick));
    }
    Permutation::from_vec_unchecked(order)
}

/// `B` distinct orderings from [`conditional_draw`]; duplicates are discarded
/// and redrawn.
pub fn conditional_sample(prior: &DeletionPrior, budget: Budget, seed: u64) -> Result<SelectionPlan> {
    check_permutation_budget(prior.len(), budget)?;
    let mut seen = BTreeSet::new();
    let mut sequences = Vec::with_capacity(budget.get());
    conditional_fill(prior, budget.get(), seed, &mut seen, &mut sequences)?;
    SelectionPlan::new(SelectionMethod::Conditional, sequences)
}

pub(crate) fn conditional_fill(
    prior: &DeletionPrior,
    target: usize,
    seed: u64,
    seen: &mut BTreeSet<Permutation>,
    out: &mut Vec<Permutation>,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fill_distinct(target, seen, out, || conditional_draw(prior, &mut rng))
}

fn fill_distinct(
    target: usize,
    seen: &mut BTreeSet<Permutation>,
    out: &mut Vec<Permutation>,
    mut draw: impl FnMut() -> Permutation,
) -> Result<()> {
    let limit = REJECTIONS_PER_SEQUENCE * target;
    let mut rejections = 0;
    while out.len() < target {
        let perm = draw();
        if seen.insert(perm.clone()) {
            out.push(perm);
            rejections = 0;
        } else {
            rejections += 1;
            if rejections >= limit {
                return Err(Error::SamplingExhausted { rejections });
            }
        }
    }
    Ok(())
}

/// `B` distinct uniformly random orderings.
pub fn random_select(slices: usize, budget: Budget, seed: u64) -> Result<SelectionPlan> {
    if slices == 0 {
        return Err(Error::InvalidConfig("L must be at least 1".into()));
    }
    check_permutation_budget(slices, budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut sequences = Vec::with_capacity(budget.get());
    fill_distinct(budget.get(), &mut seen, &mut sequences, || {
        let mut order: Vec<usize> = (0..slices).collect();
        order.shuffle(&mut rng);
        Permutation::from_vec_unchecked(order)
    })?;
    SelectionPlan::new(SelectionMethod::Random, sequences)
}

/// A random position-diverse set of `B <= L` orderings: each new ordering is
/// built by randomized backtracking over positions, avoiding any slice that
/// already occupies that position in an earlier ordering.
pub fn random_diverse_select(slices: usize, budget: Budget, seed: u64) -> Result<SelectionPlan> {
    if budget.get() > slices {
        return Err(Error::BudgetExceedsSlices {
            budget: budget.get(),
            slices,
            method: "random-diverse",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = vec![vec![false; slices]; slices];
    let mut sequences = Vec::with_capacity(budget.get());
    for _ in 0..budget.get() {
        let mut order = Vec::with_capacity(slices);
        let mut in_use = vec![false; slices];
        // A Latin rectangle with fewer than L rows always extends.
        let found = extend_avoiding(&taken, &mut in_use, &mut order, &mut rng);
        debug_assert!(found);
        for (q, &s) in order.iter().enumerate() {
            taken[q][s] = true;
        }
        sequences.push(Permutation::from_vec_unchecked(order));
    }
    SelectionPlan::new(SelectionMethod::Random, sequences)
}

fn extend_avoiding<R: Rng>(
    taken: &[Vec<bool>],
    in_use: &mut [bool],
    order: &mut Vec<usize>,
    rng: &mut R,
) -> bool {
    let q = order.len();
    if q == taken.len() {
        return true;
    }
    let mut candidates: Vec<usize> = (0..taken.len()).filter(|&s| !in_use[s] && !taken[q][s]).collect();
    candidates.shuffle(rng);
    for s in candidates {
        in_use[s] = true;
        order.push(s);
        if extend_avoiding(taken, in_use, order, rng) {
            return true;
        }
        order.pop();
        in_use[s] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::is_position_diverse;

    #[test]
    fn certain_deletion_goes_last() {
        let prior = DeletionPrior::new(vec![1.0, 0.0, 0.0]).unwrap();
        let plan = conditional_sample(&prior, Budget::new(2).unwrap(), 11).unwrap();
        for s in plan.sequences() {
            assert_eq!(s.at(2).get(), 0);
        }
    }

    #[test]
    fn uniform_full_budget_enumerates_everything() {
        let prior = DeletionPrior::uniform(3);
        let plan = conditional_sample(&prior, Budget::new(6).unwrap(), 5).unwrap();
        let set: BTreeSet<Vec<usize>> = plan.sequences().iter().map(|s| s.to_indices()).collect();
        assert_eq!(set.len(), 6);
    }

    #[test]
    fn exhausted_when_space_is_degenerate() {
        // Only orderings ending in 0 are reachable: two of them.
        let prior = DeletionPrior::new(vec![1.0, 0.0, 0.0]).unwrap();
        let err = conditional_sample(&prior, Budget::new(3).unwrap(), 1).unwrap_err();
        assert!(matches!(err, Error::SamplingExhausted { .. }));
        assert!(err.to_string().contains("sampling exhausted"));
    }

    #[test]
    fn seeded_determinism() {
        let prior = DeletionPrior::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = Budget::new(10).unwrap();
        assert_eq!(conditional_sample(&prior, b, 9).unwrap(), conditional_sample(&prior, b, 9).unwrap());
        assert_eq!(random_select(5, b, 9).unwrap(), random_select(5, b, 9).unwrap());
        assert_ne!(random_select(5, b, 9).unwrap(), random_select(5, b, 10).unwrap());
    }

    #[test]
    fn random_diverse_is_diverse() {
        for seed in 0..20 {
            for l in 1..9 {
                let plan = random_diverse_select(l, Budget::new(l).unwrap(), seed).unwrap();
                assert!(is_position_diverse(plan.sequences()));
            }
        }
    }

    #[test]
    fn random_select_budget_guard() {
        assert!(random_select(3, Budget::new(7).unwrap(), 0).is_err());
        assert_eq!(random_select(3, Budget::new(6).unwrap(), 0).unwrap().len(), 6);
    }
}
