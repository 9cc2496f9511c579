use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_permutation_budget, SelectionMethod, SelectionPlan};
use crate::{Budget, DeletionPrior, Error, Permutation, Result};

/// Moves the last slice to the front.
pub fn rotate_right(perm: &Permutation) -> Permutation {
    let mut order = perm.to_indices();
    order.rotate_right(1);
    Permutation::from_vec_unchecked(order)
}

/// `perm` followed by its successive right rotations; `L` sequences in total.
pub fn cyclic_permutations(perm: &Permutation) -> Vec<Permutation> {
    rotations(&perm.to_indices())
        .into_iter()
        .map(Permutation::from_vec_unchecked)
        .collect()
}

fn rotations(seq: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = seq.to_vec();
    let mut out = Vec::with_capacity(seq.len());
    for _ in 0..seq.len() {
        out.push(cur.clone());
        cur.rotate_right(1);
    }
    out
}

/// Rotations of the identity, then rotations of ever shorter suffixes.
///
/// Round `n` walks the sequences present when the round starts (in insertion
/// order), keeps each one's first `n` slices and rotates the rest, collecting
/// unseen orderings. A round's candidates are appended greedily: each pick is
/// the one with the fewest positional agreements with everything chosen so
/// far, earliest first on ties. Plain generation order can leave a truncated
/// round lopsided enough to fall below the diversity of a random draw. Plans
/// for smaller budgets are prefixes of plans for larger ones.
pub fn iterative_cyclic_rotation(slices: usize, budget: Budget) -> Result<SelectionPlan> {
    if slices == 0 {
        return Err(Error::InvalidConfig("L must be at least 1".into()));
    }
    check_permutation_budget(slices, budget)?;
    let target = budget.get();

    let identity: Vec<usize> = (0..slices).collect();
    let mut out = rotations(&identity);
    out.truncate(target);
    let mut seen: BTreeSet<Vec<usize>> = out.iter().cloned().collect();

    let mut n_iter = 0;
    while out.len() < target {
        n_iter += 1;
        debug_assert!(n_iter + 1 < slices, "budget check guarantees termination");
        let mut candidates = Vec::new();
        for seq in &out {
            let (prefix, suffix) = seq.split_at(n_iter);
            for rot in rotations(suffix) {
                let mut candidate = prefix.to_vec();
                candidate.extend_from_slice(&rot);
                if seen.insert(candidate.clone()) {
                    candidates.push(candidate);
                }
            }
        }
        let stop = target.min(out.len() + candidates.len());
        balanced_fill(&mut out, candidates, stop);
    }

    let sequences = out.into_iter().map(Permutation::from_vec_unchecked).collect();
    SelectionPlan::new(SelectionMethod::Cyclic, sequences)
}

fn balanced_fill(out: &mut Vec<Vec<usize>>, mut candidates: Vec<Vec<usize>>, target: usize) {
    let len = out[0].len();
    let mut counts = vec![vec![0u64; len]; len];
    for seq in out.iter() {
        for (q, &s) in seq.iter().enumerate() {
            counts[q][s] += 1;
        }
    }
    while out.len() < target {
        let cost = |c: &Vec<usize>| c.iter().enumerate().map(|(q, &s)| counts[q][s]).sum::<u64>();
        let mut best = 0;
        let mut best_cost = cost(&candidates[0]);
        for (i, c) in candidates.iter().enumerate().skip(1) {
            let k = cost(c);
            if k < best_cost {
                best = i;
                best_cost = k;
            }
        }
        let pick = candidates.remove(best);
        for (q, &s) in pick.iter().enumerate() {
            counts[q][s] += 1;
        }
        out.push(pick);
    }
}

/// Cyclic rotations of the slices sorted by ascending deletion probability
/// (stable, so ties keep index order). Requires `B <= L`.
pub fn sorted_cyclic_rotation(prior: &DeletionPrior, budget: Budget) -> Result<SelectionPlan> {
    let slices = prior.len();
    if budget.get() > slices {
        return Err(Error::BudgetExceedsSlices {
            budget: budget.get(),
            slices,
            method: "sorted-cyclic",
        });
    }
    let mut order: Vec<usize> = (0..slices).collect();
    order.sort_by(|&a, &b| prior.probs()[a].total_cmp(&prior.probs()[b]));
    let mut sequences = cyclic_permutations(&Permutation::from_vec_unchecked(order));
    sequences.truncate(budget.get());
    SelectionPlan::new(SelectionMethod::SortedCyclic, sequences)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    fn idx(plan: &SelectionPlan) -> Vec<Vec<usize>> {
        plan.sequences().iter().map(|s| s.to_indices()).collect()
    }

    #[test]
    fn rotate_right_examples() {
        assert_eq!(rotate_right(&p(&[0, 1, 2])), p(&[2, 0, 1]));
        assert_eq!(rotate_right(&p(&[0])), p(&[0]));
        assert_eq!(rotate_right(&p(&[3, 1, 0, 2])), p(&[2, 3, 1, 0]));
    }

    #[test]
    fn cyclic_permutations_examples() {
        assert_eq!(
            cyclic_permutations(&p(&[0, 1, 2])),
            vec![p(&[0, 1, 2]), p(&[2, 0, 1]), p(&[1, 2, 0])]
        );
        assert_eq!(cyclic_permutations(&p(&[0])), vec![p(&[0])]);
    }

    #[test]
    fn iterative_small_budgets() {
        let b3 = iterative_cyclic_rotation(3, Budget::new(3).unwrap()).unwrap();
        assert_eq!(idx(&b3), vec![vec![0, 1, 2], vec![2, 0, 1], vec![1, 2, 0]]);
        let b4 = iterative_cyclic_rotation(3, Budget::new(4).unwrap()).unwrap();
        assert_eq!(idx(&b4)[3], vec![0, 2, 1]);
        let b1 = iterative_cyclic_rotation(5, Budget::new(1).unwrap()).unwrap();
        assert_eq!(idx(&b1), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn iterative_covers_full_space() {
        let plan = iterative_cyclic_rotation(5, Budget::new(120).unwrap()).unwrap();
        let set: BTreeSet<Vec<usize>> = idx(&plan).into_iter().collect();
        assert_eq!(set.len(), 120);
    }

    #[test]
    fn iterative_rejects_oversized_budget() {
        let err = iterative_cyclic_rotation(3, Budget::new(7).unwrap()).unwrap_err();
        assert!(err.to_string().contains("budget exceeds permutation space"));
    }

    #[test]
    fn sorted_cyclic_example() {
        let prior = DeletionPrior::new(vec![0.5, 0.4, 0.1]).unwrap();
        let plan = sorted_cyclic_rotation(&prior, Budget::new(3).unwrap()).unwrap();
        assert_eq!(idx(&plan), vec![vec![2, 1, 0], vec![0, 2, 1], vec![1, 0, 2]]);
        assert!(sorted_cyclic_rotation(&prior, Budget::new(4).unwrap()).is_err());
    }

    #[test]
    fn sorted_cyclic_uniform_matches_cyclic() {
        let prior = DeletionPrior::uniform(6);
        for b in 1..=6 {
            let budget = Budget::new(b).unwrap();
            assert_eq!(
                idx(&sorted_cyclic_rotation(&prior, budget).unwrap()),
                idx(&iterative_cyclic_rotation(6, budget).unwrap())
            );
        }
    }
}
