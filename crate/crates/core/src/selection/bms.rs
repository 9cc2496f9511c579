use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::matching::max_weight_perfect_matching;
use super::sampling::conditional_fill;
use super::scoring::{sequence_score, survival};
use super::{SelectionMethod, SelectionPlan};
use crate::{Budget, DeletionPrior, Error, Permutation, Result};

/// Bipartite-matching sequence selection for `B <= L`.
///
/// Sequence `l` starts with slice `l`. At every further position, each
/// sequence is matched to one unused slice by a maximum-weight perfect
/// matching whose edge weight is the score of the extended prefix. The `B`
/// completed sequences with the highest scores are returned, best first.
pub fn bms_select(prior: &DeletionPrior, horizon: u32, budget: Budget) -> Result<SelectionPlan> {
    let slices = prior.len();
    if budget.get() > slices {
        return Err(Error::BudgetExceedsSlices {
            budget: budget.get(),
            slices,
            method: "bms",
        });
    }
    let mut ranked = bms_all(prior, horizon)?;
    ranked.truncate(budget.get());
    SelectionPlan::new(SelectionMethod::Bms, ranked.into_iter().map(|(p, _)| p).collect())
}

/// [`bms_select`], topped up with conditional samples when `B > L`.
pub fn bms_extended(
    prior: &DeletionPrior,
    horizon: u32,
    budget: Budget,
    seed: u64,
) -> Result<SelectionPlan> {
    if budget.get() <= prior.len() {
        return bms_select(prior, horizon, budget);
    }
    super::check_permutation_budget(prior.len(), budget)?;
    let base: Vec<Permutation> = bms_all(prior, horizon)?.into_iter().map(|(p, _)| p).collect();
    let mut seen: BTreeSet<Permutation> = base.iter().cloned().collect();
    let mut sequences = base;
    conditional_fill(prior, budget.get(), seed, &mut seen, &mut sequences)?;
    SelectionPlan::new(SelectionMethod::Bms, sequences)
}

/// All `L` BMS sequences with their final scores, sorted best first (stable
/// on starting slice).
fn bms_all(prior: &DeletionPrior, horizon: u32) -> Result<Vec<(Permutation, f64)>> {
    let n = prior.len();
    let p = prior.probs();
    let mut seqs: Vec<Vec<usize>> = (0..n).map(|l| vec![l]).collect();
    let mut used: Vec<Vec<bool>> = (0..n)
        .map(|l| {
            let mut u = vec![false; n];
            u[l] = true;
            u
        })
        .collect();
    let mut mass: Vec<f64> = (0..n).map(|l| p[l]).collect();
    let mut partial: Vec<f64> = (0..n).map(|l| survival(p[l], horizon)).collect();

    let mut weights = vec![vec![0.0; n]; n];
    let mut feasible = vec![vec![false; n]; n];
    for level in 1..n {
        let rank = (level + 1) as f64;
        for o in 0..n {
            for v in 0..n {
                feasible[o][v] = !used[o][v];
                weights[o][v] = if feasible[o][v] {
                    partial[o] + rank * survival(mass[o] + p[v], horizon)
                } else {
                    0.0
                };
            }
        }
        let assignment = max_weight_perfect_matching(&weights, &feasible)?;
        for (o, &v) in assignment.iter().enumerate() {
            debug_assert!(!used[o][v]);
            seqs[o].push(v);
            used[o][v] = true;
            mass[o] += p[v];
            partial[o] = weights[o][v];
        }
    }

    let mut ranked: Vec<(Permutation, f64)> = seqs
        .into_iter()
        .map(|s| {
            let perm = Permutation::from_vec_unchecked(s);
            let score = sequence_score(&perm, prior, horizon);
            (perm, score)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked)
}
