use crate::math::powi;
use crate::{DeletionPrior, Permutation, SliceIndex};

/// Expected number of functioning slices after `horizon` deletions for a
/// (possibly partial) ordering: `sum_i i * (1 - P(first i slices))^t`.
///
/// Prefix masses drifting above 1 through rounding are clamped to 1, and
/// `0^0 = 1`.
pub fn prefix_score(prefix: &[SliceIndex], prior: &DeletionPrior, horizon: u32) -> f64 {
    let mut mass = 0.0;
    let mut score = 0.0;
    for (i, &s) in prefix.iter().enumerate() {
        mass += prior.prob(s);
        score += (i + 1) as f64 * survival(mass, horizon);
    }
    score
}

pub(crate) fn survival(mass: f64, horizon: u32) -> f64 {
    powi((1.0 - mass).clamp(0.0, 1.0), horizon as u64)
}

pub fn sequence_score(perm: &Permutation, prior: &DeletionPrior, horizon: u32) -> f64 {
    prefix_score(perm.order(), prior, horizon)
}

/// Sum of [`sequence_score`] over a set of orderings.
pub fn total_score(seqs: &[Permutation], prior: &DeletionPrior, horizon: u32) -> f64 {
    seqs.iter().map(|s| sequence_score(s, prior, horizon)).sum()
}
