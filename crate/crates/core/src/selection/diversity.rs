use alloc::vec;

use crate::{Error, Permutation, Result};

/// Number of positions where `a` and `b` hold different slices.
pub fn positional_distance(a: &Permutation, b: &Permutation) -> usize {
    a.order().iter().zip(b.order()).filter(|(x, y)| x != y).count()
}

/// Mean [`positional_distance`] over all unordered pairs.
///
/// Computed from per-position slice counts: a pair agrees at position `q`
/// iff both hold the same slice there, so the total agreement is
/// `sum_{q,s} C(count[q][s], 2)`.
pub fn avg_pairwise_diversity(seqs: &[Permutation]) -> Result<f64> {
    let n = seqs.len();
    if n < 2 {
        return Err(Error::DiversityUndefined);
    }
    let len = seqs[0].len();
    let mut counts = vec![vec![0u64; len]; len];
    for s in seqs {
        for (q, slice) in s.order().iter().enumerate() {
            counts[q][slice.get()] += 1;
        }
    }
    let agreements: u64 = counts.iter().flatten().map(|&c| c * c.saturating_sub(1) / 2).sum();
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    Ok(len as f64 - agreements as f64 / pairs as f64)
}

/// True iff no slice appears twice at the same position.
pub fn is_position_diverse(seqs: &[Permutation]) -> bool {
    let Some(first) = seqs.first() else {
        return true;
    };
    let len = first.len();
    let mut seen = vec![vec![false; len]; len];
    for s in seqs {
        for (q, slice) in s.order().iter().enumerate() {
            if core::mem::replace(&mut seen[q][slice.get()], true) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn swapped_tail_has_distance_two() {
        let d = avg_pairwise_diversity(&[p(&[0, 1, 2]), p(&[0, 2, 1])]).unwrap();
        assert_eq!(d, 2.0);
    }

    #[test]
    fn identical_pair_has_zero() {
        assert_eq!(avg_pairwise_diversity(&[p(&[1, 0]), p(&[1, 0])]).unwrap(), 0.0);
    }

    #[test]
    fn single_sequence_is_undefined() {
        assert_eq!(avg_pairwise_diversity(&[p(&[0])]), Err(Error::DiversityUndefined));
    }
}
