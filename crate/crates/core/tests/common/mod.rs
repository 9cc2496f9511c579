#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use s3t_core::montecarlo::sample_dirichlet;
use s3t_core::DeletionPrior;

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                go(cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Exhaustive maximum; the first permutation (lexicographic) within `tol`
/// of the best total wins.
pub fn brute_force_matching(w: &[Vec<f64>], feasible: &[Vec<bool>], tol: f64) -> Option<(Vec<usize>, f64)> {
    let n = w.len();
    let mut scored: Vec<(Vec<usize>, f64)> = permutations(n)
        .into_iter()
        .filter(|p| (0..n).all(|i| feasible[i][p[i]]))
        .map(|p| {
            let total = (0..n).map(|i| w[i][p[i]]).sum();
            (p, total)
        })
        .collect();
    let best = scored.iter().map(|(_, t)| *t).fold(f64::NEG_INFINITY, f64::max);
    scored.retain(|(_, t)| *t >= best - tol);
    scored.into_iter().next()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..n).map(|_| rng.random_range(-5.0..10.0)).collect()).collect()
}

pub fn dirichlet(len: usize, alpha: f64, rng: &mut ChaCha8Rng) -> DeletionPrior {
    sample_dirichlet(len, alpha, rng).unwrap()
}

pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Stirling numbers of the second kind, `s2[r][s]`.
pub fn stirling2(max: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; max + 1]; max + 1];
    s[0][0] = 1.0;
    for r in 1..=max {
        for k in 1..=r {
            s[r][k] = k as f64 * s[r - 1][k] + s[r - 1][k - 1];
        }
    }
    s
}

fn falling(n: u64, k: u64) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// Exact `P[best prefix >= k]` after `r` uniform with-replacement requests
/// on one shard whose `B` sequences are distinct and uniformly random.
///
/// Conditioned on the set `S` of struck slices (size `s`), the shard fails
/// iff every chosen sequence has a struck slice in its top `k`; `F(s)` of
/// the `L!` orderings do, so failure has probability `C(F, B) / C(L!, B)`.
pub fn exact_random_plan_retention(k: usize, l: usize, r: u64, b: usize) -> f64 {
    let (k, l64) = (k as u64, l as u64);
    if r == 0 {
        return 1.0;
    }
    let total = falling(l64, l64);
    let s2 = stirling2(r as usize);
    let mut fail = 0.0;
    for s in 1..=l64.min(r) {
        let p_s = binomial(l64, s) * falling(s, s) * s2[r as usize][s as usize] / (l64 as f64).powi(r as i32);
        let avoid = if s + k > l64 { 0.0 } else { falling(l64 - s, k) * falling(l64 - k, l64 - k) };
        let f = total - avoid;
        fail += p_s * binomial(f as u64, b as u64) / binomial(total as u64, b as u64);
    }
    1.0 - fail
}
