//! Small numeric helpers usable without `std`.

/// `base^exp` by repeated squaring. `powi(0.0, 0) == 1.0`.
pub fn powi(base: f64, exp: u64) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// SplitMix64 finalizer applied to `seed` offset by `index`.
///
/// Used to derive independent child seeds (per shard, per purpose) from one
/// master seed so results never depend on evaluation order.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n!` saturating at `u128::MAX`.
pub fn factorial_saturating(n: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 2..=n as u128 {
        acc = acc.saturating_mul(i);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_matches_std() {
        for &b in &[0.0, 0.25, 0.5, 0.9, 1.0, 1.5] {
            for e in 0..20u64 {
                let want = f64::powi(b, e as i32);
                assert!((powi(b, e) - want).abs() <= 1e-15 * want.abs().max(1.0));
            }
        }
        assert_eq!(powi(0.0, 0), 1.0);
    }

    #[test]
    fn derived_seeds_differ() {
        let a: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(a.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn factorial_values() {
        assert_eq!(factorial_saturating(0), 1);
        assert_eq!(factorial_saturating(5), 120);
        assert_eq!(factorial_saturating(200), u128::MAX);
    }
}
