//! Special functions on the half-integer lattice.
//!
//! Every Gaussian radial integral in this crate reduces to gamma functions
//! of arguments `s = m/2`. Arguments are therefore passed doubled
//! (`two_s = 2s`) so that the dispatch between the integer and
//! half-integer branches is exact.

use std::f64::consts::PI;

/// `erf(x)` (musl-derived, ~1 ulp).
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// `erfc(x)` without cancellation for large `x`.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `ln Γ(two_s / 2)` for `two_s >= 1`, built up from Γ(1/2) = √π and Γ(1) = 1.
pub fn ln_gamma_half(two_s: u32) -> f64 {
    assert!(two_s >= 1, "gamma argument must be positive");
    // Table covers every order reachable by atomic integrals; the loop is the fallback.
    if (two_s as usize) < LN_GAMMA_TABLE_LEN {
        return ln_gamma_table()[two_s as usize];
    }
    ln_gamma_half_direct(two_s)
}

fn ln_gamma_half_direct(two_s: u32) -> f64 {
    let (mut acc, mut t) = if two_s % 2 == 1 {
        (0.5 * PI.ln(), 1u32)
    } else {
        (0.0, 2u32)
    };
    while t < two_s {
        acc += (t as f64 / 2.0).ln();
        t += 2;
    }
    acc
}

const LN_GAMMA_TABLE_LEN: usize = 96;

fn ln_gamma_table() -> &'static [f64; LN_GAMMA_TABLE_LEN] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[f64; LN_GAMMA_TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [f64::NAN; LN_GAMMA_TABLE_LEN];
        for (i, v) in t.iter_mut().enumerate().skip(1) {
            *v = ln_gamma_half_direct(i as u32);
        }
        t
    })
}

/// `Γ(two_s / 2)`.
pub fn gamma_half(two_s: u32) -> f64 {
    ln_gamma_half(two_s).exp()
}

/// Upper incomplete gamma `Γ(s, z)` with `s = two_s / 2 > 0`, `z >= 0`.
///
/// Seeded by `Γ(1/2, z) = √π erfc(√z)` or `Γ(1, z) = e^{-z}` and raised with
/// `Γ(s+1, z) = s Γ(s, z) + z^s e^{-z}`, which only adds positive terms.
pub fn upper_gamma_half(two_s: u32, z: f64) -> f64 {
    assert!(two_s >= 1);
    debug_assert!(z >= 0.0);
    let ez = (-z).exp();
    let (mut t, mut value, mut zpow) = if two_s % 2 == 1 {
        (1u32, PI.sqrt() * erfc(z.sqrt()), z.sqrt())
    } else {
        (2u32, ez, z)
    };
    while t < two_s {
        let s = t as f64 / 2.0;
        value = s * value + zpow * ez;
        zpow *= z;
        t += 2;
    }
    value
}

/// Lower incomplete gamma `γ(s, z)` with `s = two_s / 2 > 0`, `z >= 0`.
///
/// Power series below `z = s + 1`, complement of the upper function above.
pub fn lower_gamma_half(two_s: u32, z: f64) -> f64 {
    assert!(two_s >= 1);
    debug_assert!(z >= 0.0);
    let s = two_s as f64 / 2.0;
    if z == 0.0 {
        return 0.0;
    }
    if z < s + 1.0 {
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut a = s;
        for _ in 0..500 {
            a += 1.0;
            term *= z / a;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        let log_pref = s * z.ln() - z;
        sum * log_pref.exp()
    } else {
        gamma_half(two_s) - upper_gamma_half(two_s, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series for erf, summed in extended steps; reliable for |x| <= 3.
    fn erf_series(x: f64) -> f64 {
        let mut sum = 0.0f64;
        let mut term = x;
        let mut n = 0u32;
        loop {
            let contrib = term / (2 * n + 1) as f64;
            sum += contrib;
            if contrib.abs() < 1e-18 * sum.abs() {
                break;
            }
            n += 1;
            term *= -x * x / n as f64;
        }
        2.0 / PI.sqrt() * sum
    }

    #[test]
    fn erf_matches_series() {
        // The alternating series loses about e^{x²} in relative accuracy, so
        // the oracle is only trusted where that stays below one ulp-ish.
        for i in 1..=30 {
            let x = i as f64 * 0.05;
            let rel = (erf(x) - erf_series(x)).abs() / erf_series(x);
            assert!(rel < 1e-15, "x = {x}, rel = {rel:e}");
        }
    }

    #[test]
    fn gamma_half_values() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half(2) - 1.0).abs() < 1e-15);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-14);
        assert!((gamma_half(10) - 24.0).abs() < 1e-12);
    }

    #[test]
    fn incomplete_gammas_partition_the_complete_one() {
        for two_s in 1..20 {
            for &z in &[1e-6, 0.3, 1.0, 2.5, 7.0, 20.0, 60.0] {
                let total = gamma_half(two_s);
                let sum = lower_gamma_half(two_s, z) + upper_gamma_half(two_s, z);
                assert!((sum - total).abs() < 1e-13 * total, "s={two_s}/2 z={z}");
            }
        }
    }

    #[test]
    fn lower_gamma_closed_forms() {
        // γ(1, z) = 1 - e^{-z}; γ(1/2, z) = √π erf(√z)
        for &z in &[1e-8, 0.01, 0.5, 3.0, 30.0] {
            let g1 = -(-z as f64).exp_m1();
            assert!((lower_gamma_half(2, z) - g1).abs() <= 1e-15 * g1.max(1e-300) * 4.0);
            let gh = PI.sqrt() * erf(z.sqrt());
            assert!((lower_gamma_half(1, z) - gh).abs() <= 1e-14 * gh);
        }
    }
}
