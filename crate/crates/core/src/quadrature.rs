//! Adaptive Gauss-Kronrod quadrature (7/15 point pair).
//!
//! Slow but assumption-free; used as the oracle for the closed-form
//! integrals and as a fallback path for two-electron integrals.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and `|K15 - G7|` on `[a, b]`.
pub fn gauss_kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    err: f64,
    a: f64,
    b: f64,
    value: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// `∫_a^b f`, bisecting the worst interval until the summed error estimate
/// is below `rel_tol · |I| + abs_tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    integrate_from(&f, &[a, b], rel_tol, abs_tol)
}

/// Like [`integrate`], starting from the given breakpoints.
pub fn integrate_from(f: &impl Fn(f64) -> f64, breaks: &[f64], rel_tol: f64, abs_tol: f64) -> Result<f64> {
    const MAX_PIECES: usize = 20_000;
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in breaks.windows(2) {
        let (value, e) = gauss_kronrod_15(f, w[0], w[1]);
        total += value;
        err += e;
        heap.push(Piece { err: e, a: w[0], b: w[1], value });
    }
    loop {
        if total.is_finite() && err <= rel_tol * total.abs() + abs_tol {
            return Ok(total);
        }
        let worst = heap.pop().expect("non-empty interval list");
        let mid = 0.5 * (worst.a + worst.b);
        if heap.len() >= MAX_PIECES || mid <= worst.a || mid >= worst.b || !total.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                tolerance: rel_tol,
                estimate: err / total.abs().max(f64::MIN_POSITIVE),
                lower: worst.a,
                upper: worst.b,
            });
        }
        total -= worst.value;
        err -= worst.err;
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, e) = gauss_kronrod_15(f, a, b);
            total += value;
            err += e;
            heap.push(Piece { err: e, a, b, value });
        }
        // Keep cancellation in the running sums from masking convergence.
        if heap.len() % 256 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.err).sum();
        }
    }
}

/// `∫_{r_lo}^{r_hi} f(r) dr` through `r = e^x`, with one breakpoint per decade.
pub fn integrate_radial(f: impl Fn(f64) -> f64, r_lo: f64, r_hi: f64, rel_tol: f64) -> Result<f64> {
    let (x0, x1) = (r_lo.ln(), r_hi.ln());
    let pieces = ((x1 - x0) / std::f64::consts::LN_10).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=pieces)
        .map(|i| x0 + (x1 - x0) * i as f64 / pieces as f64)
        .collect();
    let g = |x: f64| {
        let r = x.exp();
        r * f(r)
    };
    integrate_from(&g, &breaks, rel_tol, 0.0).map_err(|e| match e {
        Error::QuadratureNonConvergence { tolerance, estimate, lower, upper } => {
            Error::QuadratureNonConvergence { tolerance, estimate, lower: lower.exp(), upper: upper.exp() }
        }
        other => other,
    })
}

/// Nested 2-D evaluation of `∬ ρ₁(s) r_<^k / r_>^{k+1} ρ₂(r) ds dr`.
pub fn slater_nested(
    k: u32,
    rho1: impl Fn(f64) -> f64,
    rho2: impl Fn(f64) -> f64,
    r_lo: f64,
    r_hi: f64,
    rel_tol: f64,
) -> Result<f64> {
    let kk = k as i32;
    let inner = |r: f64| -> f64 {
        let below = if r > r_lo {
            integrate_radial(|s| rho1(s) * (s / r).powi(kk), r_lo, r, rel_tol).unwrap_or(f64::NAN)
        } else {
            0.0
        };
        let above = if r < r_hi {
            integrate_radial(|s| rho1(s) * (r / s).powi(kk) / s, r, r_hi, rel_tol).unwrap_or(f64::NAN)
        } else {
            0.0
        };
        below / r + above
    };
    let v = integrate_radial(|r| rho2(r) * inner(r), r_lo, r_hi, rel_tol)?;
    if v.is_nan() {
        return Err(Error::QuadratureNonConvergence { tolerance: rel_tol, estimate: f64::NAN, lower: r_lo, upper: r_hi });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_is_exact_for_polynomials() {
        let (v, _) = gauss_kronrod_15(&|x: f64| x.powi(20), 0.0, 1.0);
        assert!((v - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn radial_gaussian_moment() {
        let v = integrate_radial(|r| r * r * (-r * r).exp(), 1e-8, 12.0, 1e-13).unwrap();
        assert!((v - std::f64::consts::PI.sqrt() / 4.0).abs() < 1e-14);
    }

    #[test]
    fn nested_slater_of_unit_gaussians() {
        // Unit charge clouds ∝ e^{-r²} repel with energy √(2/π).
        let n2 = 4.0 / std::f64::consts::PI.sqrt();
        let rho = |r: f64| n2 * r * r * (-r * r).exp();
        let v = slater_nested(0, rho, rho, 1e-6, 9.0, 1e-11).unwrap();
        assert!((v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-9, "{v}");
    }

    #[test]
    fn reports_failure_region() {
        match integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-12, 0.0) {
            Err(Error::QuadratureNonConvergence { lower, upper, .. }) => {
                assert_eq!(lower, 0.0);
                assert!(upper < 1e-6);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
