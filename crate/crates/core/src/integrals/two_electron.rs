//! Two-electron radial (Slater) integrals
//! `R^k = ∬ ρ₁(r₁) r_<^k / r_>^{k+1} ρ₂(r₂) dr₁ dr₂`.
//!
//! The kernel is split at `r₁ = r₂`; for a primitive density
//! `c r^n e^{-β r²}` both inner integrals are incomplete gamma functions,
//!
//! ```text
//! Y^k(r) = c β^{-n/2} / 2 · [ x^{-k-1} γ((n+k+1)/2, x²) + x^k Γ((n-k)/2, x²) ],   x = √β r
//! ```
//!
//! which is smooth in `ln r`. The remaining outer integral is done on a
//! logarithmic trapezoid grid, refined until two successive step sizes agree.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::basis::RadialFunction;
use crate::error::{Error, Result};
use crate::grid::LogGrid;
use crate::integrals::{ln_gauss_moment, SCREENING_THRESHOLD};
use crate::special::{lower_gamma_half, upper_gamma_half};

/// Relative agreement demanded between the `h` and `2h` outer quadratures.
pub const OUTER_TOLERANCE: f64 = 1e-12;
const INITIAL_STEP: f64 = 0.125;
const MAX_REFINEMENTS: u32 = 4;

/// One primitive `c r^n e^{-β r²}` of a charge density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityTerm {
    pub coeff: f64,
    pub power: u32,
    pub exponent: f64,
}

/// A radial charge density expanded in Gaussian primitives.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaussianDensity {
    terms: Vec<DensityTerm>,
}

impl GaussianDensity {
    /// The pointwise product `f(r) g(r)`.
    pub fn product(f: &RadialFunction, g: &RadialFunction) -> Self {
        let mut d = Self::default();
        d.add_product(f, g, 1.0);
        d
    }

    /// Accumulates `scale · f(r) g(r)`, merging equal primitives.
    pub fn add_product(&mut self, f: &RadialFunction, g: &RadialFunction, scale: f64) {
        for a in f.terms() {
            for b in g.terms() {
                self.push(DensityTerm {
                    coeff: scale * a.coeff * b.coeff,
                    power: a.power + b.power,
                    exponent: a.exponent + b.exponent,
                });
            }
        }
    }

    fn push(&mut self, t: DensityTerm) {
        if t.coeff == 0.0 {
            return;
        }
        if let Some(e) = self
            .terms
            .iter_mut()
            .find(|e| e.power == t.power && e.exponent == t.exponent)
        {
            e.coeff += t.coeff;
        } else {
            self.terms.push(t);
        }
    }

    pub fn terms(&self) -> &[DensityTerm] {
        &self.terms
    }

    /// Drops primitives whose integrated magnitude `|c| ∫ r^n e^{-βr²}` falls
    /// below the screening threshold relative to the largest one.
    pub fn screened(mut self) -> Self {
        let weight = |t: &DensityTerm| t.coeff.abs().ln() + ln_gauss_moment(t.power, t.exponent);
        let max = self.terms.iter().map(weight).fold(f64::NEG_INFINITY, f64::max);
        let cut = max + SCREENING_THRESHOLD.ln();
        self.terms.retain(|t| weight(t) >= cut);
        self
    }

    pub fn eval(&self, r: f64) -> f64 {
        let lr = r.ln();
        self.terms
            .iter()
            .map(|t| t.coeff.signum() * (t.coeff.abs().ln() + t.power as f64 * lr - t.exponent * r * r).exp())
            .sum()
    }

    /// Multipole potential `Y^k(r) = ∫ ρ(s) r_<^k / r_>^{k+1} ds`.
    pub fn potential(&self, k: u32, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| primitive_potential(k, t.power, t.exponent, t.coeff, r))
            .sum()
    }

    fn check_multipole(&self, k: u32) -> Result<()> {
        if let Some(t) = self.terms.iter().find(|t| t.power <= k) {
            return Err(Error::InvalidInput(format!(
                "density primitive r^{} too singular for multipole order {k}",
                t.power
            )));
        }
        Ok(())
    }
}

/// `Y^k` of the single primitive `coeff · r^n e^{-β r²}`; requires `n > k`.
#[inline]
pub fn primitive_potential(k: u32, n: u32, beta: f64, coeff: f64, r: f64) -> f64 {
    if coeff == 0.0 {
        return 0.0;
    }
    let x = beta.sqrt() * r;
    let z = x * x;
    let inner = lower_gamma_half(n + k + 1, z) / x.powi(k as i32 + 1);
    let outer = x.powi(k as i32) * upper_gamma_half(n - k, z);
    let scale = coeff.signum() * (coeff.abs().ln() - 0.5 * n as f64 * beta.ln()).exp();
    0.5 * scale * (inner + outer)
}

/// `R^k` between two densities, `∫ ρ₂(r) Y^k[ρ₁](r) dr`.
pub fn radial_coulomb(k: u32, rho1: &GaussianDensity, rho2: &GaussianDensity) -> Result<f64> {
    rho1.check_multipole(k)?;
    if rho1.terms.is_empty() || rho2.terms.is_empty() {
        return Ok(0.0);
    }
    let content = rho1
        .terms
        .iter()
        .chain(&rho2.terms)
        .map(|t| (t.power, t.exponent));
    let mut h = INITIAL_STEP;
    let mut last_failure = None;
    for _ in 0..=MAX_REFINEMENTS {
        let grid = LogGrid::covering(content.clone(), h);
        let values: Vec<f64> = grid
            .r
            .iter()
            .map(|&r| rho2.eval(r) * rho1.potential(k, r))
            .collect();
        let fine = grid.integrate_values(&values);
        let magnitude: f64 = values.iter().zip(&grid.w).map(|(v, w)| (v * w).abs()).sum();
        let (coarse, worst) = coarse_trapezoid(&grid, &values);
        let estimate = (fine - coarse).abs();
        if estimate <= OUTER_TOLERANCE * magnitude || magnitude == 0.0 {
            return Ok(fine);
        }
        last_failure = Some((estimate / magnitude, worst));
        h *= 0.5;
    }
    let (estimate, (lower, upper)) = last_failure.unwrap();
    Err(Error::QuadratureNonConvergence {
        tolerance: OUTER_TOLERANCE,
        estimate,
        lower,
        upper,
    })
}

/// Trapezoid on every other node, plus the subinterval with the largest
/// fine/coarse discrepancy.
fn coarse_trapezoid(grid: &LogGrid, values: &[f64]) -> (f64, (f64, f64)) {
    let n = values.len();
    let last = if (n - 1) % 2 == 0 { n - 1 } else { n - 2 };
    let mut coarse = 0.0;
    let mut worst = (0.0f64, (grid.r[0], grid.r[n - 1]));
    let mut i = 0;
    while i + 2 <= last {
        let c = grid.h * (values[i] * grid.r[i] + values[i + 2] * grid.r[i + 2]);
        let f = 0.5 * grid.h
            * (values[i] * grid.r[i] + 2.0 * values[i + 1] * grid.r[i + 1] + values[i + 2] * grid.r[i + 2]);
        coarse += c;
        let d = (c - f).abs();
        if d > worst.0 {
            worst = (d, (grid.r[i], grid.r[i + 2]));
        }
        i += 2;
    }
    // A dangling last interval is shared by both rules.
    if last < n - 1 {
        coarse += 0.5 * grid.h * (values[n - 2] * grid.r[n - 2] + values[n - 1] * grid.r[n - 1]);
    }
    (coarse, worst.1)
}

fn cmp_functions(a: &RadialFunction, b: &RadialFunction) -> Ordering {
    for (x, y) in a.terms().iter().zip(b.terms()) {
        let o = x
            .exponent
            .total_cmp(&y.exponent)
            .then(x.power.cmp(&y.power))
            .then(x.coeff.total_cmp(&y.coeff));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.terms().len().cmp(&b.terms().len())
}

fn ordered<'a>(a: &'a RadialFunction, b: &'a RadialFunction) -> (&'a RadialFunction, &'a RadialFunction) {
    if cmp_functions(a, b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

/// `R^l(ab, cd) = ∬ f_a(r₁) f_c(r₁) [r_<^l / r_>^{l+1}] f_b(r₂) f_d(r₂)`.
///
/// Arguments are put in a canonical order first, so all eight permutations
/// related by `a↔c`, `b↔d`, `(ac)↔(bd)` return bit-identical values.
pub fn slater_rl(
    l: u32,
    fa: &RadialFunction,
    fb: &RadialFunction,
    fc: &RadialFunction,
    fd: &RadialFunction,
) -> Result<f64> {
    let p1 = ordered(fa, fc);
    let p2 = ordered(fb, fd);
    let (p1, p2) = if cmp_functions(p1.0, p2.0).then_with(|| cmp_functions(p1.1, p2.1)) == Ordering::Greater {
        (p2, p1)
    } else {
        (p1, p2)
    };
    let rho1 = GaussianDensity::product(p1.0, p1.1);
    let rho2 = GaussianDensity::product(p2.0, p2.1);
    radial_coulomb(l, &rho1, &rho2)
}

/// Large and small radial components of one spinor, `(u, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialSpinor {
    pub large: RadialFunction,
    pub small: RadialFunction,
}

impl RadialSpinor {
    fn density_with(&self, other: &RadialSpinor) -> GaussianDensity {
        let mut d = GaussianDensity::default();
        d.add_product(&self.large, &other.large, 1.0);
        d.add_product(&self.small, &other.small, 1.0);
        d.screened()
    }
}

/// Direct integral `F_l(a, b)` over the densities `u_a² + v_a²` and `u_b² + v_b²`.
pub fn f_integral(l: u32, a: &RadialSpinor, b: &RadialSpinor) -> Result<f64> {
    let (a, b) = if cmp_functions(&a.large, &b.large) == Ordering::Greater { (b, a) } else { (a, b) };
    radial_coulomb(l, &a.density_with(a), &b.density_with(b))
}

/// Exchange integral `G_l(a, b)` over the overlap density `u_a u_b + v_a v_b`.
pub fn g_integral(l: u32, a: &RadialSpinor, b: &RadialSpinor) -> Result<f64> {
    let (a, b) = if cmp_functions(&a.large, &b.large) == Ordering::Greater { (b, a) } else { (a, b) };
    let rho = a.density_with(b);
    radial_coulomb(l, &rho, &rho)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlaterKind {
    Direct,
    Exchange,
}

/// Radial integrals between occupied shells, keyed by `(kind, l, a, b)`
/// with shell indices stored in ascending order.
#[derive(Clone, Debug, Default)]
pub struct SlaterCache {
    values: HashMap<(SlaterKind, u32, usize, usize), f64>,
    labels: Vec<String>,
}

impl SlaterCache {
    pub fn new(labels: Vec<String>) -> Self {
        Self { values: HashMap::new(), labels }
    }

    pub fn insert(&mut self, kind: SlaterKind, l: u32, a: usize, b: usize, value: f64) {
        self.values.insert((kind, l, a.min(b), a.max(b)), value);
    }

    pub fn get(&self, kind: SlaterKind, l: u32, a: usize, b: usize) -> Result<f64> {
        self.values
            .get(&(kind, l, a.min(b), a.max(b)))
            .copied()
            .ok_or_else(|| Error::MissingIntegral {
                kind: match kind {
                    SlaterKind::Direct => "F",
                    SlaterKind::Exchange => "G",
                },
                order: l,
                a: self.labels.get(a).cloned().unwrap_or_else(|| a.to_string()),
                b: self.labels.get(b).cloned().unwrap_or_else(|| b.to_string()),
            })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::AngularSymmetry;
    use crate::basis::large_function;

    fn s_gauss(z: f64) -> RadialFunction {
        large_function(AngularSymmetry::new(-1).unwrap(), z).unwrap()
    }

    #[test]
    fn potential_far_field_is_monopole() {
        let f = s_gauss(1.0);
        let rho = GaussianDensity::product(&f, &f);
        let r = 12.0;
        assert!((rho.potential(0, r) - 1.0 / r).abs() < 1e-14);
    }

    #[test]
    fn slater_symmetry_is_bit_exact() {
        let (a, b, c, d) = (s_gauss(0.3), s_gauss(1.1), s_gauss(4.0), s_gauss(0.9));
        let r0 = slater_rl(0, &a, &b, &c, &d).unwrap();
        assert_eq!(r0, slater_rl(0, &c, &b, &a, &d).unwrap());
        assert_eq!(r0, slater_rl(0, &a, &d, &c, &b).unwrap());
        assert_eq!(r0, slater_rl(0, &b, &a, &d, &c).unwrap());
    }

    #[test]
    fn direct_equals_exchange_on_the_diagonal() {
        let sp = RadialSpinor {
            large: s_gauss(1.0),
            small: crate::basis::kinetic_balance(AngularSymmetry::new(-1).unwrap(), 1.0)
                .unwrap()
                .scaled(0.01),
        };
        for l in [0, 1] {
            let f = f_integral(l, &sp, &sp).unwrap();
            let g = g_integral(l, &sp, &sp).unwrap();
            assert!((f - g).abs() < 1e-14 * f);
        }
    }

    #[test]
    fn cache_reports_missing_entries() {
        let mut c = SlaterCache::new(vec!["1s".into(), "2s".into()]);
        c.insert(SlaterKind::Direct, 0, 1, 0, 0.5);
        assert_eq!(c.get(SlaterKind::Direct, 0, 0, 1).unwrap(), 0.5);
        let err = c.get(SlaterKind::Exchange, 0, 0, 1).unwrap_err().to_string();
        assert!(err.contains("G^0(1s, 2s)"), "{err}");
    }
}
