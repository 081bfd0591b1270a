//! Radial matrix elements over Gaussian primitives.
//!
//! One-electron integrals are closed forms over the moments
//! `∫₀^∞ r^n e^{-a r²} dr`, evaluated in log space because exponents for
//! superheavy cores reach 1e9 bohr⁻² and beyond. Two-electron (Slater)
//! integrals live in [`two_electron`].

pub mod two_electron;

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::angular::AngularSymmetry;
use crate::basis::{RadialFunction, RadialShell};
use crate::nucleus::NucleusModel;
use crate::special::ln_gamma_half;

pub use two_electron::{
    f_integral, g_integral, radial_coulomb, slater_rl, GaussianDensity, SlaterCache, SlaterKind,
};

/// Relative screening threshold for primitive pair contributions.
pub const SCREENING_THRESHOLD: f64 = 1e-18;

/// `ln ∫₀^∞ r^n e^{-a r²} dr = ln Γ((n+1)/2) - ln 2 - (n+1)/2 · ln a`.
#[inline]
pub fn ln_gauss_moment(n: u32, a: f64) -> f64 {
    ln_gamma_half(n + 1) - std::f64::consts::LN_2 - 0.5 * (n as f64 + 1.0) * a.ln()
}

/// `∫₀^∞ r^n e^{-a r²} dr = Γ((n+1)/2) / (2 a^{(n+1)/2})`.
pub fn gauss_moment(n: u32, a: f64) -> f64 {
    assert!(a > 0.0, "Gaussian moment needs a positive exponent");
    ln_gauss_moment(n, a).exp()
}

/// `Σ c_i c_j w(n, a) ∫ r^n e^{-a r²} dr` over term pairs, `n = p_i + p_j + shift`,
/// `a = ζ_i + ζ_j`.
///
/// Pairs sharing `a` and the parity of `n` are summed in linear space against
/// the lowest moment of their group, using `M(n+2) = (n+1)/(2a) M(n)`. The
/// kinetic-balance terms of one function cancel strongly against each other
/// when paired with a much more diffuse partner, and only one `exp` per group
/// keeps that cancellation at the level of a few ulps.
fn moment_sum(f: &RadialFunction, g: &RadialFunction, shift: i32, weight: impl Fn(u32, f64) -> f64) -> f64 {
    // (a, lowest n, [(n, c)])
    let mut groups: Vec<(f64, u32, Vec<(u32, f64)>)> = Vec::new();
    for x in f.terms() {
        for y in g.terms() {
            let c = x.coeff * y.coeff;
            if c == 0.0 {
                continue;
            }
            let n = x.power as i32 + y.power as i32 + shift;
            assert!(n >= 0, "divergent radial moment r^{n}");
            let (n, a) = (n as u32, x.exponent + y.exponent);
            match groups.iter_mut().find(|(ga, gn, _)| *ga == a && gn % 2 == n % 2) {
                Some(group) => {
                    group.1 = group.1.min(n);
                    group.2.push((n, c));
                }
                None => groups.push((a, n, vec![(n, c)])),
            }
        }
    }
    screened_sum(groups.into_iter().map(|(a, n0, pairs)| {
        let linear: f64 = pairs
            .iter()
            .map(|&(n, c)| {
                let ratio: f64 = (n0..n).step_by(2).map(|m| (m as f64 + 1.0) / (2.0 * a)).product();
                c * ratio * weight(n, a)
            })
            .sum();
        if linear.is_finite() {
            linear * ln_gauss_moment(n0, a).exp()
        } else {
            // Coefficient products out of range: fall back to per-pair logarithms.
            pairs
                .iter()
                .map(|&(n, c)| c.signum() * (c.abs().ln() + ln_gauss_moment(n, a)).exp() * weight(n, a))
                .sum()
        }
    }))
}

/// Sum with magnitude screening against the running maximum.
fn screened_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut max = 0.0f64;
    let mut sum = 0.0;
    for v in values {
        let m = v.abs();
        if m > max {
            max = m;
        }
        if m >= SCREENING_THRESHOLD * max {
            sum += v;
        }
    }
    sum
}

/// `⟨f | r^k | g⟩`.
pub fn r_power_element(f: &RadialFunction, g: &RadialFunction, k: i32) -> f64 {
    moment_sum(f, g, k, |_, _| 1.0)
}

/// `⟨f | g⟩ = ∫₀^∞ f g dr`.
pub fn overlap(f: &RadialFunction, g: &RadialFunction) -> f64 {
    r_power_element(f, g, 0)
}

/// `⟨D f_i | D f_j⟩` for normalized large primitives, `D = d/dr + κ/r`.
///
/// Expanding the product leaves `A² M(2l) - A(2l+1) M(2l) + 4ζ_iζ_j M(2l+4)`
/// with `A = l + 1 + κ`, and `A(A - 2l - 1) = 0` for both signs of κ. The
/// closed form keeps only the last term, so widely separated exponents lose
/// nothing to cancellation.
pub fn kinetic_overlap(symmetry: AngularSymmetry, zeta_i: f64, zeta_j: f64) -> f64 {
    let (zeta_i, zeta_j) = if zeta_i <= zeta_j { (zeta_i, zeta_j) } else { (zeta_j, zeta_i) };
    let l = symmetry.l_large();
    let ln_norm = |z: f64| -0.5 * ln_gauss_moment(2 * l + 2, 2.0 * z);
    (4f64.ln() + zeta_i.ln() + zeta_j.ln() + ln_norm(zeta_i) + ln_norm(zeta_j)
        + ln_gauss_moment(2 * l + 4, zeta_i + zeta_j))
    .exp()
}

/// Overlap of two normalized kinetic-balance partners.
pub fn small_overlap(symmetry: AngularSymmetry, zeta_i: f64, zeta_j: f64) -> f64 {
    let d = |z: f64| kinetic_overlap(symmetry, z, z).sqrt();
    kinetic_overlap(symmetry, zeta_i, zeta_j) / (d(zeta_i) * d(zeta_j))
}

/// `⟨g(ζ_s) | (d/dr + κ/r) | f(ζ_l)⟩` with `g` the normalized kinetic-balance
/// partner of the large primitive of exponent `ζ_s`.
pub fn pi_element(symmetry: AngularSymmetry, small_zeta: f64, large_zeta: f64) -> f64 {
    kinetic_overlap(symmetry, small_zeta, large_zeta) / kinetic_overlap(symmetry, small_zeta, small_zeta).sqrt()
}

/// `R_m = ∫ r^m erf(c r) e^{-a r²} dr / ∫ r^m e^{-a r²} dr` with `c² = η`.
///
/// Integration by parts gives
/// `R_m = R_{m-2} + Γ(m/2)/(√π Γ((m+1)/2)) · (c/√b) · (a/b)^{(m-1)/2}`,
/// `b = a + c²`, seeded by `R_{-1} = 0` or `R_0 = (2/π) arctan(c/√a)`.
/// Every increment is positive and `R_m ∈ (0, 1)`.
pub fn erf_moment_ratio(m: u32, a: f64, eta: f64) -> f64 {
    let b = a + eta;
    let cb = (eta / b).sqrt();
    let ratio_ab = a / b;
    let (mut r, mut k) = if m % 2 == 0 {
        (2.0 / PI * (eta / a).sqrt().atan(), 2u32)
    } else {
        (0.0, 1u32)
    };
    while k <= m {
        let gam = (ln_gamma_half(k) - ln_gamma_half(k + 1)).exp() / PI.sqrt();
        r += gam * cb * ratio_ab.powf(0.5 * (k as f64 - 1.0));
        k += 2;
    }
    r
}

/// `∫₀^∞ r^m erf(√η r) e^{-a r²} dr`.
pub fn erf_gauss_moment(m: u32, a: f64, eta: f64) -> f64 {
    gauss_moment(m, a) * erf_moment_ratio(m, a, eta)
}

/// `⟨f | V_nuc | g⟩` for either nuclear model.
pub fn nuclear_element(f: &RadialFunction, g: &RadialFunction, model: &NucleusModel) -> f64 {
    let z = model.z();
    -z * match *model {
        NucleusModel::Point { .. } => moment_sum(f, g, -1, |_, _| 1.0),
        NucleusModel::Gaussian { eta, .. } => moment_sum(f, g, -1, |m, a| erf_moment_ratio(m, a, eta)),
    }
}

/// One-electron radial matrices of a κ block in the RKB basis.
#[derive(Clone, Debug)]
pub struct KappaBlockMatrices {
    pub symmetry: AngularSymmetry,
    pub s_ll: DMatrix<f64>,
    pub s_ss: DMatrix<f64>,
    /// `Π[i][j] = ⟨g_i | (d/dr + κ/r) | f_j⟩`, small rows, large columns.
    pub pi_sl: DMatrix<f64>,
    pub v_ll: DMatrix<f64>,
    pub v_ss: DMatrix<f64>,
}

impl KappaBlockMatrices {
    pub fn assemble(shell: &RadialShell, model: &NucleusModel) -> Self {
        let sym = shell.symmetry();
        let large = shell.large_functions();
        let small = shell.small_functions();
        let mut m = Self::from_functions(sym, &large, &small, model);
        // Exact forms for the pieces that cancel badly across exponent scales.
        let z = shell.exponents();
        for i in 0..z.len() {
            for j in 0..z.len() {
                if j <= i {
                    let v = if i == j { 1.0 } else { small_overlap(sym, z[i], z[j]) };
                    m.s_ss[(i, j)] = v;
                    m.s_ss[(j, i)] = v;
                }
                m.pi_sl[(i, j)] = pi_element(sym, z[i], z[j]);
            }
        }
        m
    }

    pub fn from_functions(
        symmetry: AngularSymmetry,
        large: &[RadialFunction],
        small: &[RadialFunction],
        model: &NucleusModel,
    ) -> Self {
        let n = large.len();
        let sym_matrix = |fs: &[RadialFunction], op: &dyn Fn(&RadialFunction, &RadialFunction) -> f64| {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = op(&fs[i], &fs[j]);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            m
        };
        let s_ll = sym_matrix(large, &|a, b| overlap(a, b));
        let s_ss = sym_matrix(small, &|a, b| overlap(a, b));
        let v_ll = sym_matrix(large, &|a, b| nuclear_element(a, b, model));
        let v_ss = sym_matrix(small, &|a, b| nuclear_element(a, b, model));
        let images: Vec<RadialFunction> = large.iter().map(|f| f.apply_dkappa(symmetry.kappa())).collect();
        let mut pi_sl = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                pi_sl[(i, j)] = overlap(&small[i], &images[j]);
            }
        }
        Self { symmetry, s_ll, s_ss, pi_sl, v_ll, v_ss }
    }

    pub fn dim(&self) -> usize {
        self.s_ll.nrows()
    }

    /// Smallest overlap eigenvalue over both components, for conditioning diagnostics.
    pub fn min_overlap_eigenvalue(&self) -> f64 {
        let a = crate::linalg::symmetric_eigen(&self.s_ll).0.min();
        let b = crate::linalg::symmetric_eigen(&self.s_ss).0.min();
        a.min(b)
    }
}
