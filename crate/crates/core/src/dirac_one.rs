//! One-electron radial Dirac problem in a κ block.
//!
//! Energies are on the rest-mass-subtracted scale: the Hamiltonian carries
//! `(β - 1) c²`, so bound electronic levels sit just below zero and the
//! negative continuum clusters near `-2c²`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::angular::AngularSymmetry;
use crate::basis::{GaussianTerm, RadialFunction, RadialShell};
use crate::error::{Error, Result};
use crate::integrals::two_electron::RadialSpinor;
use crate::integrals::KappaBlockMatrices;
use crate::linalg::symmetric_eigen;
use crate::nucleus::NucleusModel;

/// Speed of light in atomic units used throughout.
pub const DEFAULT_C: f64 = 137.03602;
/// Overlap eigenvalues below this fraction of the largest are discarded.
pub const DEFAULT_LINDEP: f64 = 1e-12;

/// Normalized large and small basis functions of one κ block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockFunctions {
    pub symmetry: AngularSymmetry,
    pub large: Vec<RadialFunction>,
    pub small: Vec<RadialFunction>,
}

impl BlockFunctions {
    pub fn from_shell(shell: &RadialShell) -> Self {
        Self {
            symmetry: shell.symmetry(),
            large: shell.large_functions(),
            small: shell.small_functions(),
        }
    }

    pub fn dim(&self) -> usize {
        self.large.len()
    }
}

/// An electronic eigenstate of a κ block.
#[derive(Clone, Debug)]
pub struct SpinorLevel {
    pub n: u32,
    pub symmetry: AngularSymmetry,
    pub energy: f64,
    pub coeff_large: DVector<f64>,
    pub coeff_small: DVector<f64>,
    pub functions: Arc<BlockFunctions>,
}

fn expand(coeffs: &DVector<f64>, funcs: &[RadialFunction]) -> RadialFunction {
    let mut terms: Vec<GaussianTerm> = Vec::new();
    for (c, f) in coeffs.iter().zip(funcs) {
        if *c == 0.0 {
            continue;
        }
        for t in f.terms() {
            match terms
                .iter_mut()
                .find(|x| x.power == t.power && x.exponent == t.exponent)
            {
                Some(x) => x.coeff += c * t.coeff,
                None => terms.push(GaussianTerm { coeff: c * t.coeff, ..*t }),
            }
        }
    }
    terms.retain(|t| t.coeff != 0.0);
    if terms.is_empty() {
        // Keep the zero function representable.
        let t = funcs[0].terms()[0];
        terms.push(GaussianTerm { coeff: 0.0, ..t });
    }
    RadialFunction::new(terms).expect("expansion of valid primitives")
}

impl SpinorLevel {
    pub fn label(&self) -> String {
        self.symmetry.label(self.n)
    }

    pub fn kappa(&self) -> i32 {
        self.symmetry.kappa()
    }

    /// `u(r)` as an explicit Gaussian expansion.
    pub fn large(&self) -> RadialFunction {
        expand(&self.coeff_large, &self.functions.large)
    }

    /// `v(r)` as an explicit Gaussian expansion.
    pub fn small(&self) -> RadialFunction {
        expand(&self.coeff_small, &self.functions.small)
    }

    pub fn radial_spinor(&self) -> RadialSpinor {
        RadialSpinor { large: self.large(), small: self.small() }
    }

    /// Stacked coefficient vector `(ξ, η)`.
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.coeff_large.len();
        DVector::from_fn(2 * n, |i, _| if i < n { self.coeff_large[i] } else { self.coeff_small[i - n] })
    }

    /// `ξ·S_LL·ξ + η·S_SS·η`.
    pub fn norm_squared(&self, m: &KappaBlockMatrices) -> f64 {
        (self.coeff_large.transpose() * &m.s_ll * &self.coeff_large)[0]
            + (self.coeff_small.transpose() * &m.s_ss * &self.coeff_small)[0]
    }
}

/// Dirac matrices of a κ block from its radial integrals:
/// `H = [[V_LL, c Πᵀ], [c Π, V_SS - 2c² S_SS]]`, `S = diag(S_LL, S_SS)`.
pub fn dirac_matrices(m: &KappaBlockMatrices, c: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.dim();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&m.v_ll);
    let c2 = 2.0 * c * c;
    for i in 0..n {
        for j in 0..n {
            h[(n + i, n + j)] = m.v_ss[(i, j)] - c2 * m.s_ss[(i, j)];
            let p = c * m.pi_sl[(i, j)];
            h[(n + i, j)] = p;
            h[(j, n + i)] = p;
        }
    }
    s.view_mut((0, 0), (n, n)).copy_from(&m.s_ll);
    s.view_mut((n, n), (n, n)).copy_from(&m.s_ss);
    (h, s)
}

pub fn assemble_block(shell: &RadialShell, model: &NucleusModel, c: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    dirac_matrices(&KappaBlockMatrices::assemble(shell, model), c)
}

/// Canonical orthonormalization: `X = U Λ^{-1/2}` over the retained overlap
/// eigenvectors.
pub fn orthonormalizer(s: &DMatrix<f64>, lindep: f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = symmetric_eigen(s);
    let largest = values.max();
    let smallest = values.min();
    if !(largest > 0.0) || smallest < -lindep * largest {
        return Err(Error::Conditioning { eigenvalue: smallest, largest });
    }
    let keep: Vec<usize> = (0..s.nrows())
        .filter(|&i| values[i] >= lindep * largest)
        .collect();
    let mut x = DMatrix::zeros(s.nrows(), keep.len());
    for (col, &i) in keep.iter().enumerate() {
        let scale = 1.0 / values[i].sqrt();
        x.set_column(col, &(vectors.column(i) * scale));
    }
    Ok(x)
}

/// Symmetric eigenproblem `H x = λ S x`; pairs ascending in `λ`, `S`-orthonormal.
pub fn solve_generalized(h: &DMatrix<f64>, s: &DMatrix<f64>, lindep: f64) -> Result<Vec<(f64, DVector<f64>)>> {
    if h.shape() != s.shape() || h.nrows() != h.ncols() {
        return Err(Error::InvalidInput(format!(
            "matrix shapes differ: H {:?}, S {:?}",
            h.shape(),
            s.shape()
        )));
    }
    let x = orthonormalizer(s, lindep)?;
    solve_in_basis(h, &x)
}

/// Solves `Xᵀ H X y = λ y` and returns `(λ, X y)` ascending.
///
/// Each `λ` is then replaced by the Rayleigh quotient `vᵀHv / vᵀv` in the
/// metric `XᵀX`-dual to `S`. The dense solver is only accurate to about
/// `ε‖H‖`, and `‖H‖ ~ 2c²` dwarfs valence energies; the quotient is second
/// order in the eigenvector error and has no large cancelling terms.
pub fn solve_in_basis(h: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<Vec<(f64, DVector<f64>)>> {
    Ok(reduced_eigenpairs(h, x)
        .into_iter()
        .map(|(e, y)| {
            let v = x * &y;
            let hv = h * &v;
            let refined = v.dot(&hv) / y.norm_squared();
            // Keep the raw value if the quotient went astray (e.g. a dropped direction).
            let e = if (refined - e).abs() <= 1e-8 * e.abs().max(1.0) { refined } else { e };
            (e, v)
        })
        .collect())
}

/// `(λ, y)` of `Xᵀ H X y = λ y`, ascending.
pub fn reduced_eigenpairs(h: &DMatrix<f64>, x: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let hp = x.transpose() * h * x;
    let (values, vectors) = symmetric_eigen(&((&hp + hp.transpose()) * 0.5));
    (0..values.len()).map(|i| (values[i], vectors.column(i).into_owned())).collect()
}

/// Keeps the eigenpairs above `-c²`, which must number exactly half the
/// block, and labels them `n = l+1, l+2, ...` by energy.
pub fn select_electronic(
    pairs: &[(f64, DVector<f64>)],
    c: f64,
    functions: &Arc<BlockFunctions>,
) -> Result<Vec<SpinorLevel>> {
    let n = functions.dim();
    let sym = functions.symmetry;
    let electronic: Vec<&(f64, DVector<f64>)> = pairs.iter().filter(|(e, _)| *e > -c * c).collect();
    if electronic.len() != n || n == 0 {
        return Err(Error::SpectrumSplitting { kappa: sym.kappa(), expected: n, found: electronic.len() });
    }
    Ok(electronic
        .into_iter()
        .enumerate()
        .map(|(i, (energy, vec))| {
            let mut level = SpinorLevel {
                n: sym.l_large() + 1 + i as u32,
                symmetry: sym,
                energy: *energy,
                coeff_large: vec.rows(0, n).into_owned(),
                coeff_small: vec.rows(n, n).into_owned(),
                functions: Arc::clone(functions),
            };
            fix_phase(&mut level);
            level
        })
        .collect())
}

/// Sign convention: the large component is positive next to the nucleus.
pub fn fix_phase(level: &mut SpinorLevel) {
    let origin: f64 = level
        .coeff_large
        .iter()
        .zip(&level.functions.large)
        .map(|(c, f)| c * f.terms()[0].coeff)
        .sum();
    if origin < 0.0 {
        level.coeff_large.neg_mut();
        level.coeff_small.neg_mut();
    }
}

/// Number of eigenvalues below and above `-c²`.
pub fn count_split(pairs: &[(f64, DVector<f64>)], c: f64) -> (usize, usize) {
    let below = pairs.iter().filter(|(e, _)| *e < -c * c).count();
    (below, pairs.len() - below)
}

/// Assembles and solves one κ block in a bare nuclear field.
pub fn solve_block(shell: &RadialShell, model: &NucleusModel, c: f64, lindep: f64) -> Result<Vec<SpinorLevel>> {
    let functions = Arc::new(BlockFunctions::from_shell(shell));
    let (h, s) = assemble_block(shell, model, c);
    let pairs = solve_generalized(&h, &s, lindep)?;
    select_electronic(&pairs, c, &functions)
}

/// Exact point-nucleus level, rest mass subtracted:
/// `c² [ (1 + (Zα / (n - |κ| + γ))²)^{-1/2} - 1 ]`, `γ = √(κ² - (Zα)²)`.
pub fn sommerfeld_energy(n: u32, kappa: i32, z: f64, c: f64) -> Result<f64> {
    let sym = AngularSymmetry::new(kappa)?;
    if n < sym.l_large() + 1 {
        return Err(Error::InvalidInput(format!("n = {n} is below l + 1 for kappa {kappa}")));
    }
    if !(z > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidInput(format!("need Z > 0 and c > 0, got Z = {z}, c = {c}")));
    }
    let za = z / c;
    let k = kappa.unsigned_abs();
    if za >= k as f64 {
        return Err(Error::Supercritical { z_alpha: za, kappa_abs: k as i32 });
    }
    let gamma = ((k as f64).powi(2) - za * za).sqrt();
    let t = (za / ((n - k) as f64 + gamma)).powi(2);
    // (1 + t)^{-1/2} - 1 without cancellation.
    Ok(c * c * (-0.5 * t.ln_1p()).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::even_tempered;
    use rand::{Rng, SeedableRng};

    fn shell(kappa: i32, alpha: f64, beta: f64, count: usize) -> RadialShell {
        RadialShell::new(AngularSymmetry::new(kappa).unwrap(), even_tempered(alpha, beta, count).unwrap()).unwrap()
    }

    #[test]
    fn sommerfeld_examples() {
        let e = sommerfeld_energy(1, -1, 1.0, DEFAULT_C).unwrap();
        assert!((e + 0.500_006_656_6).abs() < 1e-9, "{e}");
        let e = sommerfeld_energy(1, -1, 92.0, DEFAULT_C).unwrap();
        assert!((e + 4861.20).abs() < 0.01, "{e}");
        assert!(sommerfeld_energy(1, -1, 1e-9, DEFAULT_C).unwrap().abs() < 1e-17);
        assert!(matches!(sommerfeld_energy(1, -1, 200.0, DEFAULT_C), Err(Error::Supercritical { .. })));
        assert!(sommerfeld_energy(1, 1, 1.0, DEFAULT_C).is_err());
    }

    #[test]
    fn block_structure_and_c_scaling() {
        let sh = shell(-1, 0.1, 3.0, 4);
        let model = NucleusModel::point(3.0).unwrap();
        let (h1, s) = assemble_block(&sh, &model, 10.0);
        let (h2, _) = assemble_block(&sh, &model, 20.0);
        assert_eq!(h1, h1.transpose());
        assert_eq!(s, s.transpose());
        let n = 4;
        for i in 0..n {
            for j in 0..n {
                assert!((h2[(n + i, j)] - 2.0 * h1[(n + i, j)]).abs() < 1e-12 * h1[(n + i, j)].abs().max(1.0));
                assert_eq!(h1[(i, j)], h2[(i, j)]);
                assert_eq!(s[(i, n + j)], 0.0);
            }
        }
        let one = RadialShell::new(AngularSymmetry::new(-1).unwrap(), vec![1.0]).unwrap();
        let (h, _) = assemble_block(&one, &model, 10.0);
        let pi = crate::integrals::pi_element(one.symmetry(), 1.0, 1.0);
        assert_eq!(h[(1, 0)], 10.0 * pi);
    }

    #[test]
    fn small_small_shift_quadruples() {
        let sh = shell(2, 0.2, 2.5, 3);
        let m = KappaBlockMatrices::assemble(&sh, &NucleusModel::point(5.0).unwrap());
        let (h1, _) = dirac_matrices(&m, 7.0);
        let (h2, _) = dirac_matrices(&m, 14.0);
        for i in 0..3 {
            let d1 = h1[(3 + i, 3 + i)] - m.v_ss[(i, i)];
            let d2 = h2[(3 + i, 3 + i)] - m.v_ss[(i, i)];
            assert!((d2 / d1 - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0]);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]);
        // det(H - λS) = 0 → (1 - 0.04) λ² - (2·1 + (-1)·1 - 2·0.5·0.2) λ + (-2 - 0.25) = 0
        let (a, b, cc): (f64, f64, f64) = (0.96, -(1.0 - 0.2), -2.25);
        let disc = (b * b - 4.0 * a * cc).sqrt();
        let roots = [(-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)];
        let pairs = solve_generalized(&h, &s, DEFAULT_LINDEP).unwrap();
        for (p, r) in pairs.iter().zip(roots) {
            assert!((p.0 - r).abs() < 1e-14, "{} vs {r}", p.0);
        }
        let id = DMatrix::<f64>::identity(3, 3);
        assert!(solve_generalized(&id, &id, DEFAULT_LINDEP).unwrap().iter().all(|p| (p.0 - 1.0).abs() < 1e-15));
    }

    #[test]
    fn random_pairs_have_small_residuals() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..10 {
            let n = 6;
            let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let h = &a + a.transpose();
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let s = &b * b.transpose() + DMatrix::identity(n, n);
            for (lam, x) in solve_generalized(&h, &s, DEFAULT_LINDEP).unwrap() {
                let r = &h * &x - &s * &x * lam;
                assert!(r.norm() / x.norm() < 1e-9);
                assert!(((x.transpose() * &s * &x)[0] - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn indefinite_overlap_is_rejected() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(solve_generalized(&s, &s, DEFAULT_LINDEP), Err(Error::Conditioning { .. })));
    }

    #[test]
    fn hydrogen_ground_state() {
        let sh = shell(-1, 0.01, 2.0, 26);
        let levels = solve_block(&sh, &NucleusModel::point(1.0).unwrap(), DEFAULT_C, DEFAULT_LINDEP).unwrap();
        let exact = sommerfeld_energy(1, -1, 1.0, DEFAULT_C).unwrap();
        assert!(levels[0].energy >= exact - 1e-10);
        assert!((levels[0].energy - exact).abs() < 1e-6, "{}", levels[0].energy);
        assert_eq!(levels[0].label(), "1s");
        assert_eq!(levels[1].n, 2);
        let m = KappaBlockMatrices::assemble(&sh, &NucleusModel::point(1.0).unwrap());
        assert!((levels[0].norm_squared(&m) - 1.0).abs() < 1e-10);
        assert!(levels[0].large().origin_coefficient().1 > 0.0);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let sh = shell(-1, 1.0, 2.0, 2);
        let f = Arc::new(BlockFunctions::from_shell(&sh));
        let pairs = vec![(-1e9, DVector::zeros(4)); 4];
        assert!(matches!(select_electronic(&pairs, DEFAULT_C, &f), Err(Error::SpectrumSplitting { found: 0, .. })));
    }
}
