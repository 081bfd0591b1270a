//! Average-of-configuration Dirac-Hartree-Fock.
//!
//! Two-electron terms are assembled on a logarithmic grid from tabulated
//! multipole potentials `Y^k[χ_ν χ_λ](r_i)` of basis-function products. The
//! potentials themselves are exact (incomplete gamma functions); only the
//! outer radial integral is a quadrature, and the grid is validated against
//! the analytic overlap matrices before use.
//!
//! Energy of a set of shells `a` with occupations `q_a` and `g_a = 2j_a + 1`:
//!
//! ```text
//! E = Σ_a q_a h_aa
//!   + Σ_a ½ q_a (q_a - 1) [ F⁰(aa) - g_a/(g_a - 1) Σ_{k>0} Γᵏ_aa Fᵏ(aa) ]
//!   + Σ_{a<b} q_a q_b [ F⁰(ab) - Σ_k Γᵏ_ab Gᵏ(ab) ]
//! ```
//!
//! Its derivative gives one Fock operator per shell,
//! `F_a = h + Σ_b q_b w_ab (J_b - Σ_k Γᵏ_ab Kᵏ_b)` with `w_ab = 1` except
//! `w_aa = (q_a - 1) g_a / (q_a (g_a - 1))`, which is also 1 for a closed shell.
//! All closed shells of a κ therefore share one operator; an open shell gets
//! its own and is solved in the complement of the lower shells of its κ.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::angular::{allowed_l_range, gamma_coefficient, AngularSymmetry};
use crate::basis::{Basis, RadialFunction};
use crate::dirac_one::{dirac_matrices, fix_phase, orthonormalizer, reduced_eigenpairs, BlockFunctions, SpinorLevel};
use crate::error::{Error, Result};
use crate::grid::LogGrid;
use crate::linalg::symmetric_eigen;
use crate::integrals::{GaussianDensity, KappaBlockMatrices, SlaterCache, SlaterKind};
use crate::nucleus::NucleusModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Occupation {
    pub n: u32,
    pub symmetry: AngularSymmetry,
    pub occupation: f64,
}

impl Occupation {
    pub fn new(n: u32, symmetry: AngularSymmetry, occupation: f64) -> Result<Self> {
        if n < symmetry.l_large() + 1 {
            return Err(Error::InvalidInput(format!("no {}{} shell for n = {n}", n, symmetry.l_letter())));
        }
        let cap = symmetry.degeneracy() as f64;
        if !(occupation > 0.0 && occupation <= cap) {
            return Err(Error::InvalidInput(format!(
                "occupation {occupation} of {} outside (0, {cap}]",
                symmetry.label(n)
            )));
        }
        Ok(Self { n, symmetry, occupation })
    }

    pub fn label(&self) -> String {
        self.symmetry.label(self.n)
    }

    pub fn capacity(&self) -> f64 {
        self.symmetry.degeneracy() as f64
    }

    pub fn is_closed(&self) -> bool {
        self.occupation == self.capacity()
    }

    /// Intra-shell weight `(q - 1) g / (q (g - 1))`.
    pub fn self_weight(&self) -> f64 {
        let (q, g) = (self.occupation, self.capacity());
        (q - 1.0) * g / (q * (g - 1.0))
    }
}

/// Ground-state style filling: subshells in `n + l`, then `n` order, with
/// `j = l - 1/2` before `j = l + 1/2`. The last subshell may be partial.
pub fn aufbau_occupations(electrons: u32) -> Result<Vec<Occupation>> {
    if electrons == 0 {
        return Err(Error::InvalidInput("at least one electron is required".into()));
    }
    let mut left = electrons as f64;
    let mut out = Vec::new();
    'outer: for sum in 1u32.. {
        for l in (0..sum).rev() {
            let n = sum - l;
            if l >= n {
                continue;
            }
            let mut parts = Vec::new();
            if l > 0 {
                parts.push(AngularSymmetry::from_l(l, false)?);
            }
            parts.push(AngularSymmetry::from_l(l, true)?);
            for sym in parts {
                let take = left.min(sym.degeneracy() as f64);
                out.push(Occupation::new(n, sym, take)?);
                left -= take;
                if left <= 0.0 {
                    break 'outer;
                }
            }
        }
    }
    sort_levels(&mut out, |o| (o.n, o.symmetry));
    Ok(out)
}

/// Orders anything level-like as 1s, 2s, 2p-, 2p, 3s, ...
pub fn sort_levels<T>(items: &mut [T], key: impl Fn(&T) -> (u32, AngularSymmetry)) {
    items.sort_by(|a, b| {
        let (na, sa) = key(a);
        let (nb, sb) = key(b);
        na.cmp(&nb).then(sa.cmp(&sb))
    });
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomSpec {
    pub model: NucleusModel,
    pub c: f64,
    pub occupations: Vec<Occupation>,
}

impl AtomSpec {
    /// Validates and sorts the occupations; within each κ the principal
    /// numbers must run contiguously from `l + 1`.
    pub fn new(model: NucleusModel, c: f64, mut occupations: Vec<Occupation>) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidInput(format!("speed of light must be positive, got {c}")));
        }
        if occupations.is_empty() {
            return Err(Error::InvalidInput("no occupied shells".into()));
        }
        sort_levels(&mut occupations, |o| (o.n, o.symmetry));
        let mut per_kappa: BTreeMap<i32, Vec<u32>> = BTreeMap::new();
        for o in &occupations {
            per_kappa.entry(o.symmetry.kappa()).or_default().push(o.n);
        }
        for (kappa, ns) in per_kappa {
            let first = AngularSymmetry::new(kappa)?.l_large() + 1;
            for (i, &n) in ns.iter().enumerate() {
                if n != first + i as u32 {
                    return Err(Error::InvalidInput(format!(
                        "shells of kappa {kappa} must be contiguous from n = {first}; found n = {n}"
                    )));
                }
            }
        }
        Ok(Self { model, c, occupations })
    }

    pub fn aufbau(model: NucleusModel, c: f64, electrons: u32) -> Result<Self> {
        Self::new(model, c, aufbau_occupations(electrons)?)
    }

    pub fn electron_count(&self) -> f64 {
        self.occupations.iter().map(|o| o.occupation).sum()
    }

    pub fn with_model(&self, model: NucleusModel) -> Self {
        Self { model, ..self.clone() }
    }

    /// Occupied κ values, ascending by angular order.
    pub fn symmetries(&self) -> Vec<AngularSymmetry> {
        let mut s: Vec<AngularSymmetry> = self.occupations.iter().map(|o| o.symmetry).collect();
        s.sort();
        s.dedup();
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScfOptions {
    pub max_iter: usize,
    pub e_tol: f64,
    pub d_tol: f64,
    /// Fraction of the newest two-electron operator kept when mixing.
    pub damping: f64,
    /// Shift applied to virtual levels during the iterations.
    pub level_shift: f64,
    pub lindep: f64,
    /// Initial step of the logarithmic integration grid.
    pub grid_step: f64,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            e_tol: 1e-9,
            d_tol: 1e-7,
            damping: 0.4,
            level_shift: 0.0,
            lindep: crate::dirac_one::DEFAULT_LINDEP,
            grid_step: 0.1,
        }
    }
}

impl ScfOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iter > 0
            && self.e_tol > 0.0
            && self.d_tol > 0.0
            && self.damping > 0.0
            && self.damping <= 1.0
            && self.level_shift >= 0.0
            && self.lindep > 0.0
            && self.grid_step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid SCF options {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown {
    pub one_electron: f64,
    pub two_electron: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub energy: f64,
    pub energy_delta: f64,
    pub density_delta: f64,
}

#[derive(Clone, Debug)]
pub struct ScfState {
    /// Occupied levels, in the order of `AtomSpec::occupations`.
    pub levels: Vec<SpinorLevel>,
    pub occupations: Vec<Occupation>,
    pub total_energy: f64,
    pub energy: EnergyBreakdown,
    pub iteration: usize,
    pub energy_delta: f64,
    pub density_delta: f64,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

impl ScfState {
    /// Tab-separated iteration log with a header line.
    pub fn iteration_log(&self) -> String {
        let mut s = String::from("iteration\tenergy\tdelta_e\tdelta_d\n");
        for r in &self.history {
            s += &format!("{}\t{:.12e}\t{:.3e}\t{:.3e}\n", r.iteration, r.energy, r.energy_delta, r.density_delta);
        }
        s
    }

    pub fn level(&self, label: &str) -> Option<&SpinorLevel> {
        self.levels.iter().find(|l| l.label() == label)
    }
}

/// Average-of-configuration energy from one-electron expectation values and radial integrals.
pub fn total_energy(one_electron: &[f64], spec: &AtomSpec, cache: &SlaterCache) -> Result<EnergyBreakdown> {
    let occ = &spec.occupations;
    if one_electron.len() != occ.len() {
        return Err(Error::InvalidInput(format!(
            "{} one-electron terms for {} shells",
            one_electron.len(),
            occ.len()
        )));
    }
    let e1: f64 = occ.iter().zip(one_electron).map(|(o, h)| o.occupation * h).sum();
    let mut e2 = 0.0;
    for (a, oa) in occ.iter().enumerate() {
        let (q, g) = (oa.occupation, oa.capacity());
        if q > 1.0 || q < 1.0 {
            let mut intra = cache.get(SlaterKind::Direct, 0, a, a)?;
            for k in allowed_l_range(oa.symmetry, oa.symmetry).into_iter().filter(|&k| k > 0) {
                let gam = gamma_coefficient(oa.symmetry, oa.symmetry, k);
                intra -= g / (g - 1.0) * gam * cache.get(SlaterKind::Direct, k, a, a)?;
            }
            e2 += 0.5 * q * (q - 1.0) * intra;
        }
        for (b, ob) in occ.iter().enumerate().skip(a + 1) {
            let mut inter = cache.get(SlaterKind::Direct, 0, a, b)?;
            for k in allowed_l_range(oa.symmetry, ob.symmetry) {
                let gam = gamma_coefficient(oa.symmetry, ob.symmetry, k);
                inter -= gam * cache.get(SlaterKind::Exchange, k, a, b)?;
            }
            e2 += oa.occupation * ob.occupation * inter;
        }
    }
    Ok(EnergyBreakdown { one_electron: e1, two_electron: e2, total: e1 + e2 })
}

/// One κ block: basis, one-electron Dirac matrices and grid samples.
#[derive(Clone, Debug)]
pub struct DiracBlock {
    pub functions: Arc<BlockFunctions>,
    pub matrices: KappaBlockMatrices,
    pub h: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub x: DMatrix<f64>,
    large_on_grid: DMatrix<f64>,
    small_on_grid: DMatrix<f64>,
}

impl DiracBlock {
    pub fn symmetry(&self) -> AngularSymmetry {
        self.functions.symmetry
    }

    pub fn dim(&self) -> usize {
        self.functions.dim()
    }

    fn component(&self, small: bool) -> &DMatrix<f64> {
        if small {
            &self.small_on_grid
        } else {
            &self.large_on_grid
        }
    }
}

fn sample(funcs: &[RadialFunction], grid: &LogGrid) -> DMatrix<f64> {
    DMatrix::from_fn(funcs.len(), grid.len(), |mu, i| funcs[mu].eval(grid.r[i]))
}

/// `Y^k[χ_ν χ_λ](r_i)` for every function pair of two blocks, row-major in `(ν, λ, i)`.
struct PairTable {
    cols: usize,
    data: Vec<f64>,
}

fn fill_table(grid: &LogGrid, rows: &[RadialFunction], cols: &[RadialFunction], k: u32, same: bool) -> PairTable {
    let g = grid.len();
    let nc = cols.len();
    let mut data = vec![0.0; rows.len() * nc * g];
    for (nu, f) in rows.iter().enumerate() {
        let start = if same { nu } else { 0 };
        for (lam, h) in cols.iter().enumerate().skip(start) {
            let rho = GaussianDensity::product(f, h);
            let out = &mut data[(nu * nc + lam) * g..(nu * nc + lam + 1) * g];
            for (o, &r) in out.iter_mut().zip(&grid.r) {
                *o = rho.potential(k, r);
            }
        }
    }
    if same {
        for nu in 0..rows.len() {
            for lam in 0..nu {
                let (src, dst) = ((lam * nc + nu) * g, (nu * nc + lam) * g);
                data.copy_within(src..src + g, dst);
            }
        }
    }
    PairTable { cols: nc, data }
}

impl PairTable {
    /// `W[ν][i] = Σ_λ C_λ T[ν][λ][i]` with the target block on the row side,
    /// or the transpose contraction when it sits on the column side.
    fn contract(&self, coeff: &DVector<f64>, target_is_row: bool, g: usize) -> DMatrix<f64> {
        let nc = self.cols;
        let nr = self.data.len() / (nc * g);
        let n_target = if target_is_row { nr } else { nc };
        let mut w = vec![0.0; n_target * g];
        for nu in 0..nr {
            for lam in 0..nc {
                let (t, src) = if target_is_row { (nu, lam) } else { (lam, nu) };
                let c = coeff[src];
                if c == 0.0 {
                    continue;
                }
                let row = &self.data[(nu * nc + lam) * g..(nu * nc + lam + 1) * g];
                for (o, v) in w[t * g..(t + 1) * g].iter_mut().zip(row) {
                    *o += c * v;
                }
            }
        }
        DMatrix::from_row_slice(n_target, g, &w)
    }
}

/// Two-electron operators and integrals generated by one set of orbitals.
#[derive(Clone, Debug)]
pub struct TwoElectronTerms {
    /// Per block: `Σ_b q_b (J_b - Σ_k Γ Kᵏ_b)` with unit weights.
    pub g_all: Vec<DMatrix<f64>>,
    /// Per shell (open shells only): `J_a - Σ_k Γ Kᵏ_a` within its own block.
    pub g_self: Vec<Option<DMatrix<f64>>>,
    pub cache: SlaterCache,
}

impl TwoElectronTerms {
    fn mix(&mut self, newer: &TwoElectronTerms, weight: f64) {
        for (a, b) in self.g_all.iter_mut().zip(&newer.g_all) {
            *a = &*a * (1.0 - weight) + b * weight;
        }
        for (a, b) in self.g_self.iter_mut().zip(&newer.g_self) {
            if let (Some(a), Some(b)) = (a.as_mut(), b) {
                *a = &*a * (1.0 - weight) + b * weight;
            }
        }
    }
}

/// Precomputed blocks, grid and multipole tables for one atom and basis.
pub struct ScfEngine {
    pub spec: AtomSpec,
    pub grid: LogGrid,
    pub blocks: Vec<DiracBlock>,
    /// Block index of each occupied shell.
    pub shell_block: Vec<usize>,
    tables: HashMap<(usize, usize, u32, bool), PairTable>,
}

const GRID_CHECK: f64 = 1e-12;

impl ScfEngine {
    pub fn new(spec: &AtomSpec, basis: &Basis, options: &ScfOptions) -> Result<Self> {
        options.validate()?;
        let syms = spec.symmetries();
        let mut blocks = Vec::with_capacity(syms.len());
        for &sym in &syms {
            let shell = basis.shell(sym)?;
            let count = spec.occupations.iter().filter(|o| o.symmetry == sym).count();
            if count > shell.len() {
                return Err(Error::InvalidInput(format!(
                    "{count} occupied {sym} shells but only {} basis functions",
                    shell.len()
                )));
            }
            let functions = Arc::new(BlockFunctions::from_shell(shell));
            let matrices = KappaBlockMatrices::assemble(shell, &spec.model);
            let (h, s) = dirac_matrices(&matrices, spec.c);
            let x = orthonormalizer(&s, options.lindep)?;
            blocks.push(DiracBlock {
                functions,
                matrices,
                h,
                s,
                x,
                large_on_grid: DMatrix::zeros(0, 0),
                small_on_grid: DMatrix::zeros(0, 0),
            });
        }
        let shell_block = spec
            .occupations
            .iter()
            .map(|o| syms.iter().position(|s| *s == o.symmetry).expect("symmetry listed"))
            .collect();

        let grid = Self::validated_grid(&blocks, options.grid_step)?;
        for b in &mut blocks {
            b.large_on_grid = sample(&b.functions.large, &grid);
            b.small_on_grid = sample(&b.functions.small, &grid);
        }

        let mut jobs = Vec::new();
        for p in 0..blocks.len() {
            for q in p..blocks.len() {
                for k in allowed_l_range(blocks[p].symmetry(), blocks[q].symmetry()) {
                    for small in [false, true] {
                        jobs.push((p, q, k, small));
                    }
                }
            }
        }
        let tables = jobs
            .par_iter()
            .map(|&(p, q, k, small)| {
                fn pick(b: &DiracBlock, small: bool) -> &[RadialFunction] {
                    if small { &b.functions.small } else { &b.functions.large }
                }
                ((p, q, k, small), fill_table(&grid, pick(&blocks[p], small), pick(&blocks[q], small), k, p == q))
            })
            .collect();

        Ok(Self { spec: spec.clone(), grid, blocks, shell_block, tables })
    }

    /// Smallest grid step (halving from `step`) that reproduces every
    /// analytic overlap element to `1e-12`.
    fn validated_grid(blocks: &[DiracBlock], step: f64) -> Result<LogGrid> {
        let content: Vec<(u32, f64)> = blocks
            .iter()
            .flat_map(|b| b.functions.large.iter().chain(&b.functions.small))
            .flat_map(|f| f.terms().iter().map(|t| (2 * t.power, 2.0 * t.exponent)))
            .collect();
        let mut h = step;
        let mut worst = f64::INFINITY;
        for _ in 0..4 {
            let grid = LogGrid::covering(content.iter().copied(), h);
            worst = 0.0f64;
            for b in blocks {
                for (funcs, s) in [(&b.functions.large, &b.matrices.s_ll), (&b.functions.small, &b.matrices.s_ss)] {
                    let v = sample(funcs, &grid);
                    let w = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * grid.w[j]);
                    let sg = &w * v.transpose();
                    worst = worst.max((sg - s).amax());
                }
            }
            if worst <= GRID_CHECK {
                return Ok(grid);
            }
            h *= 0.5;
        }
        Err(Error::QuadratureNonConvergence { tolerance: GRID_CHECK, estimate: worst, lower: 0.0, upper: f64::INFINITY })
    }

    pub fn block_of(&self, sym: AngularSymmetry) -> Option<usize> {
        self.blocks.iter().position(|b| b.symmetry() == sym)
    }

    fn table(&self, target: usize, source: usize, k: u32, small: bool) -> (&PairTable, bool) {
        if target <= source {
            (&self.tables[&(target, source, k, small)], true)
        } else {
            (&self.tables[&(source, target, k, small)], false)
        }
    }

    fn split(&self, shell: usize, c: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = self.blocks[self.shell_block[shell]].dim();
        (c.rows(0, n).into_owned(), c.rows(n, n).into_owned())
    }

    /// `Y⁰[u_b² + v_b²](r_i)`.
    fn coulomb_potential(&self, shell: usize, c: &DVector<f64>) -> DVector<f64> {
        let b = self.shell_block[shell];
        let (cl, cs) = self.split(shell, c);
        let g = self.grid.len();
        let mut y = DVector::zeros(g);
        for (small, cc) in [(false, &cl), (true, &cs)] {
            let (t, row) = self.table(b, b, 0, small);
            let w = t.contract(cc, row, g);
            y += w.transpose() * cc;
        }
        y
    }

    /// Block-diagonal Coulomb matrix of a local potential sampled on the grid.
    fn local_matrix(&self, block: usize, y: &DVector<f64>) -> DMatrix<f64> {
        let b = &self.blocks[block];
        let n = b.dim();
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        for (off, small) in [(0, false), (n, true)] {
            let v = b.component(small);
            let mut wv = v.clone();
            for (j, mut col) in wv.column_iter_mut().enumerate() {
                col *= self.grid.w[j] * y[j];
            }
            out.view_mut((off, off), (n, n)).copy_from(&(wv * v.transpose()));
        }
        out
    }

    /// `Kᵏ_b` over the functions of `block`, symmetrized.
    fn exchange_matrix(&self, block: usize, shell: usize, c: &DVector<f64>, k: u32) -> DMatrix<f64> {
        let b = &self.blocks[block];
        let src = self.shell_block[shell];
        let n = b.dim();
        let g = self.grid.len();
        let (cl, cs) = self.split(shell, c);
        let src_block = &self.blocks[src];
        let mut a = Vec::with_capacity(2);
        let mut w = Vec::with_capacity(2);
        for (small, cc) in [(false, &cl), (true, &cs)] {
            let phi = src_block.component(small).transpose() * cc;
            let mut ax = b.component(small).clone();
            for (j, mut col) in ax.column_iter_mut().enumerate() {
                col *= self.grid.w[j] * phi[j];
            }
            a.push(ax);
            let (t, row) = self.table(block, src, k, small);
            w.push(t.contract(cc, row, g));
        }
        let mut kmat = DMatrix::zeros(2 * n, 2 * n);
        for (x, ax) in a.iter().enumerate() {
            for (y, wy) in w.iter().enumerate() {
                kmat.view_mut((x * n, y * n), (n, n)).copy_from(&(ax * wy.transpose()));
            }
        }
        (&kmat + kmat.transpose()) * 0.5
    }

    /// Grid density `u² + v²` of one shell.
    fn density_on_grid(&self, shell: usize, c: &DVector<f64>) -> DVector<f64> {
        let b = &self.blocks[self.shell_block[shell]];
        let (cl, cs) = self.split(shell, c);
        let u = b.large_on_grid.transpose() * cl;
        let v = b.small_on_grid.transpose() * cs;
        u.component_mul(&u) + v.component_mul(&v)
    }

    /// Two-electron operators and the radial-integral cache for arbitrary
    /// (not necessarily normalized) shell coefficient vectors.
    pub fn two_electron(&self, coeffs: &[DVector<f64>]) -> Result<TwoElectronTerms> {
        let occ = &self.spec.occupations;
        let nshell = occ.len();
        let labels = occ.iter().map(|o| o.label()).collect();
        let mut cache = SlaterCache::new(labels);

        let potentials: Vec<DVector<f64>> = (0..nshell).map(|b| self.coulomb_potential(b, &coeffs[b])).collect();
        let densities: Vec<DVector<f64>> = (0..nshell).map(|b| self.density_on_grid(b, &coeffs[b])).collect();
        for a in 0..nshell {
            for b in a..nshell {
                let wr = densities[a].component_mul(&self.grid_weights());
                cache.insert(SlaterKind::Direct, 0, a, b, wr.dot(&potentials[b]));
            }
        }
        let mut total = DVector::zeros(self.grid.len());
        for (b, y) in potentials.iter().enumerate() {
            total += y * occ[b].occupation;
        }

        let per_block: Vec<(DMatrix<f64>, Vec<(SlaterKind, u32, usize, usize, f64)>, Vec<(usize, DMatrix<f64>)>)> =
            (0..self.blocks.len())
                .into_par_iter()
                .map(|t| {
                    let sym = self.blocks[t].symmetry();
                    let mut g = self.local_matrix(t, &total);
                    let mut found = Vec::new();
                    let mut selfs = Vec::new();
                    let own: Vec<usize> = (0..nshell).filter(|&a| self.shell_block[a] == t).collect();
                    for b in 0..nshell {
                        let open_self = self.shell_block[b] == t && !occ[b].is_closed();
                        let mut self_term = if open_self { Some(self.local_matrix(t, &potentials[b])) } else { None };
                        for k in allowed_l_range(sym, occ[b].symmetry) {
                            let gam = gamma_coefficient(sym, occ[b].symmetry, k);
                            let kmat = self.exchange_matrix(t, b, &coeffs[b], k);
                            g -= &kmat * (occ[b].occupation * gam);
                            if let Some(st) = self_term.as_mut() {
                                *st -= &kmat * gam;
                            }
                            for &a in &own {
                                let v = (coeffs[a].transpose() * &kmat * &coeffs[a])[0];
                                if a == b {
                                    found.push((SlaterKind::Direct, k, a, a, v));
                                } else if a < b || self.shell_block[b] != t {
                                    found.push((SlaterKind::Exchange, k, a, b, v));
                                }
                            }
                        }
                        if let Some(st) = self_term {
                            selfs.push((b, st));
                        }
                    }
                    (g, found, selfs)
                })
                .collect();

        let mut g_all = Vec::with_capacity(self.blocks.len());
        let mut g_self = vec![None; nshell];
        for (g, found, selfs) in per_block {
            g_all.push(g);
            for (kind, k, a, b, v) in found {
                if kind == SlaterKind::Direct && k == 0 {
                    continue;
                }
                cache.insert(kind, k, a, b, v);
            }
            for (b, st) in selfs {
                g_self[b] = Some(st);
            }
        }
        Ok(TwoElectronTerms { g_all, g_self, cache })
    }

    fn grid_weights(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.grid.w)
    }

    /// `⟨a|h|a⟩` per shell.
    pub fn one_electron(&self, coeffs: &[DVector<f64>]) -> Vec<f64> {
        coeffs
            .iter()
            .enumerate()
            .map(|(a, c)| (c.transpose() * &self.blocks[self.shell_block[a]].h * c)[0])
            .collect()
    }

    pub fn energy(&self, coeffs: &[DVector<f64>]) -> Result<EnergyBreakdown> {
        let te = self.two_electron(coeffs)?;
        total_energy(&self.one_electron(coeffs), &self.spec, &te.cache)
    }

    /// Shell Fock matrix `F_a`.
    pub fn fock(&self, shell: usize, te: &TwoElectronTerms) -> DMatrix<f64> {
        let t = self.shell_block[shell];
        let mut f = &self.blocks[t].h + &te.g_all[t];
        let o = &self.spec.occupations[shell];
        if let Some(st) = &te.g_self[shell] {
            f -= st * (o.occupation * (1.0 - o.self_weight()));
        }
        f
    }

    /// All shell Fock matrices for the given orbitals.
    pub fn fock_matrices(&self, coeffs: &[DVector<f64>]) -> Result<Vec<DMatrix<f64>>> {
        let te = self.two_electron(coeffs)?;
        Ok((0..coeffs.len()).map(|a| self.fock(a, &te)).collect())
    }

    /// New orbitals for every shell from the given two-electron terms.
    /// Shells of a κ are solved in ascending `n`, each in the orthogonal
    /// complement of the ones already placed.
    fn update_orbitals(
        &self,
        te: Option<&TwoElectronTerms>,
        previous: Option<&[DVector<f64>]>,
        shift: f64,
    ) -> Result<Vec<(f64, DVector<f64>)>> {
        let occ = &self.spec.occupations;
        let c2 = self.spec.c * self.spec.c;
        let mut out: Vec<Option<(f64, DVector<f64>)>> = vec![None; occ.len()];
        for (t, block) in self.blocks.iter().enumerate() {
            let n = block.dim();
            let shells: Vec<usize> = (0..occ.len()).filter(|&a| self.shell_block[a] == t).collect();
            let shift_term = match (previous, shift > 0.0) {
                (Some(prev), true) => {
                    let mut p = DMatrix::zeros(2 * n, 2 * n);
                    for &a in &shells {
                        p += &prev[a] * prev[a].transpose();
                    }
                    Some((&block.s - &block.s * p * &block.s) * shift)
                }
                _ => None,
            };
            // Work in the orthonormal coordinates of `x` so that removing the
            // placed shells does not go back through a possibly ill-conditioned S.
            let m = block.x.ncols();
            let mut placed: Vec<DVector<f64>> = Vec::new();
            for &a in &shells {
                let mut f = match te {
                    Some(te) => self.fock(a, te),
                    None => block.h.clone(),
                };
                if let Some(st) = &shift_term {
                    f += st;
                }
                let q = if placed.is_empty() {
                    DMatrix::<f64>::identity(m, m)
                } else {
                    let mut proj = DMatrix::<f64>::identity(m, m);
                    for y in &placed {
                        proj -= y * y.transpose();
                    }
                    let (values, vectors) = symmetric_eigen(&proj);
                    let keep: Vec<usize> = (0..m).filter(|&i| values[i] > 0.5).collect();
                    DMatrix::from_fn(m, keep.len(), |r, c| vectors[(r, keep[c])])
                };
                let pairs = reduced_eigenpairs(&f, &(&block.x * &q));
                let electronic: Vec<&(f64, DVector<f64>)> = pairs.iter().filter(|(e, _)| *e > -c2).collect();
                let expected = n - placed.len();
                if electronic.is_empty() || (m == 2 * n && electronic.len() != expected) {
                    return Err(Error::SpectrumSplitting {
                        kappa: block.symmetry().kappa(),
                        expected,
                        found: electronic.len(),
                    });
                }
                let (e, w) = electronic[0];
                let y = &q * w;
                let mut v = &block.x * &y;
                v /= (v.transpose() * &block.s * &v)[0].sqrt();
                placed.push(y);
                out[a] = Some((*e, v));
            }
        }
        Ok(out.into_iter().map(|o| o.expect("every shell solved")).collect())
    }

    fn density_delta(&self, a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
        let occ = &self.spec.occupations;
        let mut worst = 0.0f64;
        for t in 0..self.blocks.len() {
            let n2 = 2 * self.blocks[t].dim();
            let mut d = DMatrix::<f64>::zeros(n2, n2);
            for s in (0..occ.len()).filter(|&s| self.shell_block[s] == t) {
                d += (&a[s] * a[s].transpose() - &b[s] * b[s].transpose()) * occ[s].occupation;
            }
            worst = worst.max(d.amax());
        }
        worst
    }

    /// Levels for the given coefficient vectors and orbital energies.
    pub fn make_levels(&self, solved: &[(f64, DVector<f64>)]) -> Vec<SpinorLevel> {
        solved
            .iter()
            .enumerate()
            .map(|(a, (e, v))| {
                let block = &self.blocks[self.shell_block[a]];
                let n = block.dim();
                let mut level = SpinorLevel {
                    n: self.spec.occupations[a].n,
                    symmetry: block.symmetry(),
                    energy: *e,
                    coeff_large: v.rows(0, n).into_owned(),
                    coeff_small: v.rows(n, n).into_owned(),
                    functions: Arc::clone(&block.functions),
                };
                fix_phase(&mut level);
                level
            })
            .collect()
    }

    /// Rebuilds the Fock operators from `levels` and returns each shell's
    /// lowest eigenvalue in its complement, as `run` would.
    pub fn rediagonalize(&self, levels: &[SpinorLevel]) -> Result<Vec<f64>> {
        let coeffs: Vec<DVector<f64>> = levels.iter().map(|l| l.stacked()).collect();
        let te = self.two_electron(&coeffs)?;
        Ok(self.update_orbitals(Some(&te), Some(&coeffs), 0.0)?.into_iter().map(|(e, _)| e).collect())
    }

    pub fn run(&self, options: &ScfOptions) -> Result<ScfState> {
        options.validate()?;
        let c2 = self.spec.c * self.spec.c;
        let mut coeffs: Vec<DVector<f64>> = self.update_orbitals(None, None, 0.0)?.into_iter().map(|p| p.1).collect();
        let mut mixed: Option<TwoElectronTerms> = None;
        let mut history = Vec::new();
        let mut last_energy = f64::NAN;
        let mut last_coeffs: Option<Vec<DVector<f64>>> = None;
        let mut converged = false;
        let (mut de, mut dd) = (f64::INFINITY, f64::INFINITY);

        for iteration in 0..=options.max_iter {
            let te = self.two_electron(&coeffs)?;
            let energy = total_energy(&self.one_electron(&coeffs), &self.spec, &te.cache)?;
            if let Some(prev) = &last_coeffs {
                de = (energy.total - last_energy).abs();
                dd = self.density_delta(&coeffs, prev);
            }
            history.push(IterationRecord { iteration, energy: energy.total, energy_delta: de, density_delta: dd });
            if de < options.e_tol && dd < options.d_tol {
                converged = true;
                break;
            }
            if iteration == options.max_iter {
                break;
            }
            match mixed.as_mut() {
                None => mixed = Some(te),
                Some(m) => m.mix(&te, options.damping),
            }
            let solved = self.update_orbitals(mixed.as_ref(), Some(&coeffs), options.level_shift)?;
            last_energy = energy.total;
            last_coeffs = Some(std::mem::replace(&mut coeffs, solved.into_iter().map(|p| p.1).collect()));
        }

        // Final orbitals: pure Fock, no shift.
        let te = self.two_electron(&coeffs)?;
        let solved = self.update_orbitals(Some(&te), Some(&coeffs), 0.0)?;
        let levels = self.make_levels(&solved);
        let finals: Vec<DVector<f64>> = levels.iter().map(|l| l.stacked()).collect();
        let energy = self.energy(&finals)?;
        for l in &levels {
            if l.energy < -c2 {
                return Err(Error::VariationalCollapse { label: l.label(), energy: l.energy });
            }
        }
        Ok(ScfState {
            levels,
            occupations: self.spec.occupations.clone(),
            total_energy: energy.total,
            energy,
            iteration: history.len().saturating_sub(1),
            energy_delta: de,
            density_delta: dd,
            converged,
            history,
        })
    }
}

/// Builds the engine and iterates to self-consistency.
pub fn run_scf(spec: &AtomSpec, basis: &Basis, options: &ScfOptions) -> Result<ScfState> {
    ScfEngine::new(spec, basis, options)?.run(options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::even_tempered;
    use crate::dirac_one::{sommerfeld_energy, DEFAULT_C};

    fn basis(l_max: u32, alpha: f64, beta: f64, count: usize) -> Basis {
        let blocks = (0..=l_max).map(|l| (l, even_tempered(alpha, beta, count).unwrap())).collect();
        Basis::from_l_blocks(None, &blocks).unwrap()
    }

    #[test]
    fn aufbau_for_element_115() {
        let occ = aufbau_occupations(115).unwrap();
        assert_eq!(occ.len(), 31);
        let total: f64 = occ.iter().map(|o| o.occupation).sum();
        assert_eq!(total, 115.0);
        let open: Vec<_> = occ.iter().filter(|o| !o.is_closed()).collect();
        assert_eq!(open.len(), 1);
        assert_eq!(open[0].label(), "7p");
        assert_eq!(open[0].occupation, 1.0);
        let labels: Vec<String> = occ.iter().take(6).map(|o| o.label()).collect();
        assert_eq!(labels, ["1s", "2s", "2p-", "2p", "3s", "3p-"]);
        assert_eq!(occ.last().unwrap().label(), "7p");
    }

    #[test]
    fn self_weights() {
        let s = AngularSymmetry::new(-1).unwrap();
        assert_eq!(Occupation::new(1, s, 2.0).unwrap().self_weight(), 1.0);
        assert_eq!(Occupation::new(1, s, 1.0).unwrap().self_weight(), 0.0);
        assert!(Occupation::new(1, s, 3.0).is_err());
        assert!(Occupation::new(1, AngularSymmetry::new(1).unwrap(), 1.0).is_err());
    }

    #[test]
    fn non_contiguous_shells_rejected() {
        let s = AngularSymmetry::new(-1).unwrap();
        let occ = vec![Occupation::new(1, s, 2.0).unwrap(), Occupation::new(3, s, 1.0).unwrap()];
        assert!(AtomSpec::new(NucleusModel::point(4.0).unwrap(), DEFAULT_C, occ).is_err());
    }

    #[test]
    fn hydrogen_converges_immediately() {
        let spec = AtomSpec::aufbau(NucleusModel::point(1.0).unwrap(), DEFAULT_C, 1).unwrap();
        let state = run_scf(&spec, &basis(0, 0.01, 2.0, 20), &ScfOptions::default()).unwrap();
        assert!(state.converged);
        assert_eq!(state.iteration, 1);
        assert_eq!(state.energy.two_electron, 0.0);
        let exact = sommerfeld_energy(1, -1, 1.0, DEFAULT_C).unwrap();
        assert!((state.total_energy - exact).abs() < 1e-6);
        assert!((state.total_energy - state.levels[0].energy).abs() < 1e-9, "{} {}", state.total_energy, state.levels[0].energy);
    }

    #[test]
    fn helium_like_closed_shell() {
        let spec = AtomSpec::aufbau(NucleusModel::point(2.0).unwrap(), DEFAULT_C, 2).unwrap();
        let opts = ScfOptions { e_tol: 1e-12, d_tol: 1e-10, ..ScfOptions::default() };
        let engine = ScfEngine::new(&spec, &basis(0, 0.05, 2.2, 18), &opts).unwrap();
        let state = engine.run(&opts).unwrap();
        assert!(state.converged);
        // Nonrelativistic HF limit is -2.86168; relativity lowers it slightly.
        assert!((state.total_energy + 2.8618).abs() < 1e-3, "{}", state.total_energy);
        let trace: f64 = 0.5 * 2.0 * (state.levels[0].energy + engine.one_electron(&[state.levels[0].stacked()])[0]);
        assert!((trace - state.total_energy).abs() < 1e-8 * state.total_energy.abs(), "{trace} {}", state.total_energy);
        let m = &engine.blocks[0].matrices;
        assert!((state.levels[0].norm_squared(m) - 1.0).abs() < 1e-10);
    }
}
