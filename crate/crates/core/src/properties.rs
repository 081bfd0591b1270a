//! Observables of converged levels: radial moments, point vs. Gaussian
//! nucleus comparisons and sampled radial functions.

use crate::angular::AngularSymmetry;
use crate::basis::Basis;
use crate::dirac_one::SpinorLevel;
use crate::error::{Error, Result};
use crate::grid::{log_spaced, LogGrid};
use crate::integrals::r_power_element;
use crate::scf::{run_scf, sort_levels, AtomSpec, ScfOptions, ScfState};

pub const PLOT_R_MIN: f64 = 1e-7;
pub const PLOT_R_MAX: f64 = 10.0;
pub const PLOT_POINTS: usize = 600;

/// `∫ r^k (u² + v²) dr` from closed-form Gaussian moments; `k ∈ {-1, 1, 2}`.
pub fn expectation_r_power(level: &SpinorLevel, k: i32) -> Result<f64> {
    if !matches!(k, -1 | 1 | 2) {
        return Err(Error::InvalidInput(format!("radial moment r^{k} is not supported")));
    }
    let (u, v) = (level.large(), level.small());
    Ok(r_power_element(&u, &u, k) + r_power_element(&v, &v, k))
}

/// The same moment by quadrature on `grid`; used as a cross-check.
pub fn expectation_on_grid(level: &SpinorLevel, k: i32, grid: &LogGrid) -> f64 {
    let (u, v) = (level.large(), level.small());
    grid.integrate(|r| {
        let (a, b) = (u.eval(r), v.eval(r));
        r.powi(k) * (a * a + b * b)
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub r: f64,
    pub inv_r: f64,
    pub r2: f64,
}

impl Moments {
    pub fn of(level: &SpinorLevel) -> Self {
        Self {
            r: expectation_r_power(level, 1).expect("supported power"),
            inv_r: expectation_r_power(level, -1).expect("supported power"),
            r2: expectation_r_power(level, 2).expect("supported power"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialSample {
    pub r: f64,
    pub u: f64,
    pub v: f64,
}

pub fn radial_functions_on_grid(level: &SpinorLevel, grid: &[f64]) -> Vec<RadialSample> {
    let (u, v) = (level.large(), level.small());
    grid.iter().map(|&r| RadialSample { r, u: u.eval(r), v: v.eval(r) }).collect()
}

/// Trapezoid estimate of `∫ (u² + v²) dr` over the sampled range, taken in
/// `ln r` so that log-spaced plotting grids integrate accurately.
pub fn sampled_norm(samples: &[RadialSample]) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            let d0 = (w[0].u * w[0].u + w[0].v * w[0].v) * w[0].r;
            let d1 = (w[1].u * w[1].u + w[1].v * w[1].v) * w[1].r;
            0.5 * (d0 + d1) * (w[1].r / w[0].r).ln()
        })
        .sum()
}

/// Default plotting grid: 600 log-spaced points on `[1e-7, 10]` bohr.
pub fn plot_grid() -> Vec<f64> {
    log_spaced(PLOT_R_MIN, PLOT_R_MAX, PLOT_POINTS)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelReport {
    pub label: String,
    pub n: u32,
    pub symmetry: AngularSymmetry,
    pub energy_point: f64,
    pub energy_gaussian: f64,
    /// `energy_gaussian - energy_point`.
    pub delta: f64,
    pub moments_point: Moments,
    pub moments_gaussian: Moments,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub levels: Vec<LevelReport>,
    pub total_point: f64,
    pub total_gaussian: f64,
    pub point_converged: bool,
    pub gaussian_converged: bool,
}

impl ComparisonReport {
    pub fn converged(&self) -> bool {
        self.point_converged && self.gaussian_converged
    }

    pub fn level(&self, label: &str) -> Option<&LevelReport> {
        self.levels.iter().find(|l| l.label == label)
    }
}

/// Pairs the levels of two runs by `(n, κ)`, ordered 1s, 2s, 2p-, 2p, ...
pub fn compare_states(point: &ScfState, gaussian: &ScfState) -> Result<ComparisonReport> {
    let mut levels = Vec::with_capacity(point.levels.len());
    for p in &point.levels {
        let g = gaussian
            .levels
            .iter()
            .find(|g| g.n == p.n && g.symmetry == p.symmetry)
            .ok_or_else(|| Error::InvalidInput(format!("level {} missing from the Gaussian-nucleus run", p.label())))?;
        levels.push(LevelReport {
            label: p.label(),
            n: p.n,
            symmetry: p.symmetry,
            energy_point: p.energy,
            energy_gaussian: g.energy,
            delta: g.energy - p.energy,
            moments_point: Moments::of(p),
            moments_gaussian: Moments::of(g),
        });
    }
    if levels.len() != gaussian.levels.len() {
        return Err(Error::InvalidInput("the two runs have different occupied levels".into()));
    }
    sort_levels(&mut levels, |l| (l.n, l.symmetry));
    Ok(ComparisonReport {
        levels,
        total_point: point.total_energy,
        total_gaussian: gaussian.total_energy,
        point_converged: point.converged,
        gaussian_converged: gaussian.converged,
    })
}

/// Runs both nuclear models (concurrently) and compares them level by level.
pub fn nucleus_comparison_report(
    spec_point: &AtomSpec,
    spec_gaussian: &AtomSpec,
    basis: &Basis,
    options: &ScfOptions,
) -> Result<(ComparisonReport, ScfState, ScfState)> {
    if !spec_point.model.is_point() || spec_gaussian.model.is_point() {
        return Err(Error::InvalidInput("expected one point and one Gaussian nucleus".into()));
    }
    if spec_point.model.z() != spec_gaussian.model.z()
        || spec_point.c != spec_gaussian.c
        || spec_point.occupations != spec_gaussian.occupations
    {
        return Err(Error::InvalidInput("the two atoms differ in more than the nuclear model".into()));
    }
    let (p, g) = rayon::join(|| run_scf(spec_point, basis, options), || run_scf(spec_gaussian, basis, options));
    let (p, g) = (p?, g?);
    Ok((compare_states(&p, &g)?, p, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{even_tempered, RadialShell};
    use crate::dirac_one::{solve_block, DEFAULT_C, DEFAULT_LINDEP};
    use crate::nucleus::NucleusModel;
    use std::f64::consts::PI;

    fn hydrogenic_1s(model: NucleusModel) -> SpinorLevel {
        let sym = AngularSymmetry::new(-1).unwrap();
        let shell = RadialShell::new(sym, even_tempered(0.5, 2.3, 30).unwrap()).unwrap();
        solve_block(&shell, &model, DEFAULT_C, DEFAULT_LINDEP).unwrap().remove(0)
    }

    #[test]
    fn single_gaussian_mean_radius() {
        let sym = AngularSymmetry::new(-1).unwrap();
        let shell = RadialShell::new(sym, vec![1.0]).unwrap();
        let level = SpinorLevel {
            n: 1,
            symmetry: sym,
            energy: 0.0,
            coeff_large: nalgebra::DVector::from_element(1, 1.0),
            coeff_small: nalgebra::DVector::zeros(1),
            functions: std::sync::Arc::new(crate::dirac_one::BlockFunctions::from_shell(&shell)),
        };
        let r = expectation_r_power(&level, 1).unwrap();
        assert!((r - 2.0 / (2.0 * PI).sqrt()).abs() < 1e-14, "{r}");
        assert!(expectation_r_power(&level, 3).is_err());
    }

    #[test]
    fn closed_forms_match_grid() {
        let level = hydrogenic_1s(NucleusModel::point(80.0).unwrap());
        let grid = LogGrid::new(1e-9, 5.0, 0.05);
        for k in [-1, 1, 2] {
            let a = expectation_r_power(&level, k).unwrap();
            let b = expectation_on_grid(&level, k, &grid);
            assert!(((a - b) / a).abs() < 1e-8, "k={k}: {a} vs {b}");
        }
        let m = Moments::of(&level);
        assert!(m.r * m.r <= m.r2);
    }

    #[test]
    fn hydrogenic_point_moments() {
        // Dirac point-nucleus 1s: ⟨r⟩ = (1 + 2γ)/(2Z), ⟨1/r⟩ = Z/γ, γ = √(1 - (Z/c)²).
        let z = 20.0;
        let level = hydrogenic_1s(NucleusModel::point(z).unwrap());
        let g = (1.0 - (z / DEFAULT_C).powi(2)).sqrt();
        let r = expectation_r_power(&level, 1).unwrap();
        assert!((r - (1.0 + 2.0 * g) / (2.0 * z)).abs() / r < 1e-5, "{r}");
        let inv = expectation_r_power(&level, -1).unwrap();
        assert!((inv - z / g).abs() / inv < 1e-4, "{inv}");
    }

    #[test]
    fn sampled_functions_are_normalized() {
        let level = hydrogenic_1s(NucleusModel::gaussian_from_mass(115.0, 288.0).unwrap());
        let s = radial_functions_on_grid(&level, &plot_grid());
        assert!((sampled_norm(&s) - 1.0).abs() < 1e-6);
        let first = s[0];
        assert!(first.u / first.r > 0.0);
        assert_eq!(plot_grid().len(), PLOT_POINTS);
    }

    #[test]
    fn comparison_pairs_by_level() {
        let p = hydrogenic_1s(NucleusModel::point(115.0).unwrap());
        let g = hydrogenic_1s(NucleusModel::gaussian_from_mass(115.0, 288.0).unwrap());
        let state = |l: SpinorLevel| ScfState {
            total_energy: l.energy,
            energy: crate::scf::EnergyBreakdown { one_electron: l.energy, two_electron: 0.0, total: l.energy },
            occupations: vec![],
            levels: vec![l],
            iteration: 0,
            energy_delta: 0.0,
            density_delta: 0.0,
            converged: true,
            history: vec![],
        };
        let (sp, sg) = (state(p), state(g));
        let report = compare_states(&sp, &sg).unwrap();
        let row = report.level("1s").unwrap();
        assert!(row.delta > 0.0);
        assert_eq!(row.delta, row.energy_gaussian - row.energy_point);
        assert!(row.moments_gaussian.r > row.moments_point.r);
        assert_eq!(report, compare_states(&sp, &sg).unwrap());
    }
}
