//! Nuclear charge models and the electron-nucleus potential.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::erf;

/// Femtometres per bohr.
pub const FM_PER_BOHR: f64 = 52917.7249;

/// Point charge or normalized Gaussian charge cloud `ρ(r) = Z (η/π)^{3/2} e^{-η r²}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NucleusModel {
    Point { z: f64 },
    Gaussian { z: f64, eta: f64 },
}

impl NucleusModel {
    pub fn point(z: f64) -> Result<Self> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::InvalidInput(format!("nuclear charge must be positive, got {z}")));
        }
        Ok(NucleusModel::Point { z })
    }

    pub fn gaussian(z: f64, eta: f64) -> Result<Self> {
        Self::point(z)?;
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidInput(format!("Gaussian exponent must be positive, got {eta}")));
        }
        Ok(NucleusModel::Gaussian { z, eta })
    }

    /// Gaussian nucleus whose RMS charge radius follows the empirical mass formula.
    pub fn gaussian_from_mass(z: f64, mass_number: f64) -> Result<Self> {
        let eta = eta_from_rms(rms_radius_bohr(mass_number)?)?;
        Self::gaussian(z, eta)
    }

    pub fn z(&self) -> f64 {
        match *self {
            NucleusModel::Point { z } | NucleusModel::Gaussian { z, .. } => z,
        }
    }

    pub fn eta(&self) -> Option<f64> {
        match *self {
            NucleusModel::Point { .. } => None,
            NucleusModel::Gaussian { eta, .. } => Some(eta),
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, NucleusModel::Point { .. })
    }
}

/// RMS nuclear charge radius `0.836 A^{1/3} + 0.570` fm, in bohr.
pub fn rms_radius_bohr(mass_number: f64) -> Result<f64> {
    if !(mass_number >= 1.0) || !mass_number.is_finite() {
        return Err(Error::InvalidInput(format!("mass number must be >= 1, got {mass_number}")));
    }
    Ok((0.836 * mass_number.cbrt() + 0.570) / FM_PER_BOHR)
}

/// Gaussian exponent reproducing a given RMS radius: `η = 3 / (2 ⟨r²⟩)`.
pub fn eta_from_rms(rms: f64) -> Result<f64> {
    if !(rms > 0.0) || !rms.is_finite() {
        return Err(Error::InvalidInput(format!("RMS radius must be positive, got {rms}")));
    }
    Ok(3.0 / (2.0 * rms * rms))
}

/// Electron-nucleus potential energy at `r > 0` (hartree).
pub fn potential_at(model: &NucleusModel, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("potential requested at r = {r}; use the origin limit")));
    }
    Ok(match *model {
        NucleusModel::Point { z } => -z / r,
        NucleusModel::Gaussian { z, eta } => -z * erf(eta.sqrt() * r) / r,
    })
}

/// `lim_{r→0} V(r)`: `-∞` for the point charge, `-2 Z √(η/π)` for the Gaussian.
pub fn potential_origin_limit(model: &NucleusModel) -> f64 {
    match *model {
        NucleusModel::Point { .. } => f64::NEG_INFINITY,
        NucleusModel::Gaussian { z, eta } => -2.0 * z * (eta / PI).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rms_radius_examples() {
        let r288 = rms_radius_bohr(288.0).unwrap();
        assert!((r288 - 1.15100e-4).abs() < 1e-9, "{r288}");
        let r1 = rms_radius_bohr(1.0).unwrap();
        assert!((r1 - 2.6570e-5).abs() < 1e-9);
        assert!(rms_radius_bohr(0.5).is_err());
    }

    #[test]
    fn eta_examples() {
        let eta = eta_from_rms(1.15100e-4).unwrap();
        assert!((eta / 1.1322e8 - 1.0).abs() < 1e-4, "{eta}");
        assert!((eta_from_rms(1.5f64.sqrt()).unwrap() - 1.0).abs() < 1e-15);
        assert!(eta_from_rms(0.0).is_err());
    }

    #[test]
    fn potential_examples() {
        let p = NucleusModel::point(115.0).unwrap();
        assert!((potential_at(&p, 0.01).unwrap() + 11500.0).abs() < 1e-9);
        let g = NucleusModel::gaussian(1.0, 1.0).unwrap();
        assert!((potential_at(&g, 2.0).unwrap() + 0.4976611).abs() < 1e-7);
        assert!(potential_at(&g, 0.0).is_err());
    }

    #[test]
    fn origin_limits() {
        let g = NucleusModel::gaussian(1.0, PI).unwrap();
        assert!((potential_origin_limit(&g) + 2.0).abs() < 1e-15);
        assert_eq!(potential_origin_limit(&NucleusModel::point(3.0).unwrap()), f64::NEG_INFINITY);
        let g = NucleusModel::gaussian(1.0, 4.0).unwrap();
        let near = potential_at(&g, 1e-9).unwrap();
        assert!((near - potential_origin_limit(&g)).abs() < 1e-12);
    }

    #[test]
    fn far_field_is_point_like() {
        for &(z, eta) in &[(1.0, 1.0), (115.0, 1.1322e8), (10.0, 3.0e4)] {
            let g = NucleusModel::gaussian(z, eta).unwrap();
            let r = 10.0 / f64::sqrt(eta);
            let vg = potential_at(&g, r).unwrap();
            let vp = -z / r;
            assert!(((vg - vp) / vp).abs() < 1e-12);
        }
    }
}
