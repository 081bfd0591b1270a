use thiserror::Error;

/// Errors raised across the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("overlap matrix is not positive semidefinite: eigenvalue {eigenvalue:e} (largest {largest:e})")]
    Conditioning { eigenvalue: f64, largest: f64 },

    #[error("spectrum splitting failed for kappa {kappa}: expected {expected} electronic states, found {found}")]
    SpectrumSplitting {
        kappa: i32,
        expected: usize,
        found: usize,
    },

    #[error("supercritical nuclear charge: Z/c = {z_alpha:.6} >= |kappa| = {kappa_abs}")]
    Supercritical { z_alpha: f64, kappa_abs: i32 },

    #[error("quadrature did not reach tolerance {tolerance:e}: estimated error {estimate:e} on [{lower:e}, {upper:e}] bohr")]
    QuadratureNonConvergence {
        tolerance: f64,
        estimate: f64,
        lower: f64,
        upper: f64,
    },

    #[error("variational collapse: occupied level {label} at {energy} hartree lies below -c^2")]
    VariationalCollapse { label: String, energy: f64 },

    #[error("missing radial integral {kind}^{order}({a}, {b})")]
    MissingIntegral {
        kind: &'static str,
        order: u32,
        a: String,
        b: String,
    },

    #[error("no basis shell for kappa {0}")]
    MissingShell(i32),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
