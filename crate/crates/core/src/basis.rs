//! Gaussian radial basis: primitive expansions, even-tempered exponent sets,
//! restricted kinetic balance and the plain-text basis file format.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::angular::{l_from_letter, l_letter, AngularSymmetry};
use crate::error::{Error, Result};
use crate::integrals::{ln_gauss_moment, overlap};

/// One primitive `coeff · r^power · exp(-exponent · r²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianTerm {
    pub coeff: f64,
    pub power: u32,
    pub exponent: f64,
}

impl GaussianTerm {
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        if self.coeff == 0.0 {
            return 0.0;
        }
        let log_mag = self.coeff.abs().ln() + self.power as f64 * r.ln() - self.exponent * r * r;
        self.coeff.signum() * log_mag.exp()
    }
}

/// A finite sum of Gaussian primitives `Σ c_k r^{p_k} e^{-ζ_k r²}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialFunction {
    terms: Vec<GaussianTerm>,
}

impl RadialFunction {
    pub fn new(terms: Vec<GaussianTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput("radial function needs at least one term".into()));
        }
        if let Some(t) = terms.iter().find(|t| !(t.exponent > 0.0) || !t.coeff.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid primitive {t:?}")));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(r)).sum()
    }

    /// `∫₀^∞ f(r)² dr`.
    pub fn norm_squared(&self) -> f64 {
        overlap(self, self)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| GaussianTerm { coeff: t.coeff * factor, ..*t })
            .collect();
        Self { terms }
    }

    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.norm_squared().sqrt())
    }

    /// Symbolic image under `d/dr + κ/r`, with equal (power, exponent) terms merged.
    pub fn apply_dkappa(&self, kappa: i32) -> Self {
        let mut out: Vec<GaussianTerm> = Vec::with_capacity(2 * self.terms.len());
        let mut push = |coeff: f64, power: u32, exponent: f64| {
            if coeff == 0.0 {
                return;
            }
            if let Some(t) = out
                .iter_mut()
                .find(|t| t.power == power && t.exponent == exponent)
            {
                t.coeff += coeff;
            } else {
                out.push(GaussianTerm { coeff, power, exponent });
            }
        };
        for t in &self.terms {
            // d/dr r^p e^{-ζr²} = p r^{p-1} e - 2ζ r^{p+1} e ; κ/r adds κ r^{p-1} e
            let low = (t.power as i64 + kappa as i64) as f64 * t.coeff;
            if t.power == 0 {
                assert!(low == 0.0, "operator image singular at the origin");
            } else {
                push(low, t.power - 1, t.exponent);
            }
            push(-2.0 * t.exponent * t.coeff, t.power + 1, t.exponent);
        }
        out.retain(|t| t.coeff != 0.0);
        Self { terms: out }
    }

    /// Smallest and largest primitive exponent.
    pub fn exponent_range(&self) -> (f64, f64) {
        self.terms.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), t| {
            (lo.min(t.exponent), hi.max(t.exponent))
        })
    }

    /// Leading behaviour `lim_{r→0} f(r) / r^p` for the lowest power `p` present.
    pub fn origin_coefficient(&self) -> (u32, f64) {
        let pmin = self.terms.iter().map(|t| t.power).min().unwrap_or(0);
        let c = self
            .terms
            .iter()
            .filter(|t| t.power == pmin)
            .map(|t| t.coeff)
            .sum();
        (pmin, c)
    }
}

/// Normalized large-component primitive `N r^{l+1} e^{-ζ r²}`.
pub fn large_function(symmetry: AngularSymmetry, zeta: f64) -> Result<RadialFunction> {
    if !(zeta > 0.0) {
        return Err(Error::InvalidInput(format!("exponent must be positive, got {zeta}")));
    }
    let power = symmetry.l_large() + 1;
    let ln_norm = -0.5 * ln_gauss_moment(2 * power, 2.0 * zeta);
    RadialFunction::new(vec![GaussianTerm {
        coeff: ln_norm.exp(),
        power,
        exponent: zeta,
    }])
}

/// Restricted-kinetic-balance partner: `(d/dr + κ/r) r^{l+1} e^{-ζ r²}`, normalized.
///
/// The `r^l` term carries the factor `l + 1 + κ` and vanishes for `κ < 0`.
pub fn kinetic_balance(symmetry: AngularSymmetry, zeta: f64) -> Result<RadialFunction> {
    if !(zeta > 0.0) {
        return Err(Error::InvalidInput(format!("exponent must be positive, got {zeta}")));
    }
    let l = symmetry.l_large();
    let kappa = symmetry.kappa() as f64;
    let lead = l as f64 + 1.0 + kappa;
    // Scale by the large-function normalization first to keep magnitudes in range.
    let scale = (-0.5 * ln_gauss_moment(2 * (l + 1), 2.0 * zeta)).exp();
    let mut terms = Vec::with_capacity(2);
    if lead != 0.0 {
        terms.push(GaussianTerm { coeff: lead * scale, power: l, exponent: zeta });
    }
    terms.push(GaussianTerm {
        coeff: -2.0 * zeta * scale,
        power: l + 2,
        exponent: zeta,
    });
    Ok(RadialFunction::new(terms)?.normalized())
}

/// Geometric progression `[α, αβ, αβ², …]` of `count` exponents.
pub fn even_tempered(alpha: f64, beta: f64, count: usize) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!("beta must exceed 1, got {beta}")));
    }
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(count);
    let mut e = alpha;
    for _ in 0..count {
        out.push(e);
        e *= beta;
    }
    Ok(out)
}

/// Large-component exponents of one κ block, sorted descending.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialShell {
    symmetry: AngularSymmetry,
    exponents: Vec<f64>,
}

impl RadialShell {
    pub fn new(symmetry: AngularSymmetry, mut exponents: Vec<f64>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidInput(format!("empty shell for {symmetry}")));
        }
        if let Some(e) = exponents.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidInput(format!("non-positive exponent {e} in {symmetry}")));
        }
        exponents.sort_by(|a, b| b.total_cmp(a));
        if exponents.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("duplicate exponent in {symmetry}")));
        }
        Ok(Self { symmetry, exponents })
    }

    pub fn symmetry(&self) -> AngularSymmetry {
        self.symmetry
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn large_functions(&self) -> Vec<RadialFunction> {
        self.exponents
            .iter()
            .map(|&z| large_function(self.symmetry, z).expect("validated exponent"))
            .collect()
    }

    pub fn small_functions(&self) -> Vec<RadialFunction> {
        self.exponents
            .iter()
            .map(|&z| kinetic_balance(self.symmetry, z).expect("validated exponent"))
            .collect()
    }
}

/// A complete atomic basis: one shell per κ.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Basis {
    pub element: Option<(String, u32)>,
    pub shells: BTreeMap<AngularSymmetry, RadialShell>,
}

impl Basis {
    /// Populates both κ partners of every `l` from one exponent list per `l`.
    pub fn from_l_blocks(element: Option<(String, u32)>, blocks: &BTreeMap<u32, Vec<f64>>) -> Result<Self> {
        let mut shells = BTreeMap::new();
        for (&l, exps) in blocks {
            let mut e = exps.clone();
            e.sort_by(|a, b| b.total_cmp(a));
            e.dedup();
            if l > 0 {
                let s = AngularSymmetry::from_l(l, false)?;
                shells.insert(s, RadialShell::new(s, e.clone())?);
            }
            let s = AngularSymmetry::from_l(l, true)?;
            shells.insert(s, RadialShell::new(s, e)?);
        }
        Ok(Self { element, shells })
    }

    pub fn shell(&self, symmetry: AngularSymmetry) -> Result<&RadialShell> {
        self.shells
            .get(&symmetry)
            .ok_or(Error::MissingShell(symmetry.kappa()))
    }

    /// Exponent list per `l`, read from the `j = l + 1/2` shell.
    pub fn l_blocks(&self) -> BTreeMap<u32, Vec<f64>> {
        let mut out = BTreeMap::new();
        for (sym, shell) in &self.shells {
            out.entry(sym.l_large())
                .or_insert_with(|| shell.exponents().to_vec());
            if sym.kappa() < 0 {
                out.insert(sym.l_large(), shell.exponents().to_vec());
            }
        }
        out
    }
}

/// Parses the line-oriented basis format:
///
/// ```text
/// element Uup Z=115
/// S
/// 5.0e7
/// 1.0e7
/// P
/// 3.0
/// ```
pub fn parse_basis_file(text: &str) -> Result<Basis> {
    let mut element = None;
    let mut blocks: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut current: Option<(u32, usize)> = None;

    let close = |cur: Option<(u32, usize)>, blocks: &BTreeMap<u32, Vec<f64>>| -> Result<()> {
        if let Some((l, line)) = cur {
            if blocks.get(&l).map_or(true, |v| v.is_empty()) {
                return Err(Error::Parse {
                    line,
                    message: format!("empty {} block", l_letter(l).to_ascii_uppercase()),
                });
            }
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("element") {
            if element.is_some() || !blocks.is_empty() {
                return Err(Error::Parse { line: lineno, message: "element header must come first and only once".into() });
            }
            element = Some(parse_header(line, lineno)?);
            continue;
        }
        if line.len() == 1 && line.chars().all(|c| c.is_ascii_alphabetic()) {
            let c = line.chars().next().unwrap();
            let l = match l_from_letter(c) {
                Some(l) if "spdfg".contains(c.to_ascii_lowercase()) => l,
                _ => {
                    return Err(Error::Parse { line: lineno, message: format!("unknown shell letter '{c}'") })
                }
            };
            close(current, &blocks)?;
            if blocks.contains_key(&l) {
                return Err(Error::Parse { line: lineno, message: format!("duplicate {} block", c.to_ascii_uppercase()) });
            }
            blocks.insert(l, Vec::new());
            current = Some((l, lineno));
            continue;
        }
        let Some((l, _)) = current else {
            return Err(Error::Parse { line: lineno, message: format!("exponent outside a shell block: '{line}'") });
        };
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("not a number: '{tok}'"),
            })?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parse { line: lineno, message: format!("exponent must be positive: {tok}") });
            }
            blocks.get_mut(&l).unwrap().push(v);
        }
    }
    close(current, &blocks)?;
    if blocks.is_empty() {
        return Err(Error::Parse { line: text.lines().count().max(1), message: "no shell blocks".into() });
    }
    Basis::from_l_blocks(element, &blocks)
}

fn parse_header(line: &str, lineno: usize) -> Result<(String, u32)> {
    let bad = |m: &str| Error::Parse { line: lineno, message: m.to_string() };
    let mut it = line.split_whitespace();
    it.next();
    let symbol = it.next().ok_or_else(|| bad("missing element symbol"))?.to_string();
    let ztok = it.next().ok_or_else(|| bad("missing Z=<integer>"))?;
    let z = ztok
        .strip_prefix("Z=")
        .or_else(|| ztok.strip_prefix("z="))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| bad("malformed Z=<integer>"))?;
    if it.next().is_some() {
        return Err(bad("trailing tokens after Z"));
    }
    Ok((symbol, z))
}

/// Writes a basis in the format accepted by [`parse_basis_file`].
pub fn serialize_basis(basis: &Basis) -> String {
    let mut out = String::new();
    if let Some((sym, z)) = &basis.element {
        let _ = writeln!(out, "element {sym} Z={z}");
    }
    for (l, exps) in basis.l_blocks() {
        let _ = writeln!(out, "{}", l_letter(l).to_ascii_uppercase());
        for e in exps {
            let _ = writeln!(out, "{e:e}");
        }
    }
    out
}
