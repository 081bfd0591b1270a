//! Run configuration: a flat `key = value` file with dotted keys.
//!
//! ```text
//! element.z = 115
//! element.mass_number = 288
//! nucleus.model = gaussian
//! basis.file = uup.basis          # or the even-tempered keys below
//! basis.alpha = 0.02
//! basis.beta = 2.5
//! basis.counts = s:26 p:23 d:17 f:11
//! basis.s.beta = 2.75             # per-l overrides of alpha, beta, count
//! occupations = aufbau            # or e.g. "1s:2 2s:2 2p-:1"
//! scf.damping = 0.4
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::angular::{l_from_letter, AngularSymmetry};
use crate::basis::{even_tempered, parse_basis_file, Basis};
use crate::dirac_one::{DEFAULT_C, DEFAULT_LINDEP};
use crate::error::{Error, Result};
use crate::nucleus::{eta_from_rms, rms_radius_bohr, NucleusModel};
use crate::properties::{PLOT_POINTS, PLOT_R_MAX, PLOT_R_MIN};
use crate::scf::{aufbau_occupations, AtomSpec, Occupation, ScfOptions};

const SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",
    "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce",
    "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir",
    "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc",
    "Lv", "Ts", "Og",
];

/// Element symbol for an integer charge, if there is one.
pub fn element_symbol(z: f64) -> Option<&'static str> {
    if z.fract() != 0.0 || !(1.0..=118.0).contains(&z) {
        return None;
    }
    Some(SYMBOLS[z as usize - 1])
}

/// Parses level labels such as `1s`, `2p-`, `4f`.
pub fn parse_level_label(label: &str) -> Result<(u32, AngularSymmetry)> {
    let bad = || Error::InvalidInput(format!("malformed level label '{label}'"));
    let t = label.trim();
    let (body, minus) = match t.strip_suffix('-') {
        Some(b) => (b, true),
        None => (t, false),
    };
    let split = body.find(|c: char| !c.is_ascii_digit()).ok_or_else(bad)?;
    let n: u32 = body[..split].parse().map_err(|_| bad())?;
    let mut letters = body[split..].chars();
    let l = letters.next().and_then(l_from_letter).ok_or_else(bad)?;
    if letters.next().is_some() || (l == 0 && minus) {
        return Err(bad());
    }
    let sym = AngularSymmetry::from_l(l, !minus)?;
    if n < l + 1 {
        return Err(bad());
    }
    Ok((n, sym))
}

#[derive(Clone, Debug, PartialEq)]
pub enum BasisSource {
    File(PathBuf),
    EvenTempered(BTreeMap<u32, (f64, f64, usize)>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum OccupationSource {
    Aufbau(u32),
    Explicit(Vec<(u32, AngularSymmetry, f64)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NuclearModelKind {
    Point,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub z: f64,
    pub mass_number: Option<f64>,
    pub model: NuclearModelKind,
    pub eta_override: Option<f64>,
    pub c: f64,
    pub basis: BasisSource,
    pub lindep: f64,
    pub occupations: OccupationSource,
    /// κ list for one-electron runs.
    pub kappas: Vec<i32>,
    /// Levels reported per κ in one-electron runs.
    pub levels_per_kappa: usize,
    pub scf: ScfOptions,
    pub tables_dir: PathBuf,
    pub grids_dir: PathBuf,
    pub export_levels: Vec<String>,
    pub plot: (f64, f64, usize),
    pub threads: Option<usize>,
    /// The `key = value` pairs as read, for the manifest.
    pub echo: Vec<(String, String)>,
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("{key}: cannot parse '{value}'") })
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        if let BasisSource::File(p) = &mut cfg.basis {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, (String, usize)> = BTreeMap::new();
        let mut echo = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: idx + 1, message: format!("expected key = value, got '{line}'") })?;
            let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().trim_matches('"').to_string());
            if kv.insert(k.clone(), (v.clone(), idx + 1)).is_some() {
                return Err(Error::Parse { line: idx + 1, message: format!("duplicate key {k}") });
            }
            echo.push((k, v));
        }

        let z: f64 = match kv.remove("element.z") {
            Some((v, l)) => parse_num("element.z", &v, l)?,
            None => return Err(Error::Parse { line: 0, message: "element.z is required".into() }),
        };
        if !(z > 0.0) {
            return Err(Error::InvalidInput(format!("element.z must be positive, got {z}")));
        }
        let mass_number = kv
            .remove("element.mass_number")
            .map(|(v, l)| parse_num::<f64>("element.mass_number", &v, l))
            .transpose()?;
        let model = match kv.remove("nucleus.model") {
            None => NuclearModelKind::Point,
            Some((v, l)) => match v.to_ascii_lowercase().as_str() {
                "point" => NuclearModelKind::Point,
                "gaussian" => NuclearModelKind::Gaussian,
                _ => return Err(Error::Parse { line: l, message: format!("nucleus.model must be point or gaussian, got '{v}'") }),
            },
        };
        let eta_override = match kv.remove("nucleus.eta") {
            Some((v, l)) => {
                if model != NuclearModelKind::Gaussian {
                    return Err(Error::Parse { line: l, message: "nucleus.eta requires the gaussian model".into() });
                }
                Some(parse_num::<f64>("nucleus.eta", &v, l)?)
            }
            None => None,
        };
        let c = match kv.remove("c") {
            Some((v, l)) => parse_num("c", &v, l)?,
            None => DEFAULT_C,
        };
        let lindep = match kv.remove("basis.lindep") {
            Some((v, l)) => parse_num("basis.lindep", &v, l)?,
            None => DEFAULT_LINDEP,
        };

        let file = kv.remove("basis.file");
        let alpha = kv.remove("basis.alpha");
        let beta = kv.remove("basis.beta");
        let counts = kv.remove("basis.counts");
        let mut per_l: BTreeMap<(u32, &'static str), (String, usize)> = BTreeMap::new();
        let keys: Vec<String> = kv.keys().filter(|k| k.starts_with("basis.")).cloned().collect();
        for key in keys {
            let parts: Vec<&str> = key.split('.').collect();
            let (v, line) = kv.remove(&key).expect("listed key");
            let l = (parts.len() == 3 && parts[1].len() == 1)
                .then(|| parts[1].chars().next().and_then(l_from_letter))
                .flatten();
            let field = match parts.get(2) {
                Some(&"alpha") => "alpha",
                Some(&"beta") => "beta",
                Some(&"count") => "count",
                _ => return Err(Error::Parse { line, message: format!("unknown key {key}") }),
            };
            let l = l.ok_or_else(|| Error::Parse { line, message: format!("unknown key {key}") })?;
            per_l.insert((l, field), (v, line));
        }
        let basis = match (file, counts) {
            (Some(_), Some((_, line))) => {
                return Err(Error::Parse { line, message: "give either basis.file or even-tempered parameters, not both".into() })
            }
            (Some((p, _)), None) => {
                if alpha.is_some() || beta.is_some() || !per_l.is_empty() {
                    return Err(Error::Parse { line: 0, message: "basis.file excludes even-tempered parameters".into() });
                }
                BasisSource::File(PathBuf::from(p))
            }
            (None, Some((cv, cline))) => {
                let mut blocks = BTreeMap::new();
                for tok in cv.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
                    let (letter, n) = tok
                        .split_once(':')
                        .ok_or_else(|| Error::Parse { line: cline, message: format!("basis.counts entry '{tok}' is not l:count") })?;
                    let l = letter
                        .chars()
                        .next()
                        .filter(|_| letter.len() == 1)
                        .and_then(l_from_letter)
                        .ok_or_else(|| Error::Parse { line: cline, message: format!("unknown shell '{letter}'") })?;
                    let n: usize = parse_num("basis.counts", n, cline)?;
                    blocks.insert(l, n);
                }
                let global = |o: &Option<(String, usize)>, name: &str| -> Result<Option<f64>> {
                    o.as_ref().map(|(v, l)| parse_num(name, v, *l)).transpose()
                };
                let (ga, gb) = (global(&alpha, "basis.alpha")?, global(&beta, "basis.beta")?);
                let mut out = BTreeMap::new();
                for (l, n) in blocks {
                    let get = |field: &'static str, fallback: Option<f64>| -> Result<f64> {
                        match per_l.get(&(l, field)) {
                            Some((v, line)) => parse_num(field, v, *line),
                            None => fallback.ok_or_else(|| Error::Parse {
                                line: cline,
                                message: format!("no {field} for the {} block", crate::angular::l_letter(l)),
                            }),
                        }
                    };
                    let count = match per_l.get(&(l, "count")) {
                        Some((v, line)) => parse_num("count", v, *line)?,
                        None => n,
                    };
                    out.insert(l, (get("alpha", ga)?, get("beta", gb)?, count));
                }
                if let Some(((l, _), (_, line))) = per_l.iter().find(|((l, _), _)| !out.contains_key(l)) {
                    return Err(Error::Parse {
                        line: *line,
                        message: format!("override for the {} block, which basis.counts does not list", crate::angular::l_letter(*l)),
                    });
                }
                BasisSource::EvenTempered(out)
            }
            (None, None) => return Err(Error::Parse { line: 0, message: "no basis: set basis.file or basis.counts".into() }),
        };

        let occupations = match kv.remove("occupations") {
            None => OccupationSource::Aufbau(electron_default(z, &mut kv)?),
            Some((v, _)) if v.eq_ignore_ascii_case("aufbau") => OccupationSource::Aufbau(electron_default(z, &mut kv)?),
            Some((v, line)) => {
                let mut list = Vec::new();
                for tok in v.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
                    let (label, q) = tok
                        .split_once(':')
                        .ok_or_else(|| Error::Parse { line, message: format!("occupation '{tok}' is not label:count") })?;
                    let (n, sym) = parse_level_label(label).map_err(|e| Error::Parse { line, message: e.to_string() })?;
                    list.push((n, sym, parse_num::<f64>("occupations", q, line)?));
                }
                OccupationSource::Explicit(list)
            }
        };

        let kappas = match kv.remove("kappas") {
            None => vec![-1],
            Some((v, line)) => v
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| parse_num::<i32>("kappas", t, line))
                .collect::<Result<_>>()?,
        };
        let levels_per_kappa = match kv.remove("solve.levels") {
            Some((v, l)) => parse_num("solve.levels", &v, l)?,
            None => 3,
        };

        let mut scf = ScfOptions { lindep, ..ScfOptions::default() };
        if let Some((v, l)) = kv.remove("scf.max_iter") {
            scf.max_iter = parse_num("scf.max_iter", &v, l)?;
        }
        for (key, slot) in [
            ("scf.e_tol", &mut scf.e_tol),
            ("scf.d_tol", &mut scf.d_tol),
            ("scf.damping", &mut scf.damping),
            ("scf.level_shift", &mut scf.level_shift),
            ("scf.grid_step", &mut scf.grid_step),
        ] {
            if let Some((v, l)) = kv.remove(key) {
                *slot = parse_num(key, &v, l)?;
            }
        }
        scf.validate()?;

        let tables_dir = PathBuf::from(kv.remove("output.tables").map_or_else(|| ".".to_string(), |v| v.0));
        let grids_dir = PathBuf::from(kv.remove("output.grids").map_or_else(|| tables_dir.display().to_string(), |v| v.0));
        let export_levels = kv.remove("export.levels")
            .map_or_else(|| "1s".to_string(), |v| v.0)
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        let mut plot = (PLOT_R_MIN, PLOT_R_MAX, PLOT_POINTS);
        if let Some((v, l)) = kv.remove("grid.r_min") {
            plot.0 = parse_num("grid.r_min", &v, l)?;
        }
        if let Some((v, l)) = kv.remove("grid.r_max") {
            plot.1 = parse_num("grid.r_max", &v, l)?;
        }
        if let Some((v, l)) = kv.remove("grid.points") {
            plot.2 = parse_num("grid.points", &v, l)?;
        }
        if !(plot.0 > 0.0 && plot.1 > plot.0 && plot.2 >= 2) {
            return Err(Error::InvalidInput(format!("invalid plot grid {plot:?}")));
        }
        let threads = kv.remove("threads").map(|(v, l)| parse_num("threads", &v, l)).transpose()?;

        if let Some((key, (_, line))) = kv.iter().next() {
            return Err(Error::Parse { line: *line, message: format!("unknown key {key}") });
        }
        Ok(Self {
            z,
            mass_number,
            model,
            eta_override,
            c,
            basis,
            lindep,
            occupations,
            kappas,
            levels_per_kappa,
            scf,
            tables_dir,
            grids_dir,
            export_levels,
            plot,
            threads,
            echo,
        })
    }

    pub fn nucleus(&self, kind: NuclearModelKind) -> Result<NucleusModel> {
        match kind {
            NuclearModelKind::Point => NucleusModel::point(self.z),
            NuclearModelKind::Gaussian => {
                let eta = match self.eta_override {
                    Some(eta) => eta,
                    None => {
                        let a = self.mass_number.ok_or_else(|| {
                            Error::InvalidInput("the gaussian nucleus needs element.mass_number or nucleus.eta".into())
                        })?;
                        eta_from_rms(rms_radius_bohr(a)?)?
                    }
                };
                NucleusModel::gaussian(self.z, eta)
            }
        }
    }

    pub fn load_basis(&self) -> Result<Basis> {
        match &self.basis {
            BasisSource::File(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::Io(std::io::Error::new(e.kind(), format!("basis file {}: {e}", p.display())))
                })?;
                parse_basis_file(&text)
            }
            BasisSource::EvenTempered(blocks) => {
                let mut exps = BTreeMap::new();
                for (&l, &(a, b, n)) in blocks {
                    exps.insert(l, even_tempered(a, b, n)?);
                }
                let element = element_symbol(self.z).map(|s| (s.to_string(), self.z as u32));
                Basis::from_l_blocks(element, &exps)
            }
        }
    }

    pub fn atom(&self, kind: NuclearModelKind) -> Result<AtomSpec> {
        let model = self.nucleus(kind)?;
        match &self.occupations {
            OccupationSource::Aufbau(n) => AtomSpec::new(model, self.c, aufbau_occupations(*n)?),
            OccupationSource::Explicit(list) => {
                let occ = list.iter().map(|&(n, s, q)| Occupation::new(n, s, q)).collect::<Result<Vec<_>>>()?;
                AtomSpec::new(model, self.c, occ)
            }
        }
    }
}

fn electron_default(z: f64, kv: &mut BTreeMap<String, (String, usize)>) -> Result<u32> {
    match kv.remove("electrons") {
        Some((v, l)) => parse_num("electrons", &v, l),
        None if z.fract() == 0.0 => Ok(z as u32),
        None => Err(Error::Parse { line: 0, message: "non-integer Z needs an explicit electrons count".into() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "
        element.z = 115
        element.mass_number = 288
        nucleus.model = gaussian
        basis.alpha = 0.02
        basis.beta = 2.5
        basis.counts = s:26 p:23 d:17 f:11
        basis.s.beta = 2.75
        scf.damping = 0.5   # trailing comment
    ";

    #[test]
    fn parses_even_tempered_config() {
        let cfg = RunConfig::parse(FULL).unwrap();
        assert_eq!(cfg.model, NuclearModelKind::Gaussian);
        assert_eq!(cfg.occupations, OccupationSource::Aufbau(115));
        assert_eq!(cfg.scf.damping, 0.5);
        let BasisSource::EvenTempered(b) = &cfg.basis else { panic!() };
        assert_eq!(b[&0], (0.02, 2.75, 26));
        assert_eq!(b[&3], (0.02, 2.5, 11));
        let basis = cfg.load_basis().unwrap();
        assert_eq!(basis.shells.len(), 7);
        let eta = cfg.nucleus(NuclearModelKind::Gaussian).unwrap().eta().unwrap();
        assert!((eta / 1.1322e8 - 1.0).abs() < 1e-4);
        assert_eq!(cfg.atom(NuclearModelKind::Point).unwrap().occupations.len(), 31);
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            "basis.counts = s:3\nbasis.alpha = 1\nbasis.beta = 2",
            "element.z = 1\nbasis.counts = s:3\nbasis.alpha = 1\nbasis.beta = 2\nbogus = 1",
            "element.z = 1\nbasis.file = x\nbasis.counts = s:3",
            "element.z = 1\nbasis.counts = s:3\nbasis.alpha = 1",
            "element.z = 1\nnucleus.eta = 5\nbasis.file = x",
            "element.z = 1\nelement.z = 2\nbasis.file = x",
            "element.z = 1\nbasis.file = x\nscf.damping = 0",
            "element.z = 1\nbasis.file = x\noccupations = 1s:3",
        ];
        for c in cases {
            let r = RunConfig::parse(c).and_then(|cfg| cfg.atom(NuclearModelKind::Point).map(|_| cfg));
            assert!(r.is_err(), "accepted:\n{c}");
        }
    }

    #[test]
    fn explicit_occupations() {
        let cfg = RunConfig::parse("element.z = 5\nbasis.file = b\noccupations = 1s:2, 2s:2, 2p-:1").unwrap();
        let atom = cfg.atom(NuclearModelKind::Point).unwrap();
        assert_eq!(atom.electron_count(), 5.0);
        assert_eq!(atom.occupations[2].label(), "2p-");
        assert_eq!(cfg.basis, BasisSource::File("b".into()));
    }

    #[test]
    fn level_labels() {
        assert_eq!(parse_level_label("2p-").unwrap(), (2, AngularSymmetry::new(1).unwrap()));
        assert_eq!(parse_level_label("4f").unwrap(), (4, AngularSymmetry::new(-4).unwrap()));
        for bad in ["1s-", "1p", "p", "2x", "2pp"] {
            assert!(parse_level_label(bad).is_err(), "{bad}");
        }
        assert_eq!(element_symbol(115.0), Some("Mc"));
    }
}
