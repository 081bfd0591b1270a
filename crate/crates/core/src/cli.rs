//! Command implementations behind the `dirac-gauss` binary.
//!
//! Every command writes its tables plus a `manifest.txt` (config echo, code
//! version, timestamps). Tables contain no timestamps, so identical inputs
//! reproduce them byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::basis::serialize_basis;
use crate::config::{BasisSource, NuclearModelKind, RunConfig};
use crate::dirac_one::{solve_block, sommerfeld_energy, SpinorLevel};
use crate::error::{Error, Result};
use crate::grid::log_spaced;
use crate::properties::{compare_states, radial_functions_on_grid, sampled_norm, ComparisonReport};
use crate::scf::{run_scf, ScfState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SolveOne,
    Scf,
    CompareNucleus,
    ExportWf,
    GenBasis,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveOne => "solve-one",
            Command::Scf => "scf",
            Command::CompareNucleus => "compare-nucleus",
            Command::ExportWf => "export-wf",
            Command::GenBasis => "gen-basis",
        }
    }
}

/// What a command produced. `converged` is false when an SCF stopped at the
/// iteration limit; its tables are still written.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub converged: bool,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_) | Error::Parse { .. } | Error::Io(_) | Error::MissingShell(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// `x` with 10 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = x.abs().log10().floor() as i32 + 1;
    if !(-4..=10).contains(&digits) {
        return format!("{x:.9e}");
    }
    format!("{:.*}", (10 - digits) as usize, x)
}

/// Thread count: `DIRAC_GAUSS_THREADS` wins over the config key.
pub fn thread_count(cfg: &RunConfig) -> Result<Option<usize>> {
    match std::env::var("DIRAC_GAUSS_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidInput(format!("DIRAC_GAUSS_THREADS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(cfg.threads),
    }
}

struct Writer {
    files: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, dir: &Path, name: &str, body: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn run(cmd: Command, cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    if let Some(dir) = out {
        cfg.tables_dir = dir.to_path_buf();
        cfg.grids_dir = dir.to_path_buf();
    }
    let started = now();
    let mut w = Writer { files: Vec::new() };
    let (converged, summary) = match cmd {
        Command::SolveOne => solve_one(&cfg, &mut w)?,
        Command::Scf => scf(&cfg, &mut w)?,
        Command::CompareNucleus => compare(&cfg, &mut w)?,
        Command::ExportWf => export(&cfg, &mut w)?,
        Command::GenBasis => gen_basis(&cfg, &mut w)?,
    };
    let mut m = String::new();
    let _ = writeln!(m, "command = {}", cmd.name());
    let _ = writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "started_unix = {started}");
    let _ = writeln!(m, "finished_unix = {}", now());
    let _ = writeln!(m, "converged = {converged}");
    let _ = writeln!(m, "[config]");
    for (k, v) in &cfg.echo {
        let _ = writeln!(m, "{k} = {v}");
    }
    let _ = writeln!(m, "[outputs]");
    for f in &w.files {
        let _ = writeln!(m, "{}", f.display());
    }
    let dir = cfg.tables_dir.clone();
    w.write(&dir, "manifest.txt", &m)?;
    Ok(Outcome { files: w.files, converged, summary })
}

fn solve_one(cfg: &RunConfig, w: &mut Writer) -> Result<(bool, String)> {
    let basis = cfg.load_basis()?;
    let model = cfg.nucleus(cfg.model)?;
    let mut csv = String::from("label,n,kappa,energy_hartree,sommerfeld_hartree,deviation\n");
    let mut summary = String::new();
    for &kappa in &cfg.kappas {
        let sym = crate::angular::AngularSymmetry::new(kappa)?;
        if model.is_point() {
            // Fails early for Z/c >= |κ|.
            sommerfeld_energy(sym.l_large() + 1, kappa, model.z(), cfg.c)?;
        }
        let levels = solve_block(basis.shell(sym)?, &model, cfg.c, cfg.lindep)?;
        for level in levels.iter().take(cfg.levels_per_kappa) {
            let exact = sommerfeld_energy(level.n, kappa, model.z(), cfg.c).ok();
            let (e_ref, dev) = match exact {
                Some(x) => (fmt_sig(x), format!("{:.3e}", level.energy - x)),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(csv, "{},{},{},{},{},{}", level.label(), level.n, kappa, fmt_sig(level.energy), e_ref, dev);
            let _ = writeln!(summary, "{:<5} {:>20}", level.label(), fmt_sig(level.energy));
        }
    }
    w.write(&cfg.tables_dir, "solve_one.csv", &csv)?;
    Ok((true, summary))
}

fn levels_csv(state: &ScfState) -> String {
    let mut csv = String::from("label,n,kappa,occupation,energy_hartree\n");
    for (level, occ) in state.levels.iter().zip(&state.occupations) {
        let _ = writeln!(csv, "{},{},{},{},{}", level.label(), level.n, level.kappa(), occ.occupation, fmt_sig(level.energy));
    }
    csv
}

fn energy_summary(state: &ScfState) -> String {
    format!(
        "total_energy = {}\none_electron = {}\ntwo_electron = {}\niterations = {}\nconverged = {}\nenergy_delta = {:.3e}\ndensity_delta = {:.3e}\n",
        fmt_sig(state.total_energy),
        fmt_sig(state.energy.one_electron),
        fmt_sig(state.energy.two_electron),
        state.iteration,
        state.converged,
        state.energy_delta,
        state.density_delta,
    )
}

fn write_state(cfg: &RunConfig, w: &mut Writer, state: &ScfState, suffix: &str) -> Result<()> {
    w.write(&cfg.tables_dir, &format!("levels{suffix}.csv"), &levels_csv(state))?;
    w.write(&cfg.tables_dir, &format!("energy{suffix}.txt"), &energy_summary(state))?;
    w.write(&cfg.tables_dir, &format!("iterations{suffix}.tsv"), &state.iteration_log())
}

fn scf(cfg: &RunConfig, w: &mut Writer) -> Result<(bool, String)> {
    let basis = cfg.load_basis()?;
    let state = run_scf(&cfg.atom(cfg.model)?, &basis, &cfg.scf)?;
    write_state(cfg, w, &state, "")?;
    Ok((state.converged, energy_summary(&state)))
}

pub fn compare_csv(report: &ComparisonReport) -> String {
    let mut csv = String::from("label,e_point,e_gaussian,delta\n");
    for l in &report.levels {
        let _ = writeln!(csv, "{},{},{},{}", l.label, fmt_sig(l.energy_point), fmt_sig(l.energy_gaussian), fmt_sig(l.delta));
    }
    csv
}

pub fn moments_csv(report: &ComparisonReport) -> String {
    let mut csv = String::from("label,r_point,r_gaussian,inv_r_point,inv_r_gaussian,r2_point,r2_gaussian\n");
    for l in &report.levels {
        let (p, g) = (&l.moments_point, &l.moments_gaussian);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            l.label,
            fmt_sig(p.r),
            fmt_sig(g.r),
            fmt_sig(p.inv_r),
            fmt_sig(g.inv_r),
            fmt_sig(p.r2),
            fmt_sig(g.r2)
        );
    }
    csv
}

fn compare(cfg: &RunConfig, w: &mut Writer) -> Result<(bool, String)> {
    let basis = cfg.load_basis()?;
    let (sp, sg) = (cfg.atom(NuclearModelKind::Point)?, cfg.atom(NuclearModelKind::Gaussian)?);
    let (p, g) = rayon::join(|| run_scf(&sp, &basis, &cfg.scf), || run_scf(&sg, &basis, &cfg.scf));
    let (p, g) = (p?, g?);
    let report = compare_states(&p, &g)?;
    w.write(&cfg.tables_dir, "compare.csv", &compare_csv(&report))?;
    w.write(&cfg.tables_dir, "moments.csv", &moments_csv(&report))?;
    write_state(cfg, w, &p, "_point")?;
    write_state(cfg, w, &g, "_gaussian")?;
    let summary = format!(
        "total_point = {}\ntotal_gaussian = {}\n1s_delta = {}\n",
        fmt_sig(report.total_point),
        fmt_sig(report.total_gaussian),
        report.levels.first().map_or(String::new(), |l| fmt_sig(l.delta))
    );
    Ok((report.converged(), summary))
}

fn select_levels<'a>(state: &'a ScfState, wanted: &[String]) -> Result<Vec<&'a SpinorLevel>> {
    if wanted.iter().any(|s| s.eq_ignore_ascii_case("all")) {
        return Ok(state.levels.iter().collect());
    }
    wanted
        .iter()
        .map(|label| {
            state.level(label).ok_or_else(|| {
                let valid: Vec<String> = state.levels.iter().map(|l| l.label()).collect();
                Error::InvalidInput(format!("unknown level '{label}'; valid levels: {}", valid.join(", ")))
            })
        })
        .collect()
}

fn export(cfg: &RunConfig, w: &mut Writer) -> Result<(bool, String)> {
    let basis = cfg.load_basis()?;
    let state = run_scf(&cfg.atom(cfg.model)?, &basis, &cfg.scf)?;
    let selected = select_levels(&state, &cfg.export_levels)?;
    let grid = log_spaced(cfg.plot.0, cfg.plot.1, cfg.plot.2);
    let mut summary = String::new();
    for level in &selected {
        let samples = radial_functions_on_grid(level, &grid);
        let mut csv = String::from("r_bohr,u,v\n");
        for s in &samples {
            let _ = writeln!(csv, "{:.10e},{:.10e},{:.10e}", s.r, s.u, s.v);
        }
        let norm = sampled_norm(&samples);
        let _ = writeln!(csv, "# trapezoid_norm = {norm:.10}");
        let _ = writeln!(summary, "{:<5} norm {norm:.10}", level.label());
        w.write(&cfg.grids_dir, &format!("wf_{}.csv", level.label()), &csv)?;
    }
    let samples: Vec<_> = state.levels.iter().map(|l| radial_functions_on_grid(l, &grid)).collect();
    let header: Vec<String> = state.levels.iter().map(|l| l.label()).collect();
    for (name, small) in [("large_all.csv", false), ("small_all.csv", true)] {
        let mut csv = format!("r_bohr,{}\n", header.join(","));
        for (i, r) in grid.iter().enumerate() {
            let _ = write!(csv, "{r:.10e}");
            for s in &samples {
                let _ = write!(csv, ",{:.10e}", if small { s[i].v } else { s[i].u });
            }
            csv.push('\n');
        }
        w.write(&cfg.grids_dir, name, &csv)?;
    }
    Ok((state.converged, summary))
}

fn gen_basis(cfg: &RunConfig, w: &mut Writer) -> Result<(bool, String)> {
    if let BasisSource::File(_) = cfg.basis {
        return Err(Error::InvalidInput("gen-basis needs even-tempered parameters (basis.counts)".into()));
    }
    let basis = cfg.load_basis()?;
    let text = serialize_basis(&basis);
    w.write(&cfg.tables_dir, "basis.txt", &text)?;
    let summary = basis
        .l_blocks()
        .iter()
        .map(|(l, e)| format!("{}: {}", crate::angular::l_letter(*l), e.len()))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((true, summary + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(fmt_sig(-7692.74328), "-7692.743280");
        assert_eq!(fmt_sig(0.0091796), "0.009179600000");
        assert_eq!(fmt_sig(83.91140925), "83.91140925");
        assert_eq!(fmt_sig(1.2476e-5), "0.00001247600000");
        assert_eq!(fmt_sig(-4.2e-7), "-4.200000000e-7");
        assert_eq!(fmt_sig(0.0), "0");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Parse { line: 1, message: String::new() }), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Supercritical { z_alpha: 1.4, kappa_abs: 1 }), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::Io(std::io::Error::from(std::io::ErrorKind::NotFound))), EXIT_CONFIG);
    }
}
