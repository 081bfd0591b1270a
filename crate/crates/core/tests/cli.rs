use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const NEON: &str = "\
element.z = 10
basis.counts = s:14 p:10
basis.beta = 2.5
basis.s.alpha = 0.1
basis.p.alpha = 0.08
occupations = aufbau
";

fn dirac_gauss(cmd: &str, config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirac-gauss"))
        .args([cmd, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn column(csv: &str, row_label: &str, col: usize) -> f64 {
    let line = csv.lines().find(|l| l.starts_with(&format!("{row_label},"))).expect("row present");
    line.split(',').nth(col).unwrap().parse().unwrap()
}

#[test]
fn hydrogen_one_electron_levels() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "h.conf",
        "element.z = 1\nbasis.counts = s:30\nbasis.alpha = 0.0316\nbasis.beta = 1.8\nkappas = -1\n",
    );
    let out = dir.path().join("out");
    let run = dirac_gauss("solve-one", &cfg, &out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(out.join("solve_one.csv")).unwrap();
    let e = column(&csv, "1s", 3);
    assert!((e - -0.50000665659).abs() < 1e-8, "{e}");
    assert!(out.join("manifest.txt").exists());
}

#[test]
fn scf_tables_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ne.conf", NEON);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let run = dirac_gauss("scf", &cfg, out);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    for file in ["levels.csv", "energy.txt", "iterations.tsv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let levels = fs::read_to_string(a.join("levels.csv")).unwrap();
    assert_eq!(levels.lines().count(), 1 + 4);
    assert!(column(&levels, "1s", 4) < column(&levels, "2s", 4));
}

#[test]
fn generated_basis_round_trips() {
    let dir = TempDir::new().unwrap();
    let inline = write_config(&dir, "inline.conf", NEON);
    let out = dir.path().join("gen");
    assert!(dirac_gauss("gen-basis", &inline, &out).status.success());
    let from_file = write_config(&dir, "file.conf", "element.z = 10\nbasis.file = gen/basis.txt\n");
    let (x, y) = (dir.path().join("x"), dir.path().join("y"));
    assert!(dirac_gauss("scf", &inline, &x).status.success());
    let run = dirac_gauss("scf", &from_file, &y);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(fs::read(x.join("levels.csv")).unwrap(), fs::read(y.join("levels.csv")).unwrap());
}

#[test]
fn exported_wavefunction_is_normalized() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ne.conf", &format!("{NEON}export.levels = 1s 2p\n"));
    let out = dir.path().join("wf");
    let run = dirac_gauss("export-wf", &cfg, &out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let wf = fs::read_to_string(out.join("wf_1s.csv")).unwrap();
    let rows = wf.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count();
    assert_eq!(rows, 600);
    let norm: f64 = wf.lines().find_map(|l| l.strip_prefix("# trapezoid_norm = ")).unwrap().trim().parse().unwrap();
    assert!((norm - 1.0).abs() < 1e-6, "{norm}");
    assert!(out.join("wf_2p.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let code = |name: &str, text: &str, cmd: &str| {
        let cfg = write_config(&dir, name, text);
        dirac_gauss(cmd, &cfg, &out).status.code()
    };
    assert_eq!(code("typo.conf", "element.z = 10\nbasis.s.alpah = 1\n", "scf"), Some(2));
    assert_eq!(code("nofile.conf", "element.z = 10\nbasis.file = missing.txt\n", "scf"), Some(2));
    assert_eq!(
        code("heavy.conf", "element.z = 200\nbasis.counts = s:10\nbasis.alpha = 1\nbasis.beta = 2\nkappas = -1\n", "solve-one"),
        Some(3)
    );
    assert_eq!(code("short.conf", &format!("{NEON}scf.max_iter = 2\n"), "scf"), Some(4));
}
