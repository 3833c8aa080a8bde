use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_diraclab");

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("DIRACLAB_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn summary_value(path: &Path, key: &str) -> Option<String> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .find_map(|l| l.strip_prefix(&format!("{key},")).map(str::to_string))
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(csv_files(&p));
        } else if p.extension().is_some_and(|x| x == "csv" || x == "txt") {
            out.push(p);
        }
    }
    out
}

/// Parses `t,l2,h1,linf` rows of a norm table.
fn norm_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

const QUICK_ESTIMATE: [&str; 4] = [
    "--flow.radial_dr=0.0625",
    "--flow.radial_t_final=4.0",
    "--ensemble.size=2",
    "--ensemble.refine=false",
];

#[test]
fn verify_algebra_passes_by_default() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["verify-algebra", "--algebra.fields=4", "--output.dir=alg"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("verify-algebra: PASS"));
    let table = fs::read_to_string(tmp.path().join("alg/algebra.csv")).unwrap();
    for name in ["alpha1 hermitian", "beta hermitian", "D^2 = -Lap"] {
        assert!(table.contains(name), "{name} missing from\n{table}");
    }
}

fn write_fixture(path: &Path, beta_00: f64) {
    // Dirac representation.
    let mut rows = vec!["name,row,col,re,im".to_string()];
    let mut put = |name: &str, r: usize, c: usize, re: f64, im: f64| rows.push(format!("{name},{r},{c},{re},{im}"));
    for (r, c) in [(0, 3), (1, 2), (2, 1), (3, 0)] {
        put("alpha1", r, c, 1.0, 0.0);
    }
    for (r, c, im) in [(0, 3, -1.0), (1, 2, 1.0), (2, 1, -1.0), (3, 0, 1.0)] {
        put("alpha2", r, c, 0.0, im);
    }
    for (r, c, re) in [(0, 2, 1.0), (1, 3, -1.0), (2, 0, 1.0), (3, 1, -1.0)] {
        put("alpha3", r, c, re, 0.0);
    }
    for (i, re) in [beta_00, 1.0, -1.0, -1.0].into_iter().enumerate() {
        put("beta", i, i, re, 0.0);
    }
    fs::write(path, rows.join("\n") + "\n").unwrap();
}

#[test]
fn algebra_fixture_is_checked() {
    let tmp = TempDir::new().unwrap();
    let good = tmp.path().join("good.csv");
    let bad = tmp.path().join("bad.csv");
    write_fixture(&good, 1.0);
    write_fixture(&bad, 1.001);
    let o = run_in(tmp.path(), &["verify-algebra", "--algebra.fixture=good.csv"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = run_in(tmp.path(), &["verify-algebra", "--algebra.fixture=bad.csv"]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn zero_data_gives_zero_norms() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(
        tmp.path(),
        &[
            "simulate",
            "--grid.n=32",
            "--grid.half_width=16.0",
            "--data.amplitude=0.0",
            "--nonlinearity.kind=beta_form",
            "--evolution.t_final=0.5",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let rows = norm_rows(&tmp.path().join("out/norms.csv"));
    assert_eq!(rows.len(), 11);
    for r in rows {
        assert!(r[1..].iter().all(|x| *x == 0.0), "{r:?}");
    }
}

#[test]
fn free_run_keeps_h1_constant() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(
        tmp.path(),
        &["simulate", "--grid.n=32", "--grid.half_width=16.0", "--evolution.t_final=2.0"],
    );
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let rows = norm_rows(&tmp.path().join("out/norms.csv"));
    let h0 = rows[0][2];
    assert!(h0 > 0.0);
    for r in &rows {
        assert!((r[2] - h0).abs() <= 1e-10 * h0, "{r:?}");
    }
}

#[test]
fn radial_sector_simulation() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("run.toml"),
        r#"
command = "simulate"
[solver]
kind = "radial"
radial_dr = 0.0625
radial_r_max = 16.0
[evolution]
dt = 0.03125
t_final = 2.0
snapshots = true
max_h1_growth = 2.0
[nonlinearity]
kind = "beta_form"
[data]
family = "sector"
two_j = 1
two_m = 1
kappa = 1
amplitude_plus = 0.01
amplitude_minus = 0.005
width = 1.5
"#,
    )
    .unwrap();
    let o = run_in(tmp.path(), &["-c", "run.toml"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(tmp.path().join("out/radial.csv").exists());
    let growth: f64 = summary_value(&tmp.path().join("out/simulate_summary.csv"), "h1_growth")
        .unwrap()
        .parse()
        .unwrap();
    assert!(growth <= 2.0);
}

#[test]
fn usage_errors_exit_64() {
    let tmp = TempDir::new().unwrap();
    let cases: [&[&str]; 5] = [
        &["verify-estimate", "--ensemble.size=0"],
        &["verify-estimate", "--estimate.id=nonsense"],
        &["verify-estimate", "--estimate.id=endV", "--potential.v1.kind=constant", "--potential.v1.value=0.5"],
        &["simulate", "--grid.bogus=1"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = run_in(tmp.path(), args);
        assert_eq!(code(&o), 64, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run_in(tmp.path(), &[]);
    assert_eq!(code(&o), 64);
}

#[test]
fn blowup_exits_2_with_diagnostics() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("blow.toml"),
        r#"
command = "simulate"
[grid]
n = 8
half_width = 4.0
[evolution]
dt = 0.5
t_final = 2.0
records = 1
[data]
family = "gaussian"
amplitude = 1000.0
width = 0.2
[nonlinearity]
kind = "general_poly"
terms = [
  { out = 0, coeff = [0.25, 0.0], factors = [4, 4, 4] },
  { out = 1, coeff = [0.25, 0.0], factors = [5, 5, 5] },
  { out = 2, coeff = [0.25, 0.0], factors = [6, 6, 6] },
  { out = 3, coeff = [0.25, 0.0], factors = [7, 7, 7] },
]
"#,
    )
    .unwrap();
    let o = run_in(tmp.path(), &["--config", "blow.toml"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let diag = fs::read_to_string(tmp.path().join("out/diagnostics.txt")).unwrap();
    assert!(diag.starts_with("# fingerprint: "));
    assert!(diag.contains("blowup"));
}

#[test]
fn estimate_then_report() {
    let tmp = TempDir::new().unwrap();
    let mut args = vec!["verify-estimate", "--estimate.id=homdir", "--output.dir=est"];
    args.extend(QUICK_ESTIMATE);
    let o = run_in(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = run_in(tmp.path(), &["report", "--report.input=est", "--output.dir=rep"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let rep = tmp.path().join("rep/report.csv");
    assert_eq!(summary_value(&rep, "homdir.samples").as_deref(), Some("2"));
    assert_eq!(summary_value(&rep, "homdir.matches_summary").as_deref(), Some("true"));
    let stored = summary_value(&tmp.path().join("est/homdir_summary.csv"), "max_ratio");
    assert_eq!(summary_value(&rep, "homdir.max_ratio"), stored);

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = run_in(tmp.path(), &["report", "--report.input=empty"]);
    assert_eq!(code(&o), 64);
}

#[test]
fn output_root_variable_is_honoured() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("root");
    let o = Command::new(BIN)
        .args(["verify-algebra", "--algebra.fields=2", "--output.dir=alg"])
        .current_dir(tmp.path())
        .env("DIRACLAB_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(root.join("alg/algebra_summary.csv").exists());
    assert!(!tmp.path().join("alg").exists());
}

#[test]
fn outputs_carry_the_fingerprint_and_reruns_agree() {
    let tmp = TempDir::new().unwrap();
    let runs: [Vec<&str>; 3] = [
        vec!["verify-algebra", "--algebra.fields=3"],
        vec![
            "simulate",
            "--grid.n=32",
            "--grid.half_width=16.0",
            "--evolution.t_final=0.5",
            "--evolution.snapshots=true",
            "--nonlinearity.kind=beta_form",
        ],
        [vec!["verify-estimate", "--estimate.id=stdir"], QUICK_ESTIMATE.to_vec()].concat(),
    ];
    for (k, args) in runs.iter().enumerate() {
        let mut hashes = Vec::new();
        for rep in 0..2 {
            let dir = format!("--output.dir=r{k}_{rep}");
            let mut a = args.clone();
            a.push(&dir);
            let o = run_in(tmp.path(), &a);
            assert_eq!(code(&o), 0, "{args:?}: {}", stdout(&o));
            let out = tmp.path().join(format!("r{k}_{rep}"));
            let files = csv_files(&out);
            assert!(!files.is_empty());
            for f in &files {
                let first = fs::read_to_string(f).unwrap().lines().next().unwrap_or_default().to_string();
                assert!(first.starts_with("# fingerprint: "), "{}: {first}", f.display());
            }
            let mut summaries: Vec<_> = files
                .iter()
                .filter(|f| f.to_string_lossy().ends_with("_summary.csv"))
                .map(|f| summary_value(f, "summary_hash").unwrap())
                .collect();
            summaries.sort();
            assert!(!summaries.is_empty());
            hashes.push(summaries);
        }
        assert_eq!(hashes[0], hashes[1], "{args:?}");
    }
}
