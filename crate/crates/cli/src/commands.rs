//! One function per subcommand. Each writes its artifacts under the output
//! directory and returns an [`Outcome`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};

use diraclab_core::clifford::{verify_algebra, DiracMatrices, Mat4};
use diraclab_core::experiments::{algebra_suite, cross_validate, CrossReport};
use diraclab_core::fingerprint::{hash_bytes, hash_file};
use diraclab_core::io::{
    csv_reader, csv_writer, fmt, read_norm_csv, write_norm_csv, write_radial_csv, write_radial_norm_csv, write_snapshot,
    write_snapshot_index,
};
use diraclab_core::norms::estimates::{verify_estimate, EstimateId};
use diraclab_core::norms::maximal::radial_halfwave_maximal_check;
use diraclab_core::norms::report::{log_log_slope, max_ratio_by_param, read_samples, read_summary, REFINEMENT_GROWTH_LIMIT};
use diraclab_core::partialwave::{build_basis, evolve_radial_observed, RadialConfig, RadialOperator, RadialProblem};
use diraclab_core::potential::{check_admissibility, PotentialField};
use diraclab_core::propagator::{evolve_observed, EvolutionConfig, NormRecord};
use diraclab_core::sphere::SphereGrid;
use diraclab_core::{Error, GridSpec, Result, C64};

use crate::config::{RunConfig, SolverKind};

/// What a command found.
pub enum Outcome {
    Pass,
    Fail(String),
}

type Summary = Vec<(String, String)>;

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

/// Writes `key,value` rows followed by a `summary_hash` over the rows and
/// the digests of the data files.
fn write_summary(path: &Path, fp: &str, rows: &Summary, data: &[&Path]) -> Result<String> {
    let mut text = String::new();
    for (k, v) in rows {
        let _ = writeln!(text, "{k},{v}");
    }
    for p in data {
        let _ = writeln!(text, "{}", hash_file(p)?);
    }
    let hash = hash_bytes(text.as_bytes());
    let mut w = csv_writer(path, fp)?;
    w.write_record(["key", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.write_record(["summary_hash", hash.as_str()])?;
    w.flush()?;
    Ok(hash)
}

fn print_summary(rows: &Summary) {
    for (k, v) in rows {
        println!("{k} = {v}");
    }
}

fn prepare_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn read_fixture(path: &Path) -> Result<DiracMatrices> {
    let mut m = DiracMatrices {
        alpha: [Mat4::zeros(); 3],
        beta: Mat4::zeros(),
    };
    let mut r = csv_reader(path)?;
    let bad = |s: &str| Error::Format(format!("{}: {s}", path.display()));
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 5 {
            return Err(bad("expected name,row,col,re,im"));
        }
        let target = match &rec[0] {
            "alpha1" => &mut m.alpha[0],
            "alpha2" => &mut m.alpha[1],
            "alpha3" => &mut m.alpha[2],
            "beta" => &mut m.beta,
            other => return Err(bad(&format!("unknown matrix {other:?}"))),
        };
        let idx = |s: &str| s.trim().parse::<usize>().ok().filter(|i| *i < 4).ok_or_else(|| bad("bad index"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("bad number"));
        target[(idx(&rec[1])?, idx(&rec[2])?)] = C64::new(num(&rec[3])?, num(&rec[4])?);
    }
    Ok(m)
}

pub fn verify_algebra_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let dir = prepare_dir(cfg)?;
    let fp = cfg.fingerprint();
    let a = &cfg.algebra;
    let (report, dirac) = match &a.fixture {
        Some(path) => (verify_algebra(&read_fixture(path)?), None),
        None => {
            let suite = algebra_suite(a.fields, a.n, a.seed)?;
            (suite.algebra, Some(suite.dirac_square_residual))
        }
    };
    let table = dir.join("algebra.csv");
    let mut w = csv_writer(&table, &fp)?;
    w.write_record(["identity", "residual", "tolerance", "passed"])?;
    for r in &report.residuals {
        w.write_record([
            r.identity.clone(),
            fmt(r.residual),
            fmt(report.tolerance),
            (r.residual <= report.tolerance).to_string(),
        ])?;
    }
    if let Some(d) = dirac {
        w.write_record([
            "D^2 = -Lap".to_string(),
            fmt(d),
            fmt(a.dirac_tolerance),
            (d <= a.dirac_tolerance).to_string(),
        ])?;
    }
    w.flush()?;
    let passed = report.passed() && dirac.is_none_or(|d| d <= a.dirac_tolerance);
    let mut rows = vec![
        kv("command", "verify-algebra"),
        kv("identities", report.residuals.len()),
        kv("max_residual", fmt(report.max_residual())),
    ];
    if let Some(d) = dirac {
        rows.push(kv("dirac_square_residual", fmt(d)));
    }
    rows.push(kv("passed", passed));
    write_summary(&dir.join("algebra_summary.csv"), &fp, &rows, &[&table])?;
    print_summary(&rows);
    Ok(if passed {
        Outcome::Pass
    } else {
        let names: Vec<_> = report.failures().map(|f| f.identity.clone()).collect();
        Outcome::Fail(format!("identities out of tolerance: {}", names.join("; ")))
    })
}

fn evolution_config(cfg: &RunConfig, dt: f64) -> EvolutionConfig {
    let e = &cfg.evolution;
    let mut out = EvolutionConfig::uniform(dt, e.t_final, e.scheme, e.records);
    if !e.record_times.is_empty() {
        out.record_times = e.record_times.clone();
    }
    out.keep_snapshots = e.snapshots;
    out
}

fn write_diagnostics(dir: &Path, fp: &str, cfg: &RunConfig, err: &Error, records: &[NormRecord]) -> Result<()> {
    let mut text = format!("# fingerprint: {fp}\nerror: {err}\n\nlast norm records (t, L2, H1, Linf):\n");
    for r in records.iter().rev().take(10).rev() {
        let _ = writeln!(text, "{} {} {} {}", fmt(r.t), fmt(r.l2), fmt(r.h1), fmt(r.linf));
    }
    let _ = write!(text, "\nconfiguration:\n{}", cfg.to_toml());
    fs::write(dir.join("diagnostics.txt"), text)?;
    Ok(())
}

/// Runs the configured evolution; a blowup is returned after the partial
/// norm log and a diagnostics file have been written.
pub fn simulate_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let dir = prepare_dir(cfg)?;
    let fp = cfg.fingerprint();
    let grid = GridSpec::new(cfg.grid.n, cfg.grid.half_width)?;
    let mut rows = vec![kv("command", "simulate")];
    if !cfg.potential.is_zero() {
        let adm = check_admissibility(&cfg.potential, &grid)?;
        if !adm.passed {
            warn!("potential fails its {:?} hypothesis (sup ratio {:.3e})", adm.class, adm.sup_ratio);
        }
        rows.push(kv("potential_class", format!("{:?}", adm.class)));
        rows.push(kv("potential_sup_ratio", fmt(adm.sup_ratio)));
        rows.push(kv("potential_gradient_ratio", fmt(adm.sup_gradient_ratio)));
        rows.push(kv("potential_admissible", adm.passed));
    }
    let norms_path = dir.join("norms.csv");
    let mut records: Vec<NormRecord> = Vec::new();
    let mut data_files: Vec<PathBuf> = vec![norms_path.clone()];
    let result = match cfg.solver.kind {
        SolverKind::ThreeD => {
            rows.push(kv("solver", "3d"));
            let f = cfg.data.build_field(&grid)?;
            let mut ecfg = evolution_config(cfg, cfg.evolution.dt);
            if let Some(r) = cfg.data.support_radius() {
                ecfg = ecfg.with_support_radius(r);
            }
            let field = PotentialField::assemble(&cfg.potential, &grid)?;
            let v = (!cfg.potential.is_zero()).then_some(&field);
            let snap_dir = dir.join("snapshots");
            if ecfg.keep_snapshots {
                fs::create_dir_all(&snap_dir)?;
            }
            let mut index = Vec::new();
            let res = evolve_observed(&f, v, &cfg.nonlinearity, &ecfg, |t, u| {
                records.push(NormRecord::of(t, u));
                if ecfg.keep_snapshots {
                    let name = format!("snap_{:05}.dirb", index.len());
                    write_snapshot(&snap_dir.join(&name), u)?;
                    index.push((t, name));
                }
                Ok(())
            });
            if ecfg.keep_snapshots {
                let p = snap_dir.join("index.txt");
                write_snapshot_index(&p, &fp, &index)?;
                data_files.push(p);
            }
            write_norm_csv(&norms_path, &fp, &records)?;
            res
        }
        SolverKind::Radial => {
            rows.push(kv("solver", "radial"));
            let qn = cfg
                .data
                .sector()
                .ok_or_else(|| Error::InvalidConfig("the radial solver needs data.family = \"sector\"".into()))?;
            let pair = build_basis(qn, &SphereGrid::new(16))?;
            let rcfg = RadialConfig {
                dr: cfg.solver.radial_dr,
                r_max: cfg.solver.radial_r_max,
                closure: cfg.solver.closure,
            };
            let problem = RadialProblem::new(&pair, RadialOperator::for_sector(&qn), rcfg, &cfg.potential, &cfg.nonlinearity)?;
            rows.push(kv("sector_potential_leakage", fmt(problem.potential_leakage)));
            let state = cfg.data.build_radial(problem.radii().to_vec())?;
            let ecfg = evolution_config(cfg, cfg.evolution.dt);
            let mut radial_records = Vec::new();
            let mut snaps = Vec::new();
            let res = evolve_radial_observed(&state, &problem, &ecfg, |t, rec, s| {
                radial_records.push(*rec);
                if ecfg.keep_snapshots {
                    snaps.push((t, s.clone()));
                }
                Ok(())
            });
            if let Err(e @ Error::CflViolation { .. }) = res {
                return Err(e);
            }
            records = radial_records
                .iter()
                .map(|r| NormRecord { t: r.t, l2: r.l2, h1: r.h1, linf: r.linf })
                .collect();
            write_radial_norm_csv(&norms_path, &fp, &radial_records)?;
            if ecfg.keep_snapshots {
                let p = dir.join("radial.csv");
                write_radial_csv(&p, &fp, &snaps)?;
                data_files.push(p);
            }
            res
        }
    };
    if let Err(e) = result {
        if e.is_blowup() {
            write_diagnostics(&dir, &fp, cfg, &e, &records)?;
        }
        return Err(e);
    }
    let h0 = records.first().map(|r| r.h1).unwrap_or(0.0);
    let l0 = records.first().map(|r| r.l2).unwrap_or(0.0);
    let max_h1 = records.iter().map(|r| r.h1).fold(0.0, f64::max);
    let growth = if h0 > 0.0 { max_h1 / h0 } else { 1.0 };
    let l2_drift = records
        .iter()
        .map(|r| if l0 > 0.0 { (r.l2 / l0 - 1.0).abs() } else { r.l2 })
        .fold(0.0, f64::max);
    rows.push(kv("records", records.len()));
    rows.push(kv("initial_h1", fmt(h0)));
    rows.push(kv("max_h1", fmt(max_h1)));
    rows.push(kv("h1_growth", fmt(growth)));
    rows.push(kv("l2_drift", fmt(l2_drift)));
    let ok = cfg.evolution.max_h1_growth.is_none_or(|lim| growth <= lim);
    rows.push(kv("passed", ok));
    let refs: Vec<&Path> = data_files.iter().map(|p| p.as_path()).collect();
    write_summary(&dir.join("simulate_summary.csv"), &fp, &rows, &refs)?;
    print_summary(&rows);
    Ok(if ok {
        Outcome::Pass
    } else {
        Outcome::Fail(format!("H1 grew by {growth:.4} (limit {:?})", cfg.evolution.max_h1_growth))
    })
}

pub fn verify_estimate_cmd(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.estimate.id.eq_ignore_ascii_case("maximal") {
        return maximal_cmd(cfg);
    }
    let id: EstimateId = cfg.estimate.id.parse()?;
    cfg.ensemble.validate()?;
    let dir = prepare_dir(cfg)?;
    let mut flow = cfg.flow.clone();
    if !cfg.potential.is_zero() {
        flow.potential = cfg.potential.clone();
    }
    let report = verify_estimate(id, &cfg.ensemble, &flow)?;
    let samples = dir.join(format!("{}_samples.csv", id.name()));
    let summary = dir.join(format!("{}_summary.csv", id.name()));
    report.write(&samples, &summary)?;
    let mut rows = report.summary();
    rows.push(kv("summary_hash", report.summary_hash()));
    print_summary(&rows);
    Ok(if report.passed {
        Outcome::Pass
    } else {
        Outcome::Fail(format!(
            "{id}: max ratio {:.4e}, refinement growth {:?}, slope {:?}",
            report.max_ratio, report.growth, report.slope
        ))
    })
}

fn maximal_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let dir = prepare_dir(cfg)?;
    let fp = diraclab_core::fingerprint::fingerprint(&cfg.maximal);
    let rep = radial_halfwave_maximal_check(&cfg.maximal)?;
    let table = dir.join("maximal_samples.csv");
    let mut w = csv_writer(&table, &fp)?;
    w.write_record(["index", "l2_ratio"])?;
    for (i, r) in rep.l2_ratios.iter().enumerate() {
        w.write_record([i.to_string(), fmt(*r)])?;
    }
    w.flush()?;
    let rows = vec![
        kv("estimate", "maximal"),
        kv("c", fmt(rep.c)),
        kv("agreement", fmt(rep.agreement)),
        kv("value_at_zero", fmt(rep.value_at_zero)),
        kv("domination", fmt(rep.domination)),
        kv("max_l2_ratio", fmt(rep.max_l2_ratio)),
        kv("passed", rep.passed),
        kv("fingerprint", &fp),
    ];
    let hash = write_summary(&dir.join("maximal_summary.csv"), &fp, &rows, &[&table])?;
    print_summary(&rows);
    println!("summary_hash = {hash}");
    Ok(if rep.passed {
        Outcome::Pass
    } else {
        Outcome::Fail(format!("maximal check failed: agreement {:.3e}", rep.agreement))
    })
}

fn write_cross(path: &Path, fp: &str, rep: &CrossReport) -> Result<()> {
    let mut w = csv_writer(path, fp)?;
    w.write_record(["t", "discrepancy"])?;
    for (t, d) in &rep.rows {
        w.write_record([fmt(*t), fmt(*d)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cross_validate_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let dir = prepare_dir(cfg)?;
    let fp = cfg.fingerprint();
    let c = &cfg.cross;
    if !(c.threshold > 0.0) {
        return Err(Error::InvalidConfig("cross.threshold must be positive".into()));
    }
    let base = cross_validate(&c.config)?;
    let table = dir.join("cross.csv");
    write_cross(&table, &fp, &base)?;
    let mut files = vec![table];
    let mut rows = vec![
        kv("command", "cross-validate"),
        kv("fitted_a", fmt(base.fitted.0)),
        kv("fitted_b", fmt(base.fitted.1)),
        kv("potential_admissible", base.admissibility.passed),
        kv("final_discrepancy", fmt(base.final_discrepancy())),
        kv("max_discrepancy", fmt(base.max_discrepancy())),
        kv("threshold", fmt(c.threshold)),
    ];
    let mut failures = Vec::new();
    if base.final_discrepancy() > c.threshold {
        failures.push(format!("discrepancy {:.3e} above {:.1e}", base.final_discrepancy(), c.threshold));
    }
    if c.refine {
        info!("running the refined comparison");
        let fine = cross_validate(&c.config.refined())?;
        let p = dir.join("cross_refined.csv");
        write_cross(&p, &fp, &fine)?;
        files.push(p);
        let (d0, d1) = (base.final_discrepancy(), fine.final_discrepancy());
        rows.push(kv("refined_final_discrepancy", fmt(d1)));
        if d1 > 0.1 * c.threshold {
            failures.push(format!("refined discrepancy {d1:.3e} above {:.1e}", 0.1 * c.threshold));
        }
        if d0 > 0.0 && d1 >= d0 {
            failures.push(format!("refinement did not decrease the discrepancy ({d0:.3e} -> {d1:.3e})"));
        }
    }
    rows.push(kv("passed", failures.is_empty()));
    let refs: Vec<&Path> = files.iter().map(|p| p.as_path()).collect();
    write_summary(&dir.join("cross_summary.csv"), &fp, &rows, &refs)?;
    print_summary(&rows);
    Ok(if failures.is_empty() {
        Outcome::Pass
    } else {
        Outcome::Fail(failures.join("; "))
    })
}

/// Recomputes summaries from the CSV files found in the input directory and
/// compares them with the stored ones.
pub fn report_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let input = cfg.report.input.clone().unwrap_or_else(|| cfg.output_dir());
    if !input.is_dir() {
        return Err(Error::InvalidConfig(format!("report input {} is not a directory", input.display())));
    }
    let mut names: Vec<String> = fs::read_dir(&input)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    names.sort();
    let mut rows: Summary = vec![kv("command", "report")];
    let mut mismatches = Vec::new();
    let mut found = 0;
    for name in &names {
        let path = input.join(name);
        if let Some(id) = name.strip_suffix("_samples.csv") {
            if id == "maximal" {
                continue;
            }
            found += 1;
            let (_, samples) = read_samples(&path)?;
            let base = samples.iter().filter(|s| s.level == 0);
            let max_ratio = base.clone().map(|s| s.ratio).fold(0.0, f64::max);
            let refined: Vec<f64> = samples.iter().filter(|s| s.level == 1).map(|s| s.ratio).collect();
            rows.push(kv(&format!("{id}.samples"), base.count()));
            rows.push(kv(&format!("{id}.max_ratio"), fmt(max_ratio)));
            if !refined.is_empty() {
                let r = refined.iter().cloned().fold(0.0, f64::max);
                let g = r / max_ratio - 1.0;
                rows.push(kv(&format!("{id}.growth"), fmt(g)));
                rows.push(kv(&format!("{id}.refinement_stable"), g < REFINEMENT_GROWTH_LIMIT));
            }
            if let Some(s) = log_log_slope(&max_ratio_by_param(&samples)) {
                rows.push(kv(&format!("{id}.slope"), fmt(s)));
            }
            let stored = input.join(format!("{id}_summary.csv"));
            if stored.exists() {
                let summary = read_summary(&stored)?;
                let same = summary
                    .iter()
                    .find(|(k, _)| k == "max_ratio")
                    .is_some_and(|(_, v)| *v == fmt(max_ratio));
                rows.push(kv(&format!("{id}.matches_summary"), same));
                if !same {
                    mismatches.push(id.to_string());
                }
            }
        } else if name == "norms.csv" {
            found += 1;
            let recs = read_norm_csv(&path)?;
            let h0 = recs.first().map(|r| r.h1).unwrap_or(0.0);
            let max_h1 = recs.iter().map(|r| r.h1).fold(0.0, f64::max);
            rows.push(kv("norms.records", recs.len()));
            rows.push(kv("norms.t_final", fmt(recs.last().map(|r| r.t).unwrap_or(0.0))));
            rows.push(kv("norms.h1_growth", fmt(if h0 > 0.0 { max_h1 / h0 } else { 1.0 })));
        } else if name == "cross.csv" || name == "cross_refined.csv" {
            found += 1;
            let stem = name.trim_end_matches(".csv");
            let mut r = csv_reader(&path)?;
            let mut last = 0.0;
            let mut worst = 0.0f64;
            for rec in r.records() {
                let rec = rec?;
                let d: f64 = rec[1].parse().map_err(|_| Error::Format(format!("bad value in {name}")))?;
                last = d;
                worst = worst.max(d);
            }
            rows.push(kv(&format!("{stem}.final_discrepancy"), fmt(last)));
            rows.push(kv(&format!("{stem}.max_discrepancy"), fmt(worst)));
        }
    }
    if found == 0 {
        return Err(Error::InvalidConfig(format!("no result files found in {}", input.display())));
    }
    let dir = prepare_dir(cfg)?;
    let fp = cfg.fingerprint();
    rows.push(kv("consistent", mismatches.is_empty()));
    write_summary(&dir.join("report.csv"), &fp, &rows, &[])?;
    print_summary(&rows);
    Ok(if mismatches.is_empty() {
        Outcome::Pass
    } else {
        Outcome::Fail(format!("stored summaries disagree for {}", mismatches.join(", ")))
    })
}
