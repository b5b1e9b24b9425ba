//! The subcommands. Each writes its files under an output directory and
//! returns the lines to print on standard output.

use std::fs;
use std::path::{Path, PathBuf};

use hsto_core::diagnostics::{ensemble_stats, write_csv, DiagnosticsRecord};
use hsto_core::grid::{inner_fields, make_grid, Component, Fields, GridSpec, InnerKind, State};
use hsto_core::lab::gronwall::{check_hypothesis, generate_instance, gronwall_bound};
use hsto_core::lab::inequalities::{
    random_triples, random_velocity_set, verify_aniso_embedding, verify_b_bound, verify_dissipation, RatioReport,
};
use hsto_core::modes::{random_rough_field, random_smooth_field};
use hsto_core::operators::{apply_a, apply_e, cancellation_defect, PhysParams};
use hsto_core::pressure::{random_stokes_case, stokes_pressure_check, StokesRow};
use hsto_core::snapshot::Snapshot;
use hsto_core::stepping::{run_trajectory_with, Mode, RunOutput};
use hsto_core::{Grid64, RunConfig64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(CliError::io(path))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(CliError::io(path))
}

/// `git rev-parse HEAD` of the working directory, or `unknown`.
pub fn git_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

#[derive(Serialize)]
struct Manifest {
    version: String,
    git_hash: String,
    seed: u64,
    mode: String,
    steps_requested: usize,
    steps_taken: usize,
    records: usize,
    terminated: String,
    snapshots: Vec<String>,
}

/// Runs one trajectory and writes `config.toml`, `diagnostics.csv`,
/// `snapshots/step_NNNNNN.bin` and `manifest.toml` into `dir`.
pub fn run_to_dir(file: &ConfigFile, cfg: &RunConfig64, dir: &Path) -> CliResult<RunOutput<f64>> {
    let snap_dir = dir.join("snapshots");
    create_dir(&snap_dir)?;
    let mut echo = file.clone();
    echo.run.seed = cfg.seed;
    echo.run.mode = cfg.mode.name().into();
    echo.output.dir = dir.to_path_buf();
    write(&dir.join("config.toml"), echo.to_toml())?;

    let every = file.output.snapshot_every;
    let mut written = Vec::new();
    let mut last: Option<(usize, State<f64>)> = None;
    let out = run_trajectory_with(cfg, |n, state| {
        if n == 0 || (every > 0 && n % every == 0) {
            let name = format!("step_{n:06}.bin");
            fs::write(snap_dir.join(&name), Snapshot::from_state(state).to_bytes()?)?;
            written.push(name);
        }
        last = Some((n, state.clone()));
        Ok(())
    })?;
    if let Some((n, state)) = last {
        let name = format!("step_{n:06}.bin");
        if !written.contains(&name) {
            write(&snap_dir.join(&name), Snapshot::from_state(&state).to_bytes()?)?;
            written.push(name);
        }
    }

    write(&dir.join("diagnostics.csv"), write_csv(&out.records))?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        git_hash: git_hash(),
        seed: cfg.seed,
        mode: cfg.mode.name().into(),
        steps_requested: cfg.steps,
        steps_taken: out.steps_taken,
        records: out.records.len(),
        terminated: out.terminated.clone().unwrap_or_default(),
        snapshots: written,
    };
    write(
        &dir.join("manifest.toml"),
        toml::to_string(&manifest).expect("manifest serializes"),
    )?;
    Ok(out)
}

pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
}

fn apply(file: &ConfigFile, cfg: &mut RunConfig64, o: &Overrides) -> PathBuf {
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(m) = o.mode {
        cfg.mode = m;
    }
    o.out.clone().unwrap_or_else(|| file.output.dir.clone())
}

fn run_summary(out: &RunOutput<f64>) -> String {
    let last = out.records.last().expect("at least the initial record");
    match &out.terminated {
        Some(why) => format!("terminated at t = {} after {} steps: {why}", last.t, out.steps_taken),
        None => format!(
            "completed {} steps, t = {}, |U| = {}",
            out.steps_taken, last.t, last.norms.l2_u
        ),
    }
}

pub fn cmd_run(file: &ConfigFile, cfg: RunConfig64, o: &Overrides) -> CliResult<Vec<String>> {
    let mut cfg = cfg;
    let dir = apply(file, &mut cfg, o);
    let out = run_to_dir(file, &cfg, &dir)?;
    Ok(vec![run_summary(&out), format!("wrote {}", dir.display())])
}

pub const ENSEMBLE_HEADER: &str = "p,runs,a_mean,a_se,b_mean,b_se,sup_mean,sup_se";

/// Runs seeds `seed .. seed + runs` (in parallel) into `out/run_<seed>/` and
/// writes the moment report to `out/ensemble.csv`.
pub fn cmd_ensemble(file: &ConfigFile, cfg: RunConfig64, o: &Overrides, runs: usize) -> CliResult<Vec<String>> {
    if runs == 0 {
        return Err(CliError::InvalidValue {
            key: "--runs".into(),
            reason: "must be at least 1".into(),
        });
    }
    let mut cfg = cfg;
    let dir = apply(file, &mut cfg, o);
    create_dir(&dir)?;
    let base = cfg.seed;
    let results: Vec<CliResult<Vec<DiagnosticsRecord>>> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = base.wrapping_add(i);
            let out = run_to_dir(file, &c, &dir.join(format!("run_{}", c.seed)))?;
            Ok(out.records)
        })
        .collect();
    let series = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let blowups = series
        .iter()
        .filter(|s| s.last().is_some_and(|r| r.blowup))
        .count();

    let mut csv = format!("{ENSEMBLE_HEADER}\n");
    let mut lines = Vec::new();
    for p in [2.0, 4.0] {
        let m = ensemble_stats(&series, p)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            m.p, m.runs, m.a_mean, m.a_se, m.b_mean, m.b_se, m.sup_mean, m.sup_se
        ));
        lines.push(format!(
            "p = {p}: E(sup|U|^p + int ||U||^2 |U|^(p-2)) = {:.6e} +- {:.2e}, E(int ||U||^2)^(p/2) = {:.6e} +- {:.2e}",
            m.a_mean, m.a_se, m.b_mean, m.b_se
        ));
    }
    write(&dir.join("ensemble.csv"), csv)?;
    lines.push(format!("{runs} runs, {blowups} flagged blow-ups, wrote {}", dir.display()));
    Ok(lines)
}

/// One line of the verification summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub samples: usize,
    pub skipped: usize,
    /// `None` for quantities that are reported, not judged.
    pub pass: Option<bool>,
}

pub const SUMMARY_HEADER: &str = "check,grid_N,value,samples,skipped,pass";

impl Check {
    fn csv_line(&self, n: usize) -> String {
        let pass = match self.pass {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        format!("{},{n},{},{},{},{pass}", self.name, self.value, self.samples, self.skipped)
    }
}

fn ratio_check(name: &'static str, r: &RatioReport) -> Check {
    Check {
        name,
        value: r.max(),
        samples: r.ratios.len(),
        skipped: r.skipped,
        pass: None,
    }
}

fn rough_fields(g: &Grid64, rng: &mut ChaCha8Rng) -> Fields<f64> {
    let mut f = Fields::zeros(g);
    for c in Component::ALL {
        f[c] = random_rough_field(g, c.bc(), rng);
    }
    f
}

/// Sample counts of the verification battery.
#[derive(Clone, Copy, Debug)]
pub struct BatterySize {
    pub pairs: usize,
    pub fields: usize,
    pub triples: usize,
    pub modes: usize,
}

impl Default for BatterySize {
    fn default() -> Self {
        Self {
            pairs: 20,
            fields: 100,
            triples: 100,
            modes: 8,
        }
    }
}

pub struct BatteryOutput {
    pub checks: Vec<Check>,
    pub embedding: RatioReport,
    pub b_bound: RatioReport,
    pub dissipation: Vec<(f64, f64)>,
}

/// Operator identities and inequality ratios on the `n^3` unit cube.
pub fn verify_battery(n: usize, seed: u64, size: BatterySize) -> CliResult<BatteryOutput> {
    let g: Grid64 = make_grid(GridSpec::cube(n))?;
    let p = PhysParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut sa: f64 = 0.0;
    let mut cor: f64 = 0.0;
    for _ in 0..size.pairs {
        let a = rough_fields(&g, &mut rng);
        let b = rough_fields(&g, &mut rng);
        let lhs = inner_fields(&g, &apply_a(&g, &a, &p), &b, InnerKind::L2, &p)?;
        let rhs = inner_fields(&g, &a, &b, InnerKind::V, &p)?;
        let scale = (inner_fields(&g, &a, &a, InnerKind::V, &p)? * inner_fields(&g, &b, &b, InnerKind::V, &p)?).sqrt();
        sa = sa.max((lhs - rhs).abs() / scale);
        let e = inner_fields(&g, &apply_e(&g, &a, &p), &a, InnerKind::L2, &p)?;
        cor = cor.max(e.abs() / (p.f.abs() * inner_fields(&g, &a, &a, InnerKind::L2, &p)?));
    }
    checks.push(Check {
        name: "a_self_adjoint",
        value: sa,
        samples: size.pairs,
        skipped: 0,
        pass: Some(sa <= 1e-10),
    });
    checks.push(Check {
        name: "coriolis_neutral",
        value: cor,
        samples: size.pairs,
        skipped: 0,
        pass: Some(cor <= 1e-13),
    });

    for (name, r) in [("cancellation_r1", 1), ("cancellation_r3", 3)] {
        let mut crng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let f: Vec<_> = [Component::U, Component::V, Component::U, Component::V]
            .iter()
            .map(|&c| random_smooth_field(&g, c, 6, &mut crng))
            .collect();
        let (d, s) = cancellation_defect(&g, [&f[0], &f[1]], [&f[2], &f[3]], r);
        checks.push(Check {
            name,
            value: (d / s).abs(),
            samples: 1,
            skipped: 0,
            pass: None,
        });
    }

    let set = random_velocity_set(&g, size.fields, size.modes, &mut rng);
    let embedding = verify_aniso_embedding(&g, &set, 12.0)?;
    checks.push(ratio_check("aniso_q12_max", &embedding));

    let triples = random_triples(&g, size.triples, size.modes, &mut rng);
    let b_bound = verify_b_bound(&g, &triples);
    checks.push(ratio_check("b_bound_max", &b_bound));

    let dissipation: Vec<(f64, f64)> = set.iter().map(|[u, v]| verify_dissipation(&g, u, v, &p)).collect();
    let held = dissipation.iter().filter(|(l, r)| l <= r).count();
    let worst = dissipation
        .iter()
        .filter(|(_, r)| *r > 0.0)
        .map(|(l, r)| l / r)
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "dissipation_max_ratio",
        value: worst,
        samples: dissipation.len(),
        skipped: 0,
        pass: Some(held == dissipation.len()),
    });

    Ok(BatteryOutput {
        checks,
        embedding,
        b_bound,
        dissipation,
    })
}

pub fn cmd_verify(n: usize, seed: u64, out: &Path) -> CliResult<Vec<String>> {
    let b = verify_battery(n, seed, BatterySize::default())?;
    create_dir(out)?;
    write(&out.join("embedding_ratios.csv"), b.embedding.to_csv())?;
    write(&out.join("b_ratios.csv"), b.b_bound.to_csv())?;
    let mut d = String::from("sample,lhs,rhs\n");
    for (i, (l, r)) in b.dissipation.iter().enumerate() {
        d.push_str(&format!("{i},{l},{r}\n"));
    }
    write(&out.join("dissipation.csv"), d)?;
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut lines = Vec::new();
    for c in &b.checks {
        summary.push_str(&c.csv_line(n));
        summary.push('\n');
        lines.push(c.csv_line(n));
    }
    write(&out.join("summary.csv"), summary)?;
    lines.push(format!("wrote {}", out.display()));
    let failed: Vec<&str> = b.checks.iter().filter(|c| c.pass == Some(false)).map(|c| c.name).collect();
    if !failed.is_empty() {
        return Err(CliError::CheckFailed(failed.join(", ")));
    }
    Ok(lines)
}

pub const STOKES_NU: f64 = 0.1;
pub const STOKES_R: f64 = 4.0 / 3.0;
pub const STOKES_HORIZON: f64 = 1.0;

pub fn stokes_rows(n: usize, cases: usize, seed: u64) -> CliResult<Vec<StokesRow>> {
    let cases: Vec<_> = (0..cases as u64).map(|i| random_stokes_case(seed.wrapping_add(i))).collect();
    Ok(stokes_pressure_check(&cases, n, STOKES_NU, STOKES_R, STOKES_HORIZON)?)
}

pub fn cmd_pressure_check(n: usize, cases: usize, seed: u64, out: &Path) -> CliResult<Vec<String>> {
    let rows = stokes_rows(n, cases, seed)?;
    create_dir(out)?;
    let mut csv = format!("{}\n", StokesRow::CSV_HEADER);
    for r in &rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    write(&out.join("stokes.csv"), csv)?;
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(vec![
        format!("{} cases on {n}x{n}: max ratio {max:.6e}", rows.len()),
        format!("wrote {}", out.display()),
    ])
}

pub const GRONWALL_HEADER: &str = "instance,sup_x,bound,c,m,eps,n,holds";
pub const GRONWALL_SAMPLES: usize = 200;

pub fn cmd_gronwall(runs: usize, seed: u64, out: &Path) -> CliResult<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = format!("{GRONWALL_HEADER}\n");
    let mut held = 0;
    for i in 0..runs {
        let input = generate_instance(&mut rng, GRONWALL_SAMPLES);
        check_hypothesis(&input)?;
        let b = gronwall_bound(&input)?;
        let sup = input.x.iter().copied().fold(0.0, f64::max);
        let ok = sup <= b.bound;
        held += usize::from(ok);
        csv.push_str(&format!("{i},{sup},{},{},{},{},{},{ok}\n", b.bound, b.c, b.m, b.eps, b.n));
    }
    create_dir(out)?;
    write(&out.join("gronwall.csv"), csv)?;
    let line = format!("bound held in {held}/{runs} instances");
    if held < runs {
        return Err(CliError::CheckFailed(line));
    }
    Ok(vec![line, format!("wrote {}", out.display())])
}
