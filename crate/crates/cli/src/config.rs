//! TOML run configuration.
//!
//! Sections mirror the core types: `[grid]` (`GridSpec`), `[physics]`
//! (`PhysParams` plus the `DriftTerms` switches), `[noise]` (`NoiseSpec`),
//! `[forcing]`, `[run]` (`RunConfig` and the initial condition) and
//! `[output]`. Only `n1`, `n2`, `nz` and `seed` are required.

use std::path::{Path, PathBuf};

use hsto_core::grid::GridSpec;
use hsto_core::noise::NoiseKind;
use hsto_core::operators::{DriftTerms, PhysParams};
use hsto_core::stepping::{ForcingSpec, InitSpec, Mode, NoiseSpec, RunConfig};
use hsto_core::{Error, RunConfig64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub forcing: ForcingSection,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "one")]
    pub l1: f64,
    #[serde(default = "one")]
    pub l2: f64,
    #[serde(default = "one")]
    pub h: f64,
    pub n1: usize,
    pub n2: usize,
    pub nz: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub mu_v: f64,
    pub nu_v: f64,
    pub mu_t: f64,
    pub nu_t: f64,
    pub mu_s: f64,
    pub nu_s: f64,
    pub f: f64,
    pub g: f64,
    pub rho0: f64,
    pub beta_t: f64,
    pub beta_s: f64,
    pub t_r: f64,
    pub s_r: f64,
    pub advection: bool,
    pub buoyancy: bool,
    pub coriolis: bool,
    pub surface_pressure: bool,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        let p = PhysParams::<f64>::default();
        let t = DriftTerms::ALL;
        Self {
            mu_v: p.mu_v,
            nu_v: p.nu_v,
            mu_t: p.mu_t,
            nu_t: p.nu_t,
            mu_s: p.mu_s,
            nu_s: p.nu_s,
            f: p.f,
            g: p.g,
            rho0: p.rho0,
            beta_t: p.beta_t,
            beta_s: p.beta_s,
            t_r: p.t_r,
            s_r: p.s_r,
            advection: t.advection,
            buoyancy: t.buoyancy,
            coriolis: t.coriolis,
            surface_pressure: t.surface_pressure,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    /// `additive`, `linear_multiplicative` or `lipschitz_functional`.
    pub kind: String,
    pub k: usize,
    pub amplitude: f64,
    /// Per-mode amplitudes; overrides `amplitude` where given.
    pub amplitudes: Vec<f64>,
    pub clamp: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseSpec::<f64>::default();
        Self {
            kind: n.kind.name().into(),
            k: n.k,
            amplitude: n.amplitude,
            amplitudes: n.amplitudes,
            clamp: n.clamp,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingSection {
    /// Amplitudes of the `u, v, T, S` forcing modes.
    pub amplitude: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    #[serde(default = "RunSection::default_dt")]
    pub dt: f64,
    #[serde(default = "RunSection::default_steps")]
    pub steps: usize,
    /// `direct`, `split` or `both`.
    #[serde(default = "RunSection::default_mode")]
    pub mode: String,
    #[serde(default = "RunSection::default_cadence")]
    pub cadence: usize,
    #[serde(default = "RunSection::default_ceiling")]
    pub blowup_ceiling: f64,
    #[serde(default = "RunSection::default_tol")]
    pub poisson_tol: f64,
    #[serde(default = "RunSection::default_init_amplitude")]
    pub init_amplitude: f64,
    #[serde(default = "RunSection::default_init_modes")]
    pub init_modes: usize,
    #[serde(default)]
    pub init_seed: u64,
}

impl RunSection {
    fn defaults() -> RunConfig64 {
        RunConfig::new(GridSpec::cube(4), 0)
    }
    fn default_dt() -> f64 {
        Self::defaults().dt
    }
    fn default_steps() -> usize {
        Self::defaults().steps
    }
    fn default_mode() -> String {
        Self::defaults().mode.name().into()
    }
    fn default_cadence() -> usize {
        Self::defaults().cadence
    }
    fn default_ceiling() -> f64 {
        Self::defaults().blowup_ceiling
    }
    fn default_tol() -> f64 {
        Self::defaults().poisson_tol
    }
    fn default_init_amplitude() -> f64 {
        InitSpec::<f64>::default().amplitude
    }
    fn default_init_modes() -> usize {
        InitSpec::<f64>::default().modes
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write a snapshot every this many steps (0: initial and final only).
    pub snapshot_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            snapshot_every: 0,
        }
    }
}

fn section_of(key: &str) -> &'static str {
    match key {
        "l1" | "l2" | "h" | "n1" | "n2" | "nz" => "grid",
        "kind" | "k" | "amplitude" | "amplitudes" | "clamp" => "noise",
        "dt" | "steps" | "mode" | "cadence" | "blowup_ceiling" | "poisson_tol" | "seed" | "init_amplitude"
        | "init_modes" | "init_seed" => "run",
        "dir" | "snapshot_every" => "output",
        _ => "physics",
    }
}

fn qualified(key: &str) -> String {
    format!("[{}].{key}", section_of(key))
}

/// Rewrites core validation errors so they name the config key.
fn name_key(e: Error) -> CliError {
    match e {
        Error::InvalidValue { key, reason } => CliError::InvalidValue {
            key: qualified(&key),
            reason,
        },
        Error::InvalidSpec(msg) => {
            let key = msg.split_whitespace().next().unwrap_or("grid").to_string();
            CliError::InvalidValue {
                key: qualified(&key),
                reason: msg,
            }
        }
        other => CliError::Core(other),
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Name of the `[section]` whose body contains `offset`.
fn enclosing_section(src: &str, offset: usize) -> Option<String> {
    src[..offset.min(src.len())]
        .lines()
        .filter_map(|l| {
            let l = l.trim();
            l.strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .map(|s| s.trim().to_string())
        })
        .next_back()
}

impl ConfigFile {
    pub fn parse_str(src: &str, path: &str) -> CliResult<Self> {
        toml::from_str(src).map_err(|e| {
            let offset = e.span().map_or(0, |s| s.start);
            let message = e.message().to_string();
            if let Some(rest) = message.strip_prefix("unknown field `") {
                let key = rest.split('`').next().unwrap_or(rest);
                let key = match enclosing_section(src, offset) {
                    Some(s) => format!("[{s}].{key}"),
                    None => key.to_string(),
                };
                return CliError::UnknownKey { key };
            }
            let (line, column) = line_col(src, offset);
            CliError::Parse {
                path: path.to_string(),
                line,
                column,
                message: message.trim().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let src = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse_str(&src, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config sections serialize")
    }

    /// Builds and validates the core run configuration.
    pub fn to_run_config(&self) -> CliResult<RunConfig64> {
        let g = &self.grid;
        let mut cfg = RunConfig::new(GridSpec::new(g.l1, g.l2, g.h, g.n1, g.n2, g.nz), self.run.seed);
        let p = &self.physics;
        cfg.params = PhysParams {
            mu_v: p.mu_v,
            nu_v: p.nu_v,
            mu_t: p.mu_t,
            nu_t: p.nu_t,
            mu_s: p.mu_s,
            nu_s: p.nu_s,
            f: p.f,
            g: p.g,
            rho0: p.rho0,
            beta_t: p.beta_t,
            beta_s: p.beta_s,
            t_r: p.t_r,
            s_r: p.s_r,
        };
        cfg.terms = DriftTerms {
            advection: p.advection,
            buoyancy: p.buoyancy,
            coriolis: p.coriolis,
            surface_pressure: p.surface_pressure,
        };
        let n = &self.noise;
        cfg.noise = NoiseSpec {
            kind: NoiseKind::parse(&n.kind).ok_or_else(|| CliError::InvalidValue {
                key: "[noise].kind".into(),
                reason: format!("expected additive, linear_multiplicative or lipschitz_functional, got {:?}", n.kind),
            })?,
            k: n.k,
            amplitude: n.amplitude,
            amplitudes: n.amplitudes.clone(),
            clamp: n.clamp,
        };
        if n.amplitudes.len() > n.k {
            return Err(CliError::InvalidValue {
                key: "[noise].amplitudes".into(),
                reason: format!("{} amplitudes for k = {}", n.amplitudes.len(), n.k),
            });
        }
        cfg.forcing = ForcingSpec {
            amplitude: self.forcing.amplitude,
        };
        if self.forcing.amplitude.iter().any(|a| !a.is_finite()) {
            return Err(CliError::InvalidValue {
                key: "[forcing].amplitude".into(),
                reason: "must be finite".into(),
            });
        }
        let r = &self.run;
        cfg.dt = r.dt;
        cfg.steps = r.steps;
        cfg.mode = Mode::parse(&r.mode).ok_or_else(|| CliError::InvalidValue {
            key: "[run].mode".into(),
            reason: format!("expected direct, split or both, got {:?}", r.mode),
        })?;
        cfg.cadence = r.cadence;
        cfg.blowup_ceiling = r.blowup_ceiling;
        cfg.poisson_tol = r.poisson_tol;
        cfg.init = InitSpec {
            amplitude: r.init_amplitude,
            modes: r.init_modes,
            seed: r.init_seed,
        };
        if !r.init_amplitude.is_finite() {
            return Err(CliError::InvalidValue {
                key: "[run].init_amplitude".into(),
                reason: "must be finite".into(),
            });
        }
        cfg.validate().map_err(name_key)?;
        Ok(cfg)
    }
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: &Path) -> CliResult<(ConfigFile, RunConfig64)> {
    let file = ConfigFile::load(path)?;
    let cfg = file.to_run_config()?;
    Ok((file, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\nn1 = 8\nn2 = 8\nnz = 4\n\n[run]\nseed = 3\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let f = ConfigFile::parse_str(MINIMAL, "c.toml").unwrap();
        let cfg = f.to_run_config().unwrap();
        let want = RunConfig::new(GridSpec::new(1.0, 1.0, 1.0, 8, 8, 4), 3);
        assert_eq!(cfg, want);
    }

    #[test]
    fn echo_round_trips() {
        let f = ConfigFile::parse_str(MINIMAL, "c.toml").unwrap();
        assert_eq!(ConfigFile::parse_str(&f.to_toml(), "echo").unwrap(), f);
    }

    #[test]
    fn misspelled_key_is_named() {
        let src = format!("{MINIMAL}\n[physics]\nmu_vv = 0.1\n");
        match ConfigFile::parse_str(&src, "c.toml") {
            Err(CliError::UnknownKey { key }) => assert_eq!(key, "[physics].mu_vv"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_dt_is_invalid() {
        let src = MINIMAL.replace("seed = 3", "seed = 3\ndt = -1.0");
        let f = ConfigFile::parse_str(&src, "c.toml").unwrap();
        match f.to_run_config() {
            Err(CliError::InvalidValue { key, .. }) => assert_eq!(key, "[run].dt"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        match ConfigFile::parse_str("[grid]\nn1 = = 3\n", "c.toml") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_seed_is_a_parse_error() {
        let src = "[grid]\nn1 = 8\nn2 = 8\nnz = 4\n[run]\ndt = 0.1\n";
        let e = ConfigFile::parse_str(src, "c.toml").unwrap_err();
        assert!(e.to_string().contains("seed"), "{e}");
    }

    #[test]
    fn small_grid_names_the_key() {
        let src = MINIMAL.replace("nz = 4", "nz = 2");
        match ConfigFile::parse_str(&src, "c.toml").unwrap().to_run_config() {
            Err(CliError::InvalidValue { key, .. }) => assert_eq!(key, "[grid].nz"),
            other => panic!("{other:?}"),
        }
    }
}
