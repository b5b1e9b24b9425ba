//! Norm records along trajectories, stopping-time scans, and ensemble moments.

use crate::error::{Error, Result};
use crate::grid::{dirichlet_form, l2_inner_field, Component, Fields, Grid, NormKind, ScalarField};
use crate::noise::mean_se;
use crate::operators::{apply_a, dz_faces, PhysParams};
use crate::real::Real;

/// Instantaneous norms of a state (all as `f64`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Norms {
    pub l2_u: f64,
    pub v_v: f64,
    pub l4_v: f64,
    pub l4_t: f64,
    pub l4_s: f64,
    pub l2_dzu: f64,
    pub v_dzu: f64,
    pub l2_au: f64,
    pub l2_dzv: f64,
    pub v_dzv: f64,
}

impl Norms {
    fn named(&self) -> [(&'static str, f64); 10] {
        [
            ("l2_U", self.l2_u),
            ("v_V", self.v_v),
            ("l4_v", self.l4_v),
            ("l4_T", self.l4_t),
            ("l4_S", self.l4_s),
            ("l2_dzU", self.l2_dzu),
            ("v_dzU", self.v_dzu),
            ("l2_AU", self.l2_au),
            ("l2_dzv", self.l2_dzv),
            ("v_dzv", self.v_dzv),
        ]
    }
}

fn l4<R: Real>(grid: &Grid<R>, fields: &[&ScalarField<R>]) -> f64 {
    crate::grid::norm_fields(grid, fields, NormKind::Lp(R::c(4.0)), &[])
        .map(|x| x.to_f64_lossy())
        .unwrap_or(f64::NAN)
}

/// Every norm tracked by the stopping times, computed from one state.
pub fn instant_norms<R: Real>(grid: &Grid<R>, u: &Fields<R>, params: &PhysParams<R>) -> Norms {
    let mut n = Norms::default();
    let au = apply_a(grid, u, params);
    let mut l2 = 0.0;
    let mut vv = 0.0;
    let mut l2dz = 0.0;
    let mut vdz = 0.0;
    let mut l2au = 0.0;
    let mut l2dzv = 0.0;
    let mut vdzv = 0.0;
    for c in Component::ALL {
        let f = &u[c];
        let d = params.diffusivity(c);
        l2 += l2_inner_field(grid, f, f).to_f64_lossy();
        vv += dirichlet_form(grid, f, f, d).to_f64_lossy();
        let dz = dz_faces(grid, f);
        let a = l2_inner_field(grid, &dz, &dz).to_f64_lossy();
        let b = dirichlet_form(grid, &dz, &dz, d).to_f64_lossy();
        l2dz += a;
        vdz += b;
        if c.is_velocity() {
            l2dzv += a;
            vdzv += b;
        }
        l2au += l2_inner_field(grid, &au[c], &au[c]).to_f64_lossy();
    }
    n.l2_u = l2.sqrt();
    n.v_v = vv.sqrt();
    n.l2_dzu = l2dz.sqrt();
    n.v_dzu = vdz.sqrt();
    n.l2_au = l2au.sqrt();
    n.l2_dzv = l2dzv.sqrt();
    n.v_dzv = vdzv.sqrt();
    n.l4_v = l4(grid, &[u.u(), u.v()]);
    n.l4_t = l4(grid, &[u.temp()]);
    n.l4_s = l4(grid, &[u.salt()]);
    n
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub norms: Norms,
    /// Running integral of `||U||^2`.
    pub int_v2: f64,
    /// Running integral of `||dz U||^2`.
    pub int_dzv2: f64,
    pub int_au2: f64,
    /// Running integral of `||dz v||^2` (momentum only).
    pub int_dzv_only: f64,
    /// Running integral of `|F|^2_{L4}`.
    pub int_f4: f64,
    pub split_gap: Option<f64>,
    pub blowup: bool,
    pub blowup_reason: Option<String>,
}

pub const CSV_HEADER: &str =
    "t,l2_U,v_V,l4_v,l4_T,l4_S,l2_dzU,v_dzU,l2_AU,int_V2,int_dzV2,int_AU2,split_gap,blowup_flag";

impl DiagnosticsRecord {
    pub fn csv_line(&self) -> String {
        let n = &self.norms;
        let gap = self.split_gap.map(|g| g.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            n.l2_u,
            n.v_v,
            n.l4_v,
            n.l4_t,
            n.l4_s,
            n.l2_dzu,
            n.v_dzu,
            n.l2_au,
            self.int_v2,
            self.int_dzv2,
            self.int_au2,
            gap,
            u8::from(self.blowup)
        )
    }

    /// Name of the first non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        let extra = [
            ("int_V2", self.int_v2),
            ("int_dzV2", self.int_dzv2),
            ("int_AU2", self.int_au2),
        ];
        self.norms
            .named()
            .into_iter()
            .chain(extra)
            .chain(self.split_gap.map(|g| ("split_gap", g)))
            .find(|(_, v)| !v.is_finite())
            .map(|(n, _)| n)
    }
}

pub fn write_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// Default ceiling of the blow-up criterion, relative to the initial value.
pub const DEFAULT_CEILING: f64 = 1e12;

/// Builds records along a trajectory, integrating the running integrals by
/// the trapezoid rule over every observed step.
#[derive(Clone, Debug)]
pub struct Recorder {
    f_l4_sq: f64,
    ceiling: f64,
    scale: Option<f64>,
    prev: Option<(f64, Norms)>,
    int_v2: f64,
    int_dzv2: f64,
    int_au2: f64,
    int_dzv_only: f64,
    int_f4: f64,
    sup_v2: f64,
}

impl Recorder {
    /// `f_l4` is `|F|_{L4}` of the (time-independent) forcing; `ceiling` is
    /// relative to the initial value of `sup ||U||^2 + int |AU|^2` (at least 1).
    pub fn new(f_l4: f64, ceiling: f64) -> Self {
        Self {
            f_l4_sq: f_l4 * f_l4,
            ceiling,
            scale: None,
            prev: None,
            int_v2: 0.0,
            int_dzv2: 0.0,
            int_au2: 0.0,
            int_dzv_only: 0.0,
            int_f4: 0.0,
            sup_v2: 0.0,
        }
    }

    /// Absolute threshold of the blow-up criterion.
    pub fn threshold(&self) -> Option<f64> {
        self.scale.map(|s| s * self.ceiling)
    }

    pub fn observe<R: Real>(
        &mut self,
        grid: &Grid<R>,
        u: &Fields<R>,
        params: &PhysParams<R>,
        t: f64,
        split_gap: Option<f64>,
    ) -> DiagnosticsRecord {
        let non_finite = Component::ALL.into_iter().find(|&c| !u[c].is_finite());
        let norms = instant_norms(grid, u, params);
        self.observe_norms(t, norms, split_gap, non_finite.map(|c| c.name()))
    }

    pub fn observe_norms(
        &mut self,
        t: f64,
        norms: Norms,
        split_gap: Option<f64>,
        bad_field: Option<&str>,
    ) -> DiagnosticsRecord {
        if let Some((t0, p)) = self.prev {
            let h = 0.5 * (t - t0);
            self.int_v2 += h * (p.v_v.powi(2) + norms.v_v.powi(2));
            self.int_dzv2 += h * (p.v_dzu.powi(2) + norms.v_dzu.powi(2));
            self.int_au2 += h * (p.l2_au.powi(2) + norms.l2_au.powi(2));
            self.int_dzv_only += h * (p.v_dzv.powi(2) + norms.v_dzv.powi(2));
            self.int_f4 += 2.0 * h * self.f_l4_sq;
        }
        self.prev = Some((t, norms));
        self.sup_v2 = self.sup_v2.max(norms.v_v.powi(2));
        let crit = self.sup_v2 + self.int_au2;
        let scale = *self.scale.get_or_insert(crit.max(1.0));
        let mut rec = DiagnosticsRecord {
            t,
            norms,
            int_v2: self.int_v2,
            int_dzv2: self.int_dzv2,
            int_au2: self.int_au2,
            int_dzv_only: self.int_dzv_only,
            int_f4: self.int_f4,
            split_gap,
            blowup: false,
            blowup_reason: None,
        };
        if let Some(f) = bad_field {
            rec.blowup = true;
            rec.blowup_reason = Some(format!("non-finite value in field {f}"));
        } else if let Some(name) = rec.first_non_finite() {
            rec.blowup = true;
            rec.blowup_reason = Some(format!("non-finite {name}"));
        } else if crit.is_nan() || crit > scale * self.ceiling {
            rec.blowup = true;
            rec.blowup_reason = Some(format!(
                "sup ||U||^2 + int |AU|^2 = {crit} exceeds ceiling {}",
                scale * self.ceiling
            ));
        }
        rec
    }
}

/// First hit times of each stopping time, per threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppingReport {
    pub thresholds: Vec<f64>,
    /// `sup |U|^2 + int (||U||^2 + |F|^2_{L4})`.
    pub tau_w: Vec<Option<f64>>,
    /// `sup |v|^4_{L4}`.
    pub tau_1: Vec<Option<f64>>,
    /// `sup |dz U|^2 + int ||dz U||^2`.
    pub tau_2: Vec<Option<f64>>,
    /// `sup |dz v|^2 + int ||dz v||^2`.
    pub tau_z: Vec<Option<f64>>,
    /// `sup (|T|^4_{L4} + |S|^4_{L4})`.
    pub tau_t: Vec<Option<f64>>,
}

impl StoppingReport {
    /// `tau_K = tau^(1) ^ tau^(2)`.
    pub fn tau(&self, i: usize) -> Option<f64> {
        min_opt(self.tau_1[i], self.tau_2[i])
    }

    /// `tau^M = tau^z ^ tau^T ^ tau^(1)`.
    pub fn tau_m(&self, i: usize) -> Option<f64> {
        min_opt(min_opt(self.tau_z[i], self.tau_t[i]), self.tau_1[i])
    }
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Running values of the five stopping-time functionals at each record.
pub fn stopping_functionals(series: &[DiagnosticsRecord]) -> Vec<[f64; 5]> {
    let mut sup = [0.0f64; 5];
    series
        .iter()
        .map(|r| {
            let n = &r.norms;
            sup[0] = sup[0].max(n.l2_u.powi(2));
            sup[1] = sup[1].max(n.l4_v.powi(4));
            sup[2] = sup[2].max(n.l2_dzu.powi(2));
            sup[3] = sup[3].max(n.l2_dzv.powi(2));
            sup[4] = sup[4].max(n.l4_t.powi(4) + n.l4_s.powi(4));
            [
                sup[0] + r.int_v2 + r.int_f4,
                sup[1],
                sup[2] + r.int_dzv2,
                sup[3] + r.int_dzv_only,
                sup[4],
            ]
        })
        .collect()
}

/// Exit times: the first record time at which each functional reaches `K`.
pub fn stopping_times(series: &[DiagnosticsRecord], k_list: &[f64]) -> Result<StoppingReport> {
    if let Some(i) = series.windows(2).position(|w| w[1].t < w[0].t) {
        return Err(Error::UnsortedSeries(i + 1));
    }
    let vals = stopping_functionals(series);
    let hit = |which: usize, k: f64| {
        vals.iter()
            .zip(series)
            .find(|(v, _)| v[which] >= k)
            .map(|(_, r)| r.t)
    };
    let col = |which: usize| k_list.iter().map(|&k| hit(which, k)).collect::<Vec<_>>();
    Ok(StoppingReport {
        thresholds: k_list.to_vec(),
        tau_w: col(0),
        tau_1: col(1),
        tau_2: col(2),
        tau_z: col(3),
        tau_t: col(4),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub p: f64,
    pub runs: usize,
    /// `E (sup |U|^p + int ||U||^2 |U|^(p-2))`.
    pub a_mean: f64,
    pub a_se: f64,
    /// `E (int ||U||^2)^(p/2)`.
    pub b_mean: f64,
    pub b_se: f64,
    /// `E sup |U|^p` alone.
    pub sup_mean: f64,
    pub sup_se: f64,
}

/// Monte-Carlo moments of a set of runs sharing a configuration.
pub fn ensemble_stats(runs: &[Vec<DiagnosticsRecord>], p: f64) -> Result<MomentReport> {
    if runs.is_empty() || runs.iter().any(|r| r.is_empty()) {
        return Err(Error::EmptySet);
    }
    let mut a = Vec::with_capacity(runs.len());
    let mut b = Vec::with_capacity(runs.len());
    let mut sups = Vec::with_capacity(runs.len());
    for run in runs {
        let sup = run.iter().map(|r| r.norms.l2_u.powf(p)).fold(0.0, f64::max);
        let g = |r: &DiagnosticsRecord| {
            let l2 = r.norms.l2_u;
            let w = if p == 2.0 { 1.0 } else { l2.powf(p - 2.0) };
            r.norms.v_v.powi(2) * w
        };
        let integral: f64 = run
            .windows(2)
            .map(|w| 0.5 * (w[1].t - w[0].t) * (g(&w[0]) + g(&w[1])))
            .sum();
        a.push(sup + integral);
        b.push(run.last().unwrap().int_v2.powf(p / 2.0));
        sups.push(sup);
    }
    let (a_mean, a_se) = mean_se(&a);
    let (b_mean, b_se) = mean_se(&b);
    let (sup_mean, sup_se) = mean_se(&sups);
    Ok(MomentReport {
        p,
        runs: runs.len(),
        a_mean,
        a_se,
        b_mean,
        b_se,
        sup_mean,
        sup_se,
    })
}
