//! Ratio studies for the anisotropic embedding, the trilinear bound on
//! `B`, and the pointwise dissipation bound.

use rand::Rng;

use crate::error::Result;
use crate::grid::{
    dirichlet_form, l2_inner_field, norm_fields, Component, Diffusivity, Fields, Grid, NormKind,
    ScalarField, State,
};
use crate::modes::{random_smooth_field, random_state};
use crate::operators::{apply_a_field, apply_b, centered_diff, dz_faces, Axis, PhysParams};
use crate::real::Real;

/// Ratios `lhs / rhs` over a sample set. Samples where both sides vanish
/// are skipped and counted; a vanishing left side alone gives ratio 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RatioReport {
    pub ratios: Vec<f64>,
    pub skipped: usize,
}

pub const RATIO_CSV_HEADER: &str = "sample,ratio";

impl RatioReport {
    pub fn push(&mut self, lhs: f64, rhs: f64) {
        if lhs == 0.0 {
            if rhs == 0.0 {
                self.skipped += 1;
            } else {
                self.ratios.push(0.0);
            }
        } else if rhs == 0.0 {
            self.skipped += 1;
        } else {
            self.ratios.push(lhs / rhs);
        }
    }

    pub fn max(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }

    /// Empirical quantile by nearest rank, `q` in `[0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        if self.ratios.is_empty() {
            return f64::NAN;
        }
        let mut s = self.ratios.clone();
        s.sort_by(f64::total_cmp);
        let i = ((q.clamp(0.0, 1.0) * (s.len() - 1) as f64).round()) as usize;
        s[i]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(RATIO_CSV_HEADER);
        out.push('\n');
        for (i, r) in self.ratios.iter().enumerate() {
            out.push_str(&format!("{i},{r:.12e}\n"));
        }
        out
    }
}

fn l2<R: Real>(grid: &Grid<R>, fs: &[&ScalarField<R>]) -> f64 {
    fs.iter()
        .map(|f| l2_inner_field(grid, f, f).to_f64_lossy())
        .sum::<f64>()
        .sqrt()
}

/// Unit-coefficient `V` norm (square root of the Dirichlet form).
fn vnorm<R: Real>(grid: &Grid<R>, fs: &[&ScalarField<R>]) -> f64 {
    fs.iter()
        .map(|f| dirichlet_form(grid, f, f, Diffusivity::unit()).to_f64_lossy())
        .sum::<f64>()
        .sqrt()
}

fn a_unit<R: Real>(grid: &Grid<R>, f: &ScalarField<R>) -> ScalarField<R> {
    apply_a_field(grid, f, Diffusivity::unit())
}

/// `|v|_{L^q_x L^2_z}` against `|v|^{1-s} |v|_V^s` with `s = 1 - 2/q`.
pub fn embedding_sides<R: Real>(grid: &Grid<R>, v: &[&ScalarField<R>], q: f64) -> Result<(f64, f64)> {
    let lhs = norm_fields(grid, v, NormKind::Aniso { q: R::c(q), pz: R::c(2.0) }, &[])?.to_f64_lossy();
    let s = 1.0 - 2.0 / q;
    let rhs = l2(grid, v).powf(1.0 - s) * vnorm(grid, v).powf(s);
    Ok((lhs, rhs))
}

/// Ratio report of the anisotropic embedding over a set of velocity fields.
pub fn verify_aniso_embedding<R: Real>(
    grid: &Grid<R>,
    set: &[[ScalarField<R>; 2]],
    q: f64,
) -> Result<RatioReport> {
    let mut rep = RatioReport::default();
    for [u, v] in set {
        let (l, r) = embedding_sides(grid, &[u, v], q)?;
        rep.push(l, r);
    }
    Ok(rep)
}

/// Random smooth horizontal velocity pairs; the draws do not depend on the grid.
pub fn random_velocity_set<R: Real>(grid: &Grid<R>, count: usize, modes: usize, rng: &mut impl Rng) -> Vec<[ScalarField<R>; 2]> {
    (0..count)
        .map(|_| {
            [
                random_smooth_field(grid, Component::U, modes, rng),
                random_smooth_field(grid, Component::V, modes, rng),
            ]
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Triple<R> {
    pub u: State<R>,
    pub sharp: State<R>,
    pub flat: Fields<R>,
}

pub fn random_triples<R: Real>(grid: &Grid<R>, count: usize, modes: usize, rng: &mut impl Rng) -> Vec<Triple<R>> {
    (0..count)
        .map(|_| Triple {
            u: random_state(grid, R::one(), modes, rng),
            sharp: random_state(grid, R::one(), modes, rng),
            flat: random_state(grid, R::one(), modes, rng).fields,
        })
        .collect()
}

/// `|<B(U,U#), U_flat>|` and the right side
/// `|v|_L4 |U#|^{1/4} |AU#|^{3/4} |U_flat| + |v|^{1/2} |v|_(2)^{1/2} |dz U#|^{1/2} |dz U#|_V^{1/2} |U_flat|`,
/// with unit coefficients and `|v|_(2)^2 = |v|^2 + |A v|^2`.
pub fn b_bound_sides<R: Real>(grid: &Grid<R>, t: &Triple<R>) -> (f64, f64) {
    let b = apply_b(grid, &t.u.fields, &t.sharp.fields);
    let lhs: f64 = Component::ALL
        .iter()
        .map(|&c| l2_inner_field(grid, &b[c], &t.flat[c]).to_f64_lossy())
        .sum::<f64>()
        .abs();

    let vel = [t.u.u(), t.u.v()];
    let l4v = norm_fields(grid, &vel, NormKind::Lp(R::c(4.0)), &[])
        .map(|x| x.to_f64_lossy())
        .unwrap_or(f64::NAN);
    let sharp: Vec<&ScalarField<R>> = t.sharp.fields.comps.iter().collect();
    let a_sharp: Vec<ScalarField<R>> = sharp.iter().map(|f| a_unit(grid, f)).collect();
    let a_sharp: Vec<&ScalarField<R>> = a_sharp.iter().collect();
    let dz_sharp: Vec<ScalarField<R>> = sharp.iter().map(|f| dz_faces(grid, f)).collect();
    let dz_sharp: Vec<&ScalarField<R>> = dz_sharp.iter().collect();
    let av: Vec<ScalarField<R>> = vel.iter().map(|f| a_unit(grid, f)).collect();
    let av: Vec<&ScalarField<R>> = av.iter().collect();
    let flat: Vec<&ScalarField<R>> = t.flat.comps.iter().collect();

    let h2v = (l2(grid, &vel).powi(2) + l2(grid, &av).powi(2)).sqrt();
    let flat_l2 = l2(grid, &flat);
    let first = l4v * vnorm(grid, &sharp).powf(0.25) * l2(grid, &a_sharp).powf(0.75);
    let second = vnorm(grid, &vel).sqrt() * h2v.sqrt() * l2(grid, &dz_sharp).sqrt() * vnorm(grid, &dz_sharp).sqrt();
    (lhs, (first + second) * flat_l2)
}

pub fn verify_b_bound<R: Real>(grid: &Grid<R>, triples: &[Triple<R>]) -> RatioReport {
    let mut rep = RatioReport::default();
    for t in triples {
        let (l, r) = b_bound_sides(grid, t);
        rep.push(l, r);
    }
    rep
}

/// Both sides of `kappa |grad_3 (v^2)|^2 <= (mu/2) sum (d_j v_k)^2 v_k^2 + (nu/2) sum (dz v_k)^2 v_k^2`
/// with `kappa = min(mu, nu) / 8`, summed over the two velocity components.
/// The left side uses the chain rule `grad (v^2) = 2 v grad v` on centered differences.
pub fn verify_dissipation<R: Real>(
    grid: &Grid<R>,
    u: &ScalarField<R>,
    v: &ScalarField<R>,
    params: &PhysParams<R>,
) -> (f64, f64) {
    let mu = params.mu_v.to_f64_lossy();
    let nu = params.nu_v.to_f64_lossy();
    let kappa = mu.min(nu) / 8.0;
    let w = grid.cell_volume().to_f64_lossy();
    let mut sh = 0.0;
    let mut sz = 0.0;
    for f in [u, v] {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let d = centered_diff(grid, f, axis);
            let mut acc = 0.0;
            f.for_each_interior(|i, j, k, x| {
                let p = (x * d.get(i, j, k)).to_f64_lossy();
                acc += p * p * w;
            });
            if axis == Axis::Z {
                sz += acc;
            } else {
                sh += acc;
            }
        }
    }
    // Each coefficient on the left is at most its counterpart on the right,
    // so the comparison survives rounding.
    let lhs = 4.0 * kappa * sh + 4.0 * kappa * sz;
    let rhs = 0.5 * mu * sh + 0.5 * nu * sz;
    (lhs, rhs)
}
