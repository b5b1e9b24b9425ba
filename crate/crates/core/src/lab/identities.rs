//! Discrete energy balances along trajectories: the `L4` evolution of the
//! split velocity `v_hat`, and the `|dz v|^2`, `|dz T|^2` balances of the
//! direct scheme with their Itô corrections.
//!
//! Each probe records the terms of one step; the residual functions turn a
//! probe series into the balance defect.

use crate::error::{Error, Result};
use crate::grid::{dirichlet_form, l2_inner_field, Component, Fields, Grid, ScalarField, State};
use crate::noise::NoiseIncrement;
use crate::operators::{
    advect, apply_a, apply_ap, apply_e, diagnostic_w, dz_faces, explicit_drift, surface_pressure_gradient,
};
use crate::real::Real;
use crate::stepping::{SplitState, Stepper};

/// Names of the recorded right-hand terms of the `L4` balance. `J0` is the
/// self-advection term that vanishes in the continuum and is kept as a
/// measured discretization defect.
pub const L4_TERMS: [&str; 7] = ["J0", "J1", "J2", "J3", "J4", "J5", "J6"];

/// One split step of the `L4` balance
/// `1/4 d|v_hat|^4 / dt + dissipation = J0 + ... + J6`.
#[derive(Clone, Debug, PartialEq)]
pub struct L4Probe {
    pub t: f64,
    pub dt: f64,
    /// `sum_k int v_hat_k^4` before and after the step.
    pub x_before: f64,
    pub x_after: f64,
    /// `<A v_hat, v_hat^3>`, the discrete form of `3 mu sum (d_j v_k)^2 v_k^2 + 3 nu sum (dz v_k)^2 v_k^2`.
    pub dissipation: f64,
    pub j: [Option<f64>; 7],
}

fn cube<R: Real>(f: &ScalarField<R>) -> ScalarField<R> {
    let mut out = f.clone();
    out.update_interior(|_, _, _, x| x * x * x);
    out.fill_ghosts();
    out
}

fn fourth<R: Real>(grid: &Grid<R>, s: &State<R>) -> f64 {
    let w = grid.cell_volume().to_f64_lossy();
    let mut acc = 0.0;
    for f in [s.u(), s.v()] {
        f.for_each_interior(|_, _, _, x| {
            let x = x.to_f64_lossy();
            acc += x * x * x * x * w;
        });
    }
    acc
}

/// `<t, v_hat^3>` summed over the two momentum components.
fn against_cubes<R: Real>(grid: &Grid<R>, t: &Fields<R>, cubes: &[ScalarField<R>; 2]) -> f64 {
    l2_inner_field(grid, t.u(), &cubes[0]).to_f64_lossy() + l2_inner_field(grid, t.v(), &cubes[1]).to_f64_lossy()
}

/// Advances `s` by one split step and records every term of the `L4` balance
/// at the left endpoint `v_hat^n`, with the nonlinear terms evaluated at
/// `U_hat^n + U_check^{n+1}` as the scheme does.
pub fn l4_split_step<R: Real>(
    stepper: &mut Stepper<R>,
    s: &SplitState<R>,
    inc: &NoiseIncrement<R>,
    sigma_eval: &State<R>,
) -> Result<(SplitState<R>, L4Probe)> {
    let grid = stepper.grid.clone();
    let dt = stepper.dt;
    let u_check = stepper.step_ou(&s.u_check, inc, sigma_eval)?;
    let hat = &s.u_hat;
    let total = hat.fields.add(&u_check.fields);

    let y = {
        let mut y = hat.fields.clone();
        let drift = explicit_drift(&grid, &total, &stepper.forcing, &stepper.params, stepper.terms);
        y.axpy(dt, &drift);
        y
    };
    let x = stepper.implicit_solve(&y);
    let u_hat = stepper.constrain(x, hat.time + dt)?;

    let cubes = [cube(hat.u()), cube(hat.v())];
    let terms = stepper.terms;

    let (j0, j1, j2) = if terms.advection {
        let w = diagnostic_w(&grid, total.u(), total.v());
        let zero_w = grid.zeros(w.bc());
        let mut j = [0.0; 3];
        for (n, c) in [Component::U, Component::V].into_iter().enumerate() {
            let own = advect(&grid, total.u(), total.v(), &w, &hat[c]);
            let horiz = advect(&grid, total.u(), total.v(), &zero_w, &u_check[c]);
            let zu = grid.zeros(total.u().bc());
            let vert = advect(&grid, &zu, &zu, &w, &u_check[c]);
            j[0] -= l2_inner_field(&grid, &own, &cubes[n]).to_f64_lossy();
            j[1] -= l2_inner_field(&grid, &horiz, &cubes[n]).to_f64_lossy();
            j[2] -= l2_inner_field(&grid, &vert, &cubes[n]).to_f64_lossy();
        }
        (j[0], j[1], j[2])
    } else {
        (0.0, 0.0, 0.0)
    };
    // The projection always runs, so its gradient enters whether or not the
    // pressure term is listed among the explicit drift terms.
    let ps = stepper.last_surface_pressure().expect("constrain stores the potential");
    let j3 = -against_cubes(&grid, &surface_pressure_gradient(&grid, &ps, &stepper.params), &cubes);
    let j4 = if terms.buoyancy {
        -against_cubes(&grid, &apply_ap(&grid, &total, &stepper.params), &cubes)
    } else {
        0.0
    };
    let j5 = if terms.coriolis {
        -against_cubes(&grid, &apply_e(&grid, &total, &stepper.params), &cubes)
    } else {
        0.0
    };
    let j6 = against_cubes(&grid, &stepper.forcing, &cubes);
    let dissipation = against_cubes(&grid, &apply_a(&grid, &hat.fields, &stepper.params), &cubes);

    let probe = L4Probe {
        t: s.time.to_f64_lossy(),
        dt: dt.to_f64_lossy(),
        x_before: fourth(&grid, hat),
        x_after: fourth(&grid, &u_hat),
        dissipation,
        j: [Some(j0), Some(j1), Some(j2), Some(j3), Some(j4), Some(j5), Some(j6)],
    };
    let next = SplitState {
        time: s.time + dt,
        u_check,
        u_hat,
    };
    Ok((next, probe))
}

/// Per-step defect `(x_after - x_before) / (4 dt) + dissipation - sum J`.
pub fn l4_identity_residual(probes: &[L4Probe]) -> Result<Vec<f64>> {
    probes
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let mut rhs = 0.0;
            for (name, j) in L4_TERMS.iter().zip(&p.j) {
                rhs += j.ok_or_else(|| Error::MissingTerms(format!("{name} at step {n}")))?;
            }
            Ok((p.x_after - p.x_before) / (4.0 * p.dt) + p.dissipation - rhs)
        })
        .collect()
}

/// Group 0 is `dz v` (both momentum components), group 1 is `dz T`.
pub const DZ_GROUPS: [&[Component]; 2] = [&[Component::U, Component::V], &[Component::Temp]];

/// One direct step of the balance
/// `|Z^{n+1}|^2 - |Z^n|^2 + 2 dt |Z^{n+1}|_V^2 = 2 dt (dz N, Z^n) + dt sum |dz sigma_k|^2 + 2 sum (dz sigma_k dW_k, Z^n)`
/// with `Z = dz v` or `dz T`.
#[derive(Clone, Debug, PartialEq)]
pub struct DzProbe {
    pub t: f64,
    pub x_before: [f64; 2],
    pub x_after: [f64; 2],
    pub dissipation: [f64; 2],
    pub drift: Option<[f64; 2]>,
    pub ito: Option<[f64; 2]>,
    pub martingale: Option<[f64; 2]>,
}

fn dz_sq<R: Real>(grid: &Grid<R>, f: &Fields<R>, g: usize) -> f64 {
    DZ_GROUPS[g]
        .iter()
        .map(|&c| {
            let z = dz_faces(grid, &f[c]);
            l2_inner_field(grid, &z, &z).to_f64_lossy()
        })
        .sum()
}

/// Advances `u` by one direct step and records the `dz` balance terms.
pub fn dz_direct_step<R: Real>(
    stepper: &mut Stepper<R>,
    u: &State<R>,
    inc: &NoiseIncrement<R>,
) -> Result<(State<R>, DzProbe)> {
    let grid = stepper.grid.clone();
    let dt = stepper.dt.to_f64_lossy();
    let next = stepper.step_direct(u, inc)?;
    let drift = explicit_drift(&grid, &u.fields, &stepper.forcing, &stepper.params, stepper.terms);
    let sigmas: Vec<(Component, ScalarField<R>)> = (0..stepper.noise.len())
        .map(|k| {
            let c = stepper.noise.modes[k].component;
            (c, dz_faces(&grid, &stepper.noise.sigma_k(&grid, k, &u.fields)))
        })
        .collect();

    let mut probe = DzProbe {
        t: u.time.to_f64_lossy(),
        x_before: [0.0; 2],
        x_after: [0.0; 2],
        dissipation: [0.0; 2],
        drift: Some([0.0; 2]),
        ito: Some([0.0; 2]),
        martingale: Some([0.0; 2]),
    };
    let (d, i, m) = (
        probe.drift.as_mut().unwrap(),
        probe.ito.as_mut().unwrap(),
        probe.martingale.as_mut().unwrap(),
    );
    for (g, comps) in DZ_GROUPS.iter().enumerate() {
        probe.x_before[g] = dz_sq(&grid, &u.fields, g);
        probe.x_after[g] = dz_sq(&grid, &next.fields, g);
        for &c in comps.iter() {
            let z0 = dz_faces(&grid, &u[c]);
            let z1 = dz_faces(&grid, &next[c]);
            probe.dissipation[g] +=
                2.0 * dt * dirichlet_form(&grid, &z1, &z1, stepper.params.diffusivity(c)).to_f64_lossy();
            let dn = dz_faces(&grid, &drift[c]);
            d[g] += 2.0 * dt * l2_inner_field(&grid, &dn, &z0).to_f64_lossy();
            for (k, (sc, zs)) in sigmas.iter().enumerate() {
                if *sc != c {
                    continue;
                }
                i[g] += dt * l2_inner_field(&grid, zs, zs).to_f64_lossy();
                m[g] += 2.0 * inc.dw[k].to_f64_lossy() * l2_inner_field(&grid, zs, &z0).to_f64_lossy();
            }
        }
    }
    Ok((next, probe))
}

/// Cumulative defect of each group,
/// `sum_n (x_after - x_before + dissipation - drift - ito - martingale)`.
pub fn dz_identity_residual(probes: &[DzProbe]) -> Result<[Vec<f64>; 2]> {
    let mut out = [Vec::with_capacity(probes.len()), Vec::with_capacity(probes.len())];
    let mut acc = [0.0; 2];
    for (n, p) in probes.iter().enumerate() {
        let missing = |what: &str| Error::MissingTerms(format!("{what} at step {n}"));
        let d = p.drift.ok_or_else(|| missing("drift"))?;
        let i = p.ito.ok_or_else(|| missing("ito"))?;
        let m = p.martingale.ok_or_else(|| missing("martingale"))?;
        for g in 0..2 {
            acc[g] += p.x_after[g] - p.x_before[g] + p.dissipation[g] - d[g] - i[g] - m[g];
            out[g].push(acc[g]);
        }
    }
    Ok(out)
}
