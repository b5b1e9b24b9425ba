//! Surface pressure and the barotropic projection.
//!
//! The discrete gradient `G` (centered, mirrored ghosts) and divergence `D`
//! (centered, odd ghosts on the velocity) satisfy `D = -G^T`, so
//! `L = -D G` is symmetric positive semi-definite on surface fields with the
//! constants as its only null space. Projection solves `L phi = -D vbar`
//! and subtracts `G phi` from every level.

use crate::error::{Error, Result};
use crate::grid::{BcKind, Component, Fields, Grid, ScalarField};
use crate::operators::{
    apply_a, centered_diff, explicit_drift, horizontal_divergence,
    integrate_from_surface, vertical_average, Axis, DriftTerms, PhysParams, Tendency,
};
use crate::real::Real;
use crate::spectral::SeparableSolver;

/// Default relative residual tolerance of the Poisson solver.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Centered gradient of a surface scalar, as two Dirichlet-kind surface fields.
pub fn surface_gradient<R: Real>(grid: &Grid<R>, p: &ScalarField<R>) -> (ScalarField<R>, ScalarField<R>) {
    let gx = centered_diff(grid, p, Axis::X).with_bc(BcKind::SurfaceVelocity);
    let gy = centered_diff(grid, p, Axis::Y).with_bc(BcKind::SurfaceVelocity);
    (gx, gy)
}

/// `L p = -D G p`.
pub fn neg_laplacian<R: Real>(grid: &Grid<R>, p: &ScalarField<R>) -> ScalarField<R> {
    let (gx, gy) = surface_gradient(grid, p);
    let mut d = horizontal_divergence(grid, &gx, &gy);
    d.scale(-R::one());
    d
}

fn subtract_mean<R: Real>(f: &mut ScalarField<R>) {
    let m = f.mean();
    f.update_interior(|_, _, _, v| v - m);
    f.fill_ghosts();
}

#[derive(Clone, Debug)]
pub struct CgReport<R> {
    pub iterations: usize,
    /// Residual 2-norm after each iteration, starting with the initial residual.
    pub residuals: Vec<R>,
}

/// Unpreconditioned conjugate gradients for `L x = b` with zero-mean
/// deflation. Stops when `|r| <= tol |b|`; `on_iter` sees every iterate.
pub fn cg_solve_with<R: Real>(
    grid: &Grid<R>,
    b: &ScalarField<R>,
    x0: Option<&ScalarField<R>>,
    tol: R,
    mut on_iter: impl FnMut(&ScalarField<R>),
) -> Result<(ScalarField<R>, CgReport<R>)> {
    let mut b = b.clone();
    subtract_mean(&mut b);
    let bnorm = b.dot(&b).sqrt();
    let mut x = match x0 {
        Some(x0) => {
            let mut x = x0.clone();
            subtract_mean(&mut x);
            x
        }
        None => b.zeros_like(),
    };
    if bnorm == R::zero() {
        return Ok((
            b.zeros_like(),
            CgReport {
                iterations: 0,
                residuals: vec![R::zero()],
            },
        ));
    }
    let mut r = b.sub(&neg_laplacian(grid, &x));
    subtract_mean(&mut r);
    let mut p = r.clone();
    let mut rs = r.dot(&r);
    let mut residuals = vec![rs.sqrt()];
    let cap = 10 * grid.n1() * grid.n2();
    let target = tol * bnorm;
    let mut it = 0;
    while rs.sqrt() > target {
        if it >= cap {
            return Err(Error::SolverDivergence {
                iterations: it,
                residual: (rs.sqrt() / bnorm).to_f64_lossy(),
                tol: tol.to_f64_lossy(),
            });
        }
        let ap = neg_laplacian(grid, &p);
        let pap = p.dot(&ap);
        let alpha = rs / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        subtract_mean(&mut r);
        let rs_new = r.dot(&r);
        let beta = rs_new / rs;
        rs = rs_new;
        p.scale(beta);
        p.axpy(R::one(), &r);
        it += 1;
        residuals.push(rs.sqrt());
        on_iter(&x);
    }
    subtract_mean(&mut x);
    Ok((
        x,
        CgReport {
            iterations: it,
            residuals,
        },
    ))
}

pub fn cg_solve<R: Real>(
    grid: &Grid<R>,
    b: &ScalarField<R>,
    x0: Option<&ScalarField<R>>,
    tol: R,
) -> Result<(ScalarField<R>, CgReport<R>)> {
    cg_solve_with(grid, b, x0, tol, |_| {})
}

/// Exact solver for `L x = b` (zero-mean part) by cosine transforms.
#[derive(Clone, Debug)]
pub struct SpectralPoisson<R> {
    inner: SeparableSolver<R>,
    dx: R,
    dy: R,
}

impl<R: Real> SpectralPoisson<R> {
    pub fn new(grid: &Grid<R>) -> Self {
        Self {
            inner: SeparableSolver::new(grid, BcKind::Surface),
            dx: grid.dx,
            dy: grid.dy,
        }
    }

    /// Symbol of `L` from the eigenvalues of the compact second differences:
    /// `sin^2(m pi / N) / dx^2 = l (1 - l dx^2 / 4)`.
    fn symbol(&self, lx: R, ly: R) -> R {
        let q = R::c(0.25);
        lx * (R::one() - lx * self.dx * self.dx * q) + ly * (R::one() - ly * self.dy * self.dy * q)
    }

    pub fn solve(&self, b: &ScalarField<R>) -> ScalarField<R> {
        let tiny = R::c(1e-9) / (self.dx * self.dx + self.dy * self.dy);
        let mut x = self.inner.apply_symbol(b, |lx, ly, _| {
            let s = self.symbol(lx, ly);
            if s.abs() < tiny {
                R::zero()
            } else {
                R::one() / s
            }
        });
        subtract_mean(&mut x);
        x
    }

    /// Eigenvalue of `L` for the cosine mode `(mx, my)`.
    pub fn eigenvalue(&self, mx: usize, my: usize) -> R {
        let (lx, ly, _) = self.inner.eig(mx, my, 0);
        self.symbol(lx, ly)
    }
}

/// How the Poisson problems are solved.
#[derive(Clone, Debug)]
pub enum PoissonMethod<R> {
    Cg { tol: R },
    Spectral(SpectralPoisson<R>),
}

impl<R: Real> PoissonMethod<R> {
    pub fn cg_default() -> Self {
        PoissonMethod::Cg {
            tol: R::c(DEFAULT_TOL),
        }
    }

    pub fn solve(&self, grid: &Grid<R>, b: &ScalarField<R>, x0: Option<&ScalarField<R>>) -> Result<ScalarField<R>> {
        match self {
            PoissonMethod::Cg { tol } => cg_solve(grid, b, x0, *tol).map(|(x, _)| x),
            PoissonMethod::Spectral(s) => Ok(s.solve(b)),
        }
    }
}

/// Max over M0 of `|D (vertical mean of (u, v))|`.
pub fn barotropic_divergence<R: Real>(grid: &Grid<R>, u: &ScalarField<R>, v: &ScalarField<R>) -> R {
    horizontal_divergence(grid, &vertical_average(u), &vertical_average(v)).max_abs()
}

/// Removes the divergent part of the barotropic velocity: solves
/// `L phi = -D vbar` and subtracts `G phi` at every level. Returns `phi`.
pub fn project_velocity<R: Real>(
    grid: &Grid<R>,
    u: &mut ScalarField<R>,
    v: &mut ScalarField<R>,
    method: &PoissonMethod<R>,
    warm: Option<&ScalarField<R>>,
) -> Result<ScalarField<R>> {
    let mut rhs = horizontal_divergence(grid, &vertical_average(u), &vertical_average(v));
    rhs.scale(-R::one());
    let phi = method.solve(grid, &rhs, warm)?;
    let (gx, gy) = surface_gradient(grid, &phi);
    for (f, g) in [(u, gx), (v, gy)] {
        f.update_interior(|i, j, _, x| x - g.get(i, j, 0));
        f.fill_ghosts();
    }
    Ok(phi)
}

/// Surface pressure that makes the barotropic part of a momentum tendency
/// divergence free: `L p_s = -rho0 D (vertical mean of tendency)`.
pub fn surface_pressure_from_tendency<R: Real>(
    grid: &Grid<R>,
    tend: &Tendency<R>,
    params: &PhysParams<R>,
    method: &PoissonMethod<R>,
) -> Result<ScalarField<R>> {
    let mut rhs = horizontal_divergence(
        grid,
        &vertical_average(tend.u()),
        &vertical_average(tend.v()),
    );
    rhs.scale(-params.rho0);
    method.solve(grid, &rhs, None)
}

/// Solves for `p_s` from the non-pressure momentum tendencies
/// `F - AU - B(U) - A_p U - E U` of the state `u`.
pub fn solve_surface_pressure<R: Real>(
    grid: &Grid<R>,
    u: &Fields<R>,
    forcing: &Fields<R>,
    params: &PhysParams<R>,
    tol: R,
) -> Result<ScalarField<R>> {
    let mut tend = explicit_drift(grid, u, forcing, params, DriftTerms::ALL);
    tend.axpy(-R::one(), &apply_a(grid, u, params));
    surface_pressure_from_tendency(grid, &tend, params, &PoissonMethod::Cg { tol })
}

/// The averaged forcing `G = G1 + G2` returned per horizontal component:
/// `G1 = -rho0 A((v.grad) v + (div v) v)`,
/// `G2 = rho0 A(g int_z^0 (beta_T grad T + beta_S grad S) - f k x v + F_v)`.
pub fn averaged_forcing_g<R: Real>(
    grid: &Grid<R>,
    u: &Fields<R>,
    forcing: &Fields<R>,
    params: &PhysParams<R>,
) -> (ScalarField<R>, ScalarField<R>) {
    let div = horizontal_divergence(grid, u.u(), u.v());
    let mut out = Vec::with_capacity(2);
    for (axis, comp) in [(Axis::X, Component::U), (Axis::Y, Component::V)] {
        let c = &u[comp];
        let adv = {
            let mut a = centered_diff(grid, c, Axis::X).mul(u.u());
            a.axpy(R::one(), &centered_diff(grid, c, Axis::Y).mul(u.v()));
            a.axpy(R::one(), &div.mul(c).with_bc(c.bc()));
            a
        };
        let mut buoy = centered_diff(grid, u.temp(), axis);
        buoy.scale(params.beta_t);
        buoy.axpy(params.beta_s, &centered_diff(grid, u.salt(), axis));
        let mut g2 = integrate_from_surface(grid, &buoy).with_bc(BcKind::Velocity);
        g2.scale(params.g);
        let rot = match comp {
            Component::U => u.v().scaled(params.f),
            _ => u.u().scaled(-params.f),
        };
        g2.axpy(R::one(), &rot);
        g2.axpy(R::one(), &forcing[comp]);
        g2.axpy(-R::one(), &adv);
        let mut avg = vertical_average(&g2);
        avg.scale(params.rho0);
        out.push(avg);
    }
    let gy = out.pop().unwrap();
    let gx = out.pop().unwrap();
    (gx, gy)
}

/// Smooth time-dependent 2D trigonometric field used as Stokes forcing.
#[derive(Clone, Debug)]
pub struct TrigField {
    /// `(amplitude, kx, ky, phase_x, phase_y, omega)` per term.
    pub terms: Vec<[f64; 6]>,
}

impl TrigField {
    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&[a, kx, ky, px, py, om]| a * (kx * x + px).sin() * (ky * y + py).sin() * (om * t).cos())
            .sum()
    }
}

/// One Stokes test case on the unit square: initial velocity `q0 = curl psi`
/// with `psi` vanishing to second order on the boundary, and forcing `f`.
#[derive(Clone, Debug)]
pub struct StokesCase {
    /// Stream function modulation; `psi = sin^2(pi x) sin^2(pi y) s(x, y)`.
    pub stream: TrigField,
    pub forcing: [TrigField; 2],
    /// Optional explicit discrete initial velocity (overrides `stream`).
    pub q0: Option<[Vec<f64>; 2]>,
}

impl StokesCase {
    pub fn zero() -> Self {
        Self {
            stream: TrigField { terms: vec![] },
            forcing: [TrigField { terms: vec![] }, TrigField { terms: vec![] }],
            q0: None,
        }
    }

    fn psi(&self, x: f64, y: f64) -> f64 {
        let pi = std::f64::consts::PI;
        let b = ((pi * x).sin() * (pi * y).sin()).powi(2);
        b * self.stream.eval(x, y, 0.0)
    }

    fn initial<R: Real>(&self, grid: &Grid<R>) -> (ScalarField<R>, ScalarField<R>) {
        let (n1, n2) = (grid.n1(), grid.n2());
        if let Some([a, b]) = &self.q0 {
            let to = |v: &Vec<f64>| {
                let vals: Vec<R> = v.iter().map(|&x| R::c(x)).collect();
                ScalarField::from_interior(n1, n2, 1, BcKind::SurfaceVelocity, &vals)
            };
            return (to(a), to(b));
        }
        let e = 1e-5;
        let qx = grid.sample(BcKind::SurfaceVelocity, |x, y, _| {
            let (x, y) = (x.to_f64_lossy(), y.to_f64_lossy());
            R::c((self.psi(x, y + e) - self.psi(x, y - e)) / (2.0 * e))
        });
        let qy = grid.sample(BcKind::SurfaceVelocity, |x, y, _| {
            let (x, y) = (x.to_f64_lossy(), y.to_f64_lossy());
            R::c(-(self.psi(x + e, y) - self.psi(x - e, y)) / (2.0 * e))
        });
        (qx, qy)
    }

    fn forcing_at<R: Real>(&self, grid: &Grid<R>, t: f64) -> (ScalarField<R>, ScalarField<R>) {
        let f = |c: usize| {
            grid.sample(BcKind::SurfaceVelocity, |x, y, _| {
                R::c(self.forcing[c].eval(x.to_f64_lossy(), y.to_f64_lossy(), t))
            })
        };
        (f(0), f(1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StokesRow {
    pub case_id: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub grid_n: usize,
}

impl StokesRow {
    pub const CSV_HEADER: &'static str = "case_id,lhs,rhs,ratio,grid_N";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.case_id, self.lhs, self.rhs, self.ratio, self.grid_n
        )
    }
}

/// Number of implicit Euler steps over the horizon.
pub const STOKES_STEPS: usize = 512;

/// Discrete 2D Stokes system on the unit square with Dirichlet velocity.
pub struct Stokes2d<R> {
    pub grid: Grid<R>,
    pub nu: R,
    pub dt: R,
    helm: SeparableSolver<R>,
    poisson: SpectralPoisson<R>,
}

impl<R: Real> Stokes2d<R> {
    pub fn new(n: usize, nu: R, horizon: R) -> Result<Self> {
        let grid = crate::grid::make_grid(crate::grid::GridSpec::new(R::one(), R::one(), R::one(), n, n, 4))?;
        Ok(Self {
            helm: SeparableSolver::new(&grid, BcKind::SurfaceVelocity),
            poisson: SpectralPoisson::new(&grid),
            dt: horizon / R::from_usize_lossy(STOKES_STEPS),
            grid,
            nu,
        })
    }

    /// Leray projection of a surface velocity: returns the potential and
    /// the projected pair.
    pub fn project(&self, a: &ScalarField<R>, b: &ScalarField<R>) -> (ScalarField<R>, ScalarField<R>, ScalarField<R>) {
        let mut rhs = horizontal_divergence(&self.grid, a, b).with_bc(BcKind::Surface);
        rhs.scale(-R::one());
        let phi = self.poisson.solve(&rhs);
        let (gx, gy) = surface_gradient(&self.grid, &phi);
        (phi, a.sub(&gx), b.sub(&gy))
    }

    /// One implicit Euler step `q <- P (I - dt nu Lap)^-1 (q + dt f)`; also
    /// returns the pressure gradient `G phi / dt` the projection removed.
    pub fn step(
        &self,
        q: &(ScalarField<R>, ScalarField<R>),
        f: &(ScalarField<R>, ScalarField<R>),
    ) -> ((ScalarField<R>, ScalarField<R>), (ScalarField<R>, ScalarField<R>)) {
        let solve = |q: &ScalarField<R>, f: &ScalarField<R>| {
            let mut x = q.clone();
            x.axpy(self.dt, f);
            self.helm.helmholtz(&x, self.dt, self.nu, R::zero())
        };
        let a = solve(&q.0, &f.0);
        let b = solve(&q.1, &f.1);
        let (phi, a, b) = self.project(&a, &b);
        let (mut gx, mut gy) = surface_gradient(&self.grid, &phi);
        gx.scale(R::one() / self.dt);
        gy.scale(R::one() / self.dt);
        ((a, b), (gx, gy))
    }

    /// Squared `L^r` norm of a pair, componentwise: `(int |a|^r + |b|^r)^(2/r)`.
    pub fn lr_sq(&self, a: &ScalarField<R>, b: &ScalarField<R>, r: R) -> R {
        let mut s = R::zero();
        for f in [a, b] {
            f.for_each_interior(|_, _, _, v| s += v.abs().powf(r));
        }
        (s * self.grid.cell_area()).powf(R::c(2.0) / r)
    }

    /// Unweighted Dirichlet form `|grad a|^2 + |grad b|^2`.
    pub fn grad_sq(&self, a: &ScalarField<R>, b: &ScalarField<R>) -> R {
        let d = crate::grid::Diffusivity::unit();
        crate::grid::dirichlet_form(&self.grid, a, a, d) + crate::grid::dirichlet_form(&self.grid, b, b, d)
    }

    /// Integrates one case and returns both sides of the pressure estimate.
    pub fn run_case(&self, case: &StokesCase, r: R) -> (R, R) {
        let (a0, b0) = case.initial(&self.grid);
        let (_, a0, b0) = self.project(&a0, &b0);
        let mut q = (a0, b0);
        let rhs0 = self.grad_sq(&q.0, &q.1);
        let mut lhs = R::zero();
        let mut fsum = R::zero();
        for n in 1..=STOKES_STEPS {
            let t = (self.dt * R::from_usize_lossy(n)).to_f64_lossy();
            let f = case.forcing_at(&self.grid, t);
            let (next, gp) = self.step(&q, &f);
            q = next;
            lhs += self.dt * self.lr_sq(&gp.0, &gp.1, r);
            fsum += self.dt * self.lr_sq(&f.0, &f.1, r);
        }
        (lhs, rhs0 + fsum)
    }
}

/// Runs each case on an `n x n` grid and reports both sides of
/// `int |grad p|^2_{L^r} <= c (|grad q0|^2 + int |f|^2_{L^r})`.
pub fn stokes_pressure_check(cases: &[StokesCase], n: usize, nu: f64, r: f64, horizon: f64) -> Result<Vec<StokesRow>> {
    if !(r > 1.0 && r < 2.0) {
        return Err(Error::InvalidValue {
            key: "r".into(),
            reason: format!("must lie in (1, 2), got {r}"),
        });
    }
    let s = Stokes2d::<f64>::new(n, nu, horizon)?;
    Ok(cases
        .iter()
        .enumerate()
        .map(|(case_id, c)| {
            let (lhs, rhs) = s.run_case(c, r);
            let ratio = if lhs == 0.0 && rhs == 0.0 { 0.0 } else { lhs / rhs };
            StokesRow {
                case_id,
                lhs,
                rhs,
                ratio,
                grid_n: n,
            }
        })
        .collect())
}

/// Random smooth Stokes case from a seed.
pub fn random_stokes_case(seed: u64) -> StokesCase {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let trig = |n: usize, amp: f64, rng: &mut rand_chacha::ChaCha8Rng| TrigField {
        terms: (0..n)
            .map(|_| {
                let pi = std::f64::consts::PI;
                [
                    amp * rng.random_range(-1.0..1.0),
                    pi * rng.random_range(1..4) as f64,
                    pi * rng.random_range(1..4) as f64,
                    rng.random_range(0.0..pi),
                    rng.random_range(0.0..pi),
                    rng.random_range(0.0..6.0),
                ]
            })
            .collect(),
    };
    let stream = {
        let mut s = trig(3, 1.0, &mut rng);
        s.terms.push([1.5, 0.0, 0.0, 0.5 * std::f64::consts::PI, 0.5 * std::f64::consts::PI, 0.0]);
        s
    };
    let forcing = [trig(3, 1.0, &mut rng), trig(3, 1.0, &mut rng)];
    StokesCase {
        stream,
        forcing,
        q0: None,
    }
}

/// Slowest-decaying discrete Stokes eigenmode (by power iteration of the
/// unforced step map) and its per-step amplification factor.
pub fn slowest_stokes_mode(s: &Stokes2d<f64>, iters: usize) -> ((ScalarField<f64>, ScalarField<f64>), f64) {
    let seed = random_stokes_case(7);
    let (a, b) = seed.initial(&s.grid);
    let (_, mut a, mut b) = s.project(&a, &b);
    let zero = (s.grid.zeros(BcKind::SurfaceVelocity), s.grid.zeros(BcKind::SurfaceVelocity));
    let mut gamma = 0.0;
    for _ in 0..iters {
        let n0 = (a.dot(&a) + b.dot(&b)).sqrt();
        a.scale(1.0 / n0);
        b.scale(1.0 / n0);
        let ((na, nb), _) = s.step(&(a.clone(), b.clone()), &zero);
        gamma = na.dot(&a) + nb.dot(&b);
        a = na;
        b = nb;
    }
    let n0 = (a.dot(&a) + b.dot(&b)).sqrt();
    a.scale(1.0 / n0);
    b.scale(1.0 / n0);
    ((a, b), gamma)
}
