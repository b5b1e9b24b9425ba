//! Spatial operators of the abstract evolution equation
//! `dU + (AU + B(U) + A_p U + E U) dt = F dt + sigma(U) dW`.
//!
//! All operators read ghost values, so inputs must have their ghosts filled.
//! Outputs have ghosts filled according to the kind of the output field.

use crate::error::{Error, Result};
use crate::grid::{BcKind, Component, Diffusivity, Fields, Grid, ScalarField, State};
use crate::real::Real;

/// Tendency of each prognostic component.
pub type Tendency<R> = Fields<R>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysParams<R> {
    pub mu_v: R,
    pub nu_v: R,
    pub mu_t: R,
    pub nu_t: R,
    pub mu_s: R,
    pub nu_s: R,
    /// Coriolis parameter.
    pub f: R,
    pub g: R,
    pub rho0: R,
    pub beta_t: R,
    pub beta_s: R,
    pub t_r: R,
    pub s_r: R,
}

impl<R: Real> Default for PhysParams<R> {
    fn default() -> Self {
        let d = R::c(1e-2);
        Self {
            mu_v: d,
            nu_v: d,
            mu_t: d,
            nu_t: d,
            mu_s: d,
            nu_s: d,
            f: R::one(),
            g: R::c(9.81),
            rho0: R::c(1000.0),
            beta_t: R::c(2e-4),
            beta_s: R::c(8e-4),
            t_r: R::c(10.0),
            s_r: R::c(35.0),
        }
    }
}

impl<R: Real> PhysParams<R> {
    /// Same viscosity and diffusivity `mu`, `nu` for every component.
    pub fn with_viscosity(mut self, mu: R, nu: R) -> Self {
        self.mu_v = mu;
        self.mu_t = mu;
        self.mu_s = mu;
        self.nu_v = nu;
        self.nu_t = nu;
        self.nu_s = nu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu_v", self.mu_v),
            ("nu_v", self.nu_v),
            ("mu_t", self.mu_t),
            ("nu_t", self.nu_t),
            ("mu_s", self.mu_s),
            ("nu_s", self.nu_s),
            ("rho0", self.rho0),
        ];
        for (key, v) in positive {
            if !(v > R::zero()) || !v.is_finite() {
                return Err(Error::InvalidValue {
                    key: key.into(),
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if !(self.g >= R::zero()) {
            return Err(Error::InvalidValue {
                key: "g".into(),
                reason: format!("must be non-negative, got {}", self.g),
            });
        }
        for (key, v) in [
            ("f", self.f),
            ("beta_t", self.beta_t),
            ("beta_s", self.beta_s),
            ("t_r", self.t_r),
            ("s_r", self.s_r),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidValue {
                    key: key.into(),
                    reason: "must be finite".into(),
                });
            }
        }
        Ok(())
    }

    pub fn diffusivity(&self, c: Component) -> Diffusivity<R> {
        match c {
            Component::U | Component::V => Diffusivity::new(self.mu_v, self.nu_v),
            Component::Temp => Diffusivity::new(self.mu_t, self.nu_t),
            Component::Salt => Diffusivity::new(self.mu_s, self.nu_s),
        }
    }
}

/// Which non-diffusive terms enter the drift.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DriftTerms {
    pub advection: bool,
    pub buoyancy: bool,
    pub coriolis: bool,
    pub surface_pressure: bool,
}

impl Default for DriftTerms {
    fn default() -> Self {
        Self::ALL
    }
}

impl DriftTerms {
    pub const ALL: DriftTerms = DriftTerms {
        advection: true,
        buoyancy: true,
        coriolis: true,
        surface_pressure: true,
    };
    pub const LINEAR: DriftTerms = DriftTerms {
        advection: false,
        buoyancy: false,
        coriolis: false,
        surface_pressure: false,
    };
}

/// `rho = rho0 (1 + beta_T (T - T_r) + beta_S (S - S_r))` for absolute `T`, `S`.
pub fn density<R: Real>(t: &ScalarField<R>, s: &ScalarField<R>, params: &PhysParams<R>) -> ScalarField<R> {
    let mut out = t.clone();
    out.update_interior(|i, j, k, tv| {
        params.rho0
            * (R::one() + params.beta_t * (tv - params.t_r) + params.beta_s * (s.get(i, j, k) - params.s_r))
    });
    out.fill_ghosts();
    out
}

/// Density of a state whose tracers are anomalies about the reference values.
pub fn density_of_anomalies<R: Real>(state: &State<R>, params: &PhysParams<R>) -> ScalarField<R> {
    let mut out = state.temp().clone();
    let s = state.salt();
    out.update_interior(|i, j, k, tv| {
        params.rho0 * (R::one() + params.beta_t * tv + params.beta_s * s.get(i, j, k))
    });
    out.fill_ghosts();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Centered first difference `(f[+1] - f[-1]) / 2 delta` along `axis`.
pub fn centered_diff<R: Real>(grid: &Grid<R>, f: &ScalarField<R>, axis: Axis) -> ScalarField<R> {
    let (sy, sz) = f.strides();
    let (stride, h) = match axis {
        Axis::X => (1, grid.dx),
        Axis::Y => (sy, grid.dy),
        Axis::Z => (sz, grid.dz),
    };
    let inv = R::one() / (h + h);
    let src = f.raw();
    let mut out = f.zeros_like();
    let (n1, n2, nz) = f.dims();
    for k in 0..nz {
        for j in 0..n2 {
            let base = f.idx(0, j as isize, k as isize);
            let dst = out.raw_mut();
            for n in base..base + n1 {
                dst[n] = (src[n + stride] - src[n - stride]) * inv;
            }
        }
    }
    out.fill_ghosts();
    out
}

/// Second difference along `axis` using the ghost values.
pub fn second_diff<R: Real>(grid: &Grid<R>, f: &ScalarField<R>, axis: Axis) -> ScalarField<R> {
    let (sy, sz) = f.strides();
    let (stride, h) = match axis {
        Axis::X => (1, grid.dx),
        Axis::Y => (sy, grid.dy),
        Axis::Z => (sz, grid.dz),
    };
    let inv = R::one() / (h * h);
    let two = R::c(2.0);
    let src = f.raw();
    let mut out = f.zeros_like();
    let (n1, n2, nz) = f.dims();
    for k in 0..nz {
        for j in 0..n2 {
            let base = f.idx(0, j as isize, k as isize);
            let dst = out.raw_mut();
            for n in base..base + n1 {
                dst[n] = (src[n + stride] - two * src[n] + src[n - stride]) * inv;
            }
        }
    }
    out.fill_ghosts();
    out
}

/// `-mu (dxx + dyy) f - nu dzz f`; the vertical part is skipped for surface fields.
pub fn apply_a_field<R: Real>(grid: &Grid<R>, f: &ScalarField<R>, coeff: Diffusivity<R>) -> ScalarField<R> {
    let (sy, sz) = f.strides();
    let two = R::c(2.0);
    let cx = coeff.mu / (grid.dx * grid.dx);
    let cy = coeff.mu / (grid.dy * grid.dy);
    let cz = if f.bc().is_surface() {
        R::zero()
    } else {
        coeff.nu / (grid.dz * grid.dz)
    };
    let src = f.raw();
    let mut out = f.zeros_like();
    let (n1, n2, nz) = f.dims();
    for k in 0..nz {
        for j in 0..n2 {
            let base = f.idx(0, j as isize, k as isize);
            let dst = out.raw_mut();
            for n in base..base + n1 {
                let c = two * src[n];
                let lap = cx * (src[n + 1] - c + src[n - 1])
                    + cy * (src[n + sy] - c + src[n - sy])
                    + cz * (src[n + sz] - c + src[n - sz]);
                dst[n] = -lap;
            }
        }
    }
    out.fill_ghosts();
    out
}

pub fn apply_a<R: Real>(grid: &Grid<R>, u: &Fields<R>, params: &PhysParams<R>) -> Tendency<R> {
    Fields {
        comps: Component::ALL.map(|c| apply_a_field(grid, &u[c], params.diffusivity(c))),
    }
}

/// Vertical difference onto interior z-faces: `(f[k+1] - f[k]) / dz` for
/// faces `1..nz-1`. The result vanishes on the top and bottom faces, which is
/// exactly what the Neumann conditions say about the derivative.
pub fn dz_faces<R: Real>(grid: &Grid<R>, f: &ScalarField<R>) -> ScalarField<R> {
    let (n1, n2, nz) = f.dims();
    let mut out = ScalarField::new(n1, n2, nz - 1, f.bc().dz_kind());
    let inv = R::one() / grid.dz;
    for k in 0..nz - 1 {
        for j in 0..n2 {
            for i in 0..n1 {
                out.set(i, j, k, (f.get(i, j, k + 1) - f.get(i, j, k)) * inv);
            }
        }
    }
    out.fill_ghosts();
    out
}

/// Midpoint-rule `int_z^0 f` at cell centres:
/// `sum_{m > k} f_m dz + f_k dz / 2`.
pub fn integrate_from_surface<R: Real>(grid: &Grid<R>, f: &ScalarField<R>) -> ScalarField<R> {
    let (n1, n2, nz) = f.dims();
    let mut out = f.zeros_like();
    let half = grid.dz * R::c(0.5);
    for j in 0..n2 {
        for i in 0..n1 {
            let mut above = R::zero();
            for k in (0..nz).rev() {
                let v = f.get(i, j, k);
                out.set(i, j, k, above + v * half);
                above += v * grid.dz;
            }
        }
    }
    out.fill_ghosts();
    out
}

/// Midpoint-rule column mean `(1/h) int_{-h}^0 f dz` as a surface field.
pub fn vertical_average<R: Real>(f: &ScalarField<R>) -> ScalarField<R> {
    let (n1, n2, nz) = f.dims();
    let mut out = ScalarField::new(n1, n2, 1, f.bc().surface_kind());
    let inv = R::one() / R::from_usize_lossy(nz);
    for j in 0..n2 {
        for i in 0..n1 {
            let mut s = R::zero();
            for k in 0..nz {
                s += f.get(i, j, k);
            }
            out.set(i, j, 0, s * inv);
        }
    }
    out.fill_ghosts();
    out
}

/// Copies a surface field to every level of a 3D field of kind `bc`.
pub fn extend_vertically<R: Real>(grid: &Grid<R>, s: &ScalarField<R>, bc: BcKind) -> ScalarField<R> {
    let mut out = grid.zeros(bc);
    out.update_interior(|i, j, _, _| s.get(i, j, 0));
    out.fill_ghosts();
    out
}

/// Centered horizontal divergence `dx u + dy v` (tracer-kind output).
pub fn horizontal_divergence<R: Real>(grid: &Grid<R>, u: &ScalarField<R>, v: &ScalarField<R>) -> ScalarField<R> {
    let (sy, _) = u.strides();
    let ix = R::one() / (grid.dx + grid.dx);
    let iy = R::one() / (grid.dy + grid.dy);
    let bc = if u.bc().is_surface() {
        BcKind::Surface
    } else {
        BcKind::Tracer
    };
    let mut out = ScalarField::new(u.dims().0, u.dims().1, u.dims().2, bc);
    let (ur, vr) = (u.raw(), v.raw());
    let (n1, n2, nz) = u.dims();
    for k in 0..nz {
        for j in 0..n2 {
            let base = u.idx(0, j as isize, k as isize);
            let dst = out.raw_mut();
            for n in base..base + n1 {
                dst[n] = (ur[n + 1] - ur[n - 1]) * ix + (vr[n + sy] - vr[n - sy]) * iy;
            }
        }
    }
    out.fill_ghosts();
    out
}

/// Diagnostic vertical velocity `w(v) = int_z^0 div v` at cell centres.
pub fn diagnostic_w<R: Real>(grid: &Grid<R>, u: &ScalarField<R>, v: &ScalarField<R>) -> ScalarField<R> {
    integrate_from_surface(grid, &horizontal_divergence(grid, u, v))
}

/// `w(v)` on the z-faces: level `kf` is face `kf` (0 = bottom, nz = surface).
/// The surface value is exactly zero.
pub fn w_faces<R: Real>(grid: &Grid<R>, u: &ScalarField<R>, v: &ScalarField<R>) -> ScalarField<R> {
    let div = horizontal_divergence(grid, u, v);
    let (n1, n2, nz) = div.dims();
    let mut out = ScalarField::new(n1, n2, nz + 1, BcKind::Tracer);
    for j in 0..n2 {
        for i in 0..n1 {
            let mut acc = R::zero();
            for k in (0..nz).rev() {
                acc += div.get(i, j, k) * grid.dz;
                out.set(i, j, k, acc);
            }
        }
    }
    out
}

/// `p = p_s + g int_z^0 rho` for absolute `T`, `S`.
pub fn hydrostatic_pressure<R: Real>(
    grid: &Grid<R>,
    t: &ScalarField<R>,
    s: &ScalarField<R>,
    p_s: &ScalarField<R>,
    params: &PhysParams<R>,
) -> ScalarField<R> {
    let rho = density(t, s, params);
    let mut out = integrate_from_surface(grid, &rho);
    out.update_interior(|i, j, _, v| p_s.get(i, j, 0) + params.g * v);
    out.fill_ghosts();
    out
}

/// `(v . grad) phi + w(v) dz phi` with the velocity `(u, v)` and precomputed `w`.
pub fn advect<R: Real>(
    grid: &Grid<R>,
    u: &ScalarField<R>,
    v: &ScalarField<R>,
    w: &ScalarField<R>,
    phi: &ScalarField<R>,
) -> ScalarField<R> {
    let (sy, sz) = phi.strides();
    let ix = R::one() / (grid.dx + grid.dx);
    let iy = R::one() / (grid.dy + grid.dy);
    let iz = R::one() / (grid.dz + grid.dz);
    let (ur, vr, wr, p) = (u.raw(), v.raw(), w.raw(), phi.raw());
    let mut out = phi.zeros_like();
    let (n1, n2, nz) = phi.dims();
    for k in 0..nz {
        for j in 0..n2 {
            let base = phi.idx(0, j as isize, k as isize);
            let dst = out.raw_mut();
            for n in base..base + n1 {
                dst[n] = ur[n] * (p[n + 1] - p[n - 1]) * ix
                    + vr[n] * (p[n + sy] - p[n - sy]) * iy
                    + wr[n] * (p[n + sz] - p[n - sz]) * iz;
            }
        }
    }
    out.fill_ghosts();
    out
}

/// `B(U, U#) = (v . grad) U# + w(v) dz U#` applied to every component of `U#`.
pub fn apply_b<R: Real>(grid: &Grid<R>, u: &Fields<R>, u_sharp: &Fields<R>) -> Tendency<R> {
    let w = diagnostic_w(grid, u.u(), u.v());
    Fields {
        comps: Component::ALL.map(|c| advect(grid, u.u(), u.v(), &w, &u_sharp[c])),
    }
}

/// Momentum part `-g int_z^0 (beta_T grad T + beta_S grad S)`; zero on tracers.
pub fn apply_ap<R: Real>(grid: &Grid<R>, u: &Fields<R>, params: &PhysParams<R>) -> Tendency<R> {
    let mut out = Fields::zeros(grid);
    if params.g == R::zero() {
        return out;
    }
    for (axis, comp) in [(Axis::X, Component::U), (Axis::Y, Component::V)] {
        let mut b = centered_diff(grid, u.temp(), axis);
        b.scale(params.beta_t);
        b.axpy(params.beta_s, &centered_diff(grid, u.salt(), axis));
        let mut m = integrate_from_surface(grid, &b).with_bc(BcKind::Velocity);
        m.scale(-params.g);
        out[comp] = m;
    }
    out
}

/// `E U = f k x v = f (-v, u)` on momentum; zero on tracers.
pub fn apply_e<R: Real>(grid: &Grid<R>, u: &Fields<R>, params: &PhysParams<R>) -> Tendency<R> {
    let mut out = Fields::zeros(grid);
    out[Component::U] = u.v().scaled(-params.f);
    out[Component::V] = u.u().scaled(params.f);
    out
}

/// `(1/rho0) grad p_s` extended to every level (momentum only).
pub fn surface_pressure_gradient<R: Real>(
    grid: &Grid<R>,
    p_s: &ScalarField<R>,
    params: &PhysParams<R>,
) -> Tendency<R> {
    let mut out = Fields::zeros(grid);
    let inv = R::one() / params.rho0;
    for (axis, comp) in [(Axis::X, Component::U), (Axis::Y, Component::V)] {
        let mut gx = centered_diff(grid, p_s, axis);
        gx.scale(inv);
        out[comp] = extend_vertically(grid, &gx, BcKind::Velocity);
    }
    out
}

/// Non-diffusive explicit part `F - B(U,U) - A_p U - E U` with optional terms.
pub fn explicit_drift<R: Real>(
    grid: &Grid<R>,
    u: &Fields<R>,
    forcing: &Fields<R>,
    params: &PhysParams<R>,
    terms: DriftTerms,
) -> Tendency<R> {
    let mut out = forcing.clone();
    if terms.advection {
        out.axpy(-R::one(), &apply_b(grid, u, u));
    }
    if terms.buoyancy {
        out.axpy(-R::one(), &apply_ap(grid, u, params));
    }
    if terms.coriolis {
        out.axpy(-R::one(), &apply_e(grid, u, params));
    }
    out
}

/// `F - AU - B(U,U) - A_p U - E U - (1/rho0) grad p_s`.
pub fn full_drift<R: Real>(
    grid: &Grid<R>,
    u: &Fields<R>,
    forcing: &Fields<R>,
    p_s: &ScalarField<R>,
    params: &PhysParams<R>,
    terms: DriftTerms,
) -> Tendency<R> {
    let mut out = explicit_drift(grid, u, forcing, params, terms);
    out.axpy(-R::one(), &apply_a(grid, u, params));
    if terms.surface_pressure {
        out.axpy(-R::one(), &surface_pressure_gradient(grid, p_s, params));
    }
    out
}

/// Defect of the cancellation `int (v# . grad v_k + w(v#) dz v_k) v_k^r = 0`
/// summed over both momentum components, and the matching sum of absolute
/// integrands used as its scale.
pub fn cancellation_defect<R: Real>(
    grid: &Grid<R>,
    sharp: [&ScalarField<R>; 2],
    v: [&ScalarField<R>; 2],
    r: i32,
) -> (f64, f64) {
    let w = diagnostic_w(grid, sharp[0], sharp[1]);
    let dx = [Axis::X, Axis::Y, Axis::Z];
    let cell = grid.cell_volume().to_f64_lossy();
    let mut defect = 0.0;
    let mut scale = 0.0;
    for f in v {
        let d = dx.map(|a| centered_diff(grid, f, a));
        f.for_each_interior(|i, j, k, x| {
            let pw = x.to_f64_lossy().powi(r);
            let parts = [
                sharp[0].get(i, j, k) * d[0].get(i, j, k),
                sharp[1].get(i, j, k) * d[1].get(i, j, k),
                w.get(i, j, k) * d[2].get(i, j, k),
            ];
            for p in parts {
                let t = p.to_f64_lossy() * pw * cell;
                defect += t;
                scale += t.abs();
            }
        });
    }
    (defect, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridSpec};

    fn grid() -> Grid<f64> {
        make_grid(GridSpec::new(1.0, 1.5, 0.5, 8, 6, 5)).unwrap()
    }

    #[test]
    fn density_reference_and_sample() {
        let g = grid();
        let p = PhysParams::<f64> {
            t_r: 3.0,
            s_r: 30.0,
            ..Default::default()
        };
        let t = g.sample(BcKind::Tracer, |_, _, _| 8.0);
        let s = g.sample(BcKind::Tracer, |_, _, _| 29.0);
        let rho = density(&t, &s, &p);
        assert!((rho.get(2, 3, 1) - 1000.2).abs() < 1e-9);
        let t0 = g.sample(BcKind::Tracer, |_, _, _| 3.0);
        let s0 = g.sample(BcKind::Tracer, |_, _, _| 30.0);
        assert_eq!(density(&t0, &s0, &p).max_abs(), 1000.0);
    }

    #[test]
    fn w_vanishes_at_surface_and_is_minus_z_for_unit_divergence() {
        let g = grid();
        let u = g.sample(BcKind::Velocity, |x, _, _| x);
        let v = g.zeros(BcKind::Velocity);
        let w = diagnostic_w(&g, &u, &v);
        let wf = w_faces(&g, &u, &v);
        for k in 0..g.nz() {
            for j in 0..g.n2() {
                assert_eq!(wf.get(3, j, g.nz()), 0.0);
                for i in 1..g.n1() - 1 {
                    assert!((w.get(i, j, k) + g.z(k as isize)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn integrate_from_surface_is_exact_for_constants() {
        let g = grid();
        let one = g.sample(BcKind::Tracer, |_, _, _| 1.0);
        let i = integrate_from_surface(&g, &one);
        for k in 0..g.nz() {
            assert!((i.get(1, 1, k) + g.z(k as isize)).abs() < 1e-14);
        }
    }

    #[test]
    fn coriolis_rotates() {
        let g = grid();
        let mut u = Fields::zeros(&g);
        u[Component::U].fill(1.0);
        let p = PhysParams::<f64>::default();
        let e = apply_e(&g, &u, &p);
        assert_eq!(e.u().max_abs(), 0.0);
        assert_eq!(e.v().get(2, 2, 2), 1.0);
    }
}
