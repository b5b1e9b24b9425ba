//! Discretized cylindrical domain `[0, L1] x [0, L2] x (-h, 0)`, field storage
//! with one ghost layer per face, boundary conditions, and the discrete norms
//! and inner products.
//!
//! Nodes are cell centres: `x_i = (i + 1/2) dx`, `z_k = -h + (k + 1/2) dz`.
//! Ghost values encode the boundary conditions: a mirrored ghost gives a zero
//! normal difference (Neumann), an odd ghost gives a zero face value
//! (Dirichlet). Fields derived by a vertical difference live on the interior
//! z-faces and use a zero ghost placed exactly on the top and bottom faces.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::operators::PhysParams;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<R> {
    pub l1: R,
    pub l2: R,
    pub h: R,
    pub n1: usize,
    pub n2: usize,
    pub nz: usize,
}

impl<R: Real> GridSpec<R> {
    pub fn new(l1: R, l2: R, h: R, n1: usize, n2: usize, nz: usize) -> Self {
        Self {
            l1,
            l2,
            h,
            n1,
            n2,
            nz,
        }
    }

    /// Unit cube with `n` cells per direction.
    pub fn cube(n: usize) -> Self {
        Self::new(R::one(), R::one(), R::one(), n, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("l1", self.l1), ("l2", self.l2), ("h", self.h)] {
            if !(v > R::zero()) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, n) in [("n1", self.n1), ("n2", self.n2), ("nz", self.nz)] {
            if n < 4 {
                return Err(Error::InvalidSpec(format!("{name} must be at least 4, got {n}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid<R> {
    pub spec: GridSpec<R>,
    pub dx: R,
    pub dy: R,
    pub dz: R,
}

pub fn make_grid<R: Real>(spec: GridSpec<R>) -> Result<Grid<R>> {
    spec.validate()?;
    Ok(Grid {
        dx: spec.l1 / R::from_usize_lossy(spec.n1),
        dy: spec.l2 / R::from_usize_lossy(spec.n2),
        dz: spec.h / R::from_usize_lossy(spec.nz),
        spec,
    })
}

impl<R: Real> Grid<R> {
    pub fn n1(&self) -> usize {
        self.spec.n1
    }
    pub fn n2(&self) -> usize {
        self.spec.n2
    }
    pub fn nz(&self) -> usize {
        self.spec.nz
    }

    pub fn node_count(&self) -> usize {
        self.spec.n1 * self.spec.n2 * self.spec.nz
    }

    pub fn cell_volume(&self) -> R {
        self.dx * self.dy * self.dz
    }

    pub fn cell_area(&self) -> R {
        self.dx * self.dy
    }

    pub fn volume(&self) -> R {
        self.spec.l1 * self.spec.l2 * self.spec.h
    }

    pub fn x(&self, i: isize) -> R {
        (R::c(i as f64) + R::c(0.5)) * self.dx
    }
    pub fn y(&self, j: isize) -> R {
        (R::c(j as f64) + R::c(0.5)) * self.dy
    }
    pub fn z(&self, k: isize) -> R {
        -self.spec.h + (R::c(k as f64) + R::c(0.5)) * self.dz
    }

    /// Depth of face `k` (0 = bottom, nz = surface).
    pub fn z_face(&self, k: isize) -> R {
        -self.spec.h + R::c(k as f64) * self.dz
    }

    pub fn z_faces(&self) -> Vec<R> {
        (0..=self.spec.nz as isize).map(|k| self.z_face(k)).collect()
    }

    /// Cell column adjacent to the lateral boundary.
    pub fn on_lateral(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.spec.n1 || j + 1 == self.spec.n2
    }
    pub fn on_top(&self, k: usize) -> bool {
        k + 1 == self.spec.nz
    }
    pub fn on_bottom(&self, k: usize) -> bool {
        k == 0
    }

    pub fn zeros(&self, bc: BcKind) -> ScalarField<R> {
        let nz = match bc {
            _ if bc.is_surface() => 1,
            BcKind::DzTracer | BcKind::DzVelocity => self.spec.nz - 1,
            _ => self.spec.nz,
        };
        ScalarField::new(self.spec.n1, self.spec.n2, nz, bc)
    }

    /// Samples `f(x, y, z)` at the nodes of a field of kind `bc` and fills ghosts.
    pub fn sample(&self, bc: BcKind, f: impl Fn(R, R, R) -> R) -> ScalarField<R> {
        let mut out = self.zeros(bc);
        let (n1, n2, nz) = out.dims();
        for k in 0..nz {
            let z = match bc {
                BcKind::DzTracer | BcKind::DzVelocity => self.z_face(k as isize + 1),
                _ if bc.is_surface() => R::zero(),
                _ => self.z(k as isize),
            };
            for j in 0..n2 {
                let y = self.y(j as isize);
                for i in 0..n1 {
                    out.set(i, j, k, f(self.x(i as isize), y, z));
                }
            }
        }
        out.fill_ghosts();
        out
    }

    /// Quadrature weight of one node of a field of kind `bc`.
    pub fn weight(&self, bc: BcKind) -> R {
        if bc.is_surface() {
            self.cell_area()
        } else {
            self.cell_volume()
        }
    }
}

/// How the ghost layer relates to the adjacent interior value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ghost {
    /// `ghost = interior`: zero normal difference.
    Mirror,
    /// `ghost = -interior`: zero value on the face.
    Odd,
    /// `ghost = 0`: the ghost node sits on the boundary where the field vanishes.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    /// Neumann on every face (T, S, and scalar diagnostics).
    Tracer,
    /// Dirichlet on the lateral boundary, Neumann top and bottom (u, v).
    Velocity,
    /// Two-dimensional field over M0 with Neumann data (p_s).
    Surface,
    /// Two-dimensional field over M0 vanishing on its boundary (barotropic velocity).
    SurfaceVelocity,
    /// Vertical difference of a tracer, on interior z-faces.
    DzTracer,
    /// Vertical difference of a velocity component, on interior z-faces.
    DzVelocity,
}

impl BcKind {
    pub fn lateral(self) -> Ghost {
        match self {
            BcKind::Velocity | BcKind::SurfaceVelocity | BcKind::DzVelocity => Ghost::Odd,
            _ => Ghost::Mirror,
        }
    }

    pub fn vertical(self) -> Ghost {
        match self {
            BcKind::DzTracer | BcKind::DzVelocity => Ghost::Zero,
            _ => Ghost::Mirror,
        }
    }

    pub fn is_surface(self) -> bool {
        matches!(self, BcKind::Surface | BcKind::SurfaceVelocity)
    }

    /// Kind of the vertical difference of a field of this kind.
    pub fn dz_kind(self) -> BcKind {
        match self.lateral() {
            Ghost::Odd => BcKind::DzVelocity,
            _ => BcKind::DzTracer,
        }
    }

    /// Kind of the vertical average of a field of this kind.
    pub fn surface_kind(self) -> BcKind {
        match self.lateral() {
            Ghost::Odd => BcKind::SurfaceVelocity,
            _ => BcKind::Surface,
        }
    }
}

/// Weight of a boundary face in the discrete Dirichlet-form sums: half for
/// ghost-reflected boundaries, full when the ghost sits on the boundary.
fn boundary_face_weight<R: Real>(g: Ghost) -> R {
    match g {
        Ghost::Zero => R::one(),
        _ => R::c(0.5),
    }
}

/// Real values on the nodes of the grid plus one ghost layer on every face.
/// Storage is row-major with `k` slowest and `i` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<R> {
    n1: usize,
    n2: usize,
    nz: usize,
    bc: BcKind,
    data: Vec<R>,
}

impl<R: Real> ScalarField<R> {
    pub fn new(n1: usize, n2: usize, nz: usize, bc: BcKind) -> Self {
        Self {
            n1,
            n2,
            nz,
            bc,
            data: vec![R::zero(); (n1 + 2) * (n2 + 2) * (nz + 2)],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::new(self.n1, self.n2, self.nz, self.bc)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.nz)
    }

    pub fn bc(&self) -> BcKind {
        self.bc
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Strides of the padded storage in the `j` and `k` directions.
    #[inline]
    pub fn strides(&self) -> (usize, usize) {
        let sy = self.n1 + 2;
        (sy, sy * (self.n2 + 2))
    }

    /// Storage index of node `(i, j, k)`; ghosts are at -1 and n.
    #[inline]
    pub fn idx(&self, i: isize, j: isize, k: isize) -> usize {
        let (sy, sz) = self.strides();
        ((k + 1) as usize) * sz + ((j + 1) as usize) * sy + (i + 1) as usize
    }

    #[inline]
    pub fn at(&self, i: isize, j: isize, k: isize) -> R {
        self.data[self.idx(i, j, k)]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> R {
        self.data[self.idx(i as isize, j as isize, k as isize)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: R) {
        let n = self.idx(i as isize, j as isize, k as isize);
        self.data[n] = v;
    }

    /// Writes a ghost (or interior) value directly, bypassing the boundary fill.
    pub fn set_raw(&mut self, i: isize, j: isize, k: isize, v: R) {
        let n = self.idx(i, j, k);
        self.data[n] = v;
    }

    pub fn raw(&self) -> &[R] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [R] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dims() == other.dims()
    }

    /// Interior values in row-major order (k slowest).
    pub fn interior(&self) -> Vec<R> {
        let mut out = Vec::with_capacity(self.len());
        for k in 0..self.nz {
            for j in 0..self.n2 {
                let base = self.idx(0, j as isize, k as isize);
                out.extend_from_slice(&self.data[base..base + self.n1]);
            }
        }
        out
    }

    pub fn set_interior(&mut self, values: &[R]) {
        assert_eq!(values.len(), self.len(), "interior length mismatch");
        let mut src = values.chunks_exact(self.n1);
        for k in 0..self.nz {
            for j in 0..self.n2 {
                let base = self.idx(0, j as isize, k as isize);
                self.data[base..base + self.n1].copy_from_slice(src.next().unwrap());
            }
        }
    }

    pub fn from_interior(n1: usize, n2: usize, nz: usize, bc: BcKind, values: &[R]) -> Self {
        let mut f = Self::new(n1, n2, nz, bc);
        f.set_interior(values);
        f.fill_ghosts();
        f
    }

    /// Visits interior nodes in storage order.
    pub fn for_each_interior(&self, mut f: impl FnMut(usize, usize, usize, R)) {
        for k in 0..self.nz {
            for j in 0..self.n2 {
                let base = self.idx(0, j as isize, k as isize);
                for i in 0..self.n1 {
                    f(i, j, k, self.data[base + i]);
                }
            }
        }
    }

    /// Rewrites every interior value from its indices and current value.
    pub fn update_interior(&mut self, mut f: impl FnMut(usize, usize, usize, R) -> R) {
        for k in 0..self.nz {
            for j in 0..self.n2 {
                let base = self.idx(0, j as isize, k as isize);
                for i in 0..self.n1 {
                    let n = base + i;
                    self.data[n] = f(i, j, k, self.data[n]);
                }
            }
        }
    }

    /// Sets the ghost layer from the interior according to the boundary kind.
    /// Idempotent; interior values are never touched.
    pub fn fill_ghosts(&mut self) {
        let (n1, n2, nz) = (self.n1 as isize, self.n2 as isize, self.nz as isize);
        let lat = self.bc.lateral();
        let s = if lat == Ghost::Odd { -R::one() } else { R::one() };
        for k in 0..nz {
            for j in 0..n2 {
                let a = self.at(0, j, k);
                let b = self.at(n1 - 1, j, k);
                self.set_raw(-1, j, k, s * a);
                self.set_raw(n1, j, k, s * b);
            }
        }
        for k in 0..nz {
            for i in -1..=n1 {
                let a = self.at(i, 0, k);
                let b = self.at(i, n2 - 1, k);
                self.set_raw(i, -1, k, s * a);
                self.set_raw(i, n2, k, s * b);
            }
        }
        let vert = self.bc.vertical();
        for j in -1..=n2 {
            for i in -1..=n1 {
                let (a, b) = match vert {
                    Ghost::Zero => (R::zero(), R::zero()),
                    Ghost::Mirror => (self.at(i, j, 0), self.at(i, j, nz - 1)),
                    Ghost::Odd => (-self.at(i, j, 0), -self.at(i, j, nz - 1)),
                };
                self.set_raw(i, j, -1, a);
                self.set_raw(i, j, nz, b);
            }
        }
    }

    pub fn scale(&mut self, a: R) {
        self.data.iter_mut().for_each(|x| *x *= a);
    }

    pub fn scaled(&self, a: R) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * x` on every stored value, ghosts included.
    pub fn axpy(&mut self, a: R, x: &Self) {
        debug_assert!(self.same_shape(x));
        self.data
            .iter_mut()
            .zip(&x.data)
            .for_each(|(y, &x)| *y += a * x);
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(R::one(), other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-R::one(), other);
        out
    }

    /// Pointwise product of interior values; ghosts are refilled.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.update_interior(|i, j, k, a| a * other.get(i, j, k));
        out.fill_ghosts();
        out
    }

    pub fn fill(&mut self, v: R) {
        self.data.iter_mut().for_each(|x| *x = v);
        self.fill_ghosts();
    }

    pub fn with_bc(mut self, bc: BcKind) -> Self {
        self.bc = bc;
        self.fill_ghosts();
        self
    }

    /// Plain (unweighted) sum of interior values in storage order.
    pub fn sum(&self) -> R {
        let mut s = R::zero();
        self.for_each_interior(|_, _, _, v| s += v);
        s
    }

    pub fn mean(&self) -> R {
        self.sum() / R::from_usize_lossy(self.len())
    }

    pub fn max_abs(&self) -> R {
        let mut m = R::zero();
        self.for_each_interior(|_, _, _, v| m = m.max(v.abs()));
        m
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        self.for_each_interior(|_, _, _, v| ok &= v.is_finite());
        ok
    }

    /// Plain sum of interior products.
    pub fn dot(&self, other: &Self) -> R {
        debug_assert!(self.same_shape(other));
        let mut s = R::zero();
        self.for_each_interior(|i, j, k, v| s += v * other.get(i, j, k));
        s
    }

    /// Converts scalar type, keeping layout.
    pub fn cast<S: Real>(&self) -> ScalarField<S> {
        ScalarField {
            n1: self.n1,
            n2: self.n2,
            nz: self.nz,
            bc: self.bc,
            data: self.data.iter().map(|&v| S::c(v.to_f64_lossy())).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    U,
    V,
    Temp,
    Salt,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::U, Component::V, Component::Temp, Component::Salt];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn bc(self) -> BcKind {
        match self {
            Component::U | Component::V => BcKind::Velocity,
            _ => BcKind::Tracer,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::U => "u",
            Component::V => "v",
            Component::Temp => "temp",
            Component::Salt => "salt",
        }
    }

    pub fn is_velocity(self) -> bool {
        matches!(self, Component::U | Component::V)
    }
}

/// The four prognostic (or tendency) fields `(u, v, T, S)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fields<R> {
    pub comps: [ScalarField<R>; 4],
}

impl<R: Real> Fields<R> {
    pub fn zeros(grid: &Grid<R>) -> Self {
        Self {
            comps: Component::ALL.map(|c| grid.zeros(c.bc())),
        }
    }

    pub fn from_comps(u: ScalarField<R>, v: ScalarField<R>, temp: ScalarField<R>, salt: ScalarField<R>) -> Self {
        Self {
            comps: [u, v, temp, salt],
        }
    }

    pub fn u(&self) -> &ScalarField<R> {
        &self.comps[0]
    }
    pub fn v(&self) -> &ScalarField<R> {
        &self.comps[1]
    }
    pub fn temp(&self) -> &ScalarField<R> {
        &self.comps[2]
    }
    pub fn salt(&self) -> &ScalarField<R> {
        &self.comps[3]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Component, &ScalarField<R>)> {
        Component::ALL.into_iter().zip(self.comps.iter())
    }

    pub fn fill_ghosts(&mut self) {
        self.comps.iter_mut().for_each(ScalarField::fill_ghosts);
    }

    pub fn axpy(&mut self, a: R, x: &Self) {
        for (y, x) in self.comps.iter_mut().zip(&x.comps) {
            y.axpy(a, x);
        }
    }

    pub fn scale(&mut self, a: R) {
        self.comps.iter_mut().for_each(|c| c.scale(a));
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(R::one(), other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-R::one(), other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(ScalarField::is_finite)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.comps
            .iter()
            .zip(&other.comps)
            .all(|(a, b)| a.same_shape(b))
    }
}

impl<R> Index<Component> for Fields<R> {
    type Output = ScalarField<R>;
    fn index(&self, c: Component) -> &ScalarField<R> {
        &self.comps[c as usize]
    }
}

impl<R> IndexMut<Component> for Fields<R> {
    fn index_mut(&mut self, c: Component) -> &mut ScalarField<R> {
        &mut self.comps[c as usize]
    }
}

/// Prognostic state `U = (v, T, S)` at a time. `T` and `S` are anomalies
/// about the reference values `T_r`, `S_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct State<R> {
    pub fields: Fields<R>,
    pub time: R,
}

impl<R: Real> State<R> {
    pub fn zeros(grid: &Grid<R>) -> Self {
        Self {
            fields: Fields::zeros(grid),
            time: R::zero(),
        }
    }

    pub fn from_fields(fields: Fields<R>, time: R) -> Self {
        Self { fields, time }
    }

    pub fn u(&self) -> &ScalarField<R> {
        self.fields.u()
    }
    pub fn v(&self) -> &ScalarField<R> {
        self.fields.v()
    }
    pub fn temp(&self) -> &ScalarField<R> {
        self.fields.temp()
    }
    pub fn salt(&self) -> &ScalarField<R> {
        self.fields.salt()
    }

    /// Sets the ghost layers so the boundary conditions hold.
    pub fn fill_ghosts(&mut self) {
        self.fields.fill_ghosts();
    }

    /// Subtracts the discrete domain mean of T and S (membership in H).
    pub fn remove_tracer_means(&mut self) {
        for c in [Component::Temp, Component::Salt] {
            let f = &mut self.fields[c];
            let m = f.mean();
            f.update_interior(|_, _, _, x| x - m);
            f.fill_ghosts();
        }
    }

    pub fn is_finite(&self) -> bool {
        self.fields.is_finite()
    }
}

impl<R> Index<Component> for State<R> {
    type Output = ScalarField<R>;
    fn index(&self, c: Component) -> &ScalarField<R> {
        &self.fields[c]
    }
}

impl<R> IndexMut<Component> for State<R> {
    fn index_mut(&mut self, c: Component) -> &mut ScalarField<R> {
        &mut self.fields[c]
    }
}

/// Returns a copy with every ghost layer consistent with the boundary conditions.
pub fn apply_bcs<R: Real>(state: &State<R>) -> State<R> {
    let mut out = state.clone();
    out.fill_ghosts();
    out
}

/// Viscosity pair used by the Dirichlet form `mu |grad_h f|^2 + nu |dz f|^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diffusivity<R> {
    pub mu: R,
    pub nu: R,
}

impl<R: Real> Diffusivity<R> {
    pub fn new(mu: R, nu: R) -> Self {
        Self { mu, nu }
    }
    pub fn unit() -> Self {
        Self::new(R::one(), R::one())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind<R> {
    L2,
    /// Square root of the weighted Dirichlet form.
    H1,
    Lp(R),
    /// Inner vertical `L^pz`, outer horizontal `L^q`.
    Aniso { q: R, pz: R },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerKind {
    L2,
    V,
}

/// Midpoint-rule `L2` inner product of two fields.
pub fn l2_inner_field<R: Real>(grid: &Grid<R>, a: &ScalarField<R>, b: &ScalarField<R>) -> R {
    a.dot(b) * grid.weight(a.bc())
}

/// Discrete Dirichlet form `mu (grad_h a, grad_h b) + nu (dz a, dz b)` summed
/// over faces. Boundary faces carry the weight that makes it equal to
/// `(A a, b)` exactly for the ghost-based second differences.
pub fn dirichlet_form<R: Real>(
    grid: &Grid<R>,
    a: &ScalarField<R>,
    b: &ScalarField<R>,
    coeff: Diffusivity<R>,
) -> R {
    let (n1, n2, nz) = a.dims();
    let (n1, n2, nz) = (n1 as isize, n2 as isize, nz as isize);
    let (sy, sz) = a.strides();
    let ad = a.raw();
    let bd = b.raw();
    let wl: R = boundary_face_weight(a.bc().lateral());
    let wv: R = boundary_face_weight(a.bc().vertical());
    let (dx2, dy2, dz2) = (grid.dx * grid.dx, grid.dy * grid.dy, grid.dz * grid.dz);

    let mut sx = R::zero();
    let mut syy = R::zero();
    let mut szz = R::zero();
    for k in 0..nz {
        for j in 0..n2 {
            for i in -1..n1 {
                let n = a.idx(i, j, k);
                let w = if i == -1 || i == n1 - 1 { wl } else { R::one() };
                sx += w * (ad[n + 1] - ad[n]) * (bd[n + 1] - bd[n]);
            }
        }
        for j in -1..n2 {
            let w = if j == -1 || j == n2 - 1 { wl } else { R::one() };
            for i in 0..n1 {
                let n = a.idx(i, j, k);
                syy += w * (ad[n + sy] - ad[n]) * (bd[n + sy] - bd[n]);
            }
        }
    }
    if !a.bc().is_surface() {
        for k in -1..nz {
            let w = if k == -1 || k == nz - 1 { wv } else { R::one() };
            for j in 0..n2 {
                for i in 0..n1 {
                    let n = a.idx(i, j, k);
                    szz += w * (ad[n + sz] - ad[n]) * (bd[n + sz] - bd[n]);
                }
            }
        }
    }
    let horiz = sx / dx2 + syy / dy2;
    (coeff.mu * horiz + coeff.nu * szz / dz2) * grid.weight(a.bc())
}

/// Norm of a set of fields treated as one vector-valued field. `coeffs`
/// supplies the Dirichlet-form weights for `H1` (one per field).
pub fn norm_fields<R: Real>(
    grid: &Grid<R>,
    fields: &[&ScalarField<R>],
    kind: NormKind<R>,
    coeffs: &[Diffusivity<R>],
) -> Result<R> {
    match kind {
        NormKind::L2 => Ok(fields
            .iter()
            .map(|f| l2_inner_field(grid, f, f))
            .sum::<R>()
            .sqrt()),
        NormKind::H1 => {
            if coeffs.len() != fields.len() {
                return Err(Error::UnsupportedKind(
                    "H1 needs one diffusivity per field".into(),
                ));
            }
            Ok(fields
                .iter()
                .zip(coeffs)
                .map(|(f, &c)| dirichlet_form(grid, f, f, c))
                .sum::<R>()
                .sqrt())
        }
        NormKind::Lp(p) => {
            if !(p >= R::one()) {
                return Err(Error::UnsupportedKind(format!("Lp with p = {p} < 1")));
            }
            let mut s = R::zero();
            for f in fields {
                let w = grid.weight(f.bc());
                f.for_each_interior(|_, _, _, v| s += v.abs().powf(p) * w);
            }
            Ok(s.powf(R::one() / p))
        }
        NormKind::Aniso { q, pz } => {
            if !(q >= R::one()) || !(pz >= R::one()) {
                return Err(Error::UnsupportedKind(format!(
                    "anisotropic norm with q = {q}, pz = {pz}"
                )));
            }
            let Some(first) = fields.first() else {
                return Ok(R::zero());
            };
            let (n1, n2, nz) = first.dims();
            let mut outer = R::zero();
            for j in 0..n2 {
                for i in 0..n1 {
                    let mut col = R::zero();
                    for f in fields {
                        for k in 0..nz {
                            col += f.get(i, j, k).abs().powf(pz);
                        }
                    }
                    let col = (col * grid.dz).powf(R::one() / pz);
                    outer += col.powf(q);
                }
            }
            Ok((outer * grid.cell_area()).powf(R::one() / q))
        }
    }
}

/// Norm of a single field.
pub fn norm<R: Real>(
    grid: &Grid<R>,
    field: &ScalarField<R>,
    kind: NormKind<R>,
    coeff: Diffusivity<R>,
) -> Result<R> {
    norm_fields(grid, &[field], kind, &[coeff])
}

/// Norm of a full state; `H1` is the weighted `V` norm with the component
/// viscosities from `params`.
pub fn state_norm<R: Real>(
    grid: &Grid<R>,
    state: &State<R>,
    kind: NormKind<R>,
    params: &PhysParams<R>,
) -> Result<R> {
    let fields: Vec<&ScalarField<R>> = state.fields.comps.iter().collect();
    let coeffs: Vec<Diffusivity<R>> = Component::ALL.iter().map(|&c| params.diffusivity(c)).collect();
    norm_fields(grid, &fields, kind, &coeffs)
}

fn check_same_grid<R: Real>(a: &Fields<R>, b: &Fields<R>) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{:?} vs {:?}",
            a.u().dims(),
            b.u().dims()
        )))
    }
}

/// `L2` or `V` inner product of two sets of prognostic fields.
pub fn inner_fields<R: Real>(
    grid: &Grid<R>,
    a: &Fields<R>,
    b: &Fields<R>,
    kind: InnerKind,
    params: &PhysParams<R>,
) -> Result<R> {
    check_same_grid(a, b)?;
    Ok(Component::ALL
        .iter()
        .map(|&c| match kind {
            InnerKind::L2 => l2_inner_field(grid, &a[c], &b[c]),
            InnerKind::V => dirichlet_form(grid, &a[c], &b[c], params.diffusivity(c)),
        })
        .sum())
}

pub fn inner<R: Real>(
    grid: &Grid<R>,
    a: &State<R>,
    b: &State<R>,
    kind: InnerKind,
    params: &PhysParams<R>,
) -> Result<R> {
    inner_fields(grid, &a.fields, &b.fields, kind, params)
}
