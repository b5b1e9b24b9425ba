//! Fast diagonalization of the ghost-based second-difference operators.
//!
//! Each 1D second difference with mirrored, odd, or zero ghosts has a closed
//! form orthogonal eigenbasis (discrete cosine / sine transforms). Separable
//! operators such as `I + dt A` are inverted exactly by transforming, dividing
//! by the symbol, and transforming back.

use crate::grid::{BcKind, Ghost, Grid, ScalarField};
use crate::real::Real;

/// Orthonormal eigenbasis of the 1D negative second difference.
#[derive(Clone, Debug)]
pub struct Basis1d<R> {
    n: usize,
    /// Row-major `n x n`, entry `(i, m)` = mode `m` at node `i`.
    mat: Vec<R>,
    eig: Vec<R>,
}

impl<R: Real> Basis1d<R> {
    pub fn new(n: usize, spacing: R, ghost: Ghost) -> Self {
        let pi = std::f64::consts::PI;
        let nf = n as f64;
        let mut mat = vec![R::zero(); n * n];
        let mut eig = Vec::with_capacity(n);
        let h = spacing.to_f64_lossy();
        for m in 0..n {
            let (wave, lam): (Box<dyn Fn(f64) -> f64>, f64) = match ghost {
                Ghost::Mirror => {
                    let k = m as f64 * pi / nf;
                    (
                        Box::new(move |i| (k * (i + 0.5)).cos()),
                        (2.0 / h * (k / 2.0).sin()).powi(2),
                    )
                }
                Ghost::Odd => {
                    let k = (m + 1) as f64 * pi / nf;
                    (
                        Box::new(move |i| (k * (i + 0.5)).sin()),
                        (2.0 / h * (k / 2.0).sin()).powi(2),
                    )
                }
                Ghost::Zero => {
                    let k = (m + 1) as f64 * pi / (nf + 1.0);
                    (
                        Box::new(move |i| (k * (i + 1.0)).sin()),
                        (2.0 / h * (k / 2.0).sin()).powi(2),
                    )
                }
            };
            let col: Vec<f64> = (0..n).map(|i| wave(i as f64)).collect();
            let nrm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (i, v) in col.iter().enumerate() {
                mat[i * n + m] = R::c(v / nrm);
            }
            eig.push(R::c(lam));
        }
        Self { n, mat, eig }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn eigenvalues(&self) -> &[R] {
        &self.eig
    }

    /// Value of mode `m` at node `i`.
    pub fn mode(&self, i: usize, m: usize) -> R {
        self.mat[i * self.n + m]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    Forward,
    Backward,
}

/// Applies a 1D basis along one axis of a dense `(n1, n2, nz)` array.
fn transform_axis<R: Real>(
    data: &mut [R],
    dims: (usize, usize, usize),
    axis: usize,
    basis: &Basis1d<R>,
    dir: Dir,
    scratch: &mut Vec<R>,
) {
    let (n1, n2, nz) = dims;
    let (len, stride) = match axis {
        0 => (n1, 1),
        1 => (n2, n1),
        _ => (nz, n1 * n2),
    };
    debug_assert_eq!(len, basis.n);
    scratch.resize(len, R::zero());
    let lines: Vec<usize> = match axis {
        0 => (0..n2 * nz).map(|l| l * n1).collect(),
        1 => (0..nz)
            .flat_map(|k| (0..n1).map(move |i| k * n1 * n2 + i))
            .collect(),
        _ => (0..n1 * n2).collect(),
    };
    for start in lines {
        for (s, slot) in scratch.iter_mut().enumerate() {
            let mut acc = R::zero();
            for t in 0..len {
                let m = match dir {
                    Dir::Forward => basis.mat[t * len + s],
                    Dir::Backward => basis.mat[s * len + t],
                };
                acc += m * data[start + t * stride];
            }
            *slot = acc;
        }
        for (s, &v) in scratch.iter().enumerate() {
            data[start + s * stride] = v;
        }
    }
}

/// Separable solver for operators diagonal in the tensor eigenbasis of a
/// field kind.
#[derive(Clone, Debug)]
pub struct SeparableSolver<R> {
    bc: BcKind,
    dims: (usize, usize, usize),
    bx: Basis1d<R>,
    by: Basis1d<R>,
    bz: Option<Basis1d<R>>,
}

impl<R: Real> SeparableSolver<R> {
    pub fn new(grid: &Grid<R>, bc: BcKind) -> Self {
        let (n1, n2, nz) = grid.zeros(bc).dims();
        let lat = bc.lateral();
        let bz = (!bc.is_surface()).then(|| Basis1d::new(nz, grid.dz, bc.vertical()));
        Self {
            bc,
            dims: (n1, n2, nz),
            bx: Basis1d::new(n1, grid.dx, lat),
            by: Basis1d::new(n2, grid.dy, lat),
            bz,
        }
    }

    pub fn bc(&self) -> BcKind {
        self.bc
    }

    /// Eigenvalues of `-dxx`, `-dyy`, `-dzz` for the mode `(mx, my, mz)`.
    pub fn eig(&self, mx: usize, my: usize, mz: usize) -> (R, R, R) {
        (
            self.bx.eig[mx],
            self.by.eig[my],
            self.bz.as_ref().map_or(R::zero(), |b| b.eig[mz]),
        )
    }

    pub fn basis(&self, axis: usize) -> Option<&Basis1d<R>> {
        match axis {
            0 => Some(&self.bx),
            1 => Some(&self.by),
            _ => self.bz.as_ref(),
        }
    }

    /// Coefficients of `f` in the orthonormal eigenbasis, layout `(mx, my, mz)`
    /// with `mx` fastest.
    pub fn forward(&self, f: &ScalarField<R>) -> Vec<R> {
        let mut data = f.interior();
        let mut scratch = Vec::new();
        transform_axis(&mut data, self.dims, 0, &self.bx, Dir::Forward, &mut scratch);
        transform_axis(&mut data, self.dims, 1, &self.by, Dir::Forward, &mut scratch);
        if let Some(bz) = &self.bz {
            transform_axis(&mut data, self.dims, 2, bz, Dir::Forward, &mut scratch);
        }
        data
    }

    pub fn backward(&self, mut coeffs: Vec<R>) -> ScalarField<R> {
        let mut scratch = Vec::new();
        if let Some(bz) = &self.bz {
            transform_axis(&mut coeffs, self.dims, 2, bz, Dir::Backward, &mut scratch);
        }
        transform_axis(&mut coeffs, self.dims, 1, &self.by, Dir::Backward, &mut scratch);
        transform_axis(&mut coeffs, self.dims, 0, &self.bx, Dir::Backward, &mut scratch);
        let (n1, n2, nz) = self.dims;
        ScalarField::from_interior(n1, n2, nz, self.bc, &coeffs)
    }

    /// Applies the multiplier `symbol(lx, ly, lz)` in the eigenbasis.
    pub fn apply_symbol(&self, f: &ScalarField<R>, symbol: impl Fn(R, R, R) -> R) -> ScalarField<R> {
        let mut c = self.forward(f);
        let (n1, n2, nz) = self.dims;
        for mz in 0..nz {
            for my in 0..n2 {
                for mx in 0..n1 {
                    let (lx, ly, lz) = self.eig(mx, my, mz);
                    c[(mz * n2 + my) * n1 + mx] *= symbol(lx, ly, lz);
                }
            }
        }
        self.backward(c)
    }

    /// Solves `(I + dt A) x = f` with `A = -mu (dxx + dyy) - nu dzz`.
    pub fn helmholtz(&self, f: &ScalarField<R>, dt: R, mu: R, nu: R) -> ScalarField<R> {
        self.apply_symbol(f, |lx, ly, lz| R::one() / (R::one() + dt * (mu * (lx + ly) + nu * lz)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridSpec};
    use crate::operators::apply_a_field;
    use crate::grid::Diffusivity;

    #[test]
    fn bases_are_orthonormal() {
        for g in [Ghost::Mirror, Ghost::Odd, Ghost::Zero] {
            let b = Basis1d::<f64>::new(7, 0.1, g);
            for a in 0..7 {
                for c in 0..7 {
                    let s: f64 = (0..7).map(|i| b.mode(i, a) * b.mode(i, c)).sum();
                    let want = if a == c { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-13, "{g:?} {a} {c} {s}");
                }
            }
        }
    }

    #[test]
    fn helmholtz_inverts_operator() {
        let grid = make_grid(GridSpec::new(1.0, 2.0, 0.5, 6, 5, 4)).unwrap();
        for bc in [
            BcKind::Tracer,
            BcKind::Velocity,
            BcKind::DzVelocity,
            BcKind::DzTracer,
            BcKind::Surface,
            BcKind::SurfaceVelocity,
        ] {
            let f = grid.sample(bc, |x: f64, y: f64, z: f64| (3.0 * x).sin() + x * y - z * z * 2.0 + 0.3);
            let s = SeparableSolver::new(&grid, bc);
            let (dt, mu, nu) = (0.3, 0.7, 0.2);
            let x = s.helmholtz(&f, dt, mu, nu);
            let ax = apply_a_field(&grid, &x, Diffusivity::new(mu, nu));
            let mut back = x.clone();
            back.axpy(dt, &ax);
            back.update_interior(|i, j, k, v| v - f.get(i, j, k));
            assert!(back.max_abs() < 1e-12, "{bc:?}: {}", back.max_abs());
        }
    }
}
