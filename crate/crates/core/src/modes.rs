//! Smooth boundary-compatible shapes: products of sines and cosines that are
//! exact eigenvectors of the discrete operator `A`, plus random
//! combinations of them for tests and initial data.

use rand::Rng;

use crate::grid::{BcKind, Component, Fields, Grid, ScalarField, State};
use crate::operators::PhysParams;
use crate::real::Real;

/// Wavenumber triple `(l, m, n)`.
pub type Wave = (usize, usize, usize);

/// Continuous shape of mode `wave` for a component, evaluated at `(x, y, z)`.
/// Velocities use `sin(l pi x / L1) sin(m pi y / L2) cos(n pi (z + h) / h)`,
/// tracers use cosines in every direction.
pub fn shape_value(spec_l: (f64, f64, f64), c: Component, wave: Wave, x: f64, y: f64, z: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let (l1, l2, h) = spec_l;
    let (l, m, n) = (wave.0 as f64, wave.1 as f64, wave.2 as f64);
    let zf = (n * pi * (z + h) / h).cos();
    if c.is_velocity() {
        (l * pi * x / l1).sin() * (m * pi * y / l2).sin() * zf
    } else {
        (l * pi * x / l1).cos() * (m * pi * y / l2).cos() * zf
    }
}

fn extents<R: Real>(grid: &Grid<R>) -> (f64, f64, f64) {
    (
        grid.spec.l1.to_f64_lossy(),
        grid.spec.l2.to_f64_lossy(),
        grid.spec.h.to_f64_lossy(),
    )
}

/// Samples the analytic mode (not normalized).
pub fn mode_field<R: Real>(grid: &Grid<R>, c: Component, wave: Wave) -> ScalarField<R> {
    let ext = extents(grid);
    grid.sample(c.bc(), |x, y, z| {
        R::c(shape_value(ext, c, wave, x.to_f64_lossy(), y.to_f64_lossy(), z.to_f64_lossy()))
    })
}

/// Mode scaled to unit discrete `L2` norm.
pub fn unit_mode<R: Real>(grid: &Grid<R>, c: Component, wave: Wave) -> ScalarField<R> {
    let mut f = mode_field(grid, c, wave);
    let n = crate::grid::l2_inner_field(grid, &f, &f).sqrt();
    f.scale(R::one() / n);
    f
}

/// Whether the mode lies in the phase space: velocity modes need nonzero
/// horizontal indices and zero vertical mean, tracer modes zero domain mean.
pub fn admissible(c: Component, wave: Wave) -> bool {
    if c.is_velocity() {
        wave.0 >= 1 && wave.1 >= 1 && wave.2 >= 1
    } else {
        wave != (0, 0, 0)
    }
}

/// Admissible waves of a component ordered by `l^2 + m^2 + n^2`, then lexicographically.
pub fn lowest_waves(c: Component, count: usize) -> Vec<Wave> {
    let mut cap = 2;
    loop {
        let mut all: Vec<Wave> = (0..=cap)
            .flat_map(|l| (0..=cap).flat_map(move |m| (0..=cap).map(move |n| (l, m, n))))
            .filter(|&w| admissible(c, w))
            .collect();
        all.sort_by_key(|&(l, m, n)| (l * l + m * m + n * n, l, m, n));
        if all.len() >= count * 2 || cap > 64 {
            all.truncate(count);
            return all;
        }
        cap *= 2;
    }
}

/// Discrete eigenvalue of `A` (per component diffusivity) for a mode.
pub fn discrete_eigenvalue<R: Real>(grid: &Grid<R>, params: &PhysParams<R>, c: Component, wave: Wave) -> R {
    let d = params.diffusivity(c);
    let lam = |m: usize, n: usize, h: R| {
        let s = (R::c(m as f64) * R::PI() / (R::c(2.0) * R::from_usize_lossy(n))).sin();
        (R::c(2.0) / h * s).powi(2)
    };
    d.mu * (lam(wave.0, grid.n1(), grid.dx) + lam(wave.1, grid.n2(), grid.dy)) + d.nu * lam(wave.2, grid.nz(), grid.dz)
}

/// Continuum eigenvalue of `A` for a mode.
pub fn continuum_eigenvalue<R: Real>(grid: &Grid<R>, params: &PhysParams<R>, c: Component, wave: Wave) -> R {
    let d = params.diffusivity(c);
    let k = |m: usize, l: R| (R::c(m as f64) * R::PI() / l).powi(2);
    d.mu * (k(wave.0, grid.spec.l1) + k(wave.1, grid.spec.l2)) + d.nu * k(wave.2, grid.spec.h)
}

/// Random combination of the first `count` admissible modes of a component,
/// coefficients uniform in `[-1, 1]` damped by `1 / (1 + |wave|^2)`.
pub fn random_smooth_field<R: Real, G: Rng + ?Sized>(
    grid: &Grid<R>,
    c: Component,
    count: usize,
    rng: &mut G,
) -> ScalarField<R> {
    let waves = lowest_waves(c, count);
    let coeffs: Vec<f64> = waves
        .iter()
        .map(|&(l, m, n)| rng.random_range(-1.0..1.0) / (1.0 + (l * l + m * m + n * n) as f64))
        .collect();
    let ext = extents(grid);
    grid.sample(c.bc(), |x, y, z| {
        let (x, y, z) = (x.to_f64_lossy(), y.to_f64_lossy(), z.to_f64_lossy());
        R::c(waves
            .iter()
            .zip(&coeffs)
            .map(|(&w, &a)| a * shape_value(ext, c, w, x, y, z))
            .sum::<f64>())
    })
}

/// Random smooth state in the phase space: every component a random mode
/// combination scaled by `amplitude`.
pub fn random_state<R: Real, G: Rng + ?Sized>(grid: &Grid<R>, amplitude: R, count: usize, rng: &mut G) -> State<R> {
    let comps = Component::ALL.map(|c| {
        let mut f = random_smooth_field(grid, c, count, rng);
        f.scale(amplitude);
        f
    });
    State::from_fields(Fields { comps }, R::zero())
}

/// Random field of a given kind with independent uniform interior values
/// (rough, but boundary-compatible through its ghosts).
pub fn random_rough_field<R: Real, G: Rng + ?Sized>(grid: &Grid<R>, bc: BcKind, rng: &mut G) -> ScalarField<R> {
    let mut f = grid.zeros(bc);
    f.update_interior(|_, _, _, _| R::c(rng.random_range(-1.0..1.0)));
    f.fill_ghosts();
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Diffusivity, GridSpec};
    use crate::operators::apply_a_field;

    #[test]
    fn modes_are_discrete_eigenvectors() {
        let grid = make_grid(GridSpec::new(1.0, 2.0, 0.5, 8, 6, 5)).unwrap();
        let p = PhysParams::<f64>::default().with_viscosity(0.3, 0.7);
        for c in [Component::U, Component::Temp] {
            for w in lowest_waves(c, 6) {
                let f = unit_mode(&grid, c, w);
                let af = apply_a_field(&grid, &f, Diffusivity::new(0.3, 0.7));
                let lam = discrete_eigenvalue(&grid, &p, c, w);
                let mut d = af.clone();
                d.axpy(-lam, &f);
                assert!(d.max_abs() < 1e-10 * lam.max(1.0), "{c:?} {w:?}");
            }
        }
    }

    #[test]
    fn lowest_tracer_waves() {
        assert_eq!(
            lowest_waves(Component::Temp, 4),
            vec![(0, 0, 1), (0, 1, 0), (1, 0, 0), (0, 1, 1)]
        );
        assert_eq!(lowest_waves(Component::U, 1), vec![(1, 1, 1)]);
    }
}
