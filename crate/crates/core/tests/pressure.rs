use hsto_core::grid::{make_grid, BcKind, Component, Fields, GridSpec, State};
use hsto_core::modes::{random_rough_field, random_smooth_field, random_state};
use hsto_core::operators::*;
use hsto_core::pressure::*;
use hsto_core::{Error, Grid64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn grid() -> Grid64 {
    make_grid(GridSpec::new(1.0, 1.5, 0.5, 8, 6, 5)).unwrap()
}

#[test]
fn vertical_average_examples() {
    let g = grid();
    let f = g.sample(BcKind::Tracer, |x, y, _| (3.0 * x).sin() + y);
    let a = vertical_average(&f);
    assert_eq!(a.bc(), BcKind::Surface);
    a.for_each_interior(|i, j, _, v| {
        assert!((v - f.get(i, j, 0)).abs() < 1e-15);
    });
    let z = g.sample(BcKind::Tracer, |_, _, z| z);
    vertical_average(&z).for_each_interior(|_, _, _, v| assert!((v + 0.25).abs() < 1e-15));
}

#[test]
fn averaged_forcing_isolated_terms() {
    let g = grid();
    let p = PhysParams::<f64>::default();
    let zero = Fields::zeros(&g);
    let (gx, gy) = averaged_forcing_g(&g, &zero, &zero, &p);
    assert_eq!(gx.max_abs() + gy.max_abs(), 0.0);

    let mut f = Fields::zeros(&g);
    f[Component::U].fill(0.3);
    f[Component::V].fill(-0.7);
    let (gx, gy) = averaged_forcing_g(&g, &zero, &f, &p);
    gx.for_each_interior(|_, _, _, v| assert!((v - p.rho0 * 0.3).abs() < 1e-12));
    gy.for_each_interior(|_, _, _, v| assert!((v + p.rho0 * 0.7).abs() < 1e-12));
}

/// Column means of `w dz v` and `(div v) v` for a barotropically
/// divergence-free velocity.
fn column_identity_error(nz: usize) -> f64 {
    let g: Grid64 = make_grid(GridSpec::new(1.0, 1.0, 1.0, 8, 8, nz)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = random_smooth_field(&g, Component::U, 6, &mut rng);
    let v = random_smooth_field(&g, Component::V, 6, &mut rng);
    let w = diagnostic_w(&g, &u, &v);
    let div = horizontal_divergence(&g, &u, &v);
    let mut err: f64 = 0.0;
    for f in [&u, &v] {
        let dz = centered_diff(&g, f, Axis::Z);
        let lhs = vertical_average(&w.mul(&dz).with_bc(BcKind::Tracer));
        let rhs = vertical_average(&div.mul(f).with_bc(BcKind::Tracer));
        err = err.max(lhs.sub(&rhs).max_abs());
    }
    err
}

#[test]
fn column_identity_for_vertical_advection() {
    let e: Vec<f64> = [8, 16, 32].iter().map(|&n| column_identity_error(n)).collect();
    assert!(e[2] < 1e-2, "{e:?}");
    assert!((e[1] / e[2]).log2() > 1.8, "{e:?}");
}

#[test]
fn surface_pressure_trivial_cases() {
    let g = grid();
    let p = PhysParams::<f64>::default();
    let zero = Fields::zeros(&g);
    assert_eq!(solve_surface_pressure(&g, &zero, &zero, &p, 1e-10).unwrap().max_abs(), 0.0);

    // A discretely divergence-free barotropic tendency needs no pressure.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut tend = Fields::zeros(&g);
    let (mut a, mut b) = (
        random_rough_field(&g, BcKind::Velocity, &mut rng),
        random_rough_field(&g, BcKind::Velocity, &mut rng),
    );
    project_velocity(&g, &mut a, &mut b, &PoissonMethod::Cg { tol: 1e-13 }, None).unwrap();
    tend[Component::U] = a;
    tend[Component::V] = b;
    let ps = surface_pressure_from_tendency(&g, &tend, &p, &PoissonMethod::cg_default()).unwrap();
    assert!(ps.max_abs() < 1e-7 * p.rho0, "{}", ps.max_abs());
}

#[test]
fn manufactured_surface_pressure() {
    let (l1, l2) = (1.0, 1.5);
    let err = |n: usize| {
        let g: Grid64 = make_grid(GridSpec::new(l1, l2, 0.5, n, n, 4)).unwrap();
        let exact = g.sample(BcKind::Surface, |x, y, _| (PI * x / l1).cos() * (PI * y / l2).cos());
        let mut b = exact.scaled((PI / l1).powi(2) + (PI / l2).powi(2));
        b.fill_ghosts();
        let (x, rep) = cg_solve(&g, &b, None, 1e-12).unwrap();
        assert!(rep.iterations > 0);
        let mean = exact.mean();
        let mut e: f64 = 0.0;
        x.for_each_interior(|i, j, _, v| e = e.max((v - (exact.get(i, j, 0) - mean)).abs()));
        e
    };
    let (e1, e2) = (err(16), err(32));
    assert!(e2 < 1e-2);
    assert!(e1 / e2 > 3.5, "{e1} {e2}");
}

#[test]
fn cg_energy_error_is_monotone() {
    let g: Grid64 = make_grid(GridSpec::new(1.0, 1.0, 1.0, 16, 12, 4)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let b = random_rough_field(&g, BcKind::Surface, &mut rng);
    let exact = SpectralPoisson::new(&g).solve(&b);
    let energy = |x: &hsto_core::Field64| {
        let e = x.sub(&exact);
        e.dot(&neg_laplacian(&g, &e))
    };
    let mut errs = vec![energy(&g.zeros(BcKind::Surface))];
    let (x, rep) = cg_solve_with(&g, &b, None, 1e-12, |x| errs.push(energy(x))).unwrap();
    assert_eq!(errs.len(), rep.iterations + 1);
    for w in errs.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-24, "{} > {}", w[1], w[0]);
    }
    assert!(x.sub(&exact).max_abs() < 1e-9);
    assert!(rep.residuals.last().unwrap() <= &(1e-12 * rep.residuals[0].max(1e-300) * 10.0));
}

#[test]
fn zero_rhs_returns_zero() {
    let g = grid();
    let (x, rep) = cg_solve(&g, &g.zeros(BcKind::Surface), None, 1e-10).unwrap();
    assert_eq!(x.max_abs(), 0.0);
    assert_eq!(rep.iterations, 0);
}

#[test]
fn projection_removes_barotropic_divergence() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let s: State<f64> = random_state(&g, 1.0, 8, &mut rng);
    let (mut u, mut v) = (
        random_rough_field(&g, BcKind::Velocity, &mut rng),
        random_rough_field(&g, BcKind::Velocity, &mut rng),
    );
    u.axpy(1.0, s.u());
    v.axpy(1.0, s.v());
    assert!(barotropic_divergence(&g, &u, &v) > 1e-2);
    project_velocity(&g, &mut u, &mut v, &PoissonMethod::cg_default(), None).unwrap();
    assert!(barotropic_divergence(&g, &u, &v) < 1e-8);
}

#[test]
fn stokes_zero_case_and_invalid_exponent() {
    let rows = stokes_pressure_check(&[StokesCase::zero()], 8, 0.1, 4.0 / 3.0, 0.5).unwrap();
    assert_eq!(rows[0].lhs, 0.0);
    assert_eq!(rows[0].rhs, 0.0);
    assert_eq!(rows[0].ratio, 0.0);
    assert!(matches!(
        stokes_pressure_check(&[StokesCase::zero()], 8, 0.1, 2.5, 0.5),
        Err(Error::InvalidValue { .. })
    ));
}

#[test]
fn stokes_eigenmode_decay_integral() {
    let s = Stokes2d::<f64>::new(16, 0.1, 0.5).unwrap();
    let ((a, b), gamma) = slowest_stokes_mode(&s, 4000);
    assert!(gamma > 0.0 && gamma < 1.0);
    let case = StokesCase {
        q0: Some([a.interior(), b.interior()]),
        ..StokesCase::zero()
    };
    let r = 4.0 / 3.0;
    let (lhs, rhs) = s.run_case(&case, r);
    assert!((rhs - s.grad_sq(&a, &b)).abs() < 1e-9 * rhs);

    // Geometric sum of the one-step pressure gradient.
    let zero = (s.grid.zeros(BcKind::SurfaceVelocity), s.grid.zeros(BcKind::SurfaceVelocity));
    let (_, gp) = s.step(&(a.clone(), b.clone()), &zero);
    let g1 = s.lr_sq(&gp.0, &gp.1, r);
    let n = STOKES_STEPS as i32;
    let oracle = s.dt * g1 * (1.0 - gamma.powi(2 * n)) / (1.0 - gamma * gamma);
    assert!((lhs - oracle).abs() < 1e-3 * oracle, "{lhs} vs {oracle}");
    assert!(lhs.is_finite() && lhs / rhs < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn vertical_average_and_solve_are_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_rough_field(&g, BcKind::Tracer, &mut rng);
        let h = random_rough_field(&g, BcKind::Tracer, &mut rng);
        let mut comb = f.scaled(a);
        comb.axpy(b, &h);
        let mut want = vertical_average(&f).scaled(a);
        want.axpy(b, &vertical_average(&h));
        prop_assert!(vertical_average(&comb).sub(&want).max_abs() < 1e-13);

        let sp = SpectralPoisson::new(&g);
        let fs = vertical_average(&f);
        let hs = vertical_average(&h);
        let mut cs = fs.scaled(a);
        cs.axpy(b, &hs);
        let mut want = sp.solve(&fs).scaled(a);
        want.axpy(b, &sp.solve(&hs));
        prop_assert!(sp.solve(&cs).sub(&want).max_abs() < 1e-11);
    }
}
