use hsto_core::grid::{
    apply_bcs, inner, make_grid, norm, state_norm, BcKind, Component, Diffusivity, GridSpec, InnerKind, NormKind, State,
};
use hsto_core::modes::random_state;
use hsto_core::operators::PhysParams;
use hsto_core::{Error, Grid64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn cube(n: usize) -> Grid64 {
    make_grid(GridSpec::cube(n)).unwrap()
}

#[test]
fn spec_arithmetic() {
    let g = make_grid(GridSpec::<f64>::new(1.0, 1.0, 1.0, 4, 4, 4)).unwrap();
    assert_eq!(g.node_count(), 64);
    assert_eq!(g.dx, 0.25);

    let g = make_grid(GridSpec::<f64>::new(2.0, 1.0, 0.5, 8, 4, 4)).unwrap();
    assert_eq!(g.dz, 0.125);
    let faces = g.z_faces();
    assert_eq!(faces.first().copied(), Some(-0.5));
    assert_eq!(faces.last().copied(), Some(0.0));

    assert!(matches!(
        make_grid(GridSpec::<f64>::new(1.0, 1.0, 1.0, 2, 4, 4)),
        Err(Error::InvalidSpec(_))
    ));
    assert!(make_grid(GridSpec::<f64>::new(-1.0, 1.0, 1.0, 4, 4, 4)).is_err());
}

fn random(seed: u64, n: usize) -> (Grid64, State<f64>) {
    let g = cube(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = State::zeros(&g);
    for c in Component::ALL {
        s[c] = hsto_core::modes::random_rough_field(&g, c.bc(), &mut rng);
    }
    (g, s)
}

#[test]
fn velocity_vanishes_on_lateral_boundary() {
    let (g, s) = random(1, 6);
    let s = apply_bcs(&s);
    let n = g.n1() as isize;
    for c in [Component::U, Component::V] {
        let f = &s[c];
        for k in 0..g.nz() as isize {
            for j in 0..n {
                assert_eq!(f.at(-1, j, k) + f.at(0, j, k), 0.0);
                assert_eq!(f.at(n, j, k) + f.at(n - 1, j, k), 0.0);
                assert_eq!(f.at(j, -1, k) + f.at(j, 0, k), 0.0);
            }
        }
    }
}

#[test]
fn tracer_vertical_derivative_vanishes_at_surface() {
    let (g, s) = random(2, 6);
    let s = apply_bcs(&s);
    let top = g.nz() as isize - 1;
    for c in [Component::Temp, Component::Salt, Component::U] {
        for j in 0..6 {
            for i in 0..6 {
                let d = (s[c].at(i, j, top + 1) - s[c].at(i, j, top)) / g.dz;
                assert_eq!(d, 0.0);
                let d = (s[c].at(i, j, 0) - s[c].at(i, j, -1)) / g.dz;
                assert_eq!(d, 0.0);
            }
        }
    }
}

#[test]
fn apply_bcs_is_idempotent() {
    let (_, s) = random(3, 5);
    let once = apply_bcs(&s);
    assert_eq!(apply_bcs(&once), once);
}

#[test]
fn constant_and_zero_norms() {
    let g = cube(8);
    let mut f = g.zeros(BcKind::Tracer);
    f.fill(-3.0);
    let n = norm(&g, &f, NormKind::L2, Diffusivity::unit()).unwrap();
    assert!((n - 3.0).abs() < 1e-13);
    assert!(norm(&g, &f, NormKind::H1, Diffusivity::unit()).unwrap().abs() < 1e-13);

    let z = State::zeros(&g);
    let p = PhysParams::default();
    for kind in [
        NormKind::L2,
        NormKind::H1,
        NormKind::Lp(4.0),
        NormKind::Aniso { q: 12.0, pz: 2.0 },
    ] {
        assert_eq!(state_norm(&g, &z, kind, &p).unwrap(), 0.0);
    }
    assert!(matches!(
        state_norm(&g, &z, NormKind::Lp(0.5), &p),
        Err(Error::UnsupportedKind(_))
    ));
}

#[test]
fn sine_norm_richardson() {
    let exact = 1.0 / 2f64.sqrt();
    let val = |n: usize| {
        let g = cube(n);
        let f = g.sample(BcKind::Tracer, |x, _, _| (2.0 * PI * x).sin());
        norm(&g, &f, NormKind::L2, Diffusivity::unit()).unwrap()
    };
    let (a, b, c) = (val(16), val(32), val(64));
    let r1 = (4.0 * b - a) / 3.0;
    let r2 = (4.0 * c - b) / 3.0;
    assert!((c - exact).abs() < 1e-3);
    assert!((r2 - exact).abs() <= (r1 - exact).abs() + 1e-14);
    assert!((r2 - exact).abs() < 1e-8);
}

#[test]
fn v_inner_of_fourier_mode_matches_hand_integral() {
    // f = cos(pi x) cos(pi y) cos(pi z) on the unit cube:
    // int |dx f|^2 = pi^2 / 8 for each direction.
    let (mu, nu) = (0.7, 0.3);
    let exact = (2.0 * mu + nu) * PI * PI / 8.0;
    let err = |n: usize| {
        let g = cube(n);
        let f = g.sample(BcKind::Tracer, |x, y, z| (PI * x).cos() * (PI * y).cos() * (PI * z).cos());
        let v = norm(&g, &f, NormKind::H1, Diffusivity::new(mu, nu)).unwrap().powi(2);
        (v - exact).abs()
    };
    let (e1, e2) = (err(16), err(32));
    assert!(e2 < 1e-2 * exact);
    assert!(e1 / e2 > 3.5, "{e1} {e2}");
}

#[test]
fn aniso_two_two_is_l2() {
    let g = cube(6);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = random_state(&g, 1.0, 5, &mut rng);
    let p = PhysParams::default();
    let a = state_norm(&g, &s, NormKind::Aniso { q: 2.0, pz: 2.0 }, &p).unwrap();
    let b = state_norm(&g, &s, NormKind::L2, &p).unwrap();
    assert!((a - b).abs() < 1e-13 * b);
}

#[test]
fn inner_rejects_grid_mismatch() {
    let a = State::zeros(&cube(4));
    let b = State::zeros(&cube(5));
    let p = PhysParams::default();
    assert!(matches!(
        inner(&cube(4), &a, &b, InnerKind::L2, &p),
        Err(Error::GridMismatch(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inner_is_symmetric_and_matches_norm(seed in any::<u64>()) {
        let (g, a) = random(seed, 5);
        let (_, b) = random(seed.wrapping_add(1), 5);
        let p = PhysParams::default();
        for kind in [InnerKind::L2, InnerKind::V] {
            let ab = inner(&g, &a, &b, kind, &p).unwrap();
            let ba = inner(&g, &b, &a, kind, &p).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-13 * ab.abs().max(1.0));
        }
        let aa = inner(&g, &a, &a, InnerKind::L2, &p).unwrap();
        let n = state_norm(&g, &a, NormKind::L2, &p).unwrap();
        prop_assert!((aa - n * n).abs() <= 1e-12 * aa);
        let vv = inner(&g, &a, &a, InnerKind::V, &p).unwrap();
        let n = state_norm(&g, &a, NormKind::H1, &p).unwrap();
        prop_assert!((vv - n * n).abs() <= 1e-12 * vv);
    }

    #[test]
    fn norms_are_homogeneous(seed in any::<u64>(), scale in -10.0f64..10.0) {
        let (g, a) = random(seed, 4);
        let mut b = a.clone();
        b.fields.scale(scale);
        let p = PhysParams::default();
        for kind in [NormKind::L2, NormKind::H1, NormKind::Lp(3.0), NormKind::Aniso { q: 6.0, pz: 2.0 }] {
            let na = state_norm(&g, &a, kind, &p).unwrap();
            let nb = state_norm(&g, &b, kind, &p).unwrap();
            prop_assert!((nb - scale.abs() * na).abs() <= 1e-12 * nb.max(1e-300));
        }
    }
}
