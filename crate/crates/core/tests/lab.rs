use hsto_core::grid::{make_grid, Component, GridSpec, State};
use hsto_core::lab::gronwall::{check_hypothesis, generate_instance, gronwall_bound, GronwallInput};
use hsto_core::lab::identities::{dz_direct_step, dz_identity_residual, l4_identity_residual, l4_split_step};
use hsto_core::lab::inequalities::{
    b_bound_sides, random_triples, random_velocity_set, verify_aniso_embedding, verify_b_bound, verify_dissipation,
};
use hsto_core::modes::{random_smooth_field, random_state};
use hsto_core::noise::{sample_increment, NoiseIncrement, NoiseKind, NoiseModel};
use hsto_core::operators::{DriftTerms, PhysParams};
use hsto_core::stepping::{SplitState, Stepper};
use hsto_core::{Error, Grid64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid(n: usize) -> Grid64 {
    make_grid(GridSpec::cube(n)).unwrap()
}

#[test]
fn gronwall_generated_instances_are_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let input = generate_instance(&mut rng, 200);
        check_hypothesis(&input).unwrap();
        let b = gronwall_bound(&input).unwrap();
        let sup = input.x.iter().copied().fold(0.0, f64::max);
        assert!(sup <= b.bound, "sup {sup} > bound {}", b.bound);
    }
}

#[test]
fn gronwall_h_part_is_linear() {
    let n = 51;
    let mk = |h: f64| GronwallInput {
        t: 2.0,
        p: 1.5,
        f: vec![1.0; n],
        g: vec![0.0; n],
        h: vec![h; n],
        x: vec![0.5; n],
    };
    let a = gronwall_bound(&mk(1.0)).unwrap();
    let b = gronwall_bound(&mk(2.0)).unwrap();
    assert_eq!(a.c, b.c);
    assert!(((b.bound - b.c) - 2.0 * (a.bound - a.c)).abs() < 1e-12);
}

#[test]
fn gronwall_constant_example_by_hand() {
    // f = 1 gives M = max(2, 1) + margin; g = 0 leaves eps unconstrained.
    let n = 21;
    let input = GronwallInput {
        t: 1.0,
        p: 1.0,
        f: vec![1.0; n],
        g: vec![0.0; n],
        h: vec![0.0; n],
        x: vec![1.0; n],
    };
    let b = gronwall_bound(&input).unwrap();
    assert!((b.bound - 4.0).abs() < 1e-8);
}

#[test]
fn gronwall_rejects_mismatched_lengths() {
    let input = GronwallInput {
        t: 1.0,
        p: 1.0,
        f: vec![1.0; 3],
        g: vec![0.0; 4],
        h: vec![0.0; 3],
        x: vec![0.0; 3],
    };
    assert!(matches!(gronwall_bound(&input), Err(Error::InvalidValue { .. })));
}

#[test]
fn embedding_ratio_is_scale_invariant() {
    let g = grid(8);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let set = random_velocity_set(&g, 4, 6, &mut rng);
    let scaled: Vec<_> = set.iter().map(|[u, v]| [u.scaled(10.0), v.scaled(10.0)]).collect();
    let a = verify_aniso_embedding(&g, &set, 12.0).unwrap();
    let b = verify_aniso_embedding(&g, &scaled, 12.0).unwrap();
    for (x, y) in a.ratios.iter().zip(&b.ratios) {
        assert!((x - y).abs() < 1e-12 * x.abs());
    }
}

#[test]
fn zero_field_is_skipped() {
    let g = grid(8);
    let set = vec![[g.zeros(Component::U.bc()), g.zeros(Component::V.bc())]];
    let rep = verify_aniso_embedding(&g, &set, 12.0).unwrap();
    assert_eq!(rep.skipped, 1);
    assert!(rep.ratios.is_empty());
}

#[test]
fn b_bound_is_scale_invariant_and_zero_when_orthogonal() {
    let g = grid(8);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut t = random_triples(&g, 1, 6, &mut rng).remove(0);
    let (l, r) = b_bound_sides(&g, &t);
    let mut big = t.clone();
    big.u.fields.scale(10.0);
    big.sharp.fields.scale(10.0);
    big.flat.scale(10.0);
    let (lb, rb) = b_bound_sides(&g, &big);
    assert!((l / r - lb / rb).abs() < 1e-12 * (l / r));

    // Remove the component of U_flat along B(U, U#).
    let b = hsto_core::operators::apply_b(&g, &t.u.fields, &t.sharp.fields);
    let ip = hsto_core::grid::inner_fields(&g, &b, &t.flat, hsto_core::grid::InnerKind::L2, &PhysParams::default()).unwrap();
    let bb = hsto_core::grid::inner_fields(&g, &b, &b, hsto_core::grid::InnerKind::L2, &PhysParams::default()).unwrap();
    t.flat.axpy(-ip / bb, &b);
    let rep = verify_b_bound(&g, &[t]);
    assert!(rep.max() < 1e-12);
}

#[test]
fn dissipation_trivial_cases() {
    let g = grid(8);
    let p = PhysParams::default();
    let z = g.zeros(Component::U.bc());
    assert_eq!(verify_dissipation(&g, &z, &z, &p), (0.0, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn dissipation_bound_holds(seed in any::<u64>(), mu in 1e-3f64..1.0, nu in 1e-3f64..1.0) {
        let g = grid(8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_smooth_field(&g, Component::U, 8, &mut rng);
        let v = random_smooth_field(&g, Component::V, 8, &mut rng);
        let p = PhysParams::default().with_viscosity(mu, nu);
        let (l, r) = verify_dissipation(&g, &u, &v, &p);
        prop_assert!(l <= r);
    }
}

fn l4_residual_max(dt: f64, terms: DriftTerms, steps: usize) -> f64 {
    let g = grid(8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let u0 = random_state(&g, 0.5, 6, &mut rng);
    let mut stepper = Stepper::new(g.clone(), PhysParams::default().with_viscosity(0.05, 0.05), NoiseModel::none(&g), hsto_core::grid::Fields::zeros(&g), dt)
        .with_terms(terms);
    let mut s = SplitState::new(&g, &u0);
    let mut probes = Vec::new();
    for _ in 0..steps {
        let inc = NoiseIncrement::zero(0, dt);
        let eval = s.sum();
        let (next, p) = l4_split_step(&mut stepper, &s, &inc, &eval).unwrap();
        probes.push(p);
        s = next;
    }
    let res = l4_identity_residual(&probes).unwrap();
    res.iter().fold(0.0, |a, r| a.max(r.abs()))
}

#[test]
fn l4_residual_vanishes_for_zero_state() {
    assert_eq!(l4_residual_max(0.01, DriftTerms::ALL, 0), 0.0);
    let g = grid(8);
    let mut stepper = Stepper::new(g.clone(), PhysParams::default(), NoiseModel::none(&g), hsto_core::grid::Fields::zeros(&g), 0.01);
    let s = SplitState::new(&g, &State::zeros(&g));
    let (_, p) = l4_split_step(&mut stepper, &s, &NoiseIncrement::zero(0, 0.01), &State::zeros(&g)).unwrap();
    assert_eq!(l4_identity_residual(&[p]).unwrap(), vec![0.0]);
}

#[test]
fn l4_residual_halves_with_dt() {
    for terms in [DriftTerms::LINEAR, DriftTerms::ALL] {
        let t = 0.2;
        let r: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&dt| l4_residual_max(dt, terms, (t / dt) as usize))
            .collect();
        let o1 = (r[0] / r[1]).log2();
        let o2 = (r[1] / r[2]).log2();
        assert!(o1 > 0.9 && o2 > 0.9, "{terms:?}: {r:?}");
    }
}

#[test]
fn l4_residual_reports_missing_terms() {
    let p = hsto_core::lab::identities::L4Probe {
        t: 0.0,
        dt: 0.1,
        x_before: 0.0,
        x_after: 0.0,
        dissipation: 0.0,
        j: [Some(0.0), None, Some(0.0), Some(0.0), Some(0.0), Some(0.0), Some(0.0)],
    };
    assert!(matches!(l4_identity_residual(&[p]), Err(Error::MissingTerms(_))));
}

struct DzOutcome {
    residual: [f64; 2],
    ito: [f64; 2],
}

fn dz_run(dt: f64, steps: usize, noise: NoiseModel<f64>, seed: u64, terms: DriftTerms) -> DzOutcome {
    let g = grid(8);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut u = random_state(&g, 0.5, 6, &mut rng);
    u.remove_tracer_means();
    let k = noise.len();
    let mut stepper = Stepper::new(g.clone(), PhysParams::default().with_viscosity(0.05, 0.05), noise, hsto_core::grid::Fields::zeros(&g), dt)
        .with_terms(terms);
    u = stepper.constrain(u.fields.clone(), 0.0).unwrap();
    let mut probes = Vec::new();
    for n in 0..steps {
        let inc = sample_increment(seed, n as u64, k, dt);
        let (next, p) = dz_direct_step(&mut stepper, &u, &inc).unwrap();
        probes.push(p);
        u = next;
    }
    let r = dz_identity_residual(&probes).unwrap();
    let mut ito = [0.0; 2];
    for p in &probes {
        let i = p.ito.unwrap();
        ito[0] += i[0];
        ito[1] += i[1];
    }
    DzOutcome {
        residual: [*r[0].last().unwrap_or(&0.0), *r[1].last().unwrap_or(&0.0)],
        ito,
    }
}

#[test]
fn dz_residual_halves_with_dt_deterministic() {
    let g = grid(8);
    let t = 0.2;
    let r: Vec<[f64; 2]> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| dz_run(dt, (t / dt) as usize, NoiseModel::none(&g), 0, DriftTerms::LINEAR).residual)
        .collect();
    for grp in 0..2 {
        let o = (r[1][grp] / r[2][grp]).abs().log2();
        assert!(o > 0.9, "group {grp}: {r:?}");
    }
}

#[test]
fn dz_residual_noisy_mean_is_zero() {
    let g = grid(8);
    let noise = NoiseModel::with_defaults(&g, NoiseKind::LinearMultiplicative, 8, 1.0);
    let runs: Vec<DzOutcome> = (0..200).map(|seed| dz_run(0.001, 50, noise.clone(), seed, DriftTerms::ALL)).collect();
    for grp in 0..2 {
        let xs: Vec<f64> = runs.iter().map(|r| r.residual[grp]).collect();
        let (m, se) = hsto_core::noise::mean_se(&xs);
        assert!(m.abs() <= 3.0 * se, "group {grp}: mean {m} se {se}");
        // Without the Itô correction the balance would be far off.
        let without: Vec<f64> = runs.iter().map(|r| r.residual[grp] + r.ito[grp]).collect();
        let (m, se) = hsto_core::noise::mean_se(&without);
        assert!(m.abs() > 3.0 * se, "group {grp}: correction not detectable");
    }
}
