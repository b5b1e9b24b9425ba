use hsto_core::diagnostics::write_csv;
use hsto_core::grid::{make_grid, Component, Fields, GridSpec, State};
use hsto_core::modes::{discrete_eigenvalue, lowest_waves, random_state, unit_mode};
use hsto_core::noise::{sample_increment, NoiseIncrement, NoiseKind, NoiseModel};
use hsto_core::operators::{DriftTerms, PhysParams};
use hsto_core::stepping::*;
use hsto_core::{Error, Grid64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid(n: usize) -> Grid64 {
    make_grid(GridSpec::cube(n)).unwrap()
}

fn stepper(g: &Grid64, noise: NoiseModel<f64>, dt: f64, terms: DriftTerms) -> Stepper<f64> {
    Stepper::new(g.clone(), PhysParams::default(), noise, Fields::zeros(g), dt).with_terms(terms)
}

#[test]
fn zero_is_a_fixed_point() {
    let g = grid(6);
    let mut st = stepper(&g, NoiseModel::with_defaults(&g, NoiseKind::LinearMultiplicative, 8, 1.0), 0.1, DriftTerms::ALL);
    let mut u = State::zeros(&g);
    for n in 0..5 {
        u = st.step_direct(&u, &sample_increment(1, n, 8, 0.1)).unwrap();
    }
    for c in Component::ALL {
        assert_eq!(u[c].max_abs(), 0.0);
    }
    assert!((u.time - 0.5).abs() < 1e-15);
}

#[test]
fn single_mode_decays_by_implicit_factor() {
    let g = make_grid(GridSpec::new(1.0, 1.5, 0.5, 8, 6, 5)).unwrap();
    let p = PhysParams::default().with_viscosity(0.3, 0.05);
    let dt = 0.05;
    let mut st = Stepper::new(g.clone(), p, NoiseModel::none(&g), Fields::zeros(&g), dt).with_terms(DriftTerms::LINEAR);
    for c in Component::ALL {
        for wave in lowest_waves(c, 3) {
            let mut f = Fields::zeros(&g);
            f[c] = unit_mode(&g, c, wave);
            let u = State::from_fields(f, 0.0);
            let next = st.step_direct(&u, &NoiseIncrement::zero(0, dt)).unwrap();
            let factor = 1.0 / (1.0 + dt * discrete_eigenvalue(&g, &p, c, wave));
            let want = u[c].scaled(factor);
            assert!(next[c].sub(&want).max_abs() < 1e-12, "{c:?} {wave:?}");
        }
    }
}

fn deterministic_final(dt: f64, t: f64) -> State<f64> {
    let g = grid(8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut u = random_state(&g, 0.5, 6, &mut rng);
    u.remove_tracer_means();
    let mut st = stepper(&g, NoiseModel::none(&g), dt, DriftTerms::ALL);
    u = st.constrain(u.fields, 0.0).unwrap();
    for _ in 0..(t / dt).round() as usize {
        u = st.step_direct(&u, &NoiseIncrement::zero(0, dt)).unwrap();
    }
    u
}

#[test]
fn nonlinear_self_convergence_is_first_order() {
    let g = grid(8);
    let s: Vec<State<f64>> = [0.02, 0.01, 0.005].iter().map(|&dt| deterministic_final(dt, 0.2)).collect();
    let d1 = l2_distance(&g, &s[0].fields, &s[1].fields);
    let d2 = l2_distance(&g, &s[1].fields, &s[2].fields);
    let order = (d1 / d2).log2();
    assert!(order >= 0.9, "{d1} {d2} order {order}");
}

#[test]
fn ou_part_without_noise_stays_zero() {
    let g = grid(6);
    let mut st = stepper(&g, NoiseModel::with_defaults(&g, NoiseKind::Additive, 4, 0.0), 0.1, DriftTerms::ALL);
    let z = State::zeros(&g);
    let out = st.step_ou(&z, &sample_increment(2, 0, 4, 0.1), &z).unwrap();
    assert_eq!(out, st.step_ou(&z, &NoiseIncrement::zero(4, 0.1), &z).unwrap());
    for c in Component::ALL {
        assert_eq!(out[c].max_abs(), 0.0);
    }
}

#[test]
fn split_with_zero_ou_part_matches_direct() {
    let g = grid(8);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut u = random_state(&g, 0.5, 6, &mut rng);
    u.remove_tracer_means();
    let dt = 0.01;
    let mut st = stepper(&g, NoiseModel::none(&g), dt, DriftTerms::ALL);
    let u = st.constrain(u.fields, 0.0).unwrap();
    let mut d = u.clone();
    let mut s = SplitState::new(&g, &u);
    for _ in 0..10 {
        let inc = NoiseIncrement::zero(0, dt);
        d = st.step_direct(&d, &inc).unwrap();
        let eval = s.sum();
        s = st.step_split(&s, &inc, &eval).unwrap();
    }
    for c in Component::ALL {
        assert_eq!(s.u_check[c].max_abs(), 0.0);
    }
    assert!(l2_distance(&g, &d.fields, &s.sum().fields) < 1e-12);
}

fn small_config(seed: u64) -> RunConfig<f64> {
    let mut cfg = RunConfig::new(GridSpec::cube(6), seed);
    cfg.noise.kind = NoiseKind::LinearMultiplicative;
    cfg.noise.amplitude = 0.5;
    cfg.steps = 8;
    cfg.dt = 0.02;
    cfg
}

#[test]
fn zero_steps_gives_one_record() {
    let mut cfg = small_config(1);
    cfg.steps = 0;
    let out = run_trajectory(&cfg).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.steps_taken, 0);
    assert_eq!(out.records[0].t, 0.0);
}

#[test]
fn runs_are_reproducible_per_seed() {
    for mode in [Mode::Direct, Mode::Split, Mode::Both] {
        let mut cfg = small_config(5);
        cfg.mode = mode;
        let a = write_csv(&run_trajectory(&cfg).unwrap().records);
        let b = write_csv(&run_trajectory(&cfg).unwrap().records);
        assert_eq!(a, b);
        cfg.seed = 6;
        assert_ne!(a, write_csv(&run_trajectory(&cfg).unwrap().records));
    }
}

#[test]
fn cadence_keeps_the_last_step() {
    let mut cfg = small_config(2);
    cfg.steps = 7;
    cfg.cadence = 3;
    let out = run_trajectory(&cfg).unwrap();
    let ts: Vec<f64> = out.records.iter().map(|r| (r.t / cfg.dt).round()).collect();
    assert_eq!(ts, vec![0.0, 3.0, 6.0, 7.0]);
}

#[test]
fn both_mode_reports_split_gap() {
    let mut cfg = small_config(4);
    cfg.mode = Mode::Both;
    let out = run_trajectory(&cfg).unwrap();
    assert_eq!(out.records[0].split_gap, Some(0.0));
    assert!(out.records.iter().all(|r| r.split_gap.is_some_and(|g| g.is_finite())));
}

#[test]
fn blowup_ceiling_terminates_run() {
    let mut cfg = small_config(3);
    cfg.noise.kind = NoiseKind::Additive;
    cfg.noise.amplitude = 50.0;
    cfg.blowup_ceiling = 1.5;
    cfg.steps = 50;
    let out = run_trajectory(&cfg).unwrap();
    assert!(out.terminated.is_some());
    assert!(out.records.last().unwrap().blowup);
    assert!(out.steps_taken < 50);
}

#[test]
fn invalid_config_is_rejected() {
    let mut cfg = small_config(1);
    cfg.dt = 0.0;
    assert!(matches!(run_trajectory(&cfg), Err(Error::InvalidValue { .. })));
    assert_eq!(Mode::parse("both"), Some(Mode::Both));
    assert_eq!(Mode::parse("euler"), None);
}
