//! Semi-implicit Euler-Maruyama integration of the full system and of its
//! splitting `U = U_hat + U_check` into an Ornstein-Uhlenbeck part carrying
//! the noise and a pathwise random PDE.
//!
//! Every step has the form `U' = P S (Y)` where `S = (I + dt A)^-1` is solved
//! exactly in the separable eigenbasis, `P` is the barotropic projection
//! followed by removal of the tracer means, and `Y` collects the explicit
//! terms evaluated at the left endpoint.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{DiagnosticsRecord, Recorder, DEFAULT_CEILING};
use crate::error::{Error, Result};
use crate::grid::{l2_inner_field, make_grid, BcKind, Component, Fields, Grid, GridSpec, NormKind, ScalarField, State};
use crate::modes::{lowest_waves, random_state, unit_mode};
use crate::noise::{BrownianPath, NoiseIncrement, NoiseKind, NoiseModel};
use crate::operators::{explicit_drift, DriftTerms, PhysParams};
use crate::pressure::{project_velocity, PoissonMethod, DEFAULT_TOL};
use crate::real::Real;
use crate::spectral::SeparableSolver;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Direct,
    Split,
    Both,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Direct => "direct",
            Mode::Split => "split",
            Mode::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Mode::Direct, Mode::Split, Mode::Both]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

/// Noise configuration; `amplitudes`, when non-empty, overrides `amplitude` per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec<R> {
    pub kind: NoiseKind,
    pub k: usize,
    pub amplitude: R,
    pub amplitudes: Vec<R>,
    pub clamp: R,
}

impl<R: Real> Default for NoiseSpec<R> {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Additive,
            k: 8,
            amplitude: R::c(1e-2),
            amplitudes: Vec::new(),
            clamp: R::one(),
        }
    }
}

impl<R: Real> NoiseSpec<R> {
    pub fn build(&self, grid: &Grid<R>) -> NoiseModel<R> {
        let specs: Vec<_> = crate::noise::default_mode_specs(self.k)
            .into_iter()
            .enumerate()
            .map(|(i, (c, w))| (c, w, self.amplitudes.get(i).copied().unwrap_or(self.amplitude)))
            .collect();
        let mut m = NoiseModel::new(grid, self.kind, &specs);
        m.clamp = self.clamp;
        m
    }
}

/// Time-independent forcing: each component is its lowest admissible unit
/// mode times the given amplitude.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ForcingSpec<R> {
    pub amplitude: [R; 4],
}

impl<R: Real> ForcingSpec<R> {
    pub fn build(&self, grid: &Grid<R>) -> Fields<R> {
        let mut out = Fields::zeros(grid);
        for c in Component::ALL {
            let a = self.amplitude[c.index()];
            if a != R::zero() {
                out[c] = unit_mode(grid, c, lowest_waves(c, 1)[0]).scaled(a);
            }
        }
        out
    }
}

/// Initial condition: a random smooth state of the given amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitSpec<R> {
    pub amplitude: R,
    pub modes: usize,
    pub seed: u64,
}

impl<R: Real> Default for InitSpec<R> {
    fn default() -> Self {
        Self {
            amplitude: R::c(0.1),
            modes: 6,
            seed: 0,
        }
    }
}

impl<R: Real> InitSpec<R> {
    pub fn build(&self, grid: &Grid<R>) -> State<R> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut s = random_state(grid, self.amplitude, self.modes, &mut rng);
        s.remove_tracer_means();
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig<R> {
    pub grid: GridSpec<R>,
    pub params: PhysParams<R>,
    pub noise: NoiseSpec<R>,
    pub forcing: ForcingSpec<R>,
    pub init: InitSpec<R>,
    pub terms: DriftTerms,
    pub dt: R,
    pub steps: usize,
    pub mode: Mode,
    pub seed: u64,
    /// Record every `cadence` steps (the last step is always recorded).
    pub cadence: usize,
    pub blowup_ceiling: f64,
    pub poisson_tol: R,
}

impl<R: Real> RunConfig<R> {
    pub fn new(grid: GridSpec<R>, seed: u64) -> Self {
        Self {
            grid,
            params: PhysParams::default(),
            noise: NoiseSpec::default(),
            forcing: ForcingSpec::default(),
            init: InitSpec::default(),
            terms: DriftTerms::ALL,
            dt: R::c(1e-2),
            steps: 100,
            mode: Mode::Direct,
            seed,
            cadence: 1,
            blowup_ceiling: DEFAULT_CEILING,
            poisson_tol: R::c(DEFAULT_TOL),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.params.validate()?;
        let bad = |key: &str, reason: &str| {
            Err(Error::InvalidValue {
                key: key.into(),
                reason: reason.into(),
            })
        };
        if !(self.dt > R::zero()) || !self.dt.is_finite() {
            return bad("dt", "must be positive");
        }
        if self.cadence == 0 {
            return bad("cadence", "must be at least 1");
        }
        if !(self.blowup_ceiling > 0.0) {
            return bad("blowup_ceiling", "must be positive");
        }
        if !(self.poisson_tol > R::zero()) {
            return bad("poisson_tol", "must be positive");
        }
        if !self.noise.amplitude.is_finite() || self.noise.amplitudes.iter().any(|a| !a.is_finite()) {
            return bad("amplitude", "must be finite");
        }
        if !(self.noise.clamp > R::zero()) {
            return bad("clamp", "must be positive");
        }
        Ok(())
    }
}

/// The pair `(U_check, U_hat)` of the splitting.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitState<R> {
    pub u_check: State<R>,
    pub u_hat: State<R>,
    pub time: R,
}

impl<R: Real> SplitState<R> {
    pub fn new(grid: &Grid<R>, u0: &State<R>) -> Self {
        Self {
            u_check: State::zeros(grid),
            u_hat: u0.clone(),
            time: u0.time,
        }
    }

    pub fn sum(&self) -> State<R> {
        State::from_fields(self.u_hat.fields.add(&self.u_check.fields), self.time)
    }
}

/// Per-run integrator holding the grid, operators, and cached solvers.
#[derive(Clone, Debug)]
pub struct Stepper<R> {
    pub grid: Grid<R>,
    pub params: PhysParams<R>,
    pub terms: DriftTerms,
    pub noise: NoiseModel<R>,
    pub forcing: Fields<R>,
    pub dt: R,
    pub poisson: PoissonMethod<R>,
    helm_velocity: SeparableSolver<R>,
    helm_tracer: SeparableSolver<R>,
    last_phi: Option<ScalarField<R>>,
}

impl<R: Real> Stepper<R> {
    pub fn new(grid: Grid<R>, params: PhysParams<R>, noise: NoiseModel<R>, forcing: Fields<R>, dt: R) -> Self {
        Self {
            helm_velocity: SeparableSolver::new(&grid, BcKind::Velocity),
            helm_tracer: SeparableSolver::new(&grid, BcKind::Tracer),
            grid,
            params,
            terms: DriftTerms::ALL,
            noise,
            forcing,
            dt,
            poisson: PoissonMethod::cg_default(),
            last_phi: None,
        }
    }

    pub fn from_config(cfg: &RunConfig<R>) -> Result<Self> {
        cfg.validate()?;
        let grid = make_grid(cfg.grid)?;
        let noise = cfg.noise.build(&grid);
        let forcing = cfg.forcing.build(&grid);
        let mut s = Self::new(grid, cfg.params, noise, forcing, cfg.dt);
        s.terms = cfg.terms;
        s.poisson = PoissonMethod::Cg { tol: cfg.poisson_tol };
        Ok(s)
    }

    pub fn with_terms(mut self, terms: DriftTerms) -> Self {
        self.terms = terms;
        self
    }

    /// Surface pressure of the last projection, `p_s = rho0 phi / dt`.
    pub fn last_surface_pressure(&self) -> Option<ScalarField<R>> {
        self.last_phi
            .as_ref()
            .map(|phi| phi.scaled(self.params.rho0 / self.dt))
    }

    /// `(I + dt A)^-1` applied per component.
    pub fn implicit_solve(&self, y: &Fields<R>) -> Fields<R> {
        let comps = Component::ALL.map(|c| {
            let d = self.params.diffusivity(c);
            let s = if c.is_velocity() {
                &self.helm_velocity
            } else {
                &self.helm_tracer
            };
            s.helmholtz(&y[c], self.dt, d.mu, d.nu)
        });
        Fields { comps }
    }

    /// Barotropic projection and tracer mean removal.
    pub fn constrain(&mut self, x: Fields<R>, time: R) -> Result<State<R>> {
        let mut x = x;
        let [u, v, ..] = &mut x.comps;
        let phi = project_velocity(&self.grid, u, v, &self.poisson, self.last_phi.as_ref())?;
        self.last_phi = Some(phi);
        let mut s = State::from_fields(x, time);
        s.remove_tracer_means();
        Ok(s)
    }

    fn explicit(&self, at: &Fields<R>) -> Fields<R> {
        explicit_drift(&self.grid, at, &self.forcing, &self.params, self.terms)
    }

    /// One step of the full system with the Itô increment at the left endpoint.
    pub fn step_direct(&mut self, u: &State<R>, inc: &NoiseIncrement<R>) -> Result<State<R>> {
        let mut y = u.fields.clone();
        y.axpy(self.dt, &self.explicit(&u.fields));
        y.axpy(R::one(), &self.noise.apply_sigma(&self.grid, &u.fields, inc));
        let x = self.implicit_solve(&y);
        self.constrain(x, u.time + self.dt)
    }

    /// One step of `dU_check + A U_check dt = sigma(U_eval) dW`.
    pub fn step_ou(&mut self, u_check: &State<R>, inc: &NoiseIncrement<R>, sigma_eval: &State<R>) -> Result<State<R>> {
        let mut y = u_check.fields.clone();
        y.axpy(R::one(), &self.noise.apply_sigma(&self.grid, &sigma_eval.fields, inc));
        let x = self.implicit_solve(&y);
        self.constrain(x, u_check.time + self.dt)
    }

    /// One step of the random PDE for `U_hat`, with the non-diffusive terms
    /// evaluated at `U_hat + U_check`.
    pub fn step_residual(&mut self, u_hat: &State<R>, u_check: &State<R>) -> Result<State<R>> {
        let total = u_hat.fields.add(&u_check.fields);
        let mut y = u_hat.fields.clone();
        y.axpy(self.dt, &self.explicit(&total));
        let x = self.implicit_solve(&y);
        self.constrain(x, u_hat.time + self.dt)
    }

    /// Split step: the OU part advances first with `sigma` evaluated at
    /// `sigma_eval`, then the residual uses the updated `U_check`.
    pub fn step_split(&mut self, s: &SplitState<R>, inc: &NoiseIncrement<R>, sigma_eval: &State<R>) -> Result<SplitState<R>> {
        let u_check = self.step_ou(&s.u_check, inc, sigma_eval)?;
        let u_hat = self.step_residual(&s.u_hat, &u_check)?;
        Ok(SplitState {
            time: s.time + self.dt,
            u_check,
            u_hat,
        })
    }

    /// `|F|_{L4}` of the forcing.
    pub fn forcing_l4(&self) -> f64 {
        let f: Vec<&ScalarField<R>> = self.forcing.comps.iter().collect();
        crate::grid::norm_fields(&self.grid, &f, NormKind::Lp(R::c(4.0)), &[])
            .map(|x| x.to_f64_lossy())
            .unwrap_or(f64::NAN)
    }
}

/// `|a - b|_{L2}` over all components.
pub fn l2_distance<R: Real>(grid: &Grid<R>, a: &Fields<R>, b: &Fields<R>) -> R {
    let d = a.sub(b);
    d.comps
        .iter()
        .map(|f| l2_inner_field(grid, f, f))
        .sum::<R>()
        .sqrt()
}

#[derive(Clone, Debug)]
pub struct RunOutput<R> {
    /// Direct-mode state, or `U_hat + U_check` in split mode.
    pub final_state: State<R>,
    pub split: Option<SplitState<R>>,
    pub records: Vec<DiagnosticsRecord>,
    /// Why the run ended early, if it did.
    pub terminated: Option<String>,
    pub steps_taken: usize,
}

pub fn run_trajectory<R: Real>(cfg: &RunConfig<R>) -> Result<RunOutput<R>> {
    run_trajectory_with(cfg, |_, _| Ok(()))
}

/// Steps the configured mode, recording diagnostics every `cadence` steps.
/// `on_record` sees the step index and the primary state at every record.
pub fn run_trajectory_with<R: Real>(
    cfg: &RunConfig<R>,
    mut on_record: impl FnMut(usize, &State<R>) -> Result<()>,
) -> Result<RunOutput<R>> {
    let mut st = Stepper::from_config(cfg)?;
    let grid = st.grid.clone();
    let u0 = cfg.init.build(&grid);
    let path = BrownianPath::new(cfg.seed, st.noise.len(), cfg.dt);
    let mut recorder = Recorder::new(st.forcing_l4(), cfg.blowup_ceiling);

    let mut direct = matches!(cfg.mode, Mode::Direct | Mode::Both).then(|| u0.clone());
    let mut split = matches!(cfg.mode, Mode::Split | Mode::Both).then(|| SplitState::new(&grid, &u0));

    let observe = |recorder: &mut Recorder, direct: &Option<State<R>>, split: &Option<SplitState<R>>| {
        let (primary, gap) = match (direct, split) {
            (Some(d), Some(s)) => {
                let g = l2_distance(&grid, &d.fields, &s.sum().fields).to_f64_lossy();
                (d.clone(), Some(g))
            }
            (Some(d), None) => (d.clone(), None),
            (None, Some(s)) => (s.sum(), None),
            (None, None) => unreachable!("at least one mode runs"),
        };
        let rec = recorder.observe(&grid, &primary.fields, &cfg.params, primary.time.to_f64_lossy(), gap);
        (primary, rec)
    };

    let mut records = Vec::new();
    let (primary, rec) = observe(&mut recorder, &direct, &split);
    on_record(0, &primary)?;
    let mut terminated = rec.blowup_reason.clone();
    records.push(rec);
    let mut steps_taken = 0;

    for n in 0..cfg.steps {
        if terminated.is_some() {
            break;
        }
        let inc = path.base_increment(n as u64);
        let with_step = |e: Error| match e {
            Error::SolverDivergence { .. } => Error::Runtime(format!("step {n}: {e}")),
            other => other,
        };
        let sigma_eval = match (&direct, &split) {
            (Some(d), _) => d.clone(),
            (None, Some(s)) => s.sum(),
            _ => unreachable!(),
        };
        if let Some(d) = &direct {
            direct = Some(st.step_direct(d, &inc).map_err(with_step)?);
        }
        if let Some(s) = &split {
            split = Some(st.step_split(s, &inc, &sigma_eval).map_err(with_step)?);
        }
        steps_taken = n + 1;
        let last = n + 1 == cfg.steps;
        let (primary, rec) = observe(&mut recorder, &direct, &split);
        if rec.blowup || last || (n + 1) % cfg.cadence == 0 {
            on_record(n + 1, &primary)?;
            terminated = rec.blowup_reason.clone();
            records.push(rec);
        }
    }

    let final_state = match (&direct, &split) {
        (Some(d), _) => d.clone(),
        (None, Some(s)) => s.sum(),
        _ => unreachable!(),
    };
    Ok(RunOutput {
        final_state,
        split,
        records,
        terminated,
        steps_taken,
    })
}
