//! Truncated cylindrical Wiener process and the noise coefficient families.
//!
//! Increments come from a ChaCha stream keyed by `(seed, step)`, so any step
//! of any trajectory can be regenerated independently of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::{l2_inner_field, Component, Fields, Grid, ScalarField};
use crate::modes::{admissible, lowest_waves, unit_mode, Wave};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    Additive,
    LinearMultiplicative,
    LipschitzFunctional,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [
        NoiseKind::Additive,
        NoiseKind::LinearMultiplicative,
        NoiseKind::LipschitzFunctional,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Additive => "additive",
            NoiseKind::LinearMultiplicative => "linear_multiplicative",
            NoiseKind::LipschitzFunctional => "lipschitz_functional",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// One noise direction: the component it acts on, its unit-`L2` shape, and amplitude.
#[derive(Clone, Debug)]
pub struct NoiseMode<R> {
    pub component: Component,
    pub wave: Wave,
    pub shape: ScalarField<R>,
    pub amplitude: R,
}

#[derive(Clone, Debug)]
pub struct NoiseModel<R> {
    pub kind: NoiseKind,
    pub modes: Vec<NoiseMode<R>>,
    /// Saturation level of the clamp in the Lipschitz functional kind.
    pub clamp: R,
}

/// Default mode list: components cycle `u, v, T, S`, each taking its
/// next-lowest admissible wave.
pub fn default_mode_specs(k: usize) -> Vec<(Component, Wave)> {
    let per = k.div_ceil(4).max(1);
    let lists: Vec<Vec<Wave>> = Component::ALL.iter().map(|&c| lowest_waves(c, per)).collect();
    (0..k)
        .map(|i| {
            let c = Component::ALL[i % 4];
            (c, lists[i % 4][i / 4])
        })
        .collect()
}

impl<R: Real> NoiseModel<R> {
    pub fn new(grid: &Grid<R>, kind: NoiseKind, specs: &[(Component, Wave, R)]) -> Self {
        let modes = specs
            .iter()
            .map(|&(component, wave, amplitude)| {
                debug_assert!(admissible(component, wave));
                NoiseMode {
                    component,
                    wave,
                    shape: unit_mode(grid, component, wave),
                    amplitude,
                }
            })
            .collect();
        Self {
            kind,
            modes,
            clamp: R::one(),
        }
    }

    /// `k` default modes with a common amplitude.
    pub fn with_defaults(grid: &Grid<R>, kind: NoiseKind, k: usize, amplitude: R) -> Self {
        let specs: Vec<_> = default_mode_specs(k)
            .into_iter()
            .map(|(c, w)| (c, w, amplitude))
            .collect();
        Self::new(grid, kind, &specs)
    }

    pub fn none(grid: &Grid<R>) -> Self {
        Self::new(grid, NoiseKind::Additive, &[])
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Declared Lipschitz constant of `U -> sigma(U)` into `L2(U, H)`.
    pub fn lipschitz_bound(&self) -> R {
        let s: R = self
            .modes
            .iter()
            .map(|m| {
                let a2 = m.amplitude * m.amplitude;
                match self.kind {
                    NoiseKind::Additive => R::zero(),
                    NoiseKind::LinearMultiplicative => {
                        let mx = m.shape.max_abs();
                        a2 * mx * mx
                    }
                    NoiseKind::LipschitzFunctional => a2,
                }
            })
            .sum();
        s.sqrt()
    }

    /// The bounded Lipschitz functional `c tanh((U_c, e_k) / c)`.
    pub fn functional(&self, grid: &Grid<R>, k: usize, u: &Fields<R>) -> R {
        let m = &self.modes[k];
        let proj = l2_inner_field(grid, &u[m.component], &m.shape);
        self.clamp * (proj / self.clamp).tanh()
    }

    /// The `k`-th coefficient field `sigma_k(U)` (on its component).
    pub fn sigma_k(&self, grid: &Grid<R>, k: usize, u: &Fields<R>) -> ScalarField<R> {
        let m = &self.modes[k];
        match self.kind {
            NoiseKind::Additive => m.shape.scaled(m.amplitude),
            NoiseKind::LinearMultiplicative => {
                let mut f = m.shape.mul(&u[m.component]);
                f.scale(m.amplitude);
                f
            }
            NoiseKind::LipschitzFunctional => m.shape.scaled(m.amplitude * self.functional(grid, k, u)),
        }
    }

    /// `sigma(U) dW = sum_k sigma_k(U) dW_k`.
    pub fn apply_sigma(&self, grid: &Grid<R>, u: &Fields<R>, inc: &NoiseIncrement<R>) -> Fields<R> {
        let mut out = Fields::zeros(grid);
        for (k, m) in self.modes.iter().enumerate() {
            let dw = inc.dw[k];
            if dw == R::zero() {
                continue;
            }
            let s = self.sigma_k(grid, k, u);
            out[m.component].axpy(dw, &s);
        }
        out
    }

    /// Hilbert-Schmidt norm squared `sum_k |sigma_k(U)|^2`.
    pub fn hs_norm_sq(&self, grid: &Grid<R>, u: &Fields<R>) -> R {
        (0..self.len())
            .map(|k| {
                let s = self.sigma_k(grid, k, u);
                l2_inner_field(grid, &s, &s)
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseIncrement<R> {
    pub dw: Vec<R>,
    pub dt: R,
    pub seed: u64,
    pub step: u64,
}

impl<R: Real> NoiseIncrement<R> {
    pub fn zero(k: usize, dt: R) -> Self {
        Self {
            dw: vec![R::zero(); k],
            dt,
            seed: 0,
            step: 0,
        }
    }
}

/// `k` independent `N(0, dt)` draws from the stream keyed by `(seed, step)`.
pub fn sample_increment<R: Real>(seed: u64, step: u64, k: usize, dt: R) -> NoiseIncrement<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    let sd = dt.sqrt().to_f64_lossy();
    let dw = (0..k)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            R::c(z * sd)
        })
        .collect();
    NoiseIncrement { dw, dt, seed, step }
}

/// A Brownian path sampled on a base step; coarser increments are sums of
/// consecutive base increments, which couples runs at different `dt`.
#[derive(Clone, Copy, Debug)]
pub struct BrownianPath<R> {
    pub seed: u64,
    pub k: usize,
    pub base_dt: R,
}

impl<R: Real> BrownianPath<R> {
    pub fn new(seed: u64, k: usize, base_dt: R) -> Self {
        Self { seed, k, base_dt }
    }

    pub fn base_increment(&self, step: u64) -> NoiseIncrement<R> {
        sample_increment(self.seed, step, self.k, self.base_dt)
    }

    /// Increment over `[step * factor, (step + 1) * factor)` base steps.
    pub fn increment(&self, step: u64, factor: u64) -> NoiseIncrement<R> {
        let mut dw = vec![R::zero(); self.k];
        for s in step * factor..(step + 1) * factor {
            for (a, b) in dw.iter_mut().zip(self.base_increment(s).dw) {
                *a += b;
            }
        }
        NoiseIncrement {
            dw,
            dt: self.base_dt * R::from_usize_lossy(factor as usize),
            seed: self.seed,
            step,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsometryReport {
    /// Monte-Carlo mean of `|sum sigma(U) dW|^2`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `sum_k |sigma_k(U)|^2 * steps * dt`.
    pub rhs: f64,
    pub rel_dev: f64,
}

impl IsometryReport {
    /// Deviation measured in standard errors (0 when both sides vanish).
    pub fn z_score(&self) -> f64 {
        let d = (self.lhs - self.rhs).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.lhs_se
        }
    }
}

/// Monte-Carlo check of `E|sum_n sigma(U) dW_n|^2 = |sigma(U)|^2 t` with `U` frozen.
pub fn ito_isometry_check<R: Real>(
    grid: &Grid<R>,
    model: &NoiseModel<R>,
    u: &Fields<R>,
    dt: R,
    steps: usize,
    runs: usize,
    seed: u64,
) -> IsometryReport {
    let rhs = (model.hs_norm_sq(grid, u) * dt * R::from_usize_lossy(steps)).to_f64_lossy();
    let mut samples = Vec::with_capacity(runs);
    for r in 0..runs {
        let path = BrownianPath::new(seed.wrapping_add(r as u64), model.len(), dt);
        let mut acc = Fields::zeros(grid);
        for n in 0..steps {
            acc.axpy(R::one(), &model.apply_sigma(grid, u, &path.base_increment(n as u64)));
        }
        let x: R = acc.comps.iter().map(|f| l2_inner_field(grid, f, f)).sum();
        samples.push(x.to_f64_lossy());
    }
    let (lhs, lhs_se) = mean_se(&samples);
    let rel_dev = if rhs == 0.0 { (lhs - rhs).abs() } else { (lhs - rhs).abs() / rhs };
    IsometryReport {
        lhs,
        lhs_se,
        rhs,
        rel_dev,
    }
}

/// Sample mean and its standard error (zero for fewer than two samples).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
