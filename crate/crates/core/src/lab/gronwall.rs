//! The generalized Gronwall lemma with its constructive constant, on
//! uniformly sampled data.
//!
//! Hypothesis, for every window `[a, b]`:
//! `sup_[a,b] X <= f(a)^p + sup_[a,b] X * int_a^b g + int_a^b h`.
//! Conclusion: `sup X <= c (1 + int h)` with `c = 2 M^p`.

use rand::Rng;

use crate::error::{Error, Result};

/// Safety margin added to `M` so that the strict inequality of the construction holds.
pub const M_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GronwallInput {
    /// Horizon; samples are at `t * i / (len - 1)`.
    pub t: f64,
    pub p: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub x: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GronwallBound {
    /// Windows shorter than `eps` carry less than 1/2 of `int g`.
    pub eps: f64,
    pub n: usize,
    pub m: f64,
    pub c: f64,
    pub bound: f64,
    pub int_h: f64,
}

impl GronwallInput {
    fn step(&self) -> f64 {
        self.t / (self.f.len() - 1) as f64
    }

    fn validate(&self) -> Result<()> {
        let n = self.f.len();
        if n < 2 || self.g.len() != n || self.h.len() != n || self.x.len() != n {
            return Err(Error::InvalidValue {
                key: "samples".into(),
                reason: "f, g, h, X need the same length of at least 2".into(),
            });
        }
        if !(self.t > 0.0) || !(self.p >= 1.0) {
            return Err(Error::InvalidValue {
                key: "t/p".into(),
                reason: "need t > 0 and p >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Cumulative trapezoid integral, `out[i] = int_0^{t_i}`.
fn cumulative(v: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in v.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Checks the hypothesis on every sample window; reports the worst violation.
pub fn check_hypothesis(input: &GronwallInput) -> Result<()> {
    input.validate()?;
    let dt = input.step();
    let cg = cumulative(&input.g, dt);
    let ch = cumulative(&input.h, dt);
    let n = input.x.len();
    for a in 0..n {
        let fa = input.f[a].powf(input.p);
        let mut sup = f64::NEG_INFINITY;
        for b in a..n {
            sup = sup.max(input.x[b]);
            let rhs = fa + sup * (cg[b] - cg[a]) + (ch[b] - ch[a]);
            if sup > rhs * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::HypothesisViolation {
                    start: a as f64 * dt,
                    end: b as f64 * dt,
                    lhs: sup,
                    rhs,
                });
            }
        }
    }
    Ok(())
}

/// Runs the construction: `eps` from `g`, `n` with `t/n < eps/2`, the
/// minimal `M > max(2, |f(0)|)` with `measure(|f| >= M) < t/(4n)`, and
/// returns `c = 2 M^p` with the bound `c (1 + int h)`.
pub fn gronwall_bound(input: &GronwallInput) -> Result<GronwallBound> {
    check_hypothesis(input)?;
    let dt = input.step();
    let cg = cumulative(&input.g, dt);
    let len = input.f.len();

    // Shortest sample window whose g-integral reaches 1/2.
    let mut eps = f64::INFINITY;
    for a in 0..len {
        if let Some(b) = (a..len).find(|&b| cg[b] - cg[a] >= 0.5) {
            eps = eps.min((b - a) as f64 * dt);
        }
    }
    let n = if eps.is_finite() {
        (2.0 * input.t / eps).floor() as usize + 1
    } else {
        1
    };

    // Trapezoid weight of each sample, then sweep |f| in decreasing order.
    let mut samples: Vec<(f64, f64)> = input
        .f
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i == 0 || i + 1 == len { 0.5 * dt } else { dt };
            (v.abs(), w)
        })
        .collect();
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let budget = input.t / (4.0 * n as f64);
    let mut measure = 0.0;
    let mut first_kept = 0.0;
    let mut i = 0;
    while i < samples.len() {
        // Samples tied in value enter the level set together.
        let v = samples[i].0;
        let mut group = 0.0;
        let mut j = i;
        while j < samples.len() && samples[j].0 == v {
            group += samples[j].1;
            j += 1;
        }
        if measure + group >= budget {
            first_kept = v;
            break;
        }
        measure += group;
        i = j;
    }
    let m = 2.0f64.max(input.f[0].abs()).max(first_kept) + M_MARGIN;
    let c = 2.0 * m.powf(input.p);
    let int_h = *cumulative(&input.h, dt).last().unwrap();
    Ok(GronwallBound {
        eps,
        n,
        m,
        c,
        bound: c * (1.0 + int_h),
        int_h,
    })
}

/// Random instance satisfying the hypothesis by construction: `X` is a
/// random positive shape scaled below the largest factor every window allows.
pub fn generate_instance<R: Rng>(rng: &mut R, samples: usize) -> GronwallInput {
    let t = rng.random_range(0.5..4.0);
    let p = rng.random_range(1.0..3.0);
    let dt = t / (samples - 1) as f64;
    let smooth = |rng: &mut R, base: f64, amp: f64| -> Vec<f64> {
        let k1: f64 = rng.random_range(0.5..6.0);
        let k2: f64 = rng.random_range(0.5..6.0);
        let ph: f64 = rng.random_range(0.0..6.3);
        let spike_at: f64 = rng.random_range(0.0..1.0);
        let spike: f64 = rng.random_range(0.0..3.0) * amp;
        (0..samples)
            .map(|i| {
                let s = i as f64 / (samples - 1) as f64;
                let bump = spike * (-((s - spike_at) * 20.0).powi(2)).exp();
                (base + amp * (0.5 + 0.5 * (k1 * s * 6.3 + ph).sin() * (k2 * s * 3.1).cos()) + bump).max(0.0)
            })
            .collect()
    };
    let (f_base, f_amp): (f64, f64) = (rng.random_range(0.0..2.0), rng.random_range(0.0..3.0));
    let f = smooth(rng, f_base, f_amp);
    let g_amp = rng.random_range(0.0..4.0) / t;
    let g = smooth(rng, 0.0, g_amp);
    let h_amp = rng.random_range(0.0..3.0);
    let h = smooth(rng, 0.0, h_amp);
    let shape = smooth(rng, 0.1, 1.0);

    let cg = cumulative(&g, dt);
    let ch = cumulative(&h, dt);
    let mut lambda = f64::INFINITY;
    for a in 0..samples {
        let fa = f[a].powf(p);
        let mut sup: f64 = 0.0;
        for b in a..samples {
            sup = sup.max(shape[b]);
            let gi = cg[b] - cg[a];
            if gi < 1.0 {
                lambda = lambda.min((fa + ch[b] - ch[a]) / (sup * (1.0 - gi)));
            }
        }
    }
    let scale = lambda * rng.random_range(0.5..1.0);
    let x = shape.iter().map(|s| s * scale).collect();
    GronwallInput { t, p, f, g, h, x }
}
