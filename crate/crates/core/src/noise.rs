//! Output-noise model.
//!
//! Responses are `y = f(p) + ε` with `ε ~ N(0, λ)`; `λ` is a variance. The
//! nonlinearity score of a noisy design is bounded by the noise-free score
//! plus `X = Σ_{i=1..T} ζ_i` with `ζ_i = |ε_i − ε_r|`, and each `ζ_i` is
//! folded normal.
//!
//! Two things live here side by side:
//!
//! * closed-form expressions for `E[X]` and `Var[X]`, evaluated exactly as
//!   published ([`expected_noise_sum_published`],
//!   [`variance_noise_sum_published`]);
//! * a Monte-Carlo estimate of the same moments ([`simulate_noise_sum`]).
//!
//! They do not agree. By linearity of expectation `E[X] = T·2√(λ/π)`
//! (1.128379 at `T = 1, λ = 1`), while the published mean gives 0.680201,
//! and the published variance subtracts `E[X]` where `E[X]²` would be
//! expected. The published forms are kept verbatim and both are reported.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::seed::{stream, stream_rng};

/// Fixed shard count for [`simulate_noise_sum`]. Results depend on this
/// number, never on the worker count.
pub const NOISE_SHARDS: usize = 64;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "noise variance λ must be finite and >= 0, got {lambda}"
        )))
    }
}

fn check_t(t: usize) -> Result<()> {
    if t == 0 {
        Err(Error::Domain("neighborhood size T must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Mean and variance of one folded-normal noise term `ζ = |ε_i − ε_r|`:
/// `(2√(λ/π), 2λ(1 − 2/π))`.
pub fn zeta_stats(lambda: f64) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    Ok((2.0 * (lambda / PI).sqrt(), 2.0 * lambda * (1.0 - 2.0 / PI)))
}

/// `u(t) = (t − 1)² + 1`.
pub fn u_of(t: usize) -> f64 {
    let s = t as f64 - 1.0;
    s * s + 1.0
}

/// `v(t) = t² − 2t + 2`.
pub fn v_of(t: usize) -> f64 {
    let t = t as f64;
    t * t - 2.0 * t + 2.0
}

/// Published `E[X] = (2/π)·√(λ(π − 2))·(T + (T − 1)·√u(T))`.
pub fn expected_noise_sum_published(t: usize, lambda: f64) -> Result<f64> {
    check_t(t)?;
    check_lambda(lambda)?;
    let tf = t as f64;
    Ok(2.0 / PI * (lambda * (PI - 2.0)).sqrt() * (tf + (tf - 1.0) * u_of(t).sqrt()))
}

/// Published `Var[X] = 2λ(π − 2)(4(T − 1) + 5π·v(T)) / π² − E[X]`, with the
/// published `E[X]`.
pub fn variance_noise_sum_published(t: usize, lambda: f64) -> Result<f64> {
    let mean = expected_noise_sum_published(t, lambda)?;
    let tf = t as f64;
    Ok(2.0 * lambda * (PI - 2.0) * (4.0 * (tf - 1.0) + 5.0 * PI * v_of(t)) / (PI * PI) - mean)
}

/// Mean and variance of the noise sum `X` for neighborhood size `t` and
/// noise variance `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSumStats {
    pub mean: f64,
    pub variance: f64,
    pub t: usize,
    pub lambda: f64,
}

impl NoiseSumStats {
    /// Moments from the published closed forms.
    pub fn published(t: usize, lambda: f64) -> Result<Self> {
        Ok(Self {
            mean: expected_noise_sum_published(t, lambda)?,
            variance: variance_noise_sum_published(t, lambda)?,
            t,
            lambda,
        })
    }
}

/// Monte-Carlo estimate of [`NoiseSumStats`] with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSumSimulation {
    pub stats: NoiseSumStats,
    pub mean_std_error: f64,
    pub variance_std_error: f64,
    pub draws: u64,
    pub shards: usize,
}

/// Running central moments up to order four, mergeable across shards.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        let n1 = self.n;
        self.n += 1.0;
        let n = self.n;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let term1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += term1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += term1;
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let (na, nb) = (self.n, o.n);
        let n = na + nb;
        let delta = o.mean - self.mean;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let d4 = d2 * d2;
        let m2 = self.m2 + o.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + o.m3
            + d3 * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * o.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + o.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * o.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * o.m3 - nb * self.m3) / n;
        Moments {
            n,
            mean: self.mean + delta * nb / n,
            m2,
            m3,
            m4,
        }
    }
}

/// Monte-Carlo oracle for `X = Σ_{i=1..t} |ε_i − ε_r|` with one shared
/// `ε_r` per draw. Deterministic in `seed`.
pub fn simulate_noise_sum(
    t: usize,
    lambda: f64,
    draws: u64,
    seed: u64,
) -> Result<NoiseSumSimulation> {
    simulate_noise_sum_with(t, lambda, draws, seed, Execution::default())
}

pub fn simulate_noise_sum_with(
    t: usize,
    lambda: f64,
    draws: u64,
    seed: u64,
    exec: Execution,
) -> Result<NoiseSumSimulation> {
    check_t(t)?;
    check_lambda(lambda)?;
    if draws == 0 {
        return Err(Error::Usage("draws must be >= 1".into()));
    }
    let shards = (NOISE_SHARDS as u64).min(draws) as usize;
    let sd = lambda.sqrt();
    let per_shard = exec.map_range(shards, |k| {
        let quota = draws / shards as u64 + u64::from((k as u64) < draws % shards as u64);
        let mut rng = stream_rng(seed, stream::NOISE_SIMULATION, k as u64);
        let mut acc = Moments::default();
        for _ in 0..quota {
            let eps_r: f64 = sd * rng.sample::<f64, _>(StandardNormal);
            let x: f64 = (0..t)
                .map(|_| (sd * rng.sample::<f64, _>(StandardNormal) - eps_r).abs())
                .sum();
            acc.push(x);
        }
        acc
    });
    let total = per_shard
        .into_iter()
        .fold(Moments::default(), Moments::merge);
    let n = total.n;
    let variance = if n > 1.0 { total.m2 / (n - 1.0) } else { 0.0 };
    let pop_var = total.m2 / n;
    let fourth = total.m4 / n;
    Ok(NoiseSumSimulation {
        stats: NoiseSumStats {
            mean: total.mean,
            variance,
            t,
            lambda,
        },
        mean_std_error: (variance / n).sqrt(),
        variance_std_error: ((fourth - pop_var * pop_var).max(0.0) / n).sqrt(),
        draws,
        shards,
    })
}

/// `value + ε`, `ε ~ N(0, lambda)`.
pub fn add_noise<R: Rng + ?Sized>(value: f64, lambda: f64, rng: &mut R) -> Result<f64> {
    check_lambda(lambda)?;
    let z: f64 = rng.sample(StandardNormal);
    if lambda == 0.0 {
        return Ok(value);
    }
    Ok(value + lambda.sqrt() * z)
}
