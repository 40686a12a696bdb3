//! Global-best particle swarm with constriction coefficients.
//!
//! Random numbers are drawn serially in particle order, and each round's
//! objective values are gathered by particle index, so results depend only
//! on the seed even when evaluations run in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsoConfig {
    pub swarm: usize,
    /// Evaluation rounds, the initial one included.
    pub iters: usize,
    pub seed: u64,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity limit as a fraction of each bound's span.
    pub velocity_clamp: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm: 20,
            iters: 100,
            seed: 0,
            inertia: 0.7298,
            cognitive: 1.49618,
            social: 1.49618,
            velocity_clamp: 0.2,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm == 0 || self.iters == 0 {
            return Err(Error::InvalidArgument("swarm size and iteration count must be at least 1".into()));
        }
        if ![self.inertia, self.cognitive, self.social, self.velocity_clamp].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite swarm coefficient".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Best objective after each round.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Minimizes `objective` over the box `bounds`. Non-finite objective
/// values never become a personal or global best unless nothing better
/// has been seen.
pub fn pso_minimize<F>(objective: F, bounds: &[(f64, f64)], cfg: &PsoConfig) -> Result<PsoResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    if bounds.is_empty() || bounds.iter().any(|&(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::InvalidArgument("search bounds must be finite with lo <= hi".into()));
    }
    let dim = bounds.len();
    let vmax: Vec<f64> = bounds.iter().map(|&(lo, hi)| cfg.velocity_clamp * (hi - lo)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut x: Vec<Vec<f64>> = (0..cfg.swarm)
        .map(|_| bounds.iter().map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo }).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..cfg.swarm)
        .map(|_| vmax.iter().map(|&m| if m > 0.0 { rng.gen_range(-m..=m) } else { 0.0 }).collect())
        .collect();

    let eval_all = |xs: &[Vec<f64>]| -> Vec<f64> {
        xs.par_iter()
            .map(|xi| {
                let f = objective(xi);
                if f.is_nan() {
                    f64::INFINITY
                } else {
                    f
                }
            })
            .collect()
    };

    let mut fx = eval_all(&x);
    let mut pbest = x.clone();
    let mut pbest_f = fx.clone();
    let mut g = argmin(&pbest_f);
    let mut history = vec![pbest_f[g]];

    for _ in 1..cfg.iters {
        for i in 0..cfg.swarm {
            for d in 0..dim {
                let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                let mut vel = cfg.inertia * v[i][d]
                    + cfg.cognitive * r1 * (pbest[i][d] - x[i][d])
                    + cfg.social * r2 * (pbest[g][d] - x[i][d]);
                vel = vel.clamp(-vmax[d], vmax[d]);
                let (lo, hi) = bounds[d];
                let pos = (x[i][d] + vel).clamp(lo, hi);
                v[i][d] = vel;
                x[i][d] = pos;
            }
        }
        fx = eval_all(&x);
        for i in 0..cfg.swarm {
            if fx[i] < pbest_f[i] {
                pbest_f[i] = fx[i];
                pbest[i].clone_from(&x[i]);
            }
        }
        g = argmin(&pbest_f);
        history.push(pbest_f[g]);
    }
    Ok(PsoResult {
        best_x: pbest[g].clone(),
        best_f: pbest_f[g],
        history,
        evaluations: cfg.swarm * cfg.iters,
    })
}

fn argmin(f: &[f64]) -> usize {
    let mut best = 0;
    for (i, &fi) in f.iter().enumerate() {
        if fi < f[best] {
            best = i;
        }
    }
    best
}
