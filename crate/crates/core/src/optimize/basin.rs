use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bfgs_minimize, BfgsOptions, Objective};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinHoppingOptions {
    /// Local minimizations, the first one from the unperturbed start.
    pub n_hops: usize,
    /// Half-width of the uniform perturbation of every parameter.
    pub step_scale: f64,
    /// Metropolis temperature as a fraction of `|f|` at the current iterate.
    pub temperature_scale: f64,
    pub seed: u64,
    pub bfgs: BfgsOptions,
}

impl Default for BasinHoppingOptions {
    fn default() -> Self {
        Self { n_hops: 30, step_scale: 0.3, temperature_scale: 0.1, seed: 0, bfgs: BfgsOptions::default() }
    }
}

/// Passed to the progress callback after every hop.
#[derive(Clone, Copy, Debug)]
pub struct HopProgress<'a> {
    pub hop: usize,
    pub value: f64,
    pub best_value: f64,
    pub best_theta: &'a [f64],
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopOutcome {
    pub theta: Vec<f64>,
    pub value: f64,
    pub hops: usize,
    pub accepted: usize,
    pub evaluations: usize,
    /// `(evaluations so far, best value so far)` after each hop.
    pub trajectory: Vec<(usize, f64)>,
}

/// Uniform draw from `[lo, hi)` per parameter.
pub fn random_initial(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Perturb, minimize locally, accept by the Metropolis rule; returns the best
/// minimum seen. The callback may stop the search early by returning `false`.
pub fn basin_hopping<F: Objective + ?Sized>(
    f: &F,
    theta0: &[f64],
    opts: &BasinHoppingOptions,
    mut callback: Option<&mut dyn FnMut(&HopProgress<'_>) -> bool>,
) -> Result<HopOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let first = bfgs_minimize(f, theta0, &opts.bfgs)?;
    let mut evaluations = first.evaluations;
    let (mut cur, mut cur_f) = (first.theta, first.value);
    let (mut best, mut best_f) = (cur.clone(), cur_f);
    let mut trajectory = vec![(evaluations, best_f)];
    let mut accepted = 0;
    let mut hops = 1;
    let mut go_on = |hop: usize, value: f64, best: &[f64], best_f: f64, evaluations: usize| match callback.as_mut() {
        Some(cb) => cb(&HopProgress { hop, value, best_value: best_f, best_theta: best, evaluations }),
        None => true,
    };
    if !go_on(0, cur_f, &best, best_f, evaluations) {
        return Ok(HopOutcome { theta: best, value: best_f, hops, accepted, evaluations, trajectory });
    }
    for hop in 1..opts.n_hops {
        let trial: Vec<f64> = cur.iter().map(|v| v + rng.random_range(-opts.step_scale..opts.step_scale)).collect();
        let r = bfgs_minimize(f, &trial, &opts.bfgs)?;
        evaluations += r.evaluations;
        hops += 1;
        let temperature = opts.temperature_scale * cur_f.abs();
        let u: f64 = rng.random();
        let accept = r.value < cur_f || (temperature > 0.0 && u < (-(r.value - cur_f) / temperature).exp());
        if r.value < best_f {
            best = r.theta.clone();
            best_f = r.value;
        }
        if accept {
            accepted += 1;
            cur = r.theta;
            cur_f = r.value;
        }
        trajectory.push((evaluations, best_f));
        if !go_on(hop, r.value, &best, best_f, evaluations) {
            break;
        }
    }
    Ok(HopOutcome { theta: best, value: best_f, hops, accepted, evaluations, trajectory })
}
