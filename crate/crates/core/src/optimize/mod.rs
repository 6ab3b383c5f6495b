//! Gradient-based local minimization, basin hopping and warm-started sweeps over
//! grids of related problems.

mod basin;
mod bfgs;
mod sweep;

pub use basin::{basin_hopping, random_initial, BasinHoppingOptions, HopOutcome, HopProgress};
pub use bfgs::{bfgs_minimize, BfgsOptions, BfgsResult};
pub use sweep::{warm_start_sweep, SweepOptions, SweepOutcome, SweepPoint, SweepProblem};

use crate::error::{Error, Result};

/// Forward-difference step used when an objective provides no gradient.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Scalar function of a parameter vector.
pub trait Objective {
    fn value(&self, theta: &[f64]) -> Result<f64>;

    /// Gradient at `theta`, given `fx = value(theta)`. Forward differences by default.
    fn gradient(&self, theta: &[f64], fx: f64) -> Result<Vec<f64>> {
        fd_gradient_at(|x| self.value(x), theta, fx, DEFAULT_FD_STEP)
    }

    /// Number of function evaluations one gradient costs.
    fn gradient_cost(&self, n: usize) -> usize {
        n
    }
}

impl<F: Fn(&[f64]) -> Result<f64>> Objective for F {
    fn value(&self, theta: &[f64]) -> Result<f64> {
        self(theta)
    }
}

/// Objective with a closed-form gradient.
pub struct AnalyticObjective<F, G> {
    pub f: F,
    pub g: G,
}

impl<F, G> Objective for AnalyticObjective<F, G>
where
    F: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    fn value(&self, theta: &[f64]) -> Result<f64> {
        (self.f)(theta)
    }

    fn gradient(&self, theta: &[f64], _fx: f64) -> Result<Vec<f64>> {
        (self.g)(theta)
    }

    fn gradient_cost(&self, _n: usize) -> usize {
        0
    }
}

fn finite(v: f64, theta: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{theta:?}")))
    }
}

/// Forward-difference gradient `(f(θ + δ e_i) − f(θ))/δ`.
pub fn fd_gradient<F: Objective + ?Sized>(f: &F, theta: &[f64], delta: f64) -> Result<Vec<f64>> {
    let fx = f.value(theta)?;
    fd_gradient_at(|x| f.value(x), theta, fx, delta)
}

/// [`fd_gradient`] reusing a known `f(θ)`.
pub fn fd_gradient_at(f: impl Fn(&[f64]) -> Result<f64>, theta: &[f64], fx: f64, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {delta}")));
    }
    let fx = finite(fx, theta)?;
    let mut x = theta.to_vec();
    let mut g = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + delta;
        let fi = finite(f(&x)?, &x)?;
        g.push((fi - fx) / delta);
        x[i] = theta[i];
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: impl Fn(&[f64]) -> Result<f64>, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += h;
                b[i] -= h;
                (f(&a).unwrap() - f(&b).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn quadratic_bias_is_the_step() {
        let f = |x: &[f64]| Ok(x.iter().map(|v| v * v).sum::<f64>());
        for delta in [1e-2, 1e-4] {
            let g = fd_gradient(&f, &[0.0, 0.0, 0.0], delta).unwrap();
            assert!(g.iter().all(|v| (v - delta).abs() < 1e-12));
        }
    }

    #[test]
    fn linear_functions_are_exact() {
        let f = |x: &[f64]| Ok(2.0 * x[0] - 3.0 * x[1] + 0.5);
        let g = fd_gradient(&f, &[0.25, -1.0], 0.5).unwrap();
        assert_eq!(g, vec![2.0, -3.0]);
    }

    #[test]
    fn forward_error_shrinks_linearly() {
        let f = |x: &[f64]| Ok((x[0] * 1.3).sin() * x[1].exp());
        let x = [0.4, -0.2];
        let c = central(f, &x, 1e-5);
        let e1: f64 = fd_gradient(&f, &x, 1e-3).unwrap().iter().zip(&c).map(|(a, b)| (a - b).abs()).sum();
        let e2: f64 = fd_gradient(&f, &x, 1e-4).unwrap().iter().zip(&c).map(|(a, b)| (a - b).abs()).sum();
        assert!((e1 / e2 - 10.0).abs() < 0.5, "{}", e1 / e2);
    }

    #[test]
    fn rejects_bad_steps_and_values() {
        let f = |x: &[f64]| Ok(x[0]);
        assert!(fd_gradient(&f, &[1.0], 0.0).is_err());
        let nan = |_: &[f64]| Ok(f64::NAN);
        assert!(matches!(fd_gradient(&nan, &[1.0], 1e-6), Err(Error::NonFinite(_))));
    }
}
