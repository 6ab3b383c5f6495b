use serde::{Deserialize, Serialize};

use crate::circuits::transfer_parameters;
use crate::error::{Error, Result};

/// An ordered grid of related minimization problems.
pub trait SweepProblem {
    fn len(&self) -> usize;

    fn n_params(&self, i: usize) -> usize;

    /// Figure of merit at point `i`.
    fn cost(&self, i: usize, theta: &[f64]) -> Result<f64>;

    /// Local or global minimization at point `i` starting from `theta0`; must not
    /// return a cost above `cost(i, theta0)`.
    fn refine(&self, i: usize, theta0: &[f64]) -> Result<(Vec<f64>, f64)>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// A pass that improves no point by more than this ends the sweep.
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_passes: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub theta: Vec<f64>,
    pub cost: f64,
    /// Grid point whose parameters seeded the current best, `None` for the initial one.
    pub seeded_by: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    /// Forward plus backward passes performed.
    pub passes: usize,
    pub converged: bool,
}

/// Transfers the best parameters of each point to its neighbour (zero-padding or
/// truncating), refines there and keeps the result when it is better. Passes
/// alternate forward and backward until a full round trip changes nothing.
///
/// `initial` holds one independently optimized parameter vector per point; the
/// sweep result is never worse than it.
pub fn warm_start_sweep<P: SweepProblem + ?Sized>(
    problem: &P,
    initial: Vec<Vec<f64>>,
    opts: &SweepOptions,
) -> Result<SweepOutcome> {
    let n = problem.len();
    if initial.len() != n {
        return Err(Error::InvalidArgument(format!("{} initial vectors for {n} grid points", initial.len())));
    }
    let mut points = Vec::with_capacity(n);
    for (i, theta) in initial.into_iter().enumerate() {
        if theta.len() != problem.n_params(i) {
            return Err(Error::ParameterCount { expected: problem.n_params(i), got: theta.len() });
        }
        let cost = problem.cost(i, &theta)?;
        points.push(SweepPoint { theta, cost, seeded_by: None });
    }
    let mut passes = 0;
    let mut converged = n < 2;
    while !converged && passes < opts.max_passes {
        let mut gain = 0.0f64;
        for forward in [true, false] {
            let order: Vec<usize> = if forward { (1..n).collect() } else { (0..n - 1).rev().collect() };
            for i in order {
                let src = if forward { i - 1 } else { i + 1 };
                let seed = transfer_parameters(&points[src].theta, problem.n_params(i));
                let (theta, cost) = problem.refine(i, &seed)?;
                if cost < points[i].cost {
                    gain = gain.max(points[i].cost - cost);
                    points[i] = SweepPoint { theta, cost, seeded_by: Some(src) };
                }
            }
            passes += 1;
        }
        converged = gain <= opts.tol;
    }
    Ok(SweepOutcome { points, passes, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Point `i` minimizes `Σ_{k<m_i} (x_k − 1)²` over `m_i` parameters but the
    /// refinement only moves the first coordinate.
    struct Toy {
        sizes: Vec<usize>,
    }

    impl SweepProblem for Toy {
        fn len(&self) -> usize {
            self.sizes.len()
        }
        fn n_params(&self, i: usize) -> usize {
            self.sizes[i]
        }
        fn cost(&self, _i: usize, theta: &[f64]) -> Result<f64> {
            Ok(theta.iter().map(|x| (x - 1.0).powi(2)).sum())
        }
        fn refine(&self, i: usize, theta0: &[f64]) -> Result<(Vec<f64>, f64)> {
            let mut t = theta0.to_vec();
            let k = i.min(t.len() - 1);
            t[k] = 1.0;
            let c = self.cost(i, &t)?;
            Ok((t, c))
        }
    }

    #[test]
    fn information_flows_both_ways() {
        let p = Toy { sizes: vec![3, 3, 3] };
        let out = warm_start_sweep(&p, vec![vec![0.0; 3]; 3], &SweepOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.points.iter().all(|q| q.cost == 0.0), "{:?}", out.points);
    }

    #[test]
    fn never_worse_than_the_start() {
        let p = Toy { sizes: vec![2, 3, 4] };
        let init = vec![vec![1.0, 0.5], vec![0.0, 0.0, 0.0], vec![1.0; 4]];
        let before: Vec<f64> = init.iter().enumerate().map(|(i, t)| p.cost(i, t).unwrap()).collect();
        let out = warm_start_sweep(&p, init, &SweepOptions::default()).unwrap();
        for (a, b) in out.points.iter().zip(before) {
            assert!(a.cost <= b);
        }
    }

    #[test]
    fn single_point_keeps_its_start() {
        let p = Toy { sizes: vec![2] };
        let out = warm_start_sweep(&p, vec![vec![0.5, 0.5]], &SweepOptions::default()).unwrap();
        assert_eq!(out.points[0].cost, 0.5);
        assert_eq!(out.passes, 0);
    }
}
