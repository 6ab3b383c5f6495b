use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BfgsOptions {
    /// Stop once the largest gradient component is at most this.
    pub gtol: f64,
    pub max_iter: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { gtol: 1e-8, max_iter: 500 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BfgsResult {
    pub theta: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// The line search failed even after resetting the inverse Hessian; the best
    /// iterate is returned.
    pub line_search_failed: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(x, d)| x + a * d).collect()
}

struct Counter<'a, F: Objective + ?Sized> {
    f: &'a F,
    evaluations: usize,
}

impl<F: Objective + ?Sized> Counter<'_, F> {
    fn value(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let v = self.f.value(x)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{x:?}")));
        }
        Ok(v)
    }

    fn gradient(&mut self, x: &[f64], fx: f64) -> Result<Vec<f64>> {
        self.evaluations += self.f.gradient_cost(x.len());
        self.f.gradient(x, fx)
    }
}

/// Point on the search line with its value and directional derivative.
#[derive(Clone)]
struct LinePoint {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

/// Line search satisfying the strong Wolfe conditions, by bracketing and zoom.
fn strong_wolfe<F: Objective + ?Sized>(
    c: &mut Counter<'_, F>,
    x: &[f64],
    d: &[f64],
    f0: f64,
    dphi0: f64,
) -> Result<Option<LinePoint>> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    const MAX_STEPS: usize = 30;
    let eval = |c: &mut Counter<'_, F>, alpha: f64| -> Result<LinePoint> {
        let xa = axpy(x, alpha, d);
        let f = c.value(&xa)?;
        let g = c.gradient(&xa, f)?;
        let dphi = dot(&g, d);
        Ok(LinePoint { alpha, f, g, dphi })
    };
    let mut prev = LinePoint { alpha: 0.0, f: f0, g: Vec::new(), dphi: dphi0 };
    let mut alpha = 1.0;
    for i in 0..MAX_STEPS {
        let cur = eval(c, alpha)?;
        if cur.f > f0 + C1 * alpha * dphi0 || (i > 0 && cur.f >= prev.f) {
            return zoom(c, &eval, prev, cur, f0, dphi0);
        }
        if cur.dphi.abs() <= -C2 * dphi0 {
            return Ok(Some(cur));
        }
        if cur.dphi >= 0.0 {
            return zoom(c, &eval, cur, prev, f0, dphi0);
        }
        prev = cur;
        alpha *= 2.0;
    }
    Ok(None)
}

fn zoom<F: Objective + ?Sized>(
    c: &mut Counter<'_, F>,
    eval: &dyn Fn(&mut Counter<'_, F>, f64) -> Result<LinePoint>,
    mut lo: LinePoint,
    mut hi: LinePoint,
    f0: f64,
    dphi0: f64,
) -> Result<Option<LinePoint>> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    for _ in 0..40 {
        // cubic interpolation, falling back to bisection when it leaves the bracket
        let (a, b) = (lo.alpha, hi.alpha);
        let d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (a - b);
        let disc = d1 * d1 - lo.dphi * hi.dphi;
        let mut alpha = if disc >= 0.0 {
            let d2 = (b - a).signum() * disc.sqrt();
            b - (b - a) * (hi.dphi + d2 - d1) / (hi.dphi - lo.dphi + 2.0 * d2)
        } else {
            f64::NAN
        };
        let (mn, mx) = (a.min(b), a.max(b));
        let margin = 0.1 * (mx - mn);
        if !alpha.is_finite() || alpha < mn + margin || alpha > mx - margin {
            alpha = 0.5 * (a + b);
        }
        if (mx - mn) < 1e-16 * mx.max(1.0) {
            break;
        }
        let cur = eval(c, alpha)?;
        if cur.f > f0 + C1 * alpha * dphi0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.dphi.abs() <= -C2 * dphi0 {
                return Ok(Some(cur));
            }
            if cur.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // accept the best sufficient-decrease point if the curvature test never passed
    if lo.alpha > 0.0 && lo.f < f0 {
        return Ok(Some(lo));
    }
    Ok(None)
}

/// Quasi-Newton minimization with BFGS updates of the inverse Hessian.
///
/// The returned value never exceeds `f(theta0)`.
pub fn bfgs_minimize<F: Objective + ?Sized>(f: &F, theta0: &[f64], opts: &BfgsOptions) -> Result<BfgsResult> {
    let n = theta0.len();
    let mut c = Counter { f, evaluations: 0 };
    let mut x = theta0.to_vec();
    let mut fx = c.value(&x)?;
    if n == 0 {
        return Ok(BfgsResult {
            theta: x,
            value: fx,
            iterations: 0,
            evaluations: c.evaluations,
            converged: true,
            line_search_failed: false,
        });
    }
    let mut g = c.gradient(&x, fx)?;
    let identity = |n: usize| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
        h
    };
    let mut h = identity(n);
    let mut fresh = true;
    let mut failed = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if inf_norm(&g) <= opts.gtol {
            break;
        }
        iterations += 1;
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut dphi0 = dot(&g, &d);
        if dphi0 >= 0.0 {
            h = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            dphi0 = dot(&g, &d);
        }
        let step = match strong_wolfe(&mut c, &x, &d, fx, dphi0)? {
            Some(p) => p,
            None if !fresh => {
                // retry once along the steepest descent direction
                h = identity(n);
                fresh = true;
                continue;
            }
            None => {
                failed = true;
                break;
            }
        };
        let x_new = axpy(&x, step.alpha, &d);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if fresh {
                // scale the initial inverse Hessian to the observed curvature
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            fresh = false;
        }
        let improved = step.f < fx;
        x = x_new;
        fx = step.f;
        g = step.g;
        if !improved && s.iter().all(|v| v.abs() < 1e-15) {
            break;
        }
    }
    Ok(BfgsResult {
        theta: x,
        value: fx,
        iterations,
        evaluations: c.evaluations,
        converged: inf_norm(&g) <= opts.gtol,
        line_search_failed: failed,
    })
}
