//! Cyclic Bregman projections with Dykstra correction vectors.
//!
//! Computes `argmin_x D_Φ(x, center)` over an intersection of hyperplanes,
//! the nonnegative orthant (when `Φ` extends below zero) and, for the
//! squared norm, closed convex sets. Each visit projects
//! `∇Φ*(∇Φ(x) + eⱼ)` onto set `j` and stores the new correction `eⱼ` in the
//! dual (gradient) space.

use crate::divergence::Generator;
use crate::error::{Error, Result};
use crate::evidence::ConvexSet;

#[derive(Debug, Clone)]
pub(crate) struct CyclicResult {
    pub x: Vec<f64>,
    /// Multiplier of each hyperplane, in input order.
    pub multipliers: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

fn primal(gen: Generator, y: &[f64]) -> Vec<f64> {
    y.iter().map(|&v| gen.d1_inverse(v)).collect()
}

/// Solves `a·∇Φ*(y + μa) = c` for `μ`.
fn hyperplane_multiplier(gen: Generator, y: &[f64], a: &[f64], c: f64) -> Result<f64> {
    let aa: f64 = a.iter().map(|v| v * v).sum();
    if aa == 0.0 {
        return if c.abs() <= 1e-12 {
            Ok(0.0)
        } else {
            Err(Error::Domain("zero constraint row with nonzero target".into()))
        };
    }
    match gen {
        Generator::SquaredNorm => {
            let az: f64 = a.iter().zip(y).map(|(ai, yi)| ai * yi * 0.5).sum();
            Ok(2.0 * (c - az) / aa)
        }
        Generator::NegEntropy => {
            let g = |mu: f64| -> (f64, f64) {
                let mut v = -c;
                let mut d = 0.0;
                for (ai, yi) in a.iter().zip(y) {
                    let e = (yi + mu * ai).min(700.0).exp();
                    v += ai * e;
                    d += ai * ai * e;
                }
                (v, d)
            };
            // g is nondecreasing in μ; bracket the root, then safeguarded Newton.
            let (mut lo, mut hi) = (-1.0, 1.0);
            let mut grow = 0;
            while g(lo).0 > 0.0 {
                lo *= 2.0;
                grow += 1;
                if grow > 60 {
                    return Err(Error::Domain("hyperplane unreachable from the positive orthant".into()));
                }
            }
            grow = 0;
            while g(hi).0 < 0.0 {
                hi *= 2.0;
                grow += 1;
                if grow > 60 {
                    return Err(Error::Domain("hyperplane unreachable from the positive orthant".into()));
                }
            }
            let mut mu = 0.0f64.clamp(lo, hi);
            for _ in 0..200 {
                let (v, d) = g(mu);
                if v.abs() <= 1e-15 * c.abs().max(1.0) {
                    break;
                }
                if v > 0.0 {
                    hi = mu;
                } else {
                    lo = mu;
                }
                let step = mu - v / d;
                mu = if d > 0.0 && step > lo && step < hi { step } else { 0.5 * (lo + hi) };
                if hi - lo <= 1e-16 * mu.abs().max(1.0) {
                    break;
                }
            }
            Ok(mu)
        }
    }
}

pub(crate) fn cyclic_bregman(
    gen: Generator,
    center: &[f64],
    hyperplanes: &[(Vec<f64>, f64)],
    convex: &[&ConvexSet],
    tol: f64,
    max_sweeps: usize,
) -> Result<CyclicResult> {
    if !convex.is_empty() && gen != Generator::SquaredNorm {
        return Err(Error::Unsupported("convex-set constraints need the squared-norm generator".into()));
    }
    let n = center.len();
    let orthant = gen.extends_below_zero();
    let n_sets = hyperplanes.len() + usize::from(orthant) + convex.len();
    let mut y: Vec<f64> = center.iter().map(|&c| gen.d1(c)).collect();
    let mut corrections = vec![vec![0.0; n]; n_sets];
    let mut mus = vec![0.0; hyperplanes.len()];
    let mut x = primal(gen, &y);
    for sweep in 1..=max_sweeps {
        let x_prev = x.clone();
        for j in 0..n_sets {
            let z_dual: Vec<f64> = y.iter().zip(&corrections[j]).map(|(a, b)| a + b).collect();
            let y_new: Vec<f64> = if j < hyperplanes.len() {
                let (a, c) = &hyperplanes[j];
                let mu = hyperplane_multiplier(gen, &z_dual, a, *c)?;
                mus[j] = mu;
                z_dual.iter().zip(a).map(|(z, ai)| z + mu * ai).collect()
            } else {
                let z = primal(gen, &z_dual);
                let p = if orthant && j == hyperplanes.len() {
                    z.iter().map(|v| v.max(0.0)).collect()
                } else {
                    let k = j - hyperplanes.len() - usize::from(orthant);
                    convex[k].project(&z)
                };
                p.iter().map(|&v| gen.d1(v)).collect()
            };
            corrections[j] = z_dual.iter().zip(&y_new).map(|(z, v)| z - v).collect();
            y = y_new;
        }
        x = primal(gen, &y);
        let change = x.iter().zip(&x_prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let violation = hyperplanes
            .iter()
            .map(|(a, c)| (a.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() - c).abs())
            .fold(0.0, f64::max);
        if change <= tol * scale && violation <= tol * scale {
            return Ok(CyclicResult { x, multipliers: mus, sweeps: sweep, converged: true });
        }
    }
    Ok(CyclicResult { x, multipliers: mus, sweeps: max_sweeps, converged: false })
}
