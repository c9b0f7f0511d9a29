//! Damped projected-gradient fallback with Barzilai–Borwein steps.

use crate::evidence::ConvexSet;

use super::newton::{ARMIJO_C, BACKTRACK};

const DYKSTRA_SWEEPS: usize = 5_000;

/// Euclidean projection onto `{Ax = b} ∩ {x ≥ lower} ∩ ⋂ Cⱼ` by Dykstra's
/// algorithm.
pub(crate) struct FeasibleProjector<'a> {
    affine: Option<Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>>,
    lower: Option<Vec<f64>>,
    convex: Vec<&'a ConvexSet>,
}

impl<'a> FeasibleProjector<'a> {
    pub fn new(
        affine: Option<Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>>,
        lower: Option<Vec<f64>>,
        convex: Vec<&'a ConvexSet>,
    ) -> Self {
        Self { affine, lower, convex }
    }

    fn n_sets(&self) -> usize {
        usize::from(self.affine.is_some()) + usize::from(self.lower.is_some()) + self.convex.len()
    }

    fn project_one(&self, j: usize, x: &[f64]) -> Vec<f64> {
        let mut j = j;
        if let Some(a) = &self.affine {
            if j == 0 {
                return a(x);
            }
            j -= 1;
        }
        if let Some(lo) = &self.lower {
            if j == 0 {
                return x.iter().zip(lo).map(|(v, l)| v.max(*l)).collect();
            }
            j -= 1;
        }
        self.convex[j].project(x)
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let m = self.n_sets();
        if m == 0 {
            return y.to_vec();
        }
        if m == 1 {
            return self.project_one(0, y);
        }
        let n = y.len();
        let mut x = y.to_vec();
        let mut corr = vec![vec![0.0; n]; m];
        for _ in 0..DYKSTRA_SWEEPS {
            let prev = x.clone();
            for (j, c) in corr.iter_mut().enumerate() {
                let shifted: Vec<f64> = x.iter().zip(c.iter()).map(|(a, b)| a + b).collect();
                let z = self.project_one(j, &shifted);
                for i in 0..n {
                    c[i] = shifted[i] - z[i];
                }
                x = z;
            }
            let change = x.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change <= 1e-15 * x.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
                break;
            }
        }
        x
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DescentReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖x − P(x − ∇f(x))‖∞` at exit.
    pub stationarity: f64,
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Minimizes `f` over the projector's set, starting from `P(x0)`.
pub(crate) fn projected_gradient(
    x0: &[f64],
    projector: &FeasibleProjector<'_>,
    tol: f64,
    max_iter: usize,
    value: impl Fn(&[f64]) -> f64,
    gradient: impl Fn(&[f64]) -> Option<Vec<f64>>,
) -> DescentReport {
    let mut x = projector.project(x0);
    let mut fx = value(&x);
    let Some(mut g) = gradient(&x) else {
        return DescentReport { x, iterations: 0, converged: false, stationarity: f64::INFINITY };
    };
    let mut alpha = 1.0;
    let mut stationarity = f64::INFINITY;
    for it in 0..max_iter {
        let probe: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
        stationarity = inf_dist(&x, &projector.project(&probe));
        if stationarity <= tol {
            return DescentReport { x, iterations: it, converged: true, stationarity };
        }
        let mut t = alpha;
        let mut next = None;
        while t > 1e-20 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let xt = projector.project(&trial);
            let ft = value(&xt);
            let decrease: f64 = g.iter().zip(xt.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
            if ft.is_finite() && ft <= fx + ARMIJO_C * decrease {
                if let Some(gt) = gradient(&xt) {
                    next = Some((xt, ft, gt));
                    break;
                }
            }
            t *= BACKTRACK;
        }
        let Some((xt, ft, gt)) = next else {
            return DescentReport { x, iterations: it, converged: false, stationarity };
        };
        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (t * 2.0).min(1e12) };
        let step = inf_dist(&xt, &x);
        let flat = (fx - ft).abs() <= 1e-16 * fx.abs().max(1.0);
        x = xt;
        fx = ft;
        g = gt;
        if step == 0.0 && flat {
            break;
        }
    }
    let probe: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
    stationarity = stationarity.min(inf_dist(&x, &projector.project(&probe)));
    DescentReport { x, iterations: max_iter, converged: stationarity <= tol, stationarity }
}
