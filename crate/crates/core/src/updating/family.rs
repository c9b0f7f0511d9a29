//! Updating within an exponential family: Newton in the natural parameters.

use nalgebra::DMatrix;

use crate::state::{ExpFamily, StateChart};

use super::newton::{self, NewtonReport};

/// Minimizes `J(θ) = objective(p_θ)` with the chain-rule gradient and a
/// finite-difference Hessian of that gradient.
pub(crate) fn minimize_in_family(
    fam: &ExpFamily,
    theta0: Vec<f64>,
    tol: f64,
    max_iter: usize,
    value: impl Fn(&[f64]) -> f64,
    gradient: impl Fn(&[f64]) -> Option<Vec<f64>>,
) -> Option<NewtonReport> {
    let k = fam.dim();
    let grad_theta = |theta: &[f64]| -> Option<Vec<f64>> {
        let p = fam.weights_at(theta).ok()?;
        let gp = gradient(&p)?;
        let jac = fam.jacobian(theta).ok()?;
        Some(jac.iter().map(|col| col.iter().zip(&gp).map(|(a, b)| a * b).sum()).collect())
    };
    newton::minimize(theta0, tol, max_iter, |theta| {
        if !fam.is_interior(theta) {
            return None;
        }
        let p = fam.weights_at(theta).ok()?;
        let v = value(&p);
        if !v.is_finite() {
            return None;
        }
        let g = grad_theta(theta)?;
        let mut h = DMatrix::zeros(k, k);
        for j in 0..k {
            let step = 1e-5 * theta[j].abs().max(1.0);
            let mut up = theta.to_vec();
            let mut dn = theta.to_vec();
            up[j] += step;
            dn[j] -= step;
            let (gu, gd) = match (grad_theta(&up), grad_theta(&dn)) {
                (Some(a), Some(b)) => (a, b),
                _ => return None,
            };
            for i in 0..k {
                h[(i, j)] = (gu[i] - gd[i]) / (2.0 * step);
            }
        }
        let sym = (&h + h.transpose()) * 0.5;
        Some((v, g, sym))
    })
}
