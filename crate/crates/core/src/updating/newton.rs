//! Damped Newton minimization with Armijo backtracking.

use nalgebra::{DMatrix, DVector};

/// Armijo sufficient-decrease constant.
pub(crate) const ARMIJO_C: f64 = 1e-4;
/// Step contraction factor of the backtracking line search.
pub(crate) const BACKTRACK: f64 = 0.5;
const MIN_STEP: f64 = 1e-20;

/// Value, gradient and Hessian at a point; `None` outside the domain.
pub(crate) type Evaluation = Option<(f64, Vec<f64>, DMatrix<f64>)>;

#[derive(Debug, Clone)]
pub(crate) struct NewtonReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton direction `−H⁻¹g`, regularized when `H` is not positive definite.
fn direction(hess: &DMatrix<f64>, grad: &[f64]) -> Vec<f64> {
    let g = DVector::from_column_slice(grad);
    if let Some(ch) = hess.clone().cholesky() {
        return (-ch.solve(&g)).iter().copied().collect();
    }
    let scale = hess.diagonal().iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let mut ridge = 1e-12 * scale;
    for _ in 0..40 {
        let reg = hess + DMatrix::identity(grad.len(), grad.len()) * ridge;
        if let Some(ch) = reg.cholesky() {
            return (-ch.solve(&g)).iter().copied().collect();
        }
        ridge *= 10.0;
    }
    grad.iter().map(|x| -x).collect()
}

/// Minimizes a smooth convex function from `x0`.
///
/// A step is accepted on Armijo decrease, or, once the objective is flat to
/// rounding, on a decrease of the gradient norm.
pub(crate) fn minimize<F>(x0: Vec<f64>, tol: f64, max_iter: usize, mut eval: F) -> Option<NewtonReport>
where
    F: FnMut(&[f64]) -> Evaluation,
{
    let mut x = x0;
    let (mut fx, mut gx, mut hx) = eval(&x)?;
    for it in 0..max_iter {
        let gn = inf_norm(&gx);
        if gn <= tol {
            return Some(NewtonReport { x, iterations: it, grad_norm: gn, converged: true });
        }
        let mut d = direction(&hx, &gx);
        let mut slope: f64 = d.iter().zip(&gx).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            d = gx.iter().map(|v| -v).collect();
            slope = -gx.iter().map(|v| v * v).sum::<f64>();
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t >= MIN_STEP {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            if let Some((ft, gt, ht)) = eval(&xt) {
                let armijo = ft <= fx + ARMIJO_C * t * slope;
                let flat = (ft - fx).abs() <= 1e-14 * fx.abs().max(1.0) && inf_norm(&gt) < gn;
                if ft.is_finite() && (armijo || flat) {
                    accepted = Some((xt, ft, gt, ht));
                    break;
                }
            }
            t *= BACKTRACK;
        }
        match accepted {
            Some((xt, ft, gt, ht)) => {
                x = xt;
                fx = ft;
                gx = gt;
                hx = ht;
            }
            None => {
                return Some(NewtonReport { x, iterations: it, grad_norm: gn, converged: false });
            }
        }
    }
    let gn = inf_norm(&gx);
    Some(NewtonReport { x, iterations: max_iter, grad_norm: gn, converged: gn <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_quadratic_in_one_step() {
        let r = minimize(vec![3.0, -1.0], 1e-12, 10, |x| {
            let f = (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 2.0).powi(2);
            let g = vec![2.0 * (x[0] - 1.0), 4.0 * (x[1] + 2.0)];
            Some((f, g, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0])))
        })
        .unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 2);
        assert!((r.x[0] - 1.0).abs() < 1e-12 && (r.x[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn respects_domain_through_backtracking() {
        // f(x) = x − log x on x > 0, minimum at 1.
        let r = minimize(vec![10.0], 1e-12, 100, |x| {
            if x[0] <= 0.0 {
                return None;
            }
            Some((x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]], DMatrix::from_element(1, 1, 1.0 / (x[0] * x[0]))))
        })
        .unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-10);
    }
}
