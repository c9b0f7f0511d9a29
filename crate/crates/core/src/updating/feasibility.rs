//! Feasibility phase: minimal constraint residual over the nonnegative orthant.

use nalgebra::{DMatrix, DVector};

use crate::evidence::ConvexSet;

const POCS_SWEEPS: usize = 20_000;

/// Lawson–Hanson nonnegative least squares: `min ‖Ax − b‖` over `x ≥ 0`.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    if n == 0 {
        return x;
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0) * b.amax().max(1.0);
    let tol = 1e-13 * scale * (n.max(a.nrows()) as f64);
    let mut passive = vec![false; n];
    let at = a.transpose();
    for _ in 0..(3 * n + 10) {
        let w = &at * (b - a * &x);
        let candidate = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _ in 0..(3 * n + 10) {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = a.select_columns(idx.iter());
            let z = match sub.clone().svd(true, true).solve(b, 1e-14) {
                Ok(z) => z,
                Err(_) => break,
            };
            if z.iter().all(|&v| v > 0.0) {
                for (k, &col) in idx.iter().enumerate() {
                    x[col] = z[k];
                }
                break;
            }
            // Step back to the boundary and drop the columns that hit zero.
            let mut alpha = 1.0f64;
            for (k, &col) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    alpha = alpha.min(x[col] / (x[col] - z[k]));
                }
            }
            for (k, &col) in idx.iter().enumerate() {
                x[col] += alpha * (z[k] - x[col]);
                if x[col] <= tol * 1e-3 {
                    x[col] = 0.0;
                    passive[col] = false;
                }
            }
        }
    }
    x
}

/// Largest affine violation `‖Ax − b‖∞`.
pub(crate) fn affine_violation(rows: &[Vec<f64>], targets: &[f64], x: &[f64]) -> f64 {
    rows.iter()
        .zip(targets)
        .map(|(r, t)| (r.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() - t).abs())
        .fold(0.0, f64::max)
}

/// Feasibility of `{x ≥ 0 (when required), Ax = b, x ∈ Cⱼ}` on the free
/// coordinates; returns a near-feasible point and its largest violation.
pub(crate) fn feasibility(
    rows: &[Vec<f64>],
    targets: &[f64],
    convex: &[&ConvexSet],
    nonnegative: bool,
    n: usize,
) -> (Vec<f64>, f64) {
    if convex.is_empty() {
        let x = if rows.is_empty() {
            vec![0.0; n]
        } else if nonnegative {
            let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
            nnls(&a, &DVector::from_column_slice(targets)).iter().copied().collect()
        } else {
            least_squares(rows, targets, n)
        };
        let r = affine_violation(rows, targets, &x);
        return (x, r);
    }
    // Alternating projections onto the affine set, the orthant and each set.
    let pinv = affine_projector(rows, targets, n);
    let mut x = vec![0.0; n];
    let violation = |x: &[f64]| {
        let mut v = affine_violation(rows, targets, x);
        for c in convex {
            v = v.max(c.distance(x));
        }
        if nonnegative {
            v = v.max(x.iter().fold(0.0, |m, &xi| m.max(-xi)));
        }
        v
    };
    for _ in 0..POCS_SWEEPS {
        if let Some(p) = &pinv {
            x = p(&x);
        }
        if nonnegative {
            x.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        for c in convex {
            x = c.project(&x);
        }
        if violation(&x) <= 1e-13 {
            break;
        }
    }
    let r = violation(&x);
    (x, r)
}

fn least_squares(rows: &[Vec<f64>], targets: &[f64], n: usize) -> Vec<f64> {
    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    a.svd(true, true)
        .solve(&DVector::from_column_slice(targets), 1e-14)
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|_| vec![0.0; n])
}

/// Euclidean projector onto the least-squares solutions of `Ax = b`.
pub(crate) fn affine_projector(rows: &[Vec<f64>], targets: &[f64], n: usize) -> Option<impl Fn(&[f64]) -> Vec<f64>> {
    if rows.is_empty() {
        return None;
    }
    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let pinv = a.clone().pseudo_inverse(1e-12).ok()?;
    let b = DVector::from_column_slice(targets);
    Some(move |x: &[f64]| {
        let xv = DVector::from_column_slice(x);
        let corr = &pinv * (&a * &xv - &b);
        (xv - corr).iter().copied().collect()
    })
}
