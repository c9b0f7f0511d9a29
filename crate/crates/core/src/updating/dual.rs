//! Dual Newton solvers for KL projections onto affine sets.
//!
//! First slot (`min_φ KL(φ‖c)` s.t. `Aφ = b`): `φ = c·exp(Aᵀλ)` and the dual
//! `λ ↦ Σ cᵢ exp(sᵢ) − λ·b` is strictly convex.
//!
//! Second slot (`min_φ KL(c‖φ)` s.t. `Aφ = b`): `φ = c / (1 + Aᵀλ)` and the
//! dual `λ ↦ λ·b − Σ cᵢ log(1 + sᵢ)` is strictly convex on `1 + s > 0`.

use nalgebra::DMatrix;

use super::newton;

#[derive(Debug, Clone)]
pub(crate) struct DualSolution {
    pub phi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn tilts(rows: &[Vec<f64>], lambda: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| rows.iter().zip(lambda).map(|(r, l)| r[i] * l).sum()).collect()
}

fn weighted_gram(rows: &[Vec<f64>], w: &[f64]) -> DMatrix<f64> {
    let k = rows.len();
    DMatrix::from_fn(k, k, |a, b| rows[a].iter().zip(&rows[b]).zip(w).map(|((x, y), v)| x * y * v).sum())
}

fn residual(rows: &[Vec<f64>], targets: &[f64], phi: &[f64]) -> f64 {
    rows.iter()
        .zip(targets)
        .map(|(r, b)| (r.iter().zip(phi).map(|(x, y)| x * y).sum::<f64>() - b).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn first_slot_weights(center: &[f64], rows: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let s = tilts(rows, lambda, center.len());
    center.iter().zip(&s).map(|(c, si)| c * si.exp()).collect()
}

pub(crate) fn kl_first_slot(
    center: &[f64],
    rows: &[Vec<f64>],
    targets: &[f64],
    tol: f64,
    max_iter: usize,
) -> DualSolution {
    let report = newton::minimize(vec![0.0; rows.len()], tol, max_iter, |lambda| {
        let phi = first_slot_weights(center, rows, lambda);
        if phi.iter().any(|p| !p.is_finite()) {
            return None;
        }
        let value = phi.iter().sum::<f64>() - lambda.iter().zip(targets).map(|(l, b)| l * b).sum::<f64>();
        let grad: Vec<f64> = rows
            .iter()
            .zip(targets)
            .map(|(r, b)| r.iter().zip(&phi).map(|(x, p)| x * p).sum::<f64>() - b)
            .collect();
        Some((value, grad, weighted_gram(rows, &phi)))
    });
    finish(report, rows, targets, |lambda| first_slot_weights(center, rows, lambda), center)
}

pub(crate) fn second_slot_weights(center: &[f64], rows: &[Vec<f64>], lambda: &[f64]) -> Option<Vec<f64>> {
    let s = tilts(rows, lambda, center.len());
    center
        .iter()
        .zip(&s)
        .map(|(c, si)| {
            let d = 1.0 + si;
            if d > 0.0 {
                Some(c / d)
            } else {
                None
            }
        })
        .collect()
}

pub(crate) fn kl_second_slot(
    center: &[f64],
    rows: &[Vec<f64>],
    targets: &[f64],
    tol: f64,
    max_iter: usize,
) -> DualSolution {
    let report = newton::minimize(vec![0.0; rows.len()], tol, max_iter, |lambda| {
        let s = tilts(rows, lambda, center.len());
        if s.iter().any(|si| !(1.0 + si > 0.0)) {
            return None;
        }
        let value = lambda.iter().zip(targets).map(|(l, b)| l * b).sum::<f64>()
            - center.iter().zip(&s).map(|(c, si)| c * si.ln_1p()).sum::<f64>();
        let phi: Vec<f64> = center.iter().zip(&s).map(|(c, si)| c / (1.0 + si)).collect();
        let grad: Vec<f64> = rows
            .iter()
            .zip(targets)
            .map(|(r, b)| b - r.iter().zip(&phi).map(|(x, p)| x * p).sum::<f64>())
            .collect();
        let w: Vec<f64> = phi.iter().zip(center).map(|(p, c)| p * p / c).collect();
        Some((value, grad, weighted_gram(rows, &w)))
    });
    finish(
        report,
        rows,
        targets,
        |lambda| second_slot_weights(center, rows, lambda).unwrap_or_else(|| vec![f64::NAN; center.len()]),
        center,
    )
}

fn finish(
    report: Option<newton::NewtonReport>,
    rows: &[Vec<f64>],
    targets: &[f64],
    weights: impl Fn(&[f64]) -> Vec<f64>,
    center: &[f64],
) -> DualSolution {
    match report {
        Some(r) => {
            let phi = weights(&r.x);
            let res = residual(rows, targets, &phi);
            DualSolution { phi, lambda: r.x, iterations: r.iterations, residual: res, converged: r.converged }
        }
        None => DualSolution {
            phi: center.to_vec(),
            lambda: vec![0.0; rows.len()],
            iterations: 0,
            residual: residual(rows, targets, center),
            converged: false,
        },
    }
}
