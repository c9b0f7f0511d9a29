//! Information geometry of a deviation on a parametrized family.
//!
//! With `D(θ, θ′) = D(p_θ, p_θ′)`:
//!
//! * metric `gᵢⱼ = ∂′ᵢ∂′ⱼ D |_{θ′=θ}`;
//! * `Γ_{ij,k} = −∂′ᵢ∂′ⱼ∂ₖ D |_{θ′=θ}`, the connection `∇` (exponential for KL);
//! * `Γ*_{ij,k} = −∂ᵢ∂ⱼ∂′ₖ D |_{θ′=θ}`, its dual `∇*` (mixture for KL).
//!
//! The two satisfy `∂ₖgᵢⱼ = Γ_{ki,j} + Γ*_{kj,i}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::divergence::DivergenceSpec;
use crate::error::{Error, Result};
use crate::state::{InformationState, StateChart};

/// Central difference step, `ε^{1/3}`. Deviations are evaluated in a
/// cancellation-free form, so the second differences tolerate it.
fn step(t: f64) -> f64 {
    t.abs().max(1.0) * f64::EPSILON.cbrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAtPoint {
    pub g: Vec<Vec<f64>>,
}

impl MetricAtPoint {
    /// Largest `|gᵢⱼ − gⱼᵢ|`.
    pub fn asymmetry(&self) -> f64 {
        let k = self.g.len();
        let mut m = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                m = m.max((self.g[i][j] - self.g[j][i]).abs());
            }
        }
        m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let k = self.g.len();
        if k == 0 {
            return f64::INFINITY;
        }
        let m = DMatrix::from_fn(k, k, |i, j| 0.5 * (self.g[i][j] + self.g[j][i]));
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Christoffel symbols of the first kind, indexed `[i][j][k]` for `Γ_{ij,k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualConnectionPair {
    pub gamma: Vec<Vec<Vec<f64>>>,
    pub gamma_star: Vec<Vec<Vec<f64>>>,
}

impl DualConnectionPair {
    /// Largest `|Γ_{ij,k} − Γ_{ji,k}|` over both connections.
    pub fn torsion(&self) -> f64 {
        let k = self.gamma.len();
        let mut m = 0.0f64;
        for c in [&self.gamma, &self.gamma_star] {
            for i in 0..k {
                for j in 0..k {
                    for l in 0..k {
                        m = m.max((c[i][j][l] - c[j][i][l]).abs());
                    }
                }
            }
        }
        m
    }

    pub fn max_abs_gamma(&self) -> f64 {
        self.gamma.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_gamma_star(&self) -> f64 {
        self.gamma_star.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn require_interior(chart: &dyn StateChart, theta: &[f64]) -> Result<()> {
    if theta.len() != chart.dim() {
        return Err(Error::Domain(format!("expected {} parameters, got {}", chart.dim(), theta.len())));
    }
    if !chart.is_interior(theta) {
        return Err(Error::Boundary(format!("parameters {theta:?} are not interior")));
    }
    Ok(())
}

/// The Fisher-type metric induced by `d` at `theta`.
///
/// Analytic (covariance of the sufficient statistics) for KL on an
/// exponential family; central second differences of `θ′ ↦ D(p_θ, p_θ′)`
/// otherwise. No normalization by `f″(1)` is applied.
pub fn metric_at(d: &DivergenceSpec, chart: &dyn StateChart, theta: &[f64]) -> Result<MetricAtPoint> {
    require_interior(chart, theta)?;
    if d.is_kl() {
        if let Some(fam) = chart.as_exp_family() {
            return Ok(MetricAtPoint { g: fam.covariance_at(theta)? });
        }
    }
    let k = chart.dim();
    let p = chart.weights_at(theta)?;
    let h: Vec<f64> = theta.iter().map(|&t| step(t)).collect();
    let dev = |shift: &[(usize, f64)]| -> Result<f64> {
        let mut t = theta.to_vec();
        for &(i, s) in shift {
            t[i] += s;
        }
        if !chart.is_interior(&t) {
            return Err(Error::Boundary(format!("difference stencil leaves the domain at {t:?}")));
        }
        d.eval(&p, &chart.weights_at(&t)?)
    };
    let mut g = vec![vec![0.0; k]; k];
    for i in 0..k {
        let hi = h[i];
        g[i][i] = (dev(&[(i, hi)])? + dev(&[(i, -hi)])?) / (hi * hi);
        for j in 0..i {
            let hj = h[j];
            let v = (dev(&[(i, hi), (j, hj)])? - dev(&[(i, hi), (j, -hj)])? - dev(&[(i, -hi), (j, hj)])?
                + dev(&[(i, -hi), (j, -hj)])?)
                / (4.0 * hi * hj);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok(MetricAtPoint { g })
}

/// `(∇, ∇*)` at `theta` from the exact per-atom partials of `d` and the
/// chart's first and second derivatives.
pub fn connections_at(d: &DivergenceSpec, chart: &dyn StateChart, theta: &[f64]) -> Result<DualConnectionPair> {
    require_interior(chart, theta)?;
    let k = chart.dim();
    let p = chart.weights_at(theta)?;
    let jac = chart.jacobian(theta)?;
    let hess = chart.hessian(theta)?;
    let parts = p.iter().map(|&x| d.partials(x, x)).collect::<Result<Vec<_>>>()?;
    let mut gamma = vec![vec![vec![0.0; k]; k]; k];
    let mut gamma_star = vec![vec![vec![0.0; k]; k]; k];
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                let (mut a, mut b) = (0.0, 0.0);
                for (atom, t) in parts.iter().enumerate() {
                    let pij = jac[i][atom] * jac[j][atom];
                    let second = t.xy * hess[i][j][atom];
                    a += (t.xyy * pij + second) * jac[l][atom];
                    b += (t.xxy * pij + second) * jac[l][atom];
                }
                gamma[i][j][l] = -a;
                gamma_star[i][j][l] = -b;
            }
        }
    }
    Ok(DualConnectionPair { gamma, gamma_star })
}

/// `gᵢⱼ = Σ ∂²_y d(p, p) ∂ᵢp ∂ⱼp` from the exact per-atom partials.
fn metric_from_partials(d: &DivergenceSpec, chart: &dyn StateChart, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let k = chart.dim();
    let p = chart.weights_at(theta)?;
    let jac = chart.jacobian(theta)?;
    let mut g = vec![vec![0.0; k]; k];
    for (atom, &x) in p.iter().enumerate() {
        let yy = d.partials(x, x)?.yy;
        for i in 0..k {
            for j in 0..k {
                g[i][j] += yy * jac[i][atom] * jac[j][atom];
            }
        }
    }
    Ok(g)
}

/// `max |∂ₖgᵢⱼ − Γ_{ki,j} − Γ*_{kj,i}|` with `∂ₖg` by central differences
/// of the metric.
///
/// The metric is differentiated in its exact form: differencing a
/// difference-quotient metric amplifies rounding past the tolerance.
pub fn duality_residual(d: &DivergenceSpec, chart: &dyn StateChart, theta: &[f64]) -> Result<f64> {
    let conn = connections_at(d, chart, theta)?;
    let k = chart.dim();
    let mut residual = 0.0f64;
    for l in 0..k {
        let h = step(theta[l]);
        let mut up = theta.to_vec();
        let mut dn = theta.to_vec();
        up[l] += h;
        dn[l] -= h;
        for t in [&up, &dn] {
            if !chart.is_interior(t) {
                return Err(Error::Boundary(format!("difference stencil leaves the domain at {t:?}")));
            }
        }
        let gu = metric_from_partials(d, chart, &up)?;
        let gd = metric_from_partials(d, chart, &dn)?;
        for i in 0..k {
            for j in 0..k {
                let dg = (gu[i][j] - gd[i][j]) / (2.0 * h);
                residual = residual.max((dg - conn.gamma[l][i][j] - conn.gamma_star[l][j][i]).abs());
            }
        }
    }
    Ok(residual)
}

/// Metric, connections and their consistency checks at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub metric: MetricAtPoint,
    pub connections: DualConnectionPair,
    pub symmetry: f64,
    pub duality_residual: f64,
}

pub fn geometry_report(d: &DivergenceSpec, chart: &dyn StateChart, theta: &[f64]) -> Result<GeometryReport> {
    let metric = metric_at(d, chart, theta)?;
    let connections = connections_at(d, chart, theta)?;
    let duality_residual = duality_residual(d, chart, theta)?;
    Ok(GeometryReport { symmetry: metric.asymmetry(), metric, connections, duality_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeodesicKind {
    /// `∇*`-geodesic for KL: `(1 − t) p + t q`.
    Mixture,
    /// `∇`-geodesic for KL: `∝ p^{1−t} q^t`, rescaled to the interpolated mass.
    Exponential,
}

pub fn geodesic(kind: GeodesicKind, p: &InformationState, q: &InformationState, t: f64) -> Result<InformationState> {
    if !p.algebra().same_as(q.algebra()) {
        return Err(Error::AlgebraMismatch);
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("geodesic time {t} outside [0, 1]")));
    }
    if kind == GeodesicKind::Exponential && !(p.is_strictly_positive() && q.is_strictly_positive()) {
        return Err(Error::Boundary("exponential geodesic needs strictly positive endpoints".into()));
    }
    if t == 0.0 {
        return Ok(p.clone());
    }
    if t == 1.0 {
        return Ok(q.clone());
    }
    let (pw, qw) = (p.weights(), q.weights());
    let w = match kind {
        GeodesicKind::Mixture => pw.iter().zip(qw).map(|(a, b)| (1.0 - t) * a + t * b).collect(),
        GeodesicKind::Exponential => {
            let logs: Vec<f64> = pw.iter().zip(qw).map(|(a, b)| (1.0 - t) * a.ln() + t * b.ln()).collect();
            let lz = crate::state::log_sum_exp(&logs);
            let mass = (1.0 - t) * p.total_mass() + t * q.total_mass();
            logs.iter().map(|l| mass * (l - lz).exp()).collect()
        }
    };
    InformationState::new(p.algebra().clone(), w)
}

/// `D(r, p) − D(r, q) − D(q, p)` for a Bregman-type `d`.
///
/// Vanishes when `q = argmin_{x ∈ A} D(x, p)` over an affine set `A`
/// containing `r`; the unknown sits in the first argument, as in
/// maximum-entropy updating.
pub fn pythagorean_check(
    d: &DivergenceSpec,
    p: &InformationState,
    q: &InformationState,
    r: &InformationState,
) -> Result<f64> {
    if d.bregman_generator().is_none() {
        return Err(Error::Unsupported(format!("{d:?} is not a Bregman divergence")));
    }
    if r == q {
        return Ok(0.0);
    }
    Ok(d.deviation(r, p)? - d.deviation(r, q)? - d.deviation(q, p)?)
}
