//! Information states and information models.
//!
//! A state is a positive finite integral over a finite algebra, stored as
//! nonnegative atom weights. Normalization is optional: states with any
//! positive total mass are valid.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraElement, AtomVector, FiniteBooleanAlgebra};
use crate::error::{Error, Result};

/// Relative tolerance used when deciding linear independence of statistics.
const RANK_TOL: f64 = 1e-10;

/// Nonnegative atom weights with positive total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationState {
    algebra: FiniteBooleanAlgebra,
    weights: Vec<f64>,
}

impl InformationState {
    pub fn new(algebra: FiniteBooleanAlgebra, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != algebra.len() {
            return Err(Error::InvalidState(format!(
                "{} weights for an algebra of {} atoms",
                weights.len(),
                algebra.len()
            )));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidState(format!("weight {i} is {w}, expected a finite nonnegative real")));
        }
        let mass: f64 = weights.iter().sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidState(format!("total mass must be positive and finite, got {mass}")));
        }
        Ok(Self { algebra, weights })
    }

    /// State over a default algebra with atoms `a1..an`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let alg = FiniteBooleanAlgebra::with_size(weights.len())
            .map_err(|_| Error::InvalidState("a state needs at least one atom".into()))?;
        Self::new(alg, weights)
    }

    pub fn algebra(&self) -> &FiniteBooleanAlgebra {
        &self.algebra
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integral of the indicator of `a`.
    pub fn evaluate(&self, a: &AlgebraElement) -> Result<f64> {
        if !self.algebra.same_as(a.algebra()) {
            return Err(Error::AlgebraMismatch);
        }
        Ok(a.indices().map(|i| self.weights[i]).sum())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn normalize(&self) -> Self {
        let m = self.total_mass();
        Self { algebra: self.algebra.clone(), weights: self.weights.iter().map(|w| w / m).collect() }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.algebra.clone(), self.weights.iter().map(|w| w * c).collect())
    }

    /// Same weights reinterpreted over another algebra of equal size.
    pub fn with_algebra(&self, algebra: FiniteBooleanAlgebra) -> Result<Self> {
        Self::new(algebra, self.weights.clone())
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Atoms carrying positive weight.
    pub fn support(&self) -> AlgebraElement {
        self.algebra
            .from_indices(self.weights.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, _)| i))
            .expect("indices are in range")
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        sup_distance(&self.weights, &other.weights)
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A parametrized family of states with analytic first and second
/// derivatives of the atom weights with respect to the parameters.
pub trait StateChart {
    fn dim(&self) -> usize;

    fn algebra(&self) -> &FiniteBooleanAlgebra;

    /// Atom weights at `theta`; a `Domain` error outside the parameter domain.
    fn weights_at(&self, theta: &[f64]) -> Result<AtomVector>;

    /// `jac[i][a] = ∂ weight_a / ∂ theta_i`.
    fn jacobian(&self, theta: &[f64]) -> Result<Vec<AtomVector>>;

    /// `hess[i][j][a] = ∂² weight_a / ∂ theta_i ∂ theta_j`.
    fn hessian(&self, theta: &[f64]) -> Result<Vec<Vec<AtomVector>>>;

    /// True when `theta` lies in the interior of the parameter domain and
    /// the corresponding weights are strictly positive.
    fn is_interior(&self, theta: &[f64]) -> bool;

    /// The chart as an exponential family in natural parameters, if it is one.
    fn as_exp_family(&self) -> Option<&ExpFamily> {
        None
    }

    fn state_at(&self, theta: &[f64]) -> Result<InformationState> {
        InformationState::new(self.algebra().clone(), self.weights_at(theta)?)
    }
}

/// Normalized exponential family `p_θ ∝ base · exp(Σⱼ θⱼ fⱼ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFamily {
    algebra: FiniteBooleanAlgebra,
    base: Vec<f64>,
    suffstats: Vec<Vec<f64>>,
    domain: Vec<(f64, f64)>,
}

impl ExpFamily {
    pub fn new(base: Vec<f64>, suffstats: Vec<Vec<f64>>) -> Result<Self> {
        let algebra = FiniteBooleanAlgebra::with_size(base.len())
            .map_err(|_| Error::InvalidModel("empty base measure".into()))?;
        Self::with_algebra(algebra, base, suffstats)
    }

    pub fn with_algebra(algebra: FiniteBooleanAlgebra, base: Vec<f64>, suffstats: Vec<Vec<f64>>) -> Result<Self> {
        let n = algebra.len();
        if base.len() != n {
            return Err(Error::InvalidModel(format!("base has {} weights for {n} atoms", base.len())));
        }
        if base.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidModel("base weights must be strictly positive and finite".into()));
        }
        if let Some(f) = suffstats.iter().find(|f| f.len() != n || f.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidModel(format!("sufficient statistic of length {} for {n} atoms", f.len())));
        }
        let k = suffstats.len();
        let design = DMatrix::from_fn(n, k + 1, |a, j| if j == 0 { 1.0 } else { suffstats[j - 1][a] });
        if numerical_rank(&design) < k + 1 {
            return Err(Error::InvalidModel(
                "sufficient statistics are not linearly independent together with the constant".into(),
            ));
        }
        Ok(Self { algebra, base, suffstats, domain: vec![(f64::NEG_INFINITY, f64::INFINITY); k] })
    }

    /// Restricts the natural parameters to a box.
    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Result<Self> {
        if domain.len() != self.dim() || domain.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidModel("parameter domain must be one nonempty interval per statistic".into()));
        }
        self.domain = domain;
        Ok(self)
    }

    /// Two atoms, statistic `(0, 1)`: `θ` is the log-odds of the second atom.
    pub fn bernoulli() -> Self {
        Self::new(vec![1.0, 1.0], vec![vec![0.0, 1.0]]).expect("valid family")
    }

    /// Every strictly positive normalized state on `n` atoms, with statistics
    /// the indicators of atoms `2..n`.
    pub fn full(n: usize) -> Result<Self> {
        let stats = (1..n).map(|j| (0..n).map(|a| if a == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::new(vec![1.0; n], stats)
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn suffstats(&self) -> &[Vec<f64>] {
        &self.suffstats
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn n_atoms(&self) -> usize {
        self.base.len()
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::Domain(format!("expected {} parameters, got {}", self.dim(), theta.len())));
        }
        for (j, (&t, &(lo, hi))) in theta.iter().zip(&self.domain).enumerate() {
            if !(t.is_finite() && lo <= t && t <= hi) {
                return Err(Error::Domain(format!("parameter {j} = {t} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    fn log_weights(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.n_atoms())
            .map(|a| self.base[a].ln() + self.suffstats.iter().zip(theta).map(|(f, t)| f[a] * t).sum::<f64>())
            .collect()
    }

    /// `log Σₐ base_a exp(θ·f_a)`.
    pub fn log_partition(&self, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(log_sum_exp(&self.log_weights(theta)))
    }

    pub fn param_to_state(&self, theta: &[f64]) -> Result<InformationState> {
        self.check_theta(theta)?;
        InformationState::new(self.algebra.clone(), self.probabilities(theta))
    }

    fn probabilities(&self, theta: &[f64]) -> Vec<f64> {
        let lw = self.log_weights(theta);
        let z = log_sum_exp(&lw);
        lw.iter().map(|l| (l - z).exp()).collect()
    }

    /// Expectations of the sufficient statistics under `weights`, scaled by
    /// their total mass.
    pub fn statistic_means(&self, weights: &[f64]) -> Vec<f64> {
        let m: f64 = weights.iter().sum();
        self.suffstats.iter().map(|f| f.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / m).collect()
    }

    pub fn mean_at(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        Ok(self.statistic_means(&self.probabilities(theta)))
    }

    /// Covariance matrix of the sufficient statistics under `p_θ`.
    pub fn covariance_at(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_theta(theta)?;
        let p = self.probabilities(theta);
        let mu = self.statistic_means(&p);
        let k = self.dim();
        let mut cov = vec![vec![0.0; k]; k];
        for a in 0..self.n_atoms() {
            for i in 0..k {
                let di = self.suffstats[i][a] - mu[i];
                for j in 0..k {
                    cov[i][j] += p[a] * di * (self.suffstats[j][a] - mu[j]);
                }
            }
        }
        Ok(cov)
    }

    /// Distance of the log-weights to `log base + span{1, f₁..f_k}`.
    pub fn log_residual(&self, weights: &[f64]) -> f64 {
        if weights.len() != self.n_atoms() || weights.iter().any(|&w| !(w > 0.0)) {
            return f64::INFINITY;
        }
        let target: Vec<f64> = weights.iter().zip(&self.base).map(|(w, b)| w.ln() - b.ln()).collect();
        let mut dirs = vec![vec![1.0; self.n_atoms()]];
        dirs.extend(self.suffstats.iter().cloned());
        span_residual(&target, &dirs)
    }
}

impl StateChart for ExpFamily {
    fn dim(&self) -> usize {
        self.suffstats.len()
    }

    fn as_exp_family(&self) -> Option<&ExpFamily> {
        Some(self)
    }

    fn algebra(&self) -> &FiniteBooleanAlgebra {
        &self.algebra
    }

    fn weights_at(&self, theta: &[f64]) -> Result<AtomVector> {
        self.check_theta(theta)?;
        Ok(self.probabilities(theta))
    }

    fn jacobian(&self, theta: &[f64]) -> Result<Vec<AtomVector>> {
        let p = self.weights_at(theta)?;
        let mu = self.statistic_means(&p);
        Ok(self
            .suffstats
            .iter()
            .zip(&mu)
            .map(|(f, m)| f.iter().zip(&p).map(|(x, pa)| pa * (x - m)).collect())
            .collect())
    }

    fn hessian(&self, theta: &[f64]) -> Result<Vec<Vec<AtomVector>>> {
        let p = self.weights_at(theta)?;
        let mu = self.statistic_means(&p);
        let cov = self.covariance_at(theta)?;
        let k = self.dim();
        Ok((0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        (0..self.n_atoms())
                            .map(|a| {
                                p[a] * ((self.suffstats[i][a] - mu[i]) * (self.suffstats[j][a] - mu[j]) - cov[i][j])
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect())
    }

    fn is_interior(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta.iter().zip(&self.domain).all(|(&t, &(lo, hi))| t.is_finite() && lo < t && t < hi)
    }
}

/// Affine family `p_θ = origin + Σⱼ θⱼ directionⱼ` (mixture coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFamily {
    algebra: FiniteBooleanAlgebra,
    origin: Vec<f64>,
    directions: Vec<Vec<f64>>,
}

impl MixtureFamily {
    pub fn new(origin: Vec<f64>, directions: Vec<Vec<f64>>) -> Result<Self> {
        let n = origin.len();
        let algebra =
            FiniteBooleanAlgebra::with_size(n).map_err(|_| Error::InvalidModel("empty origin".into()))?;
        if directions.iter().any(|d| d.len() != n) {
            return Err(Error::InvalidModel("direction length differs from origin length".into()));
        }
        let m = DMatrix::from_fn(n, directions.len(), |a, j| directions[j][a]);
        if numerical_rank(&m) < directions.len() {
            return Err(Error::InvalidModel("mixture directions are linearly dependent".into()));
        }
        Ok(Self { algebra, origin, directions })
    }

    /// Bernoulli in its mean parameter: `p ↦ (1 − p, p)`.
    pub fn bernoulli_mean() -> Self {
        Self::new(vec![1.0, 0.0], vec![vec![-1.0, 1.0]]).expect("valid family")
    }

    /// Probability simplex on `n` atoms, coordinates the first `n − 1` weights.
    pub fn simplex(n: usize) -> Result<Self> {
        let mut origin = vec![0.0; n];
        *origin.last_mut().ok_or_else(|| Error::InvalidModel("empty simplex".into()))? = 1.0;
        let dirs = (0..n - 1)
            .map(|j| {
                let mut d = vec![0.0; n];
                d[j] = 1.0;
                d[n - 1] = -1.0;
                d
            })
            .collect();
        Self::new(origin, dirs)
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    fn raw(&self, theta: &[f64]) -> Vec<f64> {
        let mut p = self.origin.clone();
        for (d, t) in self.directions.iter().zip(theta) {
            for (pa, da) in p.iter_mut().zip(d) {
                *pa += t * da;
            }
        }
        p
    }
}

impl StateChart for MixtureFamily {
    fn dim(&self) -> usize {
        self.directions.len()
    }

    fn algebra(&self) -> &FiniteBooleanAlgebra {
        &self.algebra
    }

    fn weights_at(&self, theta: &[f64]) -> Result<AtomVector> {
        if theta.len() != self.dim() || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain(format!("expected {} finite parameters", self.dim())));
        }
        let p = self.raw(theta);
        if p.iter().any(|&w| w < 0.0) {
            return Err(Error::Domain("parameters give a negative atom weight".into()));
        }
        Ok(p)
    }

    fn jacobian(&self, theta: &[f64]) -> Result<Vec<AtomVector>> {
        self.weights_at(theta)?;
        Ok(self.directions.clone())
    }

    fn hessian(&self, theta: &[f64]) -> Result<Vec<Vec<AtomVector>>> {
        self.weights_at(theta)?;
        let (k, n) = (self.dim(), self.origin.len());
        Ok(vec![vec![vec![0.0; n]; k]; k])
    }

    fn is_interior(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && theta.iter().all(|t| t.is_finite()) && self.raw(theta).iter().all(|&w| w > 0.0)
    }
}

/// The family of states an update may range over.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InformationModel {
    /// Every nonnegative state.
    #[default]
    Cone,
    /// Normalized states.
    Simplex,
    ExponentialFamily(ExpFamily),
}

impl InformationModel {
    pub fn contains(&self, state: &InformationState, tol: f64) -> bool {
        match self {
            Self::Cone => true,
            Self::Simplex => (state.total_mass() - 1.0).abs() <= tol,
            Self::ExponentialFamily(fam) => fam.log_residual(state.weights()) <= tol,
        }
    }
}

/// A joint state on `X × Θ`, the encoding of a conditional-probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    xs: FiniteBooleanAlgebra,
    thetas: FiniteBooleanAlgebra,
    joint: InformationState,
}

impl JointTable {
    /// `rows[x][θ]` is the joint weight of `(x, θ)`.
    pub fn new<S: Into<String>, T: Into<String>>(
        xs: impl IntoIterator<Item = S>,
        thetas: impl IntoIterator<Item = T>,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        let xs = FiniteBooleanAlgebra::new(xs)?;
        let thetas = FiniteBooleanAlgebra::new(thetas)?;
        if rows.len() != xs.len() || rows.iter().any(|r| r.len() != thetas.len()) {
            return Err(Error::InvalidState(format!(
                "joint table must be {} rows of {} entries",
                xs.len(),
                thetas.len()
            )));
        }
        let joint = InformationState::new(xs.product(&thetas), rows.concat())?;
        Ok(Self { xs, thetas, joint })
    }

    pub fn xs(&self) -> &FiniteBooleanAlgebra {
        &self.xs
    }

    pub fn thetas(&self) -> &FiniteBooleanAlgebra {
        &self.thetas
    }

    pub fn joint(&self) -> &InformationState {
        &self.joint
    }

    fn x_index(&self, x: &str) -> Result<usize> {
        self.xs.index_of(x).ok_or_else(|| Error::Domain(format!("unknown observation label {x:?}")))
    }

    /// The event `{x} × Θ` in the joint algebra.
    pub fn row_event(&self, x: &str) -> Result<AlgebraElement> {
        let i = self.x_index(x)?;
        let m = self.thetas.len();
        self.joint.algebra().from_indices(i * m..(i + 1) * m)
    }

    /// The event `B × Θ` for a set of observation labels.
    pub fn rows_event<S: AsRef<str>>(&self, xs: impl IntoIterator<Item = S>) -> Result<AlgebraElement> {
        let mut acc = self.joint.algebra().bottom();
        for x in xs {
            acc = acc.join(&self.row_event(x.as_ref())?)?;
        }
        Ok(acc)
    }

    /// Restriction of a joint weight vector to row `x`.
    pub fn row_of(&self, joint_weights: &[f64], x: &str) -> Result<Vec<f64>> {
        let i = self.x_index(x)?;
        let m = self.thetas.len();
        joint_weights.get(i * m..(i + 1) * m).map(<[f64]>::to_vec).ok_or(Error::AlgebraMismatch)
    }

    /// Marginal over `Θ` of a joint weight vector.
    pub fn theta_marginal(&self, joint_weights: &[f64]) -> Vec<f64> {
        let m = self.thetas.len();
        (0..m).map(|t| joint_weights.iter().skip(t).step_by(m).sum()).collect()
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub(crate) fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > RANK_TOL * max.max(1.0) * (m.nrows().max(m.ncols()) as f64)).count()
}

/// Euclidean distance from `target` to the span of `dirs`.
pub(crate) fn span_residual(target: &[f64], dirs: &[Vec<f64>]) -> f64 {
    let n = target.len();
    let b = DMatrix::from_fn(n, dirs.len(), |a, j| dirs[j][a]);
    let y = DVector::from_column_slice(target);
    let svd = b.clone().svd(true, true);
    let coef = match svd.solve(&y, 1e-12) {
        Ok(c) => c,
        Err(_) => return f64::INFINITY,
    };
    (b * coef - y).norm()
}
