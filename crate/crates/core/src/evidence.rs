//! Evidence: constraint functionals `F: ℳ → ]−∞, ∞]` and relative prior
//! weightings `E` over initial states.

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::state::{InformationState, JointTable};

/// Tolerance within which a hard constraint counts as satisfied.
pub const HARD_TOL: f64 = 1e-10;

/// Closed convex sets usable as indicator constraints.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// `lower ≤ q ≤ upper` componentwise.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
}

impl ConvexSet {
    fn dim(&self) -> usize {
        match self {
            Self::Box { lower, .. } => lower.len(),
            Self::Ball { center, .. } => center.len(),
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, q: &[f64]) -> Vec<f64> {
        match self {
            Self::Box { lower, upper } => {
                q.iter().zip(lower.iter().zip(upper)).map(|(x, (lo, hi))| x.clamp(*lo, *hi)).collect()
            }
            Self::Ball { center, radius } => {
                let d = euclid(q, center);
                if d <= *radius {
                    q.to_vec()
                } else {
                    q.iter().zip(center).map(|(x, c)| c + (x - c) * radius / d).collect()
                }
            }
        }
    }

    pub fn distance(&self, q: &[f64]) -> f64 {
        euclid(q, &self.project(q))
    }
}

/// One term of a constraint functional.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintTerm {
    /// `Σᵢ fᵢ qᵢ = c`.
    Moment { f: Vec<f64>, c: f64 },
    /// `Σᵢ qᵢ = 1`.
    Normalization,
    /// `qᵢ = 0` off the allowed atoms.
    Support(AlgebraElement),
    Convex(ConvexSet),
    /// Membership in a finite set of candidate states (not convex).
    Points(Vec<Vec<f64>>),
    /// Finite penalty `weight · violation(term)²` replacing a hard term.
    Soft { term: Box<ConstraintTerm>, weight: f64 },
}

impl ConstraintTerm {
    pub fn moment(f: Vec<f64>, c: f64) -> Self {
        Self::Moment { f, c }
    }

    pub fn soft(term: ConstraintTerm, weight: f64) -> Result<Self> {
        if term.is_soft() {
            return Err(Error::Domain("soft terms cannot be nested".into()));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::Domain(format!("soft penalty weight must be positive, got {weight}")));
        }
        Ok(Self::Soft { term: Box::new(term), weight })
    }

    pub fn is_soft(&self) -> bool {
        matches!(self, Self::Soft { .. })
    }

    /// Whether the term's feasible set is affine.
    pub fn is_affine(&self) -> bool {
        matches!(self, Self::Moment { .. } | Self::Normalization | Self::Support(_))
    }

    fn check_len(&self, n: usize) -> Result<()> {
        let ok = match self {
            Self::Moment { f, .. } => f.len() == n,
            Self::Normalization => true,
            Self::Support(a) => a.algebra().len() == n,
            Self::Convex(s) => s.dim() == n,
            Self::Points(ps) => ps.iter().all(|p| p.len() == n),
            Self::Soft { term, .. } => return term.check_len(n),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }

    /// Nonnegative violation measure, zero exactly on the term's feasible set.
    pub fn violation(&self, q: &[f64]) -> f64 {
        match self {
            Self::Moment { f, c } => (dot(f, q) - c).abs(),
            Self::Normalization => (q.iter().sum::<f64>() - 1.0).abs(),
            Self::Support(a) => q.iter().enumerate().filter(|(i, _)| !a.contains(*i)).map(|(_, x)| x.abs()).sum(),
            Self::Convex(s) => s.distance(q),
            Self::Points(ps) => ps.iter().map(|p| euclid(p, q)).fold(f64::INFINITY, f64::min),
            Self::Soft { term, .. } => term.violation(q),
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Self::Moment { c, .. } => c.abs().max(1.0),
            _ => 1.0,
        }
    }

    /// `0` or `+∞` for hard terms; finite penalty for soft terms.
    pub fn value(&self, q: &[f64]) -> f64 {
        match self {
            Self::Soft { term, weight } => weight * term.violation(q).powi(2),
            hard => {
                if hard.violation(q) <= HARD_TOL * hard.scale() {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// The evidence functional: a sum of constraint terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintFunctional {
    terms: Vec<ConstraintTerm>,
}

impl ConstraintFunctional {
    pub fn new(terms: Vec<ConstraintTerm>) -> Self {
        Self { terms }
    }

    /// `F ≡ 0`.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[ConstraintTerm] {
        &self.terms
    }

    pub fn push(&mut self, term: ConstraintTerm) {
        self.terms.push(term);
    }

    pub fn with(mut self, term: ConstraintTerm) -> Self {
        self.terms.push(term);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn hard_terms(&self) -> impl Iterator<Item = &ConstraintTerm> {
        self.terms.iter().filter(|t| !t.is_soft())
    }

    pub fn has_soft(&self) -> bool {
        self.terms.iter().any(ConstraintTerm::is_soft)
    }

    pub fn has_normalization(&self) -> bool {
        self.terms.iter().any(|t| matches!(t, ConstraintTerm::Normalization))
    }

    /// Every hard term is affine (moments, normalization, support).
    pub fn is_affine(&self) -> bool {
        self.hard_terms().all(ConstraintTerm::is_affine)
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        self.terms.iter().try_for_each(|t| t.check_len(n))
    }

    pub fn evaluate(&self, q: &InformationState) -> Result<f64> {
        for t in &self.terms {
            if let ConstraintTerm::Support(a) = t {
                if !a.algebra().same_as(q.algebra()) {
                    return Err(Error::AlgebraMismatch);
                }
            }
        }
        self.evaluate_raw(q.weights())
    }

    pub fn evaluate_raw(&self, q: &[f64]) -> Result<f64> {
        self.check_len(q.len())?;
        Ok(self.terms.iter().map(|t| t.value(q)).sum())
    }

    /// Largest hard-term violation.
    pub fn hard_violation(&self, q: &[f64]) -> f64 {
        self.hard_terms().map(|t| t.violation(q)).fold(0.0, f64::max)
    }

    /// Atoms allowed by every hard support term.
    pub(crate) fn allowed_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![true; n];
        for t in self.hard_terms() {
            if let ConstraintTerm::Support(a) = t {
                for (i, m) in mask.iter_mut().enumerate() {
                    *m &= a.contains(i);
                }
            }
        }
        mask
    }

    /// Rows and targets of the hard moment and normalization terms.
    pub(crate) fn affine_rows(&self, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for t in self.hard_terms() {
            match t {
                ConstraintTerm::Moment { f, c } => {
                    rows.push(f.clone());
                    targets.push(*c);
                }
                ConstraintTerm::Normalization => {
                    rows.push(vec![1.0; n]);
                    targets.push(1.0);
                }
                _ => {}
            }
        }
        (rows, targets)
    }

    pub(crate) fn convex_sets(&self) -> impl Iterator<Item = &ConvexSet> {
        self.hard_terms().filter_map(|t| match t {
            ConstraintTerm::Convex(s) => Some(s),
            _ => None,
        })
    }

    pub(crate) fn point_sets(&self) -> impl Iterator<Item = &Vec<Vec<f64>>> {
        self.hard_terms().filter_map(|t| match t {
            ConstraintTerm::Points(p) => Some(p),
            _ => None,
        })
    }

    pub(crate) fn soft_value(&self, q: &[f64]) -> f64 {
        self.terms.iter().filter(|t| t.is_soft()).map(|t| t.value(q)).sum()
    }
}

/// Constraints of conditioning a joint prior on observing `b`: normalization
/// and support on the row `{b} × Θ`.
pub fn bayes_constraints(joint: &JointTable, b: &str) -> Result<ConstraintFunctional> {
    let row = joint.row_event(b)?;
    Ok(ConstraintFunctional::new(vec![ConstraintTerm::Normalization, ConstraintTerm::Support(row)]))
}

/// Relative prior measure over initial states.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PriorWeighting {
    /// Unit mass at the current state.
    #[default]
    Dirac,
    /// Finite mixture of Dirac masses `(ωₖ, wₖ)` with `wₖ > 0`.
    Mixture(Vec<(InformationState, f64)>),
}

impl PriorWeighting {
    pub fn mixture(components: Vec<(InformationState, f64)>) -> Result<Self> {
        let Some((first, _)) = components.first() else {
            return Err(Error::Domain("a mixture needs at least one component".into()));
        };
        for (s, w) in &components {
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::Domain(format!("mixture weight {w} is not strictly positive")));
            }
            if !s.algebra().same_as(first.algebra()) {
                return Err(Error::AlgebraMismatch);
            }
        }
        Ok(Self::Mixture(components))
    }

    /// `E(ϕ, ω)` as a discrete mass.
    pub fn weight_of(&self, phi: &InformationState, omega: &InformationState) -> f64 {
        match self {
            Self::Dirac => {
                if phi == omega {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Mixture(cs) => cs.iter().filter(|(s, _)| s == phi).map(|(_, w)| w).sum(),
        }
    }

    /// The weighted initial states for the initial state `omega`.
    pub fn components<'a>(&'a self, omega: &'a InformationState) -> Vec<(&'a InformationState, f64)> {
        match self {
            Self::Dirac => vec![(omega, 1.0)],
            Self::Mixture(cs) => cs.iter().map(|(s, w)| (s, *w)).collect(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
