//! Information deviations: extended Kullback–Leibler, Bregman and Csiszár
//! families.
//!
//! Every shipped deviation is coordinate-separable, `D(ω, φ) = Σᵢ d(ωᵢ, φᵢ)`,
//! so exact derivatives up to third order are available per coordinate
//! through [`DivergenceSpec::partials`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::InformationState;

/// Smoothing width of the smoothed total-variation generator.
pub const TV_SMOOTHING: f64 = 0.1;

/// Relative slack below zero tolerated before a negative deviation is
/// reported as a broken convexity contract.
const NEGATIVE_SLACK: f64 = 1e-12;

/// Separable strictly convex generator `Φ(x) = Σᵢ φ(xᵢ)` of a Bregman divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// `φ(x) = x²`.
    SquaredNorm,
    /// `φ(x) = x log x − x`, whose Bregman divergence is the extended KL.
    NegEntropy,
}

impl Generator {
    pub fn value(self, x: f64) -> f64 {
        match self {
            Self::SquaredNorm => x * x,
            Self::NegEntropy => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln() - x
                }
            }
        }
    }

    pub fn d1(self, x: f64) -> f64 {
        match self {
            Self::SquaredNorm => 2.0 * x,
            Self::NegEntropy => x.ln(),
        }
    }

    pub fn d2(self, x: f64) -> f64 {
        match self {
            Self::SquaredNorm => 2.0,
            Self::NegEntropy => 1.0 / x,
        }
    }

    pub fn d3(self, x: f64) -> f64 {
        match self {
            Self::SquaredNorm => 0.0,
            Self::NegEntropy => -1.0 / (x * x),
        }
    }

    /// Inverse of the first derivative (the gradient of the convex conjugate).
    pub fn d1_inverse(self, y: f64) -> f64 {
        match self {
            Self::SquaredNorm => 0.5 * y,
            Self::NegEntropy => y.exp(),
        }
    }

    /// Whether the generator is finite and differentiable below zero, so a
    /// projection may leave the nonnegative cone.
    pub fn extends_below_zero(self) -> bool {
        matches!(self, Self::SquaredNorm)
    }
}

/// Convex `f` with `f(1) = 0` generating a Csiszár divergence `Σ φᵢ f(ωᵢ/φᵢ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiszarFunction {
    /// `t log t − t + 1`.
    Kl,
    /// `½ (t − 1)²`.
    Chi2,
    /// `√((t − 1)² + ε²) − ε` with `ε = TV_SMOOTHING`.
    TotalVariationSmoothed,
}

impl CsiszarFunction {
    pub fn value(self, t: f64) -> f64 {
        let u = t - 1.0;
        match self {
            Self::Kl => {
                if t == 0.0 {
                    1.0
                } else {
                    t * u.ln_1p() - u
                }
            }
            Self::Chi2 => 0.5 * u * u,
            Self::TotalVariationSmoothed => {
                let e = TV_SMOOTHING;
                u * u / ((u * u + e * e).sqrt() + e)
            }
        }
    }

    pub fn d1(self, t: f64) -> f64 {
        match self {
            Self::Kl => t.ln(),
            Self::Chi2 => t - 1.0,
            Self::TotalVariationSmoothed => (t - 1.0) / tv_root(t),
        }
    }

    pub fn d2(self, t: f64) -> f64 {
        match self {
            Self::Kl => 1.0 / t,
            Self::Chi2 => 1.0,
            Self::TotalVariationSmoothed => TV_SMOOTHING * TV_SMOOTHING / tv_root(t).powi(3),
        }
    }

    pub fn d3(self, t: f64) -> f64 {
        match self {
            Self::Kl => -1.0 / (t * t),
            Self::Chi2 => 0.0,
            Self::TotalVariationSmoothed => {
                -3.0 * TV_SMOOTHING * TV_SMOOTHING * (t - 1.0) / tv_root(t).powi(5)
            }
        }
    }
}

fn tv_root(t: f64) -> f64 {
    ((t - 1.0).powi(2) + TV_SMOOTHING * TV_SMOOTHING).sqrt()
}

/// Which argument of a deviation a derivative or an optimization refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    First,
    #[default]
    Second,
}

/// Partial derivatives of one coordinate term `d(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermPartials {
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
    pub xxy: f64,
    pub xyy: f64,
}

/// A deviation `D: ℳ × ℳ → [0, ∞]` with `D(ω, φ) = 0 ⟺ ω = φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DivergenceSpec {
    /// `Σ ωᵢ log(ωᵢ/φᵢ) − ωᵢ + φᵢ`.
    #[default]
    KlExtended,
    /// `Φ(ω) − Φ(φ) − ⟨∇Φ(φ), ω − φ⟩`.
    Bregman(Generator),
    /// `Σ φᵢ f(ωᵢ/φᵢ)`.
    Csiszar(CsiszarFunction),
}

impl DivergenceSpec {
    /// Bregman generator realizing this deviation, when there is one.
    pub fn bregman_generator(&self) -> Option<Generator> {
        match self {
            Self::KlExtended | Self::Csiszar(CsiszarFunction::Kl) | Self::Bregman(Generator::NegEntropy) => {
                Some(Generator::NegEntropy)
            }
            Self::Bregman(g) => Some(*g),
            Self::Csiszar(_) => None,
        }
    }

    pub fn is_kl(&self) -> bool {
        self.bregman_generator() == Some(Generator::NegEntropy)
    }

    /// `D(ω, φ) = D(φ, ω)` for all arguments.
    pub fn is_symmetric(&self) -> bool {
        matches!(self, Self::Bregman(Generator::SquaredNorm))
    }

    /// True for the families whose value is `+∞` when `φᵢ = 0 < ωᵢ`.
    pub fn requires_support_containment(&self) -> bool {
        !self.is_symmetric()
    }

    pub fn deviation(&self, omega: &InformationState, phi: &InformationState) -> Result<f64> {
        if !omega.algebra().same_as(phi.algebra()) {
            return Err(Error::AlgebraMismatch);
        }
        self.eval(omega.weights(), phi.weights())
    }

    /// Deviation between raw weight vectors of equal length.
    pub fn eval(&self, omega: &[f64], phi: &[f64]) -> Result<f64> {
        if omega.len() != phi.len() {
            return Err(Error::AlgebraMismatch);
        }
        let mut sum = 0.0;
        for (&x, &y) in omega.iter().zip(phi) {
            let t = self.term(x, y);
            if t == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            sum += t;
        }
        if sum.is_nan() {
            return Err(Error::Internal("deviation evaluated to NaN".into()));
        }
        if sum < 0.0 {
            let scale = omega.iter().chain(phi).map(|v| v.abs()).sum::<f64>().max(1.0);
            if sum < -NEGATIVE_SLACK * scale {
                return Err(Error::Internal(format!("negative deviation {sum:e} violates convexity")));
            }
            return Ok(0.0);
        }
        Ok(sum)
    }

    /// Value of one coordinate term `d(x, y)`.
    pub fn term(&self, x: f64, y: f64) -> f64 {
        if x == y {
            return 0.0;
        }
        match *self {
            Self::KlExtended | Self::Bregman(Generator::NegEntropy) => {
                if x == 0.0 {
                    y
                } else if y == 0.0 {
                    f64::INFINITY
                } else {
                    let u = (x - y) / y;
                    y * ((1.0 + u) * u.ln_1p() - u)
                }
            }
            Self::Bregman(Generator::SquaredNorm) => (x - y) * (x - y),
            Self::Csiszar(f) => {
                if y == 0.0 {
                    f64::INFINITY
                } else {
                    y * f.value(x / y)
                }
            }
        }
    }

    /// Exact partial derivatives of the coordinate term at `(x, y)`.
    pub fn partials(&self, x: f64, y: f64) -> Result<TermPartials> {
        if !(x > 0.0 && y > 0.0) && !self.is_symmetric() {
            return Err(Error::Boundary(format!("derivatives unbounded at ({x}, {y})")));
        }
        let p = match *self {
            Self::KlExtended => TermPartials {
                x: (x / y).ln(),
                y: 1.0 - x / y,
                xx: 1.0 / x,
                xy: -1.0 / y,
                yy: x / (y * y),
                xxy: 0.0,
                xyy: 1.0 / (y * y),
            },
            Self::Bregman(g) => TermPartials {
                x: g.d1(x) - g.d1(y),
                y: -g.d2(y) * (x - y),
                xx: g.d2(x),
                xy: -g.d2(y),
                yy: g.d2(y) - g.d3(y) * (x - y),
                xxy: 0.0,
                xyy: -g.d3(y),
            },
            Self::Csiszar(f) => {
                let t = x / y;
                let (f0, f1, f2, f3) = (f.value(t), f.d1(t), f.d2(t), f.d3(t));
                TermPartials {
                    x: f1,
                    y: f0 - t * f1,
                    xx: f2 / y,
                    xy: -t * f2 / y,
                    yy: t * t * f2 / y,
                    xxy: -(t * f3 + f2) / (y * y),
                    xyy: (t * t * f3 + 2.0 * t * f2) / (y * y),
                }
            }
        };
        Ok(p)
    }

    /// Gradient with respect to the weights of the chosen argument.
    pub fn gradient_in(&self, slot: Slot, omega: &InformationState, phi: &InformationState) -> Result<Vec<f64>> {
        if !omega.algebra().same_as(phi.algebra()) {
            return Err(Error::AlgebraMismatch);
        }
        self.gradient_raw(slot, omega.weights(), phi.weights())
    }

    pub fn gradient_raw(&self, slot: Slot, omega: &[f64], phi: &[f64]) -> Result<Vec<f64>> {
        if omega.len() != phi.len() {
            return Err(Error::AlgebraMismatch);
        }
        omega
            .iter()
            .zip(phi)
            .enumerate()
            .map(|(i, (&x, &y))| {
                let g = self.term_gradient(slot, x, y);
                if g.is_finite() {
                    Ok(g)
                } else {
                    Err(Error::Boundary(format!("derivative unbounded at atom {i} ({x}, {y})")))
                }
            })
            .collect()
    }

    fn term_gradient(&self, slot: Slot, x: f64, y: f64) -> f64 {
        match (*self, slot) {
            (Self::KlExtended, Slot::First) => (x / y).ln(),
            (Self::KlExtended, Slot::Second) => 1.0 - x / y,
            (Self::Bregman(g), Slot::First) => g.d1(x) - g.d1(y),
            (Self::Bregman(g), Slot::Second) => {
                if x == y && g.d2(y).is_finite() {
                    0.0
                } else {
                    -g.d2(y) * (x - y)
                }
            }
            (Self::Csiszar(f), Slot::First) => f.d1(x / y),
            (Self::Csiszar(f), Slot::Second) => {
                let t = x / y;
                if t == 0.0 {
                    f.value(0.0)
                } else {
                    f.value(t) - t * f.d1(t)
                }
            }
        }
    }
}
