//! JSON forms of problems, joints, geometry queries and results.
//!
//! States are plain weight arrays over the problem's atoms. Conversions
//! validate everything the library types validate.

use serde::{Deserialize, Serialize};

use crate::algebra::FiniteBooleanAlgebra;
use crate::divergence::{CsiszarFunction, DivergenceSpec, Generator};
use crate::error::{Error, Result};
use crate::evidence::{ConstraintFunctional, ConstraintTerm, ConvexSet, PriorWeighting};
use crate::geometry::GeometryReport;
use crate::state::{ExpFamily, InformationModel, InformationState, JointTable, MixtureFamily, StateChart};
use crate::updating::{InferenceOutcome, InferenceProblem, SolverOptions, WellPosedness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceWire {
    KlExtended,
    BregmanSquaredNorm,
    BregmanNegEntropy,
    CsiszarKl,
    CsiszarChi2,
    CsiszarTvSmoothed,
}

impl From<DivergenceWire> for DivergenceSpec {
    fn from(d: DivergenceWire) -> Self {
        match d {
            DivergenceWire::KlExtended => DivergenceSpec::KlExtended,
            DivergenceWire::BregmanSquaredNorm => DivergenceSpec::Bregman(Generator::SquaredNorm),
            DivergenceWire::BregmanNegEntropy => DivergenceSpec::Bregman(Generator::NegEntropy),
            DivergenceWire::CsiszarKl => DivergenceSpec::Csiszar(CsiszarFunction::Kl),
            DivergenceWire::CsiszarChi2 => DivergenceSpec::Csiszar(CsiszarFunction::Chi2),
            DivergenceWire::CsiszarTvSmoothed => DivergenceSpec::Csiszar(CsiszarFunction::TotalVariationSmoothed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintWire {
    Moment { f: Vec<f64>, c: f64 },
    Normalization,
    /// Atom labels of the supporting event.
    Support(Vec<String>),
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Points(Vec<Vec<f64>>),
    Soft { term: Box<ConstraintWire>, weight: f64 },
}

impl ConstraintWire {
    fn into_term(self, algebra: &FiniteBooleanAlgebra) -> Result<ConstraintTerm> {
        Ok(match self {
            Self::Moment { f, c } => ConstraintTerm::moment(f, c),
            Self::Normalization => ConstraintTerm::Normalization,
            Self::Support(labels) => ConstraintTerm::Support(algebra.element(labels)?),
            Self::Box { lower, upper } => ConstraintTerm::Convex(ConvexSet::Box { lower, upper }),
            Self::Ball { center, radius } => ConstraintTerm::Convex(ConvexSet::Ball { center, radius }),
            Self::Points(p) => ConstraintTerm::Points(p),
            Self::Soft { term, weight } => ConstraintTerm::soft(term.into_term(algebra)?, weight)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpFamilyWire {
    pub base: Vec<f64>,
    pub suffstats: Vec<Vec<f64>>,
}

impl ExpFamilyWire {
    fn build(self, algebra: Option<&FiniteBooleanAlgebra>) -> Result<ExpFamily> {
        match algebra {
            Some(a) => ExpFamily::with_algebra(a.clone(), self.base, self.suffstats),
            None => ExpFamily::new(self.base, self.suffstats),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelWire {
    #[default]
    Cone,
    Simplex,
    ExpFamily(ExpFamilyWire),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentWire {
    pub state: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightingWire {
    #[default]
    Dirac,
    Mixture(Vec<ComponentWire>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemWire {
    /// Atom labels; `a1, a2, …` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<Vec<String>>,
    pub divergence: DivergenceWire,
    #[serde(default)]
    pub weighting: WeightingWire,
    #[serde(default)]
    pub constraints: Vec<ConstraintWire>,
    pub initial: Vec<f64>,
    #[serde(default)]
    pub model: ModelWire,
    #[serde(default)]
    pub options: SolverOptions,
}

impl ProblemWire {
    pub fn into_problem(self) -> Result<InferenceProblem> {
        let algebra = match self.algebra {
            Some(labels) => FiniteBooleanAlgebra::new(labels)?,
            None => FiniteBooleanAlgebra::with_size(self.initial.len())?,
        };
        let initial = InformationState::new(algebra.clone(), self.initial)?;
        let weighting = match self.weighting {
            WeightingWire::Dirac => PriorWeighting::Dirac,
            WeightingWire::Mixture(cs) => PriorWeighting::mixture(
                cs.into_iter()
                    .map(|c| Ok((InformationState::new(algebra.clone(), c.state)?, c.weight)))
                    .collect::<Result<Vec<_>>>()?,
            )?,
        };
        let constraints = ConstraintFunctional::new(
            self.constraints.into_iter().map(|c| c.into_term(&algebra)).collect::<Result<Vec<_>>>()?,
        );
        let model = match self.model {
            ModelWire::Cone => InformationModel::Cone,
            ModelWire::Simplex => InformationModel::Simplex,
            ModelWire::ExpFamily(f) => InformationModel::ExponentialFamily(f.build(Some(&algebra))?),
        };
        let problem = InferenceProblem::new(initial, self.divergence.into(), constraints)
            .with_weighting(weighting)
            .with_model(model)
            .with_options(self.options);
        problem.validate()?;
        Ok(problem)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OutcomeWire {
    Solved {
        atoms: Vec<String>,
        state: Vec<f64>,
        duals: Vec<f64>,
        objective: f64,
        kkt_residual: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parameters: Option<Vec<f64>>,
        iterations: usize,
    },
    Overdetermined {
        residual: f64,
    },
    Undetermined {
        witnesses: Vec<Vec<f64>>,
    },
}

impl From<&InferenceOutcome> for OutcomeWire {
    fn from(o: &InferenceOutcome) -> Self {
        match o {
            InferenceOutcome::Solved(s) => OutcomeWire::Solved {
                atoms: s.state.algebra().atoms().to_vec(),
                state: s.state.weights().to_vec(),
                duals: s.duals.clone(),
                objective: s.objective,
                kkt_residual: s.kkt_residual,
                parameters: s.parameters.clone(),
                iterations: s.iterations,
            },
            InferenceOutcome::Overdetermined { residual } => OutcomeWire::Overdetermined { residual: *residual },
            InferenceOutcome::Undetermined { witnesses } => {
                OutcomeWire::Undetermined { witnesses: witnesses.iter().map(|w| w.weights().to_vec()).collect() }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WellPosednessWire {
    WellPosed { analytic: bool },
    Overdetermined { residual: f64 },
    Undetermined { witnesses: Vec<Vec<f64>> },
}

impl From<&WellPosedness> for WellPosednessWire {
    fn from(w: &WellPosedness) -> Self {
        match w {
            WellPosedness::WellPosed { analytic } => Self::WellPosed { analytic: *analytic },
            WellPosedness::Overdetermined { residual } => Self::Overdetermined { residual: *residual },
            WellPosedness::Undetermined { witnesses } => {
                Self::Undetermined { witnesses: witnesses.iter().map(|w| w.weights().to_vec()).collect() }
            }
        }
    }
}

/// `p[i][j]`: joint weight of observation `x[i]` and hypothesis `theta[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointWire {
    pub x: Vec<String>,
    pub theta: Vec<String>,
    pub p: Vec<Vec<f64>>,
}

impl JointWire {
    pub fn into_joint(self) -> Result<JointTable> {
        JointTable::new(self.x, self.theta, &self.p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentWire {
    pub f: Vec<f64>,
    pub c: f64,
}

/// Maximum-entropy query: prior, linear moments, optional normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxentWire {
    pub prior: Vec<f64>,
    pub moments: Vec<MomentWire>,
    #[serde(default = "yes")]
    pub normalize: bool,
}

fn yes() -> bool {
    true
}

impl MaxentWire {
    pub fn parts(self) -> Result<(InformationState, Vec<(Vec<f64>, f64)>, bool)> {
        let prior = InformationState::from_weights(self.prior)?;
        Ok((prior, self.moments.into_iter().map(|m| (m.f, m.c)).collect(), self.normalize))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleWire {
    pub family: ExpFamilyWire,
    pub counts: Vec<f64>,
}

impl MleWire {
    pub fn parts(self) -> Result<(ExpFamily, Vec<f64>)> {
        Ok((self.family.build(None)?, self.counts))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureFamilyWire {
    pub origin: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartWire {
    ExpFamily(ExpFamilyWire),
    MixtureFamily(MixtureFamilyWire),
}

pub enum Chart {
    Exp(ExpFamily),
    Mixture(MixtureFamily),
}

impl Chart {
    pub fn as_chart(&self) -> &dyn StateChart {
        match self {
            Chart::Exp(f) => f,
            Chart::Mixture(m) => m,
        }
    }
}

impl ChartWire {
    pub fn build(self) -> Result<Chart> {
        Ok(match self {
            ChartWire::ExpFamily(f) => Chart::Exp(f.build(None)?),
            ChartWire::MixtureFamily(m) => Chart::Mixture(MixtureFamily::new(m.origin, m.directions)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryWire {
    pub divergence: DivergenceWire,
    pub chart: ChartWire,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryChecks {
    pub symmetry: f64,
    pub duality_residual: f64,
    pub torsion: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryOutput {
    pub g: Vec<Vec<f64>>,
    /// `gamma[i][j][k] = Γ_{ij,k}`.
    pub gamma: Vec<Vec<Vec<f64>>>,
    pub gamma_star: Vec<Vec<Vec<f64>>>,
    pub checks: GeometryChecks,
}

impl From<&GeometryReport> for GeometryOutput {
    fn from(r: &GeometryReport) -> Self {
        GeometryOutput {
            g: r.metric.g.clone(),
            gamma: r.connections.gamma.clone(),
            gamma_star: r.connections.gamma_star.clone(),
            checks: GeometryChecks {
                symmetry: r.symmetry,
                duality_residual: r.duality_residual,
                torsion: r.connections.torsion(),
                min_eigenvalue: r.metric.min_eigenvalue(),
            },
        }
    }
}

/// Rejects inputs the wire layer cannot represent faithfully.
pub fn ensure_finite(label: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{label} must be finite")))
    }
}
