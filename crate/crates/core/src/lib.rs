//! Quantitative inductive inference on finite boolean algebras.
//!
//! Information states are finite nonnegative measures; evidence is a
//! constraint functional; updating minimizes a prior-weighted deviation plus
//! the evidence. The crate also derives the information geometry of a
//! deviation and checks the commuting diagram that relates observational and
//! theoretical descriptions of an experiment.

pub mod algebra;
pub mod correspondence;
pub mod divergence;
pub mod error;
pub mod evidence;
pub mod geometry;
pub mod scenarios;
pub mod state;
pub mod updating;
pub mod wire;

pub use algebra::{AlgebraElement, AtomVector, FiniteBooleanAlgebra, QuotientMap};
pub use divergence::{CsiszarFunction, DivergenceSpec, Generator, Slot};
pub use error::{Error, Result};
pub use evidence::{bayes_constraints, ConstraintFunctional, ConstraintTerm, ConvexSet, PriorWeighting};
pub use state::{ExpFamily, InformationModel, InformationState, JointTable, MixtureFamily, StateChart};
pub use updating::{
    bayes_posterior_direct, bayes_rule_direct, bayes_update, diagnose_wellposedness, maxent_linear, mle, update,
    InferenceOutcome, InferenceProblem, Solution, SolverOptions, WellPosedness,
};
pub use correspondence::{
    check_functor, check_verifiability, comma, facts_category, opposite, product, Diagram, FiniteCategory, FunctorMap,
    SchemaSpec, SetValuedFunctor, Verdict,
};
pub use geometry::{connections_at, geodesic, geometry_report, metric_at, pythagorean_check, GeodesicKind};
