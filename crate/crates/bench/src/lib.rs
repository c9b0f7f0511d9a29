//! Deterministic problem fixtures shared by the benchmarks.

use infer_core::divergence::{CsiszarFunction, DivergenceSpec, Generator, Slot};
use infer_core::evidence::{ConstraintFunctional, ConstraintTerm};
use infer_core::state::{InformationState, JointTable};
use infer_core::updating::InferenceProblem;

/// Smooth positive weights in `[0.1, 1.1)`, no RNG needed.
pub fn weights(n: usize, phase: f64) -> Vec<f64> {
    (0..n).map(|i| 0.6 + 0.5 * ((i as f64 + 1.0) * 1.7 + phase).sin()).collect()
}

pub fn joint(nx: usize, nt: usize) -> JointTable {
    let rows: Vec<Vec<f64>> = (0..nx).map(|i| weights(nt, i as f64)).collect();
    JointTable::new((0..nx).map(|i| format!("x{i}")), (0..nt).map(|j| format!("t{j}")), &rows).expect("valid joint")
}

/// `n` atoms, `m` moments through a positive interior point, plus normalization.
pub fn moment_problem(divergence: DivergenceSpec, slot: Slot, n: usize, m: usize) -> InferenceProblem {
    let prior = InformationState::from_weights(weights(n, 0.3)).expect("positive");
    let target = weights(n, 2.1);
    let total: f64 = target.iter().sum();
    let mut terms: Vec<ConstraintTerm> = (0..m)
        .map(|j| {
            let f = weights(n, 5.0 + j as f64);
            let c = f.iter().zip(&target).map(|(a, b)| a * b / total).sum();
            ConstraintTerm::moment(f, c)
        })
        .collect();
    terms.push(ConstraintTerm::Normalization);
    InferenceProblem::new(prior, divergence, ConstraintFunctional::new(terms)).with_slot(slot)
}

pub fn divergences() -> [(&'static str, DivergenceSpec); 3] {
    [
        ("kl", DivergenceSpec::KlExtended),
        ("squared_norm", DivergenceSpec::Bregman(Generator::SquaredNorm)),
        ("chi2", DivergenceSpec::Csiszar(CsiszarFunction::Chi2)),
    ]
}
