use super::*;
use crate::divergence::CsiszarFunction;

fn st(w: &[f64]) -> InformationState {
    InformationState::from_weights(w.to_vec()).unwrap()
}

fn solved(o: InferenceOutcome) -> Solution {
    match o {
        InferenceOutcome::Solved(s) => s,
        other => panic!("expected a solution, got {other:?}"),
    }
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

const ALL: [DivergenceSpec; 6] = [
    DivergenceSpec::KlExtended,
    DivergenceSpec::Bregman(Generator::SquaredNorm),
    DivergenceSpec::Bregman(Generator::NegEntropy),
    DivergenceSpec::Csiszar(CsiszarFunction::Kl),
    DivergenceSpec::Csiszar(CsiszarFunction::Chi2),
    DivergenceSpec::Csiszar(CsiszarFunction::TotalVariationSmoothed),
];

#[test]
fn no_evidence_returns_the_prior() {
    let omega = st(&[0.4, 1.3, 2.0]);
    for d in ALL {
        for slot in [Slot::First, Slot::Second] {
            let s = solved(update(&InferenceProblem::new(omega.clone(), d, ConstraintFunctional::none()).with_slot(slot)).unwrap());
            assert_close(s.state.weights(), omega.weights(), 1e-9);
        }
    }
}

#[test]
fn normalization_rescales_under_kl() {
    for slot in [Slot::First, Slot::Second] {
        let p = InferenceProblem::new(
            st(&[2.0, 3.0, 5.0]),
            DivergenceSpec::KlExtended,
            ConstraintFunctional::new(vec![ConstraintTerm::Normalization]),
        )
        .with_slot(slot);
        let s = solved(update(&p).unwrap());
        assert_close(s.state.weights(), &[0.2, 0.3, 0.5], 1e-12);
        assert!(s.kkt_residual.unwrap() <= 1e-8);
    }
}

#[test]
fn squared_norm_barycenter() {
    let w = PriorWeighting::mixture(vec![(st(&[1.0, 0.0]), 0.5), (st(&[0.0, 1.0]), 0.5)]).unwrap();
    let p = InferenceProblem::new(st(&[1.0, 0.0]), DivergenceSpec::Bregman(Generator::SquaredNorm), ConstraintFunctional::none())
        .with_weighting(w);
    let s = solved(update(&p).unwrap());
    assert_close(s.state.weights(), &[0.5, 0.5], 1e-12);
}

#[test]
fn contradictory_moments_are_overdetermined() {
    let f = vec![1.0, 2.0, 3.0];
    let c = ConstraintFunctional::new(vec![
        ConstraintTerm::moment(f.clone(), 1.0),
        ConstraintTerm::moment(f, 3.0),
        ConstraintTerm::Normalization,
    ]);
    for d in ALL {
        let p = InferenceProblem::new(st(&[1.0, 1.0, 1.0]), d, c.clone());
        match update(&p).unwrap() {
            InferenceOutcome::Overdetermined { residual } => assert!(residual > FEASIBILITY_TOL),
            other => panic!("{other:?}"),
        }
        assert!(matches!(diagnose_wellposedness(&p).unwrap(), WellPosedness::Overdetermined { .. }));
    }
}

#[test]
fn maxent_examples() {
    let u = st(&[1.0 / 3.0; 3]);
    let f = vec![1.0, 2.0, 3.0];
    let s = solved(maxent_linear(&u, &[(f.clone(), 2.0)], true).unwrap());
    assert_close(s.state.weights(), u.weights(), 1e-10);
    let s = solved(maxent_linear(&u, &[(f.clone(), 2.5)], true).unwrap());
    let mean: f64 = s.state.weights().iter().zip(&f).map(|(a, b)| a * b).sum();
    assert!((mean - 2.5).abs() < 1e-10);
    let l: Vec<f64> = s.state.weights().iter().map(|w| w.ln()).collect();
    assert!(((l[1] - l[0]) - (l[2] - l[1])).abs() < 1e-9);
    assert!(matches!(maxent_linear(&u, &[(f, 3.5)], true).unwrap(), InferenceOutcome::Overdetermined { .. }));
}

#[test]
fn maxent_on_hull_boundary_reports_boundary() {
    let u = st(&[1.0 / 3.0; 3]);
    match maxent_linear(&u, &[(vec![1.0, 2.0, 3.0], 3.0)], true) {
        Err(Error::NoConvergence { boundary: Some(_), .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn bayes_examples() {
    let j = JointTable::new(vec!["x1", "x2"], vec!["t1", "t2"], &[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
    for o in [bayes_update(&j, "x1").unwrap(), bayes_posterior_direct(&j, "x1").unwrap()] {
        assert_close(solved(o).state.weights(), &[1.0 / 3.0, 2.0 / 3.0], 1e-12);
    }
    let z = JointTable::new(vec!["x1", "x2"], vec!["t1", "t2"], &[vec![0.0, 0.0], vec![0.5, 0.5]]).unwrap();
    assert!(matches!(bayes_update(&z, "x1").unwrap(), InferenceOutcome::Overdetermined { .. }));
    assert!(matches!(bayes_posterior_direct(&z, "x1").unwrap(), InferenceOutcome::Overdetermined { .. }));
}

#[test]
fn conditioning_on_top_normalizes() {
    let p = st(&[1.0, 3.0]);
    let s = solved(bayes_rule_direct(&p, &p.algebra().top()).unwrap());
    assert_close(s.state.weights(), &[0.25, 0.75], 1e-15);
}

#[test]
fn mle_examples() {
    let theta = mle(&ExpFamily::bernoulli(), &[3.0, 7.0]).unwrap();
    let p = ExpFamily::bernoulli().param_to_state(&theta).unwrap();
    assert_close(p.weights(), &[0.3, 0.7], 1e-10);
    let full = ExpFamily::full(4).unwrap();
    let theta = mle(&full, &[2.0; 4]).unwrap();
    assert_close(full.param_to_state(&theta).unwrap().weights(), &[0.25; 4], 1e-10);
    let fam = ExpFamily::new(vec![1.0; 3], vec![vec![1.0, 2.0, 3.0]]).unwrap();
    let theta = mle(&fam, &[1.0, 1.0, 2.0]).unwrap();
    assert!((fam.mean_at(&theta).unwrap()[0] - 2.25).abs() < 1e-10);
    assert!(matches!(mle(&ExpFamily::bernoulli(), &[0.0, 5.0]), Err(Error::NoConvergence { boundary: Some(_), .. })));
}

#[test]
fn two_point_set_is_undetermined() {
    let c = ConstraintFunctional::new(vec![ConstraintTerm::Points(vec![vec![0.9, 0.1], vec![0.1, 0.9]])]);
    let p = InferenceProblem::new(st(&[0.5, 0.5]), DivergenceSpec::Bregman(Generator::SquaredNorm), c);
    match update(&p).unwrap() {
        InferenceOutcome::Undetermined { witnesses } => {
            assert_eq!(witnesses.len(), 2);
            assert_close(witnesses[0].weights(), &[0.1, 0.9], 0.0);
            assert_close(witnesses[1].weights(), &[0.9, 0.1], 0.0);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(diagnose_wellposedness(&p).unwrap(), WellPosedness::Undetermined { .. }));
}

#[test]
fn reachable_maxent_is_wellposed() {
    let c = ConstraintFunctional::new(vec![ConstraintTerm::moment(vec![1.0, 2.0, 3.0], 2.5), ConstraintTerm::Normalization]);
    let p = InferenceProblem::new(st(&[1.0; 3]), DivergenceSpec::KlExtended, c).with_slot(Slot::First);
    assert_eq!(diagnose_wellposedness(&p).unwrap(), WellPosedness::WellPosed { analytic: true });
}

#[test]
fn restart_diagnostic_on_a_non_strict_problem() {
    // Second-slot KL with a zero prior atom is linear in that atom.
    let c = ConstraintFunctional::new(vec![ConstraintTerm::Normalization]);
    let p = InferenceProblem::new(st(&[0.0, 1.0, 1.0]), DivergenceSpec::KlExtended, c);
    assert_eq!(diagnose_wellposedness(&p).unwrap(), WellPosedness::WellPosed { analytic: false });
    let s = solved(update(&p).unwrap());
    assert!(s.state.weights()[0] < 1e-9);
}

#[test]
fn second_slot_support_cut_is_overdetermined() {
    let a = FiniteBooleanAlgebraExt::first_two(3);
    let c = ConstraintFunctional::new(vec![ConstraintTerm::Support(a)]);
    let p = InferenceProblem::new(st(&[1.0, 1.0, 1.0]), DivergenceSpec::KlExtended, c.clone());
    assert!(matches!(update(&p).unwrap(), InferenceOutcome::Overdetermined { .. }));
    let s = solved(update(&p.clone().with_slot(Slot::First)).unwrap());
    assert_close(s.state.weights(), &[1.0, 1.0, 0.0], 1e-12);
}

struct FiniteBooleanAlgebraExt;

impl FiniteBooleanAlgebraExt {
    fn first_two(n: usize) -> AlgebraElement {
        let alg = crate::algebra::FiniteBooleanAlgebra::with_size(n).unwrap();
        alg.from_indices([0, 1]).unwrap()
    }
}

#[test]
fn squared_norm_respects_orthant() {
    let c = ConstraintFunctional::new(vec![ConstraintTerm::Normalization]);
    let p = InferenceProblem::new(st(&[1.3, 0.0, 0.2]), DivergenceSpec::Bregman(Generator::SquaredNorm), c);
    let s = solved(update(&p).unwrap());
    assert_close(s.state.weights(), &[1.0, 0.0, 0.0], 1e-10);
    assert!(s.kkt_residual.unwrap() <= 1e-8);
}

#[test]
fn csiszar_fallback_satisfies_constraints() {
    let c = ConstraintFunctional::new(vec![ConstraintTerm::moment(vec![1.0, 2.0, 3.0], 2.2), ConstraintTerm::Normalization]);
    for f in [CsiszarFunction::Chi2, CsiszarFunction::TotalVariationSmoothed] {
        let p = InferenceProblem::new(st(&[0.3, 0.3, 0.4]), DivergenceSpec::Csiszar(f), c.clone());
        let s = solved(update(&p).unwrap());
        assert!(c.hard_violation(s.state.weights()) < 1e-9);
        assert!(s.kkt_residual.unwrap() < 1e-6, "{:?}", s.kkt_residual);
    }
}

#[test]
fn soft_constraints_pull_towards_the_target() {
    let soft = ConstraintTerm::soft(ConstraintTerm::moment(vec![1.0, 0.0], 2.0), 1.0).unwrap();
    let p = InferenceProblem::new(st(&[1.0, 1.0]), DivergenceSpec::Bregman(Generator::SquaredNorm), ConstraintFunctional::new(vec![soft]));
    // min (x−1)² + (x−2)² at x = 1.5.
    let s = solved(update(&p).unwrap());
    assert_close(s.state.weights(), &[1.5, 1.0], 1e-8);
}

#[test]
fn convex_sets_with_squared_norm() {
    let ball = ConvexSet::Ball { center: vec![0.0, 0.0], radius: 1.0 };
    let p = InferenceProblem::new(
        st(&[3.0, 4.0]),
        DivergenceSpec::Bregman(Generator::SquaredNorm),
        ConstraintFunctional::new(vec![ConstraintTerm::Convex(ball)]),
    );
    let s = solved(update(&p).unwrap());
    assert_close(s.state.weights(), &[0.6, 0.8], 1e-9);
    assert!(s.kkt_residual.is_none());
}

#[test]
fn exponential_family_model_update() {
    let fam = ExpFamily::bernoulli();
    let p = InferenceProblem::new(st(&[0.5, 1.5]), DivergenceSpec::KlExtended, ConstraintFunctional::none())
        .with_model(InformationModel::ExponentialFamily(fam));
    let s = solved(update(&p).unwrap());
    assert_close(s.state.weights(), &[0.25, 0.75], 1e-9);
    assert!((s.parameters.unwrap()[0] - 3f64.ln()).abs() < 1e-8);
    let with_moment = p.clone().with_weighting(PriorWeighting::Dirac);
    let mut bad = with_moment;
    bad.constraints.push(ConstraintTerm::moment(vec![0.0, 1.0], 0.5));
    assert!(matches!(update(&bad), Err(Error::Unsupported(_))));
}

#[test]
fn idempotence_and_scaling() {
    let c = ConstraintFunctional::new(vec![ConstraintTerm::moment(vec![0.0, 1.0, 4.0], 1.7), ConstraintTerm::Normalization]);
    for slot in [Slot::First, Slot::Second] {
        let base = st(&[0.2, 0.5, 0.3]);
        let once = solved(update(&InferenceProblem::new(base.clone(), DivergenceSpec::KlExtended, c.clone()).with_slot(slot)).unwrap());
        let twice = solved(update(&InferenceProblem::new(once.state.clone(), DivergenceSpec::KlExtended, c.clone()).with_slot(slot)).unwrap());
        assert!(once.state.sup_distance(&twice.state) <= 1e-9);
        for k in [0.1, 1.0, 7.3] {
            let scaled = solved(update(&InferenceProblem::new(base.scaled(k).unwrap(), DivergenceSpec::KlExtended, c.clone()).with_slot(slot)).unwrap());
            assert!(once.state.sup_distance(&scaled.state) <= 1e-9);
        }
    }
}
