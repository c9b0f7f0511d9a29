//! Derived values checked against independent numerical oracles.

use infer_core::divergence::{CsiszarFunction, DivergenceSpec, Generator};
use infer_core::evidence::{ConstraintFunctional, PriorWeighting};
use infer_core::geometry::connections_at;
use infer_core::state::{ExpFamily, InformationState, JointTable, MixtureFamily, StateChart};
use infer_core::updating::{bayes_update, update, InferenceOutcome, InferenceProblem};

fn deviation_between(d: &DivergenceSpec, chart: &dyn StateChart, a: &[f64], b: &[f64]) -> f64 {
    d.eval(&chart.weights_at(a).unwrap(), &chart.weights_at(b).unwrap()).unwrap()
}

/// `∂_{bᵢ} ∂_{bⱼ} ∂_{aₖ} D(p_a, p_b)` at `a = b = θ` when `second_pair`;
/// otherwise `∂_{aᵢ} ∂_{aⱼ} ∂_{bₖ}`. One Richardson step on central
/// differences.
fn third_mixed(d: &DivergenceSpec, chart: &dyn StateChart, theta: &[f64], i: usize, j: usize, k: usize, second_pair: bool) -> f64 {
    let coarse = third_mixed_at(d, chart, theta, (i, j, k), second_pair, 5e-4);
    let fine = third_mixed_at(d, chart, theta, (i, j, k), second_pair, 2.5e-4);
    (4.0 * fine - coarse) / 3.0
}

fn third_mixed_at(
    d: &DivergenceSpec,
    chart: &dyn StateChart,
    theta: &[f64],
    (i, j, k): (usize, usize, usize),
    second_pair: bool,
    h: f64,
) -> f64 {
    let eval = |si: f64, sj: f64, sk: f64| {
        let (mut pair, mut single) = (theta.to_vec(), theta.to_vec());
        pair[i] += si;
        pair[j] += sj;
        single[k] += sk;
        if second_pair {
            deviation_between(d, chart, &single, &pair)
        } else {
            deviation_between(d, chart, &pair, &single)
        }
    };
    let mut total = 0.0;
    for (sk, ck) in [(h, 1.0), (-h, -1.0)] {
        let pair2 = if i == j {
            (eval(h, 0.0, sk) - 2.0 * eval(0.0, 0.0, sk) + eval(-h, 0.0, sk)) / (h * h)
        } else {
            (eval(h, h, sk) - eval(h, -h, sk) - eval(-h, h, sk) + eval(-h, -h, sk)) / (4.0 * h * h)
        };
        total += ck * pair2;
    }
    total / (2.0 * h)
}

fn compare_connections(d: DivergenceSpec, chart: &dyn StateChart, theta: &[f64]) {
    let conn = connections_at(&d, chart, theta).unwrap();
    let k = chart.dim();
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                let g = -third_mixed(&d, chart, theta, i, j, l, true);
                let gs = -third_mixed(&d, chart, theta, i, j, l, false);
                let scale = 1.0 + g.abs().max(gs.abs());
                assert!((conn.gamma[i][j][l] - g).abs() < 1e-4 * scale, "{d:?} Γ[{i}{j}{l}] {} vs {g}", conn.gamma[i][j][l]);
                assert!(
                    (conn.gamma_star[i][j][l] - gs).abs() < 1e-4 * scale,
                    "{d:?} Γ*[{i}{j}{l}] {} vs {gs}",
                    conn.gamma_star[i][j][l]
                );
            }
        }
    }
}

#[test]
fn connections_match_third_differences() {
    let divergences = [
        DivergenceSpec::KlExtended,
        DivergenceSpec::Bregman(Generator::SquaredNorm),
        DivergenceSpec::Csiszar(CsiszarFunction::Chi2),
        DivergenceSpec::Csiszar(CsiszarFunction::TotalVariationSmoothed),
    ];
    let exp3 = ExpFamily::full(3).unwrap();
    let simplex = MixtureFamily::simplex(3).unwrap();
    let bern = MixtureFamily::bernoulli_mean();
    for d in divergences {
        compare_connections(d, &exp3, &[0.3, -0.4]);
        compare_connections(d, &simplex, &[0.2, 0.5]);
        compare_connections(d, &bern, &[0.3]);
    }
}

#[test]
fn kl_is_e_flat_in_natural_and_m_flat_in_mixture_coordinates() {
    let kl = DivergenceSpec::KlExtended;
    let e = connections_at(&kl, &ExpFamily::full(4).unwrap(), &[0.1, -0.2, 0.4]).unwrap();
    assert!(e.max_abs_gamma() < 1e-12);
    assert!(e.max_abs_gamma_star() > 1e-2);
    let m = connections_at(&kl, &MixtureFamily::simplex(4).unwrap(), &[0.1, 0.2, 0.3]).unwrap();
    assert!(m.max_abs_gamma_star() < 1e-12);
    assert!(m.max_abs_gamma() > 1e-2);
}

/// Dense grid search over `[0, 1]²` for the squared-norm mixture objective.
#[test]
fn squared_norm_barycenter_against_grid_search() {
    let (w1, w2) = (vec![0.2, 0.7], vec![0.6, 0.1]);
    let d = DivergenceSpec::Bregman(Generator::SquaredNorm);
    let objective = |x: &[f64]| 0.5 * d.eval(&w1, x).unwrap() + 0.5 * d.eval(&w2, x).unwrap();
    let steps = 1000;
    let mut best = (f64::INFINITY, vec![0.0, 0.0]);
    for a in 0..=steps {
        for b in 0..=steps {
            let x = vec![a as f64 / steps as f64, b as f64 / steps as f64];
            let v = objective(&x);
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    let mixture = PriorWeighting::mixture(vec![
        (InformationState::from_weights(w1.clone()).unwrap(), 0.5),
        (InformationState::from_weights(w2.clone()).unwrap(), 0.5),
    ])
    .unwrap();
    let p = InferenceProblem::new(InformationState::from_weights(w1.clone()).unwrap(), d, ConstraintFunctional::none())
        .with_weighting(mixture);
    let InferenceOutcome::Solved(s) = update(&p).unwrap() else { panic!("not solved") };
    for (x, g) in s.state.weights().iter().zip(&best.1) {
        assert!((x - g).abs() <= 1.0 / steps as f64, "{:?} vs grid {:?}", s.state.weights(), best.1);
    }
    assert!(objective(s.state.weights()) <= best.0 + 1e-15);
}

#[test]
fn bayes_examples_by_hand() {
    let joint = JointTable::new(["x1", "x2"], ["t1", "t2"], &[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
    let InferenceOutcome::Solved(s) = bayes_update(&joint, "x1").unwrap() else { panic!() };
    let w = s.state.weights();
    assert!((w[0] - 0.1 / 0.3).abs() < 1e-10 && (w[1] - 0.2 / 0.3).abs() < 1e-10, "{w:?}");
    let uniform = JointTable::new(["x1", "x2"], ["t1", "t2"], &[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
    let InferenceOutcome::Solved(s) = bayes_update(&uniform, "x1").unwrap() else { panic!() };
    assert!(s.state.weights().iter().all(|x| (x - 0.5).abs() < 1e-10));
}
