//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Lines are written straight to the stderr handle so they show up in the
//! test log without `--nocapture`.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use infer_core::correspondence::{toy_perturbations, toy_schema, DEFAULT_COMMA_CAP};
use infer_core::divergence::{CsiszarFunction, DivergenceSpec, Generator, Slot};
use infer_core::evidence::{ConstraintFunctional, ConstraintTerm, PriorWeighting};
use infer_core::geometry::{connections_at, duality_residual, metric_at};
use infer_core::scenarios::{pythagoras_case, random_joint, solve_pythagoras, span_residual};
use infer_core::state::{ExpFamily, InformationState, MixtureFamily};
use infer_core::updating::{
    bayes_posterior_direct, bayes_update, maxent_linear, update, InferenceOutcome, InferenceProblem,
};
use infer_core::FiniteCategory;

const BAYES_TOL: f64 = 1e-8;
const BAYES_CASES: usize = 200;
const BAYES_TIME: Duration = Duration::from_secs(5);
const MAXENT_TOL: f64 = 1e-8;
const MAXENT_CASES: usize = 100;
const MAXENT_TIME: Duration = Duration::from_secs(5);
const BARYCENTER_TOL: f64 = 1e-8;
const PYTHAGORAS_TOL: f64 = 1e-8;
const PYTHAGORAS_CASES: usize = 100;
const FISHER_TOL: f64 = 1e-4;
const CHI2_METRIC_TOL: f64 = 1e-3;
const FLATNESS_TOL: f64 = 1e-5;
const DUALITY_TOL: f64 = 1e-4;
const INVARIANCE_TOL: f64 = 1e-9;
const AXIOM_PAIRS: usize = 10_000;
const GRADIENT_REL_TOL: f64 = 1e-6;
const DIAGRAM_TIME: Duration = Duration::from_secs(1);

struct Verdict {
    passed: bool,
    detail: String,
}

fn report(n: usize, name: &str, start: Instant, v: &Verdict) -> bool {
    let line = format!(
        "{} criterion {n} ({name}): {} [{:.3} s]\n",
        if v.passed { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    v.passed
}

fn solved(o: InferenceOutcome) -> InformationState {
    match o {
        InferenceOutcome::Solved(s) => s.state,
        other => panic!("expected a solution, got {}", other.status()),
    }
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn positive(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.05..1.0)).collect()
}

fn bayes() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for _ in 0..BAYES_CASES {
        let joint = random_joint(&mut rng).unwrap();
        let b = format!("x{}", rng.gen_range(0..joint.xs().len()));
        let s = solved(bayes_update(&joint, &b).unwrap());
        let d = solved(bayes_posterior_direct(&joint, &b).unwrap());
        worst = worst.max(sup(s.weights(), d.weights()));
    }
    let t = start.elapsed();
    Verdict {
        passed: worst <= BAYES_TOL && t < BAYES_TIME,
        detail: format!("{BAYES_CASES} joints, max sup-norm {worst:.2e} (tol {BAYES_TOL:e}), {:.3} s", t.as_secs_f64()),
    }
}

/// `q(λ) ∝ ω · exp(λ f)` with `E_q[f] = c`, found by bisection.
fn bisection_oracle(omega: &[f64], f: &[f64], c: f64) -> Vec<f64> {
    let tilt = |l: f64| {
        let m = f.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(l * x));
        let w: Vec<f64> = omega.iter().zip(f).map(|(o, x)| o * (l * x - m).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect::<Vec<_>>()
    };
    let mean = |q: &[f64]| q.iter().zip(f).map(|(a, b)| a * b).sum::<f64>();
    let (mut lo, mut hi) = (-1.0, 1.0);
    while mean(&tilt(lo)) > c {
        lo *= 2.0;
    }
    while mean(&tilt(hi)) < c {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(&tilt(mid)) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    tilt(0.5 * (lo + hi))
}

fn maxent() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut oracle_gap, mut span_gap) = (0.0_f64, 0.0_f64);
    for _ in 0..MAXENT_CASES {
        let n = rng.gen_range(2..=8);
        let omega = positive(&mut rng, n);
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let reach = positive(&mut rng, n);
        let total: f64 = reach.iter().sum();
        let c: f64 = reach.iter().zip(&f).map(|(r, x)| r * x).sum::<f64>() / total;
        let prior = InformationState::from_weights(omega.clone()).unwrap();
        let q = solved(maxent_linear(&prior, &[(f.clone(), c)], true).unwrap());
        oracle_gap = oracle_gap.max(sup(q.weights(), &bisection_oracle(&omega, &f, c)));
        let logs: Vec<f64> = q.weights().iter().zip(&omega).map(|(a, b)| a.ln() - b.ln()).collect();
        span_gap = span_gap.max(span_residual(&logs, &f));
    }
    let t = start.elapsed();
    Verdict {
        passed: oracle_gap <= MAXENT_TOL && span_gap <= MAXENT_TOL && t < MAXENT_TIME,
        detail: format!(
            "{MAXENT_CASES} problems, bisection gap {oracle_gap:.2e}, tilt-span residual {span_gap:.2e} (tol {MAXENT_TOL:e}), {:.3} s",
            t.as_secs_f64()
        ),
    }
}

fn barycenter() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for d in [DivergenceSpec::Bregman(Generator::SquaredNorm), DivergenceSpec::KlExtended] {
        for _ in 0..50 {
            let (n, k) = (rng.gen_range(1..=6), rng.gen_range(1..=5));
            let raw = positive(&mut rng, k);
            let total: f64 = raw.iter().sum();
            let comps: Vec<Vec<f64>> = (0..k).map(|_| positive(&mut rng, n)).collect();
            let mean: Vec<f64> =
                (0..n).map(|i| comps.iter().zip(&raw).map(|(c, w)| w / total * c[i]).sum()).collect();
            let mixture = PriorWeighting::mixture(
                comps.iter().zip(&raw).map(|(c, w)| (InformationState::from_weights(c.clone()).unwrap(), w / total)).collect(),
            )
            .unwrap();
            let start = InformationState::from_weights(comps[0].clone()).unwrap();
            let p = InferenceProblem::new(start, d, ConstraintFunctional::none()).with_weighting(mixture);
            worst = worst.max(sup(solved(update(&p).unwrap()).weights(), &mean));
            cases += 1;
        }
    }
    Verdict {
        passed: worst <= BARYCENTER_TOL,
        detail: format!("{cases} mixtures, squared-norm and extended KL, max gap {worst:.2e} (tol {BARYCENTER_TOL:e})"),
    }
}

fn pythagoras() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut worst, mut proj_gap) = (0.0_f64, 0.0_f64);
    for d in [DivergenceSpec::KlExtended, DivergenceSpec::Bregman(Generator::SquaredNorm)] {
        for _ in 0..PYTHAGORAS_CASES {
            let case = pythagoras_case(&mut rng, d).unwrap();
            let (q, res) = solve_pythagoras(&case).unwrap();
            worst = worst.max(res.abs());
            proj_gap = proj_gap.max(sup(q.weights(), &case.q));
        }
    }
    Verdict {
        passed: worst <= PYTHAGORAS_TOL,
        detail: format!(
            "{} triples, max |residual| {worst:.2e} (tol {PYTHAGORAS_TOL:e}), projection vs construction {proj_gap:.2e}",
            2 * PYTHAGORAS_CASES
        ),
    }
}

fn geometry() -> Verdict {
    let kl = DivergenceSpec::KlExtended;
    let chi2 = DivergenceSpec::Csiszar(CsiszarFunction::Chi2);
    let chart = MixtureFamily::bernoulli_mean();
    let (mut fisher, mut chi) = (0.0_f64, 0.0_f64);
    for p in [0.2, 0.5, 0.8] {
        let exact = 1.0 / (p * (1.0 - p));
        fisher = fisher.max((metric_at(&kl, &chart, &[p]).unwrap().g[0][0] - exact).abs());
        chi = chi.max((metric_at(&chi2, &chart, &[p]).unwrap().g[0][0] - exact).abs());
    }
    let mut flat = 0.0_f64;
    let mut duality = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let families = [ExpFamily::bernoulli(), ExpFamily::full(3).unwrap(), ExpFamily::full(4).unwrap()];
    for fam in &families {
        for _ in 0..5 {
            let theta: Vec<f64> = (0..fam.suffstats().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            flat = flat.max(connections_at(&kl, fam, &theta).unwrap().max_abs_gamma());
            for d in [kl, chi2, DivergenceSpec::Bregman(Generator::SquaredNorm)] {
                duality = duality.max(duality_residual(&d, fam, &theta).unwrap());
            }
        }
    }
    let simplex = MixtureFamily::simplex(3).unwrap();
    for theta in [[0.2, 0.3], [0.5, 0.1], [0.3, 0.3]] {
        duality = duality.max(duality_residual(&kl, &simplex, &theta).unwrap());
    }
    Verdict {
        passed: fisher <= FISHER_TOL && chi <= CHI2_METRIC_TOL && flat <= FLATNESS_TOL && duality <= DUALITY_TOL,
        detail: format!(
            "Fisher gap {fisher:.2e} (tol {FISHER_TOL:e}), chi2/2 gap {chi:.2e} (tol {CHI2_METRIC_TOL:e}), \
             natural-parameter Γ {flat:.2e} (tol {FLATNESS_TOL:e}), duality residual {duality:.2e} (tol {DUALITY_TOL:e})"
        ),
    }
}

fn wellposedness() -> Verdict {
    let omega = InformationState::from_weights(vec![1.0, 1.0, 1.0]).unwrap();
    let f = vec![1.0, 2.0, 3.0];
    let contradictory = ConstraintFunctional::new(vec![
        ConstraintTerm::moment(f.clone(), 1.0),
        ConstraintTerm::moment(f, 3.0),
        ConstraintTerm::Normalization,
    ]);
    let over = update(&InferenceProblem::new(omega, DivergenceSpec::KlExtended, contradictory)).unwrap();
    let over_ok = matches!(over, InferenceOutcome::Overdetermined { residual } if residual > 0.0);

    let points = ConstraintFunctional::new(vec![ConstraintTerm::Points(vec![vec![0.9, 0.1], vec![0.1, 0.9]])]);
    let center = InformationState::from_weights(vec![0.5, 0.5]).unwrap();
    let under = update(&InferenceProblem::new(center, DivergenceSpec::Bregman(Generator::SquaredNorm), points)).unwrap();
    let under_ok = match &under {
        InferenceOutcome::Undetermined { witnesses } => {
            witnesses.len() == 2
                && [[0.1, 0.9], [0.9, 0.1]].iter().all(|w| witnesses.iter().any(|s| sup(s.weights(), w) == 0.0))
        }
        _ => false,
    };
    Verdict {
        passed: over_ok && under_ok,
        detail: format!("contradictory moments → {over:?}; two-point set → {}", under.status()),
    }
}

fn invariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0.0_f64;
    for slot in [Slot::Second, Slot::First] {
        for _ in 0..20 {
            let n = rng.gen_range(2..=6);
            let omega = positive(&mut rng, n);
            let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let reach = positive(&mut rng, n);
            let total: f64 = reach.iter().sum();
            let c = reach.iter().zip(&f).map(|(r, x)| r * x).sum::<f64>() / total;
            let constraints =
                ConstraintFunctional::new(vec![ConstraintTerm::moment(f, c), ConstraintTerm::Normalization]);
            let solve = |scale: f64| {
                let w: Vec<f64> = omega.iter().map(|x| scale * x).collect();
                let p = InferenceProblem::new(InformationState::from_weights(w).unwrap(), DivergenceSpec::KlExtended, constraints.clone())
                    .with_slot(slot);
                solved(update(&p).unwrap()).into_weights()
            };
            let base = solve(1.0);
            for scale in [0.1, 1.0, 7.3] {
                worst = worst.max(sup(&solve(scale), &base));
            }
        }
    }
    Verdict {
        passed: worst <= INVARIANCE_TOL,
        detail: format!("c ∈ {{0.1, 1, 7.3}}, both slots, max argmin gap {worst:.2e} (tol {INVARIANCE_TOL:e})"),
    }
}

fn shipped_divergences() -> Vec<DivergenceSpec> {
    vec![
        DivergenceSpec::KlExtended,
        DivergenceSpec::Bregman(Generator::SquaredNorm),
        DivergenceSpec::Bregman(Generator::NegEntropy),
        DivergenceSpec::Csiszar(CsiszarFunction::Kl),
        DivergenceSpec::Csiszar(CsiszarFunction::Chi2),
        DivergenceSpec::Csiszar(CsiszarFunction::TotalVariationSmoothed),
    ]
}

fn axioms() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let (mut negative, mut identity, mut grad) = (0usize, 0.0_f64, 0.0_f64);
    for d in shipped_divergences() {
        for k in 0..AXIOM_PAIRS {
            let n = rng.gen_range(1..=6);
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..3.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..3.0)).collect();
            if d.eval(&a, &b).unwrap() < 0.0 {
                negative += 1;
            }
            identity = identity.max(d.eval(&a, &a).unwrap().abs());
            if k % 20 != 0 {
                continue;
            }
            for slot in [Slot::First, Slot::Second] {
                let g = d.gradient_raw(slot, &a, &b).unwrap();
                for i in 0..n {
                    let at = |x: f64| {
                        let (mut a2, mut b2) = (a.clone(), b.clone());
                        match slot {
                            Slot::First => a2[i] = x,
                            Slot::Second => b2[i] = x,
                        }
                        d.eval(&a2, &b2).unwrap()
                    };
                    let x0 = if slot == Slot::First { a[i] } else { b[i] };
                    // Fourth-order stencil, step relative to the coordinate.
                    let h = 1e-3 * x0;
                    let fd = (8.0 * (at(x0 + h) - at(x0 - h)) - (at(x0 + 2.0 * h) - at(x0 - 2.0 * h))) / (12.0 * h);
                    grad = grad.max((g[i] - fd).abs() / g[i].abs().max(1.0));
                }
            }
        }
    }
    Verdict {
        passed: negative == 0 && identity == 0.0 && grad <= GRADIENT_REL_TOL,
        detail: format!(
            "{} divergences × {AXIOM_PAIRS} pairs, {negative} negative values, max D(ω,ω) {identity:.1e}, \
             gradient relative error {grad:.2e} (tol {GRADIENT_REL_TOL:e})",
            shipped_divergences().len()
        ),
    }
}

fn diagram() -> Verdict {
    let start = Instant::now();
    let d = toy_schema().build(DEFAULT_COMMA_CAP).unwrap();
    let consistent = d.check().unwrap().commutes;
    let laws_ok = d.categories().iter().all(|(_, c): &(&str, &FiniteCategory)| c.law_violations(1).is_empty());
    let mut located = 0;
    let perturbations = toy_perturbations();
    for p in &perturbations {
        let diag = p.schema.build(DEFAULT_COMMA_CAP).unwrap();
        let laws = diag.categories().iter().all(|(_, c)| c.law_violations(1).is_empty());
        if let Some(m) = diag.check().unwrap().mismatch {
            if laws && m.kind == p.expected && m.observational.iter().chain(&m.theoretical).any(|l| l == p.located_at) {
                located += 1;
            }
        }
    }
    let t = start.elapsed();
    Verdict {
        passed: consistent && laws_ok && located == perturbations.len() && t < DIAGRAM_TIME,
        detail: format!(
            "consistent schema commutes: {consistent}, {located}/{} perturbations located, category laws hold: {laws_ok}, {:.3} s",
            perturbations.len(),
            t.as_secs_f64()
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("Bayes as entropic updating", bayes),
        ("maximum entropy against bisection", maxent),
        ("Bregman barycenter", barycenter),
        ("Pythagorean identity", pythagoras),
        ("metric and connections", geometry),
        ("well-posedness taxonomy", wellposedness),
        ("unnormalized invariance", invariance),
        ("divergence axioms", axioms),
        ("diagram checker", diagram),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        if !report(i + 1, name, start, &v) {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
