//! Reproducible demonstration runs with pass/fail verdicts.
//!
//! Each scenario draws its problems from a ChaCha8 stream seeded by the
//! caller, so reports are identical across runs with the same seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::correspondence::{toy_perturbations, toy_schema, DEFAULT_COMMA_CAP};
use crate::divergence::{DivergenceSpec, Generator, Slot};
use crate::error::{Error, Result};
use crate::evidence::{ConstraintFunctional, ConstraintTerm, PriorWeighting};
use crate::geometry::pythagorean_check;
use crate::state::{InformationState, JointTable};
use crate::updating::{bayes_posterior_direct, bayes_update, maxent_linear, update, InferenceOutcome, InferenceProblem};

pub const DEMOS: [&str; 5] = ["bayes-recovery", "maxent-tilt", "barycenter", "pythagoras", "diagram"];

/// Residual bound every numerical demo must meet.
pub const DEMO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub max_residual: f64,
    pub notes: Vec<String>,
}

pub fn run_demo(name: &str, seed: u64) -> Result<DemoReport> {
    match name {
        "bayes-recovery" => bayes_recovery(seed, 200),
        "maxent-tilt" => maxent_tilt(seed, 100),
        "barycenter" => barycenter(seed, 50),
        "pythagoras" => pythagoras(seed, 100),
        "diagram" => diagram(),
        other => Err(Error::Domain(format!("unknown demo {other:?}; available: {}", DEMOS.join(", ")))),
    }
}

fn solved(o: InferenceOutcome, what: &str) -> Result<crate::updating::Solution> {
    match o {
        InferenceOutcome::Solved(s) => Ok(s),
        other => Err(Error::Internal(format!("{what} returned {}", other.status()))),
    }
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn positive(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.05..1.0)).collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Random joint table with `|X|, |Θ| ∈ [2, 6]` and positive normalized entries.
pub fn random_joint(rng: &mut ChaCha8Rng) -> Result<JointTable> {
    let (nx, nt) = (rng.gen_range(2..=6), rng.gen_range(2..=6));
    let flat = normalized(positive(rng, nx * nt));
    let rows: Vec<Vec<f64>> = flat.chunks(nt).map(|c| c.to_vec()).collect();
    JointTable::new((0..nx).map(|i| format!("x{i}")), (0..nt).map(|j| format!("t{j}")), &rows)
}

/// Entropic updating on the observed row against classical conditioning.
pub fn bayes_recovery(seed: u64, cases: usize) -> Result<DemoReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let joint = random_joint(&mut rng)?;
        let b = format!("x{}", rng.gen_range(0..joint.xs().len()));
        let s = solved(bayes_update(&joint, &b)?, "bayes_update")?;
        let d = solved(bayes_posterior_direct(&joint, &b)?, "bayes_rule_direct")?;
        worst = worst.max(sup(s.state.weights(), d.state.weights()));
    }
    Ok(DemoReport {
        name: "bayes-recovery".into(),
        passed: worst <= DEMO_TOL,
        cases,
        max_residual: worst,
        notes: vec!["sup-norm distance between entropic and classical posteriors".into()],
    })
}

/// Residual of the least-squares fit of `y` by `span{1, f}`.
pub fn span_residual(y: &[f64], f: &[f64]) -> f64 {
    let n = y.len() as f64;
    let (mf, my) = (f.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sff: f64 = f.iter().map(|x| (x - mf).powi(2)).sum();
    let sfy: f64 = f.iter().zip(y).map(|(x, v)| (x - mf) * (v - my)).sum();
    let slope = if sff > 0.0 { sfy / sff } else { 0.0 };
    f.iter().zip(y).map(|(x, v)| (v - my - slope * (x - mf)).abs()).fold(0.0, f64::max)
}

/// Single-moment maximum entropy: the solution is an exponential tilt of
/// the prior and meets the moment.
pub fn maxent_tilt(seed: u64, cases: usize) -> Result<DemoReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let n = rng.gen_range(2..=8);
        let prior = InformationState::from_weights(positive(&mut rng, n))?;
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let reach = normalized(positive(&mut rng, n));
        let c: f64 = reach.iter().zip(&f).map(|(p, x)| p * x).sum();
        let s = solved(maxent_linear(&prior, &[(f.clone(), c)], true)?, "maxent_linear")?;
        let q = s.state.weights();
        let logs: Vec<f64> = q.iter().zip(prior.weights()).map(|(a, b)| a.ln() - b.ln()).collect();
        let moment = (q.iter().zip(&f).map(|(p, x)| p * x).sum::<f64>() - c).abs();
        worst = worst.max(span_residual(&logs, &f)).max(moment);
    }
    Ok(DemoReport {
        name: "maxent-tilt".into(),
        passed: worst <= DEMO_TOL,
        cases,
        max_residual: worst,
        notes: vec!["max of tilt-span residual and moment residual".into()],
    })
}

/// Unconstrained updating under a mixture weighting returns the weighted mean.
pub fn barycenter(seed: u64, cases: usize) -> Result<DemoReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for d in [DivergenceSpec::Bregman(Generator::SquaredNorm), DivergenceSpec::KlExtended] {
        for _ in 0..cases {
            let (n, k) = (rng.gen_range(2..=6), rng.gen_range(1..=5));
            let w = normalized(positive(&mut rng, k));
            let comps: Vec<Vec<f64>> = (0..k).map(|_| positive(&mut rng, n)).collect();
            let mean: Vec<f64> = (0..n).map(|i| comps.iter().zip(&w).map(|(c, wk)| wk * c[i]).sum()).collect();
            let states =
                comps.into_iter().zip(w).map(|(c, wk)| Ok((InformationState::from_weights(c)?, wk))).collect::<Result<_>>()?;
            let problem = InferenceProblem::new(InformationState::from_weights(mean.clone())?, d, ConstraintFunctional::none())
                .with_weighting(PriorWeighting::mixture(states)?);
            let s = solved(update(&problem)?, "update")?;
            worst = worst.max(sup(s.state.weights(), &mean));
        }
    }
    Ok(DemoReport {
        name: "barycenter".into(),
        passed: worst <= DEMO_TOL,
        cases: 2 * cases,
        max_residual: worst,
        notes: vec!["sup-norm distance to the weighted mean, squared-norm and extended KL".into()],
    })
}

/// A projection problem with a known interior answer.
#[derive(Debug, Clone)]
pub struct PythagorasCase {
    pub divergence: DivergenceSpec,
    pub p: InformationState,
    pub rows: Vec<(Vec<f64>, f64)>,
    pub r: InformationState,
    /// The projection by construction.
    pub q: Vec<f64>,
}

/// Builds `q > 0`, affine rows through `q`, a prior `p` whose first-slot
/// projection is `q`, and a feasible `r ≠ q`.
pub fn pythagoras_case(rng: &mut ChaCha8Rng, divergence: DivergenceSpec) -> Result<PythagorasCase> {
    let gen = divergence.bregman_generator().ok_or_else(|| Error::Unsupported("needs a Bregman deviation".into()))?;
    let n = rng.gen_range(3..=6);
    let m = rng.gen_range(1..n.min(3));
    let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let lambda: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.2..0.2)).collect();
    // ∇Φ(q) − ∇Φ(p) = Aᵀλ is the first-slot optimality condition.
    let p: Vec<f64> = (0..n)
        .map(|i| {
            let shift: f64 = (0..m).map(|j| a[j][i] * lambda[j]).sum();
            gen.d1_inverse(gen.d1(q[i]) - shift)
        })
        .collect();
    // r = q + v with v in the null space of A, found by projecting a random vector.
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v = null_space_component(&a, &raw);
    let scale = 0.4 / v.iter().fold(1e-12_f64, |s, x| s.max(x.abs()));
    let r: Vec<f64> = q.iter().zip(&v).map(|(x, y)| x + scale * y).collect();
    let rows = a.iter().map(|row| (row.clone(), row.iter().zip(&q).map(|(x, y)| x * y).sum())).collect();
    Ok(PythagorasCase {
        divergence,
        p: InformationState::from_weights(p)?,
        rows,
        r: InformationState::from_weights(r)?,
        q,
    })
}

fn null_space_component(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    // Gram–Schmidt on the rows, then subtract the row-space component.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in a {
        let mut v = row.clone();
        for b in &basis {
            let c: f64 = v.iter().zip(b).map(|(p, q)| p * q).sum();
            v.iter_mut().zip(b).for_each(|(p, q)| *p -= c * q);
        }
        let norm = v.iter().map(|p| p * p).sum::<f64>().sqrt();
        if norm > 1e-10 {
            basis.push(v.into_iter().map(|p| p / norm).collect());
        }
    }
    let mut out = x.to_vec();
    for b in &basis {
        let c: f64 = out.iter().zip(b).map(|(p, q)| p * q).sum();
        out.iter_mut().zip(b).for_each(|(p, q)| *p -= c * q);
    }
    out
}

/// Projects `case.p` with the solver and returns `(q, pythagorean residual)`.
pub fn solve_pythagoras(case: &PythagorasCase) -> Result<(InformationState, f64)> {
    let f = ConstraintFunctional::new(case.rows.iter().map(|(a, b)| ConstraintTerm::moment(a.clone(), *b)).collect());
    let problem = InferenceProblem::new(case.p.clone(), case.divergence, f).with_slot(Slot::First);
    let q = solved(update(&problem)?, "update")?.state;
    let res = pythagorean_check(&case.divergence, &case.p, &q, &case.r)?;
    Ok((q, res))
}

pub fn pythagoras(seed: u64, cases: usize) -> Result<DemoReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for d in [DivergenceSpec::KlExtended, DivergenceSpec::Bregman(Generator::SquaredNorm)] {
        for _ in 0..cases {
            let case = pythagoras_case(&mut rng, d)?;
            let (_, res) = solve_pythagoras(&case)?;
            worst = worst.max(res.abs());
        }
    }
    Ok(DemoReport {
        name: "pythagoras".into(),
        passed: worst <= DEMO_TOL,
        cases: 2 * cases,
        max_residual: worst,
        notes: vec!["|D(r,p) − D(r,q) − D(q,p)| for extended KL and squared-norm".into()],
    })
}

/// Consistent toy schema commutes; every single-edit perturbation fails at
/// the edited element.
pub fn diagram() -> Result<DemoReport> {
    let mut notes = Vec::new();
    let base = toy_schema().build(DEFAULT_COMMA_CAP)?.check()?;
    let mut passed = base.commutes;
    notes.push(format!("consistent schema commutes: {}", base.commutes));
    let perturbations = toy_perturbations();
    for p in &perturbations {
        let v = p.schema.build(DEFAULT_COMMA_CAP)?.check()?;
        let located = v.mismatch.as_ref().is_some_and(|m| {
            m.kind == p.expected && m.observational.iter().chain(&m.theoretical).any(|l| l == p.located_at)
        });
        passed &= !v.commutes && located;
        match &v.mismatch {
            Some(m) => notes.push(format!("{}: mismatch at {:?} {}", p.description, m.kind, m.fact)),
            None => notes.push(format!("{}: unexpectedly commutes", p.description)),
        }
    }
    Ok(DemoReport { name: "diagram".into(), passed, cases: 1 + perturbations.len(), max_residual: 0.0, notes })
}
