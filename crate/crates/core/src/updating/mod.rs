//! Entropic updating `ℙ_{D,E,F}(ω) = arginf_φ ∫E(ϕ, ω) D(ϕ, φ) + F(φ)` and
//! its special cases.
//!
//! Mixture weightings reduce to a single center for every Bregman-type
//! deviation, so most problems become a projection of one state. Dispatch:
//!
//! * KL with affine hard constraints: Newton on the strictly convex dual.
//! * Squared-norm Bregman: cyclic projections with Dykstra corrections.
//! * Everything else: damped projected gradient.
//! * Finite candidate sets: exhaustive enumeration.
//! * Exponential-family models: Newton in the natural parameters.

mod descent;
mod dual;
mod family;
mod feasibility;
mod newton;
mod projection;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraElement;
use crate::divergence::{DivergenceSpec, Generator, Slot};
use crate::error::{Error, Result};
use crate::evidence::{bayes_constraints, ConstraintFunctional, ConstraintTerm, ConvexSet, PriorWeighting};
use crate::state::{ExpFamily, InformationModel, InformationState, JointTable, StateChart};

/// Largest constraint residual still counted as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Objective gap within which two minimizers tie.
pub const TIE_TOL: f64 = 1e-9;
/// Sup-norm distance above which tied minimizers are distinct witnesses.
pub const WITNESS_SEPARATION: f64 = 1e-4;
/// Number of restarts of the multi-start uniqueness diagnostic.
pub const RESTARTS: usize = 16;
/// Relative tilt below which a dual iterate is considered to have hit the
/// boundary of the model.
const BOUNDARY_RATIO: f64 = 1e-9;
/// Stationarity accepted from the fallback solver when it stalls.
const FALLBACK_ACCEPT: f64 = 1e-6;
const FALLBACK_ITER_FACTOR: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Argument of `D` holding the unknown state.
    pub slot: Slot,
    /// Seed of the restart sequence of [`diagnose_wellposedness`].
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200, slot: Slot::Second, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceProblem {
    pub divergence: DivergenceSpec,
    pub weighting: PriorWeighting,
    pub constraints: ConstraintFunctional,
    pub initial: InformationState,
    pub model: InformationModel,
    pub options: SolverOptions,
}

impl InferenceProblem {
    /// Dirac weighting, cone model, default options.
    pub fn new(initial: InformationState, divergence: DivergenceSpec, constraints: ConstraintFunctional) -> Self {
        Self {
            divergence,
            weighting: PriorWeighting::Dirac,
            constraints,
            initial,
            model: InformationModel::Cone,
            options: SolverOptions::default(),
        }
    }

    pub fn with_weighting(mut self, weighting: PriorWeighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn with_model(mut self, model: InformationModel) -> Self {
        self.model = model;
        self
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_slot(mut self, slot: Slot) -> Self {
        self.options.slot = slot;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let alg = self.initial.algebra();
        let n = alg.len();
        self.constraints.check_len(n)?;
        for (s, _) in self.weighting.components(&self.initial) {
            if !s.algebra().same_as(alg) {
                return Err(Error::AlgebraMismatch);
            }
        }
        for t in self.constraints.terms() {
            if let ConstraintTerm::Support(a) = t {
                if !a.algebra().same_as(alg) {
                    return Err(Error::AlgebraMismatch);
                }
            }
        }
        if let InformationModel::ExponentialFamily(fam) = &self.model {
            if fam.n_atoms() != n {
                return Err(Error::AlgebraMismatch);
            }
        }
        let o = &self.options;
        if !(o.tol > 0.0 && o.tol.is_finite()) || o.max_iter == 0 {
            return Err(Error::Domain("tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub state: InformationState,
    /// Multipliers of the hard affine constraints, in term order (with the
    /// normalization implied by a simplex model last). Sign convention:
    /// `∇_φ objective = Σⱼ λⱼ aⱼ` on the free atoms.
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Stationarity plus feasibility residual; `None` when convex-set
    /// constraints make it unavailable.
    pub kkt_residual: Option<f64>,
    /// Natural parameters, for exponential-family models.
    pub parameters: Option<Vec<f64>>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InferenceOutcome {
    Solved(Solution),
    /// No state satisfies the hard constraints; `residual` is the smallest
    /// achievable constraint violation.
    Overdetermined { residual: f64 },
    /// At least two distinct minimizers, sorted lexicographically.
    Undetermined { witnesses: Vec<InformationState> },
}

impl InferenceOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Self::Solved(s) => Some(s),
            _ => None,
        }
    }

    pub fn state(&self) -> Option<&InformationState> {
        self.solution().map(|s| &s.state)
    }

    pub fn is_solved(&self) -> bool {
        matches!(self, Self::Solved(_))
    }

    pub fn status(&self) -> &'static str {
        match self {
            Self::Solved(_) => "solved",
            Self::Overdetermined { .. } => "overdetermined",
            Self::Undetermined { .. } => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WellPosedness {
    /// Unique minimizer; `analytic` when established by strict convexity
    /// rather than by restarts.
    WellPosed { analytic: bool },
    Overdetermined { residual: f64 },
    Undetermined { witnesses: Vec<InformationState> },
}

/// Solves the inference problem.
pub fn update(problem: &InferenceProblem) -> Result<InferenceOutcome> {
    problem.validate()?;
    let ctx = Context::new(problem);
    if problem.constraints.point_sets().next().is_some() {
        return Ok(ctx.enumerate_points());
    }
    if let InformationModel::ExponentialFamily(fam) = &problem.model {
        return ctx.solve_family(fam, None);
    }
    ctx.solve_general(None)
}

/// Maximum-entropy update: `min KL(φ ‖ ω)` subject to `Σᵢ fⱼᵢ φᵢ = cⱼ` and,
/// optionally, normalization.
pub fn maxent_linear(
    omega: &InformationState,
    moments: &[(Vec<f64>, f64)],
    include_normalization: bool,
) -> Result<InferenceOutcome> {
    let mut f = ConstraintFunctional::new(moments.iter().map(|(f, c)| ConstraintTerm::moment(f.clone(), *c)).collect());
    if include_normalization {
        f.push(ConstraintTerm::Normalization);
    }
    update(&InferenceProblem::new(omega.clone(), DivergenceSpec::KlExtended, f).with_slot(Slot::First))
}

/// Maximum-likelihood natural parameters: the moment-matching solution
/// `E_θ̂[f] = mean_counts[f]`.
pub fn mle(family: &ExpFamily, counts: &[f64]) -> Result<Vec<f64>> {
    if counts.len() != family.n_atoms() {
        return Err(Error::AlgebraMismatch);
    }
    if counts.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
        return Err(Error::Domain("counts must be nonnegative".into()));
    }
    if !(counts.iter().sum::<f64>() > 0.0) {
        return Err(Error::Domain("counts must have a positive total".into()));
    }
    let means = family.statistic_means(counts);
    let moments: Vec<(Vec<f64>, f64)> = family.suffstats().iter().cloned().zip(means).collect();
    let base = InformationState::new(family.algebra().clone(), family.base().to_vec())?;
    match maxent_linear(&base, &moments, true)? {
        InferenceOutcome::Solved(s) => Ok(s.duals[..family.dim()].to_vec()),
        other => Err(Error::Internal(format!("moment matching returned {}", other.status()))),
    }
}

/// Posterior over `Θ` after observing `b`, computed as the entropic update
/// `min KL(q ‖ p)` subject to normalization and support on the row of `b`.
pub fn bayes_update(joint: &JointTable, b: &str) -> Result<InferenceOutcome> {
    let f = bayes_constraints(joint, b)?;
    let problem = InferenceProblem::new(joint.joint().clone(), DivergenceSpec::KlExtended, f).with_slot(Slot::First);
    match update(&problem)? {
        InferenceOutcome::Solved(mut s) => {
            let row = joint.row_of(s.state.weights(), b)?;
            s.state = InformationState::new(joint.thetas().clone(), row)?;
            Ok(InferenceOutcome::Solved(s))
        }
        other => Ok(other),
    }
}

/// Classical conditioning `p · χ_a / p(a)`.
pub fn bayes_rule_direct(p: &InformationState, event: &AlgebraElement) -> Result<InferenceOutcome> {
    let mass = p.evaluate(event)?;
    if !(mass > 0.0) {
        return Ok(InferenceOutcome::Overdetermined { residual: 1.0 });
    }
    let w: Vec<f64> = p.weights().iter().enumerate().map(|(i, x)| if event.contains(i) { x / mass } else { 0.0 }).collect();
    let objective = DivergenceSpec::KlExtended.eval(&w, p.weights())?;
    Ok(InferenceOutcome::Solved(Solution {
        state: InformationState::new(p.algebra().clone(), w)?,
        duals: Vec::new(),
        objective,
        kkt_residual: None,
        parameters: None,
        iterations: 0,
    }))
}

/// [`bayes_rule_direct`] on the row of `b`, reported over `Θ`.
pub fn bayes_posterior_direct(joint: &JointTable, b: &str) -> Result<InferenceOutcome> {
    match bayes_rule_direct(joint.joint(), &joint.row_event(b)?)? {
        InferenceOutcome::Solved(mut s) => {
            let row = joint.row_of(s.state.weights(), b)?;
            s.state = InformationState::new(joint.thetas().clone(), row)?;
            Ok(InferenceOutcome::Solved(s))
        }
        other => Ok(other),
    }
}

/// Existence and uniqueness diagnostics.
pub fn diagnose_wellposedness(problem: &InferenceProblem) -> Result<WellPosedness> {
    problem.validate()?;
    let ctx = Context::new(problem);
    if problem.constraints.point_sets().next().is_some() {
        return Ok(match ctx.enumerate_points() {
            InferenceOutcome::Solved(_) => WellPosedness::WellPosed { analytic: false },
            InferenceOutcome::Overdetermined { residual } => WellPosedness::Overdetermined { residual },
            InferenceOutcome::Undetermined { witnesses } => WellPosedness::Undetermined { witnesses },
        });
    }
    let residual = ctx.feasibility_residual();
    if residual > FEASIBILITY_TOL {
        return Ok(WellPosedness::Overdetermined { residual });
    }
    let convex_model = matches!(problem.model, InformationModel::Cone | InformationModel::Simplex);
    if convex_model && ctx.strictly_convex() {
        return Ok(WellPosedness::WellPosed { analytic: true });
    }
    if !convex_model {
        warn!("model is not convex in the weights; uniqueness is checked by restarts only");
    }
    let mut found: Vec<Solution> = Vec::new();
    let mut first_err = None;
    for i in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(problem.options.seed.wrapping_add(i as u64));
        let run = match &problem.model {
            InformationModel::ExponentialFamily(fam) => {
                let theta: Vec<f64> = fam
                    .domain()
                    .iter()
                    .map(|&(lo, hi)| rng.gen_range(-3.0..3.0f64).clamp(lo, hi))
                    .collect();
                ctx.solve_family(fam, Some(theta))
            }
            _ => {
                let mass = ctx.center_mass();
                let start: Vec<f64> = (0..ctx.n).map(|_| rng.gen_range(0.05..1.0) * mass).collect();
                ctx.solve_general(Some(start))
            }
        };
        match run {
            Ok(InferenceOutcome::Solved(s)) => found.push(s),
            Ok(_) => {}
            Err(e) => {
                debug!("restart {i} failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    if found.is_empty() {
        return Err(first_err.unwrap_or_else(|| Error::Internal("no restart produced a solution".into())));
    }
    let witnesses = tied_witnesses(found.iter().map(|s| (s.state.clone(), s.objective)).collect());
    if witnesses.len() >= 2 {
        Ok(WellPosedness::Undetermined { witnesses })
    } else {
        Ok(WellPosedness::WellPosed { analytic: false })
    }
}

/// Distinct states whose objective ties with the minimum, sorted.
fn tied_witnesses(candidates: Vec<(InformationState, f64)>) -> Vec<InformationState> {
    let best = candidates.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    let mut reps: Vec<InformationState> = Vec::new();
    for (s, v) in candidates {
        if (v - best).abs() <= TIE_TOL && !reps.iter().any(|r| r.sup_distance(&s) <= WITNESS_SEPARATION) {
            reps.push(s);
        }
    }
    reps.sort_by(|a, b| {
        a.weights().iter().zip(b.weights()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    reps
}

struct Context<'a> {
    problem: &'a InferenceProblem,
    n: usize,
    d: DivergenceSpec,
    slot: Slot,
    /// Initial states with their weights.
    components: Vec<(Vec<f64>, f64)>,
}

/// Hard constraints restricted to the atoms left free by support terms.
struct Reduced {
    mask: Vec<bool>,
    free: Vec<usize>,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Reduced {
    fn restrict(&self, v: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| v[i]).collect()
    }

    fn restricted_rows(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| self.restrict(r)).collect()
    }

    fn embed(&self, v: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&i, &x) in self.free.iter().zip(v) {
            out[i] = x;
        }
        out
    }

    /// Affine rows plus `xᵢ = 0` for every masked atom.
    fn rows_with_mask(&self, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rows = self.rows.clone();
        let mut targets = self.targets.clone();
        for (i, _) in self.mask.iter().enumerate().filter(|(_, m)| !**m) {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            rows.push(e);
            targets.push(0.0);
        }
        (rows, targets)
    }
}

enum Prepared {
    Ready(Reduced),
    Infeasible(f64),
}

impl<'a> Context<'a> {
    fn new(problem: &'a InferenceProblem) -> Self {
        let components = problem
            .weighting
            .components(&problem.initial)
            .into_iter()
            .map(|(s, w)| (s.weights().to_vec(), w))
            .collect();
        Self {
            problem,
            n: problem.initial.len(),
            d: problem.divergence,
            slot: problem.options.slot,
            components,
        }
    }

    fn total_weight(&self) -> f64 {
        self.components.iter().map(|(_, w)| w).sum()
    }

    fn center_mass(&self) -> f64 {
        let w = self.total_weight();
        let m = self.components.iter().map(|(c, wk)| wk * c.iter().sum::<f64>()).sum::<f64>() / w;
        if m > 0.0 {
            m / self.n as f64
        } else {
            1.0 / self.n as f64
        }
    }

    /// `Σₖ wₖ D(ωₖ, φ)` (second slot) or `Σₖ wₖ D(φ, ωₖ)` (first slot).
    fn deviation(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (c, w) in &self.components {
            let v = match self.slot {
                Slot::Second => self.d.eval(c, x),
                Slot::First => self.d.eval(x, c),
            };
            match v {
                Ok(v) => total += w * v,
                Err(_) => return f64::INFINITY,
            }
        }
        total
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.deviation(x) + self.problem.constraints.soft_value(x)
    }

    /// Gradient of the smooth objective on the coordinates `idx` (other
    /// entries are zero).
    fn gradient_on(&self, x: &[f64], idx: &[usize]) -> Option<Vec<f64>> {
        let xr: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
        let mut g = vec![0.0; self.n];
        for (c, w) in &self.components {
            let cr: Vec<f64> = idx.iter().map(|&i| c[i]).collect();
            let gr = match self.slot {
                Slot::Second => self.d.gradient_raw(Slot::Second, &cr, &xr),
                Slot::First => self.d.gradient_raw(Slot::First, &xr, &cr),
            }
            .ok()?;
            for (&i, v) in idx.iter().zip(gr) {
                g[i] += w * v;
            }
        }
        for t in self.problem.constraints.terms() {
            if let ConstraintTerm::Soft { term, weight } = t {
                let sg = soft_gradient(term, *weight, x);
                for &i in idx {
                    g[i] += sg[i];
                }
            }
        }
        Some(g)
    }

    fn prepare(&self) -> Prepared {
        let f = &self.problem.constraints;
        let mut mask = f.allowed_mask(self.n);
        if self.d.requires_support_containment() {
            match self.slot {
                Slot::First => {
                    for (c, _) in &self.components {
                        for (m, &ci) in mask.iter_mut().zip(c) {
                            *m &= ci > 0.0;
                        }
                    }
                }
                Slot::Second => {
                    let lost = self
                        .components
                        .iter()
                        .map(|(c, _)| c.iter().zip(&mask).filter(|(_, m)| !**m).map(|(x, _)| *x).sum::<f64>())
                        .fold(0.0, f64::max);
                    if lost > 0.0 {
                        return Prepared::Infeasible(lost);
                    }
                }
            }
        }
        let (mut rows, mut targets) = f.affine_rows(self.n);
        if matches!(self.problem.model, InformationModel::Simplex) && !f.has_normalization() {
            rows.push(vec![1.0; self.n]);
            targets.push(1.0);
        }
        let free = (0..self.n).filter(|&i| mask[i]).collect();
        Prepared::Ready(Reduced { mask, free, rows, targets })
    }

    fn convex_sets(&self) -> Vec<&'a ConvexSet> {
        self.problem.constraints.convex_sets().collect()
    }

    fn feasibility_on(&self, red: &Reduced) -> (Vec<f64>, f64) {
        let convex = self.convex_sets();
        if convex.is_empty() {
            let (x, r) = feasibility::feasibility(&red.restricted_rows(), &red.targets, &[], true, red.free.len());
            (red.embed(&x, self.n), r)
        } else {
            let (rows, targets) = red.rows_with_mask(self.n);
            feasibility::feasibility(&rows, &targets, &convex, true, self.n)
        }
    }

    fn feasibility_residual(&self) -> f64 {
        if let InformationModel::ExponentialFamily(_) = self.problem.model {
            return 0.0;
        }
        match self.prepare() {
            Prepared::Infeasible(r) => r,
            Prepared::Ready(red) => self.feasibility_on(&red).1,
        }
    }

    fn strictly_convex(&self) -> bool {
        if self.problem.constraints.terms().iter().any(|t| matches!(t, ConstraintTerm::Soft { term, .. } if matches!(**term, ConstraintTerm::Points(_)))) {
            return false;
        }
        if self.d.is_symmetric() || self.slot == Slot::First {
            return true;
        }
        let Prepared::Ready(red) = self.prepare() else { return true };
        red.free.iter().all(|&i| self.components.iter().any(|(c, _)| c[i] > 0.0))
    }

    /// Single center `c` and total weight `W` with
    /// `Σₖ wₖ D(ωₖ, ·) = W·D(c, ·) + const` (or the first-slot analogue).
    fn center(&self, free: &[usize]) -> Option<(Vec<f64>, f64)> {
        let gen = self.d.bregman_generator()?;
        let w = self.total_weight();
        let c = free
            .iter()
            .map(|&i| match self.slot {
                Slot::Second => self.components.iter().map(|(c, wk)| wk * c[i]).sum::<f64>() / w,
                Slot::First => {
                    let m = self.components.iter().map(|(c, wk)| wk * gen.d1(c[i])).sum::<f64>() / w;
                    gen.d1_inverse(m)
                }
            })
            .collect();
        Some((c, w))
    }

    fn solve_general(&self, start: Option<Vec<f64>>) -> Result<InferenceOutcome> {
        let red = match self.prepare() {
            Prepared::Infeasible(r) => return Ok(InferenceOutcome::Overdetermined { residual: r }),
            Prepared::Ready(red) => red,
        };
        let (feasible_point, residual) = self.feasibility_on(&red);
        if residual > FEASIBILITY_TOL {
            return Ok(InferenceOutcome::Overdetermined { residual });
        }
        if red.free.is_empty() {
            return self.finish(&red, vec![0.0; self.n], Vec::new(), 0);
        }
        let f = &self.problem.constraints;
        let convex = self.convex_sets();
        let opts = &self.problem.options;
        let center = self.center(&red.free);
        if start.is_none() && !f.has_soft() && convex.is_empty() && self.d.is_kl() {
            let (c, w) = center.clone().expect("KL is a Bregman deviation");
            let rows = red.restricted_rows();
            let positive = c.iter().all(|&v| v > 0.0);
            if self.slot == Slot::First || positive {
                let sol = match self.slot {
                    Slot::First => dual::kl_first_slot(&c, &rows, &red.targets, opts.tol, opts.max_iter),
                    Slot::Second => dual::kl_second_slot(&c, &rows, &red.targets, opts.tol, opts.max_iter),
                };
                let ratios: Vec<f64> = sol.phi.iter().zip(&c).map(|(p, ci)| p / ci).collect();
                let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = ratios.iter().cloned().fold(0.0, f64::max);
                let tilt = if hi > 0.0 { lo / hi } else { 0.0 };
                if tilt < BOUNDARY_RATIO {
                    return Err(Error::NoConvergence {
                        iterations: sol.iterations,
                        residual: sol.residual,
                        boundary: Some(tilt),
                    });
                }
                if !sol.converged {
                    return Err(Error::NoConvergence { iterations: sol.iterations, residual: sol.residual, boundary: None });
                }
                let sign = if self.slot == Slot::First { w } else { -w };
                let duals = sol.lambda.iter().map(|l| sign * l).collect();
                return self.finish(&red, red.embed(&sol.phi, self.n), duals, sol.iterations);
            }
        }
        if start.is_none() && !f.has_soft() && self.d.bregman_generator() == Some(Generator::SquaredNorm) {
            let (c, w) = center.expect("Bregman deviation");
            let (rows, targets) = red.rows_with_mask(self.n);
            let hyper: Vec<(Vec<f64>, f64)> = rows.into_iter().zip(targets).collect();
            let full_center = red.embed(&c, self.n);
            let sweeps = opts.max_iter * FALLBACK_ITER_FACTOR;
            let r = projection::cyclic_bregman(Generator::SquaredNorm, &full_center, &hyper, &convex, opts.tol, sweeps)?;
            if !r.converged {
                return Err(Error::NoConvergence {
                    iterations: r.sweeps,
                    residual: f.hard_violation(&r.x),
                    boundary: None,
                });
            }
            let duals = r.multipliers[..red.rows.len()].iter().map(|m| w * m).collect();
            return self.finish(&red, r.x, duals, r.sweeps);
        }
        self.solve_fallback(&red, feasible_point, start)
    }

    fn solve_fallback(&self, red: &Reduced, feasible: Vec<f64>, start: Option<Vec<f64>>) -> Result<InferenceOutcome> {
        let opts = &self.problem.options;
        let convex = self.convex_sets();
        debug!("projected-gradient fallback for {:?}", self.d);
        let (rows, targets) = red.rows_with_mask(self.n);
        let affine = feasibility::affine_projector(&rows, &targets, self.n)
            .map(|p| Box::new(p) as Box<dyn Fn(&[f64]) -> Vec<f64>>);
        let scale = self.center_mass().max(1e-300);
        let floor = if self.d.is_symmetric() { 0.0 } else { 1e-12 * scale };
        let lower: Vec<f64> = red.mask.iter().map(|&m| if m { floor } else { f64::NEG_INFINITY }).collect();
        let projector = descent::FeasibleProjector::new(affine, Some(lower), convex);
        let x0 = start.unwrap_or_else(|| {
            let mut guess = vec![0.0; self.n];
            if let Some((c, _)) = self.center(&red.free) {
                for (&i, v) in red.free.iter().zip(c) {
                    guess[i] = v;
                }
            } else {
                for (c, w) in &self.components {
                    for &i in &red.free {
                        guess[i] += w * c[i] / self.total_weight();
                    }
                }
            }
            guess.iter().zip(&feasible).map(|(a, b)| 0.5 * (a + b)).collect()
        });
        let rep = descent::projected_gradient(
            &x0,
            &projector,
            opts.tol.max(1e-12) * scale.max(1.0),
            opts.max_iter * FALLBACK_ITER_FACTOR,
            |x| self.objective(x),
            |x| self.gradient_on(x, &red.free),
        );
        if !rep.converged {
            if rep.stationarity <= FALLBACK_ACCEPT * scale.max(1.0) {
                warn!("projected gradient stalled at stationarity {:e}", rep.stationarity);
            } else {
                return Err(Error::NoConvergence {
                    iterations: rep.iterations,
                    residual: rep.stationarity,
                    boundary: None,
                });
            }
        }
        let x = rep.x;
        let duals = self.least_squares_duals(red, &x).unwrap_or_default();
        self.finish(red, x, duals, rep.iterations)
    }

    fn active_threshold(&self) -> f64 {
        1e-10 * self.center_mass().max(1e-300)
    }

    /// Multipliers fitting `∇ objective = Aᵀλ` on the inactive free atoms.
    fn least_squares_duals(&self, red: &Reduced, x: &[f64]) -> Option<Vec<f64>> {
        let g = self.gradient_on(x, &red.free)?;
        let thr = self.active_threshold();
        let inactive: Vec<usize> = red.free.iter().copied().filter(|&i| x[i] > thr).collect();
        let k = red.rows.len();
        if k == 0 {
            return Some(Vec::new());
        }
        if inactive.is_empty() {
            return Some(vec![0.0; k]);
        }
        let a = DMatrix::from_fn(inactive.len(), k, |r, j| red.rows[j][inactive[r]]);
        let b = DVector::from_iterator(inactive.len(), inactive.iter().map(|&i| g[i]));
        let lam = a.svd(true, true).solve(&b, 1e-12).ok()?;
        Some(lam.iter().copied().collect())
    }

    fn kkt_residual(&self, red: &Reduced, x: &[f64]) -> Option<f64> {
        if !self.convex_sets().is_empty() {
            return None;
        }
        let g = self.gradient_on(x, &red.free)?;
        let thr = self.active_threshold();
        let lam = self.least_squares_duals(red, x)?;
        let mut r = feasibility::affine_violation(&red.rows, &red.targets, x);
        for &i in &red.free {
            let s = g[i] - red.rows.iter().zip(&lam).map(|(row, l)| row[i] * l).sum::<f64>();
            if x[i] > thr {
                r = r.max(s.abs());
            } else {
                r = r.max(-s);
            }
        }
        Some(r)
    }

    fn finish(&self, red: &Reduced, x: Vec<f64>, duals: Vec<f64>, iterations: usize) -> Result<InferenceOutcome> {
        let x: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
        let violation = self.problem.constraints.hard_violation(&x).max(feasibility::affine_violation(
            &red.rows,
            &red.targets,
            &x,
        ));
        let scale = red.targets.iter().fold(1.0f64, |m, t| m.max(t.abs()));
        if violation > FEASIBILITY_TOL * scale {
            return Err(Error::NoConvergence { iterations, residual: violation, boundary: None });
        }
        let kkt = self.kkt_residual(red, &x);
        let state = InformationState::new(self.problem.initial.algebra().clone(), x)?;
        if !self.problem.model.contains(&state, FEASIBILITY_TOL) {
            return Err(Error::Internal("solution left the model".into()));
        }
        let objective = self.objective(state.weights());
        Ok(InferenceOutcome::Solved(Solution { state, duals, objective, kkt_residual: kkt, parameters: None, iterations }))
    }

    fn enumerate_points(&self) -> InferenceOutcome {
        let f = &self.problem.constraints;
        let mut best_violation = f64::INFINITY;
        let mut candidates = Vec::new();
        for p in f.point_sets().flatten() {
            let v = f.hard_violation(p);
            let neg = p.iter().fold(0.0, |m: f64, &x| m.max(-x));
            best_violation = best_violation.min(v.max(neg));
            if v > FEASIBILITY_TOL || neg > 0.0 {
                continue;
            }
            let Ok(state) = InformationState::new(self.problem.initial.algebra().clone(), p.clone()) else { continue };
            if !self.problem.model.contains(&state, FEASIBILITY_TOL) {
                continue;
            }
            let obj = self.objective(p);
            if obj.is_finite() {
                candidates.push((state, obj));
            }
        }
        if candidates.is_empty() {
            return InferenceOutcome::Overdetermined { residual: best_violation };
        }
        let mut witnesses = tied_witnesses(candidates.clone());
        if witnesses.len() >= 2 {
            return InferenceOutcome::Undetermined { witnesses };
        }
        let state = witnesses.remove(0);
        let objective = self.objective(state.weights());
        InferenceOutcome::Solved(Solution { state, duals: Vec::new(), objective, kkt_residual: None, parameters: None, iterations: candidates.len() })
    }

    fn solve_family(&self, fam: &ExpFamily, start: Option<Vec<f64>>) -> Result<InferenceOutcome> {
        if let Some(t) = self.problem.constraints.hard_terms().find(|t| !matches!(t, ConstraintTerm::Normalization)) {
            return Err(Error::Unsupported(format!("hard constraint {t:?} within an exponential-family model")));
        }
        warn!("exponential-family model is not convex in the weights; uniqueness is not certified");
        let opts = &self.problem.options;
        let theta0 = start.unwrap_or_else(|| fam.domain().iter().map(|&(lo, hi)| 0.0f64.clamp(lo, hi)).collect());
        let all: Vec<usize> = (0..self.n).collect();
        let rep = family::minimize_in_family(fam, theta0, opts.tol, opts.max_iter, |p| self.objective(p), |p| {
            self.gradient_on(p, &all)
        })
        .ok_or_else(|| Error::Domain("objective undefined at the initial parameters".into()))?;
        if !rep.converged {
            return Err(Error::NoConvergence { iterations: rep.iterations, residual: rep.grad_norm, boundary: None });
        }
        let state = fam.param_to_state(&rep.x)?;
        let objective = self.objective(state.weights());
        Ok(InferenceOutcome::Solved(Solution {
            state,
            duals: Vec::new(),
            objective,
            kkt_residual: Some(rep.grad_norm),
            parameters: Some(rep.x),
            iterations: rep.iterations,
        }))
    }
}

/// Gradient of `weight · violation(term)²`.
fn soft_gradient(term: &ConstraintTerm, weight: f64, q: &[f64]) -> Vec<f64> {
    let n = q.len();
    match term {
        ConstraintTerm::Moment { f, c } => {
            let r: f64 = f.iter().zip(q).map(|(a, b)| a * b).sum::<f64>() - c;
            f.iter().map(|fi| 2.0 * weight * r * fi).collect()
        }
        ConstraintTerm::Normalization => {
            let r = q.iter().sum::<f64>() - 1.0;
            vec![2.0 * weight * r; n]
        }
        ConstraintTerm::Support(a) => {
            let v = term.violation(q);
            (0..n).map(|i| if a.contains(i) { 0.0 } else { 2.0 * weight * v * q[i].signum() }).collect()
        }
        ConstraintTerm::Convex(s) => {
            let p = s.project(q);
            q.iter().zip(p).map(|(x, y)| 2.0 * weight * (x - y)).collect()
        }
        ConstraintTerm::Points(ps) => {
            let nearest = ps.iter().min_by(|a, b| sup_l2(a, q).total_cmp(&sup_l2(b, q)));
            match nearest {
                Some(p) => q.iter().zip(p).map(|(x, y)| 2.0 * weight * (x - y)).collect(),
                None => vec![0.0; n],
            }
        }
        ConstraintTerm::Soft { .. } => vec![0.0; n],
    }
}

fn sup_l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

#[cfg(test)]
mod tests;
