//! Linear solves, Newton iteration and sequential load stepping.

use std::collections::BTreeMap;
use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    apply_dirichlet, assemble, assemble_loads, dirichlet_values, BodyForce, DirichletCondition, Discretization, FieldStates,
    SparseMatrix, SystemParams, Traction,
};
use crate::error::{Error, Result};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `A x = b` by sparse LU with one refinement sweep and checks
/// `‖Ax − b‖ ≤ 1e-10 ‖b‖`.
pub fn solve_linear(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    if b.len() != n {
        return Err(Error::LinearSolve(format!("right-hand side has {} entries for {n} unknowns", b.len())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve("non-finite right-hand side".into()));
    }
    let trips: Vec<Triplet<usize, usize, f64>> =
        a.triplets().into_iter().map(|(row, col, val)| Triplet { row, col, val }).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
        .map_err(|e| Error::LinearSolve(format!("matrix construction failed: {e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| {
        Error::LinearSolve(format!(
            "factorization failed ({e:?}); the system is singular, check for missing boundary conditions or an unstabilized small cut"
        ))
    })?;
    let solve = |rhs: &[f64]| {
        let mut x = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        lu.solve_in_place(x.as_mut());
        (0..n).map(|i| x[(i, 0)]).collect::<Vec<f64>>()
    };
    let mut x = solve(b);
    let residual = |x: &[f64]| -> Vec<f64> { a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect() };
    let r = residual(&x);
    let dx = solve(&r);
    for (xi, d) in x.iter_mut().zip(&dx) {
        *xi += d;
    }
    let rn = norm(&residual(&x));
    let bn = norm(b);
    if !rn.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve(
            "solution is not finite; the system is singular, check for missing boundary conditions or an unstabilized small cut"
                .into(),
        ));
    }
    if rn > 1e-10 * bn {
        return Err(Error::LinearSolve(format!(
            "residual {rn:.3e} exceeds 1e-10 of the right-hand side norm {bn:.3e}; the system is nearly singular"
        )));
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-12, max_iters: 25 }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidInput(format!("invalid Newton settings {self:?}")));
        }
        Ok(())
    }
}

/// Converged state of one Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonOutcome<S> {
    pub u: Vec<f64>,
    pub states: S,
    /// Number of linear solves performed.
    pub iterations: usize,
    /// Free residual norm before each solve and at convergence.
    pub history: Vec<f64>,
    /// `F_int − F_ext` at the converged displacement, all unknowns.
    pub residual: Vec<f64>,
}

impl<S> NewtonOutcome<S> {
    /// Reaction forces at the constrained unknowns.
    pub fn reactions<'a>(&'a self, fixed: &'a BTreeMap<usize, f64>) -> impl Iterator<Item = (usize, f64)> + 'a {
        fixed.keys().map(|&d| (d, self.residual[d]))
    }
}

/// Full Newton iteration on `F_int(u) = F_ext` with the constrained values
/// imposed on the initial guess. `assemble` returns the tangent, the
/// internal force and the trial internal variables at `u`.
pub fn newton_solve<S, F>(
    mut assemble: F,
    external: &[f64],
    fixed: &BTreeMap<usize, f64>,
    mut u: Vec<f64>,
    config: &NewtonConfig,
) -> Result<NewtonOutcome<S>>
where
    F: FnMut(&[f64]) -> Result<(SparseMatrix, Vec<f64>, S)>,
{
    config.validate()?;
    if u.len() != external.len() {
        return Err(Error::InvalidInput(format!("initial guess has {} entries for {} unknowns", u.len(), external.len())));
    }
    for (&d, &g) in fixed {
        u[d] = g;
    }
    let zero_fixed: BTreeMap<usize, f64> = fixed.keys().map(|&d| (d, 0.0)).collect();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut r0 = None;
    loop {
        let (k, internal, states) = assemble(&u)?;
        let residual: Vec<f64> = internal.iter().zip(external).map(|(a, b)| a - b).collect();
        let free: Vec<f64> = residual.iter().enumerate().map(|(i, &r)| if fixed.contains_key(&i) { 0.0 } else { r }).collect();
        let rn = norm(&free);
        if !rn.is_finite() {
            return Err(Error::NewtonDiverged { iterations, history });
        }
        history.push(rn);
        let r0 = *r0.get_or_insert(rn);
        log::debug!("newton iteration {iterations}: residual {rn:.6e}");
        if rn <= config.abs_tol.max(config.rel_tol * r0) {
            return Ok(NewtonOutcome { u, states, iterations, history, residual });
        }
        if iterations >= config.max_iters {
            return Err(Error::NewtonDiverged { iterations, history });
        }
        let rhs: Vec<f64> = free.iter().map(|r| -r).collect();
        let (kc, bc) = apply_dirichlet(&k, &rhs, &zero_fixed)?;
        let du = solve_linear(&kc, &bc)?;
        for (ui, d) in u.iter_mut().zip(&du) {
            *ui += d;
        }
        iterations += 1;
    }
}

/// Boundary and volume data of a quasi-static problem at full load.
#[derive(Debug, Clone, Default)]
pub struct Loading {
    pub dirichlet: Vec<DirichletCondition>,
    pub tractions: Vec<Traction>,
    pub body: BodyForce,
}

/// One Newton solve at load `factor` from the committed `states`, starting
/// from `guess` (zero when `None`).
pub fn solve_static(
    disc: &Discretization,
    params: &SystemParams,
    loading: &Loading,
    factor: f64,
    states: &FieldStates,
    guess: Option<Vec<f64>>,
    config: &NewtonConfig,
) -> Result<(NewtonOutcome<FieldStates>, BTreeMap<usize, f64>)> {
    params.validate()?;
    let fixed = dirichlet_values(disc, &loading.dirichlet, factor)?;
    let external = assemble_loads(disc, &loading.tractions, &loading.body, factor)?;
    let u0 = guess.unwrap_or_else(|| vec![0.0; disc.dofs.len()]);
    let out = newton_solve(
        |u| {
            let a = assemble(disc, params, u, states)?;
            Ok((a.matrix, a.internal, a.states))
        },
        &external,
        &fixed,
        u0,
        config,
    )?;
    Ok((out, fixed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadStep {
    /// One-based step number.
    pub index: usize,
    /// Fraction of the final load applied at this step.
    pub factor: f64,
    /// Name of the zoom region active from this step on, if it changes.
    pub zoom: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSchedule {
    pub steps: Vec<LoadStep>,
    /// Pseudo-time increment; plays no role in rate-independent plasticity.
    pub dt: f64,
}

impl LoadSchedule {
    /// `n` equal increments up to the full load.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("a load schedule needs at least one step".into()));
        }
        let steps = (1..=n).map(|k| LoadStep { index: k, factor: k as f64 / n as f64, zoom: None }).collect();
        Ok(Self { steps, dt: 1.0 / n as f64 })
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::InvalidInput("a load schedule needs at least one step".into()));
        }
        if let Some(s) = self.steps.iter().find(|s| !s.factor.is_finite()) {
            return Err(Error::InvalidInput(format!("load factor of step {} is not finite", s.index)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub factor: f64,
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub dofs: usize,
    pub wall_time: f64,
    pub converged: bool,
}

/// A path-dependent problem solved step by step.
pub trait StepProblem {
    type State;

    /// Called before each step; may rebuild the discretization.
    fn prepare_step(&mut self, step: &LoadStep) -> Result<()>;
    fn dof_count(&self) -> usize;
    fn initial_guess(&self) -> Vec<f64>;
    fn constraints(&self, step: &LoadStep) -> Result<BTreeMap<usize, f64>>;
    fn external_force(&self, step: &LoadStep) -> Result<Vec<f64>>;
    fn assemble(&self, u: &[f64]) -> Result<(SparseMatrix, Vec<f64>, Self::State)>;
    /// Stores a converged step; internal variables become history here.
    fn commit(
        &mut self,
        step: &LoadStep,
        outcome: NewtonOutcome<Self::State>,
        fixed: &BTreeMap<usize, f64>,
        report: &StepReport,
    ) -> Result<()>;
}

/// Runs the schedule in order, committing each converged step.
pub fn run_load_steps<P: StepProblem>(
    problem: &mut P,
    schedule: &LoadSchedule,
    config: &NewtonConfig,
) -> Result<Vec<StepReport>> {
    schedule.validate()?;
    let mut reports = Vec::with_capacity(schedule.steps.len());
    for step in &schedule.steps {
        let wrap = |e: Error| Error::Step { step: step.index, source: Box::new(e) };
        let started = Instant::now();
        problem.prepare_step(step).map_err(wrap)?;
        let fixed = problem.constraints(step).map_err(wrap)?;
        let external = problem.external_force(step).map_err(wrap)?;
        let guess = problem.initial_guess();
        let outcome = newton_solve(|u| problem.assemble(u), &external, &fixed, guess, config).map_err(wrap)?;
        let report = StepReport {
            step: step.index,
            factor: step.factor,
            iterations: outcome.iterations,
            initial_residual: outcome.history[0],
            final_residual: *outcome.history.last().unwrap(),
            dofs: problem.dof_count(),
            wall_time: started.elapsed().as_secs_f64(),
            converged: true,
        };
        log::info!(
            "step {} (load factor {:.4}): {} iterations, residual {:.3e}, {} unknowns",
            report.step,
            report.factor,
            report.iterations,
            report.final_residual,
            report.dofs
        );
        problem.commit(step, outcome, &fixed, &report).map_err(wrap)?;
        reports.push(report);
    }
    Ok(reports)
}
