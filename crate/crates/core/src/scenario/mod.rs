//! Scenario files, the step-by-step driver with zoom relocation, error
//! norms and result files.

mod config;
mod fields;
mod output;
mod porosity;

pub use config::{
    parse_config, serialize_config, BoundaryConfig, Component, CouplingConfig, DirichletSpec, LoadingConfig, MaterialBlock,
    MaterialsConfig, OutputConfig, ScenarioConfig, TractionSpec, ZoomStage,
};
pub use fields::{
    analytic_errors, energy_error_norm, energy_norm, interface_jump, quadrature_stresses, transfer_displacement, transfer_states,
    ErrorNorm, Probe,
};
pub use output::{dump_geometry, field_vtk, interfaces_vtk, mesh_vtk, summary_csv, write_atomic, CSV_HEADER};
pub use porosity::phase_fraction;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;

use crate::assembly::{assemble, assemble_loads, dirichlet_values, Discretization, FieldStates, SparseMatrix, SystemParams};
use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::mesh::TriMesh;
use crate::solver::{run_load_steps, LoadSchedule, LoadStep, Loading, NewtonOutcome, StepProblem, StepReport};

/// Per-step results written to the summary file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub factor: f64,
    pub zoom: Option<String>,
    pub relocated: bool,
    pub dofs: usize,
    pub iterations: usize,
    pub residual: f64,
    /// Sum of reaction forces at the constrained unknowns.
    pub reaction: [f64; 2],
    /// Resultant of the applied tractions and body forces.
    pub applied: [f64; 2],
    /// Sum of the accumulated plastic strain over all quadrature points.
    pub sum_p: f64,
    pub max_sigma_yy: f64,
    pub energy_error: Option<f64>,
}

impl StepRecord {
    /// `|R + F| / max(|F|, |R|)`; zero when nothing is loaded.
    pub fn balance_error(&self) -> f64 {
        let s = [self.reaction[0] + self.applied[0], self.reaction[1] + self.applied[1]];
        let scale = self.applied[0].hypot(self.applied[1]).max(self.reaction[0].hypot(self.reaction[1]));
        if scale == 0.0 {
            0.0
        } else {
            s[0].hypot(s[1]) / scale
        }
    }
}

/// Converged fields of one step of a reference run.
pub type ReferenceStep = (Arc<Discretization>, Vec<f64>);

/// Scenario driven through its load schedule. Implements [`StepProblem`].
pub struct Simulation {
    pub config: ScenarioConfig,
    pub params: SystemParams,
    pub loading: Loading,
    pub schedule: LoadSchedule,
    coarse: TriMesh,
    phi1: LevelSet,
    pub disc: Arc<Discretization>,
    pub zoom: Option<String>,
    pub u: Vec<f64>,
    pub states: FieldStates,
    guess: Vec<f64>,
    /// Discretization and displacement just before the latest relocation.
    pub before_relocation: Option<ReferenceStep>,
    relocated: bool,
    pub records: Vec<StepRecord>,
    /// Converged fields per step, kept when `keep_history` is set.
    pub history: Vec<ReferenceStep>,
    pub keep_history: bool,
    pub reference: Option<Vec<ReferenceStep>>,
    pub vtk_dir: Option<PathBuf>,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let params = config.system_params()?;
        let schedule = config.schedule()?;
        let coarse = config.coarse_mesh()?;
        let phi1 = config.phi1();
        let (stage, phi2) = config.zoom_at(1);
        let disc = Discretization::on_mesh(coarse.clone(), &config.mesh, &phi1, &phi2, config.void_mode)?;
        let n = disc.dofs.len();
        let states = disc.initial_states();
        Ok(Self {
            loading: config.loading_data(),
            zoom: stage.map(|s| s.name.clone()),
            config,
            params,
            schedule,
            coarse,
            phi1,
            disc: Arc::new(disc),
            u: vec![0.0; n],
            states,
            guess: vec![0.0; n],
            before_relocation: None,
            relocated: false,
            records: Vec::new(),
            history: Vec::new(),
            keep_history: false,
            reference: None,
            vtk_dir: None,
        })
    }

    /// Replaces the zoom, carrying internal variables and displacement over.
    pub fn relocate_zoom(&mut self, phi2: &LevelSet) -> Result<()> {
        let new = Discretization::on_mesh(self.coarse.clone(), &self.config.mesh, &self.phi1, phi2, self.config.void_mode)?;
        if new.decomp.micro_coarse.is_empty() {
            return Err(Error::InvalidInput("the new zoom does not intersect the domain".into()));
        }
        self.states = transfer_states(&self.disc, &self.states, &new);
        self.guess = transfer_displacement(&self.disc, &self.u, &new);
        let new = Arc::new(new);
        let old = std::mem::replace(&mut self.disc, new);
        self.before_relocation = Some((old, std::mem::take(&mut self.u)));
        self.u = self.guess.clone();
        Ok(())
    }

    /// Runs the remaining schedule.
    pub fn run(&mut self) -> Result<Vec<StepReport>> {
        let schedule = LoadSchedule { steps: self.remaining_steps(), dt: self.schedule.dt };
        let config = self.config.solver;
        run_load_steps(self, &schedule, &config)
    }

    /// Runs the next step only; `None` when the schedule is exhausted.
    pub fn step(&mut self) -> Result<Option<StepReport>> {
        let Some(next) = self.remaining_steps().into_iter().next() else { return Ok(None) };
        let schedule = LoadSchedule { steps: vec![next], dt: self.schedule.dt };
        let config = self.config.solver;
        Ok(run_load_steps(self, &schedule, &config)?.pop())
    }

    fn remaining_steps(&self) -> Vec<LoadStep> {
        self.schedule.steps[self.records.len()..].to_vec()
    }

    pub fn total_p(&self) -> f64 {
        self.states.iter().flatten().map(|s| s.p).sum()
    }
}

impl StepProblem for Simulation {
    type State = FieldStates;

    fn prepare_step(&mut self, step: &LoadStep) -> Result<()> {
        self.relocated = false;
        if let Some(name) = &step.zoom {
            if self.zoom.as_ref() != Some(name) {
                let (_, phi2) = self.config.zoom_at(step.index);
                self.relocate_zoom(&phi2)?;
                self.zoom = Some(name.clone());
                self.relocated = true;
                return Ok(());
            }
        }
        self.guess = self.u.clone();
        Ok(())
    }

    fn dof_count(&self) -> usize {
        self.disc.dofs.len()
    }

    fn initial_guess(&self) -> Vec<f64> {
        self.guess.clone()
    }

    fn constraints(&self, step: &LoadStep) -> Result<BTreeMap<usize, f64>> {
        dirichlet_values(&self.disc, &self.loading.dirichlet, step.factor)
    }

    fn external_force(&self, step: &LoadStep) -> Result<Vec<f64>> {
        assemble_loads(&self.disc, &self.loading.tractions, &self.loading.body, step.factor)
    }

    fn assemble(&self, u: &[f64]) -> Result<(SparseMatrix, Vec<f64>, FieldStates)> {
        let a = assemble(&self.disc, &self.params, u, &self.states)?;
        Ok((a.matrix, a.internal, a.states))
    }

    fn commit(
        &mut self,
        step: &LoadStep,
        outcome: NewtonOutcome<FieldStates>,
        fixed: &BTreeMap<usize, f64>,
        report: &StepReport,
    ) -> Result<()> {
        let external = self.external_force(step)?;
        let mut applied = [0.0; 2];
        for (d, v) in external.iter().enumerate() {
            applied[self.disc.dofs.vertex_of(d).2] += v;
        }
        let mut reaction = [0.0; 2];
        for (d, r) in outcome.reactions(fixed) {
            reaction[self.disc.dofs.vertex_of(d).2] += r;
        }
        self.u = outcome.u;
        self.states = outcome.states;
        let stresses = quadrature_stresses(&self.disc, &self.params, &self.u, &self.states)?;
        let max_sigma_yy = stresses.iter().flatten().map(|s| s[1]).fold(f64::NEG_INFINITY, f64::max);
        let energy_error = match &self.reference {
            Some(steps) => {
                let (rd, ru) = steps
                    .get(self.records.len())
                    .ok_or_else(|| Error::InvalidInput(format!("reference run has no step {}", step.index)))?;
                Some(energy_error_norm(rd, ru, &self.disc, &self.u)?.norm)
            }
            None => None,
        };
        let record = StepRecord {
            step: step.index,
            factor: step.factor,
            zoom: self.zoom.clone(),
            relocated: self.relocated,
            dofs: report.dofs,
            iterations: report.iterations,
            residual: report.final_residual,
            reaction,
            applied,
            sum_p: self.total_p(),
            max_sigma_yy,
            energy_error,
        };
        if let Some(dir) = &self.vtk_dir {
            let title = format!("{} step {}", self.config.name, step.index);
            let text = field_vtk(&self.disc, &self.u, &self.states, &stresses, &title);
            write_atomic(&dir.join(format!("{}_step{:04}.vtk", self.config.name, step.index)), &text)?;
        }
        if self.keep_history {
            self.history.push((self.disc.clone(), self.u.clone()));
        }
        self.records.push(record);
        Ok(())
    }
}

/// Command-line level options of a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    /// Scenario whose converged steps serve as the error reference.
    pub reference: Option<ScenarioConfig>,
    pub steps_override: Option<usize>,
    pub dump_geometry: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub porosity: f64,
    pub materials: [crate::materials::Material; 3],
    pub records: Vec<StepRecord>,
    pub reports: Vec<StepReport>,
}

/// Runs a scenario and writes the VTK files, `summary.csv` and `report.json`
/// into the output directory when one is given.
pub fn run_scenario(mut config: ScenarioConfig, options: &RunOptions) -> Result<RunSummary> {
    if let Some(n) = options.steps_override {
        if config.loading.factors.is_some() {
            return Err(Error::Config("a step override needs loading.steps, not an explicit factor list".into()));
        }
        config.loading.steps = Some(n);
        config.validate()?;
    }
    let reference = match &options.reference {
        Some(rc) => {
            let mut rc = rc.clone();
            if let Some(n) = options.steps_override {
                rc.loading.steps = Some(n);
            }
            let mut r = Simulation::new(rc)?;
            r.keep_history = true;
            r.run()?;
            if r.history.len() != config.schedule()?.steps.len() {
                return Err(Error::Config("reference and scenario have different numbers of load steps".into()));
            }
            Some(r.history)
        }
        None => None,
    };
    let mut sim = Simulation::new(config)?;
    sim.reference = reference;
    if let Some(dir) = &options.output_dir {
        if sim.config.output.vtk {
            sim.vtk_dir = Some(dir.clone());
        }
        if options.dump_geometry {
            dump_geometry(dir, &sim.disc, &format!("{}_initial", sim.config.name))?;
        }
    }
    let reports = sim.run()?;
    let summary = RunSummary {
        name: sim.config.name.clone(),
        porosity: sim.config.porosity()?,
        materials: sim.params.materials,
        records: sim.records.clone(),
        reports,
    };
    if let Some(dir) = &options.output_dir {
        if options.dump_geometry && sim.config.zoom.len() > 1 {
            dump_geometry(dir, &sim.disc, &format!("{}_final", sim.config.name))?;
        }
        write_atomic(&dir.join("summary.csv"), &summary_csv(&summary.records))?;
        let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::InvalidInput(e.to_string()))?;
        write_atomic(&dir.join("report.json"), &json)?;
    }
    Ok(summary)
}
