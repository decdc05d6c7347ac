use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::assembly::{BoundaryValue, DirichletCondition, GhostParams, NitscheParams, SystemParams, Traction};
use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::materials::{mori_tanaka, ElasticParams, Material, Phase, PlasticParams};
use crate::mesh::{build_structured_mesh, MeshSpec, TriMesh};
use crate::solver::{LoadSchedule, LoadStep, Loading, NewtonConfig};

use super::porosity::phase_fraction;

/// Complete description of one run, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Treat the second micro phase as empty space.
    #[serde(default)]
    pub void_mode: bool,
    pub mesh: MeshSpec,
    /// `φ1`: positive inside pores or inclusions. Absent means none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub microstructure: Option<LevelSet>,
    /// Zoom regions `φ2 ≤ 0`, each active from its first step on.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zoom: Vec<ZoomStage>,
    pub materials: MaterialsConfig,
    #[serde(default)]
    pub coupling: CouplingConfig,
    pub boundary: BoundaryConfig,
    pub loading: LoadingConfig,
    #[serde(default)]
    pub solver: NewtonConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoomStage {
    pub name: String,
    #[serde(default = "one")]
    pub from_step: usize,
    pub shape: LevelSet,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    pub matrix: MaterialBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusion: Option<MaterialBlock>,
    #[serde(rename = "macro")]
    pub macro_: MaterialBlock,
}

/// Elastic constants, or `homogenized = true` for the Mori–Tanaka estimate
/// of the microstructure (an explicit `poisson` then overrides the estimate).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub young: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisson: Option<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub homogenized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plastic: Option<PlasticParams>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    /// Nitsche penalties for the matrix–inclusion, matrix–macro and
    /// inclusion–macro interfaces.
    pub gamma: [f64; 3],
    /// Ghost penalties for the matrix, inclusion and macro fields.
    pub beta: [f64; 3],
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self { gamma: [10.0; 3], beta: [1.0; 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default)]
    pub dirichlet: Vec<DirichletSpec>,
    #[serde(default)]
    pub traction: Vec<TractionSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
}

/// Prescribed `u = offset + gradient · x` on the tagged edges, scaled with the load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletSpec {
    pub tags: Vec<String>,
    #[serde(default = "both")]
    pub components: Vec<Component>,
    #[serde(default)]
    pub offset: [f64; 2],
    #[serde(default)]
    pub gradient: [[f64; 2]; 2],
}

fn both() -> Vec<Component> {
    vec![Component::X, Component::Y]
}

/// Traction at full load on the tagged edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionSpec {
    pub tags: Vec<String>,
    pub value: [f64; 2],
}

/// Either `steps` equal increments or an explicit list of load factors.
/// Repeating a factor gives a step without load change.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Write one VTK file per converged step.
    pub vtk: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { vtk: true }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parses and validates a TOML scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn serialize_config(config: &ScenarioConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| config_err(format!("cannot serialize scenario: {e}")))
}

impl ScenarioConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        parse_config(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.mesh;
        if m.domain.is_empty() {
            return Err(config_err("mesh.domain needs at least one rectangle"));
        }
        if !(m.h_coarse > 0.0) {
            return Err(config_err(format!("mesh.h_coarse must be positive, got {}", m.h_coarse)));
        }
        if !self.zoom.is_empty() && m.levels == 0 {
            return Err(config_err("a zoom needs mesh.levels >= 1 so that h < H"));
        }
        for s in &self.zoom {
            s.shape.validate().map_err(|e| config_err(format!("zoom '{}': {e}", s.name)))?;
        }
        let mut names = BTreeSet::new();
        for w in self.zoom.windows(2) {
            if w[1].from_step <= w[0].from_step {
                return Err(config_err(format!("zoom '{}' must start after zoom '{}'", w[1].name, w[0].name)));
            }
        }
        for s in &self.zoom {
            if s.from_step == 0 {
                return Err(config_err(format!("zoom '{}': steps are numbered from 1", s.name)));
            }
            if !names.insert(&s.name) {
                return Err(config_err(format!("duplicate zoom name '{}'", s.name)));
            }
        }
        if let Some(p) = &self.microstructure {
            p.validate().map_err(|e| config_err(format!("microstructure: {e}")))?;
        }
        if !self.void_mode && self.microstructure.is_some() && self.materials.inclusion.is_none() {
            return Err(config_err("missing key materials.inclusion (required unless void_mode = true)"));
        }
        if self.coupling.gamma.iter().any(|g| !(*g > 0.0)) {
            return Err(config_err(format!("coupling.gamma must be positive, got {:?}", self.coupling.gamma)));
        }
        if self.coupling.beta.iter().any(|b| !(*b >= 0.0)) {
            return Err(config_err(format!("coupling.beta must be non-negative, got {:?}", self.coupling.beta)));
        }
        self.solver.validate().map_err(|e| config_err(e.to_string()))?;
        self.schedule()?;
        let mesh = self.coarse_mesh()?;
        let known: BTreeSet<String> = mesh.boundary_tags().into_iter().collect();
        let used =
            self.boundary.dirichlet.iter().flat_map(|d| &d.tags).chain(self.boundary.traction.iter().flat_map(|t| &t.tags));
        for tag in used {
            if !known.contains(tag) {
                return Err(config_err(format!(
                    "boundary tag '{tag}' does not exist; the domain has {}",
                    known.iter().cloned().collect::<Vec<_>>().join(", ")
                )));
            }
        }
        for d in &self.boundary.dirichlet {
            if d.components.is_empty() {
                return Err(config_err(format!("dirichlet condition on {:?} fixes no component", d.tags)));
            }
        }
        self.system_params()?;
        Ok(())
    }

    pub fn coarse_mesh(&self) -> Result<TriMesh> {
        build_structured_mesh(&self.mesh.domain, self.mesh.h_coarse, self.mesh.pattern).map_err(|e| config_err(e.to_string()))
    }

    pub fn phi1(&self) -> LevelSet {
        self.microstructure.clone().unwrap_or(LevelSet::Constant { value: -1.0 })
    }

    /// Zoom level set active at a step; `φ2 ≡ 1` before the first stage.
    pub fn zoom_at(&self, step: usize) -> (Option<&ZoomStage>, LevelSet) {
        match self.zoom.iter().rev().find(|s| s.from_step <= step) {
            Some(s) => (Some(s), s.shape.clone()),
            None => (None, LevelSet::Constant { value: 1.0 }),
        }
    }

    pub fn schedule(&self) -> Result<LoadSchedule> {
        let l = &self.loading;
        let mut schedule = match (l.steps, &l.factors) {
            (Some(n), None) => LoadSchedule::uniform(n).map_err(|e| config_err(e.to_string()))?,
            (None, Some(f)) if !f.is_empty() => LoadSchedule {
                steps: f.iter().enumerate().map(|(k, &factor)| LoadStep { index: k + 1, factor, zoom: None }).collect(),
                dt: 1.0 / f.len() as f64,
            },
            (None, None) => return Err(config_err("missing key loading.steps (or loading.factors)")),
            _ => return Err(config_err("loading needs exactly one of steps or a non-empty factors list")),
        };
        schedule.validate().map_err(|e| config_err(e.to_string()))?;
        for s in &self.zoom {
            if let Some(step) = schedule.steps.iter_mut().find(|st| st.index == s.from_step) {
                step.zoom = Some(s.name.clone());
            } else {
                return Err(config_err(format!("zoom '{}' starts at step {} beyond the schedule", s.name, s.from_step)));
            }
        }
        Ok(schedule)
    }

    /// Area fraction of the second phase over the domain.
    pub fn porosity(&self) -> Result<f64> {
        match &self.microstructure {
            None => Ok(0.0),
            Some(p) => phase_fraction(&self.mesh.domain, p),
        }
    }

    fn resolve(&self, block: &MaterialBlock, what: &str) -> Result<Material> {
        if block.homogenized {
            return Err(config_err(format!("materials.{what} cannot be homogenized")));
        }
        let young = block.young.ok_or_else(|| config_err(format!("missing key materials.{what}.young")))?;
        let poisson = block.poisson.ok_or_else(|| config_err(format!("missing key materials.{what}.poisson")))?;
        let m = Material { young, poisson, plastic: block.plastic };
        m.params().map_err(|e| config_err(format!("materials.{what}: {e}")))?;
        if let Some(p) = &m.plastic {
            p.validate().map_err(|e| config_err(format!("materials.{what}.plastic: {e}")))?;
        }
        Ok(m)
    }

    /// Materials of the matrix, inclusion and macro fields. In void mode the
    /// inclusion slot repeats the matrix; it carries no unknowns.
    pub fn resolved_materials(&self) -> Result<[Material; 3]> {
        let matrix = self.resolve(&self.materials.matrix, "matrix")?;
        let inclusion = match (&self.materials.inclusion, self.void_mode) {
            (Some(b), false) => self.resolve(b, "inclusion")?,
            _ => matrix,
        };
        let b = &self.materials.macro_;
        let macro_ = if b.homogenized {
            if b.young.is_some() {
                return Err(config_err("materials.macro: young and homogenized are exclusive"));
            }
            let phase = if self.void_mode { Phase::Void } else { Phase::Solid(inclusion.params()?) };
            let eff = mori_tanaka(&matrix.params()?, &phase, self.porosity()?)
                .map_err(|e| config_err(format!("materials.macro: {e}")))?;
            let poisson = b.poisson.unwrap_or(eff.poisson);
            let m = Material { young: eff.young, poisson, plastic: b.plastic };
            ElasticParams::new(m.young, m.poisson).map_err(|e| config_err(format!("materials.macro: {e}")))?;
            m
        } else {
            self.resolve(b, "macro")?
        };
        Ok([matrix, inclusion, macro_])
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        let p = SystemParams {
            materials: self.resolved_materials()?,
            nitsche: NitscheParams { gamma: self.coupling.gamma, h_coarse: self.mesh.h_coarse, h_fine: self.mesh.h_fine() },
            ghost: GhostParams { beta: self.coupling.beta },
        };
        p.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(p)
    }

    pub fn loading_data(&self) -> Loading {
        let dirichlet = self
            .boundary
            .dirichlet
            .iter()
            .map(|d| DirichletCondition {
                tags: d.tags.clone(),
                components: [d.components.contains(&Component::X), d.components.contains(&Component::Y)],
                value: BoundaryValue::Affine { offset: d.offset, gradient: d.gradient },
            })
            .collect();
        let tractions = self.boundary.traction.iter().map(|t| Traction { tags: t.tags.clone(), value: t.value }).collect();
        Loading { dirichlet, tractions, body: Default::default() }
    }
}
