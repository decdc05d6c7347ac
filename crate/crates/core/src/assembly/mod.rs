//! Discrete system of the three coupled fields: volume, interface, ghost
//! and load terms, and strong boundary constraints.

pub mod dirichlet;
pub mod dofmap;
pub mod ghost;
pub mod loads;
pub mod nitsche;
pub mod sparse;
pub mod volume;

pub use dirichlet::{apply_dirichlet, dirichlet_values, BoundaryValue, DirichletCondition, VectorFn};
pub use dofmap::{build_dofmap, DofMap};
pub use ghost::{assemble_ghost, GhostParams};
pub use loads::{assemble_loads, boundary_pieces, BodyForce, BoundaryPiece, Traction};
pub use nitsche::{assemble_nitsche, interface_weights, InterfaceWeights, NitscheParams};
pub use sparse::{SparseMatrix, Triplets};
pub use volume::{assemble_volume, quadrature_layout, strain_matrix, ElementStresses};

use crate::cutgeom::{build_domains, mesh_of, zoom_elements, CutDecomposition, FieldId};
use crate::error::{Error, Result};
use crate::geom::{barycentric, Point};
use crate::levelset::{interpolate_nodal, LevelSet};
use crate::materials::{InternalState, Material};
use crate::mesh::{build_structured_mesh, refine_hierarchical, HierarchicalMesh, MeshSpec, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub x: Point,
    pub weight: f64,
}

/// Quadrature points of one field, grouped by active element:
/// element `k` of the field domain owns `points[offsets[k]..offsets[k + 1]]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldQuadrature {
    pub offsets: Vec<usize>,
    pub points: Vec<QuadPoint>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadratureLayout {
    pub fields: [FieldQuadrature; 3],
}

/// Internal variables per field and quadrature point.
pub type FieldStates = [Vec<InternalState>; 3];

/// Mesh, cut geometry, numbering and quadrature of one zoom configuration.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub hm: HierarchicalMesh,
    pub decomp: CutDecomposition,
    pub dofs: DofMap,
    pub layout: QuadratureLayout,
    pub void_mode: bool,
}

impl Discretization {
    pub fn new(hm: HierarchicalMesh, phi1: &LevelSet, phi2: &LevelSet, void_mode: bool) -> Result<Self> {
        phi1.validate()?;
        phi2.validate()?;
        let p1 = interpolate_nodal(phi1, &hm.fine);
        let p2 = interpolate_nodal(phi2, &hm.coarse);
        let decomp = build_domains(&hm, &p1, &p2)?;
        let dofs = build_dofmap(&hm, &decomp, void_mode);
        let mut layout = quadrature_layout(&decomp);
        if void_mode {
            layout.fields[FieldId::Inclusion.index()] = FieldQuadrature::default();
        }
        Ok(Self { hm, decomp, dofs, layout, void_mode })
    }

    /// Meshes the domain, refines around the zoom `φ2 ≤ 0` and cuts.
    pub fn build(spec: &MeshSpec, phi1: &LevelSet, phi2: &LevelSet, void_mode: bool) -> Result<Self> {
        let coarse = build_structured_mesh(&spec.domain, spec.h_coarse, spec.pattern)?;
        Self::on_mesh(coarse, spec, phi1, phi2, void_mode)
    }

    /// As [`Discretization::build`] on an existing coarse mesh.
    pub fn on_mesh(coarse: TriMesh, spec: &MeshSpec, phi1: &LevelSet, phi2: &LevelSet, void_mode: bool) -> Result<Self> {
        phi2.validate()?;
        let zoom = zoom_elements(&coarse, &interpolate_nodal(phi2, &coarse), spec.halo)?;
        let levels = if zoom.is_empty() { 0 } else { spec.levels };
        let hm = refine_hierarchical(&coarse, &zoom, levels)?;
        Self::new(hm, phi1, phi2, void_mode)
    }

    pub fn initial_states(&self) -> FieldStates {
        std::array::from_fn(|k| vec![InternalState::default(); self.layout.fields[k].points.len()])
    }

    /// Displacement of field `f` at a point of its active element `e`.
    pub fn displacement_at(&self, f: FieldId, e: usize, x: &Point, u: &[f64]) -> [f64; 2] {
        let mesh = mesh_of(&self.hm, f);
        let l = barycentric(&mesh.triangle(e), x);
        let d = self.dofs.element_dofs(f, mesh.triangles[e]);
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += l[k] * u[d[2 * k]];
            out[1] += l[k] * u[d[2 * k + 1]];
        }
        out
    }
}

/// Materials and coupling parameters of the discrete problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub materials: [Material; 3],
    pub nitsche: NitscheParams,
    pub ghost: GhostParams,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        for m in &self.materials {
            m.params()?;
        }
        if self.nitsche.gamma.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::InvalidInput(format!("Nitsche penalties must be positive, got {:?}", self.nitsche.gamma)));
        }
        if self.ghost.beta.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::InvalidInput(format!("ghost penalties must be non-negative, got {:?}", self.ghost.beta)));
        }
        if !(self.nitsche.h_fine > 0.0 && self.nitsche.h_coarse >= self.nitsche.h_fine) {
            return Err(Error::InvalidInput(format!(
                "mesh sizes need H >= h > 0, got H = {}, h = {}",
                self.nitsche.h_coarse, self.nitsche.h_fine
            )));
        }
        Ok(())
    }
}

/// Tangent, internal force and trial internal variables at a displacement.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub matrix: SparseMatrix,
    pub internal: Vec<f64>,
    pub states: FieldStates,
}

/// Assembles the tangent and internal force of all bilinear forms at `u`.
pub fn assemble(disc: &Discretization, params: &SystemParams, u: &[f64], states: &FieldStates) -> Result<Assembled> {
    let n = disc.dofs.len();
    if u.len() != n {
        return Err(Error::Assembly(format!("displacement has {} entries for {n} unknowns", u.len())));
    }
    let mut trips = Triplets::new();
    let mut internal = vec![0.0; n];
    let (trial, avg) = assemble_volume(
        &disc.hm,
        &disc.decomp,
        &disc.dofs,
        &disc.layout,
        &params.materials,
        u,
        states,
        &mut trips,
        &mut internal,
    )?;
    assemble_nitsche(&disc.hm, &disc.decomp, &disc.dofs, &params.materials, &params.nitsche, u, &avg, &mut trips, &mut internal)?;
    assemble_ghost(&disc.hm, &disc.decomp, &disc.dofs, &params.ghost, u, &mut trips, &mut internal);
    let matrix = SparseMatrix::from_triplets(n, trips.entries);
    if matrix.vals.iter().chain(internal.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Assembly("non-finite entry in the assembled system".into()));
    }
    Ok(Assembled { matrix, internal, states: trial })
}
