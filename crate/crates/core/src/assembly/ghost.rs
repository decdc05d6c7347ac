use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::dofmap::DofMap;
use super::volume::strain_matrix;
use super::Triplets;
use crate::cutgeom::{mesh_of, CutDecomposition, FieldId};
use crate::mesh::HierarchicalMesh;

/// Ghost penalty scale per field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhostParams {
    pub beta: [f64; 3],
}

/// Adds `β 𝓗 ∫_F ⟦ε(u)⟧ : ⟦ε(δu)⟧` on every ghost facet, with `𝓗` the
/// facet length. For P1 the strain jump is constant along the facet.
pub fn assemble_ghost(
    hm: &HierarchicalMesh,
    decomp: &CutDecomposition,
    dofs: &DofMap,
    params: &GhostParams,
    u: &[f64],
    trips: &mut Triplets,
    internal: &mut [f64],
) {
    for f in FieldId::ALL {
        let beta = params.beta[f.index()];
        if beta == 0.0 || !dofs.has_field(f) {
            continue;
        }
        let mesh = mesh_of(hm, f);
        for g in &decomp.ghost[f.index()] {
            let [e0, e1] = g.elements;
            let mut jump = SMatrix::<f64, 4, 12>::zeros();
            jump.fixed_view_mut::<4, 6>(0, 0).copy_from(&strain_matrix(&mesh.triangle(e0)));
            jump.fixed_view_mut::<4, 6>(0, 6).copy_from(&(-strain_matrix(&mesh.triangle(e1))));
            let d0 = dofs.element_dofs(f, mesh.triangles[e0]);
            let d1 = dofs.element_dofs(f, mesh.triangles[e1]);
            let all: Vec<usize> = d0.iter().chain(d1.iter()).copied().collect();
            let k = jump.transpose() * jump * (beta * g.length * g.length);
            let uu = SVector::<f64, 12>::from_fn(|i, _| u[all[i]]);
            let r = k * uu;
            for i in 0..12 {
                internal[all[i]] += r[i];
            }
            trips.add_block(&all, &all, |i, j| k[(i, j)]);
        }
    }
}
