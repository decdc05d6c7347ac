use nalgebra::{SMatrix, SVector};

use super::dofmap::DofMap;
use super::{FieldStates, QuadratureLayout, Triplets};
use crate::cutgeom::{mesh_of, CutDecomposition, FieldId};
use crate::error::{Error, Result};
use crate::geom::{p1_gradients, triangle_rule_deg2, Point};
use crate::materials::{Mandel, Material, Tangent, SQRT2};
use crate::mesh::{HierarchicalMesh, TriMesh};

pub type BMatrix = SMatrix<f64, 4, 6>;

/// Mandel strain-displacement matrix of a P1 triangle.
pub fn strain_matrix(tri: &[Point; 3]) -> BMatrix {
    let (g, _) = p1_gradients(tri);
    let mut b = BMatrix::zeros();
    for k in 0..3 {
        b[(0, 2 * k)] = g[k].x;
        b[(1, 2 * k + 1)] = g[k].y;
        b[(3, 2 * k)] = g[k].y / SQRT2;
        b[(3, 2 * k + 1)] = g[k].x / SQRT2;
    }
    b
}

pub fn element_strain(mesh: &TriMesh, e: usize, dofs: &[usize; 6], u: &[f64]) -> Mandel {
    let b = strain_matrix(&mesh.triangle(e));
    let ue = SVector::<f64, 6>::from_fn(|i, _| u[dofs[i]]);
    b * ue
}

/// Quadrature rule used on every physical sub-triangle.
pub fn quadrature_layout(decomp: &CutDecomposition) -> QuadratureLayout {
    let mut layout = QuadratureLayout::default();
    for f in FieldId::ALL {
        let dom = decomp.field(f);
        let q = &mut layout.fields[f.index()];
        q.offsets.push(0);
        for parts in &dom.parts {
            for tri in parts {
                for (x, w) in triangle_rule_deg2(tri) {
                    q.points.push(super::QuadPoint { x, weight: w });
                }
            }
            q.offsets.push(q.points.len());
        }
    }
    layout
}

/// Element-averaged stress and tangent of every active element, used for
/// interface tractions.
#[derive(Debug, Clone, Default)]
pub struct ElementStresses {
    pub stress: [Vec<Mandel>; 3],
    pub tangent: [Vec<Tangent>; 3],
}

/// Adds `∫ σ(u) : ε(δu)` over the physical parts of each field and returns
/// the trial internal variables with the element-averaged stresses.
#[allow(clippy::too_many_arguments)]
pub fn assemble_volume(
    hm: &HierarchicalMesh,
    decomp: &CutDecomposition,
    dofs: &DofMap,
    layout: &QuadratureLayout,
    materials: &[Material; 3],
    u: &[f64],
    states: &FieldStates,
    trips: &mut Triplets,
    internal: &mut [f64],
) -> Result<(FieldStates, ElementStresses)> {
    let mut trial: FieldStates = Default::default();
    let mut avg = ElementStresses::default();
    for f in FieldId::ALL {
        let k = f.index();
        if !dofs.has_field(f) {
            continue;
        }
        let mesh = mesh_of(hm, f);
        let dom = decomp.field(f);
        let q = &layout.fields[k];
        if states[k].len() != q.points.len() {
            return Err(Error::Assembly(format!(
                "field {} has {} state records for {} quadrature points",
                f.label(),
                states[k].len(),
                q.points.len()
            )));
        }
        let mut new_states = Vec::with_capacity(q.points.len());
        for (pos, &e) in dom.elements.iter().enumerate() {
            let ed = dofs.element_dofs(f, mesh.triangles[e]);
            let b = strain_matrix(&mesh.triangle(e));
            let ue = SVector::<f64, 6>::from_fn(|i, _| u[ed[i]]);
            let strain = b * ue;
            let mut ke = SMatrix::<f64, 6, 6>::zeros();
            let mut re = SVector::<f64, 6>::zeros();
            let mut s_sum = Mandel::zeros();
            let mut d_sum = Tangent::zeros();
            let mut w_sum = 0.0;
            let range = q.offsets[pos]..q.offsets[pos + 1];
            for (qp, state) in q.points[range.clone()].iter().zip(&states[k][range]) {
                let w = qp.weight;
                let r = materials[k].update(&strain, state)?;
                re += b.transpose() * r.stress * w;
                ke += b.transpose() * r.tangent * b * w;
                s_sum += r.stress * w;
                d_sum += r.tangent * w;
                w_sum += w;
                new_states.push(r.state);
            }
            for i in 0..6 {
                internal[ed[i]] += re[i];
            }
            trips.add_block(&ed, &ed, |i, j| ke[(i, j)]);
            avg.stress[k].push(s_sum / w_sum);
            avg.tangent[k].push(d_sum / w_sum);
        }
        trial[k] = new_states;
    }
    Ok((trial, avg))
}
