use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::dofmap::DofMap;
use super::volume::{strain_matrix, ElementStresses};
use super::Triplets;
use crate::cutgeom::{interface_quadrature, mesh_of, CutDecomposition, InterfaceId, InterfaceSegment};
use crate::error::{Error, Result};
use crate::geom::{barycentric, Point};
use crate::materials::{elastic_tangent, Material, SQRT2};
use crate::mesh::HierarchicalMesh;

/// Penalty scales and the nominal mesh sizes entering the weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NitscheParams {
    pub gamma: [f64; 3],
    pub h_coarse: f64,
    pub h_fine: f64,
}

/// Weighted-average coefficients of one interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceWeights {
    /// Weight of the negative-side (first) field traction.
    pub w1: f64,
    /// Weight of the positive-side (second) field traction.
    pub w2: f64,
    /// Stiffness scale of the penalty term.
    pub penalty: f64,
}

/// Weights from Young's moduli `e = [E1, E2, E3]` and the mesh sizes `H`, `h`.
pub fn interface_weights(id: InterfaceId, e: [f64; 3], h_coarse: f64, h_fine: f64) -> InterfaceWeights {
    let (big, small) = (h_coarse, h_fine);
    match id {
        InterfaceId::Gamma1 => {
            let s = e[0] + e[1];
            InterfaceWeights { w1: e[1] / s, w2: e[0] / s, penalty: e[0] * e[1] / (small * s) }
        }
        InterfaceId::Gamma2 | InterfaceId::Gamma3 => {
            let micro = if id == InterfaceId::Gamma2 { e[0] } else { e[1] };
            let a = micro / small;
            let c = e[2] / big;
            InterfaceWeights { w1: c / (a + c), w2: a / (a + c), penalty: (micro / big) * (e[2] / small) / (a + c) }
        }
    }
}

fn shape_matrix(l: [f64; 3]) -> SMatrix<f64, 2, 6> {
    let mut n = SMatrix::<f64, 2, 6>::zeros();
    for k in 0..3 {
        n[(0, 2 * k)] = l[k];
        n[(1, 2 * k + 1)] = l[k];
    }
    n
}

/// Maps a Mandel stress to its traction on the normal `n`.
fn traction_operator(n: &Point) -> SMatrix<f64, 2, 4> {
    SMatrix::<f64, 2, 4>::new(n.x, 0.0, 0.0, n.y / SQRT2, 0.0, n.y, 0.0, n.x / SQRT2)
}

/// Adds the symmetric Nitsche terms of every interface segment whose two
/// fields carry unknowns: penalty `γŵ∫⟦u⟧·⟦δu⟧`, consistency `−∫{t(u)}·⟦δu⟧`
/// and symmetry `−∫{t(δu)}·⟦u⟧`. The symmetry term uses the elastic
/// tangent, the consistency term the current stress.
#[allow(clippy::too_many_arguments)]
pub fn assemble_nitsche(
    hm: &HierarchicalMesh,
    decomp: &CutDecomposition,
    dofs: &DofMap,
    materials: &[Material; 3],
    params: &NitscheParams,
    u: &[f64],
    avg: &ElementStresses,
    trips: &mut Triplets,
    internal: &mut [f64],
) -> Result<()> {
    let young = materials.map(|m| m.young);
    for seg in &decomp.segments {
        let (fa, fb) = seg.interface.fields();
        if !dofs.has_field(fa) || !dofs.has_field(fb) {
            continue;
        }
        let weights = interface_weights(seg.interface, young, params.h_coarse, params.h_fine);
        let gamma = params.gamma[seg.interface.index()];
        let (k, r) = segment_contribution(hm, decomp, dofs, materials, seg, weights, gamma, u, avg)?;
        let (da, db) = segment_dofs(hm, dofs, seg);
        let all: Vec<usize> = da.iter().chain(db.iter()).copied().collect();
        for i in 0..12 {
            internal[all[i]] += r[i];
        }
        trips.add_block(&all, &all, |i, j| k[(i, j)]);
    }
    Ok(())
}

fn segment_dofs(hm: &HierarchicalMesh, dofs: &DofMap, seg: &InterfaceSegment) -> ([usize; 6], [usize; 6]) {
    let (fa, fb) = seg.interface.fields();
    let ma = mesh_of(hm, fa);
    let mb = mesh_of(hm, fb);
    (dofs.element_dofs(fa, ma.triangles[seg.neg_element]), dofs.element_dofs(fb, mb.triangles[seg.pos_element]))
}

type Block12 = SMatrix<f64, 12, 12>;

#[allow(clippy::too_many_arguments)]
fn segment_contribution(
    hm: &HierarchicalMesh,
    decomp: &CutDecomposition,
    dofs: &DofMap,
    materials: &[Material; 3],
    seg: &InterfaceSegment,
    w: InterfaceWeights,
    gamma: f64,
    u: &[f64],
    avg: &ElementStresses,
) -> Result<(Block12, SVector<f64, 12>)> {
    let (fa, fb) = seg.interface.fields();
    if !(seg.normal.norm() > 0.5) {
        return Err(Error::Assembly(format!("interface segment on {:?} lacks a normal", seg.interface)));
    }
    let ta = mesh_of(hm, fa).triangle(seg.neg_element);
    let tb = mesh_of(hm, fb).triangle(seg.pos_element);
    let (ba, bb) = (strain_matrix(&ta), strain_matrix(&tb));
    let pa = decomp.field(fa).position[seg.neg_element];
    let pb = decomp.field(fb).position[seg.pos_element];
    let (sa, sb) = (avg.stress[fa.index()][pa], avg.stress[fb.index()][pb]);
    let (dta, dtb) = (avg.tangent[fa.index()][pa], avg.tangent[fb.index()][pb]);
    let ca = elastic_tangent(&materials[fa.index()].params()?);
    let cb = elastic_tangent(&materials[fb.index()].params()?);
    let (da, db) = segment_dofs(hm, dofs, seg);
    let uu = SVector::<f64, 12>::from_fn(|i, _| if i < 6 { u[da[i]] } else { u[db[i - 6]] });
    let nm = traction_operator(&seg.normal);

    let mut t_d = SMatrix::<f64, 2, 12>::zeros();
    let mut t_c = SMatrix::<f64, 2, 12>::zeros();
    t_d.fixed_view_mut::<2, 6>(0, 0).copy_from(&(nm * dta * ba * w.w1));
    t_d.fixed_view_mut::<2, 6>(0, 6).copy_from(&(nm * dtb * bb * w.w2));
    t_c.fixed_view_mut::<2, 6>(0, 0).copy_from(&(nm * ca * ba * w.w1));
    t_c.fixed_view_mut::<2, 6>(0, 6).copy_from(&(nm * cb * bb * w.w2));
    let traction = nm * (sa * w.w1 + sb * w.w2);
    let pen = gamma * w.penalty;

    let mut k = Block12::zeros();
    let mut r = SVector::<f64, 12>::zeros();
    for (x, wq) in interface_quadrature(&seg.a, &seg.b, 2)? {
        let mut j = SMatrix::<f64, 2, 12>::zeros();
        j.fixed_view_mut::<2, 6>(0, 0).copy_from(&shape_matrix(barycentric(&ta, &x)));
        j.fixed_view_mut::<2, 6>(0, 6).copy_from(&(-shape_matrix(barycentric(&tb, &x))));
        let jump = j * uu;
        r += (j.transpose() * (jump * pen - traction) - t_c.transpose() * jump) * wq;
        k += (j.transpose() * j * pen - j.transpose() * t_d - t_c.transpose() * j) * wq;
    }
    Ok((k, r))
}
