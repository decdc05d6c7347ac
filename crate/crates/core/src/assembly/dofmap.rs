use crate::cutgeom::{mesh_of, CutDecomposition, FieldId};
use crate::mesh::HierarchicalMesh;

/// Global numbering of the three fields. A vertex that belongs to several
/// extended element sets carries independent unknowns in each field.
/// Fields are numbered in order, vertices ascending within a field, and the
/// two components of a vertex are adjacent.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    /// Field `f` owns the global range `offsets[f]..offsets[f + 1]`.
    pub offsets: [usize; 4],
    /// Mesh vertex to field-local slot, `usize::MAX` when absent.
    pub slot: [Vec<usize>; 3],
    /// Field-local slot to mesh vertex.
    pub vertices: [Vec<usize>; 3],
}

impl DofMap {
    pub fn len(&self) -> usize {
        self.offsets[3]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn has_field(&self, f: FieldId) -> bool {
        !self.vertices[f.index()].is_empty()
    }

    pub fn field_len(&self, f: FieldId) -> usize {
        self.offsets[f.index() + 1] - self.offsets[f.index()]
    }

    pub fn dof(&self, f: FieldId, vertex: usize, component: usize) -> Option<usize> {
        let s = *self.slot[f.index()].get(vertex)?;
        (s != usize::MAX).then(|| self.offsets[f.index()] + 2 * s + component)
    }

    /// Unknowns of a triangle, ordered `[x0, y0, x1, y1, x2, y2]`.
    pub fn element_dofs(&self, f: FieldId, tri: [usize; 3]) -> [usize; 6] {
        let base = self.offsets[f.index()];
        let slots = &self.slot[f.index()];
        let mut out = [0; 6];
        for k in 0..3 {
            let s = slots[tri[k]];
            debug_assert!(s != usize::MAX, "vertex {} not in field {:?}", tri[k], f);
            out[2 * k] = base + 2 * s;
            out[2 * k + 1] = base + 2 * s + 1;
        }
        out
    }

    pub fn field_of(&self, dof: usize) -> FieldId {
        let k = (0..3).find(|&k| dof < self.offsets[k + 1]).expect("dof out of range");
        FieldId::ALL[k]
    }

    /// Mesh vertex and component of a global unknown.
    pub fn vertex_of(&self, dof: usize) -> (FieldId, usize, usize) {
        let f = self.field_of(dof);
        let local = dof - self.offsets[f.index()];
        (f, self.vertices[f.index()][local / 2], local % 2)
    }
}

pub fn build_dofmap(hm: &HierarchicalMesh, decomp: &CutDecomposition, void_mode: bool) -> DofMap {
    let mut offsets = [0usize; 4];
    let mut slot: [Vec<usize>; 3] = Default::default();
    let mut vertices: [Vec<usize>; 3] = Default::default();
    for f in FieldId::ALL {
        let k = f.index();
        let mesh = mesh_of(hm, f);
        let mut used = vec![false; mesh.vertices.len()];
        if !(void_mode && f == FieldId::Inclusion) {
            for &e in &decomp.field(f).elements {
                for v in mesh.triangles[e] {
                    used[v] = true;
                }
            }
        }
        let mut s = vec![usize::MAX; mesh.vertices.len()];
        let mut list = Vec::new();
        for (v, &u) in used.iter().enumerate() {
            if u {
                s[v] = list.len();
                list.push(v);
            }
        }
        offsets[k + 1] = offsets[k] + 2 * list.len();
        slot[k] = s;
        vertices[k] = list;
    }
    DofMap { offsets, slot, vertices }
}
