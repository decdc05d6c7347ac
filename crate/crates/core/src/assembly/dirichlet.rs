use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::loads::{boundary_pieces, check_tags};
use super::{Discretization, SparseMatrix};
use crate::cutgeom::{mesh_of, FieldId};
use crate::error::{Error, Result};
use crate::geom::Point;

/// Vector-valued function of position.
pub type VectorFn = Arc<dyn Fn(&Point) -> [f64; 2] + Send + Sync>;

/// Prescribed boundary displacement.
#[derive(Clone)]
pub enum BoundaryValue {
    /// `u(x) = offset + gradient · x`.
    Affine {
        offset: [f64; 2],
        gradient: [[f64; 2]; 2],
    },
    Function(VectorFn),
}

impl BoundaryValue {
    pub fn zero() -> Self {
        BoundaryValue::Affine { offset: [0.0; 2], gradient: [[0.0; 2]; 2] }
    }

    pub fn at(&self, x: &Point) -> [f64; 2] {
        match self {
            BoundaryValue::Affine { offset, gradient: g } => {
                [offset[0] + g[0][0] * x.x + g[0][1] * x.y, offset[1] + g[1][0] * x.x + g[1][1] * x.y]
            }
            BoundaryValue::Function(f) => f(x),
        }
    }
}

impl fmt::Debug for BoundaryValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryValue::Affine { offset, gradient } => {
                f.debug_struct("Affine").field("offset", offset).field("gradient", gradient).finish()
            }
            BoundaryValue::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DirichletCondition {
    pub tags: Vec<String>,
    /// Which of `(ux, uy)` are fixed.
    pub components: [bool; 2],
    pub value: BoundaryValue,
}

impl DirichletCondition {
    pub fn clamp(tags: &[&str]) -> Self {
        Self { tags: tags.iter().map(|s| s.to_string()).collect(), components: [true; 2], value: BoundaryValue::zero() }
    }
}

/// Prescribed values keyed by global unknown. A field vertex is constrained
/// when a tagged facet through it has a physical part in that field.
/// Values are scaled by `factor`. Later conditions override earlier ones.
pub fn dirichlet_values(disc: &Discretization, conditions: &[DirichletCondition], factor: f64) -> Result<BTreeMap<usize, f64>> {
    check_tags(disc, conditions.iter().flat_map(|c| c.tags.iter()))?;
    let mut out = BTreeMap::new();
    for f in FieldId::ALL {
        let mesh = mesh_of(&disc.hm, f);
        for piece in boundary_pieces(disc, f) {
            let tag = mesh.facets[piece.facet].tag.as_deref();
            for c in conditions.iter().filter(|c| c.tags.iter().any(|s| Some(s.as_str()) == tag)) {
                for v in mesh.facets[piece.facet].vertices {
                    let val = c.value.at(&mesh.vertices[v]);
                    for comp in 0..2 {
                        if c.components[comp] {
                            let d = disc.dofs.dof(f, v, comp).ok_or_else(|| {
                                Error::Assembly(format!("boundary vertex {v} has no unknown in field {}", f.label()))
                            })?;
                            out.insert(d, factor * val[comp]);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Symmetric elimination: constrained rows and columns are cleared, the
/// diagonal set to one and known values moved to the right-hand side.
pub fn apply_dirichlet(matrix: &SparseMatrix, rhs: &[f64], fixed: &BTreeMap<usize, f64>) -> Result<(SparseMatrix, Vec<f64>)> {
    let n = matrix.n;
    if rhs.len() != n {
        return Err(Error::InvalidInput(format!("right-hand side has {} entries for {n} unknowns", rhs.len())));
    }
    if let Some((&d, _)) = fixed.range(n..).next() {
        return Err(Error::InvalidInput(format!("constrained unknown {d} outside 0..{n}")));
    }
    let mut is_fixed = vec![false; n];
    for &d in fixed.keys() {
        is_fixed[d] = true;
    }
    let mut b = rhs.to_vec();
    let mut trips = Vec::with_capacity(matrix.nnz());
    for r in 0..n {
        for (c, v) in matrix.row(r) {
            match (is_fixed[r], is_fixed[c]) {
                (false, false) => trips.push((r, c, v)),
                (false, true) => b[r] -= v * fixed[&c],
                _ => {}
            }
        }
    }
    for (&d, &g) in fixed {
        trips.push((d, d, 1.0));
        b[d] = g;
    }
    Ok((SparseMatrix::from_triplets(n, trips), b))
}
