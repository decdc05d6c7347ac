use std::collections::BTreeSet;
use std::fmt;

use super::Discretization;
use crate::cutgeom::{mesh_of, FieldId};
use crate::error::{Error, Result};
use crate::geom::{barycentric, clip_segment, segment_rule, triangle_rule_deg5, Point, Side};

/// Piece of a tagged outer-boundary facet that lies in the physical domain
/// of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPiece {
    pub field: FieldId,
    pub facet: usize,
    pub element: usize,
    pub a: Point,
    pub b: Point,
}

/// Clips every tagged boundary facet of a field to its physical part. A
/// facet lying exactly on `φ2 = 0` goes to the macro field and one on
/// `φ1 = 0` to the matrix, so no boundary portion is counted twice.
pub fn boundary_pieces(disc: &Discretization, f: FieldId) -> Vec<BoundaryPiece> {
    let mut out = Vec::new();
    if !disc.dofs.has_field(f) {
        return out;
    }
    let mesh = mesh_of(&disc.hm, f);
    let dom = disc.decomp.field(f);
    for (i, facet) in mesh.facets.iter().enumerate() {
        if !facet.is_boundary() || facet.tag.is_none() {
            continue;
        }
        let e = facet.elements[0];
        if !dom.is_active(e) {
            continue;
        }
        let [va, vb] = facet.vertices;
        let (a, b) = (mesh.vertices[va], mesh.vertices[vb]);
        let piece = if f.is_micro() {
            let p2 = &disc.decomp.phi2_fine;
            let p1 = &disc.decomp.phi1_fine;
            if p2[va] == 0.0 && p2[vb] == 0.0 {
                continue;
            }
            let side = if f == FieldId::Matrix { Side::NonPositive } else { Side::NonNegative };
            if f == FieldId::Inclusion && p1[va] == 0.0 && p1[vb] == 0.0 {
                continue;
            }
            clip_segment(a, b, p2[va], p2[vb], Side::NonPositive).and_then(|(p, q)| {
                // φ1 is linear along the facet, so its values at the clipped
                // ends follow from the parameter along the edge.
                let t = |x: &Point| (x - a).norm() / (b - a).norm();
                let g = |x: &Point| p1[va] + t(x) * (p1[vb] - p1[va]);
                clip_segment(p, q, g(&p), g(&q), side)
            })
        } else {
            let p2 = &disc.decomp.phi2_coarse;
            clip_segment(a, b, p2[va], p2[vb], Side::NonNegative)
        };
        if let Some((a, b)) = piece {
            out.push(BoundaryPiece { field: f, facet: i, element: e, a, b });
        }
    }
    out
}

/// Constant traction applied on the listed boundary tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Traction {
    pub tags: Vec<String>,
    pub value: [f64; 2],
}

/// Volume force density.
#[derive(Clone, Default)]
pub enum BodyForce {
    #[default]
    None,
    Constant([f64; 2]),
    Function(super::dirichlet::VectorFn),
}

impl fmt::Debug for BodyForce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyForce::None => write!(f, "None"),
            BodyForce::Constant(v) => write!(f, "Constant({v:?})"),
            BodyForce::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl BodyForce {
    fn at(&self, x: &Point) -> Option<[f64; 2]> {
        match self {
            BodyForce::None => None,
            BodyForce::Constant(v) => Some(*v),
            BodyForce::Function(g) => Some(g(x)),
        }
    }
}

/// Fails with the first tag that labels no boundary facet of the domain.
pub fn check_tags<'a>(disc: &Discretization, tags: impl IntoIterator<Item = &'a String>) -> Result<()> {
    let known: BTreeSet<String> = disc.hm.coarse.boundary_tags().into_iter().collect();
    for t in tags {
        if !known.contains(t) {
            return Err(Error::InvalidInput(format!("boundary tag '{t}' does not exist on the domain")));
        }
    }
    Ok(())
}

/// External load vector `∫ f·δu + ∫ τ·δu`, with every term scaled by `factor`.
pub fn assemble_loads(disc: &Discretization, tractions: &[Traction], body: &BodyForce, factor: f64) -> Result<Vec<f64>> {
    check_tags(disc, tractions.iter().flat_map(|t| t.tags.iter()))?;
    let mut rhs = vec![0.0; disc.dofs.len()];
    for f in FieldId::ALL {
        if !disc.dofs.has_field(f) {
            continue;
        }
        let mesh = mesh_of(&disc.hm, f);
        for piece in boundary_pieces(disc, f) {
            let tag = mesh.facets[piece.facet].tag.as_deref();
            for t in tractions.iter().filter(|t| t.tags.iter().any(|s| Some(s.as_str()) == tag)) {
                let tri = mesh.triangle(piece.element);
                let ed = disc.dofs.element_dofs(f, mesh.triangles[piece.element]);
                for (x, w) in segment_rule(&piece.a, &piece.b, 2) {
                    let l = barycentric(&tri, &x);
                    for k in 0..3 {
                        rhs[ed[2 * k]] += factor * w * l[k] * t.value[0];
                        rhs[ed[2 * k + 1]] += factor * w * l[k] * t.value[1];
                    }
                }
            }
        }
        if matches!(body, BodyForce::None) {
            continue;
        }
        let dom = disc.decomp.field(f);
        for (pos, &e) in dom.elements.iter().enumerate() {
            let tri = mesh.triangle(e);
            let ed = disc.dofs.element_dofs(f, mesh.triangles[e]);
            for part in &dom.parts[pos] {
                for (x, w) in triangle_rule_deg5(part) {
                    let Some(v) = body.at(&x) else { continue };
                    let l = barycentric(&tri, &x);
                    for k in 0..3 {
                        rhs[ed[2 * k]] += factor * w * l[k] * v[0];
                        rhs[ed[2 * k + 1]] += factor * w * l[k] * v[1];
                    }
                }
            }
        }
    }
    Ok(rhs)
}
