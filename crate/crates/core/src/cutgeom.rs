//! Discrete geometry induced by the two level sets: physical parts of every
//! element for each field, interface segments between fields, and the facet
//! sets that receive ghost penalty.

use crate::error::{Error, Result};
use crate::geom::{
    barycentric, clip_polygon, clip_segment, fan_triangulate, linear_gradient, polygon_area, segment_rule, triangle_area,
    zero_chord, Point, Side,
};
use crate::levelset::{classify_element, ElementSign, NodalField};
use crate::mesh::{HierarchicalMesh, TriMesh};

/// The three displacement fields. The two micro fields live on the fine
/// mesh, the macro field on the coarse one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldId {
    Matrix = 0,
    Inclusion = 1,
    Macro = 2,
}

impl FieldId {
    pub const ALL: [FieldId; 3] = [FieldId::Matrix, FieldId::Inclusion, FieldId::Macro];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_micro(self) -> bool {
        self != FieldId::Macro
    }

    /// One-based label used in output.
    pub fn label(self) -> usize {
        self.index() + 1
    }
}

/// Interfaces: Γ1 matrix–inclusion, Γ2 matrix–macro, Γ3 inclusion–macro.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InterfaceId {
    Gamma1 = 0,
    Gamma2 = 1,
    Gamma3 = 2,
}

impl InterfaceId {
    pub const ALL: [InterfaceId; 3] = [InterfaceId::Gamma1, InterfaceId::Gamma2, InterfaceId::Gamma3];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Fields on the negative (first) and positive (second) side.
    pub fn fields(self) -> (FieldId, FieldId) {
        match self {
            InterfaceId::Gamma1 => (FieldId::Matrix, FieldId::Inclusion),
            InterfaceId::Gamma2 => (FieldId::Matrix, FieldId::Macro),
            InterfaceId::Gamma3 => (FieldId::Inclusion, FieldId::Macro),
        }
    }
}

/// Split of one triangle by the zero level of a linear field.
#[derive(Debug, Clone)]
pub struct SubTriangulation {
    pub negative: Vec<[Point; 3]>,
    pub positive: Vec<[Point; 3]>,
    pub segment: (Point, Point),
    /// Unit normal pointing from the negative to the positive side.
    pub normal: Point,
}

/// Splits a cut triangle into its `φ ≤ 0` and `φ ≥ 0` parts.
pub fn subtriangulate(coords: &[Point; 3], values: &[f64; 3]) -> Result<SubTriangulation> {
    if classify_element(*values)? != ElementSign::Cut {
        return Err(Error::Geometry(format!("element with values {values:?} is not cut")));
    }
    let poly: Vec<(Point, f64)> = coords.iter().copied().zip(values.iter().copied()).collect();
    let pts = |side| -> Vec<Point> { clip_polygon(&poly, side).into_iter().map(|p| p.0).collect() };
    let segment =
        zero_chord(coords, values).ok_or_else(|| Error::Geometry(format!("no interface chord for values {values:?}")))?;
    let g = linear_gradient(coords, values);
    Ok(SubTriangulation {
        negative: fan_triangulate(&pts(Side::NonPositive)),
        positive: fan_triangulate(&pts(Side::NonNegative)),
        segment,
        normal: g / g.norm(),
    })
}

/// Gauss points on an interface segment.
pub fn interface_quadrature(a: &Point, b: &Point, order: usize) -> Result<Vec<(Point, f64)>> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidInput(format!("segment quadrature order {order} not supported")));
    }
    if (b - a).norm() == 0.0 {
        return Err(Error::Geometry("zero-length interface segment".into()));
    }
    Ok(segment_rule(a, b, order))
}

/// Physical extent of one field: its extended element set with the
/// sub-triangles that make up the physical part of each element.
#[derive(Debug, Clone)]
pub struct FieldDomain {
    pub field: FieldId,
    /// Active elements (indices into the field's mesh), ascending.
    pub elements: Vec<usize>,
    pub parts: Vec<Vec<[Point; 3]>>,
    /// Element fully physical for this field.
    pub full: Vec<bool>,
    /// Position of each mesh element in `elements`, `usize::MAX` if inactive.
    pub position: Vec<usize>,
}

impl FieldDomain {
    fn new(field: FieldId, mesh_elements: usize) -> Self {
        Self { field, elements: Vec::new(), parts: Vec::new(), full: Vec::new(), position: vec![usize::MAX; mesh_elements] }
    }

    fn push(&mut self, e: usize, parts: Vec<[Point; 3]>, full: bool) {
        self.position[e] = self.elements.len();
        self.elements.push(e);
        self.parts.push(parts);
        self.full.push(full);
    }

    pub fn is_active(&self, e: usize) -> bool {
        self.position[e] != usize::MAX
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn physical_area(&self) -> f64 {
        self.parts.iter().flatten().map(triangle_area).sum()
    }
}

/// Piece of Γ1, Γ2 or Γ3 inside a single pair of elements.
#[derive(Debug, Clone)]
pub struct InterfaceSegment {
    pub interface: InterfaceId,
    pub a: Point,
    pub b: Point,
    /// Unit normal from the negative-side field towards the positive-side one.
    pub normal: Point,
    /// Element of the negative-side field.
    pub neg_element: usize,
    /// Element of the positive-side field.
    pub pos_element: usize,
}

impl InterfaceSegment {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }
}

/// Interior facet penalised for one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostFacet {
    pub facet: usize,
    pub elements: [usize; 2],
    pub length: f64,
}

/// Everything the assembly needs to know about the geometry.
#[derive(Debug, Clone)]
pub struct CutDecomposition {
    pub fields: [FieldDomain; 3],
    pub segments: Vec<InterfaceSegment>,
    pub ghost: [Vec<GhostFacet>; 3],
    /// Coarse elements hosting micro fields (sign class of `φ2^H` not positive).
    pub micro_coarse: Vec<usize>,
    pub coarse_sign: Vec<ElementSign>,
    pub phi1_fine: Vec<f64>,
    pub phi2_coarse: Vec<f64>,
    pub phi2_fine: Vec<f64>,
}

impl CutDecomposition {
    pub fn field(&self, f: FieldId) -> &FieldDomain {
        &self.fields[f.index()]
    }

    pub fn segments_of(&self, id: InterfaceId) -> impl Iterator<Item = &InterfaceSegment> {
        self.segments.iter().filter(move |s| s.interface == id)
    }

    pub fn interface_length(&self, id: InterfaceId) -> f64 {
        self.segments_of(id).map(InterfaceSegment::length).sum()
    }

    pub fn total_physical_area(&self) -> f64 {
        self.fields.iter().map(FieldDomain::physical_area).sum()
    }

    /// `φ2^H` at a point of coarse element `e`.
    pub fn phi2_at(&self, hm: &HierarchicalMesh, e: usize, x: &Point) -> f64 {
        interp(&hm.coarse, &self.phi2_coarse, e, x)
    }

    /// `φ1^h` at a point of fine element `e`.
    pub fn phi1_at(&self, hm: &HierarchicalMesh, e: usize, x: &Point) -> f64 {
        interp(&hm.fine, &self.phi1_fine, e, x)
    }
}

pub fn mesh_of(hm: &HierarchicalMesh, field: FieldId) -> &TriMesh {
    if field.is_micro() {
        &hm.fine
    } else {
        &hm.coarse
    }
}

fn interp(mesh: &TriMesh, values: &[f64], e: usize, x: &Point) -> f64 {
    let l = barycentric(&mesh.triangle(e), x);
    let t = mesh.triangles[e];
    l[0] * values[t[0]] + l[1] * values[t[1]] + l[2] * values[t[2]]
}

fn interp_in(tri: &[Point; 3], vals: &[f64; 3], x: &Point) -> f64 {
    let l = barycentric(tri, x);
    l[0] * vals[0] + l[1] * vals[1] + l[2] * vals[2]
}

fn clip_parts(poly: &[(Point, f64)], side: Side) -> Vec<[Point; 3]> {
    let clipped: Vec<Point> = clip_polygon(poly, side).into_iter().map(|p| p.0).collect();
    if polygon_area(&clipped) > 0.0 {
        fan_triangulate(&clipped)
    } else {
        Vec::new()
    }
}

/// Outward unit normal of local edge `k` of a counter-clockwise triangle.
fn edge_normal(tri: &[Point; 3], k: usize) -> Point {
    let d = tri[(k + 1) % 3] - tri[k];
    Point::new(d.y, -d.x) / d.norm()
}

/// Coarse elements to refine for a zoom: every element not entirely on the
/// macro side of `φ2`, grown by `halo` layers of edge neighbours. Sorted.
pub fn zoom_elements(mesh: &TriMesh, phi2: &NodalField, halo: usize) -> Result<Vec<usize>> {
    let mut marked = vec![false; mesh.triangles.len()];
    for (e, m) in marked.iter_mut().enumerate() {
        *m = classify_element(phi2.element_values(mesh, e))? != ElementSign::AllPositive;
    }
    for _ in 0..halo {
        let grown: Vec<usize> =
            (0..marked.len()).filter(|&e| !marked[e] && mesh.element_neighbours(e).any(|k| marked[k])).collect();
        for e in grown {
            marked[e] = true;
        }
    }
    Ok((0..marked.len()).filter(|&e| marked[e]).collect())
}

/// Builds the decomposition from `φ1^h` (fine vertices) and `φ2^H` (coarse vertices).
pub fn build_domains(hm: &HierarchicalMesh, phi1_fine: &NodalField, phi2_coarse: &NodalField) -> Result<CutDecomposition> {
    let coarse = &hm.coarse;
    let fine = &hm.fine;
    if phi1_fine.values.len() != fine.vertices.len() || phi2_coarse.values.len() != coarse.vertices.len() {
        return Err(Error::Geometry("level-set fields do not match the mesh sizes".into()));
    }
    let phi1 = &phi1_fine.values;
    let phi2c = &phi2_coarse.values;
    let phi2f = hm.prolongate(phi2c);

    let coarse_sign = (0..coarse.triangles.len())
        .map(|e| classify_element(coarse.triangles[e].map(|v| phi2c[v])))
        .collect::<Result<Vec<_>>>()?;
    let micro_coarse: Vec<usize> = (0..coarse.triangles.len()).filter(|&e| coarse_sign[e] != ElementSign::AllPositive).collect();
    if hm.levels > 0 {
        if let Some(&e) = micro_coarse.iter().find(|&&e| !hm.refined[e]) {
            return Err(Error::Geometry(format!(
                "coarse element {e} intersects the zoom but is not refined; refine the zoom region and its neighbours"
            )));
        }
    }

    let mut macro_dom = FieldDomain::new(FieldId::Macro, coarse.triangles.len());
    for (e, sign) in coarse_sign.iter().enumerate() {
        let tri = coarse.triangle(e);
        match sign {
            ElementSign::AllPositive => macro_dom.push(e, vec![tri], true),
            ElementSign::AllNonPositive => {}
            ElementSign::Cut => {
                let vals = coarse.triangles[e].map(|v| phi2c[v]);
                let poly: Vec<(Point, f64)> = tri.iter().copied().zip(vals).collect();
                let parts = clip_parts(&poly, Side::NonNegative);
                if !parts.is_empty() {
                    macro_dom.push(e, parts, false);
                }
            }
        }
    }

    let nf = fine.triangles.len();
    let mut matrix_dom = FieldDomain::new(FieldId::Matrix, nf);
    let mut incl_dom = FieldDomain::new(FieldId::Inclusion, nf);
    let mut fine_sign2 = vec![ElementSign::AllPositive; nf];
    let mut fine_sign1 = vec![ElementSign::AllPositive; nf];
    let mut micro_children: Vec<usize> = micro_coarse.iter().flat_map(|&c| hm.children[c].iter().copied()).collect();
    micro_children.sort_unstable();
    for &e in &micro_children {
        let t = fine.triangles[e];
        let tri = fine.triangle(e);
        let v2 = t.map(|v| phi2f[v]);
        let v1 = t.map(|v| phi1[v]);
        let s2 = classify_element(v2)?;
        let s1 = classify_element(v1)?;
        fine_sign2[e] = s2;
        fine_sign1[e] = s1;
        let micro_poly: Vec<Point> = match s2 {
            ElementSign::AllPositive => continue,
            ElementSign::AllNonPositive => tri.to_vec(),
            ElementSign::Cut => {
                let poly: Vec<(Point, f64)> = tri.iter().copied().zip(v2).collect();
                clip_polygon(&poly, Side::NonPositive).into_iter().map(|p| p.0).collect()
            }
        };
        if micro_poly.len() < 3 {
            continue;
        }
        let with_phi1: Vec<(Point, f64)> = micro_poly
            .iter()
            .map(|p| {
                let exact = tri.iter().position(|q| q == p);
                (*p, exact.map_or_else(|| interp_in(&tri, &v1, p), |k| v1[k]))
            })
            .collect();
        let whole = s2 == ElementSign::AllNonPositive;
        let m = clip_parts(&with_phi1, Side::NonPositive);
        if !m.is_empty() {
            matrix_dom.push(e, m, whole && s1 == ElementSign::AllNonPositive);
        }
        let i = clip_parts(&with_phi1, Side::NonNegative);
        if !i.is_empty() {
            incl_dom.push(e, i, whole && s1 == ElementSign::AllPositive);
        }
    }

    let macro_dom = drop_islands(macro_dom, coarse);
    let matrix_dom = drop_islands(matrix_dom, fine);
    let incl_dom = drop_islands(incl_dom, fine);

    let mut segments = Vec::new();
    let push_micro_macro =
        |segments: &mut Vec<InterfaceSegment>, a: Point, b: Point, f1a: f64, f1b: f64, n: Point, e: usize, big: usize| {
            if let Some((p, q)) = clip_segment(a, b, f1a, f1b, Side::NonPositive) {
                if matrix_dom.is_active(e) {
                    segments.push(InterfaceSegment {
                        interface: InterfaceId::Gamma2,
                        a: p,
                        b: q,
                        normal: n,
                        neg_element: e,
                        pos_element: big,
                    });
                }
            }
            if let Some((p, q)) = clip_segment(a, b, f1a, f1b, Side::NonNegative) {
                if incl_dom.is_active(e) {
                    segments.push(InterfaceSegment {
                        interface: InterfaceId::Gamma3,
                        a: p,
                        b: q,
                        normal: n,
                        neg_element: e,
                        pos_element: big,
                    });
                }
            }
        };

    for &e in &micro_children {
        let t = fine.triangles[e];
        let tri = fine.triangle(e);
        let v1 = t.map(|v| phi1[v]);
        let v2 = t.map(|v| phi2f[v]);
        if fine_sign1[e] == ElementSign::Cut {
            if let Some((a, b)) = zero_chord(&tri, &v1) {
                let (fa, fb) = (interp_in(&tri, &v2, &a), interp_in(&tri, &v2, &b));
                if let Some((p, q)) = clip_segment(a, b, fa, fb, Side::NonPositive) {
                    if matrix_dom.is_active(e) && incl_dom.is_active(e) {
                        let g = linear_gradient(&tri, &v1);
                        segments.push(InterfaceSegment {
                            interface: InterfaceId::Gamma1,
                            a: p,
                            b: q,
                            normal: g / g.norm(),
                            neg_element: e,
                            pos_element: e,
                        });
                    }
                }
            }
        }
        if fine_sign2[e] == ElementSign::Cut {
            let big = hm.parent[e];
            if !macro_dom.is_active(big) {
                continue;
            }
            if let Some((a, b)) = zero_chord(&tri, &v2) {
                let g = linear_gradient(&coarse.triangle(big), &coarse.triangles[big].map(|v| phi2c[v]));
                let (fa, fb) = (interp_in(&tri, &v1, &a), interp_in(&tri, &v1, &b));
                push_micro_macro(&mut segments, a, b, fa, fb, g / g.norm(), e, big);
            }
        }
    }

    // interfaces lying exactly on fine facets
    for facet in &fine.facets {
        if facet.is_boundary() {
            continue;
        }
        let [va, vb] = facet.vertices;
        let [e0, e1] = facet.elements;
        if phi2f[va] == 0.0 && phi2f[vb] == 0.0 {
            let side = |e: usize| classify_element(fine.triangles[e].map(|v| phi2f[v])).ok();
            let pick = match (side(e0), side(e1)) {
                (Some(ElementSign::AllNonPositive), Some(ElementSign::AllPositive)) => Some((0, e0, e1)),
                (Some(ElementSign::AllPositive), Some(ElementSign::AllNonPositive)) => Some((1, e1, e0)),
                _ => None,
            };
            if let Some((s, em, ep)) = pick {
                let big = hm.parent[ep];
                if macro_dom.is_active(big) && (matrix_dom.is_active(em) || incl_dom.is_active(em)) {
                    let tri = fine.triangle(em);
                    let k = facet.local[s];
                    let t = fine.triangles[em];
                    let (a, b) = (tri[k], tri[(k + 1) % 3]);
                    let (fa, fb) = (phi1[t[k]], phi1[t[(k + 1) % 3]]);
                    push_micro_macro(&mut segments, a, b, fa, fb, edge_normal(&tri, k), em, big);
                }
            }
        }
        if phi1[va] == 0.0 && phi1[vb] == 0.0 {
            let side = |e: usize| classify_element(fine.triangles[e].map(|v| phi1[v])).ok();
            let pick = match (side(e0), side(e1)) {
                (Some(ElementSign::AllNonPositive), Some(ElementSign::AllPositive)) => Some((0, e0, e1)),
                (Some(ElementSign::AllPositive), Some(ElementSign::AllNonPositive)) => Some((1, e1, e0)),
                _ => None,
            };
            if let Some((s, em, ei)) = pick {
                if matrix_dom.is_active(em) && incl_dom.is_active(ei) {
                    let tri = fine.triangle(em);
                    let k = facet.local[s];
                    let t = fine.triangles[em];
                    let (a, b) = (tri[k], tri[(k + 1) % 3]);
                    if let Some((p, q)) = clip_segment(a, b, phi2f[t[k]], phi2f[t[(k + 1) % 3]], Side::NonPositive) {
                        segments.push(InterfaceSegment {
                            interface: InterfaceId::Gamma1,
                            a: p,
                            b: q,
                            normal: edge_normal(&tri, k),
                            neg_element: em,
                            pos_element: ei,
                        });
                    }
                }
            }
        }
    }
    for s in &segments {
        if !(s.normal.norm() - 1.0).abs().lt(&1e-12) {
            return Err(Error::Geometry(format!("degenerate interface normal on {:?}", s.interface)));
        }
    }

    let fields = [matrix_dom, incl_dom, macro_dom];
    let ghost = [ghost_facets_of(&fields[0], fine), ghost_facets_of(&fields[1], fine), ghost_facets_of(&fields[2], coarse)];
    Ok(CutDecomposition {
        fields,
        segments,
        ghost,
        micro_coarse,
        coarse_sign,
        phi1_fine: phi1.clone(),
        phi2_coarse: phi2c.clone(),
        phi2_fine: phi2f,
    })
}

/// Islands below this fraction of their smallest element are dropped.
const ISLAND_FRACTION: f64 = 0.01;

/// Removes connected groups of active elements that contain no uncut
/// element and together hold less than `ISLAND_FRACTION` of the area of
/// their smallest element. Such slivers, typically a pore or inclusion
/// shaved by the zoom boundary, are tied to the rest only through a tiny
/// interface, which no ghost facet can stabilise.
fn drop_islands(dom: FieldDomain, mesh: &TriMesh) -> FieldDomain {
    let n = dom.elements.len();
    let mut group = vec![usize::MAX; n];
    let mut keep = vec![true; n];
    for start in 0..n {
        if group[start] != usize::MAX {
            continue;
        }
        group[start] = start;
        let mut members = vec![start];
        let mut k = 0;
        while k < members.len() {
            let e = dom.elements[members[k]];
            for nb in mesh.element_neighbours(e) {
                let p = dom.position[nb];
                if p != usize::MAX && group[p] == usize::MAX {
                    group[p] = start;
                    members.push(p);
                }
            }
            k += 1;
        }
        if members.iter().any(|&p| dom.full[p]) {
            continue;
        }
        let area: f64 = members.iter().flat_map(|&p| &dom.parts[p]).map(triangle_area).sum();
        let smallest = members.iter().map(|&p| mesh.area(dom.elements[p])).fold(f64::INFINITY, f64::min);
        if area < ISLAND_FRACTION * smallest {
            for &p in &members {
                keep[p] = false;
            }
        }
    }
    if keep.iter().all(|k| *k) {
        return dom;
    }
    let mut out = FieldDomain::new(dom.field, dom.position.len());
    for (p, e) in dom.elements.iter().enumerate() {
        if keep[p] {
            out.push(*e, dom.parts[p].clone(), dom.full[p]);
        }
    }
    out
}

fn ghost_facets_of(dom: &FieldDomain, mesh: &TriMesh) -> Vec<GhostFacet> {
    let mut out = Vec::new();
    for (id, facet) in mesh.facets.iter().enumerate() {
        if facet.is_boundary() {
            continue;
        }
        let [a, b] = facet.elements;
        let (pa, pb) = (dom.position[a], dom.position[b]);
        if pa == usize::MAX || pb == usize::MAX {
            continue;
        }
        if dom.full[pa] && dom.full[pb] {
            continue;
        }
        out.push(GhostFacet { facet: id, elements: [a, b], length: mesh.facet_length(id) });
    }
    out
}

/// Ghost facets of one field: interior facets between two active elements
/// at least one of which is only partially physical.
pub fn ghost_facets(decomp: &CutDecomposition, field: FieldId) -> &[GhostFacet] {
    &decomp.ghost[field.index()]
}
