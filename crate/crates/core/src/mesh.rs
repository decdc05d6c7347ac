//! Background triangulations and their hierarchical refinement.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{signed_area, BoundingBox, Point};

/// Axis-aligned rectangle `[min.x, max.x] × [min.y, max.y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }

    fn contains(&self, p: &Point) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }
}

/// How each grid cell is split into two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalPattern {
    /// Diagonal direction flips with the parity of `i + j` (crisscross).
    #[default]
    Alternating,
    /// Every cell split along the same diagonal.
    Uniform,
}

/// Background grid and refinement depth of a two-scale discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// Union of rectangles forming the domain.
    pub domain: Vec<Rect>,
    /// Coarse cell size `H`.
    pub h_coarse: f64,
    /// Red refinement levels inside the zoom; `h = H / 2^levels`.
    pub levels: u32,
    /// Extra layers of coarse elements refined around the zoom.
    #[serde(default = "default_halo")]
    pub halo: usize,
    #[serde(default)]
    pub pattern: DiagonalPattern,
}

fn default_halo() -> usize {
    1
}

impl MeshSpec {
    pub fn h_fine(&self) -> f64 {
        self.h_coarse / f64::from(1u32 << self.levels)
    }
}

/// Edge shared by one or two triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    /// Endpoints with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    pub elements: [usize; 2],
    /// Local edge index inside each adjacent element.
    pub local: [usize; 2],
    pub count: usize,
    pub tag: Option<String>,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.count == 1
    }

    pub fn neighbours(&self) -> &[usize] {
        &self.elements[..self.count]
    }
}

/// Facet table of a triangulation: facets sorted by endpoint pair, and for
/// every element the facet id of local edge `k` (from vertex `k` to `k+1`).
#[derive(Debug, Clone, PartialEq)]
pub struct FacetTable {
    pub facets: Vec<Facet>,
    pub element_facets: Vec<[usize; 3]>,
}

/// Conforming triangulation with facet connectivity and boundary tags.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub facets: Vec<Facet>,
    pub element_facets: Vec<[usize; 3]>,
}

pub type BackgroundMesh = TriMesh;

impl TriMesh {
    /// Builds connectivity and tags boundary facets by side.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for (e, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("triangle {e} references a vertex out of range")));
            }
            let a = signed_area(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]);
            if !(a > 0.0) {
                return Err(Error::Mesh(format!("triangle {e} has non-positive area {a}")));
            }
        }
        let table = facet_neighbors(&triangles)?;
        let mut mesh = Self { vertices, triangles, facets: table.facets, element_facets: table.element_facets };
        mesh.tag_boundary();
        Ok(mesh)
    }

    pub fn triangle(&self, e: usize) -> [Point; 3] {
        let t = self.triangles[e];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn area(&self, e: usize) -> f64 {
        let t = self.triangles[e];
        signed_area(&self.vertices[t[0]], &self.vertices[t[1]], &self.vertices[t[2]])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|e| self.area(e)).sum()
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::of_points(&self.vertices)
    }

    pub fn facet_length(&self, f: usize) -> f64 {
        let [a, b] = self.facets[f].vertices;
        (self.vertices[b] - self.vertices[a]).norm()
    }

    pub fn interior_facet_count(&self) -> usize {
        self.facets.iter().filter(|f| !f.is_boundary()).count()
    }

    /// Elements sharing a facet with `e`.
    pub fn element_neighbours(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        self.element_facets[e].iter().filter_map(move |&f| {
            let facet = &self.facets[f];
            facet.neighbours().iter().copied().find(|&k| k != e)
        })
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.facets.len()).map(|f| self.facet_length(f)).fold(0.0, f64::max)
    }

    /// Boundary facets on the extreme sides of the bounding box get the
    /// side name; any other boundary facet gets `inner_<side>` after its
    /// outward normal.
    fn tag_boundary(&mut self) {
        let bb = self.bounding_box();
        for f in 0..self.facets.len() {
            if !self.facets[f].is_boundary() {
                continue;
            }
            let e = self.facets[f].elements[0];
            let k = self.facets[f].local[0];
            let t = self.triangles[e];
            let a = self.vertices[t[k]];
            let b = self.vertices[t[(k + 1) % 3]];
            let d = b - a;
            // counter-clockwise elements: outward normal is the tangent turned clockwise
            let n = Point::new(d.y, -d.x);
            let side = if n.x.abs() >= n.y.abs() {
                if n.x > 0.0 {
                    ("right", a.x == bb.max.x && b.x == bb.max.x)
                } else {
                    ("left", a.x == bb.min.x && b.x == bb.min.x)
                }
            } else if n.y > 0.0 {
                ("top", a.y == bb.max.y && b.y == bb.max.y)
            } else {
                ("bottom", a.y == bb.min.y && b.y == bb.min.y)
            };
            self.facets[f].tag = Some(if side.1 { side.0.to_string() } else { format!("inner_{}", side.0) });
        }
    }

    /// Names of all boundary tags present.
    pub fn boundary_tags(&self) -> Vec<String> {
        let mut tags: Vec<String> = self.facets.iter().filter_map(|f| f.tag.clone()).collect();
        tags.sort();
        tags.dedup();
        tags
    }
}

/// Facet connectivity of a triangle list. Facets are ordered by their
/// sorted endpoint pair, which makes the table independent of element order
/// within a facet.
pub fn facet_neighbors(triangles: &[[usize; 3]]) -> Result<FacetTable> {
    let mut map: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (e, t) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            map.entry((a.min(b), a.max(b))).or_default().push((e, k));
        }
    }
    let mut facets = Vec::with_capacity(map.len());
    let mut element_facets = vec![[usize::MAX; 3]; triangles.len()];
    for ((a, b), adj) in map {
        if adj.len() > 2 {
            return Err(Error::Mesh(format!("non-manifold facet ({a}, {b}) with {} neighbours", adj.len())));
        }
        let id = facets.len();
        let mut elements = [usize::MAX; 2];
        let mut local = [usize::MAX; 2];
        for (s, &(e, k)) in adj.iter().enumerate() {
            elements[s] = e;
            local[s] = k;
            element_facets[e][k] = id;
        }
        facets.push(Facet { vertices: [a, b], elements, local, count: adj.len(), tag: None });
    }
    Ok(FacetTable { facets, element_facets })
}

fn grid_lines(bounds: &mut Vec<f64>, h: f64) -> Vec<f64> {
    bounds.sort_by(|a, b| a.total_cmp(b));
    bounds.dedup();
    let mut lines = vec![bounds[0]];
    for w in bounds.windows(2) {
        let len = w[1] - w[0];
        let n = ((len / h) - 1e-9).ceil().max(1.0) as usize;
        for k in 1..n {
            lines.push(w[0] + len * k as f64 / n as f64);
        }
        lines.push(w[1]);
    }
    lines
}

/// Structured triangulation of a union of axis-aligned rectangles with
/// grid spacing at most `h` along both axes.
pub fn build_structured_mesh(domain: &[Rect], h: f64, pattern: DiagonalPattern) -> Result<TriMesh> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("mesh size must be positive, got {h}")));
    }
    if domain.is_empty() {
        return Err(Error::InvalidInput("domain has no rectangles".into()));
    }
    for r in domain {
        let ok = (0..2).all(|d| r.min[d].is_finite() && r.max[d].is_finite() && r.max[d] > r.min[d]);
        if !ok {
            return Err(Error::InvalidInput(format!("degenerate rectangle {:?}–{:?}", r.min, r.max)));
        }
    }
    let mut bx: Vec<f64> = domain.iter().flat_map(|r| [r.min[0], r.max[0]]).collect();
    let mut by: Vec<f64> = domain.iter().flat_map(|r| [r.min[1], r.max[1]]).collect();
    let xs = grid_lines(&mut bx, h);
    let ys = grid_lines(&mut by, h);
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);

    let mut keep = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let c = Point::new(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
            keep[j * nx + i] = domain.iter().any(|r| r.contains(&c));
        }
    }
    let mut used = vec![false; (nx + 1) * (ny + 1)];
    for j in 0..ny {
        for i in 0..nx {
            if keep[j * nx + i] {
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    used[(j + dj) * (nx + 1) + i + di] = true;
                }
            }
        }
    }
    let mut index = vec![usize::MAX; used.len()];
    let mut vertices = Vec::new();
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            let g = j * (nx + 1) + i;
            if used[g] {
                index[g] = vertices.len();
                vertices.push(Point::new(x, y));
            }
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            if !keep[j * nx + i] {
                continue;
            }
            let v = |di: usize, dj: usize| index[(j + dj) * (nx + 1) + i + di];
            let (v00, v10, v01, v11) = (v(0, 0), v(1, 0), v(0, 1), v(1, 1));
            let flip = pattern == DiagonalPattern::Alternating && (i + j) % 2 == 1;
            if flip {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            } else {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
    }
    TriMesh::new(vertices, triangles)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum VertexKey {
    Coarse(usize),
    /// Lattice point `k` of `n` along the coarse edge `lo`–`hi`, counted from `lo`.
    Edge(usize, usize, usize),
    Interior(usize, usize, usize),
    Centroid(usize),
}

/// Coarse mesh, its refined counterpart and the bookkeeping between them.
#[derive(Debug, Clone)]
pub struct HierarchicalMesh {
    pub coarse: TriMesh,
    pub fine: TriMesh,
    /// Number of red refinement levels applied to selected elements.
    pub levels: u32,
    /// Coarse element that contains each fine element.
    pub parent: Vec<usize>,
    /// Fine elements tiling each coarse element.
    pub children: Vec<Vec<usize>>,
    /// Refinement level of each fine element; 0 for copies and transition triangles.
    pub level: Vec<u32>,
    pub refined: Vec<bool>,
    /// Coarse interpolation weights of every fine vertex, padded with zero weights.
    pub vertex_weights: Vec<[(usize, f64); 3]>,
}

impl HierarchicalMesh {
    /// Value at each fine vertex of a field that is linear on every coarse element.
    pub fn prolongate(&self, coarse_values: &[f64]) -> Vec<f64> {
        self.vertex_weights
            .iter()
            .map(|w| w.iter().map(|&(v, c)| if c == 0.0 { 0.0 } else { c * coarse_values[v] }).sum())
            .collect()
    }

    /// Nominal fine mesh size relative to the coarse one.
    pub fn subdivisions(&self) -> usize {
        1 << self.levels
    }
}

/// Refines the selected coarse elements `levels` times (each level splits a
/// triangle into four similar ones). Unrefined elements touching refined ones
/// are split into a fan around their centroid so that the fine mesh stays
/// conforming.
pub fn refine_hierarchical(mesh: &TriMesh, elements: &[usize], levels: u32) -> Result<HierarchicalMesh> {
    let ne = mesh.triangles.len();
    if let Some(&e) = elements.iter().find(|&&e| e >= ne) {
        return Err(Error::Mesh(format!("element {e} out of range (mesh has {ne})")));
    }
    if levels > 0 && elements.is_empty() {
        return Err(Error::InvalidInput("refinement requested for an empty element set".into()));
    }
    if levels > 12 {
        return Err(Error::InvalidInput(format!("{levels} refinement levels is excessive")));
    }
    let mut refined = vec![false; ne];
    if levels > 0 {
        for &e in elements {
            refined[e] = true;
        }
    }
    let n = 1usize << levels;

    let mut keys: HashMap<VertexKey, usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut weights: Vec<[(usize, f64); 3]> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut parent = Vec::new();
    let mut level = Vec::new();
    let mut children = vec![Vec::new(); ne];

    let cv = &mesh.vertices;
    let mut vertex = |key: VertexKey| -> usize {
        if let Some(&id) = keys.get(&key) {
            return id;
        }
        let (p, w) = match key {
            VertexKey::Coarse(v) => (cv[v], [(v, 1.0), (0, 0.0), (0, 0.0)]),
            VertexKey::Edge(lo, hi, k) => {
                let t = k as f64 / n as f64;
                (cv[lo] + (cv[hi] - cv[lo]) * t, [(lo, 1.0 - t), (hi, t), (0, 0.0)])
            }
            VertexKey::Interior(e, i, j) => {
                let [a, b, c] = mesh.triangles[e];
                let (si, sj) = (i as f64 / n as f64, j as f64 / n as f64);
                let p = cv[a] + (cv[b] - cv[a]) * si + (cv[c] - cv[a]) * sj;
                (p, [(a, 1.0 - si - sj), (b, si), (c, sj)])
            }
            VertexKey::Centroid(e) => {
                let [a, b, c] = mesh.triangles[e];
                let third = 1.0 / 3.0;
                ((cv[a] + cv[b] + cv[c]) / 3.0, [(a, third), (b, third), (c, third)])
            }
        };
        let id = vertices.len();
        vertices.push(p);
        weights.push(w);
        keys.insert(key, id);
        id
    };
    for v in 0..cv.len() {
        vertex(VertexKey::Coarse(v));
    }
    let edge_key = |u: usize, v: usize, k_from_u: usize| -> VertexKey {
        if k_from_u == 0 {
            VertexKey::Coarse(u)
        } else if k_from_u == n {
            VertexKey::Coarse(v)
        } else if u < v {
            VertexKey::Edge(u, v, k_from_u)
        } else {
            VertexKey::Edge(v, u, n - k_from_u)
        }
    };

    for e in 0..ne {
        let [a, b, c] = mesh.triangles[e];
        if refined[e] {
            let lattice = |i: usize, j: usize| -> VertexKey {
                if j == 0 {
                    edge_key(a, b, i)
                } else if i == 0 {
                    edge_key(a, c, j)
                } else if i + j == n {
                    edge_key(b, c, j)
                } else {
                    VertexKey::Interior(e, i, j)
                }
            };
            for j in 0..n {
                for i in 0..n - j {
                    let up = [lattice(i, j), lattice(i + 1, j), lattice(i, j + 1)];
                    let t = [vertex(up[0]), vertex(up[1]), vertex(up[2])];
                    children[e].push(triangles.len());
                    triangles.push(t);
                    parent.push(e);
                    level.push(levels);
                    if i + j + 2 <= n {
                        let down = [lattice(i + 1, j), lattice(i + 1, j + 1), lattice(i, j + 1)];
                        let t = [vertex(down[0]), vertex(down[1]), vertex(down[2])];
                        children[e].push(triangles.len());
                        triangles.push(t);
                        parent.push(e);
                        level.push(levels);
                    }
                }
            }
            continue;
        }
        let corners = [a, b, c];
        let mut poly: Vec<usize> = Vec::with_capacity(3 * n);
        let mut hanging = false;
        for k in 0..3 {
            let (u, v) = (corners[k], corners[(k + 1) % 3]);
            poly.push(vertex(VertexKey::Coarse(u)));
            let f = mesh.element_facets[e][k];
            let other = mesh.facets[f].neighbours().iter().copied().find(|&o| o != e);
            if other.is_some_and(|o| refined[o]) {
                hanging = true;
                for s in 1..n {
                    poly.push(vertex(edge_key(u, v, s)));
                }
            }
        }
        if !hanging {
            children[e].push(triangles.len());
            triangles.push([poly[0], poly[1], poly[2]]);
            parent.push(e);
            level.push(0);
            continue;
        }
        let centre = vertex(VertexKey::Centroid(e));
        for k in 0..poly.len() {
            children[e].push(triangles.len());
            triangles.push([centre, poly[k], poly[(k + 1) % poly.len()]]);
            parent.push(e);
            level.push(0);
        }
    }

    let fine = TriMesh::new(vertices, triangles)?;
    Ok(HierarchicalMesh { coarse: mesh.clone(), fine, levels, parent, children, level, refined, vertex_weights: weights })
}
