//! Small planar geometry kit shared by the mesh, cut and assembly code.
//!
//! Everything here works on straight-sided triangles and convex polygons
//! carrying a linear scalar field sampled at their corners.

use nalgebra::Vector2;

pub type Point = Vector2<f64>;

/// Signed area of the triangle `(a, b, c)`; positive for counter-clockwise order.
#[inline]
pub fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

#[inline]
pub fn triangle_area(tri: &[Point; 3]) -> f64 {
    signed_area(&tri[0], &tri[1], &tri[2])
}

pub fn polygon_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        twice += p.x * q.y - q.x * p.y;
    }
    0.5 * twice
}

pub fn centroid(tri: &[Point; 3]) -> Point {
    (tri[0] + tri[1] + tri[2]) / 3.0
}

/// Barycentric coordinates of `x` with respect to `tri`.
pub fn barycentric(tri: &[Point; 3], x: &Point) -> [f64; 3] {
    let area = triangle_area(tri);
    let l0 = signed_area(x, &tri[1], &tri[2]) / area;
    let l1 = signed_area(&tri[0], x, &tri[2]) / area;
    [l0, l1, 1.0 - l0 - l1]
}

/// Gradients of the three linear hat functions of `tri` together with its area.
pub fn p1_gradients(tri: &[Point; 3]) -> ([Point; 3], f64) {
    let area = triangle_area(tri);
    let inv = 0.5 / area;
    let mut grads = [Point::zeros(); 3];
    for k in 0..3 {
        let b = tri[(k + 1) % 3];
        let c = tri[(k + 2) % 3];
        grads[k] = Point::new((b.y - c.y) * inv, (c.x - b.x) * inv);
    }
    (grads, area)
}

/// Gradient of the linear interpolant of `values` over `tri`.
pub fn linear_gradient(tri: &[Point; 3], values: &[f64; 3]) -> Point {
    let (grads, _) = p1_gradients(tri);
    grads[0] * values[0] + grads[1] * values[1] + grads[2] * values[2]
}

/// Which half of a sign split to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `φ ≤ 0`
    NonPositive,
    /// `φ ≥ 0`
    NonNegative,
}

impl Side {
    #[inline]
    fn contains(self, value: f64) -> bool {
        match self {
            Side::NonPositive => value <= 0.0,
            Side::NonNegative => value >= 0.0,
        }
    }
}

#[inline]
fn crossing(p: &Point, q: &Point, fp: f64, fq: f64) -> Point {
    let t = fp / (fp - fq);
    p + (q - p) * t
}

/// Sutherland-Hodgman clip of a convex polygon against one side of the zero
/// level of a linear field. Crossing points carry the value `0.0` exactly.
pub fn clip_polygon(poly: &[(Point, f64)], side: Side) -> Vec<(Point, f64)> {
    let n = poly.len();
    let mut out: Vec<(Point, f64)> = Vec::with_capacity(n + 2);
    for k in 0..n {
        let (p, fp) = poly[k];
        let (q, fq) = poly[(k + 1) % n];
        if side.contains(fp) {
            out.push((p, fp));
        }
        if fp * fq < 0.0 {
            out.push((crossing(&p, &q, fp, fq), 0.0));
        }
    }
    out.dedup_by(|a, b| a.0 == b.0);
    if out.len() > 1 && out[0].0 == out[out.len() - 1].0 {
        out.pop();
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}

/// Fan triangulation of a convex polygon; degenerate slivers of exactly
/// vanishing area are dropped.
pub fn fan_triangulate(poly: &[Point]) -> Vec<[Point; 3]> {
    let mut tris = Vec::new();
    if poly.len() < 3 {
        return tris;
    }
    for k in 1..poly.len() - 1 {
        let tri = [poly[0], poly[k], poly[k + 1]];
        if triangle_area(&tri) > 0.0 {
            tris.push(tri);
        }
    }
    tris
}

/// Restricts the segment `a`-`b` to one side of a linear field with end
/// values `fa`, `fb`. Returns `None` when nothing of positive length remains.
pub fn clip_segment(a: Point, b: Point, fa: f64, fb: f64, side: Side) -> Option<(Point, Point)> {
    let ina = side.contains(fa);
    let inb = side.contains(fb);
    let (p, q) = match (ina, inb) {
        (true, true) => (a, b),
        (false, false) => return None,
        (true, false) => {
            if fa * fb < 0.0 {
                (a, crossing(&a, &b, fa, fb))
            } else {
                return None;
            }
        }
        (false, true) => {
            if fa * fb < 0.0 {
                (crossing(&a, &b, fa, fb), b)
            } else {
                return None;
            }
        }
    };
    if (q - p).norm() > 0.0 {
        Some((p, q))
    } else {
        None
    }
}

/// Zero-level chord of a linear field over a triangle with strictly mixed signs.
pub fn zero_chord(tri: &[Point; 3], values: &[f64; 3]) -> Option<(Point, Point)> {
    let mut pts: Vec<Point> = Vec::with_capacity(3);
    for k in 0..3 {
        let (p, fp) = (tri[k], values[k]);
        let (q, fq) = (tri[(k + 1) % 3], values[(k + 1) % 3]);
        if fp == 0.0 {
            pts.push(p);
        } else if fp * fq < 0.0 {
            pts.push(crossing(&p, &q, fp, fq));
        }
    }
    pts.dedup();
    if pts.len() == 2 && (pts[1] - pts[0]).norm() > 0.0 {
        Some((pts[0], pts[1]))
    } else {
        None
    }
}

/// Points and weights of a symmetric 3-point rule, exact for quadratics.
pub fn triangle_rule_deg2(tri: &[Point; 3]) -> [(Point, f64); 3] {
    let area = triangle_area(tri);
    let w = area / 3.0;
    let at = |l0: f64, l1: f64, l2: f64| tri[0] * l0 + tri[1] * l1 + tri[2] * l2;
    const A: f64 = 2.0 / 3.0;
    const B: f64 = 1.0 / 6.0;
    [(at(A, B, B), w), (at(B, A, B), w), (at(B, B, A), w)]
}

/// Seven-point rule exact for polynomials of degree five.
pub fn triangle_rule_deg5(tri: &[Point; 3]) -> Vec<(Point, f64)> {
    let area = triangle_area(tri);
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let b1 = (9.0 + 2.0 * s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let b2 = (9.0 - 2.0 * s15) / 21.0;
    let w0 = 9.0 / 40.0;
    let w1 = (155.0 - s15) / 1200.0;
    let w2 = (155.0 + s15) / 1200.0;
    let at = |l0: f64, l1: f64, l2: f64| tri[0] * l0 + tri[1] * l1 + tri[2] * l2;
    vec![
        (at(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0), w0 * area),
        (at(b1, a1, a1), w1 * area),
        (at(a1, b1, a1), w1 * area),
        (at(a1, a1, b1), w1 * area),
        (at(b2, a2, a2), w2 * area),
        (at(a2, b2, a2), w2 * area),
        (at(a2, a2, b2), w2 * area),
    ]
}

/// Gauss-Legendre points on a segment. Only orders 1 and 2 are provided.
pub fn segment_rule(a: &Point, b: &Point, order: usize) -> Vec<(Point, f64)> {
    let len = (b - a).norm();
    match order {
        1 => vec![((a + b) * 0.5, len)],
        _ => {
            let g = 0.5 / 3f64.sqrt();
            vec![(a + (b - a) * (0.5 - g), 0.5 * len), (a + (b - a) * (0.5 + g), 0.5 * len)]
        }
    }
}

/// Lexicographic bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        Self { min, max }
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> [Point; 3] {
        [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]
    }

    #[test]
    fn hat_gradients_sum_to_zero() {
        let tri = [Point::new(0.3, -0.2), Point::new(1.7, 0.4), Point::new(0.1, 2.0)];
        let (g, area) = p1_gradients(&tri);
        assert!(area > 0.0);
        let s = g[0] + g[1] + g[2];
        assert!(s.norm() < 1e-14);
    }

    #[test]
    fn clip_half_of_unit_triangle() {
        let tri = unit();
        let vals = [-1.0, 1.0, 1.0];
        let poly: Vec<_> = tri.iter().copied().zip(vals).collect();
        let neg = clip_polygon(&poly, Side::NonPositive);
        let pos = clip_polygon(&poly, Side::NonNegative);
        let pts = |p: &Vec<(Point, f64)>| p.iter().map(|x| x.0).collect::<Vec<_>>();
        assert_relative_eq!(polygon_area(&pts(&neg)), 0.125, epsilon = 1e-15);
        assert_relative_eq!(polygon_area(&pts(&pos)), 0.375, epsilon = 1e-15);
    }

    #[test]
    fn clip_through_vertex() {
        let tri = unit();
        let vals = [0.0, -1.0, 1.0];
        let poly: Vec<_> = tri.iter().copied().zip(vals).collect();
        let neg: Vec<Point> = clip_polygon(&poly, Side::NonPositive).iter().map(|p| p.0).collect();
        let pos: Vec<Point> = clip_polygon(&poly, Side::NonNegative).iter().map(|p| p.0).collect();
        assert_relative_eq!(polygon_area(&neg) + polygon_area(&pos), 0.5, epsilon = 1e-15);
        assert_eq!(fan_triangulate(&neg).len(), 1);
        let (a, b) = zero_chord(&tri, &vals).unwrap();
        assert!(a == Point::zeros() || b == Point::zeros());
    }

    #[test]
    fn degree5_rule_integrates_quintic() {
        let tri = unit();
        // ∫ x^2 y^3 over the unit triangle = 2! 3! / 7! = 12/5040
        let v: f64 = triangle_rule_deg5(&tri).iter().map(|(p, w)| w * p.x.powi(2) * p.y.powi(3)).sum();
        assert_relative_eq!(v, 12.0 / 5040.0, epsilon = 1e-15);
        let q: f64 = triangle_rule_deg2(&tri).iter().map(|(p, w)| w * p.x * p.y).sum();
        assert_relative_eq!(q, 1.0 / 24.0, epsilon = 1e-15);
    }

    #[test]
    fn segment_clip_keeps_negative_part() {
        let (p, q) = clip_segment(Point::new(0.0, 0.0), Point::new(2.0, 0.0), -1.0, 1.0, Side::NonPositive).unwrap();
        assert_eq!(p, Point::new(0.0, 0.0));
        assert_relative_eq!(q.x, 1.0);
        assert!(clip_segment(Point::new(0.0, 0.0), Point::new(1.0, 0.0), 0.0, 1.0, Side::NonPositive).is_none());
    }
}
