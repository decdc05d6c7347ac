//! Analytic level-set descriptions and their nodal interpolants.
//!
//! Sign convention: a primitive is negative inside the region it describes.
//! For the microstructure field the matrix is `φ1 < 0` and the pores or
//! inclusions are `φ1 > 0`; for the zoom field the macro domain is `φ2 > 0`
//! and the zoom is `φ2 ≤ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::TriMesh;

/// Composable signed-distance description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevelSet {
    /// Negative inside the disk.
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    /// Negative on the side opposite to `normal`.
    HalfPlane {
        point: [f64; 2],
        normal: [f64; 2],
    },
    /// Negative inside the box.
    Rectangle {
        min: [f64; 2],
        max: [f64; 2],
    },
    /// Union of equal disks centred on a regular grid; odd rows may be shifted
    /// by `row_shift` (as a fraction of the x spacing).
    CircleLattice {
        origin: [f64; 2],
        spacing: [f64; 2],
        counts: [usize; 2],
        radius: f64,
        #[serde(default)]
        row_shift: f64,
    },
    Union {
        of: Vec<LevelSet>,
    },
    Intersection {
        of: Vec<LevelSet>,
    },
    Complement {
        of: Box<LevelSet>,
    },
    Constant {
        value: f64,
    },
}

impl LevelSet {
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        LevelSet::Circle { center, radius }
    }

    pub fn half_plane(point: [f64; 2], normal: [f64; 2]) -> Self {
        LevelSet::HalfPlane { point, normal }
    }

    pub fn complement(self) -> Self {
        LevelSet::Complement { of: Box::new(self) }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        match self {
            LevelSet::Circle { center, radius } => {
                if !(*radius > 0.0) || !radius.is_finite() || !center.iter().all(|c| c.is_finite()) {
                    return bad(format!("circle needs a finite positive radius, got {radius}"));
                }
            }
            LevelSet::HalfPlane { point, normal } => {
                if normal[0] == 0.0 && normal[1] == 0.0 || !point.iter().chain(normal).all(|c| c.is_finite()) {
                    return bad("half-plane needs a finite nonzero normal".into());
                }
            }
            LevelSet::Rectangle { min, max } => {
                if !(max[0] > min[0] && max[1] > min[1]) {
                    return bad(format!("rectangle {min:?}–{max:?} is empty"));
                }
            }
            LevelSet::CircleLattice { spacing, counts, radius, .. } => {
                if !(*radius > 0.0) || !(spacing[0] > 0.0 && spacing[1] > 0.0) || counts[0] == 0 || counts[1] == 0 {
                    return bad("circle lattice needs positive radius, spacing and counts".into());
                }
            }
            LevelSet::Union { of } | LevelSet::Intersection { of } => {
                if of.is_empty() {
                    return bad("union/intersection of nothing".into());
                }
                for s in of {
                    s.validate()?;
                }
            }
            LevelSet::Complement { of } => of.validate()?,
            LevelSet::Constant { value } => {
                if !value.is_finite() {
                    return bad("constant level set must be finite".into());
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            LevelSet::Circle { center, radius } => (x - Point::new(center[0], center[1])).norm() - radius,
            LevelSet::HalfPlane { point, normal } => {
                let n = Point::new(normal[0], normal[1]);
                (x - Point::new(point[0], point[1])).dot(&n) / n.norm()
            }
            LevelSet::Rectangle { min, max } => {
                let c = Point::new(0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1]));
                let half = Point::new(0.5 * (max[0] - min[0]), 0.5 * (max[1] - min[1]));
                let d = (x - c).abs() - half;
                let outside = Point::new(d.x.max(0.0), d.y.max(0.0)).norm();
                outside + d.x.max(d.y).min(0.0)
            }
            LevelSet::CircleLattice { origin, spacing, counts, radius, row_shift } => {
                let jf = ((x.y - origin[1]) / spacing[1]).round();
                let mut best = f64::INFINITY;
                for dj in -1..=1 {
                    let j = (jf as i64 + dj).clamp(0, counts[1] as i64 - 1);
                    let shift = if j % 2 == 1 { row_shift * spacing[0] } else { 0.0 };
                    let cy = origin[1] + j as f64 * spacing[1];
                    let i0 = ((x.x - origin[0] - shift) / spacing[0]).round() as i64;
                    for di in -1..=1 {
                        let i = (i0 + di).clamp(0, counts[0] as i64 - 1);
                        let cx = origin[0] + shift + i as f64 * spacing[0];
                        best = best.min((x - Point::new(cx, cy)).norm());
                    }
                }
                best - radius
            }
            LevelSet::Union { of } => of.iter().map(|s| s.eval(x)).fold(f64::INFINITY, f64::min),
            LevelSet::Intersection { of } => of.iter().map(|s| s.eval(x)).fold(f64::NEG_INFINITY, f64::max),
            LevelSet::Complement { of } => -of.eval(x),
            LevelSet::Constant { value } => *value,
        }
    }

    /// The same shape moved by `t`.
    pub fn translated(&self, t: [f64; 2]) -> Self {
        let sh = |p: &[f64; 2]| [p[0] + t[0], p[1] + t[1]];
        match self {
            LevelSet::Circle { center, radius } => LevelSet::Circle { center: sh(center), radius: *radius },
            LevelSet::HalfPlane { point, normal } => LevelSet::HalfPlane { point: sh(point), normal: *normal },
            LevelSet::Rectangle { min, max } => LevelSet::Rectangle { min: sh(min), max: sh(max) },
            LevelSet::CircleLattice { origin, spacing, counts, radius, row_shift } => LevelSet::CircleLattice {
                origin: sh(origin),
                spacing: *spacing,
                counts: *counts,
                radius: *radius,
                row_shift: *row_shift,
            },
            LevelSet::Union { of } => LevelSet::Union { of: of.iter().map(|s| s.translated(t)).collect() },
            LevelSet::Intersection { of } => LevelSet::Intersection { of: of.iter().map(|s| s.translated(t)).collect() },
            LevelSet::Complement { of } => LevelSet::Complement { of: Box::new(of.translated(t)) },
            LevelSet::Constant { value } => LevelSet::Constant { value: *value },
        }
    }
}

pub fn eval_levelset(spec: &LevelSet, point: &Point) -> f64 {
    spec.eval(point)
}

/// Piecewise-linear interpolant given by its vertex values.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn element_values(&self, mesh: &TriMesh, e: usize) -> [f64; 3] {
        mesh.triangles[e].map(|v| self.values[v])
    }
}

pub fn interpolate_nodal(spec: &LevelSet, mesh: &TriMesh) -> NodalField {
    NodalField { values: mesh.vertices.iter().map(|p| spec.eval(p)).collect() }
}

/// Sign class of a linear field over one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementSign {
    AllNonPositive,
    AllPositive,
    Cut,
}

/// An element is cut only when it has strictly positive and strictly
/// negative nodal values. Otherwise it is `AllNonPositive` when its maximum is
/// `≤ 0`, and `AllPositive` when some value is positive.
pub fn classify_element(values: [f64; 3]) -> Result<ElementSign> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Geometry(format!("NaN level-set value in {values:?}")));
    }
    let has_pos = values.iter().any(|&v| v > 0.0);
    let has_neg = values.iter().any(|&v| v < 0.0);
    Ok(match (has_pos, has_neg) {
        (true, true) => ElementSign::Cut,
        (true, false) => ElementSign::AllPositive,
        (false, _) => ElementSign::AllNonPositive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, DiagonalPattern, Rect};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn primitive_values() {
        let c = LevelSet::circle([0.0, 0.0], 1.0);
        assert_eq!(c.eval(&Point::new(0.0, 0.0)), -1.0);
        assert_eq!(c.eval(&Point::new(2.0, 0.0)), 1.0);
        let u = LevelSet::Union { of: vec![c.clone(), LevelSet::circle([3.0, 0.0], 1.0)] };
        assert_eq!(u.eval(&Point::new(3.0, 0.0)), -1.0);
        let r = LevelSet::Rectangle { min: [0.0, 0.0], max: [2.0, 1.0] };
        assert_relative_eq!(r.eval(&Point::new(1.0, 0.5)), -0.5);
        assert_relative_eq!(r.eval(&Point::new(3.0, 2.0)), 2f64.sqrt());
        let hp = LevelSet::half_plane([0.5, 0.0], [2.0, 0.0]);
        assert_relative_eq!(hp.eval(&Point::new(0.0, 7.0)), -0.5);
    }

    #[test]
    fn lattice_matches_explicit_union() {
        let lat =
            LevelSet::CircleLattice { origin: [0.1, 0.2], spacing: [0.3, 0.25], counts: [4, 3], radius: 0.05, row_shift: 0.5 };
        let mut disks = Vec::new();
        for j in 0..3 {
            for i in 0..4 {
                let s = if j % 2 == 1 { 0.15 } else { 0.0 };
                disks.push(LevelSet::circle([0.1 + s + 0.3 * i as f64, 0.2 + 0.25 * j as f64], 0.05));
            }
        }
        let union = LevelSet::Union { of: disks };
        for k in 0..200 {
            let p = Point::new(-0.2 + 0.0073 * k as f64, 0.05 + 0.0041 * k as f64);
            assert_relative_eq!(lat.eval(&p), union.eval(&p), epsilon = 1e-14);
        }
    }

    #[test]
    fn classification() {
        assert_eq!(classify_element([-1.0, -2.0, -0.5]).unwrap(), ElementSign::AllNonPositive);
        assert_eq!(classify_element([-1.0, 1.0, 1.0]).unwrap(), ElementSign::Cut);
        assert_eq!(classify_element([0.0, 0.0, -1.0]).unwrap(), ElementSign::AllNonPositive);
        // a vertex touch is not a cut; with positive values present the element is positive
        assert_eq!(classify_element([0.0, 1.0, 1.0]).unwrap(), ElementSign::AllPositive);
        assert!(classify_element([f64::NAN, 1.0, 1.0]).is_err());
    }

    #[test]
    fn nodal_interpolant_is_exact_at_nodes() {
        let m = build_structured_mesh(&[Rect::new([0.0, 0.0], [1.0, 1.0])], 1.0, DiagonalPattern::Uniform).unwrap();
        let c = LevelSet::circle([0.2, 0.3], 0.4);
        let f = interpolate_nodal(&c, &m);
        let expect = [
            (0.2f64.powi(2) + 0.3f64.powi(2)).sqrt() - 0.4,
            (0.8f64.powi(2) + 0.3f64.powi(2)).sqrt() - 0.4,
            (0.2f64.powi(2) + 0.7f64.powi(2)).sqrt() - 0.4,
            (0.8f64.powi(2) + 0.7f64.powi(2)).sqrt() - 0.4,
        ];
        for (v, e) in f.values.iter().zip(expect) {
            assert_relative_eq!(*v, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn interpolation_error_decreases_under_refinement() {
        let c = LevelSet::circle([0.47, 0.52], 0.31);
        let mut errs = Vec::new();
        for h in [0.2, 0.1, 0.05] {
            let m = build_structured_mesh(&[Rect::new([0.0, 0.0], [1.0, 1.0])], h, DiagonalPattern::Alternating).unwrap();
            let f = interpolate_nodal(&c, &m);
            let mut worst: f64 = 0.0;
            for fa in &m.facets {
                let [a, b] = fa.vertices;
                for s in [0.25, 0.5, 0.75] {
                    let p = m.vertices[a] * (1.0 - s) + m.vertices[b] * s;
                    let interp = f.values[a] * (1.0 - s) + f.values[b] * s;
                    worst = worst.max((interp - c.eval(&p)).abs());
                }
            }
            errs.push(worst);
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }

    fn arb_shape() -> impl Strategy<Value = LevelSet> {
        let leaf = prop_oneof![
            (-2.0..2.0f64, -2.0..2.0f64, 0.1..1.5f64).prop_map(|(x, y, r)| LevelSet::circle([x, y], r)),
            (-2.0..2.0f64, -2.0..2.0f64, 0.1..1.0f64, 0.1..1.0f64)
                .prop_map(|(x, y, w, h)| LevelSet::Rectangle { min: [x, y], max: [x + w, y + h] }),
            (-2.0..2.0f64, -2.0..2.0f64, -1.0..1.0f64, 0.2..1.0f64)
                .prop_map(|(x, y, nx, ny)| LevelSet::half_plane([x, y], [nx, ny])),
        ];
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 1..3).prop_map(|of| LevelSet::Union { of }),
                prop::collection::vec(inner.clone(), 1..3).prop_map(|of| LevelSet::Intersection { of }),
                inner.prop_map(LevelSet::complement),
            ]
        })
    }

    proptest! {
        #[test]
        fn translation_equivariance(s in arb_shape(), tx in -3.0..3.0f64, ty in -3.0..3.0f64,
                                    x in -3.0..3.0f64, y in -3.0..3.0f64) {
            let p = Point::new(x, y);
            let moved = s.translated([tx, ty]);
            let a = moved.eval(&(p + Point::new(tx, ty)));
            let b = s.eval(&p);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }

        #[test]
        fn combinators_bound_their_operands(a in arb_shape(), b in arb_shape(), x in -3.0..3.0f64, y in -3.0..3.0f64) {
            let p = Point::new(x, y);
            let u = LevelSet::Union { of: vec![a.clone(), b.clone()] }.eval(&p);
            let i = LevelSet::Intersection { of: vec![a.clone(), b.clone()] }.eval(&p);
            prop_assert!(u <= a.eval(&p) && u <= b.eval(&p));
            prop_assert!(i >= a.eval(&p) && i >= b.eval(&p));
        }

        #[test]
        fn spec_round_trips_through_json(s in arb_shape()) {
            let text = serde_json::to_string(&s).unwrap();
            let back: LevelSet = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
