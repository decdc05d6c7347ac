use crate::error::{Error, Result};
use crate::geom::{clip_polygon, polygon_area, BoundingBox, Point, Side};
use crate::levelset::{interpolate_nodal, LevelSet};
use crate::mesh::{build_structured_mesh, DiagonalPattern, Rect};

/// Area fraction of `φ > 0` inside the rectangle union, from the piecewise
/// linear interpolant on a grid of about 800 cells along the diagonal.
pub fn phase_fraction(domain: &[Rect], phi: &LevelSet) -> Result<f64> {
    let corners: Vec<Point> =
        domain.iter().flat_map(|r| [Point::new(r.min[0], r.min[1]), Point::new(r.max[0], r.max[1])]).collect();
    let diag = BoundingBox::of_points(&corners).diagonal();
    if !(diag > 0.0) {
        return Err(Error::InvalidInput("empty domain".into()));
    }
    let mesh = build_structured_mesh(domain, diag / 800.0, DiagonalPattern::Alternating)?;
    let values = interpolate_nodal(phi, &mesh);
    let mut inside = 0.0;
    for (e, t) in mesh.triangles.iter().enumerate() {
        let vals = values.element_values(&mesh, e);
        if vals.iter().all(|v| *v <= 0.0) {
            continue;
        }
        let poly: Vec<(Point, f64)> = (0..3).map(|k| (mesh.vertices[t[k]], vals[k])).collect();
        let clipped: Vec<Point> = clip_polygon(&poly, Side::NonNegative).into_iter().map(|p| p.0).collect();
        inside += polygon_area(&clipped);
    }
    Ok(inside / mesh.total_area())
}
