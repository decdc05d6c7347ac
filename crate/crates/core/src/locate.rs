//! Bucket grids for point location in triangulations and nearest-point queries.

use crate::geom::{barycentric, BoundingBox, Point};
use crate::mesh::TriMesh;

#[derive(Debug, Clone)]
struct Grid {
    min: Point,
    cell: Point,
    nx: usize,
    ny: usize,
}

impl Grid {
    fn new(bbox: &BoundingBox, items: usize) -> Self {
        let ext = bbox.max - bbox.min;
        let side = ((ext.x.max(1e-300) * ext.y.max(1e-300)) / items.max(1) as f64).sqrt().max(1e-12);
        let nx = ((ext.x / side).ceil() as usize).clamp(1, 4096);
        let ny = ((ext.y / side).ceil() as usize).clamp(1, 4096);
        let cell = Point::new((ext.x / nx as f64).max(1e-12), (ext.y / ny as f64).max(1e-12));
        Self { min: bbox.min, cell, nx, ny }
    }

    fn index(&self, x: &Point) -> (usize, usize) {
        let i = ((x.x - self.min.x) / self.cell.x).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((x.y - self.min.y) / self.cell.y).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }
}

/// Finds the triangles containing a point.
#[derive(Debug, Clone)]
pub struct TriangleLocator {
    grid: Grid,
    buckets: Vec<Vec<usize>>,
}

impl TriangleLocator {
    pub fn new(mesh: &TriMesh) -> Self {
        let grid = Grid::new(&mesh.bounding_box(), mesh.triangles.len());
        let mut buckets = vec![Vec::new(); grid.nx * grid.ny];
        for e in 0..mesh.triangles.len() {
            let tri = mesh.triangle(e);
            let bb = BoundingBox::of_points(tri.iter());
            let (i0, j0) = grid.index(&bb.min);
            let (i1, j1) = grid.index(&bb.max);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * grid.nx + i].push(e);
                }
            }
        }
        Self { grid, buckets }
    }

    /// Triangles containing `x` up to a barycentric tolerance, ascending.
    pub fn locate(&self, mesh: &TriMesh, x: &Point) -> Vec<usize> {
        let (i, j) = self.grid.index(x);
        self.buckets[j * self.grid.nx + i]
            .iter()
            .copied()
            .filter(|&e| barycentric(&mesh.triangle(e), x).iter().all(|l| *l >= -1e-10))
            .collect()
    }
}

/// Nearest-point queries over a fixed point set; ties go to the lower index.
#[derive(Debug, Clone)]
pub struct NearestPoints {
    points: Vec<Point>,
    grid: Grid,
    buckets: Vec<Vec<usize>>,
}

impl NearestPoints {
    pub fn new(points: Vec<Point>) -> Self {
        let bbox = if points.is_empty() {
            BoundingBox { min: Point::zeros(), max: Point::new(1.0, 1.0) }
        } else {
            BoundingBox::of_points(points.iter())
        };
        let grid = Grid::new(&bbox, points.len());
        let mut buckets = vec![Vec::new(); grid.nx * grid.ny];
        for (k, p) in points.iter().enumerate() {
            let (i, j) = grid.index(p);
            buckets[j * grid.nx + i].push(k);
        }
        Self { points, grid, buckets }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nearest(&self, x: &Point) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let (ci, cj) = self.grid.index(x);
        let mut best: Option<(usize, f64)> = None;
        let max_ring = self.grid.nx.max(self.grid.ny);
        for ring in 0..=max_ring {
            // Every point in ring r or beyond is at least (r - 1) cells away.
            if let Some((_, d)) = best {
                let reach = (ring as f64 - 1.0) * self.grid.cell.x.min(self.grid.cell.y);
                if reach > d {
                    break;
                }
            }
            let (i0, i1) = (ci as i64 - ring as i64, ci as i64 + ring as i64);
            let (j0, j1) = (cj as i64 - ring as i64, cj as i64 + ring as i64);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let on_ring = i == i0 || i == i1 || j == j0 || j == j1;
                    if !on_ring || i < 0 || j < 0 || i >= self.grid.nx as i64 || j >= self.grid.ny as i64 {
                        continue;
                    }
                    for &k in &self.buckets[j as usize * self.grid.nx + i as usize] {
                        let d = (self.points[k] - x).norm();
                        let better = match best {
                            None => true,
                            Some((bk, bd)) => d < bd || (d == bd && k < bk),
                        };
                        if better {
                            best = Some((k, d));
                        }
                    }
                }
            }
        }
        best
    }
}
