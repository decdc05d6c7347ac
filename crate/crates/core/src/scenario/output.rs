use std::fmt::Write as _;
use std::path::Path;

use crate::assembly::{Discretization, FieldStates};
use crate::cutgeom::FieldId;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::materials::{Mandel, SQRT2};
use crate::mesh::TriMesh;

use super::StepRecord;

/// Writes via a temporary sibling and a rename so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io { path: path.display().to_string(), source };
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// Shortest round-trip decimal with negative zero folded to zero.
fn num(v: f64) -> String {
    format!("{}", v + 0.0)
}

fn header(out: &mut String, title: &str) {
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{title}");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
}

fn points_block(out: &mut String, points: &[Point]) {
    let _ = writeln!(out, "POINTS {} double", points.len());
    for p in points {
        let _ = writeln!(out, "{} {} 0", num(p.x), num(p.y));
    }
}

fn triangles_block(out: &mut String, cells: &[[usize; 3]]) {
    let _ = writeln!(out, "CELLS {} {}", cells.len(), 4 * cells.len());
    for c in cells {
        let _ = writeln!(out, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {}", cells.len());
    for _ in cells {
        out.push_str("5\n");
    }
}

fn scalars(out: &mut String, name: &str, values: impl Iterator<Item = f64>) {
    let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in values {
        let _ = writeln!(out, "{}", num(v));
    }
}

/// One exported sub-triangle with its averaged quadrature data.
struct Cell {
    field: FieldId,
    corners: [Point; 3],
    disp: [[f64; 2]; 3],
    stress: Mandel,
    eps_p: Mandel,
    p: f64,
}

/// Physical sub-triangles of every field carrying unknowns, with
/// displacement at the corners and stress, plastic strain and accumulated
/// plastic strain averaged over each sub-triangle's quadrature points.
pub fn field_vtk(disc: &Discretization, u: &[f64], states: &FieldStates, stresses: &[Vec<Mandel>; 3], title: &str) -> String {
    let mut cells = Vec::new();
    for f in FieldId::ALL {
        if !disc.dofs.has_field(f) {
            continue;
        }
        let dom = disc.decomp.field(f);
        let q = &disc.layout.fields[f.index()];
        for (pos, &e) in dom.elements.iter().enumerate() {
            let per_part =
                if dom.parts[pos].is_empty() { 0 } else { (q.offsets[pos + 1] - q.offsets[pos]) / dom.parts[pos].len() };
            for (k, part) in dom.parts[pos].iter().enumerate() {
                let range = q.offsets[pos] + k * per_part..q.offsets[pos] + (k + 1) * per_part;
                let (mut s, mut ep, mut p, mut w) = (Mandel::zeros(), Mandel::zeros(), 0.0, 0.0);
                for i in range {
                    let wq = q.points[i].weight;
                    s += stresses[f.index()][i] * wq;
                    ep += states[f.index()][i].eps_p * wq;
                    p += states[f.index()][i].p * wq;
                    w += wq;
                }
                let w = if w > 0.0 { w } else { 1.0 };
                cells.push(Cell {
                    field: f,
                    corners: *part,
                    disp: part.map(|x| disc.displacement_at(f, e, &x, u)),
                    stress: s / w,
                    eps_p: ep / w,
                    p: p / w,
                });
            }
        }
    }
    let mut out = String::new();
    header(&mut out, title);
    let points: Vec<Point> = cells.iter().flat_map(|c| c.corners).collect();
    points_block(&mut out, &points);
    let conn: Vec<[usize; 3]> = (0..cells.len()).map(|k| [3 * k, 3 * k + 1, 3 * k + 2]).collect();
    triangles_block(&mut out, &conn);
    let _ = writeln!(out, "POINT_DATA {}", points.len());
    out.push_str("VECTORS displacement double\n");
    for c in &cells {
        for d in c.disp {
            let _ = writeln!(out, "{} {} 0", num(d[0]), num(d[1]));
        }
    }
    let _ = writeln!(out, "CELL_DATA {}", cells.len());
    scalars(&mut out, "field", cells.iter().map(|c| c.field.label() as f64));
    scalars(&mut out, "sigma_xx", cells.iter().map(|c| c.stress[0]));
    scalars(&mut out, "sigma_yy", cells.iter().map(|c| c.stress[1]));
    scalars(&mut out, "sigma_zz", cells.iter().map(|c| c.stress[2]));
    scalars(&mut out, "sigma_xy", cells.iter().map(|c| c.stress[3] / SQRT2));
    scalars(&mut out, "eps_p_yy", cells.iter().map(|c| c.eps_p[1]));
    scalars(&mut out, "p", cells.iter().map(|c| c.p));
    out
}

pub fn mesh_vtk(mesh: &TriMesh, title: &str) -> String {
    let mut out = String::new();
    header(&mut out, title);
    points_block(&mut out, &mesh.vertices);
    triangles_block(&mut out, &mesh.triangles);
    out
}

/// Interface segments as VTK lines tagged by interface number.
pub fn interfaces_vtk(disc: &Discretization, title: &str) -> String {
    let segs = &disc.decomp.segments;
    let mut out = String::new();
    header(&mut out, title);
    let points: Vec<Point> = segs.iter().flat_map(|s| [s.a, s.b]).collect();
    points_block(&mut out, &points);
    let _ = writeln!(out, "CELLS {} {}", segs.len(), 3 * segs.len());
    for k in 0..segs.len() {
        let _ = writeln!(out, "2 {} {}", 2 * k, 2 * k + 1);
    }
    let _ = writeln!(out, "CELL_TYPES {}", segs.len());
    for _ in segs {
        out.push_str("3\n");
    }
    let _ = writeln!(out, "CELL_DATA {}", segs.len());
    scalars(&mut out, "interface", segs.iter().map(|s| (s.interface.index() + 1) as f64));
    out
}

/// Background and refined meshes, cut sub-triangles and interfaces.
pub fn dump_geometry(dir: &Path, disc: &Discretization, tag: &str) -> Result<()> {
    write_atomic(&dir.join(format!("{tag}_coarse.vtk")), &mesh_vtk(&disc.hm.coarse, "coarse mesh"))?;
    write_atomic(&dir.join(format!("{tag}_fine.vtk")), &mesh_vtk(&disc.hm.fine, "refined mesh"))?;
    write_atomic(&dir.join(format!("{tag}_interfaces.vtk")), &interfaces_vtk(disc, "interfaces"))?;
    let mut parts = Vec::new();
    let mut labels = Vec::new();
    for f in FieldId::ALL {
        if !disc.dofs.has_field(f) {
            continue;
        }
        for p in disc.decomp.field(f).parts.iter().flatten() {
            parts.push(*p);
            labels.push(f.label() as f64);
        }
    }
    let mut out = String::new();
    header(&mut out, "physical sub-triangles");
    let pts: Vec<Point> = parts.iter().flatten().copied().collect();
    points_block(&mut out, &pts);
    triangles_block(&mut out, &(0..parts.len()).map(|k| [3 * k, 3 * k + 1, 3 * k + 2]).collect::<Vec<_>>());
    let _ = writeln!(out, "CELL_DATA {}", parts.len());
    scalars(&mut out, "field", labels.into_iter());
    write_atomic(&dir.join(format!("{tag}_cells.vtk")), &out)
}

pub const CSV_HEADER: &str =
    "step,load_factor,zoom,dofs,iterations,residual,reaction_x,reaction_y,applied_x,applied_y,sum_p,max_sigma_yy,energy_error";

pub fn summary_csv(records: &[StepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let err = r.energy_error.map(num).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            num(r.factor),
            r.zoom.as_deref().unwrap_or(""),
            r.dofs,
            r.iterations,
            num(r.residual),
            num(r.reaction[0]),
            num(r.reaction[1]),
            num(r.applied[0]),
            num(r.applied[1]),
            num(r.sum_p),
            num(r.max_sigma_yy),
            err
        );
    }
    out
}
