use crate::assembly::{strain_matrix, Discretization, FieldStates, SystemParams};
use crate::cutgeom::{mesh_of, FieldId, InterfaceId};
use crate::error::{Error, Result};
use crate::geom::{barycentric, segment_rule, triangle_rule_deg5, Point};
use crate::locate::{NearestPoints, TriangleLocator};
use crate::materials::{elastic_tangent, Mandel, SQRT2};

/// Point queries on one discretization and displacement vector layout.
pub struct Probe<'a> {
    pub disc: &'a Discretization,
    coarse: TriangleLocator,
    fine: TriangleLocator,
}

impl<'a> Probe<'a> {
    pub fn new(disc: &'a Discretization) -> Self {
        Self { disc, coarse: TriangleLocator::new(&disc.hm.coarse), fine: TriangleLocator::new(&disc.hm.fine) }
    }

    /// `φ2^H(x)`, or `None` outside the domain.
    pub fn phi2(&self, x: &Point) -> Option<f64> {
        let e = *self.coarse.locate(&self.disc.hm.coarse, x).first()?;
        Some(self.disc.decomp.phi2_at(&self.disc.hm, e, x))
    }

    /// Field owning `x` by the interpolated level sets.
    pub fn phase_at(&self, x: &Point) -> Option<FieldId> {
        if self.phi2(x)? > 0.0 {
            return Some(FieldId::Macro);
        }
        let e = *self.fine.locate(&self.disc.hm.fine, x).first()?;
        Some(if self.disc.decomp.phi1_at(&self.disc.hm, e, x) > 0.0 { FieldId::Inclusion } else { FieldId::Matrix })
    }

    /// Active element of field `f` containing `x`, lowest index first.
    pub fn element(&self, f: FieldId, x: &Point) -> Option<usize> {
        if !self.disc.dofs.has_field(f) {
            return None;
        }
        let (loc, mesh) = if f.is_micro() { (&self.fine, &self.disc.hm.fine) } else { (&self.coarse, &self.disc.hm.coarse) };
        let dom = self.disc.decomp.field(f);
        loc.locate(mesh, x).into_iter().find(|&e| dom.is_active(e))
    }

    /// Field to sample at `x`: the owning phase when it carries unknowns
    /// there, else `prefer`, then macro, then matrix.
    pub fn sampling_field(&self, x: &Point, prefer: FieldId) -> Option<(FieldId, usize)> {
        let owner = self.phase_at(x);
        let order = [owner, Some(prefer), Some(FieldId::Macro), Some(FieldId::Matrix)];
        order.into_iter().flatten().find_map(|f| self.element(f, x).map(|e| (f, e)))
    }

    pub fn strain(&self, f: FieldId, e: usize, u: &[f64]) -> Mandel {
        let mesh = mesh_of(&self.disc.hm, f);
        let d = self.disc.dofs.element_dofs(f, mesh.triangles[e]);
        let b = strain_matrix(&mesh.triangle(e));
        b * nalgebra::SVector::<f64, 6>::from_fn(|i, _| u[d[i]])
    }
}

/// Squared-error integral split per reference quadrature point.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorNorm {
    pub norm: f64,
    /// `|ε(e)|² w` per field and quadrature point of the reference layout.
    pub contributions: [Vec<f64>; 3],
}

impl ErrorNorm {
    /// `sqrt` of the error integral over the points selected by `keep`.
    pub fn restricted(&self, reference: &Discretization, keep: impl Fn(FieldId, &Point) -> bool) -> f64 {
        let mut sum = 0.0;
        for f in FieldId::ALL {
            for (c, q) in self.contributions[f.index()].iter().zip(&reference.layout.fields[f.index()].points) {
                if keep(f, &q.x) {
                    sum += c;
                }
            }
        }
        sum.sqrt()
    }
}

/// `sqrt(∫ |ε(u_ref) − ε(u)|²)` over the physical domain of the reference,
/// with `u` evaluated at each reference quadrature point in the field that
/// owns the point in its own discretization. Points that fall into a pore
/// of the other discretization are material in one model only and add
/// nothing.
pub fn energy_error_norm(reference: &Discretization, u_ref: &[f64], other: &Discretization, u: &[f64]) -> Result<ErrorNorm> {
    let rp = Probe::new(reference);
    let op = Probe::new(other);
    let mut contributions: [Vec<f64>; 3] = Default::default();
    let mut total = 0.0;
    for f in FieldId::ALL {
        let dom = reference.decomp.field(f);
        let q = &reference.layout.fields[f.index()];
        let out = &mut contributions[f.index()];
        if !reference.dofs.has_field(f) {
            continue;
        }
        for (pos, &e) in dom.elements.iter().enumerate() {
            let eps_ref = rp.strain(f, e, u_ref);
            for qp in &q.points[q.offsets[pos]..q.offsets[pos + 1]] {
                if other.void_mode && op.phase_at(&qp.x) == Some(FieldId::Inclusion) {
                    out.push(0.0);
                    continue;
                }
                let (g, ge) = op
                    .sampling_field(&qp.x, f)
                    .ok_or_else(|| Error::InvalidInput(format!("solution not evaluable at ({}, {})", qp.x.x, qp.x.y)))?;
                let d = eps_ref - op.strain(g, ge, u);
                let c = d.norm_squared() * qp.weight;
                out.push(c);
                total += c;
            }
        }
    }
    Ok(ErrorNorm { norm: total.sqrt(), contributions })
}

/// `‖[u]‖` and the mean `‖u‖` of the two sides, both in L2 over one
/// interface, from a two-point rule on every segment.
pub fn interface_jump(disc: &Discretization, u: &[f64], id: InterfaceId) -> (f64, f64) {
    let (neg, pos) = id.fields();
    let (mut jump, mut size) = (0.0, 0.0);
    for s in disc.decomp.segments_of(id) {
        for (x, w) in segment_rule(&s.a, &s.b, 2) {
            let a = disc.displacement_at(neg, s.neg_element, &x, u);
            let b = disc.displacement_at(pos, s.pos_element, &x, u);
            jump += w * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2));
            size += w * 0.5 * (a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1]);
        }
    }
    (jump.sqrt(), size.sqrt())
}

/// `sqrt(∫ |ε(u)|²)` over the physical domain.
pub fn energy_norm(disc: &Discretization, u: &[f64]) -> Result<f64> {
    let zero = vec![0.0; u.len()];
    Ok(energy_error_norm(disc, u, disc, &zero)?.norm)
}

/// Errors against an exact field: L2 of the displacement and the energy
/// seminorm, integrated exactly enough for smooth data.
pub fn analytic_errors(
    disc: &Discretization,
    u: &[f64],
    exact: impl Fn(&Point) -> [f64; 2],
    exact_grad: impl Fn(&Point) -> [[f64; 2]; 2],
) -> (f64, f64) {
    let probe = Probe::new(disc);
    let (mut l2, mut en) = (0.0, 0.0);
    for f in FieldId::ALL {
        if !disc.dofs.has_field(f) {
            continue;
        }
        let mesh = mesh_of(&disc.hm, f);
        let dom = disc.decomp.field(f);
        for (pos, &e) in dom.elements.iter().enumerate() {
            let eps = probe.strain(f, e, u);
            let tri = mesh.triangle(e);
            let d = disc.dofs.element_dofs(f, mesh.triangles[e]);
            for part in &dom.parts[pos] {
                for (x, w) in triangle_rule_deg5(part) {
                    let l = barycentric(&tri, &x);
                    let uh =
                        [(0..3).map(|k| l[k] * u[d[2 * k]]).sum::<f64>(), (0..3).map(|k| l[k] * u[d[2 * k + 1]]).sum::<f64>()];
                    let ue = exact(&x);
                    l2 += w * ((uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2));
                    let g = exact_grad(&x);
                    let ee = Mandel::new(g[0][0], g[1][1], 0.0, (g[0][1] + g[1][0]) / SQRT2);
                    en += w * (eps - ee).norm_squared();
                }
            }
        }
    }
    (l2.sqrt(), en.sqrt())
}

/// Stress at every quadrature point, `σ = C (ε − εp)`.
pub fn quadrature_stresses(
    disc: &Discretization,
    params: &SystemParams,
    u: &[f64],
    states: &FieldStates,
) -> Result<[Vec<Mandel>; 3]> {
    let probe = Probe::new(disc);
    let mut out: [Vec<Mandel>; 3] = Default::default();
    for f in FieldId::ALL {
        if !disc.dofs.has_field(f) {
            continue;
        }
        let c = elastic_tangent(&params.materials[f.index()].params()?);
        let q = &disc.layout.fields[f.index()];
        for (pos, &e) in disc.decomp.field(f).elements.iter().enumerate() {
            let eps = probe.strain(f, e, u);
            for s in &states[f.index()][q.offsets[pos]..q.offsets[pos + 1]] {
                out[f.index()].push(c * (eps - s.eps_p));
            }
        }
    }
    Ok(out)
}

/// Internal variables on a new layout by nearest old quadrature point of
/// the same phase. Micro points outside the old zoom inherit the nearest
/// old macro state.
pub fn transfer_states(old: &Discretization, old_states: &FieldStates, new: &Discretization) -> FieldStates {
    let clouds: [NearestPoints; 3] =
        std::array::from_fn(|k| NearestPoints::new(old.layout.fields[k].points.iter().map(|q| q.x).collect()));
    let old_probe = Probe::new(old);
    let mut out: FieldStates = Default::default();
    for f in FieldId::ALL {
        for q in &new.layout.fields[f.index()].points {
            let was_micro = old_probe.phi2(&q.x).is_some_and(|v| v <= 0.0);
            let order = if f.is_micro() && was_micro {
                [f, FieldId::Macro, FieldId::Matrix]
            } else {
                [FieldId::Macro, f, FieldId::Matrix]
            };
            let state = order
                .iter()
                .find_map(|g| clouds[g.index()].nearest(&q.x).map(|(k, _)| old_states[g.index()][k]))
                .unwrap_or_default();
            out[f.index()].push(state);
        }
    }
    out
}

/// Initial guess on a new discretization: each unknown takes the old
/// displacement at its vertex, sampled in the same field where possible.
pub fn transfer_displacement(old: &Discretization, u_old: &[f64], new: &Discretization) -> Vec<f64> {
    let probe = Probe::new(old);
    (0..new.dofs.len())
        .map(|d| {
            let (f, v, c) = new.dofs.vertex_of(d);
            let x = mesh_of(&new.hm, f).vertices[v];
            [f, FieldId::Macro, FieldId::Matrix]
                .into_iter()
                .find_map(|g| probe.element(g, &x).map(|e| old.displacement_at(g, e, &x, u_old)[c]))
                .unwrap_or(0.0)
        })
        .collect()
}
