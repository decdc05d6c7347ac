//! Shared set-ups and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use cutzoom::assembly::{
    apply_dirichlet, assemble, BodyForce, BoundaryValue, DirichletCondition, Discretization, GhostParams, NitscheParams,
    SystemParams,
};
use cutzoom::cutgeom::{mesh_of, FieldId};
use cutzoom::geom::Point;
use cutzoom::levelset::LevelSet;
use cutzoom::materials::{deviatoric_projector, elastic_tangent, ElasticParams, InternalState, Mandel, Material, PlasticParams};
use cutzoom::mesh::{DiagonalPattern, MeshSpec, Rect};
use cutzoom::scenario::{analytic_errors, ScenarioConfig};
use cutzoom::solver::{solve_static, Loading, NewtonConfig};
use nalgebra::{DMatrix, SMatrix, SVector};

pub const EDGES: [&str; 4] = ["bottom", "right", "top", "left"];

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

pub fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn unit_square(h: f64, levels: u32, pattern: DiagonalPattern) -> MeshSpec {
    MeshSpec { domain: vec![Rect::new([0.0, 0.0], [1.0, 1.0])], h_coarse: h, levels, halo: 1, pattern }
}

pub fn uniform_params(young: [f64; 3], poisson: f64, spec: &MeshSpec, gamma: f64, beta: f64) -> SystemParams {
    SystemParams {
        materials: young.map(|y| Material::elastic(y, poisson)),
        nitsche: NitscheParams { gamma: [gamma; 3], h_coarse: spec.h_coarse, h_fine: spec.h_fine() },
        ghost: GhostParams { beta: [beta; 3] },
    }
}

/// Largest nodal deviation from a linear field imposed on the whole
/// boundary, over all three fields, on a unit square with a circular zoom
/// and a circular inclusion that cut the mesh at arbitrary places.
pub fn patch_test(h: f64, levels: u32) -> (f64, usize) {
    let spec = unit_square(h, levels, DiagonalPattern::Alternating);
    let zoom = LevelSet::circle([0.47, 0.52], 0.27);
    let incl = LevelSet::circle([0.5, 0.45], 0.113).complement();
    let disc = Discretization::build(&spec, &incl, &zoom, false).unwrap();
    let exact = BoundaryValue::Affine { offset: [0.01, -0.02], gradient: [[0.03, -0.01], [0.02, 0.05]] };
    let loading = Loading {
        dirichlet: vec![DirichletCondition {
            tags: EDGES.map(String::from).to_vec(),
            components: [true; 2],
            value: exact.clone(),
        }],
        ..Default::default()
    };
    let p = uniform_params([1.0; 3], 0.3, &spec, 10.0, 0.005);
    let (out, _) = solve_static(&disc, &p, &loading, 1.0, &disc.initial_states(), None, &NewtonConfig::default()).unwrap();
    let mut worst: f64 = 0.0;
    for d in 0..disc.dofs.len() {
        let (f, v, c) = disc.dofs.vertex_of(d);
        let x = mesh_of(&disc.hm, f).vertices[v];
        worst = worst.max((out.u[d] - exact.at(&x)[c]).abs());
    }
    let elements = disc.hm.coarse.triangles.len() + disc.hm.fine.triangles.len();
    (worst, elements)
}

/// Smooth field `u = (sin πx sin πy, x² y)` used as a manufactured solution.
pub fn manufactured(x: &Point) -> [f64; 2] {
    [(PI * x.x).sin() * (PI * x.y).sin(), x.x * x.x * x.y]
}

pub fn manufactured_grad(x: &Point) -> [[f64; 2]; 2] {
    let (sx, cx, sy, cy) = ((PI * x.x).sin(), (PI * x.x).cos(), (PI * x.y).sin(), (PI * x.y).cos());
    [[PI * cx * sy, PI * sx * cy], [2.0 * x.x * x.y, x.x * x.x]]
}

/// `f = −div σ(u)` for the manufactured field, plane strain.
pub fn manufactured_load(x: &Point, e: &ElasticParams) -> [f64; 2] {
    let (l, m) = (e.lambda, e.mu);
    let (sx, cx, sy, cy) = ((PI * x.x).sin(), (PI * x.x).cos(), (PI * x.y).sin(), (PI * x.y).cos());
    let pp = PI * PI;
    let f1 = (l + 2.0 * m) * (-pp * sx * sy) + l * 2.0 * x.x + m * (-pp * sx * sy + 2.0 * x.x);
    let f2 = l * pp * cx * cy + m * (pp * cx * cy + 2.0 * x.y);
    [-f1, -f2]
}

/// L2 and energy errors of the manufactured problem on a single material
/// with a circular zoom, at coarse size `h` and one refinement level.
pub fn manufactured_errors(h: f64) -> (f64, f64) {
    let spec = unit_square(h, 1, DiagonalPattern::Alternating);
    let zoom = LevelSet::circle([0.48, 0.53], 0.31);
    let disc = Discretization::build(&spec, &LevelSet::Constant { value: -1.0 }, &zoom, false).unwrap();
    let p = uniform_params([1.0; 3], 0.3, &spec, 10.0, 0.005);
    let e = p.materials[0].params().unwrap();
    let loading = Loading {
        dirichlet: vec![DirichletCondition {
            tags: EDGES.map(String::from).to_vec(),
            components: [true; 2],
            value: BoundaryValue::Function(Arc::new(manufactured)),
        }],
        tractions: Vec::new(),
        body: BodyForce::Function(Arc::new(move |x: &Point| manufactured_load(x, &e))),
    };
    let (out, _) = solve_static(&disc, &p, &loading, 1.0, &disc.initial_states(), None, &NewtonConfig::default()).unwrap();
    analytic_errors(&disc, &out.u, manufactured, manufactured_grad)
}

/// Smallest physical fraction among the cut coarse elements of the macro field.
pub fn smallest_macro_fraction(disc: &Discretization) -> f64 {
    let dom = disc.decomp.field(FieldId::Macro);
    dom.elements
        .iter()
        .zip(&dom.parts)
        .zip(&dom.full)
        .filter(|(_, full)| !**full)
        .map(|((&e, parts), _)| parts.iter().map(cutzoom::geom::triangle_area).sum::<f64>() / disc.hm.coarse.area(e))
        .fold(f64::INFINITY, f64::min)
}

/// Vertical zoom boundary `x = x0` on a unit square; the zoom is `x ≤ x0`.
pub fn straight_zoom(x0: f64) -> (Discretization, MeshSpec) {
    let spec = unit_square(1.0 / 8.0, 1, DiagonalPattern::Alternating);
    let zoom = LevelSet::half_plane([x0, 0.0], [1.0, 0.0]);
    (Discretization::build(&spec, &LevelSet::Constant { value: -1.0 }, &zoom, false).unwrap(), spec)
}

/// Places the zoom boundary inside the coarse column `[0.5, 0.625]` so that
/// the smallest macro cut fraction equals `target`, by bisection.
pub fn zoom_with_fraction(target: f64) -> (Discretization, MeshSpec, f64) {
    let (a, b) = (0.5, 0.625);
    // the macro side shrinks as x0 approaches b
    let (mut lo, mut hi) = (a + 1e-9, b - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (d, _) = straight_zoom(mid);
        if smallest_macro_fraction(&d) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-15 {
            break;
        }
    }
    let (d, spec) = straight_zoom(0.5 * (lo + hi));
    let f = smallest_macro_fraction(&d);
    (d, spec, f)
}

/// Spectral condition number `max|λ| / min|λ|` of the stiffness matrix with
/// the left and right edges clamped.
pub fn condition_number(disc: &Discretization, params: &SystemParams) -> f64 {
    let n = disc.dofs.len();
    let a = assemble(disc, params, &vec![0.0; n], &disc.initial_states()).unwrap();
    let conds = vec![DirichletCondition::clamp(&["left", "right"])];
    let fixed = cutzoom::assembly::dirichlet_values(disc, &conds, 1.0).unwrap();
    let (k, _) = apply_dirichlet(&a.matrix, &vec![0.0; n], &fixed).unwrap();
    let dense: DMatrix<f64> = k.to_dense();
    let sym = (&dense + dense.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    max / min
}

/// Implicit Euler step of the von Mises model solved as a plain nonlinear
/// system in `(σ, q, p, Δλ)` by Newton's method with a finite-difference
/// Jacobian. Returns the stress and the new internal variables.
pub fn brute_force_return(
    strain: &Mandel,
    state: &InternalState,
    e: &ElasticParams,
    pl: &PlasticParams,
) -> (Mandel, InternalState) {
    let c = elastic_tangent(e);
    let dev = deviatoric_projector();
    let unpack = |x: &SVector<f64, 10>| -> (Mandel, Mandel, f64, f64) {
        (Mandel::new(x[0], x[1], x[2], x[3]), Mandel::new(x[4], x[5], x[6], x[7]), x[8], x[9])
    };
    let residual = |x: &SVector<f64, 10>| -> SVector<f64, 10> {
        let (s, q, p, dl) = unpack(x);
        let xi = dev * s - q;
        let n = xi / xi.norm();
        let rs = s - c * (strain - state.eps_p - n * dl);
        let rq = q - state.back_stress - n * (pl.kinematic * dl);
        let rp = p - state.p - dl;
        let rf = (1.5f64).sqrt() * xi.norm() - pl.yield_stress - pl.hardening * p;
        let mut r = SVector::<f64, 10>::zeros();
        r.fixed_rows_mut::<4>(0).copy_from(&rs);
        r.fixed_rows_mut::<4>(4).copy_from(&rq);
        r[8] = rp;
        r[9] = rf;
        r
    };
    let trial = c * (strain - state.eps_p);
    let mut x = SVector::<f64, 10>::zeros();
    x.fixed_rows_mut::<4>(0).copy_from(&trial);
    x.fixed_rows_mut::<4>(4).copy_from(&state.back_stress);
    x[8] = state.p;
    for _ in 0..200 {
        let r = residual(&x);
        if r.amax() < 1e-15 {
            break;
        }
        let mut jac = SMatrix::<f64, 10, 10>::zeros();
        for j in 0..10 {
            let h = 1e-7 * x[j].abs().max(1e-3);
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            jac.set_column(j, &((residual(&xp) - residual(&xm)) / (2.0 * h)));
        }
        let dx = jac.lu().solve(&(-r)).expect("singular oracle Jacobian");
        x += dx;
    }
    let (s, q, p, dl) = unpack(&x);
    let xi = dev * s - q;
    let eps_p = state.eps_p + xi / xi.norm() * dl;
    (s, InternalState { eps_p, back_stress: q, p })
}
