use approx::assert_relative_eq;
use cutzoom::assembly::{
    assemble, assemble_ghost, assemble_loads, dirichlet_values, BodyForce, BoundaryValue, DirichletCondition, Discretization,
    GhostParams, NitscheParams, SystemParams, Traction, Triplets,
};
use cutzoom::cutgeom::{mesh_of, FieldId};
use cutzoom::geom::Point;
use cutzoom::levelset::LevelSet;
use cutzoom::materials::Material;
use cutzoom::mesh::{refine_hierarchical, DiagonalPattern, MeshSpec, Rect, TriMesh};
use cutzoom::solver::{solve_static, Loading, NewtonConfig};

const EDGES: [&str; 4] = ["bottom", "right", "top", "left"];

fn unit_square(h: f64, levels: u32, pattern: DiagonalPattern) -> MeshSpec {
    MeshSpec { domain: vec![Rect::new([0.0, 0.0], [1.0, 1.0])], h_coarse: h, levels, halo: 1, pattern }
}

fn params(e: [f64; 3], spec: &MeshSpec, beta: f64) -> SystemParams {
    SystemParams {
        materials: e.map(|y| Material::elastic(y, 0.3)),
        nitsche: NitscheParams { gamma: [10.0; 3], h_coarse: spec.h_coarse, h_fine: spec.h_fine() },
        ghost: GhostParams { beta: [beta; 3] },
    }
}

fn patch_setup(void_mode: bool) -> (Discretization, MeshSpec) {
    let spec = unit_square(1.0 / 8.0, 2, DiagonalPattern::Alternating);
    let zoom = LevelSet::circle([0.47, 0.52], 0.27);
    let incl = LevelSet::circle([0.5, 0.45], 0.113).complement();
    (Discretization::build(&spec, &incl, &zoom, void_mode).unwrap(), spec)
}

fn linear_field() -> BoundaryValue {
    BoundaryValue::Affine { offset: [0.01, -0.02], gradient: [[0.03, -0.01], [0.02, 0.05]] }
}

#[test]
fn patch_test_reproduces_linear_field_in_every_field() {
    let (disc, spec) = patch_setup(false);
    for f in FieldId::ALL {
        assert!(disc.dofs.has_field(f), "field {f:?} empty");
    }
    let loading = Loading {
        dirichlet: vec![DirichletCondition {
            tags: EDGES.map(String::from).to_vec(),
            components: [true; 2],
            value: linear_field(),
        }],
        ..Default::default()
    };
    let p = params([1.0; 3], &spec, 0.005);
    let (out, _) = solve_static(&disc, &p, &loading, 1.0, &disc.initial_states(), None, &NewtonConfig::default()).unwrap();
    assert_eq!(out.iterations, 1);
    let exact = linear_field();
    let mut worst: f64 = 0.0;
    for d in 0..disc.dofs.len() {
        let (f, v, c) = disc.dofs.vertex_of(d);
        let x = mesh_of(&disc.hm, f).vertices[v];
        worst = worst.max((out.u[d] - exact.at(&x)[c]).abs());
    }
    assert!(worst <= 1e-9, "max nodal error {worst:e}");
}

#[test]
fn linear_elastic_matrix_is_symmetric_and_annihilates_rigid_translation() {
    let (disc, spec) = patch_setup(false);
    let p = params([1.0, 3.0, 0.6], &spec, 0.005);
    let states = disc.initial_states();
    let a = assemble(&disc, &p, &vec![0.0; disc.dofs.len()], &states).unwrap();
    assert!(a.internal.iter().all(|r| *r == 0.0));
    assert!(a.matrix.max_asymmetry() < 1e-10 * a.matrix.max_abs());

    let t: Vec<f64> = (0..disc.dofs.len()).map(|d| if d % 2 == 0 { 0.3 } else { -0.7 }).collect();
    let at = assemble(&disc, &p, &t, &states).unwrap();
    let scale = a.matrix.max_abs();
    assert!(at.internal.iter().all(|r| r.abs() < 1e-12 * scale));
    assert!(a.matrix.mul_vec(&t).iter().all(|r| r.abs() < 1e-12 * scale));
}

#[test]
fn single_triangle_stiffness_matches_hand_matrix() {
    let mesh = TriMesh::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)], vec![[0, 1, 2]]).unwrap();
    let hm = refine_hierarchical(&mesh, &[], 0).unwrap();
    let disc = Discretization::new(hm, &LevelSet::Constant { value: -1.0 }, &LevelSet::Constant { value: 1.0 }, false).unwrap();
    let p = SystemParams {
        materials: [Material::elastic(1.0, 0.0); 3],
        nitsche: NitscheParams { gamma: [10.0; 3], h_coarse: 1.0, h_fine: 1.0 },
        ghost: GhostParams { beta: [1.0; 3] },
    };
    let a = assemble(&disc, &p, &[0.0; 6], &disc.initial_states()).unwrap();
    // Linear triangle with E = 1, ν = 0 worked out by hand.
    let hand = [
        [0.75, 0.25, -0.5, -0.25, -0.25, 0.0],
        [0.25, 0.75, 0.0, -0.25, -0.25, -0.5],
        [-0.5, 0.0, 0.5, 0.0, 0.0, 0.0],
        [-0.25, -0.25, 0.0, 0.25, 0.25, 0.0],
        [-0.25, -0.25, 0.0, 0.25, 0.25, 0.0],
        [0.0, -0.5, 0.0, 0.0, 0.0, 0.5],
    ];
    for (i, row) in hand.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert_relative_eq!(a.matrix.get(i, j), *v, epsilon = 1e-14);
        }
    }
}

fn two_triangle_ghost() -> Discretization {
    let spec = unit_square(1.0, 0, DiagonalPattern::Alternating);
    let zoom = LevelSet::half_plane([0.5, 0.0], [-1.0, 0.0]);
    Discretization::build(&spec, &LevelSet::Constant { value: -1.0 }, &zoom, false).unwrap()
}

#[test]
fn ghost_term_on_two_triangles_matches_hand_value() {
    let disc = two_triangle_ghost();
    let ghosts = &disc.decomp.ghost[FieldId::Macro.index()];
    assert_eq!(ghosts.len(), 1);
    assert_relative_eq!(ghosts[0].length, 2f64.sqrt(), epsilon = 1e-15);

    // ux = 1 at (1, 0) only: strain jump has xx = 1 and xy = -1/2, so
    // |Δε|² = 1.5 and β 𝓗 |Δε|² |F| = β · 2 · 1.5.
    let mesh = &disc.hm.coarse;
    let v = mesh.vertices.iter().position(|p| *p == Point::new(1.0, 0.0)).unwrap();
    let mut u = vec![0.0; disc.dofs.len()];
    u[disc.dofs.dof(FieldId::Macro, v, 0).unwrap()] = 1.0;
    for beta in [1.0, 2.0] {
        let mut trips = Triplets::new();
        let mut r = vec![0.0; u.len()];
        assemble_ghost(&disc.hm, &disc.decomp, &disc.dofs, &GhostParams { beta: [beta; 3] }, &u, &mut trips, &mut r);
        let energy: f64 = r.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert_relative_eq!(energy, 3.0 * beta, epsilon = 1e-13);
    }
}

#[test]
fn ghost_term_vanishes_for_linear_fields() {
    let (disc, _) = patch_setup(false);
    let lin = linear_field();
    let u: Vec<f64> = (0..disc.dofs.len())
        .map(|d| {
            let (f, v, c) = disc.dofs.vertex_of(d);
            lin.at(&mesh_of(&disc.hm, f).vertices[v])[c]
        })
        .collect();
    let mut trips = Triplets::new();
    let mut r = vec![0.0; u.len()];
    assemble_ghost(&disc.hm, &disc.decomp, &disc.dofs, &GhostParams { beta: [1.0; 3] }, &u, &mut trips, &mut r);
    assert!(!trips.entries.is_empty());
    assert!(r.iter().all(|x| x.abs() < 1e-14));
}

#[test]
fn top_traction_resultant_and_body_force() {
    let (disc, _) = patch_setup(false);
    let top = vec![Traction { tags: vec!["top".into()], value: [0.0, -0.01] }];
    let f = assemble_loads(&disc, &top, &BodyForce::None, 1.0).unwrap();
    let fy: f64 = (0..f.len()).filter(|d| d % 2 == 1).map(|d| f[d]).sum();
    let fx: f64 = (0..f.len()).filter(|d| d % 2 == 0).map(|d| f[d]).sum();
    assert_relative_eq!(fy, -0.01, epsilon = 1e-15);
    assert_eq!(fx, 0.0);

    let zero = assemble_loads(&disc, &[], &BodyForce::None, 1.0).unwrap();
    assert!(zero.iter().all(|v| *v == 0.0));

    let g = assemble_loads(&disc, &[], &BodyForce::Constant([2.0, -1.0]), 1.0).unwrap();
    let gx: f64 = (0..g.len()).filter(|d| d % 2 == 0).map(|d| g[d]).sum();
    let gy: f64 = (0..g.len()).filter(|d| d % 2 == 1).map(|d| g[d]).sum();
    assert_relative_eq!(gx, 2.0, epsilon = 1e-12);
    assert_relative_eq!(gy, -1.0, epsilon = 1e-12);

    let bad = vec![Traction { tags: vec!["roof".into()], value: [0.0, -0.01] }];
    let err = assemble_loads(&disc, &bad, &BodyForce::None, 1.0).unwrap_err();
    assert!(err.to_string().contains("roof"));
}

#[test]
fn clamped_unloaded_problem_stays_at_rest() {
    let (disc, spec) = patch_setup(true);
    assert_eq!(disc.dofs.field_len(FieldId::Inclusion), 0);
    let loading = Loading { dirichlet: vec![DirichletCondition::clamp(&["bottom"])], ..Default::default() };
    let p = params([1.0, 1.0, 0.78], &spec, 0.005);
    let (out, fixed) = solve_static(&disc, &p, &loading, 1.0, &disc.initial_states(), None, &NewtonConfig::default()).unwrap();
    assert!(out.iterations <= 1);
    assert!(out.u.iter().all(|v| *v == 0.0));
    assert!(!fixed.is_empty());
}

#[test]
fn no_zoom_gives_a_single_macro_field() {
    let spec = unit_square(0.25, 2, DiagonalPattern::Alternating);
    let disc =
        Discretization::build(&spec, &LevelSet::Constant { value: -1.0 }, &LevelSet::Constant { value: 1.0 }, false).unwrap();
    assert_eq!(disc.dofs.len(), 2 * disc.hm.coarse.vertices.len());
    assert!(!disc.dofs.has_field(FieldId::Matrix));
    let d = dirichlet_values(&disc, &[DirichletCondition::clamp(&["left"])], 1.0).unwrap();
    assert_eq!(d.len(), 2 * 5);
}

#[test]
fn half_plane_zoom_carries_both_scales_on_cut_elements() {
    let spec = unit_square(0.5, 1, DiagonalPattern::Uniform);
    let zoom = LevelSet::half_plane([0.4, 0.0], [1.0, 0.0]).complement();
    let disc = Discretization::build(&spec, &LevelSet::Constant { value: -1.0 }, &zoom, false).unwrap();
    let cut = disc.decomp.micro_coarse.iter().copied().find(|&e| disc.decomp.field(FieldId::Macro).is_active(e)).unwrap();
    let mut shared = 0;
    for v in disc.hm.coarse.triangles[cut] {
        assert!(disc.dofs.dof(FieldId::Macro, v, 0).is_some());
        // Coarse vertex `v` is fine vertex `v`; the one inside the zoom is
        // also a matrix-field vertex.
        if disc.hm.coarse.vertices[v].x > 0.4 {
            assert!(disc.dofs.dof(FieldId::Matrix, v, 0).is_some());
            shared += 1;
        }
    }
    assert!(shared > 0);
    let active = disc.hm.children[cut].iter().filter(|&&c| disc.decomp.field(FieldId::Matrix).is_active(c)).count();
    assert!(active > 0 && active < disc.hm.children[cut].len());
}
