mod common;

use cutzoom::assembly::{BoundaryValue, DirichletCondition, Discretization, FieldStates, SystemParams, Traction};
use cutzoom::levelset::LevelSet;
use cutzoom::materials::{ElasticParams, Material, PlasticParams};
use cutzoom::mesh::DiagonalPattern;
use cutzoom::scenario::{parse_config, Simulation};
use cutzoom::solver::{solve_static, Loading, NewtonConfig};
use cutzoom::Error;

use common::*;

fn pore_and_zoom() -> (Discretization, SystemParams) {
    let spec = unit_square(0.125, 1, DiagonalPattern::Alternating);
    let disc = Discretization::build(
        &spec,
        &LevelSet::circle([0.52, 0.47], 0.13).complement(),
        &LevelSet::circle([0.5, 0.5], 0.3),
        true,
    )
    .unwrap();
    let p = uniform_params([1.0, 1.0, 0.8], 0.3, &spec, 10.0, 0.005);
    (disc, p)
}

fn traction(tag: &str, value: [f64; 2]) -> Loading {
    Loading {
        dirichlet: vec![DirichletCondition::clamp(&["bottom"])],
        tractions: vec![Traction { tags: vec![tag.into()], value }],
        ..Default::default()
    }
}

#[test]
fn linear_response_superposes() {
    let (disc, p) = pore_and_zoom();
    let states = disc.initial_states();
    let cfg = NewtonConfig::default();
    let solve = |l: &Loading, factor: f64| solve_static(&disc, &p, l, factor, &states, None, &cfg).unwrap().0.u;
    let top = traction("top", [0.0, 0.01]);
    let side = traction("right", [0.005, 0.002]);
    let mut both = top.clone();
    both.tractions.extend(side.tractions.clone());
    let full = solve(&top, 1.0);
    let half = solve(&top, 0.5);
    let scale = full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in full.iter().zip(&half) {
        assert!((0.5 * a - b).abs() < 1e-10 * scale);
    }
    let s = solve(&side, 1.0);
    let sum = solve(&both, 1.0);
    for ((a, b), c) in full.iter().zip(&s).zip(&sum) {
        assert!((a + b - c).abs() < 1e-10 * scale);
    }
}

/// Uniform isochoric strain `diag(a, −a)` on every field: the deviatoric
/// stress never turns, so the return is exact whatever the step size.
fn pure_shear_run(steps: usize, a: f64, pl: PlasticParams) -> (Vec<f64>, FieldStates) {
    let spec = unit_square(0.25, 1, DiagonalPattern::Alternating);
    let disc =
        Discretization::build(&spec, &LevelSet::Constant { value: -1.0 }, &LevelSet::circle([0.45, 0.55], 0.3), false).unwrap();
    let mut p = uniform_params([1.0; 3], 0.3, &spec, 10.0, 0.005);
    p.materials = [Material { young: 1.0, poisson: 0.3, plastic: Some(pl) }; 3];
    let loading = Loading {
        dirichlet: vec![DirichletCondition {
            tags: EDGES.map(String::from).to_vec(),
            components: [true; 2],
            value: BoundaryValue::Affine { offset: [0.0; 2], gradient: [[a, 0.0], [0.0, -a]] },
        }],
        ..Default::default()
    };
    let mut states = disc.initial_states();
    let mut u = None;
    for k in 1..=steps {
        let (out, _) =
            solve_static(&disc, &p, &loading, k as f64 / steps as f64, &states, u.take(), &NewtonConfig::default()).unwrap();
        states = out.states;
        u = Some(out.u);
    }
    (u.unwrap(), states)
}

#[test]
fn proportional_plastic_path_is_independent_of_the_step_count() {
    let pl = PlasticParams { yield_stress: 0.01, hardening: 0.05, kinematic: 0.0 };
    let a = 0.02;
    let (u1, s1) = pure_shear_run(1, a, pl);
    let (u10, s10) = pure_shear_run(10, a, pl);
    for (x, y) in u1.iter().zip(&u10) {
        assert!((x - y).abs() < 1e-8);
    }
    // hand value: |ξ_tr| = 2μ √2 a and Δλ = f_tr / (√1.5 · 2μ + Ĥ)
    let e = ElasticParams::new(1.0, 0.3).unwrap();
    let f_tr = 1.5f64.sqrt() * 2.0 * e.mu * 2.0f64.sqrt() * a - pl.yield_stress;
    let p = f_tr / (1.5f64.sqrt() * 2.0 * e.mu + pl.hardening);
    for (x, y) in s1.iter().flatten().zip(s10.iter().flatten()) {
        assert!((x.p - y.p).abs() < 1e-8);
        assert!((x.p - p).abs() < 1e-10, "{} vs {p}", x.p);
    }
}

fn two_stage(steps: usize) -> String {
    format!(
        r#"
name = "two_stage"
void_mode = true
[mesh]
domain = [{{ min = [0.0, 0.0], max = [1.0, 1.0] }}]
h_coarse = 0.125
levels = 1
[microstructure]
type = "complement"
of = {{ type = "circle", center = [0.5, 0.5], radius = 0.12 }}
[[zoom]]
name = "small"
shape = {{ type = "circle", center = [0.5, 0.5], radius = 0.25 }}
[[zoom]]
name = "large"
from_step = 3
shape = {{ type = "circle", center = [0.5, 0.5], radius = 0.38 }}
[materials.matrix]
young = 1.0
poisson = 0.3
plastic = {{ yield_stress = 0.012, hardening = 0.01 }}
[materials.macro]
homogenized = true
plastic = {{ yield_stress = 0.012, hardening = 0.01 }}
[[boundary.dirichlet]]
tags = ["bottom"]
[[boundary.traction]]
tags = ["top"]
value = [0.003, 0.012]
[loading]
steps = {steps}
"#
    )
}

#[test]
fn relocation_changes_the_unknowns_at_its_step_and_keeps_equilibrium() {
    let mut sim = Simulation::new(parse_config(&two_stage(4)).unwrap()).unwrap();
    sim.run().unwrap();
    let r = &sim.records;
    assert_eq!(r.len(), 4);
    assert_eq!(r.iter().map(|x| x.relocated).collect::<Vec<_>>(), [false, false, true, false]);
    assert_eq!(r[0].dofs, r[1].dofs);
    assert!(r[2].dofs > r[1].dofs);
    assert_eq!(r[2].dofs, r[3].dofs);
    assert_eq!(r[2].zoom.as_deref(), Some("large"));
    assert!(sim.total_p() > 0.0);
    for x in r {
        assert!(x.balance_error() < 1e-9, "step {}: {:e}", x.step, x.balance_error());
        assert!((x.applied[1] - 0.012 * x.factor).abs() < 1e-14);
    }
    for w in r.windows(2) {
        assert!(w[1].sum_p >= w[0].sum_p);
    }
}

#[test]
fn step_failure_names_the_step() {
    let text = two_stage(4)
        .replace("value = [0.003, 0.012]", "value = [0.003, 0.012]\n[solver]\nmax_iters = 1\nrel_tol = 1e-300\nabs_tol = 1e-300");
    let mut sim = Simulation::new(parse_config(&text).unwrap()).unwrap();
    match sim.run() {
        Err(Error::Step { step, source }) => {
            assert_eq!(step, 1);
            assert!(matches!(*source, Error::NewtonDiverged { iterations: 1, .. }));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn single_steps_match_a_full_run() {
    let mut a = Simulation::new(parse_config(&two_stage(4)).unwrap()).unwrap();
    a.run().unwrap();
    let mut b = Simulation::new(parse_config(&two_stage(4)).unwrap()).unwrap();
    while b.step().unwrap().is_some() {}
    assert_eq!(a.u, b.u);
    assert_eq!(a.records, b.records);
}
