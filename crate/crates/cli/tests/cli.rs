use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
name = "tiny"
[mesh]
domain = [{ min = [0.0, 0.0], max = [1.0, 1.0] }]
h_coarse = 0.25
levels = 1
[[zoom]]
name = "corner"
shape = { type = "circle", center = [0.0, 0.0], radius = 0.4 }
[materials.matrix]
young = 1.0
poisson = 0.3
[materials.macro]
young = 1.0
poisson = 0.3
[[boundary.dirichlet]]
tags = ["bottom"]
[[boundary.traction]]
tags = ["top"]
value = [0.0, 0.01]
[loading]
steps = 2
"#;

fn cutzoom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutzoom")).args(args).env("CUTZOOM_LOG", "warn").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn run_writes_results_and_prints_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tiny.toml", SMALL);
    let out_dir = dir.path().join("out");
    let out = cutzoom(&["run", &cfg, "--output-dir", out_dir.to_str().unwrap(), "--steps", "3", "--dump-geometry"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("step")).count(), 3);
    for f in ["summary.csv", "report.json", "tiny_step0003.vtk", "tiny_initial_coarse.vtk", "tiny_initial_fine.vtk"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
}

#[test]
fn configuration_and_file_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = cutzoom(&["run", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let bad = write(dir.path(), "bad.toml", &SMALL.replace(r#"tags = ["top"]"#, r#"tags = ["lid"]"#));
    let out = cutzoom(&["run", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'lid'"));
}

#[test]
fn solver_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}[solver]\nmax_iters = 1\nrel_tol = 1e-300\nabs_tol = 1e-300\n");
    let cfg = write(dir.path(), "strict.toml", &text);
    let out = cutzoom(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step 1"));
}
