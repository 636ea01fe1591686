use std::path::Path;
use std::process::Command;

use ubae::geometry::{classify, AuxiliaryBox, Shape};
use ubae::pipeline::{
    export_slices, solve, solve_problem, study_table, write_convergence_csv, FileConfig, Manufactured, Problem,
    RunConfig, SlicePlane,
};
use ubae::Point3;

fn cache() -> std::path::PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("lgf-cache")
}

fn sphere_cfg() -> RunConfig {
    RunConfig {
        geometry: Shape::Sphere { radius: 0.7 },
        n: 4,
        exact: Some(Manufactured::Quadratic),
        lgf_cache: Some(cache()),
        ..RunConfig::default()
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ubae"))
}

#[test]
fn slices_cover_one_grid_plane() {
    let out = solve(&sphere_cfg()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let exact = |p: Point3| Manufactured::Quadratic.u(p);
    let files = export_slices(&out, Some(&exact), "z=0".parse().unwrap(), dir.path()).unwrap();
    let n = out.solution.grid.n;
    assert_eq!(files.rows, n * n);

    let text = std::fs::read_to_string(files.error.as_ref().unwrap()).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), n * n);
    assert!(values.iter().all(|&v| v >= 0.0));
    let slice_max = files.max_error.unwrap();
    assert!(slice_max <= out.report.max_error.unwrap());
    let written = values.iter().cloned().fold(0.0, f64::max);
    assert!((written - slice_max).abs() <= 1e-11 * slice_max);

    let far = SlicePlane { axis: 2, value: 5.0 };
    assert!(export_slices(&out, None, far, dir.path()).is_err());
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let a = solve(&sphere_cfg()).unwrap();
    let b = solve(&sphere_cfg()).unwrap();
    assert_eq!(a.solution.values, b.solution.values);
    assert_eq!(a.report.residual_history, b.report.residual_history);
}

#[test]
fn convergence_csv_has_rates() {
    let reports: Vec<_> = [3, 4]
        .iter()
        .map(|&n| solve(&RunConfig { n, ..sphere_cfg() }).unwrap().report)
        .collect();
    let rows = study_table(&reports);
    assert!(rows[0].rate.is_none());
    assert!(rows[1].rate.unwrap().is_finite());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("convergence.csv");
    write_convergence_csv(&rows, &path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,MaxError,Rate");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("7,"));
    assert!(lines[2].starts_with("15,"));
}

#[test]
fn boundary_grows_fourfold_per_refinement() {
    let shape = Shape::Ellipsoid { a: 1.0, b: 0.8, c: 0.4 };
    let counts: Vec<usize> = [5, 6, 7]
        .iter()
        .map(|&n| {
            let grid = AuxiliaryBox::new(0.25, n).unwrap();
            classify(&grid, &shape).unwrap().gamma_minus().len()
        })
        .collect();
    for w in counts.windows(2) {
        let ratio = w[1] as f64 / w[0] as f64;
        assert!((3.5..=4.5).contains(&ratio), "{counts:?}");
    }
}

/// `xy + z/2 - 0.3x + 1` is harmonic for the 7-point operator and is
/// reproduced exactly by multilinear interpolation, so the discrete problem
/// recovers it up to the solver tolerance.
#[test]
fn lattice_harmonic_data_is_reproduced() {
    let w = |[x, y, z]: Point3| x * y + 0.5 * z - 0.3 * x + 1.0;
    let zero = |_: Point3| 0.0;
    let mut cfg = sphere_cfg();
    cfg.gmres.tol = 1e-14;
    let problem = Problem { geometry: cfg.geometry.into(), source: &zero, boundary: &w, exact: Some(&w) };
    let out = solve_problem(&cfg, &problem).unwrap();
    assert!(out.report.converged);
    let err = out.report.max_error.unwrap();
    assert!(err <= 1e-10, "{err}");
}

#[test]
fn readme_config_parses() {
    let readme = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    let json = readme.split("```json").nth(1).unwrap().split("```").next().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, json).unwrap();
    let mut cfg = RunConfig::default();
    cfg.merge(&FileConfig::load(&path).unwrap()).unwrap();
    assert_eq!(cfg.geometry, Shape::Torus { major: 0.6, minor: 0.3 });
    assert_eq!(cfg.n, 6);
    assert_eq!(cfg.sigma, 10.0);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let common = |cmd: &mut Command| {
        cmd.args(["--n", "4", "--exact", "quadratic", "--lgf-cache"])
            .arg(cache())
            .arg("--out")
            .arg(dir.path());
    };

    let mut ok = bin();
    common(&mut ok);
    ok.args(["--geometry", "sphere:0.7", "--slice", "z=0"]);
    assert_eq!(ok.status().unwrap().code(), Some(0));
    for f in ["report.json", "residuals.csv", "convergence.csv", "slice_z_solution.csv", "slice_z_error.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    let mut capped = bin();
    common(&mut capped);
    capped.args(["--geometry", "sphere:0.7", "--max-iter", "1"]);
    assert_eq!(capped.status().unwrap().code(), Some(2));
    assert!(dir.path().join("report.json").exists());

    let mut bad = bin();
    common(&mut bad);
    bad.args(["--geometry", "sphere:0.7", "--sigma=-1"]);
    assert_eq!(bad.status().unwrap().code(), Some(1));

    let mut outside = bin();
    common(&mut outside);
    outside.args(["--geometry", "sphere:1.4"]);
    assert_eq!(outside.status().unwrap().code(), Some(1));
}
