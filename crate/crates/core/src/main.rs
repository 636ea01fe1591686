use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;

use ubae::geometry::{CollocationMode, Shape};
use ubae::lattice_ops::ClosureMode;
use ubae::pipeline::{
    export_slices, solve, study_table, write_convergence_csv, write_report, write_residuals_csv, write_vtk, FileConfig,
    Formulation, Manufactured, RunConfig, SlicePlane,
};
use ubae::Point3;

/// Solve -Δu + σu = f on an implicit 3D domain with lattice Green's function
/// boundary equations.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Flat JSON run file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `sphere:R`, `ellipsoid:a,b,c` or `torus:R,r`.
    #[arg(long)]
    geometry: Option<Shape>,
    /// Grid exponent, N = 2^n - 1. Repeat for a convergence study.
    #[arg(long, num_args = 1..)]
    n: Vec<u32>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Box margin ℓ: the box is [-1-ℓ, 1+ℓ]³.
    #[arg(long)]
    ell: Option<f64>,
    /// double, single or direct.
    #[arg(long)]
    formulation: Option<Formulation>,
    /// Boundary points: gridline or normal.
    #[arg(long)]
    collocation: Option<CollocationMode>,
    /// Closure rows: drop or extend.
    #[arg(long)]
    closure: Option<ClosureMode>,
    /// GMRES relative residual target.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Manufactured solution: quadratic, trig or zero.
    #[arg(long)]
    exact: Option<Manufactured>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for cached Green's function tables.
    #[arg(long)]
    lgf_cache: Option<PathBuf>,
    /// Slice planes such as `z=0`.
    #[arg(long)]
    slice: Vec<SlicePlane>,
    /// Also write solution.vtk.
    #[arg(long)]
    vtk: bool,
}

fn build_config(cli: &Cli) -> ubae::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.merge(&FileConfig::load(path)?)?;
    }
    if let Some(g) = cli.geometry {
        cfg.geometry = g;
    }
    if let Some(v) = cli.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = cli.ell {
        cfg.ell = v;
    }
    if let Some(v) = cli.formulation {
        cfg.formulation = v;
    }
    if let Some(v) = cli.collocation {
        cfg.collocation = v;
    }
    if let Some(v) = cli.closure {
        cfg.closure = v;
    }
    if let Some(v) = cli.tol {
        cfg.gmres.tol = v;
    }
    if let Some(v) = cli.max_iter {
        cfg.gmres.max_iter = v;
    }
    if let Some(v) = cli.exact {
        cfg.exact = Some(v);
    }
    if let Some(v) = &cli.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = &cli.lgf_cache {
        cfg.lgf_cache = Some(v.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> ubae::Result<bool> {
    let base = build_config(cli)?;
    let exponents = if cli.n.is_empty() { vec![base.n] } else { cli.n.clone() };
    let out_dir = base.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut reports = Vec::new();
    let mut all_converged = true;
    for &n in &exponents {
        let cfg = RunConfig { n, ..base.clone() };
        let out = solve(&cfg)?;
        let r = &out.report;
        println!(
            "N = {:4}  |γ₊| = {:6}  |γ₋| = {:6}  iters = {:4}  residual = {:.2e}  error = {}  ({:.1} s)",
            r.n,
            r.gamma_plus,
            r.gamma_minus,
            r.gmres_iterations,
            r.true_residual,
            r.max_error.map(|e| format!("{e:.4e}")).unwrap_or_else(|| "-".into()),
            r.timings.total
        );
        all_converged &= r.converged;
        let dir = if exponents.len() > 1 { out_dir.join(format!("n{n}")) } else { out_dir.clone() };
        write_report(r, &dir.join("report.json"))?;
        write_residuals_csv(&r.residual_history, &dir.join("residuals.csv"))?;
        let exact = cfg.exact.map(|m| move |p: Point3| m.u(p));
        let exact_ref = exact.as_ref().map(|f| f as &dyn Fn(Point3) -> f64);
        for &plane in &cli.slice {
            export_slices(&out, exact_ref, plane, &dir)?;
        }
        if cli.vtk {
            write_vtk(&out, exact_ref, &dir.join("solution.vtk"))?;
        }
        reports.push(out.report);
    }
    if base.exact.is_some() {
        write_convergence_csv(&study_table(&reports), &out_dir.join("convergence.csv"))?;
    }
    Ok(all_converged)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
