//! End-to-end solves, convergence studies and result files.

mod config;
mod output;

pub use config::{FileConfig, Formulation, Manufactured, RunConfig};
pub use output::{export_slices, write_convergence_csv, write_report, write_residuals_csv, write_vtk, SlicePlane};

use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::boxsolver::{particular_solution, reconstruct, BoxSolver};
use crate::error::Result;
use crate::geometry::{build_collocation_with, classify, AuxiliaryBox, GammaSlot, GridClassification, LevelSet, LevelSetGeometry};
use crate::krylov::{gmres, GmresResult};
use crate::lattice_ops::{build_closure, BoundaryDensity, ClosureNode, GridFunction};
use crate::lgf::build_table;
use crate::potentials::{Layer, Potentials};
use crate::Point3;

/// Wall-clock seconds per stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub classify: f64,
    pub lgf: f64,
    pub particular: f64,
    pub gmres: f64,
    pub reconstruct: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub geometry: String,
    pub formulation: Formulation,
    pub sigma: f64,
    pub ell: f64,
    /// Interior nodes per dimension.
    pub n: usize,
    pub h: f64,
    pub m_plus: usize,
    pub gamma_plus: usize,
    pub gamma_minus: usize,
    pub table_extent: usize,
    /// Collocation rows whose hat support is not entirely in γ.
    pub incomplete_rows: usize,
    /// Max-norm error over `M⁺`; present iff an exact solution was given.
    pub max_error: Option<f64>,
    pub gmres_iterations: usize,
    pub converged: bool,
    pub true_residual: f64,
    pub residual_history: Vec<f64>,
    pub box_solves: usize,
    pub timings: StageTimings,
}

/// Data for one boundary value problem.
pub struct Problem<'a> {
    pub geometry: LevelSetGeometry,
    /// Right-hand side `f`.
    pub source: &'a (dyn Fn(Point3) -> f64 + Sync),
    /// Dirichlet data `g` on Γ.
    pub boundary: &'a (dyn Fn(Point3) -> f64 + Sync),
    pub exact: Option<&'a (dyn Fn(Point3) -> f64 + Sync)>,
}

pub struct SolveOutput {
    pub report: SolveReport,
    /// Solution on `M⁺`, zero elsewhere.
    pub solution: GridFunction,
    pub classification: GridClassification,
    /// Density of the indirect formulations (empty for `Direct`).
    pub density: Vec<f64>,
    /// `u_γ`.
    pub boundary_values: BoundaryDensity,
}

/// Runs the configured problem; the exact solution (if any) supplies `f` and
/// `g`, otherwise both are zero.
pub fn solve(cfg: &RunConfig) -> Result<SolveOutput> {
    let exact = cfg.exact.unwrap_or(Manufactured::Zero);
    let sigma = cfg.sigma;
    let f = move |p: Point3| exact.f(p, sigma);
    let u = move |p: Point3| exact.u(p);
    let problem = Problem {
        geometry: cfg.geometry.into(),
        source: &f,
        boundary: &u,
        exact: cfg.exact.map(|_| &u as &(dyn Fn(Point3) -> f64 + Sync)),
    };
    solve_problem(cfg, &problem)
}

/// The full pipeline for arbitrary `f`, `g` and geometry; `cfg.geometry` and
/// `cfg.exact` are ignored.
pub fn solve_problem(cfg: &RunConfig, problem: &Problem<'_>) -> Result<SolveOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let geom: &dyn LevelSet = &problem.geometry;

    let t = Instant::now();
    let grid = AuxiliaryBox::new(cfg.ell, cfg.n)?;
    let cls = classify(&grid, geom)?;
    let colloc = build_collocation_with(&cls, geom, cfg.collocation)?;
    let phi = build_closure(&colloc, &cls, cfg.closure)?;
    timings.classify = t.elapsed().as_secs_f64();
    info!(
        "N = {}, |γ₊| = {}, |γ₋| = {}, incomplete closure rows = {}",
        grid.n,
        cls.gamma_plus().len(),
        cls.gamma_minus().len(),
        phi.incomplete_rows()
    );

    let t = Instant::now();
    let extent = cls.required_extent();
    let table = build_table(cfg.sigma * grid.h * grid.h, extent, &cfg.lgf, cfg.lgf_cache.as_deref())?;
    timings.lgf = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let solver = BoxSolver::new(grid, cfg.sigma)?;
    let up = particular_solution(problem.source, &cls, &solver)?;
    let up_gamma = up.trace(&cls);
    let g: Vec<f64> = colloc.points().map(problem.boundary).collect();
    let b: Vec<f64> = g.iter().zip(phi.apply_grid(&up, &cls)).map(|(a, c)| a - c).collect();
    timings.particular = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let pot = Potentials::new(&table, &cls, cfg.sigma)?;
    let np = cls.gamma_plus().len();
    // Closure rows only touch a few nodes each; evaluate potentials there.
    let mut targets: Vec<usize> = Vec::new();
    let mut position = std::collections::HashMap::new();
    let rows: Vec<Vec<(usize, f64)>> = phi
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|&(node, w)| {
                    let idx = match node {
                        ClosureNode::Gamma(GammaSlot::Plus(i)) => cls.gamma_plus()[i],
                        ClosureNode::Gamma(GammaSlot::Minus(i)) => cls.gamma_minus()[i],
                        ClosureNode::Interior(i) => phi.interior_nodes[i],
                    };
                    let at = *position.entry(idx).or_insert_with(|| {
                        targets.push(idx);
                        targets.len() - 1
                    });
                    (at, w)
                })
                .collect()
        })
        .collect();
    let closure = |rho: &[f64]| -> Result<Vec<f64>> {
        let values = pot.evaluate_at_nodes(rho, &targets)?;
        Ok(rows.iter().map(|row| row.iter().map(|&(at, w)| w * values[at]).sum()).collect())
    };
    let (result, v, density): (GmresResult, BoundaryDensity, Vec<f64>) = match cfg.formulation {
        Formulation::Double | Formulation::Single => {
            let layer = if cfg.formulation == Formulation::Double { Layer::Double } else { Layer::Single };
            let res = gmres(|q| closure(&pot.layer_charges(layer, q)?), &b, &cfg.gmres)?;
            let v = pot.layer_trace(layer, &res.x)?;
            let q = res.x.clone();
            (res, v, q)
        }
        Formulation::Direct => {
            let split = |x: &[f64]| BoundaryDensity {
                plus: x[..np].to_vec(),
                minus: x[np..].to_vec(),
            };
            let rhs: Vec<f64> = std::iter::repeat(0.0).take(np).chain(b.iter().copied()).collect();
            let res = gmres(
                |x| {
                    let d = split(x);
                    let rho = pot.direct_charges(&d)?;
                    let mut y = pot.apply_direct(&d)?;
                    // Closure on γ uses the unknowns themselves; M⁺ values
                    // come from the Green's formula.
                    let interior = pot.evaluate_at_nodes(&rho, &phi.interior_nodes)?;
                    y.extend(phi.apply(&d.plus, &d.minus, &interior));
                    Ok(y)
                },
                &rhs,
                &cfg.gmres,
            )?;
            let v = split(&res.x);
            (res, v, Vec::new())
        }
    };
    timings.gmres = t.elapsed().as_secs_f64();
    if !result.converged {
        warn!(
            "GMRES stopped after {} iterations at relative residual {:.3e}",
            result.iterations, result.true_residual
        );
    }

    let t = Instant::now();
    let u_gamma = v.add(&up_gamma);
    let solution = reconstruct(&u_gamma, &up, &cls, &solver)?;
    timings.reconstruct = t.elapsed().as_secs_f64();

    let max_error = problem.exact.map(|ex| {
        cls.m_plus()
            .map(|idx| (solution.values[idx] - ex(grid.point(grid.ijk(idx)))).abs())
            .fold(0.0, f64::max)
    });
    timings.total = start.elapsed().as_secs_f64();

    let report = SolveReport {
        geometry: match &problem.geometry {
            LevelSetGeometry::Shape(s) => s.to_string(),
            LevelSetGeometry::Custom(_) => "custom".into(),
        },
        formulation: cfg.formulation,
        sigma: cfg.sigma,
        ell: cfg.ell,
        n: grid.n,
        h: grid.h,
        m_plus: cls.m_plus_count(),
        gamma_plus: np,
        gamma_minus: cls.gamma_minus().len(),
        table_extent: extent,
        incomplete_rows: phi.incomplete_rows(),
        max_error,
        gmres_iterations: result.iterations,
        converged: result.converged,
        true_residual: result.true_residual,
        residual_history: result.history,
        box_solves: solver.solve_count(),
        timings,
    };
    Ok(SolveOutput {
        report,
        solution,
        classification: cls,
        density,
        boundary_values: u_gamma,
    })
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub max_error: f64,
    /// `log₂(e_prev / e)` against the previous row; `None` for the first row
    /// and for repeated grids.
    pub rate: Option<f64>,
}

/// Builds the `(N, MaxError, Rate)` table from successive reports.
pub fn study_table(reports: &[SolveReport]) -> Vec<StudyRow> {
    let mut rows: Vec<StudyRow> = Vec::with_capacity(reports.len());
    for r in reports {
        let e = r.max_error.unwrap_or(f64::NAN);
        let rate = rows.last().and_then(|prev| {
            if prev.n == r.n {
                warn!("repeated grid N = {} in convergence study", r.n);
                None
            } else {
                Some((prev.max_error / e).log2())
            }
        });
        rows.push(StudyRow { n: r.n, max_error: e, rate });
    }
    rows
}

/// Runs each configuration in order. A failing member ends the study; the
/// rows gathered so far are returned alongside the error.
pub fn convergence_study(cfgs: &[RunConfig]) -> std::result::Result<(Vec<StudyRow>, Vec<SolveReport>), (Vec<StudyRow>, crate::Error)> {
    let mut reports = Vec::new();
    for cfg in cfgs {
        match solve(cfg) {
            Ok(out) => reports.push(out.report),
            Err(e) => return Err((study_table(&reports), e)),
        }
    }
    Ok((study_table(&reports), reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;

    fn report(n: usize, e: f64) -> SolveReport {
        let cfg = RunConfig::default();
        SolveReport {
            geometry: cfg.geometry.to_string(),
            formulation: cfg.formulation,
            sigma: 0.0,
            ell: 0.25,
            n,
            h: 0.1,
            m_plus: 0,
            gamma_plus: 0,
            gamma_minus: 0,
            table_extent: 0,
            incomplete_rows: 0,
            max_error: Some(e),
            gmres_iterations: 0,
            converged: true,
            true_residual: 0.0,
            residual_history: vec![],
            box_solves: 2,
            timings: StageTimings::default(),
        }
    }

    #[test]
    fn rates_from_successive_rows() {
        let rows = study_table(&[report(31, 4e-3), report(63, 1e-3), report(63, 1e-3)]);
        assert_eq!(rows[0].rate, None);
        assert!((rows[1].rate.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(rows[2].rate, None);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let cfg = RunConfig {
            geometry: Shape::Sphere { radius: 0.5 },
            n: 4,
            exact: Some(Manufactured::Zero),
            ..RunConfig::default()
        };
        let out = solve(&cfg).unwrap();
        assert_eq!(out.report.gmres_iterations, 0);
        assert_eq!(out.report.max_error, Some(0.0));
        assert!(out.density.iter().all(|&q| q == 0.0));
        assert_eq!(out.report.box_solves, 2);
    }
}
