use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::Point3;

use super::{SolveOutput, SolveReport, StudyRow};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_report(report: &SolveReport, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, report)?;
    finish(w, path)
}

/// `N,MaxError,Rate` with an empty rate where none applies.
pub fn write_convergence_csv(rows: &[StudyRow], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "N,MaxError,Rate").map_err(io)?;
    for r in rows {
        let rate = r.rate.map(|v| format!("{v:.4}")).unwrap_or_default();
        writeln!(w, "{},{:.4e},{}", r.n, r.max_error, rate).map_err(io)?;
    }
    finish(w, path)
}

/// `iteration,residual`, starting at iteration 0.
pub fn write_residuals_csv(history: &[f64], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "iteration,residual").map_err(io)?;
    for (i, r) in history.iter().enumerate() {
        writeln!(w, "{i},{r:.6e}").map_err(io)?;
    }
    finish(w, path)
}

/// Axis-aligned plane `x_axis = value`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicePlane {
    pub axis: usize,
    pub value: f64,
}

impl std::str::FromStr for SlicePlane {
    type Err = Error;

    /// `x=0.1`, `y=0`, `z=-0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("slice `{s}` is not of the form axis=value"));
        let (a, v) = s.split_once('=').ok_or_else(bad)?;
        let axis = match a.trim() {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            _ => return Err(bad()),
        };
        let value = v.trim().parse().map_err(|_| bad())?;
        Ok(Self { axis, value })
    }
}

/// Paths written by [`export_slices`].
#[derive(Clone, Debug)]
pub struct SliceFiles {
    pub solution: PathBuf,
    pub error: Option<PathBuf>,
    pub rows: usize,
    /// Largest error value in the slice.
    pub max_error: Option<f64>,
}

/// Writes the grid plane nearest to `plane` as `x,y,z,value` CSV files: the
/// solution, and `|u - u_exact|` on `M⁺` (zero elsewhere) when an exact
/// solution is given.
pub fn export_slices(
    out: &SolveOutput,
    exact: Option<&dyn Fn(Point3) -> f64>,
    plane: SlicePlane,
    dir: &Path,
) -> Result<SliceFiles> {
    let grid = out.solution.grid;
    let (lo, hi) = (grid.coord(0), grid.coord(grid.n - 1));
    if plane.axis > 2 || !(plane.value >= lo - 0.5 * grid.h && plane.value <= hi + 0.5 * grid.h) {
        return Err(Error::Domain(format!(
            "slice plane {plane:?} lies outside the grid [{lo}, {hi}]"
        )));
    }
    let index = (((plane.value - lo) / grid.h).round() as usize).min(grid.n - 1);
    let name = ["x", "y", "z"][plane.axis];
    let sol_path = dir.join(format!("slice_{name}_solution.csv"));
    let err_path = dir.join(format!("slice_{name}_error.csv"));
    let mut sol = create(&sol_path)?;
    let mut err = exact.map(|_| create(&err_path)).transpose()?;
    let io = |e| Error::io(dir, e);
    writeln!(sol, "x,y,z,value").map_err(io)?;
    if let Some(w) = err.as_mut() {
        writeln!(w, "x,y,z,value").map_err(io)?;
    }
    let mut rows = 0;
    let mut max_error: f64 = 0.0;
    for a in 0..grid.n {
        for b in 0..grid.n {
            let ijk = match plane.axis {
                0 => [index, a, b],
                1 => [a, index, b],
                _ => [a, b, index],
            };
            let idx = grid.index(ijk);
            let p = grid.point(ijk);
            let u = out.solution.values[idx];
            writeln!(sol, "{},{},{},{:.12e}", p[0], p[1], p[2], u).map_err(io)?;
            if let (Some(w), Some(ex)) = (err.as_mut(), exact) {
                let e = if out.classification.is_inside(idx) { (u - ex(p)).abs() } else { 0.0 };
                max_error = max_error.max(e);
                writeln!(w, "{},{},{},{:.12e}", p[0], p[1], p[2], e).map_err(io)?;
            }
            rows += 1;
        }
    }
    finish(sol, &sol_path)?;
    if let Some(w) = err {
        finish(w, &err_path)?;
    }
    Ok(SliceFiles {
        solution: sol_path,
        error: exact.map(|_| err_path),
        rows,
        max_error: exact.map(|_| max_error),
    })
}

/// Legacy-VTK structured points with the solution, the `M⁺` mask and, when
/// given, the pointwise error.
pub fn write_vtk(out: &SolveOutput, exact: Option<&dyn Fn(Point3) -> f64>, path: &Path) -> Result<()> {
    let grid = out.solution.grid;
    let n = grid.n;
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "# vtk DataFile Version 3.0\nsolution\nASCII\nDATASET STRUCTURED_POINTS").map_err(io)?;
    writeln!(w, "DIMENSIONS {n} {n} {n}").map_err(io)?;
    let o = grid.coord(0);
    writeln!(w, "ORIGIN {o} {o} {o}\nSPACING {0} {0} {0}", grid.h).map_err(io)?;
    writeln!(w, "POINT_DATA {}", grid.len()).map_err(io)?;
    // VTK orders points with x fastest.
    let order = || (0..n).flat_map(move |k| (0..n).flat_map(move |j| (0..n).map(move |i| grid.index([i, j, k]))));
    writeln!(w, "SCALARS u double 1\nLOOKUP_TABLE default").map_err(io)?;
    for idx in order() {
        writeln!(w, "{:.10e}", out.solution.values[idx]).map_err(io)?;
    }
    writeln!(w, "SCALARS inside int 1\nLOOKUP_TABLE default").map_err(io)?;
    for idx in order() {
        writeln!(w, "{}", out.classification.is_inside(idx) as u8).map_err(io)?;
    }
    if let Some(ex) = exact {
        writeln!(w, "SCALARS error double 1\nLOOKUP_TABLE default").map_err(io)?;
        for idx in order() {
            let e = if out.classification.is_inside(idx) {
                (out.solution.values[idx] - ex(grid.point(grid.ijk(idx)))).abs()
            } else {
                0.0
            };
            writeln!(w, "{e:.10e}").map_err(io)?;
        }
    }
    finish(w, path)
}
