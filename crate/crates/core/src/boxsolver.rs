//! Zero-Dirichlet solver for `L_h u = q` on the auxiliary box, by a type-I
//! sine transform along each axis.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::{AuxiliaryBox, GridClassification};
use crate::lattice_ops::{masked_lh_of_extension, BoundaryDensity, GridFunction};
use crate::Point3;

/// DST-I of length `N` through a complex FFT of length `2(N + 1)` applied to
/// the odd extension.
pub struct SineTransformPlan {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    /// `2 - 2 cos(pπ/(N+1))` for `p = 1..=N`.
    symbol: Vec<f64>,
}

impl SineTransformPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (n + 1));
        let symbol = (1..=n)
            .map(|p| 2.0 - 2.0 * (p as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .collect();
        Self { n, fft, symbol }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `λ_{pqr} = σ + Σ (2 - 2cos(p_i π/(N+1))) / h²`, all positive for `σ ≥ 0`.
    pub fn eigenvalue(&self, p: [usize; 3], sigma: f64, h: f64) -> f64 {
        sigma + (self.symbol[p[0]] + self.symbol[p[1]] + self.symbol[p[2]]) / (h * h)
    }

    /// Unnormalised `X_k = Σ_n x_n sin(π(n+1)(k+1)/(N+1))` in place along
    /// one axis of the cube; `stride` selects the axis.
    fn transform_axis(&self, data: &mut [f64], stride: usize) {
        let n = self.n;
        let m = 2 * (n + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); m];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for line in 0..n * n {
            // Start index of the line: enumerate the two other axes.
            let start = (line / stride) * stride * n + line % stride;
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for t in 0..n {
                let v = data[start + t * stride];
                buf[t + 1] = Complex::new(v, 0.0);
                buf[m - 1 - t] = Complex::new(-v, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for t in 0..n {
                data[start + t * stride] = -0.5 * buf[t + 1].im;
            }
        }
    }

    fn transform3(&self, data: &mut [f64]) {
        let n = self.n;
        self.transform_axis(data, 1);
        self.transform_axis(data, n);
        self.transform_axis(data, n * n);
    }
}

/// `G_h`: inverse of `L_h` with zero Dirichlet data on the box faces.
pub struct BoxSolver {
    pub grid: AuxiliaryBox,
    pub sigma: f64,
    plan: SineTransformPlan,
    solves: AtomicUsize,
}

impl BoxSolver {
    pub fn new(grid: AuxiliaryBox, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::Config(format!("sigma must be non-negative, got {sigma}")));
        }
        Ok(Self {
            grid,
            sigma,
            plan: SineTransformPlan::new(grid.n),
            solves: AtomicUsize::new(0),
        })
    }

    /// Number of calls to [`BoxSolver::solve`] so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn solve(&self, rhs: &GridFunction) -> Result<GridFunction> {
        if rhs.grid.n != self.grid.n {
            return Err(Error::Shape {
                expected: self.grid.len(),
                got: rhs.values.len(),
            });
        }
        self.solves.fetch_add(1, Ordering::Relaxed);
        let n = self.grid.n;
        let h = self.grid.h;
        let mut data = rhs.values.clone();
        self.plan.transform3(&mut data);
        let scale = (2.0 / (n + 1) as f64).powi(3);
        for (idx, v) in data.iter_mut().enumerate() {
            let p = self.grid.ijk(idx);
            *v *= scale / self.plan.eigenvalue(p, self.sigma, h);
        }
        self.plan.transform3(&mut data);
        Ok(GridFunction {
            grid: self.grid,
            values: data,
        })
    }
}

/// `G_h[χ_{M⁺} f]` on the whole box.
pub fn particular_solution(f: impl Fn(Point3) -> f64, cls: &GridClassification, solver: &BoxSolver) -> Result<GridFunction> {
    let grid = cls.grid;
    let mut rhs = GridFunction::zeros(grid);
    for idx in cls.m_plus() {
        rhs.values[idx] = f(grid.point(grid.ijk(idx)));
    }
    solver.solve(&rhs)
}

/// Discrete generalised Green's formula `u = G_h[χ_{M⁻} L_h u_γ] + u_p`,
/// restricted to `M⁺` (zero elsewhere). One box solve.
pub fn reconstruct(
    u_gamma: &BoundaryDensity,
    particular: &GridFunction,
    cls: &GridClassification,
    solver: &BoxSolver,
) -> Result<GridFunction> {
    u_gamma.check(cls)?;
    let rhs = masked_lh_of_extension(u_gamma, cls, solver.sigma);
    let mut u = solver.solve(&rhs)?;
    for (idx, v) in u.values.iter_mut().enumerate() {
        *v = if cls.is_inside(idx) { *v + particular.values[idx] } else { 0.0 };
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_ops::apply_lh;

    #[test]
    fn sine_mode_round_trip() {
        let grid = AuxiliaryBox::new(0.25, 4).unwrap();
        let solver = BoxSolver::new(grid, 3.0).unwrap();
        let n1 = (grid.n + 1) as f64;
        let pi = std::f64::consts::PI;
        let mode = GridFunction::from_fn(grid, |_| 0.0);
        let mode = GridFunction {
            values: (0..grid.len())
                .map(|idx| {
                    let [i, j, k] = grid.ijk(idx);
                    (pi * 2.0 * (i + 1) as f64 / n1).sin()
                        * (pi * 5.0 * (j + 1) as f64 / n1).sin()
                        * (pi * (k + 1) as f64 / n1).sin()
                })
                .collect(),
            ..mode
        };
        let back = solver.solve(&apply_lh(&mode, 3.0, grid.h)).unwrap();
        for (a, b) in back.values.iter().zip(&mode.values) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(solver.solve_count(), 1);
    }

    #[test]
    fn zero_rhs() {
        let grid = AuxiliaryBox::new(0.1, 3).unwrap();
        let solver = BoxSolver::new(grid, 0.0).unwrap();
        let u = solver.solve(&GridFunction::zeros(grid)).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn solve_inverts_lh() {
        let grid = AuxiliaryBox::new(0.25, 3).unwrap();
        let solver = BoxSolver::new(grid, 0.0).unwrap();
        let rhs = GridFunction::from_fn(grid, |[x, y, z]| (3.0 * x).sin() + y * z - 0.3);
        let u = solver.solve(&rhs).unwrap();
        let back = apply_lh(&u, 0.0, grid.h);
        for (a, b) in back.values.iter().zip(&rhs.values) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn negative_sigma_rejected() {
        let grid = AuxiliaryBox::new(0.25, 3).unwrap();
        assert!(BoxSolver::new(grid, -1.0).is_err());
    }
}
