//! `σ > 0`: periodic trapezoid rule for the Fourier integral
//! `G_σ(n) = (2π)^{-3} ∫ e^{i n·θ} / (6 + σ - 2 Σ cos θ_i) dθ`.
//!
//! The rule on an `N³` grid returns the `N`-periodic image sum of `G_σ`, so
//! its error at offset `n` is the contribution of the images `n + N k`. The
//! integrand is even in every `θ_i`, which reduces the sum to separable
//! cosine contractions over `θ_i ∈ [0, π]`.

use log::debug;
use rayon::prelude::*;

use super::table::LgfTable;
use super::LgfEvalConfig;
use crate::error::{Error, Result};

/// Largest Fourier grid accepted per dimension.
const MAX_TRAPEZOID_SIZE: usize = 2048;

/// Grid size used for `(σ, extent)`: even, at least `cfg.trapezoid_size` and
/// `2·extent + 2`, and large enough that the nearest periodic images (at
/// distance `N - extent`) fall below `quad_tol / 10` assuming decay
/// `e^{-κ d}/(4π d)` with `cosh κ = 1 + σ/2`.
pub fn trapezoid_size_for(sigma: f64, extent: usize, cfg: &LgfEvalConfig) -> Result<usize> {
    let kappa = 2.0 * (0.5 * sigma.sqrt()).asinh();
    let mut n = (cfg.trapezoid_size as usize).max(2 * extent + 2);
    n += n % 2;
    loop {
        let d = (n - extent) as f64;
        let image = 6.0 * (-kappa * d).exp() / (4.0 * std::f64::consts::PI * d);
        if image <= 0.1 * cfg.quad_tol {
            return Ok(n);
        }
        n += 2;
        if n > MAX_TRAPEZOID_SIZE {
            return Err(Error::Trapezoid(format!(
                "sigma {sigma:e} decays too slowly: more than {MAX_TRAPEZOID_SIZE} points per dimension needed for extent {extent}"
            )));
        }
    }
}

struct Axis {
    cos_theta: Vec<f64>,
    weight: Vec<f64>,
    // harmonics[c * len + p] = cos(c θ_p)
    harmonics: Vec<f64>,
}

impl Axis {
    fn new(n: usize, shifted: bool, extent: usize) -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        let (theta, weight): (Vec<f64>, Vec<f64>) = if shifted {
            (0..n / 2).map(|p| (two_pi * (p as f64 + 0.5) / n as f64, 2.0)).unzip()
        } else {
            (0..=n / 2)
                .map(|p| {
                    let w = if p == 0 || p == n / 2 { 1.0 } else { 2.0 };
                    (two_pi * p as f64 / n as f64, w)
                })
                .unzip()
        };
        let len = theta.len();
        let mut harmonics = vec![0.0; (extent + 1) * len];
        for c in 0..=extent {
            for (p, th) in theta.iter().enumerate() {
                harmonics[c * len + p] = (c as f64 * th).cos();
            }
        }
        Self {
            cos_theta: theta.iter().map(|t| t.cos()).collect(),
            weight,
            harmonics,
        }
    }

    fn len(&self) -> usize {
        self.cos_theta.len()
    }
}

/// Trapezoid sum restricted to one coset of the frequency grid; returns
/// `out[(a*(E+1) + b)*(E+1) + c]` for `0 ≤ a,b,c ≤ E`, normalised by `1/N³`.
fn coset_sum(sigma: f64, n: usize, extent: usize, shift: [bool; 3]) -> Vec<f64> {
    let e1 = extent + 1;
    let ax: Vec<Axis> = shift.iter().map(|&s| Axis::new(n, s, extent)).collect();
    let (pa, pb, pc) = (ax[0].len(), ax[1].len(), ax[2].len());
    let centre = 6.0 + sigma;

    // Contract the third frequency index: t1[p][q][c].
    let mut t1 = vec![0.0; pa * pb * e1];
    t1.par_chunks_mut(pb * e1).enumerate().for_each(|(p, slab)| {
        let mut row = vec![0.0; pc];
        for q in 0..pb {
            let base = centre - 2.0 * (ax[0].cos_theta[p] + ax[1].cos_theta[q]);
            let wpq = ax[0].weight[p] * ax[1].weight[q];
            for r in 0..pc {
                row[r] = wpq * ax[2].weight[r] / (base - 2.0 * ax[2].cos_theta[r]);
            }
            let out = &mut slab[q * e1..(q + 1) * e1];
            for (c, o) in out.iter_mut().enumerate() {
                let h = &ax[2].harmonics[c * pc..(c + 1) * pc];
                *o = row.iter().zip(h).map(|(x, y)| x * y).sum();
            }
        }
    });

    // Contract the second: t2[p][b][c].
    let mut t2 = vec![0.0; pa * e1 * e1];
    t2.par_chunks_mut(e1 * e1).enumerate().for_each(|(p, slab)| {
        for q in 0..pb {
            let src = &t1[(p * pb + q) * e1..(p * pb + q + 1) * e1];
            for b in 0..e1 {
                let h = ax[1].harmonics[b * pb + q];
                for (o, s) in slab[b * e1..(b + 1) * e1].iter_mut().zip(src) {
                    *o += h * s;
                }
            }
        }
    });
    drop(t1);

    // Contract the first: out[a][b][c].
    let norm = 1.0 / (n as f64).powi(3);
    let mut out = vec![0.0; e1 * e1 * e1];
    out.par_chunks_mut(e1 * e1).enumerate().for_each(|(a, slab)| {
        for p in 0..pa {
            let h = ax[0].harmonics[a * pa + p] * norm;
            for (o, s) in slab.iter_mut().zip(&t2[p * e1 * e1..(p + 1) * e1 * e1]) {
                *o += h * s;
            }
        }
    });
    out
}

fn canonical_values(full: &[f64], extent: usize) -> Vec<f64> {
    let e1 = extent + 1;
    LgfTable::canonical_entries(extent)
        .map(|[a, b, c]| full[(a * e1 + b) * e1 + c])
        .collect()
}

/// Trapezoid values at an explicit grid size, without the doubling check.
#[cfg(test)]
pub(crate) fn trapezoid_table(sigma: f64, extent: usize, n: usize) -> Result<LgfTable> {
    let full = coset_sum(sigma, n, extent, [false; 3]);
    LgfTable::from_values(sigma, extent, canonical_values(&full, extent))
}

/// Table of `G_σ` for `σ > 0` on the canonical octant up to `extent`.
///
/// The grid size comes from [`trapezoid_size_for`]. The result is accepted
/// only if doubling the grid (assembled from the eight half-shifted cosets of
/// the `2N` grid) changes no entry by more than `quad_tol`.
pub fn eval_sigma_positive_table(sigma: f64, extent: usize, cfg: &LgfEvalConfig) -> Result<LgfTable> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    cfg.validate()?;
    let n = trapezoid_size_for(sigma, extent, cfg)?;
    debug!("sigma={sigma:e} extent={extent}: trapezoid grid {n}^3");
    let base = coset_sum(sigma, n, extent, [false; 3]);
    let mut doubled: Vec<f64> = base.iter().map(|v| v / 8.0).collect();
    for mask in 1..8u8 {
        let shift = [mask & 1 != 0, mask & 2 != 0, mask & 4 != 0];
        let part = coset_sum(sigma, n, extent, shift);
        for (d, p) in doubled.iter_mut().zip(&part) {
            *d += p / 8.0;
        }
    }
    let base = canonical_values(&base, extent);
    let doubled = canonical_values(&doubled, extent);
    let change = base
        .iter()
        .zip(&doubled)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if change > cfg.quad_tol {
        return Err(Error::Trapezoid(format!(
            "doubling the {n}^3 grid changed an entry by {change:e} (> {:e})",
            cfg.quad_tol
        )));
    }
    LgfTable::from_values(sigma, extent, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgf::LatticeOffset;

    #[test]
    fn size_respects_minimum_and_extent() {
        let cfg = LgfEvalConfig::default();
        assert_eq!(trapezoid_size_for(10.0, 4, &cfg).unwrap(), 64);
        assert!(trapezoid_size_for(10.0, 40, &cfg).unwrap() >= 82);
        assert!(trapezoid_size_for(1e-3, 10, &cfg).unwrap() > 200);
    }

    #[test]
    fn periodic_identity_holds_exactly() {
        // The trapezoid sum inverts the periodic operator, so the defining
        // identity holds to rounding even on a coarse grid.
        let t = trapezoid_table(0.5, 5, 12).unwrap();
        for n in [[0, 0, 0], [1, 0, 0], [2, 1, 1], [4, 3, 0]] {
            assert!(t.defining_residual(n).unwrap().abs() < 1e-14, "{n:?}");
        }
    }

    #[test]
    fn sigma10_bounds_and_decay() {
        let cfg = LgfEvalConfig::default();
        let t = eval_sigma_positive_table(10.0, 8, &cfg).unwrap();
        let g = |j| t.lookup(LatticeOffset::new(j, 0, 0)).unwrap();
        assert!(g(0) > 0.0 && g(0) < 0.1);
        // Strictly decreasing, and log-convex: the per-step ratio is smallest
        // next to the origin and relaxes towards e^{-κ}, κ = 2 asinh(√σ/2).
        for r in 0..8 {
            assert!(g(r + 1) < g(r));
        }
        for r in 0..7 {
            assert!(g(r + 1) / g(r) < g(r + 2) / g(r + 1));
        }
        let kappa = 2.0 * (10f64.sqrt() / 2.0).asinh();
        assert!(g(8) / g(7) < (-kappa).exp());
    }

    #[test]
    fn undersized_grid_fails_doubling_check() {
        // Tight tolerance with a tiny sigma cannot be met within the size cap.
        let cfg = LgfEvalConfig { quad_tol: 1e-15, ..Default::default() };
        assert!(matches!(
            eval_sigma_positive_table(1e-6, 30, &cfg),
            Err(Error::Trapezoid(_))
        ));
    }
}
