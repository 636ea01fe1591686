//! Free-space lattice Green's functions of the 7-point operator.
//!
//! `G_σ` solves `(6 + σ) G(n) - Σ_{±e_i} G(n ± e_i) = δ(n)` on the unit
//! lattice `Z³`. A grid with spacing `h` uses the unit-lattice function with
//! parameter `σh²`; the `h²` factors cancel in every potential built from it.
//!
//! Values are positive and behave like `1/(4π|n|)` for `σ = 0`.

mod asymptotic;
pub mod bessel;
mod cache;
pub mod quadrature;
mod table;
mod trapezoid;

pub use asymptotic::{eval_sigma0_asymptotic, far_field_sigma0};
pub use cache::{cache_file_name, read_cache, write_cache, CACHE_MAGIC, CACHE_VERSION};
pub use table::{build_table, build_table_sigma0, canonical_count, lookup, LgfTable};
pub use trapezoid::{eval_sigma_positive_table, trapezoid_size_for};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed lattice offset `(j, k, l)` in lattice units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeOffset {
    pub j: i64,
    pub k: i64,
    pub l: i64,
}

impl LatticeOffset {
    pub const ORIGIN: LatticeOffset = LatticeOffset { j: 0, k: 0, l: 0 };

    pub fn new(j: i64, k: i64, l: i64) -> Self {
        Self { j, k, l }
    }

    /// Representative of the 48-element symmetry class: absolute values
    /// sorted in descending order.
    pub fn canonical(&self) -> [u64; 3] {
        let mut v = [self.j.unsigned_abs(), self.k.unsigned_abs(), self.l.unsigned_abs()];
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }

    pub fn max_abs(&self) -> u64 {
        self.canonical()[0]
    }

    pub fn norm_sq(&self) -> f64 {
        let (j, k, l) = (self.j as f64, self.k as f64, self.l as f64);
        j * j + k * k + l * l
    }

    pub fn is_origin(&self) -> bool {
        *self == Self::ORIGIN
    }
}

impl From<[i64; 3]> for LatticeOffset {
    fn from(v: [i64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Evaluation parameters shared by the `σ = 0` and `σ > 0` paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LgfEvalConfig {
    /// Lower bound for the split point of the Bessel integral. The effective
    /// split also grows with the largest Bessel order (see [`bessel`]).
    pub t_star: f64,
    /// Absolute error target for every tabulated value.
    pub quad_tol: f64,
    /// Euclidean radius at and beyond which the far-field expansion replaces
    /// the Bessel integral.
    pub asym_radius: u32,
    /// Number of terms `q` of the far-field expansion (2 or 3).
    pub asym_terms: u32,
    /// Minimum Fourier grid size per dimension for `σ > 0`.
    pub trapezoid_size: u32,
}

impl Default for LgfEvalConfig {
    fn default() -> Self {
        Self {
            t_star: 40.0,
            quad_tol: 1e-13,
            asym_radius: 30,
            asym_terms: 3,
            trapezoid_size: 64,
        }
    }
}

impl LgfEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_star > 0.0) {
            return Err(Error::Config(format!("t_star must be positive, got {}", self.t_star)));
        }
        if !(self.quad_tol > 0.0) {
            return Err(Error::Config(format!("quad_tol must be positive, got {}", self.quad_tol)));
        }
        if self.asym_radius == 0 {
            return Err(Error::Config("asym_radius must be positive".into()));
        }
        if !matches!(self.asym_terms, 2 | 3) {
            return Err(Error::Config(format!("asym_terms must be 2 or 3, got {}", self.asym_terms)));
        }
        if self.trapezoid_size < 2 || self.trapezoid_size % 2 != 0 {
            return Err(Error::Config(format!(
                "trapezoid_size must be a positive even integer, got {}",
                self.trapezoid_size
            )));
        }
        Ok(())
    }

    /// Stable textual form hashed into cache keys.
    pub(crate) fn digest_source(&self) -> String {
        format!(
            "t_star={:e};quad_tol={:e};asym_radius={};asym_terms={};trapezoid_size={}",
            self.t_star, self.quad_tol, self.asym_radius, self.asym_terms, self.trapezoid_size
        )
    }
}

/// `G_0` at `offset` from the Bessel-product integral
/// `∫₀^∞ e^{-6t} I_j(2t) I_k(2t) I_l(2t) dt`.
pub fn eval_sigma0_bessel(offset: LatticeOffset, cfg: &LgfEvalConfig) -> Result<f64> {
    cfg.validate()?;
    let c = offset.canonical();
    bessel::watson_integral([c[0] as usize, c[1] as usize, c[2] as usize], cfg)
}
