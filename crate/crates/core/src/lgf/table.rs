use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;

use super::cache::{cache_file_name, read_cache, write_cache};
use super::{bessel, far_field_sigma0, trapezoid, LatticeOffset, LgfEvalConfig};
use crate::error::{Error, Result};

/// Number of sorted triples `a ≥ b ≥ c ≥ 0` with `a ≤ extent`.
pub fn canonical_count(extent: usize) -> usize {
    (extent + 1) * (extent + 2) * (extent + 3) / 6
}

#[inline]
fn tetra(a: usize) -> usize {
    a * (a + 1) * (a + 2) / 6
}

#[inline]
fn tri(b: usize) -> usize {
    b * (b + 1) / 2
}

/// Lattice Green's function values for one `σ` on the canonical octant
/// `extent ≥ a ≥ b ≥ c ≥ 0`, stored flat in tetrahedral order
/// `a(a+1)(a+2)/6 + b(b+1)/2 + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct LgfTable {
    sigma: f64,
    extent: usize,
    values: Vec<f64>,
    tetra_offsets: Vec<u32>,
    tri_offsets: Vec<u32>,
}

impl LgfTable {
    pub fn from_values(sigma: f64, extent: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != canonical_count(extent) {
            return Err(Error::Shape {
                expected: canonical_count(extent),
                got: values.len(),
            });
        }
        Ok(Self {
            sigma,
            extent,
            values,
            tetra_offsets: (0..=extent).map(|a| tetra(a) as u32).collect(),
            tri_offsets: (0..=extent).map(|b| tri(b) as u32).collect(),
        })
    }

    /// Unit-lattice parameter `σh²`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Canonical triples in storage order.
    pub fn canonical_entries(extent: usize) -> impl Iterator<Item = [usize; 3]> {
        (0..=extent).flat_map(|a| (0..=a).flat_map(move |b| (0..=b).map(move |c| [a, b, c])))
    }

    pub fn lookup(&self, offset: LatticeOffset) -> Result<f64> {
        let c = offset.canonical();
        if c[0] > self.extent as u64 {
            return Err(Error::OutOfExtent(offset.j, offset.k, offset.l, self.extent));
        }
        Ok(self.values[self.index(c[0] as usize, c[1] as usize, c[2] as usize)])
    }

    #[inline]
    fn index(&self, a: usize, b: usize, c: usize) -> usize {
        self.tetra_offsets[a] as usize + self.tri_offsets[b] as usize + c
    }

    /// Value at absolute offsets `(x, y, z)`, any order, each `≤ extent`.
    ///
    /// Hot-path accessor for the layer sums; callers check the extent once
    /// per operator.
    #[inline(always)]
    pub fn get_abs(&self, x: u32, y: u32, z: u32) -> f64 {
        let hi = x.max(y).max(z);
        let lo = x.min(y).min(z);
        let mid = x + y + z - hi - lo;
        self.values[self.tetra_offsets[hi as usize] as usize
            + self.tri_offsets[mid as usize] as usize
            + lo as usize]
    }

    /// Value at signed offset `d`; panics when out of extent.
    #[inline(always)]
    pub fn get(&self, d: [i32; 3]) -> f64 {
        self.get_abs(d[0].unsigned_abs(), d[1].unsigned_abs(), d[2].unsigned_abs())
    }

    /// `(6+σ)G(n) - Σ G(n±e_i) - δ(n)` at a canonical offset with
    /// `max |n_i| ≤ extent - 1`.
    pub fn defining_residual(&self, n: [i64; 3]) -> Result<f64> {
        let g = |d: [i64; 3]| self.lookup(d.into());
        let mut r = (6.0 + self.sigma) * g(n)?;
        for axis in 0..3 {
            for s in [-1, 1] {
                let mut m = n;
                m[axis] += s;
                r -= g(m)?;
            }
        }
        if n == [0, 0, 0] {
            r -= 1.0;
        }
        Ok(r)
    }
}

/// Free function form of [`LgfTable::lookup`].
pub fn lookup(table: &LgfTable, offset: LatticeOffset) -> Result<f64> {
    table.lookup(offset)
}

/// `G_0` on the canonical octant: Bessel integral inside `asym_radius`,
/// negated far-field expansion `-A^q_G` outside.
pub fn build_table_sigma0(extent: usize, cfg: &LgfEvalConfig) -> Result<LgfTable> {
    if extent < 1 {
        return Err(Error::Domain("table extent must be at least 1".into()));
    }
    cfg.validate()?;
    let r2 = (cfg.asym_radius as f64).powi(2);
    let entries: Vec<[usize; 3]> = LgfTable::canonical_entries(extent).collect();
    let values = entries
        .par_iter()
        .map(|&[a, b, c]| {
            let off = LatticeOffset::new(a as i64, b as i64, c as i64);
            if off.norm_sq() < r2 {
                bessel::watson_integral([a, b, c], cfg)
            } else {
                far_field_sigma0(off, cfg.asym_terms)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    LgfTable::from_values(0.0, extent, values)
}

/// Builds (or reloads from `cache_dir`) the table for unit-lattice
/// parameter `sigma ≥ 0`.
pub fn build_table(
    sigma: f64,
    extent: usize,
    cfg: &LgfEvalConfig,
    cache_dir: Option<&Path>,
) -> Result<LgfTable> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be finite and non-negative, got {sigma}")));
    }
    let path = cache_dir.map(|d| d.join(cache_file_name(sigma, extent, cfg)));
    if let Some(path) = &path {
        if path.exists() {
            match read_cache(path, sigma, extent, cfg) {
                Ok(table) => {
                    info!("loaded LGF table from {}", path.display());
                    return Ok(table);
                }
                Err(e) => warn!("discarding LGF cache {}: {e}; recomputing", path.display()),
            }
        }
    }
    let table = if sigma == 0.0 {
        build_table_sigma0(extent, cfg)?
    } else {
        trapezoid::eval_sigma_positive_table(sigma, extent, cfg)?
    };
    if let (Some(dir), Some(path)) = (cache_dir, &path) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_cache(path, &table, cfg)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(extent: usize) -> LgfTable {
        let vals = (0..canonical_count(extent)).map(|i| i as f64).collect();
        LgfTable::from_values(0.0, extent, vals).unwrap()
    }

    #[test]
    fn canonical_counts() {
        assert_eq!(canonical_count(3), 20);
        assert_eq!(LgfTable::canonical_entries(3).count(), 20);
        assert_eq!(LgfTable::canonical_entries(7).count(), canonical_count(7));
    }

    #[test]
    fn storage_order_matches_index() {
        let t = ramp(6);
        for (i, [a, b, c]) in LgfTable::canonical_entries(6).enumerate() {
            assert_eq!(t.index(a, b, c), i);
        }
    }

    #[test]
    fn lookup_uses_canonical_form() {
        let t = ramp(4);
        let v = |j, k, l| t.lookup(LatticeOffset::new(j, k, l)).unwrap();
        assert_eq!(v(0, 0, 0), 0.0);
        assert_eq!(v(1, -1, 0), v(1, 1, 0));
        assert_eq!(v(-2, 1, -3), v(3, 2, 1));
        assert_eq!(t.get([-2, 1, -3]), v(3, 2, 1));
        assert!(matches!(
            t.lookup(LatticeOffset::new(5, 0, 0)),
            Err(Error::OutOfExtent(5, 0, 0, 4))
        ));
    }

    #[test]
    fn all_48_images_agree() {
        let t = ramp(5);
        for [a, b, c] in LgfTable::canonical_entries(5) {
            let base = t.lookup(LatticeOffset::new(a as i64, b as i64, c as i64)).unwrap();
            let p = [a as i64, b as i64, c as i64];
            for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                for signs in 0..8 {
                    let s = |i: usize| if signs >> i & 1 == 1 { -1 } else { 1 };
                    let o = LatticeOffset::new(s(0) * p[perm[0]], s(1) * p[perm[1]], s(2) * p[perm[2]]);
                    assert_eq!(t.lookup(o).unwrap(), base);
                }
            }
        }
    }
}
