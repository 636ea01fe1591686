//! Far-field expansion of the `σ = 0` lattice Green's function.

use std::f64::consts::PI;

use super::LatticeOffset;
use crate::error::{Error, Result};

/// `A^q_G(n)` for `q ∈ {2, 3}` in the negative-kernel convention, where the
/// leading term is `-1/(4π|n|)`. The `q = 3` term is the uncorrected one.
///
/// The tabulated Green's function uses the positive convention
/// (`G ≈ 1/(4π|n|)`) and the corrected third term; see [`far_field_sigma0`].
pub fn eval_sigma0_asymptotic(offset: LatticeOffset, q: u32) -> Result<f64> {
    let t = Terms::new(offset, q)?;
    let mut value = -t.leading - t.second;
    if q == 3 {
        value += t.third(-288.0);
    }
    Ok(value)
}

/// Far-field approximation of the tabulated (positive) `G_0`.
///
/// The order-`|n|^-5` term differs from [`eval_sigma0_asymptotic`] in sign
/// and in the `j⁴k²l²` coefficient (-228, not -288); both were fitted against
/// the Bessel integral.
pub fn far_field_sigma0(offset: LatticeOffset, q: u32) -> Result<f64> {
    let t = Terms::new(offset, q)?;
    let mut value = t.leading + t.second;
    if q == 3 {
        value += t.third(-228.0);
    }
    Ok(value)
}

struct Terms {
    leading: f64,
    second: f64,
    r: f64,
    sq: [f64; 3],
}

impl Terms {
    fn new(offset: LatticeOffset, q: u32) -> Result<Self> {
        if offset.is_origin() {
            return Err(Error::Domain("far-field expansion is undefined at the origin".into()));
        }
        if !matches!(q, 2 | 3) {
            return Err(Error::Domain(format!("expansion order must be 2 or 3, got {q}")));
        }
        let (j, k, l) = (offset.j as f64, offset.k as f64, offset.l as f64);
        let sq = [j * j, k * k, l * l];
        let [j2, k2, l2] = sq;
        let r = (j2 + k2 + l2).sqrt();
        let quartic = j2 * j2 + k2 * k2 + l2 * l2 - 3.0 * (j2 * k2 + j2 * l2 + k2 * l2);
        Ok(Self {
            leading: 1.0 / (4.0 * PI * r),
            second: quartic / (16.0 * PI * r.powi(7)),
            r,
            sq,
        })
    }

    fn third(&self, c211: f64) -> f64 {
        let [j2, k2, l2] = self.sq;
        let (j4, k4, l4) = (j2 * j2, k2 * k2, l2 * l2);
        let octic = c211 * (k2 * l2 * j4 + k2 * l4 * j2 + k4 * l2 * j2)
            + 621.0 * (j4 * k4 + l4 * k4 + j4 * l4)
            - 244.0 * (k2 * j4 * j2 + l2 * j4 * j2 + k4 * k2 * j2 + l4 * l2 * j2 + k2 * l4 * l2 + k4 * k2 * l2)
            + 23.0 * (j4 * j4 + k4 * k4 + l4 * l4);
        octic / (128.0 * PI * self.r.powi(13))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_value_q2() {
        let v = eval_sigma0_asymptotic(LatticeOffset::new(20, 0, 0), 2).unwrap();
        let expected = -1.0 / (80.0 * PI) - 20f64.powi(4) / (16.0 * PI * 20f64.powi(7));
        assert_eq!(v, expected);
        assert!((v + 0.003_981_360_373_283).abs() < 1e-12);
    }

    #[test]
    fn symmetric_in_indices() {
        let a = eval_sigma0_asymptotic(LatticeOffset::new(2, 5, 9), 3).unwrap();
        let b = eval_sigma0_asymptotic(LatticeOffset::new(9, 5, 2), 3).unwrap();
        let c = eval_sigma0_asymptotic(LatticeOffset::new(-5, 9, -2), 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn origin_and_bad_order_rejected() {
        assert!(eval_sigma0_asymptotic(LatticeOffset::ORIGIN, 2).is_err());
        assert!(eval_sigma0_asymptotic(LatticeOffset::new(1, 0, 0), 4).is_err());
    }
}
