//! Full GMRES with a zero initial guess.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmresConfig {
    /// Target for `‖b - Ax‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GmresResult {
    pub x: Vec<f64>,
    /// Relative residual estimates from the Arnoldi least-squares problem,
    /// starting with `1` for the zero guess.
    pub history: Vec<f64>,
    /// `‖b - Ax‖ / ‖b‖` recomputed at exit.
    pub true_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` for a square operator given as a closure.
///
/// Modified Gram–Schmidt with a second pass when the new vector loses more
/// than a factor ten of its norm. Non-convergence is reported in the result,
/// not as an error.
pub fn gmres<F>(mut apply: F, b: &[f64], cfg: &GmresConfig) -> Result<GmresResult>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(cfg.tol > 0.0) {
        return Err(Error::Config(format!("GMRES tolerance must be positive, got {}", cfg.tol)));
    }
    let n = b.len();
    let beta = norm(b);
    if beta == 0.0 {
        return Ok(GmresResult {
            x: vec![0.0; n],
            history: vec![0.0],
            true_residual: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / beta).collect()];
    // Column-wise upper Hessenberg after rotations.
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut rot: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut history = vec![1.0];
    let mut converged = false;

    let max_iter = cfg.max_iter.min(n);
    for k in 0..max_iter {
        let mut w = apply(&basis[k])?;
        if w.len() != n {
            return Err(Error::Shape { expected: n, got: w.len() });
        }
        let before = norm(&w);
        let mut hcol = vec![0.0; k + 2];
        for (i, v) in basis.iter().enumerate() {
            let c = dot(&w, v);
            hcol[i] += c;
            w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
        }
        if norm(&w) < 0.1 * before {
            for (i, v) in basis.iter().enumerate() {
                let c = dot(&w, v);
                hcol[i] += c;
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
            }
        }
        let wn = norm(&w);
        hcol[k + 1] = wn;

        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, bb) = (hcol[i], hcol[i + 1]);
            hcol[i] = c * a + s * bb;
            hcol[i + 1] = -s * a + c * bb;
        }
        let (a, bb) = (hcol[k], hcol[k + 1]);
        let rho = a.hypot(bb);
        let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (a / rho, bb / rho) };
        rot.push((c, s));
        hcol[k] = rho;
        hcol[k + 1] = 0.0;
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s * gk);
        hcol.truncate(k + 1);
        r.push(hcol);

        let rel = g[k + 1].abs() / beta;
        history.push(rel);
        let done = rel <= cfg.tol || wn == 0.0;
        if !done {
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        if done {
            converged = true;
            break;
        }
    }

    // Back substitution for the least-squares coefficients.
    let m = r.len();
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = g[i];
        for (j, yj) in y.iter().enumerate().skip(i + 1) {
            s -= r[j][i] * yj;
        }
        y[i] = if r[i][i] != 0.0 { s / r[i][i] } else { 0.0 };
    }
    let mut x = vec![0.0; n];
    for (yi, v) in y.iter().zip(&basis) {
        x.iter_mut().zip(v).for_each(|(a, b)| *a += yi * b);
    }
    let ax = apply(&x)?;
    let res: Vec<f64> = b.iter().zip(&ax).map(|(a, b)| a - b).collect();
    let true_residual = norm(&res) / beta;
    Ok(GmresResult {
        x,
        history,
        true_residual,
        iterations: m,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_takes_one_step() {
        let b = vec![1.0, -2.0, 3.5];
        let out = gmres(|v| Ok(v.to_vec()), &b, &GmresConfig { tol: 1e-14, max_iter: 10 }).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
        for (a, e) in out.x.iter().zip(&b) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let mut calls = 0;
        let out = gmres(
            |v| {
                calls += 1;
                Ok(v.to_vec())
            },
            &[0.0; 4],
            &GmresConfig::default(),
        )
        .unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(calls, 0);
        assert!(out.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diagonal_system() {
        let d: Vec<f64> = (1..=30).map(|i| 1.0 + i as f64 / 10.0).collect();
        let b: Vec<f64> = (0..30).map(|i| (i as f64).cos()).collect();
        let out = gmres(
            |v| Ok(v.iter().zip(&d).map(|(a, b)| a * b).collect()),
            &b,
            &GmresConfig { tol: 1e-12, max_iter: 30 },
        )
        .unwrap();
        assert!(out.converged);
        for i in 0..30 {
            assert!((out.x[i] - b[i] / d[i]).abs() < 1e-10);
        }
        assert!(out.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn reports_non_convergence() {
        // A cyclic shift stalls full GMRES until the last step.
        let n = 20;
        let b: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let shift = |v: &[f64]| Ok((0..v.len()).map(|i| v[(i + 1) % v.len()]).collect());
        let out = gmres(shift, &b, &GmresConfig { tol: 1e-10, max_iter: 5 }).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 5);
        assert!(out.history.iter().all(|&r| (r - 1.0).abs() < 1e-12));
    }
}
