//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Solves `(6+σ)G(n) - Σ G(n±e_i) = δ(n)` on the cube `|n_i| ≤ half` with
/// Dirichlet values `boundary` on its faces, by conjugate gradients.
/// Returns a lookup closure over the whole cube.
pub fn brute_lattice_green(half: i64, sigma: f64, boundary: impl Fn([i64; 3]) -> f64) -> impl Fn([i64; 3]) -> f64 {
    let m = (2 * half + 1) as usize;
    let idx = move |p: [i64; 3]| {
        (((p[0] + half) as usize * m) + (p[1] + half) as usize) * m + (p[2] + half) as usize
    };
    let on_face = |p: [i64; 3]| p.iter().any(|c| c.abs() == half);
    let mut fixed = vec![0.0; m * m * m];
    let mut interior = vec![false; m * m * m];
    for i in -half..=half {
        for j in -half..=half {
            for k in -half..=half {
                let p = [i, j, k];
                if on_face(p) {
                    fixed[idx(p)] = boundary(p);
                } else {
                    interior[idx(p)] = true;
                }
            }
        }
    }
    let strides = [m * m, m, 1];
    let apply = |x: &[f64], out: &mut [f64]| {
        for (c, o) in out.iter_mut().enumerate() {
            if !interior[c] {
                *o = 0.0;
                continue;
            }
            let mut v = (6.0 + sigma) * x[c];
            for s in strides {
                v -= x[c - s] + x[c + s];
            }
            *o = v;
        }
    };
    // Move the boundary values to the right-hand side.
    let mut b = vec![0.0; m * m * m];
    apply(&fixed, &mut b);
    for v in b.iter_mut() {
        *v = -*v;
    }
    b[idx([0, 0, 0])] += 1.0;
    for c in 0..b.len() {
        if !interior[c] {
            b[c] = 0.0;
        }
    }

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; b.len()];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; b.len()];
    let mut rr = dot(&r, &r);
    let stop = 1e-26 * rr;
    for _ in 0..20_000 {
        if rr <= stop {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for c in 0..x.len() {
            x[c] += alpha * p[c];
            r[c] -= alpha * ap[c];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        for c in 0..p.len() {
            p[c] = r[c] + beta * p[c];
        }
    }
    assert!(rr <= stop, "CG did not converge");
    for c in 0..x.len() {
        if !interior[c] {
            x[c] = fixed[c];
        }
    }
    move |p: [i64; 3]| x[idx(p)]
}

/// Leading two far-field terms of the `σ = 0` Green's function, positive
/// convention.
pub fn far_field_two_terms(p: [i64; 3]) -> f64 {
    let [j, k, l] = p.map(|c| c as f64);
    let r2 = j * j + k * k + l * l;
    let r = r2.sqrt();
    1.0 / (4.0 * PI * r) + (5.0 * (j.powi(4) + k.powi(4) + l.powi(4)) / r.powi(7) - 3.0 / r.powi(3)) / (32.0 * PI)
}
