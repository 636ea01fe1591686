//! Watson-type integrals of products of modified Bessel functions.
//!
//! `G_0(j,k,l) = ∫₀^∞ Ĩ_j(2t) Ĩ_k(2t) Ĩ_l(2t) dt` with the exponentially scaled
//! `Ĩ_n(x) = e^{-x} I_n(x)`. The integral is split at `T*`: the finite part
//! goes through adaptive Gauss–Kronrod, the tail is integrated term by term
//! from the large-argument expansion of each Bessel factor.

use super::quadrature::integrate_adaptive;
use super::LgfEvalConfig;
use crate::error::{Error, Result};

/// Terms kept in the large-argument expansion of each Bessel factor.
pub const TAIL_TERMS: usize = 6;

const MAX_PANELS: usize = 4000;
const MAX_SPLIT: f64 = 1e7;

/// Fills `out[0..=nmax]` with `e^{-x} I_n(x)`, `x ≥ 0`.
///
/// Power series for `x ≤ 1`; otherwise Miller's backward recurrence started
/// far enough above both `nmax` and `√(80x)`, normalised with
/// `Ĩ_0 + 2 Σ_{n≥1} Ĩ_n = 1`.
pub fn scaled_bessel_i(x: f64, nmax: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(nmax + 1, 0.0);
    if x == 0.0 {
        out[0] = 1.0;
        return;
    }
    if x <= 1.0 {
        let half = 0.5 * x;
        let q = half * half;
        let scale = (-x).exp();
        // leading = (x/2)^n / n!
        let mut leading = 1.0;
        for (n, slot) in out.iter_mut().enumerate() {
            if n > 0 {
                leading *= half / n as f64;
            }
            if leading == 0.0 {
                break;
            }
            let mut term = 1.0;
            let mut sum = 1.0;
            for m in 1..40 {
                term *= q / (m as f64 * (m + n) as f64);
                sum += term;
                if term < 1e-17 * sum {
                    break;
                }
            }
            *slot = scale * leading * sum;
        }
        return;
    }

    let start = nmax.max((80.0 * x).sqrt().ceil() as usize) + 30;
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        if k <= nmax {
            out[k] = current;
        }
        norm += 2.0 * current;
        let below = (2.0 * k as f64 / x) * current + above;
        above = current;
        current = below;
        if current > 1e250 {
            let s = 1e-250;
            current *= s;
            above *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    out[0] = current;
    norm += current;
    for v in out.iter_mut() {
        *v /= norm;
    }
}

/// Coefficients `a_k` of `Ĩ_n(x) ~ (2πx)^{-1/2} Σ_k a_k x^{-k}`.
pub fn large_argument_coefficients(n: usize, terms: usize) -> Vec<f64> {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut a = Vec::with_capacity(terms);
    let mut c = 1.0;
    a.push(c);
    for k in 1..terms {
        let odd = (2 * k - 1) as f64;
        c *= -(mu - odd * odd) / (k as f64 * 8.0);
        a.push(c);
    }
    a
}

/// `∫_T^∞ Ĩ_j(2t) Ĩ_k(2t) Ĩ_l(2t) dt` from the expansions, with an estimate of
/// the truncation error (size of the first omitted order).
pub fn bessel_product_tail(orders: [usize; 3], t: f64) -> (f64, f64) {
    let terms = TAIL_TERMS + 1;
    // Coefficients in powers of 1/t: a_k(n) 2^{-k}.
    let series: Vec<Vec<f64>> = orders
        .iter()
        .map(|&n| {
            large_argument_coefficients(n, terms)
                .into_iter()
                .enumerate()
                .map(|(k, a)| a * 0.5f64.powi(k as i32))
                .collect()
        })
        .collect();
    let mut product = vec![0.0; terms];
    for (i, a) in series[0].iter().enumerate() {
        for (j, b) in series[1].iter().enumerate().take(terms - i) {
            for (k, c) in series[2].iter().enumerate().take(terms - i - j) {
                product[i + j + k] += a * b * c;
            }
        }
    }
    let prefactor = (4.0 * std::f64::consts::PI).powf(-1.5);
    let term = |m: usize| prefactor * product[m] * t.powf(-(m as f64) - 0.5) / (m as f64 + 0.5);
    let value = (0..TAIL_TERMS).map(term).sum();
    (value, term(TAIL_TERMS).abs())
}

/// Split point actually used for orders up to `nmax`: large enough that the
/// expansion ratio `μ/(8x)` at `x = 2T*` is at most 1/32.
pub fn effective_split(nmax: usize, cfg: &LgfEvalConfig) -> f64 {
    let mu = 4.0 * (nmax as f64) * (nmax as f64);
    cfg.t_star.max(2.0 * mu)
}

/// `G_0` at canonical orders via the split Bessel integral.
pub fn watson_integral(orders: [usize; 3], cfg: &LgfEvalConfig) -> Result<f64> {
    let nmax = *orders.iter().max().expect("three orders");
    // Push the split out until the omitted tail term is a quarter of the
    // tolerance at most.
    let mut split = effective_split(nmax, cfg);
    let (mut tail, mut tail_err) = bessel_product_tail(orders, split);
    while tail_err > 0.25 * cfg.quad_tol && split < MAX_SPLIT {
        split *= 2.0;
        (tail, tail_err) = bessel_product_tail(orders, split);
    }
    let budget = cfg.quad_tol - tail_err;
    if budget < 0.75 * cfg.quad_tol {
        return Err(Error::Quadrature(format!(
            "tail expansion error {tail_err:e} exceeds tolerance {:e} at T* = {split}",
            cfg.quad_tol
        )));
    }

    let mut breaks = vec![0.0, 0.5];
    let mut b = 1.0;
    while b < split {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(split);

    let mut buf = Vec::with_capacity(nmax + 1);
    let integrand = |t: f64| {
        scaled_bessel_i(2.0 * t, nmax, &mut buf);
        buf[orders[0]] * buf[orders[1]] * buf[orders[2]]
    };
    let finite = integrate_adaptive(integrand, &breaks, budget, MAX_PANELS)?;
    Ok(finite.value + tail)
}
