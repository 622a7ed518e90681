//! Weak-field expansion of the field correction
//!
//! `J(E, 𝓔̃) = Σ_{m≥1} (i𝓔̃²)^m / m! · C_m(E)`, with
//! `C_m = ∫ e^{iEs} [s(s cot s - 1)]^m / sin s ds` continued from Im E > 0.
//!
//! Below the real axis `cot s = i(1+q²)/(1-q²)` and `1/sin s = 2iq/(1-q²)`
//! with `q = e^{-is}`, so every `C_m` collapses to Laplace transforms of
//! `s^p q^{2n+1}` summed over Landau channels `n`. Those channel sums are
//! Hurwitz zeta values at `a = (1-E)/2`.
//!
//! The expansion is asymptotic and drops terms of order
//! `exp(-(d² - (Im E)²)/(4𝓔̃²))`, `d` the distance of Re E from the nearest
//! Landau level, which is exactly the regime where deformed-contour
//! quadrature loses all its digits.

use num_complex::Complex64;

use crate::error::{Result, ZrpError};
use crate::specfun::hurwitz_zeta;

const MAX_ORDER: usize = 10;

/// Field correction from the weak-field expansion.
#[derive(Debug, Clone, Copy)]
pub struct WeakFieldSum {
    pub value: Complex64,
    pub abs_err: f64,
    pub orders: usize,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

fn poly_mul_linear(poly: &[Complex64], root_shift: Complex64) -> Vec<Complex64> {
    // poly(t) * (t + root_shift)
    let mut out = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
    for (i, &c) in poly.iter().enumerate() {
        out[i + 1] += c;
        out[i] += c * root_shift;
    }
    out
}

/// Coefficients in `t = n + a` of the channel weight
/// `[x^n] (1+x)^l / (1-x)^{l+1} = Σ_j C(l,j) (n-j+1)…(n-j+l) / l!`.
fn channel_weight(l: usize, a: Complex64) -> Vec<Complex64> {
    let mut total = vec![Complex64::new(0.0, 0.0); l + 1];
    let norm = factorial(l);
    for j in 0..=l {
        let mut poly = vec![Complex64::new(1.0, 0.0)];
        for i in 1..=l {
            // n - j + i = t - a - j + i
            poly = poly_mul_linear(&poly, -a - j as f64 + i as f64);
        }
        let w = binomial(l, j) / norm;
        for (q, c) in poly.into_iter().enumerate() {
            total[q] += c * w;
        }
    }
    total
}

/// Moment `C_m(E)` from precomputed `zetas[k] = ζ(k, a)`.
fn moment(m: usize, a: Complex64, zetas: &[Complex64]) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let half_minus_i = Complex64::new(0.0, -0.5);
    let mut acc = Complex64::new(0.0, 0.0);
    for l in 0..=m {
        let p = m + l;
        let weight = channel_weight(l, a);
        let channel_sum: Complex64 = weight
            .iter()
            .enumerate()
            .map(|(q, c)| c * zetas[p + 1 - q])
            .sum();
        let sign = if (m - l) % 2 == 0 { 1.0 } else { -1.0 };
        acc += binomial(m, l) * sign * factorial(p) * i.powi(l as i32)
            * half_minus_i.powi(p as i32 + 1)
            * channel_sum;
    }
    2.0 * i * acc
}

/// Sum the expansion until the terms fall below `tol` or start to grow.
pub fn weak_field_sum(e_tilde: Complex64, f_tilde: f64, tol: f64) -> Result<WeakFieldSum> {
    let a = (1.0 - e_tilde) / 2.0;
    let mut zetas = vec![Complex64::new(0.0, 0.0); 2 * MAX_ORDER + 2];
    for (k, z) in zetas.iter_mut().enumerate().skip(2) {
        *z = hurwitz_zeta(k as u32, a)?;
    }
    let i = Complex64::new(0.0, 1.0);
    let f2 = f_tilde * f_tilde;
    let mut value = Complex64::new(0.0, 0.0);
    let mut last = f64::INFINITY;
    for m in 1..=MAX_ORDER {
        let term = i.powi(m as i32) * f2.powi(m as i32) / factorial(m) * moment(m, a, &zetas);
        let size = term.norm();
        if size > last {
            // asymptotic divergence sets in; the previous term bounds the error
            return Ok(WeakFieldSum {
                value,
                abs_err: last,
                orders: m - 1,
            });
        }
        value += term;
        last = size;
        if size < tol * 1e-2 {
            return Ok(WeakFieldSum {
                value,
                abs_err: size,
                orders: m,
            });
        }
    }
    if last.is_finite() {
        Ok(WeakFieldSum {
            value,
            abs_err: last,
            orders: MAX_ORDER,
        })
    } else {
        Err(ZrpError::Domain("weak-field expansion overflowed".into()))
    }
}

/// Rough size of the exponentially small terms the expansion omits.
pub fn exponential_remainder(e_tilde: Complex64, f_tilde: f64) -> f64 {
    let k = ((e_tilde.re - 1.0) / 2.0).round().max(0.0);
    let d = (e_tilde.re - (2.0 * k + 1.0)).abs();
    let im = e_tilde.im;
    let exponent = -(d * d - im * im) / (4.0 * f_tilde * f_tilde);
    std::f64::consts::PI.sqrt() / f_tilde * exponent.exp()
}
