use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::QuadOptions;
use crate::error::{Result, ZrpError};

/// Piecewise-linear proper-time path: a straight descent from the origin to
/// depth `δ`, then a horizontal run at `Im s = -δ` out to `truncation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub depth: f64,
    pub descent_angle: f64,
    pub truncation: f64,
    pub tail_order: usize,
    /// Real parts of the horizontal-run nodes: the end of the descent, every
    /// multiple of π in between, and `truncation`.
    pub segment_breaks: Vec<f64>,
}

impl Contour {
    /// Point where the descent meets the horizontal run.
    pub fn descent_end(&self) -> Complex64 {
        Complex64::new(self.depth / self.descent_angle.abs().tan(), -self.depth)
    }

    /// Nodes of the horizontal run, starting at [`Contour::descent_end`].
    pub fn horizontal_nodes(&self) -> Vec<Complex64> {
        self.segment_breaks
            .iter()
            .map(|&x| Complex64::new(x, -self.depth))
            .collect()
    }

    /// Truncation point `U - iδ`.
    pub fn end(&self) -> Complex64 {
        Complex64::new(self.truncation, -self.depth)
    }
}

/// Smallest `K ≥ 1` such that the `K`-th term of the tail series at `s`
/// is below `tail_tol`. Terms shrink by `e^{-2δ}` per order.
pub fn tail_order(e_tilde: Complex64, s: Complex64, tail_tol: f64) -> usize {
    // |e^{i(E-(2k+1))s}| = exp(-(Im E)(Re s) - (Re E)(Im s) + (2k+1) Im s)
    let depth = -s.im;
    let base = -e_tilde.im * s.re - e_tilde.re * s.im;
    let needed = (base + (1.0 / tail_tol).ln()) / depth;
    let k = ((needed - 1.0) / 2.0).floor() + 1.0;
    k.max(1.0) as usize
}

/// Real-part coordinate past which the far integrand, and what is left of
/// its integral, stays below `tail_tol`.
///
/// On `Im s = -δ`, `Im cot s` never drops below `tanh δ` and `|Re cot s|`
/// never exceeds `1/sinh 2δ`, so
/// `ln|e^{iẼs+iΦ}/sin s| ≤ |Re Ẽ|δ + |Im Ẽ|x - 𝓔̃²[(x²-δ²) tanh δ - 2xδ/sinh 2δ + δ] - ln sinh δ`.
/// Midway between poles the damping is only `tanh δ` of the nominal
/// Gaussian, which matters at small depth.
fn gaussian_truncation(e_tilde: Complex64, f_tilde: f64, depth: f64, tail_tol: f64) -> f64 {
    let f2 = f_tilde * f_tilde;
    let a = f2 * depth.tanh();
    let b = e_tilde.im.abs() + f2 * 2.0 * depth / (2.0 * depth).sinh();
    let c = e_tilde.re.abs() * depth + f2 * (depth * depth * depth.tanh() - depth) - depth.sinh().ln();
    let solve = |rhs: f64| (b + (b * b + 4.0 * a * rhs.max(0.0)).sqrt()) / (2.0 * a);
    let mut u = solve((1.0 / tail_tol).ln() + c);
    // ∫_U^∞ e^{-a x² + b x} dx ≤ e^{-a U² + b U} / (2aU - b)
    for _ in 0..2 {
        let slope = (2.0 * a * u - b).max(f64::MIN_POSITIVE);
        u = solve((1.0 / tail_tol).ln() + c + (1.0 / slope).ln().max(0.0));
    }
    u
}

/// Lay out the integration path for `(E, 𝓔̃)`.
pub fn build_contour(e_tilde: Complex64, f_tilde: f64, opts: &QuadOptions) -> Result<Contour> {
    opts.validate()?;
    if f_tilde == 0.0 {
        return Err(ZrpError::ZeroField);
    }
    if !(f_tilde > 0.0) || !f_tilde.is_finite() {
        return Err(ZrpError::Domain(format!("scaled field must be positive, got {f_tilde}")));
    }
    let depth = opts.depth_for(e_tilde);
    let descent_angle = opts.descent_angle;
    let x0 = depth / descent_angle.abs().tan();
    let u = gaussian_truncation(e_tilde, f_tilde, depth, opts.tail_tol) * opts.truncation_scale;
    if u > opts.truncation_cap {
        return Err(ZrpError::FieldTooWeak {
            required: u,
            cap: opts.truncation_cap,
        });
    }
    let truncation = u.max(x0 + PI);
    // Each 1/sin s peak (width ~δ) under a multiple of π gets its own
    // graded pieces, so no Kronrod rule straddles a peak and its flank.
    let mut breaks = vec![x0];
    let offsets: Vec<f64> = [-3.0, -1.0, 0.0, 1.0, 3.0]
        .iter()
        .map(|m| m * depth)
        .filter(|o| o.abs() < 0.5 * PI - 1e-9 || *o == 0.0)
        .collect();
    let mut k = ((x0 - 3.0 * depth) / PI).floor().max(1.0);
    while k * PI - 3.0 * depth < truncation {
        for o in &offsets {
            let x = k * PI + o;
            if x - *breaks.last().unwrap() > 1e-9 && truncation - x > 1e-9 {
                breaks.push(x);
            }
        }
        k += 1.0;
    }
    breaks.push(truncation);
    let s0 = Complex64::new(x0, -depth);
    Ok(Contour {
        depth,
        descent_angle,
        truncation,
        tail_order: tail_order(e_tilde, s0, opts.tail_tol),
        segment_breaks: breaks,
    })
}

impl Default for Contour {
    fn default() -> Self {
        Contour {
            depth: 1.0,
            descent_angle: -FRAC_PI_4,
            truncation: 1.0 + PI,
            tail_order: 1,
            segment_breaks: vec![1.0, 1.0 + PI],
        }
    }
}
