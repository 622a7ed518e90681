//! Complex special functions: digamma, Hurwitz zeta at integer order, and
//! the Landau partial-fraction series whose closed form is the zero-field
//! denominator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZrpError};

/// Euler's constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_86;

/// B_{2k} for k = 1..10.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

const DIGAMMA_SHIFT: f64 = 10.0;
const REFLECTION_BELOW: f64 = -100.0;
const POLE_GUARD: f64 = 1e-12;

/// Partial sum of the Landau series together with its truncation data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub value: Complex64,
    pub terms_used: usize,
    pub truncation_bound: f64,
}

fn nearest_nonpositive_integer(z: Complex64) -> Option<i64> {
    let k = z.re.round();
    if k <= 0.0 && (z - Complex64::new(k, 0.0)).norm() < POLE_GUARD {
        Some(-(k as i64))
    } else {
        None
    }
}

/// ψ(z) for Re z ≥ 10: asymptotic series in 1/z through z^{-14}.
fn digamma_asymptotic(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut pow = inv2;
    for (k, b) in BERNOULLI_EVEN.iter().take(7).enumerate() {
        let two_k = 2.0 * (k as f64 + 1.0);
        acc += pow * (b / two_k);
        pow *= inv2;
    }
    z.ln() - 0.5 * inv - acc
}

/// Upward recurrence to Re z ≥ 10, optionally leaving out the `1/(z + skip)`
/// term so that the pole at `-skip` is removed from the result.
fn digamma_recurrence(z: Complex64, skip: Option<usize>) -> Complex64 {
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    let mut j = 0usize;
    while w.re < DIGAMMA_SHIFT {
        if skip != Some(j) {
            shift += w.inv();
        }
        w += 1.0;
        j += 1;
    }
    digamma_asymptotic(w) - shift
}

/// Digamma function ψ(z) on the complex plane.
///
/// Errors with [`ZrpError::Pole`] within `1e-12` of a non-positive integer.
pub fn digamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(ZrpError::Domain(format!("non-finite digamma argument {z}")));
    }
    if nearest_nonpositive_integer(z).is_some() {
        return Err(ZrpError::Pole(z));
    }
    if z.re < REFLECTION_BELOW {
        // ψ(z) = ψ(1 - z) - π cot(πz)
        let pz = std::f64::consts::PI * z;
        let cot = pz.cos() / pz.sin();
        return Ok(digamma_recurrence(1.0 - z, None) - std::f64::consts::PI * cot);
    }
    Ok(digamma_recurrence(z, None))
}

/// Regular part ψ(z) + 1/(z + k) of the digamma function near its pole at
/// `z = -k`. Valid for `Re z > -100`.
pub fn digamma_pole_removed(z: Complex64, k: usize) -> Complex64 {
    digamma_recurrence(z, Some(k))
}

/// Hurwitz zeta ζ(s, a) = Σ_{n≥0} (n + a)^{-s} for integer `s ≥ 2` and
/// complex `a` off the non-positive integers.
pub fn hurwitz_zeta(s: u32, a: Complex64) -> Result<Complex64> {
    if s < 2 {
        return Err(ZrpError::Domain(format!("hurwitz_zeta needs s >= 2, got {s}")));
    }
    if nearest_nonpositive_integer(a).is_some() {
        return Err(ZrpError::Pole(a));
    }
    let sf = s as f64;
    let threshold = 12.0 + sf;
    let mut head = Complex64::new(0.0, 0.0);
    let mut b = a;
    while b.re < threshold || b.norm() < threshold {
        head += b.powi(-(s as i32));
        b += 1.0;
    }
    Ok(head + hurwitz_euler_maclaurin(sf, b))
}

/// Euler–Maclaurin tail of ζ(s, b) for |b| large compared with s.
fn hurwitz_euler_maclaurin(s: f64, b: Complex64) -> Complex64 {
    let inv = b.inv();
    let b_pow = b.powf(-s);
    let mut acc = b_pow * b / (s - 1.0) + 0.5 * b_pow;
    // term_j = B_{2j}/(2j)! * s(s+1)...(s+2j-2) * b^{-s-2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut pow = b_pow * inv;
    for (j, bern) in BERNOULLI_EVEN.iter().enumerate() {
        let term = pow * (bern * rising / fact);
        acc += term;
        let j2 = 2.0 * (j as f64 + 1.0);
        rising *= (s + j2 - 1.0) * (s + j2);
        fact *= (j2 + 1.0) * (j2 + 2.0);
        pow *= inv * inv;
    }
    acc
}

/// Partial sum `S(E) = 2E Σ_n 1/((2n+1)(2n+1-E))` with the remainder past
/// the explicit terms folded in through Hurwitz zeta values.
///
/// The identity `ψ((1-E)/2) + γ + 2 ln 2 + S(E) = 0` ties this series to
/// [`digamma`] independently of how either side is evaluated.
pub fn landau_series(e_tilde: Complex64, tol: f64) -> Result<SeriesResult> {
    if !(tol > 0.0) {
        return Err(ZrpError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let nearest_odd = 2.0 * ((e_tilde.re - 1.0) / 2.0).round() + 1.0;
    if nearest_odd >= 1.0 && (e_tilde - nearest_odd).norm() < 1e-10 {
        return Err(ZrpError::LandauPole {
            e_tilde,
            level: ((nearest_odd - 1.0) / 2.0) as i64,
        });
    }
    let mag = e_tilde.norm();
    let explicit = (4.0 * mag).ceil().max(32.0) as usize;
    let mut value = Complex64::new(0.0, 0.0);
    for n in 0..explicit {
        let odd = 2.0 * n as f64 + 1.0;
        value += 1.0 / (odd * (odd - e_tilde));
    }

    // Σ_{n≥N} (2n+1)^{-(j+2)} = 2^{-(j+2)} ζ(j+2, N + 1/2)
    let a = Complex64::new(explicit as f64 + 0.5, 0.0);
    let ratio = mag / (2.0 * explicit as f64 + 1.0);
    let mut tail = Complex64::new(0.0, 0.0);
    let mut e_pow = Complex64::new(1.0, 0.0);
    let mut bound = f64::INFINITY;
    for j in 0..200u32 {
        let z = hurwitz_zeta(j + 2, a)? * 0.5f64.powi(j as i32 + 2);
        let term = e_pow * z;
        tail += term;
        e_pow *= e_tilde;
        let next = 2.0 * (term.norm() * mag) * ratio / (1.0 - ratio);
        bound = next;
        if next < tol * 1e-3 || term.norm() == 0.0 {
            break;
        }
    }
    Ok(SeriesResult {
        value: 2.0 * e_tilde * (value + tail),
        terms_used: explicit,
        truncation_bound: bound,
    })
}
