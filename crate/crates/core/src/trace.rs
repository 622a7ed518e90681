//! Continuation of resonance branches: curves at fixed Im Ẽ in
//! (Ẽ_B, Re Ẽ, 𝓔̃), complex-energy tracks at fixed Ẽ_B versus 𝓔̃, and the
//! resonance census per Landau level.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denominator::{d_field, d_zero_field, QuadOptions};
use crate::error::{Result, ZrpError};
use crate::linalg;
use crate::rootfind::{fixed_im_residual, newton_complex, scan_fixed_im, solve_fixed_im, SolveOptions};

/// Box the fixed-Im continuation stays inside.
pub const EB_RANGE: (f64, f64) = (-30.0, -1e-3);
pub const F_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub e_tilde: Complex64,
    pub eb_tilde: f64,
    pub f_tilde: f64,
    pub residual: f64,
    pub arclength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMode {
    FixedIm,
    FixedEbind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    LoopClosed,
    ParameterBound,
    MaxSteps,
    StepUnderflow,
    DomainExit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub mode: TraceMode,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
    /// Nearest Landau level `(Ẽ - 1)/2` at the smallest-field point.
    pub landau_index: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    pub step0: f64,
    pub max_steps: usize,
    /// +1 or -1: which way to leave the start point.
    pub direction: f64,
    /// Fixed-Ẽ_B traces stop once Im Ẽ falls below this.
    pub min_im: f64,
    pub solve: SolveOptions,
    pub quad: QuadOptions,
}

impl TraceOptions {
    pub fn new(step0: f64, max_steps: usize) -> Self {
        TraceOptions {
            step0,
            max_steps,
            direction: 1.0,
            min_im: f64::NEG_INFINITY,
            solve: SolveOptions::default(),
            quad: QuadOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        self.solve.validate()?;
        self.quad.validate()?;
        if !(self.step0 > 0.0) || !self.step0.is_finite() {
            return Err(ZrpError::Domain(format!("step must be positive, got {}", self.step0)));
        }
        if self.max_steps == 0 {
            return Err(ZrpError::Domain("max_steps must be positive".into()));
        }
        if self.direction.abs() != 1.0 {
            return Err(ZrpError::Domain("direction must be +1 or -1".into()));
        }
        Ok(())
    }
}

/// Step-size controller shared by both continuation modes.
struct StepControl {
    h: f64,
    min: f64,
    max: f64,
    easy: usize,
}

impl StepControl {
    fn new(step0: f64) -> Self {
        StepControl {
            h: step0,
            min: step0 / 4096.0,
            max: 8.0 * step0,
            easy: 0,
        }
    }

    /// Halve after a failed correction; false once below the floor.
    fn shrink(&mut self) -> bool {
        self.easy = 0;
        self.h *= 0.5;
        self.h >= self.min
    }

    fn success(&mut self, easy: bool) {
        if easy {
            self.easy += 1;
            if self.easy >= 3 {
                self.h = (self.h * 1.3).min(self.max);
                self.easy = 0;
            }
        } else {
            self.easy = 0;
        }
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn in_box(x: [f64; 3]) -> bool {
    x[0] >= EB_RANGE.0 && x[0] <= EB_RANGE.1 && x[2] > 0.0 && x[2] <= F_MAX
}

/// Distance from `p` to the segment `[a, b]`.
fn segment_distance(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = sub3(b, a);
    let len2 = dot3(ab, ab);
    let t = if len2 > 0.0 {
        (dot3(sub3(p, a), ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm3(sub3(p, [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]]))
}

/// Fixed-Im system in `x = (Ẽ_B, Re Ẽ, 𝓔̃)`.
struct FixedImSystem<'a> {
    im_e: f64,
    opts: &'a TraceOptions,
}

impl FixedImSystem<'_> {
    fn residual(&self, x: [f64; 3]) -> Result<Complex64> {
        if !(x[0] < 0.0) {
            return Err(ZrpError::DomainExit(format!("Ẽ_B = {} left the attractive range", x[0])));
        }
        fixed_im_residual(x[1], x[2], self.im_e, x[0], &self.opts.quad)
    }

    /// Rows ∇Re D̃ and ∇Im D̃. D̃ depends on Ẽ_B only through ln|Ẽ_B|.
    fn jacobian(&self, x: [f64; 3], fx: Complex64) -> Result<[[f64; 3]; 2]> {
        let h = self.opts.solve.fd_step;
        let d_eb = Complex64::new(1.0 / x[0], 0.0);
        let hx = h * x[1].abs().max(1.0);
        let hf = h * x[2].abs().max(1e-2);
        let d_re = (self.residual([x[0], x[1] + hx, x[2]])? - fx) / hx;
        let d_f = (self.residual([x[0], x[1], x[2] + hf])? - fx) / hf;
        Ok([[d_eb.re, d_re.re, d_f.re], [d_eb.im, d_re.im, d_f.im]])
    }

    /// Unit null vector of the Jacobian.
    fn tangent(&self, x: [f64; 3], fx: Complex64) -> Result<[f64; 3]> {
        let [r1, r2] = self.jacobian(x, fx)?;
        let t = [
            r1[1] * r2[2] - r1[2] * r2[1],
            r1[2] * r2[0] - r1[0] * r2[2],
            r1[0] * r2[1] - r1[1] * r2[0],
        ];
        let n = norm3(t);
        if !(n > 0.0) || !n.is_finite() {
            return Err(ZrpError::Degenerate(format!("no tangent at {x:?}")));
        }
        Ok([t[0] / n, t[1] / n, t[2] / n])
    }

    /// Newton correction in the hyperplane through `pred` orthogonal to `t`.
    /// Returns the corrected point, its residual and the iteration count.
    fn correct(&self, pred: [f64; 3], t: [f64; 3]) -> Result<([f64; 3], Complex64, usize)> {
        let so = &self.opts.solve;
        let mut x = pred;
        let mut fx = self.residual(x)?;
        let mut last_step = f64::INFINITY;
        for iter in 0..so.max_iter.min(12) {
            if fx.norm() < so.residual_tol && last_step < so.step_tol.max(1e-9 * self.opts.step0) {
                return Ok((x, fx, iter));
            }
            let [r1, r2] = self.jacobian(x, fx)?;
            let a = [r1, r2, t];
            if linalg::condition(a) > 1e12 {
                return Err(ZrpError::Degenerate(format!("corrector Jacobian at {x:?}")));
            }
            let plane = dot3(t, sub3(x, pred));
            let dx = linalg::solve(a, [-fx.re, -fx.im, -plane])
                .ok_or_else(|| ZrpError::Degenerate(format!("singular corrector at {x:?}")))?;
            let next = [x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]];
            if norm3(dx) > self.opts.step0 * 8.0 {
                return Err(ZrpError::NonConvergence {
                    operation: "trace corrector",
                    iterations: iter,
                    residual: fx.norm(),
                    best: [x[1], x[2]],
                });
            }
            last_step = norm3(dx);
            x = next;
            fx = self.residual(x)?;
        }
        if fx.norm() < so.residual_tol {
            return Ok((x, fx, so.max_iter));
        }
        Err(ZrpError::NonConvergence {
            operation: "trace corrector",
            iterations: so.max_iter.min(12),
            residual: fx.norm(),
            best: [x[1], x[2]],
        })
    }
}

fn point_from(x: [f64; 3], im_e: f64, residual: f64, arclength: f64) -> BranchPoint {
    BranchPoint {
        e_tilde: Complex64::new(x[1], im_e),
        eb_tilde: x[0],
        f_tilde: x[2],
        residual,
        arclength,
    }
}

fn landau_index(points: &[BranchPoint]) -> i64 {
    points
        .iter()
        .min_by(|a, b| a.f_tilde.total_cmp(&b.f_tilde))
        .map(|p| ((p.e_tilde.re - 1.0) / 2.0).round() as i64)
        .unwrap_or(0)
}

/// Pseudo-arclength continuation of `D̃ = 0` at fixed Im Ẽ.
pub fn trace_fixed_im(im_e: f64, start: BranchPoint, opts: &TraceOptions) -> Result<Branch> {
    opts.validate()?;
    let sys = FixedImSystem { im_e, opts };
    let x0 = [start.eb_tilde, start.e_tilde.re, start.f_tilde];
    let f0 = sys.residual(x0).map_err(|e| ZrpError::Precondition(format!("start point: {e}")))?;
    if f0.norm() >= opts.solve.residual_tol {
        return Err(ZrpError::Precondition(format!(
            "start point is not a converged root: |D̃| = {:.3e}",
            f0.norm()
        )));
    }
    let mut tangent = sys.tangent(x0, f0)?;
    tangent = tangent.map(|c| c * opts.direction);

    let mut points = vec![point_from(x0, im_e, f0.norm(), 0.0)];
    let mut xs = vec![x0];
    let mut ctl = StepControl::new(opts.step0);
    let mut arclength = 0.0;
    let mut termination = Termination::MaxSteps;
    for _ in 0..opts.max_steps {
        let last = *xs.last().expect("non-empty");
        if xs.len() >= 2 {
            let prev = xs[xs.len() - 2];
            let d = sub3(last, prev);
            let n = norm3(d);
            if n > 0.0 {
                tangent = d.map(|c| c / n);
            }
        }
        let accepted = loop {
            let pred = [
                last[0] + ctl.h * tangent[0],
                last[1] + ctl.h * tangent[1],
                last[2] + ctl.h * tangent[2],
            ];
            match sys.correct(pred, tangent) {
                Ok((x, fx, iters)) if norm3(sub3(x, last)) < 2.0 * ctl.h => {
                    ctl.success(iters <= 3);
                    break Some((x, fx));
                }
                Err(ZrpError::DomainExit(_)) if !in_box(pred) => {
                    termination = Termination::ParameterBound;
                    break None;
                }
                _ => {
                    if !ctl.shrink() {
                        termination = Termination::StepUnderflow;
                        break None;
                    }
                }
            }
        };
        let Some((x, fx)) = accepted else { break };
        arclength += norm3(sub3(x, last));
        if !in_box(x) {
            termination = Termination::ParameterBound;
            break;
        }
        points.push(point_from(x, im_e, fx.norm(), arclength));
        xs.push(x);
        if arclength > 10.0 * opts.step0 && segment_distance(x0, last, x) < opts.step0 / 2.0 {
            termination = Termination::LoopClosed;
            break;
        }
    }
    Ok(Branch {
        mode: TraceMode::FixedIm,
        landau_index: landau_index(&points),
        points,
        termination,
    })
}

/// Trace a fixed-Im branch both ways from `start` and join the halves, so
/// the result runs from one end through `start` to the other.
pub fn trace_loop(im_e: f64, start: BranchPoint, opts: &TraceOptions) -> Result<Branch> {
    let forward = trace_fixed_im(im_e, start, &TraceOptions { direction: 1.0, ..*opts })?;
    if forward.termination == Termination::LoopClosed {
        return Ok(forward);
    }
    let backward = trace_fixed_im(im_e, start, &TraceOptions { direction: -1.0, ..*opts })?;
    let mut points: Vec<BranchPoint> = backward.points.iter().rev().copied().collect();
    points.extend(forward.points.iter().skip(1).copied());
    let mut arclength = 0.0;
    for k in 1..points.len() {
        let (a, b) = (points[k - 1], points[k]);
        arclength += norm3([
            b.eb_tilde - a.eb_tilde,
            b.e_tilde.re - a.e_tilde.re,
            b.f_tilde - a.f_tilde,
        ]);
        points[k].arclength = arclength;
    }
    points[0].arclength = 0.0;
    let termination = if backward.termination == Termination::LoopClosed {
        Termination::LoopClosed
    } else {
        forward.termination
    };
    Ok(Branch {
        mode: TraceMode::FixedIm,
        landau_index: landau_index(&points),
        points,
        termination,
    })
}

/// Shape of a joined fixed-Im branch around its Landau level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopSummary {
    pub level: i64,
    pub max_field: MaxField,
    /// Sign changes of d𝓔̃ along the branch.
    pub turning_points: usize,
    pub ends: [BranchPoint; 2],
    /// Both ends run back into the level: Re Ẽ within `end_tol` of 2n+1
    /// and 𝓔̃ below 15% of the maximum field.
    pub pinned_at_level: bool,
    /// First and last point coincide (within `end_tol`) in (Ẽ_B, Re Ẽ, 𝓔̃).
    pub closed: bool,
    /// Matched-field comparisons where the lower Re Ẽ sheet has larger |Ẽ_B|.
    pub sheet_order_holds: usize,
    pub sheet_comparisons: usize,
}

/// Value of `y` on a sheet (monotone in 𝓔̃) at field `f`, by linear
/// interpolation.
fn sheet_at(sheet: &[BranchPoint], f: f64, y: impl Fn(&BranchPoint) -> f64) -> Option<f64> {
    sheet.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        let (lo, hi) = (a.f_tilde.min(b.f_tilde), a.f_tilde.max(b.f_tilde));
        if f < lo || f > hi || hi == lo {
            return None;
        }
        let t = (f - a.f_tilde) / (b.f_tilde - a.f_tilde);
        Some(y(&a) + t * (y(&b) - y(&a)))
    })
}

pub fn loop_summary(branch: &Branch, end_tol: f64) -> Result<LoopSummary> {
    let pts = &branch.points;
    let max_field = max_field(branch)?;
    let level = branch.landau_index;
    let top = 2.0 * level as f64 + 1.0;
    let mut turning_points = 0;
    let mut last_sign = 0.0;
    for w in pts.windows(2) {
        let df = w[1].f_tilde - w[0].f_tilde;
        if df.abs() < 1e-12 {
            continue;
        }
        if last_sign != 0.0 && df.signum() != last_sign {
            turning_points += 1;
        }
        last_sign = df.signum();
    }
    let ends = [pts[0], pts[pts.len() - 1]];
    let pinned_at_level = ends
        .iter()
        .all(|p| (p.e_tilde.re - top).abs() < end_tol && p.f_tilde < 0.15 * max_field.f_max);
    let closed = norm3([
        ends[0].eb_tilde - ends[1].eb_tilde,
        ends[0].e_tilde.re - ends[1].e_tilde.re,
        ends[0].f_tilde - ends[1].f_tilde,
    ]) < end_tol;

    let k = (0..pts.len())
        .max_by(|&i, &j| pts[i].f_tilde.total_cmp(&pts[j].f_tilde))
        .expect("non-empty");
    let (left, right) = (&pts[..=k], &pts[k..]);
    let f_lo = left
        .iter()
        .map(|p| p.f_tilde)
        .fold(f64::INFINITY, f64::min)
        .max(right.iter().map(|p| p.f_tilde).fold(f64::INFINITY, f64::min));
    let mut sheet_comparisons = 0;
    let mut sheet_order_holds = 0;
    for j in 1..20 {
        let f = f_lo + (max_field.f_max - f_lo) * j as f64 / 20.0;
        let re = (sheet_at(left, f, |p| p.e_tilde.re), sheet_at(right, f, |p| p.e_tilde.re));
        let eb = (sheet_at(left, f, |p| p.eb_tilde), sheet_at(right, f, |p| p.eb_tilde));
        if let ((Some(re_l), Some(re_r)), (Some(eb_l), Some(eb_r))) = (re, eb) {
            sheet_comparisons += 1;
            let (lower_eb, upper_eb) = if re_l < re_r { (eb_l, eb_r) } else { (eb_r, eb_l) };
            if lower_eb.abs() > upper_eb.abs() {
                sheet_order_holds += 1;
            }
        }
    }
    Ok(LoopSummary {
        level,
        max_field,
        turning_points,
        ends,
        pinned_at_level,
        closed,
        sheet_order_holds,
        sheet_comparisons,
    })
}

/// Natural continuation in 𝓔̃ of a complex root at fixed Ẽ_B.
pub fn trace_fixed_ebind(
    eb_tilde: f64,
    f_start: f64,
    f_end: f64,
    seed_e: Complex64,
    opts: &TraceOptions,
) -> Result<Branch> {
    opts.validate()?;
    if !(eb_tilde < 0.0) {
        return Err(ZrpError::Domain(format!("Ẽ_B must be negative, got {eb_tilde}")));
    }
    if !(f_start > 0.0 && f_end > 0.0) || f_start == f_end {
        return Err(ZrpError::Domain(format!(
            "field range ({f_start}, {f_end}) must be positive and non-empty"
        )));
    }
    let root_at = |f: f64, seed: Complex64| {
        newton_complex(|z| Ok(d_field(z, eb_tilde, f, &opts.quad)?.value), seed, &opts.solve)
    };
    let first = root_at(f_start, seed_e)
        .map_err(|e| ZrpError::Precondition(format!("seed does not converge at f_start: {e}")))?;
    let sign = (f_end - f_start).signum();
    let mut points = vec![BranchPoint {
        e_tilde: first.location,
        eb_tilde,
        f_tilde: f_start,
        residual: first.residual,
        arclength: 0.0,
    }];
    let mut ctl = StepControl::new(opts.step0);
    let mut termination = Termination::MaxSteps;
    for _ in 0..opts.max_steps {
        let last = *points.last().expect("non-empty");
        if (f_end - last.f_tilde) * sign <= 0.0 || last.e_tilde.im < opts.min_im {
            termination = Termination::ParameterBound;
            break;
        }
        // slope dẼ/d𝓔̃ from the last two points, or implicitly at the start
        let slope = match points.len() {
            0 | 1 => implicit_slope(eb_tilde, last.e_tilde, last.f_tilde, opts)?,
            n => {
                let p = points[n - 2];
                (last.e_tilde - p.e_tilde) / (last.f_tilde - p.f_tilde)
            }
        };
        let accepted = loop {
            let h = ctl.h.min((f_end - last.f_tilde).abs());
            let f = last.f_tilde + sign * h;
            let guess = last.e_tilde + slope * (sign * h);
            match root_at(f, guess) {
                // reject hops onto a neighbouring branch
                Ok(r) if (r.location - guess).norm() <= 0.3 * (last.e_tilde - guess).norm() + 0.1 * h => {
                    ctl.success(r.iterations <= 3);
                    break Some((f, r));
                }
                Err(ZrpError::FieldTooWeak { .. }) | Err(ZrpError::DomainExit(_)) => {
                    termination = Termination::DomainExit;
                    break None;
                }
                _ => {
                    if !ctl.shrink() {
                        termination = Termination::StepUnderflow;
                        break None;
                    }
                }
            }
        };
        let Some((f, r)) = accepted else { break };
        let ds = Complex64::new((r.location - last.e_tilde).norm(), f - last.f_tilde).norm();
        points.push(BranchPoint {
            e_tilde: r.location,
            eb_tilde,
            f_tilde: f,
            residual: r.residual,
            arclength: last.arclength + ds,
        });
    }
    Ok(Branch {
        mode: TraceMode::FixedEbind,
        landau_index: landau_index(&points),
        points,
        termination,
    })
}

/// `dẼ/d𝓔̃ = -(∂D̃/∂𝓔̃)/(∂D̃/∂Ẽ)` by central differences.
fn implicit_slope(eb_tilde: f64, e: Complex64, f: f64, opts: &TraceOptions) -> Result<Complex64> {
    let d = |z: Complex64, f: f64| Ok::<_, ZrpError>(d_field(z, eb_tilde, f, &opts.quad)?.value);
    let he = opts.solve.fd_step * e.norm().max(1.0);
    let hf = opts.solve.fd_step * f.max(1e-2);
    let d_e = (d(e + he, f)? - d(e - he, f)?) / (2.0 * he);
    let d_f = (d(e, f + hf)? - d(e, (f - hf).max(0.5 * f))?) / (f + hf - (f - hf).max(0.5 * f));
    if d_e.norm() < 1e-300 {
        return Err(ZrpError::Degenerate(format!("∂D̃/∂Ẽ vanishes at {e}")));
    }
    Ok(-d_f / d_e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxField {
    pub f_max: f64,
    pub point: BranchPoint,
    /// The discrete maximum sits at an end of the branch, so the branch
    /// may continue to larger fields.
    pub at_boundary: bool,
}

/// Largest 𝓔̃ along a branch, refined by a parabola through the three
/// points around the discrete maximum (in arclength).
pub fn max_field(branch: &Branch) -> Result<MaxField> {
    let pts = &branch.points;
    if pts.len() < 3 {
        return Err(ZrpError::Precondition(format!(
            "max_field needs at least 3 points, got {}",
            pts.len()
        )));
    }
    let k = (0..pts.len())
        .max_by(|&i, &j| pts[i].f_tilde.total_cmp(&pts[j].f_tilde))
        .expect("non-empty");
    if k == 0 || k == pts.len() - 1 {
        return Ok(MaxField {
            f_max: pts[k].f_tilde,
            point: pts[k],
            at_boundary: true,
        });
    }
    let (a, b, c) = (pts[k - 1], pts[k], pts[k + 1]);
    let (s0, s1, s2) = (a.arclength, b.arclength, c.arclength);
    // Lagrange basis at the vertex of the parabola through (s, f)
    let quad = |y0: f64, y1: f64, y2: f64, s: f64| {
        y0 * (s - s1) * (s - s2) / ((s0 - s1) * (s0 - s2))
            + y1 * (s - s0) * (s - s2) / ((s1 - s0) * (s1 - s2))
            + y2 * (s - s0) * (s - s1) / ((s2 - s0) * (s2 - s1))
    };
    let d1 = (b.f_tilde - a.f_tilde) / (s1 - s0);
    let d2 = (c.f_tilde - b.f_tilde) / (s2 - s1);
    let curv = (d2 - d1) / (s2 - s0);
    let s_star = if curv < 0.0 {
        (0.5 * (s0 + s1) - d1 / (2.0 * curv)).clamp(s0, s2)
    } else {
        s1
    };
    let point = BranchPoint {
        e_tilde: Complex64::new(
            quad(a.e_tilde.re, b.e_tilde.re, c.e_tilde.re, s_star),
            quad(a.e_tilde.im, b.e_tilde.im, c.e_tilde.im, s_star),
        ),
        eb_tilde: quad(a.eb_tilde, b.eb_tilde, c.eb_tilde, s_star),
        f_tilde: quad(a.f_tilde, b.f_tilde, c.f_tilde, s_star).max(b.f_tilde),
        residual: b.residual,
        arclength: s_star,
    };
    Ok(MaxField {
        f_max: point.f_tilde,
        point,
        at_boundary: false,
    })
}

/// `(𝓔̃, 1/|Im Ẽ|)` per point; `Im Ẽ ≥ 0` maps to an infinite lifetime.
pub fn lifetime_profile(branch: &Branch) -> Vec<(f64, f64)> {
    branch
        .points
        .iter()
        .map(|p| {
            let tau = if p.e_tilde.im < 0.0 {
                1.0 / p.e_tilde.im.abs()
            } else {
                f64::INFINITY
            };
            (p.f_tilde, tau)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    /// Continues to the zero-field impurity state of its level.
    Impurity,
    /// Continues into the Landau level itself as 𝓔̃ → 0.
    FieldInduced,
    /// The continuation toward small field did not reach a known state.
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusRoot {
    pub re_e: f64,
    pub f_tilde: f64,
    pub residual: f64,
    pub kind: StateKind,
    /// Landau level the state belongs to, if classified.
    pub level: Option<i64>,
    /// Complex energy of the state at the reference field.
    pub small_field_e: Option<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub level: i64,
    /// Distinct states (branches) of the level with a root in the window.
    pub count: usize,
    /// Every polished root of the search, classified.
    pub roots: Vec<CensusRoot>,
    pub re_range: (f64, f64),
    pub f_range: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusOptions {
    /// Scan cells per axis.
    pub resolution: usize,
    /// Field at which states are identified.
    pub reference_field: f64,
    pub min_field: f64,
    pub trace: TraceOptions,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            resolution: 96,
            reference_field: 0.02,
            min_field: 0.01,
            trace: TraceOptions::new(0.0025, 4000),
        }
    }
}

/// Zero-field impurity state extracted from Landau level `n`: the root of
/// `d_zero_field` below 1 for `n = 0`, in `(2n - 1, 2n + 1)` otherwise.
pub fn zero_field_state(level: i64, eb_tilde: f64) -> Result<f64> {
    if level < 0 {
        return Err(ZrpError::Domain(format!("Landau level must be non-negative, got {level}")));
    }
    let g = |x: f64| d_zero_field(Complex64::new(x, 0.0), eb_tilde).map(|d| d.re);
    let top = 2.0 * level as f64 + 1.0;
    // d_zero_field rises from -∞ just above 2n - 1 to +∞ just below 2n + 1,
    // and from ln|Ẽ_B/2| - ψ(∞) = -∞ at Ẽ → -∞ for the ground state
    let mut lo = if level == 0 {
        let mut lo = -1.0f64;
        while g(lo)? > 0.0 {
            lo = 2.0 * lo - 1.0;
            if lo < -1e12 {
                return Err(ZrpError::NonConvergence {
                    operation: "zero_field_state",
                    iterations: 0,
                    residual: f64::NAN,
                    best: [lo, 0.0],
                });
            }
        }
        lo
    } else {
        top - 2.0 + 1e-12
    };
    let mut hi = top - 1e-12;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Follow a fixed-Im root at constant Ẽ_B down to the reference field and
/// decide which state of which level it is.
fn classify(
    re_e: f64,
    f_tilde: f64,
    im_e: f64,
    eb_tilde: f64,
    opts: &CensusOptions,
    zero_field: &[f64],
) -> (StateKind, Option<i64>, Option<Complex64>) {
    let seed = Complex64::new(re_e, im_e);
    let end = if f_tilde > opts.reference_field {
        match trace_fixed_ebind(eb_tilde, f_tilde, opts.reference_field, seed, &opts.trace) {
            Ok(b) => {
                let last = *b.points.last().expect("branch has its start point");
                if (last.f_tilde - opts.reference_field).abs() > 1e-12 {
                    return (StateKind::Unclassified, None, None);
                }
                last.e_tilde
            }
            Err(_) => return (StateKind::Unclassified, None, None),
        }
    } else {
        seed
    };
    for (k, z) in zero_field.iter().enumerate() {
        if (end - z).norm() < 0.05 {
            return (StateKind::Impurity, Some(k as i64), Some(end));
        }
    }
    let k = ((end.re - 1.0) / 2.0).round();
    if k >= 0.0 && (end.re - (2.0 * k + 1.0)).abs() < 0.15 {
        return (StateKind::FieldInduced, Some(k as i64), Some(end));
    }
    (StateKind::Unclassified, None, Some(end))
}

/// States of level `n` at the reference field: the impurity state continued
/// from zero field, and the field-induced states found as minima of `|D̃|`
/// along the real axis within 0.5 of the level.
fn small_field_states(
    level: i64,
    eb_tilde: f64,
    zero_field: &[f64],
    opts: &CensusOptions,
) -> Vec<Complex64> {
    let f = opts.reference_field;
    let q = &opts.trace.quad;
    let root = |seed: Complex64| {
        newton_complex(|z| Ok(d_field(z, eb_tilde, f, q)?.value), seed, &opts.trace.solve)
            .ok()
            .map(|r| r.location)
    };
    let mut states: Vec<Complex64> = root(Complex64::new(zero_field[level as usize], 0.0))
        .into_iter()
        .collect();
    if level == 0 {
        return states;
    }
    let top = 2.0 * level as f64 + 1.0;
    let n = 8 * opts.resolution;
    let xs: Vec<f64> = (0..=n).map(|k| top - 0.5 + k as f64 / n as f64).collect();
    let vals: Vec<f64> = xs
        .par_iter()
        .map(|&x| {
            d_field(Complex64::new(x, 0.0), eb_tilde, f, q)
                .map(|d| d.value.norm())
                .unwrap_or(f64::NAN)
        })
        .collect();
    let found: Vec<Complex64> = (1..n)
        .into_par_iter()
        .filter(|&k| vals[k] < vals[k - 1] && vals[k] < vals[k + 1])
        .filter_map(|k| root(Complex64::new(xs[k], 0.0)))
        .filter(|z| (z.re - top).abs() < 0.5 && z.im <= 1e-12)
        .collect();
    for z in found {
        if states.iter().all(|s| (s - z).norm() > 1e-6) {
            states.push(z);
        }
    }
    states
}

/// Complex energies of the states of Landau level `n` at the reference
/// field: the impurity state first, then the field-induced ones by
/// increasing Re Ẽ.
pub fn level_states(level: i64, eb_tilde: f64, opts: &CensusOptions) -> Result<Vec<Complex64>> {
    if level < 0 {
        return Err(ZrpError::Domain(format!("Landau level must be non-negative, got {level}")));
    }
    let zero_field = (0..=level)
        .map(|k| zero_field_state(k, eb_tilde))
        .collect::<Result<Vec<_>>>()?;
    let mut states = small_field_states(level, eb_tilde, &zero_field, opts);
    if states.len() > 1 {
        states[1..].sort_by(|a, b| a.re.total_cmp(&b.re));
    }
    Ok(states)
}

/// Polished fixed-Im roots where the complex track of a state crosses
/// `Im Ẽ = im_e`.
fn crossings(
    state: Complex64,
    im_e: f64,
    eb_tilde: f64,
    f_max: f64,
    opts: &CensusOptions,
) -> Vec<crate::rootfind::FixedImRoot> {
    let mut t = opts.trace;
    t.min_im = 50.0 * im_e.min(-1e-3);
    let mut out = Vec::new();
    let legs = [
        trace_fixed_ebind(eb_tilde, opts.reference_field, f_max, state, &t),
        trace_fixed_ebind(eb_tilde, opts.reference_field, opts.min_field, state, &t),
    ];
    for leg in legs.into_iter().flatten() {
        for w in leg.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ga, gb) = (a.e_tilde.im - im_e, b.e_tilde.im - im_e);
            if ga.signum() == gb.signum() || ga == gb {
                continue;
            }
            let t = ga / (ga - gb);
            let re = a.e_tilde.re + t * (b.e_tilde.re - a.e_tilde.re);
            let f = a.f_tilde + t * (b.f_tilde - a.f_tilde);
            if let Ok(r) = solve_fixed_im(im_e, eb_tilde, re, f, &opts.trace.solve, &opts.trace.quad) {
                out.push(r);
            }
        }
    }
    out
}

/// Resonances of Landau level `n` at fixed Im Ẽ and Ẽ_B with
/// `𝓔̃ ∈ (min_field, f_max)`.
///
/// Roots come from two sources: the complex tracks of the level's states
/// followed in 𝓔̃ from the reference field, and a grid scan of `|D̃|` over
/// (Re Ẽ, 𝓔̃). Each polished root is identified by continuing it at fixed
/// Ẽ_B down to the reference field, so a state whose width is non-monotone
/// in 𝓔̃ (and meets Im Ẽ more than once) counts once.
pub fn census(level: i64, im_e: f64, eb_tilde: f64, f_max: f64, opts: &CensusOptions) -> Result<Census> {
    if level < 0 {
        return Err(ZrpError::Domain(format!("Landau level must be non-negative, got {level}")));
    }
    if !(im_e < 0.0) {
        return Err(ZrpError::Domain(format!("Im Ẽ must be negative, got {im_e}")));
    }
    if !(eb_tilde < 0.0) {
        return Err(ZrpError::Domain(format!("Ẽ_B must be negative, got {eb_tilde}")));
    }
    if !(f_max > opts.min_field) || !(opts.reference_field >= opts.min_field) {
        return Err(ZrpError::Domain(format!(
            "need min_field ≤ reference_field and f_max > min_field, got {}, {}, {f_max}",
            opts.min_field, opts.reference_field
        )));
    }
    if opts.resolution < 8 {
        return Err(ZrpError::Domain(format!("resolution must be at least 8, got {}", opts.resolution)));
    }
    let top = 2.0 * level as f64 + 1.0;
    let zero_field = (0..=level + 1)
        .map(|k| zero_field_state(k, eb_tilde))
        .collect::<Result<Vec<_>>>()?;
    let re_range = if level == 0 {
        (zero_field[0] - 0.5, 1.95)
    } else {
        (top - 1.95, top + 0.95)
    };
    let f_range = (opts.min_field, f_max);

    let mut found: Vec<crate::rootfind::FixedImRoot> = small_field_states(level, eb_tilde, &zero_field, opts)
        .par_iter()
        .flat_map_iter(|&z| crossings(z, im_e, eb_tilde, f_max, opts))
        .collect();

    let n = opts.resolution;
    // pad by one cell so minima on the window edge are interior to the scan
    let pad = |r: (f64, f64)| {
        let c = (r.1 - r.0) / n as f64;
        (r.0 - c, r.1 + c)
    };
    let (scan_f_lo, scan_f_hi) = pad(f_range);
    let grid = scan_fixed_im(
        im_e,
        eb_tilde,
        pad(re_range),
        (scan_f_lo.max(0.5 * opts.min_field), scan_f_hi),
        (n + 2, n + 2),
        &opts.trace.quad,
    )?;
    found.extend(
        grid.minima()
            .par_iter()
            .filter_map(|s| solve_fixed_im(im_e, eb_tilde, s.x, s.y, &opts.trace.solve, &opts.trace.quad).ok())
            .collect::<Vec<_>>(),
    );

    let mut distinct: Vec<crate::rootfind::FixedImRoot> = Vec::new();
    for r in found
        .into_iter()
        .filter(|r| r.converged && r.f_tilde > opts.min_field && r.f_tilde <= f_max)
    {
        if distinct
            .iter()
            .all(|d| (d.re_e - r.re_e).hypot(d.f_tilde - r.f_tilde) > 1e-4)
        {
            distinct.push(r);
        }
    }
    distinct.sort_by(|a, b| a.re_e.total_cmp(&b.re_e));
    let roots: Vec<CensusRoot> = distinct
        .par_iter()
        .map(|r| {
            let (kind, lvl, small) = classify(r.re_e, r.f_tilde, im_e, eb_tilde, opts, &zero_field);
            CensusRoot {
                re_e: r.re_e,
                f_tilde: r.f_tilde,
                residual: r.residual,
                kind,
                level: lvl,
                small_field_e: small,
            }
        })
        .collect();
    let mut states: Vec<Complex64> = Vec::new();
    for r in roots.iter().filter(|r| r.level == Some(level)) {
        let z = r.small_field_e.expect("classified roots carry their small-field energy");
        if states.iter().all(|s| (s - z).norm() > 1e-6) {
            states.push(z);
        }
    }
    Ok(Census {
        level,
        count: states.len(),
        roots,
        re_range,
        f_range,
    })
}
