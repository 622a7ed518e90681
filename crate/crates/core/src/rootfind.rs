//! Zeros of the denominator: complex Newton polishing, the two-real-unknown
//! Newton at fixed Im Ẽ, and coarse grid scans for seeds.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denominator::{d_field, QuadOptions};
use crate::error::{Result, ZrpError};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub residual_tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    /// Backtracking factor applied to a rejected step.
    pub damping: f64,
    pub max_backtracks: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            residual_tol: 1e-10,
            step_tol: 1e-10,
            max_iter: 50,
            fd_step: 1e-6,
            damping: 0.5,
            max_backtracks: 8,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0 && self.step_tol > 0.0 && self.fd_step > 0.0) {
            return Err(ZrpError::Domain("solver tolerances must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(ZrpError::Domain(format!("damping must lie in (0, 1), got {}", self.damping)));
        }
        if self.max_iter == 0 {
            return Err(ZrpError::Domain("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Zero of a complex function of one complex variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub location: Complex64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Zero of `D̃` at fixed Im Ẽ, in the unknowns (Re Ẽ, 𝓔̃).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedImRoot {
    pub re_e: f64,
    pub f_tilde: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Newton iteration with a central-difference derivative.
pub fn newton_complex<F>(f: F, seed: Complex64, opts: &SolveOptions) -> Result<RootResult>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    opts.validate()?;
    let mut z = seed;
    let mut fz = f(z)?;
    let mut last_step = f64::INFINITY;
    let mut best = (z, fz.norm());
    for iter in 0..opts.max_iter {
        let residual = fz.norm();
        if residual < best.1 {
            best = (z, residual);
        }
        if residual < opts.residual_tol && last_step < opts.step_tol {
            return Ok(RootResult {
                location: z,
                residual,
                iterations: iter,
                converged: true,
            });
        }
        let h = opts.fd_step * z.norm().max(1.0);
        let deriv = (f(z + h)? - f(z - h)?) / (2.0 * h);
        if deriv.norm() < 1e-300 || !deriv.norm().is_finite() {
            return Err(ZrpError::Degenerate(format!("derivative {deriv} at z = {z}")));
        }
        let step = -fz / deriv;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = z + lambda * step;
            if let Ok(ft) = f(trial) {
                if ft.norm() < residual || ft.norm() < opts.residual_tol {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            lambda *= opts.damping;
        }
        let (next, fnext) = match accepted {
            Some(v) => v,
            None => {
                // no decrease along the Newton direction; take the shortest step
                let trial = z + lambda * step;
                (trial, f(trial)?)
            }
        };
        last_step = (next - z).norm();
        z = next;
        fz = fnext;
    }
    let residual = fz.norm();
    if residual < opts.residual_tol && last_step < opts.step_tol {
        return Ok(RootResult {
            location: z,
            residual,
            iterations: opts.max_iter,
            converged: true,
        });
    }
    Err(ZrpError::NonConvergence {
        operation: "newton_complex",
        iterations: opts.max_iter,
        residual: best.1.min(residual),
        best: [best.0.re, best.0.im],
    })
}

/// Evaluate `D̃(x + i·im_e; eb, y)`; quadrature failures surface as
/// domain exits so the corrector can back off.
pub(crate) fn fixed_im_residual(
    x: f64,
    y: f64,
    im_e: f64,
    eb_tilde: f64,
    quad: &QuadOptions,
) -> Result<Complex64> {
    if !(y > 0.0) {
        return Err(ZrpError::DomainExit(format!("field {y} is not positive")));
    }
    d_field(Complex64::new(x, im_e), eb_tilde, y, quad)
        .map(|r| r.value)
        .map_err(|e| ZrpError::DomainExit(e.to_string()))
}

/// Solve `D̃(x + i·im_e; Ẽ_B, y) = 0` for `(x, y) = (Re Ẽ, 𝓔̃)`.
pub fn solve_fixed_im(
    im_e: f64,
    eb_tilde: f64,
    seed_re_e: f64,
    seed_f: f64,
    opts: &SolveOptions,
    quad: &QuadOptions,
) -> Result<FixedImRoot> {
    opts.validate()?;
    if !(im_e < 0.0) {
        return Err(ZrpError::Domain(format!("Im Ẽ must be negative, got {im_e}")));
    }
    if !(eb_tilde < 0.0) {
        return Err(ZrpError::Domain(format!("Ẽ_B must be negative, got {eb_tilde}")));
    }
    if !(seed_f > 0.0) {
        return Err(ZrpError::Domain(format!("seed field must be positive, got {seed_f}")));
    }
    let eval = |x: f64, y: f64| fixed_im_residual(x, y, im_e, eb_tilde, quad);
    let (mut x, mut y) = (seed_re_e, seed_f);
    let mut fz = eval(x, y)?;
    let mut last_step = f64::INFINITY;
    let mut best = (x, y, fz.norm());
    // name the solver and its best iterate in mid-iteration failures
    let context = |e: ZrpError, best: (f64, f64, f64), iter: usize| {
        let tag = format!(
            "solve_fixed_im, iteration {iter}, best residual {:.3e} at (Re Ẽ, 𝓔̃) = ({}, {})",
            best.2, best.0, best.1
        );
        match e {
            ZrpError::DomainExit(m) => ZrpError::DomainExit(format!("{tag}: {m}")),
            ZrpError::Degenerate(m) => ZrpError::Degenerate(format!("{tag}: {m}")),
            other => other,
        }
    };
    for iter in 0..opts.max_iter {
        let residual = fz.norm();
        if residual < best.2 {
            best = (x, y, residual);
        }
        if residual < opts.residual_tol && last_step < opts.step_tol {
            return Ok(FixedImRoot {
                re_e: x,
                f_tilde: y,
                residual,
                iterations: iter,
                converged: true,
            });
        }
        let hx = opts.fd_step * x.abs().max(1.0);
        let hy = opts.fd_step * y.abs().max(1e-2);
        let dx = (eval(x + hx, y).map_err(|e| context(e, best, iter))? - fz) / hx;
        let dy = (eval(x, y + hy).map_err(|e| context(e, best, iter))? - fz) / hy;
        let jac = [[dx.re, dy.re], [dx.im, dy.im]];
        if linalg::condition(jac) > 1e12 {
            return Err(context(
                ZrpError::Degenerate(format!("Jacobian at (Re Ẽ, 𝓔̃) = ({x}, {y})")),
                best,
                iter,
            ));
        }
        let step = linalg::solve(jac, [-fz.re, -fz.im]).ok_or_else(|| {
            context(ZrpError::Degenerate(format!("singular Jacobian at ({x}, {y})")), best, iter)
        })?;
        let mut lambda = 1.0;
        let mut accepted = None;
        let mut last_err = None;
        for _ in 0..=opts.max_backtracks {
            let (tx, ty) = (x + lambda * step[0], y + lambda * step[1]);
            match eval(tx, ty) {
                Ok(ft) if ft.norm() < residual || ft.norm() < opts.residual_tol => {
                    accepted = Some((tx, ty, ft));
                    break;
                }
                Ok(_) => {}
                Err(e) => last_err = Some(e),
            }
            lambda *= opts.damping;
        }
        let (nx, ny, fnext) = match accepted {
            Some(v) => v,
            None => {
                let (tx, ty) = (x + lambda * step[0], y + lambda * step[1]);
                match eval(tx, ty) {
                    Ok(ft) => (tx, ty, ft),
                    Err(e) => return Err(context(last_err.unwrap_or(e), best, iter)),
                }
            }
        };
        last_step = (nx - x).hypot(ny - y);
        x = nx;
        y = ny;
        fz = fnext;
    }
    let residual = fz.norm();
    if residual < opts.residual_tol && last_step < opts.step_tol {
        return Ok(FixedImRoot {
            re_e: x,
            f_tilde: y,
            residual,
            iterations: opts.max_iter,
            converged: true,
        });
    }
    Err(ZrpError::NonConvergence {
        operation: "solve_fixed_im",
        iterations: opts.max_iter,
        residual: best.2.min(residual),
        best: [best.0, best.1],
    })
}

/// One local minimum of `|D̃|` on a scan grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// `|D̃|` sampled at cell centres of a rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    /// Row-major `[iy * nx + ix]`; `None` where the evaluation failed.
    pub values: Vec<Option<f64>>,
}

impl ScanGrid {
    pub fn x_at(&self, ix: usize) -> f64 {
        let (a, b) = self.x_range;
        a + (b - a) * (ix as f64 + 0.5) / self.nx as f64
    }

    pub fn y_at(&self, iy: usize) -> f64 {
        let (a, b) = self.y_range;
        a + (b - a) * (iy as f64 + 0.5) / self.ny as f64
    }

    fn get(&self, ix: usize, iy: usize) -> Option<f64> {
        self.values[iy * self.nx + ix]
    }

    /// Strict interior local minima in the 8-neighbourhood, sorted by value
    /// and merged within one cell diagonal.
    pub fn minima(&self) -> Vec<Seed> {
        let mut found = Vec::new();
        for iy in 1..self.ny.saturating_sub(1) {
            for ix in 1..self.nx.saturating_sub(1) {
                let Some(v) = self.get(ix, iy) else { continue };
                let mut is_min = true;
                'nbr: for jy in iy - 1..=iy + 1 {
                    for jx in ix - 1..=ix + 1 {
                        if (jx, jy) == (ix, iy) {
                            continue;
                        }
                        match self.get(jx, jy) {
                            Some(w) if w > v => {}
                            _ => {
                                is_min = false;
                                break 'nbr;
                            }
                        }
                    }
                }
                if is_min {
                    found.push(Seed {
                        x: self.x_at(ix),
                        y: self.y_at(iy),
                        value: v,
                    });
                }
            }
        }
        found.sort_by(|a, b| a.value.total_cmp(&b.value));
        let dx = (self.x_range.1 - self.x_range.0) / self.nx as f64;
        let dy = (self.y_range.1 - self.y_range.0) / self.ny as f64;
        let radius = dx.hypot(dy);
        let mut kept: Vec<Seed> = Vec::new();
        for s in found {
            if kept.iter().all(|k| (k.x - s.x).hypot(k.y - s.y) > radius) {
                kept.push(s);
            }
        }
        kept
    }
}

/// Evaluate `g` on an `nx × ny` cell grid (in parallel) and return the grid.
pub fn scan_grid<G>(
    g: G,
    x_range: (f64, f64),
    y_range: (f64, f64),
    n_cells: (usize, usize),
) -> Result<ScanGrid>
where
    G: Fn(f64, f64) -> Result<f64> + Sync,
{
    let (nx, ny) = n_cells;
    if nx < 8 || ny < 8 {
        return Err(ZrpError::Domain(format!("scan needs at least 8 cells per axis, got {nx}x{ny}")));
    }
    if !(x_range.1 > x_range.0) || !(y_range.1 > y_range.0) {
        return Err(ZrpError::Domain("scan ranges must be non-degenerate".into()));
    }
    let mut grid = ScanGrid {
        x_range,
        y_range,
        nx,
        ny,
        values: Vec::new(),
    };
    let values: Vec<Option<f64>> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (ix, iy) = (k % nx, k / nx);
            g(grid.x_at(ix), grid.y_at(iy)).ok().filter(|v| v.is_finite())
        })
        .collect();
    let failed = values.iter().filter(|v| v.is_none()).count();
    if 2 * failed > values.len() {
        return Err(ZrpError::ScanFailed {
            failed,
            total: values.len(),
        });
    }
    grid.values = values;
    Ok(grid)
}

/// Grid scan returning the seeds only.
pub fn grid_scan<G>(
    g: G,
    x_range: (f64, f64),
    y_range: (f64, f64),
    n_cells: (usize, usize),
) -> Result<Vec<Seed>>
where
    G: Fn(f64, f64) -> Result<f64> + Sync,
{
    Ok(scan_grid(g, x_range, y_range, n_cells)?.minima())
}

/// Scan `|D̃|` over (Re Ẽ, 𝓔̃) at fixed Im Ẽ and Ẽ_B.
pub fn scan_fixed_im(
    im_e: f64,
    eb_tilde: f64,
    re_range: (f64, f64),
    f_range: (f64, f64),
    n_cells: (usize, usize),
    quad: &QuadOptions,
) -> Result<ScanGrid> {
    scan_grid(
        |x, y| fixed_im_residual(x, y, im_e, eb_tilde, quad).map(|v| v.norm()),
        re_range,
        f_range,
        n_cells,
    )
}
