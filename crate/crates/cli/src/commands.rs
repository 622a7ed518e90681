use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{json, Value};
use zrp_core::denominator::{d_field, d_zero_field, QuadOptions};
use zrp_core::rootfind::{scan_fixed_im, solve_fixed_im, SolveOptions};
use zrp_core::trace::{
    census, lifetime_profile, trace_fixed_ebind, trace_fixed_im, trace_loop, zero_field_state, Branch,
    BranchPoint, CensusOptions, StateKind, Termination, TraceOptions,
};
use zrp_core::units::{realize_scenario, MaterialParams, ScaledPoint};
use zrp_core::ZrpError;

use crate::output::{pretty, write_atomic, Cell, Table};
use crate::{Command, Format, Output, TraceModeArg};

/// Resonance used to realize the laboratory table.
const REFERENCE_E: Complex64 = Complex64::new(3.070_345_618_281_1, -1e-4);
const REFERENCE_EB: f64 = -2.286_045_972_645_1;
const REFERENCE_F: f64 = 0.2647;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "output: {m}"),
        }
    }
}

impl From<ZrpError> for CliError {
    fn from(e: ZrpError) -> Self {
        match e {
            ZrpError::Domain(_)
            | ZrpError::Precondition(_)
            | ZrpError::ZeroField
            | ZrpError::Pole(_)
            | ZrpError::LandauPole { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(input(msg))
    }
}

fn need<T>(v: Option<T>, flag: &str, mode: &str) -> Result<T> {
    v.ok_or_else(|| input(format!("--{flag} is required with --mode {mode}")))
}

fn finite(vals: &[(&str, f64)]) -> Result<()> {
    for (name, v) in vals {
        require(v.is_finite(), &format!("--{name} must be finite, got {v}"))?;
    }
    Ok(())
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        require(n > 0, "--threads must be positive")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| input(format!("cannot size the worker pool: {e}")))?;
    }
    Ok(())
}

fn target(o: &Output, command: &str, natural: Format) -> (PathBuf, Format) {
    let format = o.format.unwrap_or(natural);
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = o.out.clone().unwrap_or_else(|| PathBuf::from(format!("zrp_{command}.{ext}")));
    (path, format)
}

fn save(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn save_table(t: &Table, path: &Path, format: Format) -> Result<()> {
    save(
        path,
        &match format {
            Format::Csv => t.to_csv(),
            Format::Json => t.to_json(),
        },
    )
}

/// A single JSON record, or a one-row table in CSV form.
fn save_record(t: &Table, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Csv => save(path, &t.to_csv()),
        Format::Json => save(path, &pretty(&t.records()[0])),
    }
}

pub fn run(cmd: Command) -> Result<String> {
    match cmd {
        Command::Bound { ebind, levels, output } => {
            finite(&[("ebind", ebind)])?;
            require(ebind < 0.0, "--ebind must be negative")?;
            require((0..=1000).contains(&levels), "--levels must be between 0 and 1000")?;
            let (path, format) = target(&output, "bound", Format::Csv);
            let mut t = Table::new(&["ebind", "level_n", "e_root", "residual"]);
            for n in 0..=levels {
                let e = zero_field_state(n, ebind)?;
                let r = d_zero_field(Complex64::new(e, 0.0), ebind)?.norm();
                t.push(vec![ebind.into(), n.into(), e.into(), r.into()]);
            }
            save_table(&t, &path, format)?;
            Ok(format!("{} roots written to {}", t.rows.len(), path.display()))
        }

        Command::Denom { re, im, ebind, field, tol, depth, output } => {
            finite(&[("re", re), ("im", im), ("ebind", ebind), ("field", field)])?;
            require(ebind < 0.0, "--ebind must be negative")?;
            require(field >= 0.0, "--field must be non-negative")?;
            let mut q = QuadOptions::default();
            if let Some(tol) = tol {
                require(tol > 0.0 && tol < 1.0, "--tol must lie in (0, 1)")?;
                q.rel_tol = tol;
                q.abs_tol = q.abs_tol.min(tol);
            }
            if let Some(d) = depth {
                require(d > 0.0 && d.is_finite(), "--depth must be positive")?;
                q.depth = Some(d);
            }
            q.validate()?;
            let (path, format) = target(&output, "denom", Format::Json);
            let e = Complex64::new(re, im);
            let (value, abs_err, evals) = if field == 0.0 {
                (d_zero_field(e, ebind)?, 0.0, 0)
            } else {
                let r = d_field(e, ebind, field, &q)?;
                (r.value, r.abs_err, r.evals)
            };
            let mut t = Table::new(&["re", "im", "value_re", "value_im", "abs_err", "evals"]);
            t.push(vec![
                re.into(),
                im.into(),
                value.re.into(),
                value.im.into(),
                abs_err.into(),
                (evals as i64).into(),
            ]);
            save_record(&t, &path, format)?;
            Ok(format!("|D| = {:.3e} (err {abs_err:.1e}) written to {}", value.norm(), path.display()))
        }

        Command::Scan { re_min, re_max, field_min, field_max, im, ebind, cells, threads, output } => {
            finite(&[
                ("re-min", re_min),
                ("re-max", re_max),
                ("field-min", field_min),
                ("field-max", field_max),
                ("im", im),
                ("ebind", ebind),
            ])?;
            require(re_min < re_max, "--re-min must be below --re-max")?;
            require(0.0 < field_min && field_min < field_max, "need 0 < --field-min < --field-max")?;
            require(ebind < 0.0, "--ebind must be negative")?;
            let (nx, ny) = parse_cells(&cells)?;
            set_threads(threads)?;
            let (path, format) = target(&output, "scan", Format::Csv);
            let grid = scan_fixed_im(im, ebind, (re_min, re_max), (field_min, field_max), (nx, ny), &QuadOptions::default())?;
            let mut t = Table::new(&["re_e", "f_tilde", "abs_d"]);
            for iy in 0..ny {
                for ix in 0..nx {
                    let v = grid.values[iy * nx + ix].unwrap_or(f64::NAN);
                    t.push(vec![grid.x_at(ix).into(), grid.y_at(iy).into(), v.into()]);
                }
            }
            let minima = grid.minima();
            let mut seeds = Table::new(&["re_e", "f_tilde", "abs_d"]);
            for s in &minima {
                seeds.push(vec![s.x.into(), s.y.into(), s.value.into()]);
            }
            let seeds_path = sibling(&path, "_seeds");
            save_table(&t, &path, format)?;
            save_table(&seeds, &seeds_path, format)?;
            Ok(format!(
                "{} cells scanned, {} minima; written to {} and {}",
                nx * ny,
                minima.len(),
                path.display(),
                seeds_path.display()
            ))
        }

        Command::Roots { mode: _, im, ebind, seed_re, seed_field, output } => {
            finite(&[("im", im), ("ebind", ebind), ("seed-re", seed_re), ("seed-field", seed_field)])?;
            require(ebind < 0.0, "--ebind must be negative")?;
            require(seed_field > 0.0, "--seed-field must be positive")?;
            let (path, format) = target(&output, "roots", Format::Json);
            let r = solve_fixed_im(im, ebind, seed_re, seed_field, &SolveOptions::default(), &QuadOptions::default())?;
            let mut t = Table::new(&["re_e", "f_tilde", "residual", "iterations"]);
            t.push(vec![r.re_e.into(), r.f_tilde.into(), r.residual.into(), (r.iterations as i64).into()]);
            save_record(&t, &path, format)?;
            Ok(format!(
                "1 root (Re E = {}, field = {}, residual {:.1e}) written to {}",
                r.re_e,
                r.f_tilde,
                r.residual,
                path.display()
            ))
        }

        Command::Trace {
            mode,
            im,
            start_ebind,
            start_re,
            start_field,
            direction,
            ebind,
            f_start,
            f_end,
            seed_re,
            seed_im,
            step,
            max_steps,
            output,
        } => {
            require(step > 0.0 && step.is_finite(), "--step must be positive")?;
            require(max_steps > 0, "--max-steps must be positive")?;
            let (path, format) = target(&output, "trace", Format::Csv);
            let opts = TraceOptions::new(step, max_steps);
            let branch = match mode {
                TraceModeArg::FixedIm => {
                    let m = "fixed-im";
                    let im = need(im, "im", m)?;
                    let eb = need(start_ebind, "start-ebind", m)?;
                    let re = need(start_re, "start-re", m)?;
                    let f = need(start_field, "start-field", m)?;
                    finite(&[("im", im), ("start-ebind", eb), ("start-re", re), ("start-field", f)])?;
                    require(eb < 0.0, "--start-ebind must be negative")?;
                    require(f > 0.0, "--start-field must be positive")?;
                    require([-1, 0, 1].contains(&direction), "--direction must be -1, 0 or 1")?;
                    let r = solve_fixed_im(im, eb, re, f, &opts.solve, &opts.quad)?;
                    let start = BranchPoint {
                        e_tilde: Complex64::new(r.re_e, im),
                        eb_tilde: eb,
                        f_tilde: r.f_tilde,
                        residual: r.residual,
                        arclength: 0.0,
                    };
                    if direction == 0 {
                        trace_loop(im, start, &opts)?
                    } else {
                        trace_fixed_im(im, start, &TraceOptions { direction: direction as f64, ..opts })?
                    }
                }
                TraceModeArg::FixedEbind => {
                    let m = "fixed-ebind";
                    let eb = need(ebind, "ebind", m)?;
                    let f0 = need(f_start, "f-start", m)?;
                    let f1 = need(f_end, "f-end", m)?;
                    let sr = need(seed_re, "seed-re", m)?;
                    let si = seed_im.unwrap_or(0.0);
                    finite(&[("ebind", eb), ("f-start", f0), ("f-end", f1), ("seed-re", sr), ("seed-im", si)])?;
                    trace_fixed_ebind(eb, f0, f1, Complex64::new(sr, si), &opts)?
                }
            };
            let t = branch_table(&branch);
            save_table(&t, &path, format)?;
            Ok(format!(
                "{} points traced ({}) written to {}",
                t.rows.len(),
                termination_name(branch.termination),
                path.display()
            ))
        }

        Command::Census { level, im, ebind, f_max, cells, threads, output } => {
            finite(&[("im", im), ("ebind", ebind), ("f-max", f_max)])?;
            require(level >= 0, "--level must be non-negative")?;
            require(im < 0.0, "--im must be negative")?;
            require(ebind < 0.0, "--ebind must be negative")?;
            set_threads(threads)?;
            let (path, format) = target(&output, "census", Format::Json);
            let opts = CensusOptions {
                resolution: cells,
                ..CensusOptions::default()
            };
            let c = census(level, im, ebind, f_max, &opts)?;
            let mut t = Table::new(&["re_e", "f_tilde", "residual", "kind", "level", "small_field_re", "small_field_im"]);
            for r in &c.roots {
                let z = r.small_field_e.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                t.push(vec![
                    r.re_e.into(),
                    r.f_tilde.into(),
                    r.residual.into(),
                    kind_name(r.kind).into(),
                    r.level.map_or(Cell::Text(String::new()), Cell::Int),
                    z.re.into(),
                    z.im.into(),
                ]);
            }
            match format {
                Format::Csv => save_table(&t, &path, format)?,
                Format::Json => {
                    let doc = json!({
                        "level": c.level,
                        "count": c.count,
                        "re_range": [c.re_range.0, c.re_range.1],
                        "f_range": [c.f_range.0, c.f_range.1],
                        "roots": t.records().into_iter().map(|mut r| {
                            if r["level"] == "" {
                                r["level"] = Value::Null;
                            }
                            r
                        }).collect::<Vec<_>>(),
                    });
                    save(&path, &pretty(&doc))?;
                }
            }
            Ok(format!(
                "level {level}: {} states from {} roots written to {}",
                c.count,
                c.roots.len(),
                path.display()
            ))
        }

        Command::Table1 { binding_list, mass, output } => {
            require(!binding_list.is_empty(), "--binding-list must not be empty")?;
            for b in &binding_list {
                require(*b > 0.0 && b.is_finite(), &format!("binding energies must be positive meV, got {b}"))?;
            }
            let mat = MaterialParams::new(mass)?;
            let (path, format) = target(&output, "table1", Format::Csv);
            let point = ScaledPoint::new(REFERENCE_E, REFERENCE_EB, REFERENCE_F)?;
            let mut t = Table::new(&["E_B_meV", "B_tesla", "E_kV_per_m", "tau_ns"]);
            for &b in &binding_list {
                let s = realize_scenario(b, &mat, &point)?;
                t.push(vec![
                    b.into(),
                    s.magnetic_field.into(),
                    (s.electric_field * 1e-3).into(),
                    (s.lifetime * 1e9).into(),
                ]);
            }
            save_table(&t, &path, format)?;
            Ok(format!("{} rows written to {}", t.rows.len(), path.display()))
        }
    }
}

fn parse_cells(s: &str) -> Result<(usize, usize)> {
    let bad = || input(format!("--cells must look like NxM with N, M >= 8, got {s:?}"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let nx: usize = a.trim().parse().map_err(|_| bad())?;
    let ny: usize = b.trim().parse().map_err(|_| bad())?;
    if nx < 8 || ny < 8 {
        return Err(bad());
    }
    Ok((nx, ny))
}

/// `dir/name_suffix.ext` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

fn branch_table(b: &Branch) -> Table {
    let mut t = Table::new(&["arclength", "re_e", "im_e", "ebind", "f_tilde", "residual", "tau_scaled"]);
    for (p, (_, tau)) in b.points.iter().zip(lifetime_profile(b)) {
        t.push(vec![
            p.arclength.into(),
            p.e_tilde.re.into(),
            p.e_tilde.im.into(),
            p.eb_tilde.into(),
            p.f_tilde.into(),
            p.residual.into(),
            tau.into(),
        ]);
    }
    t
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::LoopClosed => "loop-closed",
        Termination::ParameterBound => "parameter-bound",
        Termination::MaxSteps => "max-steps",
        Termination::StepUnderflow => "step-underflow",
        Termination::DomainExit => "domain-exit",
    }
}

fn kind_name(k: StateKind) -> &'static str {
    match k {
        StateKind::Impurity => "impurity",
        StateKind::FieldInduced => "field-induced",
        StateKind::Unclassified => "unclassified",
    }
}
