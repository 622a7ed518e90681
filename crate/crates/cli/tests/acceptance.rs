//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if a gating criterion fails. Criterion 8 is exploratory and
//! never gates.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zrp_core::denominator::{d_field, d_zero_field, QuadOptions, Strategy};
use zrp_core::rootfind::{solve_fixed_im, SolveOptions};
use zrp_core::specfun::{digamma, landau_series, EULER_GAMMA};
use zrp_core::trace::{
    census, level_states, lifetime_profile, loop_summary, trace_fixed_ebind, trace_loop, BranchPoint,
    CensusOptions, LoopSummary, TraceOptions,
};

const RESONANCE_E: f64 = 3.070_345_618_281_1;
const RESONANCE_EB: f64 = -2.286_045_972_645_1;
const RESONANCE_F: f64 = 0.2647;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn distance_to_odd(x: f64) -> f64 {
    (x - (2.0 * ((x - 1.0) / 2.0).round() + 1.0)).abs()
}

fn table1() -> Outcome {
    let dir = std::env::temp_dir().join(format!("zrp-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("table1.csv");
    let t = Instant::now();
    let run = Command::new(env!("CARGO_BIN_EXE_zrp"))
        .args(["table1", "--out"])
        .arg(&path)
        .output()
        .expect("zrp runs");
    let elapsed = t.elapsed();
    if !run.status.success() {
        return outcome(false, format!("zrp table1 failed: {}", String::from_utf8_lossy(&run.stderr)));
    }
    let text = std::fs::read_to_string(&path).unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    let published = [
        [1.0, 0.506, 6.423, 7.52],
        [2.0, 1.013, 18.167, 3.76],
        [4.0, 2.025, 51.383, 1.88],
        [6.0, 3.038, 94.396, 1.25],
    ];
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    if rows.len() != 4 {
        return outcome(false, format!("{} rows, expected 4", rows.len()));
    }
    let mut worst: f64 = 0.0;
    for (row, want) in rows.iter().zip(published) {
        for k in 1..4 {
            worst = worst.max((row[k] - want[k]).abs() / want[k]);
        }
    }
    outcome(
        worst < 5e-3 && elapsed < Duration::from_secs(1),
        format!("12 derived values, worst relative error {:.2}%, {:.0} ms", 100.0 * worst, elapsed.as_secs_f64() * 1e3),
    )
}

fn resonance_point() -> Outcome {
    let t = Instant::now();
    let q = QuadOptions::default();
    let d = d_field(Complex64::new(RESONANCE_E, -1e-4), RESONANCE_EB, RESONANCE_F, &q).unwrap();
    let r = solve_fixed_im(-1e-4, RESONANCE_EB, 3.07, 0.26, &SolveOptions::default(), &q);
    let elapsed = t.elapsed();
    let Ok(r) = r else {
        return outcome(false, format!("|D| = {:.1e}, solve failed: {:?}", d.value.norm(), r.err()));
    };
    let (dre, df) = ((r.re_e - RESONANCE_E).abs(), (r.f_tilde - RESONANCE_F).abs());
    outcome(
        d.value.norm() < 1e-6 && dre < 1e-6 && df < 1e-6 && elapsed < Duration::from_secs(10),
        format!(
            "|D| = {:.1e}; solved Re E = {:.13}, field = {:.13} (offsets {dre:.1e}, {df:.1e}), {:.2} s",
            d.value.norm(),
            r.re_e,
            r.f_tilde,
            elapsed.as_secs_f64()
        ),
    )
}

fn zero_field_consistency() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = QuadOptions::default();
    let (mut worst_gap, mut worst_ratio) = (0.0f64, 0.0f64);
    let (mut gap_fail, mut ratio_fail, mut errors) = (Vec::new(), 0, Vec::new());
    let mut n = 0;
    while n < 100 {
        let e = Complex64::new(rng.gen_range(-4.0..12.0), rng.gen_range(-0.05..0.05));
        if distance_to_odd(e.re).hypot(e.im) <= 0.1 {
            continue;
        }
        let eb = rng.gen_range(-10.0..-0.2);
        n += 1;
        let d0 = d_zero_field(e, eb).unwrap();
        let j = |f: f64| d_field(e, eb, f, &q).map(|d| d.value - d0);
        match (j(1e-2), j(1e-3), j(1e-4)) {
            (Ok(a), Ok(b), Ok(c)) => {
                let r1 = a.norm() / b.norm();
                let r2 = b.norm() / c.norm();
                let dev = (r1 - 100.0).abs().max((r2 - 100.0).abs()) / 100.0;
                worst_ratio = worst_ratio.max(dev);
                if dev > 0.2 {
                    ratio_fail += 1;
                }
                if b.norm() > worst_gap {
                    worst_gap = b.norm();
                }
                if b.norm() >= 1e-4 {
                    gap_fail.push((b.norm(), e, distance_to_odd(e.re)));
                }
            }
            (a, b, c) => errors.push(format!("E = {e:.3}: {:?}", [a.err(), b.err(), c.err()])),
        }
    }
    let elapsed = t.elapsed();
    gap_fail.sort_by(|a, b| b.0.total_cmp(&a.0));
    let examples: Vec<String> = gap_fail
        .iter()
        .take(3)
        .map(|(g, e, d)| format!("{g:.1e} at E = {:.4}{:+.4}i ({d:.3} from the level)", e.re, e.im))
        .collect();
    outcome(
        gap_fail.is_empty() && ratio_fail == 0 && errors.is_empty() && elapsed < Duration::from_secs(120),
        format!(
            "100 points; |D(1e-3) - D0| < 1e-4 on {}/100 [{}], max {worst_gap:.1e}{}; \
             O(field^2) ratios within 20% of 100 on {}/100 [{}], worst {:.1}%; {} evaluation errors{}; {:.1} s",
            100 - gap_fail.len(),
            if gap_fail.is_empty() { "ok" } else { "FAIL" },
            if examples.is_empty() { String::new() } else { format!(" (largest: {})", examples.join(", ")) },
            100 - ratio_fail,
            if ratio_fail == 0 { "ok" } else { "FAIL" },
            100.0 * worst_ratio,
            errors.len(),
            if errors.is_empty() { String::new() } else { format!(" ({})", errors.join("; ")) },
            elapsed.as_secs_f64()
        ),
    )
}

fn contour_independence() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 50 {
        let re: f64 = rng.gen_range(0.0..9.0);
        if distance_to_odd(re) < 0.1 {
            continue;
        }
        let e = Complex64::new(re, rng.gen_range(-0.05..0.0));
        let eb = rng.gen_range(-10.0..-0.2);
        let f = rng.gen_range(0.1..1.0);
        n += 1;
        let eval = |depth: f64, scale: f64| {
            let q = QuadOptions {
                depth: Some(depth),
                truncation_scale: scale,
                strategy: Strategy::Quadrature,
                ..QuadOptions::default()
            };
            d_field(e, eb, f, &q)
        };
        let runs = [eval(1.0, 1.0), eval(0.5, 1.0), eval(1.5, 1.0), eval(1.0, 1.5)];
        let Some(base) = runs[0].as_ref().ok() else {
            failures.push(format!("E={e:.3}: reference evaluation failed"));
            continue;
        };
        for (label, r) in ["depth 0.5", "depth 1.5", "1.5 U"].iter().zip(&runs[1..]) {
            match r {
                Ok(r) => {
                    let diff = (r.value - base.value).norm();
                    let allowed = 10.0 * (r.abs_err + base.abs_err);
                    worst = worst.max(diff / allowed);
                    if diff > allowed {
                        failures.push(format!("E={e:.3} Eb={eb:.2} f={f:.3} {label}: {diff:.1e} > {allowed:.1e}"));
                    }
                }
                Err(err) => failures.push(format!("E={e:.3} {label}: {err}")),
            }
        }
    }
    let elapsed = t.elapsed();
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(120),
        format!(
            "50 points x 3 variants, worst |diff|/(10 x errors) = {worst:.2}, {:.1} s{}",
            elapsed.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
    )
}

fn series_identity() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 200 {
        let e = Complex64::new(rng.gen_range(-30.0..30.0), rng.gen_range(-10.0..10.0));
        if distance_to_odd(e.re).hypot(e.im) < 0.1 {
            continue;
        }
        n += 1;
        let s = landau_series(e, 1e-13).unwrap();
        let psi = digamma((1.0 - e) / 2.0).unwrap();
        worst = worst.max((psi + EULER_GAMMA + 2.0 * 2f64.ln() + s.value).norm());
    }
    let elapsed = t.elapsed();
    outcome(
        worst < 1e-9 && elapsed < Duration::from_secs(10),
        format!("200 points, max residual {worst:.1e}, {:.0} ms", elapsed.as_secs_f64() * 1e3),
    )
}

fn resonance_census() -> Outcome {
    let t = Instant::now();
    let opts = CensusOptions::default();
    let mut counts = Vec::new();
    for n in 0..=3 {
        match census(n, -1e-4, -3.0, 1.0, &opts) {
            Ok(c) => counts.push(c.count as i64),
            Err(e) => return outcome(false, format!("census n = {n} failed: {e}")),
        }
    }
    let elapsed = t.elapsed();
    outcome(
        counts == [1, 2, 3, 4] && elapsed < Duration::from_secs(1200),
        format!(
            "counts {counts:?} for n = 0..3 (expected [1, 2, 3, 4]), resolution {}, {:.0} s",
            opts.resolution,
            elapsed.as_secs_f64()
        ),
    )
}

/// Start of the n = 1 field-induced branch at Ẽ_B = -3, carried from
/// Im Ẽ = -1e-4 to `im` by small geometric steps in Im Ẽ.
fn branch_start(im: f64) -> Result<BranchPoint, String> {
    let (so, q) = (SolveOptions::default(), QuadOptions::default());
    let eb = -3.0;
    let mut r = solve_fixed_im(-1e-4, eb, 3.037, 0.204, &so, &q).map_err(|e| e.to_string())?;
    let steps = ((im / -1e-4).log10().abs() * 5.0).ceil() as i32;
    for k in 1..=steps {
        let imk = -1e-4 * (im / -1e-4f64).powf(k as f64 / steps as f64);
        r = solve_fixed_im(imk, eb, r.re_e, r.f_tilde, &so, &q).map_err(|e| e.to_string())?;
    }
    Ok(BranchPoint {
        e_tilde: Complex64::new(r.re_e, im),
        eb_tilde: eb,
        f_tilde: r.f_tilde,
        residual: r.residual,
        arclength: 0.0,
    })
}

fn loop_at(im: f64, step: f64) -> Result<LoopSummary, String> {
    let start = branch_start(im)?;
    let b = trace_loop(im, start, &TraceOptions::new(step, 4000)).map_err(|e| e.to_string())?;
    loop_summary(&b, 0.01).map_err(|e| e.to_string())
}

fn branch_structure() -> Outcome {
    let t = Instant::now();
    let (a, a_half, b) = match (loop_at(-1e-4, 0.01), loop_at(-1e-4, 0.005), loop_at(-1e-6, 0.01)) {
        (Ok(a), Ok(h), Ok(b)) => (a, h, b),
        (a, h, b) => return outcome(false, format!("trace failed: {:?}", [a.err(), h.err(), b.err()])),
    };
    let elapsed = t.elapsed();
    let loop_ok = a.pinned_at_level && a.level == 1;
    let unique_max = a.turning_points == 1 && !a.max_field.at_boundary;
    let sheets_ok = a.sheet_comparisons >= 10 && a.sheet_order_holds == a.sheet_comparisons;
    let (fa, fb) = (a.max_field.f_max, b.max_field.f_max);
    let rel = (fa - fb).abs() / fa;
    let width_ok = fb < fa && rel < 0.1;
    let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
    outcome(
        loop_ok && unique_max && sheets_ok && width_ok && elapsed < Duration::from_secs(1800),
        format!(
            "loop from the level [{}]: ends at Re E = {:.4}, {:.4} with field {:.4}, {:.4} (3D endpoints coincide: {}); \
             unique maximum [{}]: {} turning point, f_max = {fa:.6} (step/2: {:.6}); \
             sheet ordering [{}]: {}/{}; \
             f_max(-1e-6) = {fb:.6} vs f_max(-1e-4) = {fa:.6}, {:.1}% apart, needs < 10% [{}]; {:.0} s",
            mark(loop_ok),
            a.ends[0].e_tilde.re,
            a.ends[1].e_tilde.re,
            a.ends[0].f_tilde,
            a.ends[1].f_tilde,
            a.closed,
            mark(unique_max),
            a.turning_points,
            a_half.max_field.f_max,
            mark(sheets_ok),
            a.sheet_order_holds,
            a.sheet_comparisons,
            100.0 * rel,
            mark(width_ok),
            elapsed.as_secs_f64()
        ),
    )
}

/// Index of an interior strict local maximum of `tau` over `(f, tau)`
/// pairs, ignoring the first and last few points.
fn interior_maximum(profile: &[(f64, f64)]) -> Option<(f64, f64)> {
    let skip = 3;
    if profile.len() < 2 * skip + 3 {
        return None;
    }
    (skip..profile.len() - skip)
        .filter(|&k| profile[k].1.is_finite())
        .find(|&k| {
            let (l, c, r) = (profile[k - 1].1, profile[k].1, profile[k + 1].1);
            c > l && c > r
        })
        .map(|k| profile[k])
}

fn lifetime_signatures() -> Outcome {
    let t = Instant::now();
    let opts = CensusOptions::default();
    let states = match level_states(3, -3.0, &opts) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("small-field states: {e}")),
    };
    let mut trace = TraceOptions::new(0.005, 4000);
    trace.min_im = -2.0;
    let mut parts = Vec::new();
    let mut impurity_drop = false;
    let mut stabilized = Vec::new();
    for (k, z) in states.iter().enumerate() {
        let label = (b'a' + k as u8) as char;
        let b = match trace_fixed_ebind(-3.0, opts.reference_field, 1.0, *z, &trace) {
            Ok(b) => b,
            Err(e) => {
                parts.push(format!("{label}: {e}"));
                continue;
            }
        };
        let prof = lifetime_profile(&b);
        let last = *prof.last().unwrap();
        if k == 0 {
            // after the plateau the lifetime falls by orders of magnitude
            let peak = prof.iter().map(|p| p.1).fold(0.0, f64::max);
            let tail = &prof[prof.len() * 2 / 3..];
            let falling = tail.windows(2).all(|w| w[1].1 <= w[0].1);
            impurity_drop = last.1 < 1e-2 * peak && falling;
        } else if let Some((f, tau)) = interior_maximum(&prof) {
            stabilized.push(format!("{label} (field {f:.3}, tau {tau:.3e})"));
        }
        parts.push(format!("{label}: Re E {:.4} -> {:.4} up to field {:.3}", z.re, b.points.last().unwrap().e_tilde.re, last.0));
    }
    let four = states.len() == 4 && states.iter().all(|z| (z.re - 7.0).abs() < 1.0);
    outcome(
        four && impurity_drop && !stabilized.is_empty(),
        format!(
            "{} branches near E = 7 [{}]; impurity lifetime drop [{}]; interior lifetime maximum on {} [{}]; {}; {:.0} s",
            states.len(),
            if four { "ok" } else { "FAIL" },
            if impurity_drop { "ok" } else { "FAIL" },
            if stabilized.is_empty() { "no branch".to_string() } else { stabilized.join(", ") },
            if stabilized.is_empty() { "FAIL" } else { "ok" },
            parts.join("; "),
            t.elapsed().as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, bool, fn() -> Outcome); 8] = [
        ("C1", "SI conversion table", true, table1),
        ("C2", "resonance point", true, resonance_point),
        ("C3", "zero-field consistency", true, zero_field_consistency),
        ("C4", "contour independence", true, contour_independence),
        ("C5", "digamma/series identity", true, series_identity),
        ("C6", "resonance census n+1", true, resonance_census),
        ("C7", "branch structure", true, branch_structure),
        ("C8", "lifetime signatures (exploratory)", false, lifetime_signatures),
    ];
    // optional filter: `cargo test --test acceptance -- C3 C5`
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('C')).collect();
    let mut gating_failures = 0;
    for (id, name, gating, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let o = run();
        let verdict = match (o.pass, gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (non-gating)",
        };
        println!("{id} {verdict} {name}: {}", o.detail);
        if !o.pass && gating {
            gating_failures += 1;
        }
    }
    println!("acceptance: {gating_failures} gating criteria failed");
    if gating_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
