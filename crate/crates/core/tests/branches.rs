use num_complex::Complex64;
use zrp_core::denominator::{d_field, QuadOptions};
use zrp_core::rootfind::{solve_fixed_im, SolveOptions};
use zrp_core::trace::{
    max_field, trace_fixed_im, trace_loop, Branch, BranchPoint, Termination, TraceOptions,
};

fn start() -> BranchPoint {
    let eb = -2.286_045_972_645_1;
    let r = solve_fixed_im(-1e-4, eb, 3.07, 0.26, &SolveOptions::default(), &QuadOptions::default()).unwrap();
    BranchPoint {
        e_tilde: Complex64::new(r.re_e, -1e-4),
        eb_tilde: eb,
        f_tilde: r.f_tilde,
        residual: r.residual,
        arclength: 0.0,
    }
}

fn coords(p: &BranchPoint) -> [f64; 3] {
    [p.eb_tilde, p.e_tilde.re, p.f_tilde]
}

fn distance_to_polyline(p: [f64; 3], line: &[BranchPoint]) -> f64 {
    line.windows(2)
        .map(|w| {
            let (a, b) = (coords(&w[0]), coords(&w[1]));
            let ab: Vec<f64> = (0..3).map(|i| b[i] - a[i]).collect();
            let ap: Vec<f64> = (0..3).map(|i| p[i] - a[i]).collect();
            let len2: f64 = ab.iter().map(|x| x * x).sum();
            let t = (ap.iter().zip(&ab).map(|(x, y)| x * y).sum::<f64>() / len2).clamp(0.0, 1.0);
            (0..3).map(|i| (ap[i] - t * ab[i]).powi(2)).sum::<f64>().sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

fn arclength_span(b: &Branch) -> f64 {
    b.points.last().unwrap().arclength
}

#[test]
fn branch_points_verify_from_scratch() {
    let b = trace_fixed_im(-1e-4, start(), &TraceOptions::new(0.01, 40)).unwrap();
    assert_eq!(b.termination, Termination::MaxSteps);
    let q = QuadOptions::default();
    for p in &b.points {
        let d = d_field(p.e_tilde, p.eb_tilde, p.f_tilde, &q).unwrap();
        assert!(d.value.norm() < 1e-10, "{p:?}: {}", d.value.norm());
        assert!(p.f_tilde > 0.0);
    }
}

/// Curvature of the circle through three points.
fn curvature(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let d = |p: [f64; 3], q: [f64; 3]| (0..3).map(|i| (p[i] - q[i]).powi(2)).sum::<f64>().sqrt();
    let (ab, bc, ca) = (d(a, b), d(b, c), d(c, a));
    let u: Vec<f64> = (0..3).map(|i| b[i] - a[i]).collect();
    let v: Vec<f64> = (0..3).map(|i| c[i] - a[i]).collect();
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let area2 = cross.iter().map(|x| x * x).sum::<f64>().sqrt();
    2.0 * area2 / (ab * bc * ca)
}

#[test]
fn halving_the_step_stays_on_the_branch() {
    let coarse = trace_fixed_im(-1e-4, start(), &TraceOptions::new(0.01, 30)).unwrap();
    let fine = trace_fixed_im(-1e-4, start(), &TraceOptions::new(0.005, 200)).unwrap();
    // A chord of length L on a curve of curvature κ sits up to κL²/8 off
    // the curve; the step grows to 8·step0, so that dominates 1e-5.
    let pts: Vec<[f64; 3]> = coarse.points.iter().map(coords).collect();
    let kappa = pts
        .windows(3)
        .map(|w| curvature(w[0], w[1], w[2]))
        .fold(0.0, f64::max);
    let chord = coarse
        .points
        .windows(2)
        .map(|w| w[1].arclength - w[0].arclength)
        .fold(0.0, f64::max);
    let sagitta = kappa * chord * chord / 8.0;
    let span = arclength_span(&coarse);
    let mut worst: f64 = 0.0;
    for p in fine.points.iter().filter(|p| p.arclength < span) {
        worst = worst.max(distance_to_polyline(coords(p), &coarse.points));
    }
    assert!(worst < 1e-5 + 1.5 * sagitta, "{worst:e} vs sagitta {sagitta:e}");
    // a hop to another branch would be off by a whole step
    assert!(worst < 0.05 * chord, "{worst:e}");
}

#[test]
fn maximum_field_is_step_independent() {
    // n = 1 branch at Ẽ_B = -3 passes its field maximum near the start
    let eb = -3.0;
    let r = solve_fixed_im(-1e-4, eb, 3.037, 0.204, &SolveOptions::default(), &QuadOptions::default()).unwrap();
    let s = BranchPoint {
        e_tilde: Complex64::new(r.re_e, -1e-4),
        eb_tilde: eb,
        f_tilde: r.f_tilde,
        residual: r.residual,
        arclength: 0.0,
    };
    let a = trace_loop(-1e-4, s, &TraceOptions::new(0.01, 4000)).unwrap();
    let b = trace_loop(-1e-4, s, &TraceOptions::new(0.005, 8000)).unwrap();
    let (ma, mb) = (max_field(&a).unwrap(), max_field(&b).unwrap());
    assert!(!ma.at_boundary && !mb.at_boundary);
    assert!((ma.f_max - mb.f_max).abs() < 1e-4, "{} vs {}", ma.f_max, mb.f_max);
}
