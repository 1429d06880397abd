//! Acceptance criteria 1 to 11. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

mod common;

use std::time::Instant;

use common::{crosscap, folded, linear, CROSSCAP_B1, CROSSCAP_B2};
use linecong::bde::{developability_residual, find_folded_singularities, integrate_torsal_curve, torsal_branches, StepParams};
use linecong::contact::{contact_line_self, contact_with_plane_family, contact_with_point_family, ContactType};
use linecong::invariants::{self, FocalRoots, PointKind};
use linecong::linalg::{cross, dot, mat_vec};
use linecong::linespace::{affine_transform_plane, segre_factor, Plane};
use linecong::surfaces::{
    cross_cap_test, local_convexity_on_parabolic_image, middle_focal_tangency, middle_surface_jacobian,
    trace_parabolic_curve, Convexity, CrossCapVerdict, WhichSurface,
};
use linecong::verify::{compare_focal, jacobian_determinant_identity, middle_reality_property, random_congruence};
use linecong::{Congruence, Domain, Poly, Scalar};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = BigRational;

const SEED: u64 = 20240917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

/// Coefficient of `u^i v^j` in an example polynomial.
fn coefficient(table: &[(u32, u32, i64)], i: u32, j: u32) -> i64 {
    table.iter().find(|t| t.0 == i && t.1 == j).map(|t| t.2).unwrap_or(0)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let z = crosscap::<Q>();
    let o = Q::zero();
    let j = z.jet(&o, &o, 3).unwrap();
    let delta = invariants::discriminant(&j);
    let q = invariants::focal_quadratic(&j);
    let double_root = q.discriminant().is_zero() && (-q.q1.clone() / (Q::from_int(2) * q.q2.clone())).is_zero();
    let mid = invariants::middle_point(&j).unwrap();
    let m = middle_surface_jacobian(&z, &o, &o).unwrap();
    let c0 = [m[0][0].clone(), m[1][0].clone(), m[2][0].clone()];
    let c1 = [m[0][1].clone(), m[1][1].clone(), m[2][1].clone()];
    let rank_one = cross(&c0, &c1).iter().all(|x| x.is_zero()) && m.iter().flatten().any(|x| !x.is_zero());
    let report = cross_cap_test(&z, &o, &o).unwrap();

    // Independent substitution: the example is already in the normal form
    // (b1u = b2u = b2v = 0 at the origin), so b^j_{k,i} is the example
    // coefficient of u^(k-i) v^i.
    let normal = coefficient(&CROSSCAP_B1, 1, 0) == 0 && coefficient(&CROSSCAP_B2, 1, 0) == 0 && coefficient(&CROSSCAP_B2, 0, 1) == 0;
    let b = |comp: usize, k: u32, i: u32| {
        let t: &[(u32, u32, i64)] = if comp == 1 { &CROSSCAP_B1 } else { &CROSSCAP_B2 };
        coefficient(t, k - i, i)
    };
    let f1 = 4 * b(1, 1, 1) * b(1, 3, 1) + 4 * b(1, 1, 1) * b(2, 3, 2) - b(1, 2, 1).pow(2) + 4 * b(2, 2, 2).pow(2);
    let f2 = 3 * b(1, 1, 1) * b(1, 3, 0) + 2 * b(1, 1, 1) * b(2, 2, 0) + b(1, 1, 1) * b(2, 3, 1)
        - b(1, 2, 0) * b(1, 2, 1)
        - 2 * b(1, 2, 0) * b(2, 2, 2);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = delta.is_zero()
        && double_root
        && mid.iter().all(|x| x.is_zero())
        && rank_one
        && normal
        && (f1, f2) == (91, -5)
        && report.f1 == Q::from_int(91)
        && report.f2 == Q::from_int(-5)
        && report.verdict == CrossCapVerdict::CrossCap
        && elapsed < 1.0;
    outcome(
        pass,
        format!(
            "delta={delta} F1={} F2={} (substitution {f1}, {f2}) verdict={:?} rank1={rank_one} {elapsed:.3}s",
            report.f1, report.f2, report.verdict
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let z = random_congruence(&mut r, 3);
        let samples: Vec<[f64; 3]> =
            (0..50).map(|_| [r.gen_range(-0.9..0.9), r.gen_range(-0.9..0.9), r.gen_range(-2.0..2.0)]).collect();
        worst = worst.max(jacobian_determinant_identity(&z, &samples).unwrap());
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(worst < 1e-6 && elapsed < 5.0, format!("max residual {worst:.3e} over 1000 samples, {elapsed:.3}s"))
}

fn random_general(r: &mut ChaCha8Rng) -> Congruence<f64> {
    let mut p = || {
        let mut p = Poly::zero();
        for d in 0..=3u32 {
            for i in 0..=d {
                p.add_term(i, d - i, r.gen_range(-1.0..=1.0));
            }
        }
        p
    };
    let (a1, a2, b1, b2) = (p(), p(), p(), p());
    Congruence::general(a1, a2, b1, b2)
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let z = if k % 2 == 0 { random_congruence(&mut r, 3) } else { random_general(&mut r) };
        // at the origin the jet entries are the unit-scale polynomial coefficients
        let j = z.jet(&0.0, &0.0, 1).unwrap();
        let d_bde = invariants::discriminant(&j);
        let d_focal = invariants::focal_quadratic(&j).discriminant();
        worst = worst.max((d_bde - d_focal).abs());
    }
    let mut exact = true;
    for _ in 0..50 {
        let z = random_general(&mut r);
        let zq = Congruence::general(
            to_q(&z, 0),
            to_q(&z, 1),
            to_q(&z, 2),
            to_q(&z, 3),
        );
        let (u, v) = (Q::new(r.gen_range(-8..=8).into(), 8.into()), Q::new(r.gen_range(-8..=8).into(), 8.into()));
        let j = zq.jet(&u, &v, 1).unwrap();
        exact &= invariants::discriminant(&j) == invariants::focal_quadratic(&j).discriminant();
    }
    outcome(worst < 1e-12 && exact, format!("max |delta_bde - delta_focal| {worst:.3e}; exact rational agreement {exact}"))
}

fn to_q(z: &Congruence<f64>, comp: usize) -> Poly<Q> {
    z.polynomials().unwrap()[comp].map(|c| linecong::scalar::rational_from_f64(*c).unwrap())
}

/// A random hyperbolic point with `delta` above a floor.
fn hyperbolic_point(r: &mut ChaCha8Rng, floor: f64) -> (Congruence<f64>, f64, f64) {
    loop {
        let z = random_congruence(r, 3);
        let (u, v) = (r.gen_range(-0.9..0.9), r.gen_range(-0.9..0.9));
        let j = z.jet(&u, &v, 1).unwrap();
        if invariants::discriminant(&j) > floor {
            return (z, u, v);
        }
    }
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    let mut pairing = true;
    for _ in 0..500 {
        let (z, u, v) = hyperbolic_point(&mut r, 1e-6);
        let j = z.jet(&u, &v, 1).unwrap();
        let fd = invariants::focal_data(&j).unwrap();
        let (ja, jb) = (j.ja(), j.jb());
        let a = j.a();
        for e in &fd.elements {
            let t = e.param.finite().unwrap();
            let w = e.direction.unwrap();
            // derivative of (u, v, t) -> b + t a applied to (w, 0)
            let col = |k: usize| [jb[0][k] + t * ja[0][k], jb[1][k] + t * ja[1][k], 0.0];
            let (cu, cv) = (col(0), col(1));
            let img = [cu[0] * w[0] + cv[0] * w[1], cu[1] * w[0] + cv[1] * w[1], 0.0];
            let scale = 1.0 + cu.iter().chain(cv.iter()).chain(a.iter()).map(|x| x.abs()).fold(0.0, f64::max);
            worst = worst.max(dot(&img, &img).sqrt() / scale);
            let tv = [
                ja[0][0] * w[0] + ja[0][1] * w[1],
                ja[1][0] * w[0] + ja[1][1] * w[1],
                jb[0][0] * w[0] + jb[0][1] * w[1],
                jb[1][0] * w[0] + jb[1][1] * w[1],
            ];
            let s = segre_factor(&tv).unwrap();
            let ts = s.param(0.0).unwrap();
            pairing &= (ts - t).abs() <= 1e-9 * (1.0 + t.abs());
        }
    }
    outcome(worst < 1e-9 && pairing, format!("max kernel residual {worst:.3e}; segre pairing agrees {pairing}"))
}

fn criterion_5() -> Outcome {
    let rep = middle_reality_property(1000, 3, SEED);
    outcome(
        rep.pass && rep.max_imaginary < 1e-12,
        format!("{} elliptic points, max |Im| {:.3e}", rep.elliptic_points, rep.max_imaginary),
    )
}

/// A random congruence whose origin is a parabolic point (delta = 0 exactly).
fn parabolic_at_origin(r: &mut ChaCha8Rng) -> Congruence<f64> {
    let p = r.gen_range(-1.0..=1.0);
    let q = r.gen_range(-1.0..=1.0);
    let mut high = || {
        let mut poly = Poly::zero();
        for d in 2..=3u32 {
            for i in 0..=d {
                poly.add_term(i, d - i, r.gen_range(-1.0..=1.0));
            }
        }
        poly
    };
    let (mut b1, mut b2) = (high(), high());
    b1.add_term(1, 0, p);
    b2.add_term(1, 0, q);
    b2.add_term(0, 1, p);
    Congruence::bchart(b1, b2)
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let mut counts = [0usize; 3];
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for k in 0..500 {
        let (z, u, v) = if k % 5 == 4 {
            (parabolic_at_origin(&mut r), 0.0, 0.0)
        } else {
            (random_congruence(&mut r, 3), r.gen_range(-0.9..0.9), r.gen_range(-0.9..0.9))
        };
        let kind = invariants::classify_point(&z.jet(&u, &v, 1).unwrap()).kind;
        counts[kind as usize] += 1;
        match compare_focal(&z, u, v) {
            Ok(Some(g)) => worst = worst.max(g),
            _ => mismatches += 1,
        }
    }
    let spans = counts.iter().all(|&c| c > 0);
    outcome(
        worst < 1e-8 && mismatches == 0 && spans,
        format!("max gap {worst:.3e}; class mismatches {mismatches}; class counts {counts:?}"),
    )
}

fn criterion_7() -> Outcome {
    let z = folded();
    let curves = trace_parabolic_curve(&z, Domain::default(), 41, 41).unwrap();
    let max_res = curves.iter().flat_map(|c| c.residuals.iter()).cloned().fold(0.0, f64::max);
    let folded_pts: Vec<_> = curves.iter().flat_map(|c| find_folded_singularities(&z, c).unwrap()).collect();
    let near = folded_pts.iter().map(|p| p.u.hypot(p.v)).fold(f64::INFINITY, f64::min);

    let f = crosscap::<f64>();
    let fc = trace_parabolic_curve(&f, Domain::new(-0.5, 0.5, -0.5, 0.5), 41, 41).unwrap();
    let on_curve = fc.iter().map(|c| c.distance_to([0.0, 0.0])).fold(f64::INFINITY, f64::min);
    let f_res = fc.iter().flat_map(|c| c.residuals.iter()).cloned().fold(0.0, f64::max);
    let f_folded: Vec<_> = fc.iter().flat_map(|c| find_folded_singularities(&f, c).unwrap()).collect();
    let origin_folded = f_folded.iter().any(|p| p.u.hypot(p.v) < 1e-3);
    outcome(
        max_res < 1e-8 && f_res < 1e-8 && near < 1e-6 && on_curve < 1e-6 && !origin_folded,
        format!(
            "max |delta| {max_res:.2e}/{f_res:.2e}; nearest folded point {near:.2e}; crosscap origin distance {on_curve:.2e}, folded there {origin_folded}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let z = crosscap::<f64>();
    let curves = trace_parabolic_curve(&z, Domain::new(-0.5, 0.5, -0.5, 0.5), 41, 41).unwrap();
    let pts: Vec<[f64; 2]> =
        curves.iter().flat_map(|c| c.points.iter().cloned()).filter(|p| p[0].hypot(p[1]) > 0.05).collect();
    if pts.len() < 50 {
        return outcome(false, format!("only {} parabolic samples", pts.len()));
    }
    let step = pts.len() as f64 / 50.0;
    let mut worst: f64 = 0.0;
    let (mut focal_h, mut middle_h) = (0, 0);
    let mut errors = 0;
    for k in 0..50 {
        let p = pts[(k as f64 * step) as usize];
        match middle_focal_tangency(&z, p[0], p[1]) {
            Ok(a) => worst = worst.max(a),
            Err(_) => errors += 1,
        }
        let f = local_convexity_on_parabolic_image(&z, p[0], p[1], WhichSurface::Focal);
        let m = local_convexity_on_parabolic_image(&z, p[0], p[1], WhichSurface::Middle);
        if matches!(f, Ok(f) if f.kind == Convexity::HyperbolicPoint) {
            focal_h += 1;
        }
        if matches!(m, Ok(m) if m.kind == Convexity::HyperbolicPoint) {
            middle_h += 1;
        }
    }
    outcome(
        worst < 1e-4 && errors == 0 && focal_h == 50 && middle_h == 50,
        format!("max angle {worst:.3e} rad; hyperbolic on focal {focal_h}/50, on middle {middle_h}/50; errors {errors}"),
    )
}

fn criterion_9() -> Outcome {
    let params = StepParams { max_step: 5e-4, initial_step: 5e-4, ..StepParams::default() };
    let mut r = rng(9);
    let mut worst_det: f64 = 0.0;
    let mut worst_line: f64 = 0.0;
    let lin = linear();
    for k in 0..10 {
        let seed = (r.gen_range(-0.8..0.8), r.gen_range(-0.8..0.8));
        let c = integrate_torsal_curve(&lin, seed, (k % 2) as u8, &params).unwrap();
        let d = torsal_branches(&lin.jet(&seed.0, &seed.1, 1).unwrap())[k % 2].direction;
        let slope = d[1] / d[0];
        let icpt = seed.1 - slope * seed.0;
        for w in c.points.windows(2) {
            worst_det = worst_det.max(developability_residual(&lin, w[0], w[1]).unwrap().abs());
        }
        for p in &c.points {
            worst_line = worst_line.max((p[1] - slope * p[0] - icpt).abs());
        }
    }
    let f = crosscap::<f64>();
    let mut curves = 0;
    while curves < 10 {
        let seed = (r.gen_range(-0.8..0.8), r.gen_range(-0.8..0.8));
        if invariants::discriminant(&f.jet(&seed.0, &seed.1, 1).unwrap()) < 1e-3 {
            continue;
        }
        let c = integrate_torsal_curve(&f, seed, (curves % 2) as u8, &params).unwrap();
        for w in c.points.windows(2) {
            worst_det = worst_det.max(developability_residual(&f, w[0], w[1]).unwrap().abs());
        }
        curves += 1;
    }
    outcome(
        worst_det < 1e-6 && worst_line < 1e-8,
        format!("max |det(a, a', b')| {worst_det:.3e}; max distance to v = +-u + c {worst_line:.3e}"),
    )
}

fn criterion_10() -> Outcome {
    let mut r = rng(10);
    let mut agree = 0;
    for _ in 0..200 {
        let (z, u, v) = hyperbolic_point(&mut r, 1e-3);
        let j = z.jet(&u, &v, 1).unwrap();
        let fd = invariants::focal_data(&j).unwrap();
        let (a, b) = z.direction_base(&u, &v).unwrap();
        let FocalRoots::Distinct(t1, t2) = fd.roots else { continue };
        let mut ok = true;
        for e in &fd.elements {
            let p = e.point.unwrap();
            ok &= contact_with_point_family(&z, u, v, p).unwrap().kind.is_singular();
            ok &= contact_with_plane_family(&z, u, v, e.plane.as_ref().unwrap()).unwrap().kind.is_singular();
        }
        for t in [0.5 * (t1 + t2), t2 + 1.0 + r.gen_range(0.0..1.0)] {
            let p = [b[0] + t * a[0], b[1] + t * a[1], b[2] + t * a[2]];
            ok &= contact_with_point_family(&z, u, v, p).unwrap().kind == ContactType::A0;
        }
        let n = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let c = cross(&a, &n);
        let plane = Plane::new(c, dot(&c, &b)).unwrap();
        let focal_plane = fd.elements.iter().any(|e| e.plane.as_ref().unwrap().approx_eq(&plane, 1e-6));
        ok &= contact_with_plane_family(&z, u, v, &plane).unwrap().kind.is_singular() == focal_plane;
        ok &= contact_line_self(&z, u, v).unwrap().kind == ContactType::A1;
        if ok {
            agree += 1;
        }
    }
    let mut morse_ok = true;
    for _ in 0..20 {
        let z = parabolic_at_origin(&mut r);
        let kind = invariants::classify_point(&z.jet(&0.0, &0.0, 1).unwrap()).kind;
        morse_ok &= kind == PointKind::Parabolic && contact_line_self(&z, 0.0, 0.0).unwrap().kind != ContactType::A1;
    }
    let cc = contact_line_self(&crosscap::<f64>(), 0.0, 0.0).unwrap();
    let fold = contact_line_self(&folded(), 0.0, 0.0).unwrap();
    outcome(
        agree == 200 && morse_ok && cc.kind == ContactType::A2 && fold.kind == ContactType::A3,
        format!(
            "focal agreement {agree}/200; Morse iff non-parabolic {morse_ok}; crosscap origin {:?}; b1=2v+u^2,b2=uv origin {:?} (jet criteria {:?})",
            cc.kind, fold.kind, fold.jet_verdict
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut r = rng(11);
    let bases = [crosscap::<f64>(), random_congruence(&mut r, 3)];
    let mut worst: f64 = 0.0;
    let mut class_ok = true;
    let mut checked = 0;
    for k in 0..50 {
        let z = &bases[k % 2];
        let m: [[f64; 3]; 3] = loop {
            let m = std::array::from_fn(|i| std::array::from_fn(|j| (i == j) as i32 as f64 + 0.4 * r.gen_range(-1.0..1.0)));
            if linecong::linalg::det3(&m).abs() > 0.2 {
                break m;
            }
        };
        let t = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let img = z.affine_image(&m, &t).unwrap();
        let mut n = 0;
        while n < 20 {
            let (u, v) = (r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5));
            let j = z.jet(&u, &v, 1).unwrap();
            let Ok(ji) = img.jet(&u, &v, 1) else { continue };
            let (c0, c1) = (invariants::classify_point(&j), invariants::classify_point(&ji));
            if c0.delta.abs() < 1e-4 || c0.stall || c1.stall {
                continue;
            }
            n += 1;
            checked += 1;
            class_ok &= c0.kind == c1.kind && c0.delta.signum() == c1.delta.signum();
            let gap = |x: &[f64; 3], y: &[f64; 3]| (0..3).map(|i| (x[i] - y[i]).abs()).fold(0.0, f64::max) / (1.0 + y.iter().map(|q| q.abs()).fold(0.0, f64::max));
            let mv = |p: &[f64; 3]| {
                let q = mat_vec(&m, p);
                [q[0] + t[0], q[1] + t[1], q[2] + t[2]]
            };
            let (m0, m1) = (invariants::middle_point(&j).unwrap(), invariants::middle_point(&ji).unwrap());
            worst = worst.max(gap(&mv(&m0), &m1));
            let b0 = torsal_branches(&j);
            let b1 = torsal_branches(&ji);
            class_ok &= b0.len() == b1.len();
            for (x, y) in b0.iter().zip(&b1) {
                worst = worst.max((x.direction[0] - y.direction[0]).abs().max((x.direction[1] - y.direction[1]).abs()));
            }
            if c0.kind == PointKind::Hyperbolic {
                let f0 = invariants::focal_data(&j).unwrap();
                let f1 = invariants::focal_data(&ji).unwrap();
                for e in &f0.elements {
                    let d = e.direction.unwrap();
                    let Some(e1) = f1.elements.iter().min_by(|x, y| {
                        let dx = (x.direction.unwrap()[0] - d[0]).abs() + (x.direction.unwrap()[1] - d[1]).abs();
                        let dy = (y.direction.unwrap()[0] - d[0]).abs() + (y.direction.unwrap()[1] - d[1]).abs();
                        dx.total_cmp(&dy)
                    }) else { continue };
                    worst = worst.max(gap(&mv(&e.point.unwrap()), &e1.point.unwrap()));
                    let p0 = affine_transform_plane(&m, &t, e.plane.as_ref().unwrap()).unwrap();
                    let p1 = e1.plane.as_ref().unwrap();
                    let pg = (0..3).map(|i| (p0.c[i] - p1.c[i]).abs()).fold((p0.d - p1.d).abs(), f64::max) / (1.0 + p1.d.abs());
                    worst = worst.max(pg);
                }
            }
        }
    }
    outcome(
        class_ok && worst < 1e-8,
        format!("{checked} point/transform pairs; classes preserved {class_ok}; max relative gap {worst:.3e}"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("cross-cap example regression", criterion_1),
        ("determinant identity", criterion_2),
        ("discriminant identity", criterion_3),
        ("kernel and torsal correspondence", criterion_4),
        ("midpoint reality", criterion_5),
        ("quadric oracle equivalence", criterion_6),
        ("parabolic tracing and folded points", criterion_7),
        ("tangency and hyperbolicity", criterion_8),
        ("developability", criterion_9),
        ("contact consistency", criterion_10),
        ("affine equivariance", criterion_11),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {:>2} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
