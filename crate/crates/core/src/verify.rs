//! Independent oracles: finite differences, direct restriction of the line
//! quadric, dense singular values. Each oracle is built from first
//! principles and never calls the module it checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::congruence::{Congruence, Domain, Jet};
use crate::error::{Error, Result};
use crate::invariants::{self, FocalRoots};
use crate::linalg;
use crate::linespace::{segre_factor, Plane};
use crate::poly::Poly;
use crate::series::Series;
use crate::surfaces;

/// Finite-difference step of the jet oracle.
pub const FD_STEP: f64 = 1e-4;

/// Order-2 jet from central differences of the component values, with one
/// Richardson extrapolation.
pub fn fd_jet_oracle(z: &Congruence<f64>, u: f64, v: f64) -> Result<Jet<f64>> {
    let f = |du: f64, dv: f64| z.components_at(&(u + du), &(v + dv));
    let f0 = f(0.0, 0.0)?;
    let mut d1 = [[0.0; 2]; 4];
    let mut d2 = [[0.0; 3]; 4];
    let first = |h: f64, dir: [f64; 2]| -> Result<[f64; 4]> {
        let p = f(h * dir[0], h * dir[1])?;
        let m = f(-h * dir[0], -h * dir[1])?;
        Ok(std::array::from_fn(|c| (p[c] - m[c]) / (2.0 * h)))
    };
    let second = |h: f64, dir: [f64; 2]| -> Result<[f64; 4]> {
        let p = f(h * dir[0], h * dir[1])?;
        let m = f(-h * dir[0], -h * dir[1])?;
        Ok(std::array::from_fn(|c| (p[c] - 2.0 * f0[c] + m[c]) / (h * h)))
    };
    let mixed = |h: f64| -> Result<[f64; 4]> {
        let pp = f(h, h)?;
        let pm = f(h, -h)?;
        let mp = f(-h, h)?;
        let mm = f(-h, -h)?;
        Ok(std::array::from_fn(|c| (pp[c] - pm[c] - mp[c] + mm[c]) / (4.0 * h * h)))
    };
    let rich = |coarse: [f64; 4], fine: [f64; 4]| -> [f64; 4] { std::array::from_fn(|c| (4.0 * fine[c] - coarse[c]) / 3.0) };
    let h = FD_STEP;
    for (k, dir) in [[1.0, 0.0], [0.0, 1.0]].into_iter().enumerate() {
        let d = rich(first(h, dir)?, first(0.5 * h, dir)?);
        let s = rich(second(h, dir)?, second(0.5 * h, dir)?);
        for c in 0..4 {
            d1[c][k] = d[c];
            d2[c][if k == 0 { 0 } else { 2 }] = s[c];
        }
    }
    let m = rich(mixed(h)?, mixed(0.5 * h)?);
    for c in 0..4 {
        d2[c][1] = m[c];
    }
    let comps = std::array::from_fn(|c| {
        Series::from_terms(
            2,
            2,
            &[
                (&[0, 0], f0[c]),
                (&[1, 0], d1[c][0]),
                (&[0, 1], d1[c][1]),
                (&[2, 0], 0.5 * d2[c][0]),
                (&[1, 1], d2[c][1]),
                (&[0, 2], 0.5 * d2[c][2]),
            ],
        )
    });
    Ok(Jet { u, v, order: 2, chart: z.chart(), height: *z.height(), comps })
}

fn det3_f(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Largest relative gap between a finite-difference determinant of the
/// exponential map and the focal quadratic `g(u, v, t)`.
pub fn jacobian_determinant_identity(z: &Congruence<f64>, samples: &[[f64; 3]]) -> Result<f64> {
    let h = 1e-5;
    let e = |u: f64, v: f64, t: f64| -> Result<[f64; 3]> {
        let c = z.components_at(&u, &v)?;
        Ok([c[2] + t * c[0], c[3] + t * c[1], z.height() + t])
    };
    let mut worst: f64 = 0.0;
    for &[u, v, t] in samples {
        let mut m = [[0.0; 3]; 3];
        for k in 0..3 {
            let mut p = [u, v, t];
            let mut q = [u, v, t];
            p[k] += h;
            q[k] -= h;
            let ep = e(p[0], p[1], p[2])?;
            let eq = e(q[0], q[1], q[2])?;
            for r in 0..3 {
                m[r][k] = (ep[r] - eq[r]) / (2.0 * h);
            }
        }
        let fd = det3_f(&m);
        let g = invariants::focal_quadratic(&z.jet(&u, &v, 1)?).eval(&t);
        worst = worst.max((fd - g).abs() / (1.0 + g.abs()));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OracleKind {
    TwoReal,
    Double,
    NoReal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRoot {
    /// Unit `(du, dv)` with nonnegative leading nonzero entry.
    pub direction: [f64; 2],
    /// Focal parameter; `None` at infinity.
    pub t: Option<f64>,
    pub plane: Option<Plane<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleFocal {
    pub kind: OracleKind,
    /// Discriminant of the restricted quadratic in `(lambda : mu)`.
    pub discriminant: f64,
    pub roots: Vec<OracleRoot>,
}

fn unit_direction(d: [f64; 2]) -> [f64; 2] {
    let n = d[0].hypot(d[1]);
    let d = [d[0] / n, d[1] / n];
    let lead = if d[0].abs() > 1e-15 { d[0] } else { d[1] };
    if lead < 0.0 {
        [-d[0], -d[1]]
    } else {
        d
    }
}

/// Intersects the tangent line of the congruence in line space with the
/// quadric of lines meeting `L(u, v)` by restricting the quadric to the
/// span of the two jet columns.
pub fn quadric_intersection_oracle(z: &Congruence<f64>, u: f64, v: f64, rel_band: f64) -> Result<OracleFocal> {
    let j = z.jet(&u, &v, 1)?;
    let col = |k: u8| -> [f64; 4] {
        let (i, jj) = if k == 0 { (1, 0) } else { (0, 1) };
        std::array::from_fn(|c| j.d(c, i, jj))
    };
    let (wu, wv) = (col(0), col(1));
    let q = |p: &[f64; 4], r: &[f64; 4]| 0.5 * (p[0] * r[3] + p[3] * r[0] - p[1] * r[2] - p[2] * r[1]);
    let (quu, quv, qvv) = (q(&wu, &wu), q(&wu, &wv), q(&wv, &wv));
    let disc = 4.0 * (quv * quv - quu * qvv);
    let scale = 1.0 + quu.abs().max(quv.abs()).max(qvv.abs()).powi(2);
    let dirs: Vec<[f64; 2]> = if disc < -rel_band * scale {
        Vec::new()
    } else {
        let s = disc.max(0.0).sqrt();
        let double = disc.abs() <= rel_band * scale;
        // quu l^2 + 2 quv l m + qvv m^2 = 0
        let raw: Vec<[f64; 2]> = if quu.abs() >= qvv.abs() {
            let r = [(-2.0 * quv - s) / (2.0 * quu), (-2.0 * quv + s) / (2.0 * quu)];
            r.iter().map(|&x| [x, 1.0]).collect()
        } else {
            let r = [(-2.0 * quv - s) / (2.0 * qvv), (-2.0 * quv + s) / (2.0 * qvv)];
            r.iter().map(|&x| [1.0, x]).collect()
        };
        if double { vec![raw[0]] } else { raw }
    };
    let kind = match dirs.len() {
        0 => OracleKind::NoReal,
        1 => OracleKind::Double,
        _ => OracleKind::TwoReal,
    };
    let (a, b) = (j.a(), j.b());
    let mut roots = Vec::new();
    for d in dirs {
        let d = unit_direction(d);
        let w: [f64; 4] = std::array::from_fn(|c| d[0] * wu[c] + d[1] * wv[c]);
        let seg = segre_factor(&w).ok();
        let t = seg.as_ref().and_then(|s| s.param(1e-12 * s.point[0].abs().max(s.point[1].abs())));
        let plane = seg.and_then(|s| {
            let c = linalg::cross(&a, &[s.plane[0], s.plane[1], 0.0]);
            Plane::new(c, linalg::dot(&c, &b)).ok()
        });
        roots.push(OracleRoot { direction: d, t, plane });
    }
    Ok(OracleFocal { kind, discriminant: disc, roots })
}

/// Largest disagreement between the oracle and `focal_data` at a point, or
/// `None` when they classify the point differently.
pub fn compare_focal(z: &Congruence<f64>, u: f64, v: f64) -> Result<Option<f64>> {
    let oracle = quadric_intersection_oracle(z, u, v, 1e-10)?;
    let fd = invariants::focal_data(&z.jet(&u, &v, 1)?)?;
    let expected = match fd.roots {
        FocalRoots::Distinct(..) => OracleKind::TwoReal,
        FocalRoots::Double(_) => OracleKind::Double,
        FocalRoots::Conjugate { .. } => OracleKind::NoReal,
        FocalRoots::OneInfinite(_) => OracleKind::TwoReal,
    };
    if expected != oracle.kind {
        return Ok(None);
    }
    let mut worst: f64 = 0.0;
    for root in &oracle.roots {
        let best = fd.elements.iter().filter_map(|e| {
            let d = e.direction?;
            Some(((d[0] - root.direction[0]).hypot(d[1] - root.direction[1]), e))
        });
        let Some((dd, e)) = best.min_by(|x, y| x.0.total_cmp(&y.0)) else {
            return Ok(None);
        };
        worst = worst.max(dd);
        match (root.t, e.param.finite()) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs() / (1.0 + b.abs())),
            (None, None) => {}
            _ => return Ok(None),
        }
        match (&root.plane, &e.plane) {
            (Some(p), Some(q)) => {
                let gap = (0..3).map(|k| (p.c[k] - q.c[k]).abs()).fold((p.d - q.d).abs(), f64::max);
                worst = worst.max(gap / (1.0 + q.d.abs()));
            }
            (None, None) => {}
            _ => return Ok(None),
        }
    }
    Ok(Some(worst))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RealityReport {
    pub elliptic_points: usize,
    pub max_imaginary: f64,
    pub max_middle_gap: f64,
    pub pass: bool,
}

/// A random polynomial congruence in B-chart form with coefficients uniform
/// in `[-1, 1]` and total degree at most `degree`.
pub fn random_congruence(rng: &mut impl Rng, degree: u32) -> Congruence<f64> {
    let mut poly = || {
        let mut p = Poly::zero();
        for d in 0..=degree {
            for i in 0..=d {
                p.add_term(i, d - i, rng.gen_range(-1.0..=1.0));
            }
        }
        p
    };
    let b1 = poly();
    let b2 = poly();
    Congruence::bchart(b1, b2)
}

/// The two focal parameters as complex numbers, from the quadratic formula.
fn complex_roots(q2: f64, q1: f64, q0: f64) -> [Complex64; 2] {
    let disc = Complex64::new(q1 * q1 - 4.0 * q2 * q0, 0.0).sqrt();
    let den = Complex64::new(2.0 * q2, 0.0);
    [(-q1 + disc) / den, (-q1 - disc) / den]
}

/// At random elliptic points of random congruences the focal parameters
/// must be complex conjugate and their midpoint real.
pub fn middle_reality_property(trials: usize, degree: u32, seed: u64) -> RealityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = RealityReport { elliptic_points: 0, max_imaginary: 0.0, max_middle_gap: 0.0, pass: true };
    let mut attempts = 0;
    while report.elliptic_points < trials && attempts < 200 * trials.max(1) {
        attempts += 1;
        let z = random_congruence(&mut rng, degree);
        let (u, v) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        let Ok(j) = z.jet(&u, &v, 1) else { continue };
        let ja = j.ja();
        let jb = j.jb();
        // det(jb + t ja) written out directly
        let q2 = ja[0][0] * ja[1][1] - ja[0][1] * ja[1][0];
        let q0 = jb[0][0] * jb[1][1] - jb[0][1] * jb[1][0];
        let q1 = ja[0][0] * jb[1][1] + jb[0][0] * ja[1][1] - ja[0][1] * jb[1][0] - jb[0][1] * ja[1][0];
        if q1 * q1 - 4.0 * q2 * q0 >= -1e-9 {
            continue;
        }
        report.elliptic_points += 1;
        let r = complex_roots(q2, q1, q0);
        let conj = (r[0] - r[1].conj()).norm() <= 1e-12 * (1.0 + r[0].norm());
        let (a, b) = (j.a(), j.b());
        let mid: [Complex64; 3] =
            std::array::from_fn(|k| (2.0 * Complex64::new(b[k], 0.0) + (r[0] + r[1]) * a[k]) / 2.0);
        let imag = mid.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        report.max_imaginary = report.max_imaginary.max(imag);
        let analytic_conj = matches!(
            invariants::focal_data(&j).map(|f| f.roots),
            Ok(FocalRoots::Conjugate { .. })
        );
        if let Ok(m) = invariants::middle_point(&j) {
            let gap = (0..3).map(|k| (m[k] - mid[k].re).abs()).fold(0.0, f64::max);
            report.max_middle_gap = report.max_middle_gap.max(gap / (1.0 + linalg::norm(&m)));
        }
        if !conj || imag >= 1e-12 || !analytic_conj {
            report.pass = false;
        }
    }
    if report.max_middle_gap > 1e-9 || report.elliptic_points < trials {
        report.pass = false;
    }
    report
}

/// Numerical rank by singular values above `1e-9` of the largest.
pub fn rank_oracle(m: &[Vec<f64>]) -> usize {
    if m.is_empty() || m[0].is_empty() {
        return 0;
    }
    let dm = DMatrix::from_fn(m.len(), m[0].len(), |r, c| m[r][c]);
    let sv = dm.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-9 * smax).count()
}

/// Central-difference Jacobian of the middle-point map.
pub fn fd_middle_jacobian(z: &Congruence<f64>, u: f64, v: f64) -> Result<[[f64; 2]; 3]> {
    let h = 1e-6;
    let mid = |u: f64, v: f64| -> Result<[f64; 3]> {
        let j = fd_jet_oracle(z, u, v)?;
        let ja = j.ja();
        let jb = j.jb();
        let q2 = ja[0][0] * ja[1][1] - ja[0][1] * ja[1][0];
        let q1 = ja[0][0] * jb[1][1] + jb[0][0] * ja[1][1] - ja[0][1] * jb[1][0] - jb[0][1] * ja[1][0];
        if q2 == 0.0 {
            return Err(Error::StallPoint);
        }
        let mu = -q1 / (2.0 * q2);
        let (a, b) = (j.a(), j.b());
        Ok(std::array::from_fn(|k| b[k] + mu * a[k]))
    };
    let pu = mid(u + h, v)?;
    let mu = mid(u - h, v)?;
    let pv = mid(u, v + h)?;
    let mv = mid(u, v - h)?;
    Ok(std::array::from_fn(|k| [(pu[k] - mu[k]) / (2.0 * h), (pv[k] - mv[k]) / (2.0 * h)]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn sample_window(z: &Congruence<f64>) -> Domain {
    let d = z.domain();
    let clamp = |x: f64, lo: f64| if x.is_finite() { x } else { lo };
    let (umin, umax) = (clamp(d.umin, -1.0), clamp(d.umax, 1.0));
    let (vmin, vmax) = (clamp(d.vmin, -1.0), clamp(d.vmax, 1.0));
    let mu = 1e-3 * (umax - umin) + 1e-3;
    let mv = 1e-3 * (vmax - vmin) + 1e-3;
    Domain::new(umin + mu, umax - mu, vmin + mv, vmax - mv)
}

/// Runs every oracle against a congruence at random interior points.
pub fn run_suite(z: &Congruence<f64>, samples: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = sample_window(z);
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|_| (rng.gen_range(w.umin..=w.umax), rng.gen_range(w.vmin..=w.vmax)))
        .collect();
    let mut checks = Vec::new();
    let mut push = |name: &str, n: usize, r: f64, tol: f64| {
        checks.push(CheckResult { name: name.into(), samples: n, max_residual: r, tolerance: tol, pass: r < tol });
    };

    let mut jet_gap: f64 = 0.0;
    for &(u, v) in &pts {
        let fd = fd_jet_oracle(z, u, v)?;
        let ex = z.jet(&u, &v, 2)?;
        for c in 0..4 {
            for (i, j) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                let e = ex.d(c, i, j);
                jet_gap = jet_gap.max((fd.d(c, i, j) - e).abs() / (1.0 + e.abs()));
            }
        }
    }
    push("fd_jet", pts.len(), jet_gap, 1e-6);

    let tri: Vec<[f64; 3]> = pts.iter().map(|&(u, v)| [u, v, rng.gen_range(-2.0..=2.0)]).collect();
    push("determinant_identity", tri.len(), jacobian_determinant_identity(z, &tri)?, 1e-6);

    let mut focal_gap: f64 = 0.0;
    let mut compared = 0;
    for &(u, v) in &pts {
        let delta = invariants::discriminant(&z.jet(&u, &v, 1)?);
        match compare_focal(z, u, v) {
            Ok(Some(g)) => {
                focal_gap = focal_gap.max(g);
                compared += 1;
            }
            Ok(None) if delta.abs() < 1e-6 => {}
            Ok(None) => focal_gap = f64::INFINITY,
            Err(Error::DegenerateQuadratic | Error::StallPoint) => {}
            Err(e) => return Err(e),
        }
    }
    push("quadric_intersection", compared, focal_gap, 1e-8);

    let mut mid_gap: f64 = 0.0;
    let mut mid_n = 0;
    for &(u, v) in &pts {
        let (Ok(an), Ok(fd)) = (surfaces::middle_surface_jacobian(z, &u, &v), fd_middle_jacobian(z, u, v)) else {
            continue;
        };
        mid_n += 1;
        let scale = 1.0 + an.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
        let gap = (0..3).flat_map(|r| (0..2).map(move |c| (r, c))).map(|(r, c)| (an[r][c] - fd[r][c]).abs()).fold(0.0, f64::max);
        mid_gap = mid_gap.max(gap / scale);
    }
    push("middle_jacobian", mid_n, mid_gap, 1e-5);

    let reality = middle_reality_property(samples.min(1000), 3, seed);
    push("middle_reality", reality.elliptic_points, if reality.pass { reality.max_imaginary } else { f64::INFINITY }, 1e-12);

    Ok(SuiteReport { seed, checks })
}
