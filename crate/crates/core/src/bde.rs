//! The torsal binary differential equation `A du^2 + B du dv + C dv^2 = 0`:
//! its direction branches, integral curves, developable ruled surfaces and
//! folded singularities.

use serde::Serialize;

use crate::congruence::{Congruence, Jet};
use crate::error::{Error, Result};
use crate::invariants::{self, bde_coefficients, normalize_direction, Bde};
use crate::scalar::Scalar;
use crate::series::Series;
use crate::surfaces::{Mesh, PlanarCurve};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DirectionBranch {
    /// Unit `(du, dv)` with nonnegative leading nonzero entry.
    pub direction: [f64; 2],
    pub branch: u8,
    /// False at a parabolic point, where both branches coincide.
    pub simple: bool,
}

/// `A du^2 + B du dv + C dv^2` on a direction.
pub fn bde_residual(b: &Bde<f64>, d: [f64; 2]) -> f64 {
    b.a * d[0] * d[0] + b.b * d[0] * d[1] + b.c * d[1] * d[1]
}

/// Real roots of `p x^2 + q x + r` in ascending order, `p != 0`.
fn quadratic_roots(p: f64, q: f64, r: f64, disc: f64) -> [f64; 2] {
    let s = disc.max(0.0).sqrt();
    let k = -0.5 * (q + if q >= 0.0 { s } else { -s });
    let (x1, x2) = if k == 0.0 { (0.0, 0.0) } else { (k / p, r / k) };
    if x1 <= x2 {
        [x1, x2]
    } else {
        [x2, x1]
    }
}

fn branches_of(b: &Bde<f64>) -> Vec<DirectionBranch> {
    let delta = b.b * b.b - 4.0 * b.a * b.c;
    let band = invariants::parabolic_band(b);
    if delta < -band || (b.a == 0.0 && b.b == 0.0 && b.c == 0.0) {
        return Vec::new();
    }
    let solve_du = b.a.abs() >= b.c.abs();
    if delta.abs() <= band {
        let d = if solve_du { [-b.b, 2.0 * b.a] } else { [2.0 * b.c, -b.b] };
        return normalize_direction(d)
            .map(|direction| vec![DirectionBranch { direction, branch: 0, simple: false }])
            .unwrap_or_default();
    }
    let dirs: Vec<[f64; 2]> = if solve_du {
        quadratic_roots(b.a, b.b, b.c, delta).iter().map(|&r| [r, 1.0]).collect()
    } else {
        quadratic_roots(b.c, b.b, b.a, delta).iter().map(|&s| [1.0, s]).collect()
    };
    dirs.into_iter()
        .filter_map(normalize_direction)
        .enumerate()
        .map(|(k, direction)| DirectionBranch { direction, branch: k as u8, simple: true })
        .collect()
}

/// Real torsal directions at a jet point; empty at elliptic points.
pub fn torsal_branches<T: Scalar>(j: &Jet<T>) -> Vec<DirectionBranch> {
    let b = bde_coefficients(j);
    branches_of(&Bde { a: b.a.to_f64(), b: b.b.to_f64(), c: b.c.to_f64() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    DomainBoundary,
    ParabolicCurve,
    StepFailure,
    /// The arc-length budget in [`StepParams`] ran out.
    LengthLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorsalCurve {
    pub points: Vec<[f64; 2]>,
    pub branch: u8,
    pub termination: Termination,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepParams {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Local error bound per step, from step doubling.
    pub tolerance: f64,
    pub max_length: f64,
    /// Stop once `|delta|` drops below this.
    pub parabolic_stop: f64,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            initial_step: 1e-3,
            min_step: 1e-10,
            max_step: 1e-2,
            tolerance: 1e-10,
            max_length: 10.0,
            parabolic_stop: 1e-9,
        }
    }
}

enum FieldError {
    Elliptic,
    Failed,
}

struct Field<'a> {
    z: &'a Congruence<f64>,
}

impl Field<'_> {
    fn bde(&self, p: [f64; 2]) -> Option<Bde<f64>> {
        let j = self.z.jet(&p[0], &p[1], 1).ok()?;
        Some(bde_coefficients(&j))
    }

    fn delta(&self, p: [f64; 2]) -> Option<f64> {
        self.bde(p).map(|b| b.b * b.b - 4.0 * b.a * b.c)
    }

    /// The branch closest to `prev`, oriented along it.
    fn eval(&self, p: [f64; 2], prev: [f64; 2]) -> std::result::Result<[f64; 2], FieldError> {
        let b = self.bde(p).ok_or(FieldError::Failed)?;
        let brs = branches_of(&b);
        let best = brs
            .iter()
            .map(|br| br.direction)
            .max_by(|x, y| {
                let dx = (x[0] * prev[0] + x[1] * prev[1]).abs();
                let dy = (y[0] * prev[0] + y[1] * prev[1]).abs();
                dx.total_cmp(&dy)
            })
            .ok_or(FieldError::Elliptic)?;
        Ok(if best[0] * prev[0] + best[1] * prev[1] < 0.0 { [-best[0], -best[1]] } else { best })
    }

    fn rk4(&self, x: [f64; 2], d: [f64; 2], h: f64) -> std::result::Result<([f64; 2], [f64; 2]), FieldError> {
        let at = |k: [f64; 2], s: f64| [x[0] + s * k[0], x[1] + s * k[1]];
        let k1 = self.eval(x, d)?;
        let k2 = self.eval(at(k1, 0.5 * h), k1)?;
        let k3 = self.eval(at(k2, 0.5 * h), k2)?;
        let k4 = self.eval(at(k3, h), k3)?;
        let step = [
            (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) / 6.0,
            (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) / 6.0,
        ];
        Ok((at(step, h), k4))
    }
}

/// Largest `s >= 0` with `x + s d` inside the domain.
fn distance_to_boundary(z: &Congruence<f64>, x: [f64; 2], d: [f64; 2]) -> f64 {
    let dom = z.domain();
    let mut s = f64::INFINITY;
    for (k, (lo, hi)) in [(dom.umin, dom.umax), (dom.vmin, dom.vmax)].into_iter().enumerate() {
        if d[k] > 0.0 {
            s = s.min((hi - x[k]) / d[k]);
        } else if d[k] < 0.0 {
            s = s.min((lo - x[k]) / d[k]);
        }
    }
    s.max(0.0)
}

/// Integrates one torsal branch from a seed with adaptive RK4, following
/// the branch by continuity.
pub fn integrate_torsal_curve(z: &Congruence<f64>, seed: (f64, f64), branch: u8, params: &StepParams) -> Result<TorsalCurve> {
    let field = Field { z };
    let x0 = [seed.0, seed.1];
    if !z.domain().contains(x0[0], x0[1]) {
        return Err(Error::OutOfDomain { u: seed.0, v: seed.1 });
    }
    let j = z.jet(&x0[0], &x0[1], 1)?;
    let brs = torsal_branches(&j);
    if brs.is_empty() {
        return Err(Error::EllipticSeed);
    }
    let br = brs.iter().find(|b| b.branch == branch).unwrap_or(&brs[0]);
    let mut d = br.direction;
    let mut x = x0;
    let mut points = vec![x0];
    let mut h = params.initial_step.min(params.max_step);
    let mut length = 0.0;
    let termination = loop {
        if length >= params.max_length {
            break Termination::LengthLimit;
        }
        let to_boundary = distance_to_boundary(z, x, d);
        if to_boundary <= 1e-14 {
            break Termination::DomainBoundary;
        }
        let hits_boundary = h >= to_boundary;
        let h_try = h.min(to_boundary).min(params.max_length - length);
        let full = field.rk4(x, d, h_try);
        let halves = full.as_ref().ok().and_then(|_| {
            let (m, dm) = field.rk4(x, d, 0.5 * h_try).ok()?;
            field.rk4(m, dm, 0.5 * h_try).ok()
        });
        match (full, halves) {
            (Ok((x1, _)), Some((x2, d2))) => {
                let err = (x1[0] - x2[0]).hypot(x1[1] - x2[1]);
                if err > params.tolerance && h_try > params.min_step {
                    h = 0.5 * h_try;
                    continue;
                }
                let mut xn = x2;
                let dom = z.domain();
                xn[0] = xn[0].clamp(dom.umin, dom.umax);
                xn[1] = xn[1].clamp(dom.vmin, dom.vmax);
                let delta = field.delta(xn).ok_or(Error::StepFailure { u: xn[0], v: xn[1] })?;
                if delta < 0.0 {
                    points.push(refine_parabolic(&field, x, xn));
                    break Termination::ParabolicCurve;
                }
                length += (xn[0] - x[0]).hypot(xn[1] - x[1]);
                points.push(xn);
                x = xn;
                d = d2;
                if delta.abs() < params.parabolic_stop {
                    break Termination::ParabolicCurve;
                }
                if hits_boundary && h_try == to_boundary {
                    break Termination::DomainBoundary;
                }
                if err < params.tolerance / 32.0 {
                    h = (2.0 * h_try).min(params.max_step);
                }
            }
            _ => {
                if h_try <= params.min_step {
                    let near = field.delta(x).map(|dl| dl.abs() < 1e-6).unwrap_or(false);
                    break if near { Termination::ParabolicCurve } else { Termination::StepFailure };
                }
                h = 0.5 * h_try;
            }
        }
    };
    if points.len() == 1 && termination == Termination::StepFailure {
        return Err(Error::StepFailure { u: x0[0], v: x0[1] });
    }
    Ok(TorsalCurve { points, branch: br.branch, termination })
}

/// Bisection for `delta = 0` on the chord from a non-elliptic to an
/// elliptic point.
fn refine_parabolic(field: &Field, good: [f64; 2], bad: [f64; 2]) -> [f64; 2] {
    let (mut lo, mut hi) = (0.0, 1.0);
    let at = |s: f64| [good[0] + s * (bad[0] - good[0]), good[1] + s * (bad[1] - good[1])];
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match field.delta(at(mid)) {
            Some(dl) if dl >= 0.0 => lo = mid,
            _ => hi = mid,
        }
    }
    at(lo)
}

/// `det(a, da, db)` along a chord of a curve, evaluated at its midpoint.
pub fn developability_residual<T: Scalar>(z: &Congruence<T>, p: [f64; 2], q: [f64; 2]) -> Result<f64> {
    let m = [T::from_f64(0.5 * (p[0] + q[0])), T::from_f64(0.5 * (p[1] + q[1]))];
    let d = [q[0] - p[0], q[1] - p[1]];
    let j = z.jet(&m[0], &m[1], 1)?.to_f64();
    let a = j.a();
    let b = j.b();
    let ja = j.ja();
    let jb = j.jb();
    let da = [ja[0][0] * d[0] + ja[0][1] * d[1], ja[1][0] * d[0] + ja[1][1] * d[1], 0.0];
    let db = [jb[0][0] * d[0] + jb[0][1] * d[1], jb[1][0] * d[0] + jb[1][1] * d[1], 0.0];
    let _ = b;
    Ok(crate::linalg::det3(&[a, da, db]))
}

/// The ruled surface `b(gamma(s)) + t a(gamma(s))` over a curve, sampled at
/// `nt` values of `t`.
pub fn build_developable(z: &Congruence<f64>, curve: &TorsalCurve, t_range: (f64, f64), nt: usize) -> Result<Mesh> {
    assert!(nt >= 2);
    let mut mesh = Mesh::default();
    let n = curve.points.len();
    for p in &curve.points {
        let (a, b) = z.direction_base(&p[0], &p[1])?;
        for k in 0..nt {
            let t = t_range.0 + (t_range.1 - t_range.0) * k as f64 / (nt - 1) as f64;
            mesh.vertices.push([b[0] + t * a[0], b[1] + t * a[1], b[2] + t * a[2]]);
            mesh.params.push([p[0], p[1]]);
            mesh.values.push(t);
        }
        let kind = invariants::classify_point(&z.jet(&p[0], &p[1], 1)?).kind;
        mesh.tags.extend(std::iter::repeat_n(kind, nt));
    }
    for i in 0..n.saturating_sub(1) {
        for k in 0..nt - 1 {
            let id = |i: usize, k: usize| i * nt + k;
            mesh.faces.push([id(i, k), id(i + 1, k), id(i + 1, k + 1), id(i, k + 1)]);
        }
    }
    Ok(mesh)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FoldedPoint {
    pub u: f64,
    pub v: f64,
    /// False when the tangency condition holds along a whole stretch of
    /// the curve.
    pub isolated: bool,
}

/// Tangency function `grad(delta) . d` with `d` the double direction, as a
/// series, together with the discriminant series.
fn tangency_series(z: &Congruence<f64>, p: [f64; 2], solve_du: bool) -> Result<(Series<f64>, Series<f64>)> {
    let j = z.jet(&p[0], &p[1], 3)?;
    let si = invariants::series_invariants(&j);
    let [a, b, c] = si.bde;
    let delta = si.delta;
    let d = if solve_du { [-&b, a.scale(&2.0)] } else { [c.scale(&2.0), -&b] };
    let phi = &(&delta.derivative(0) * &d[0]) + &(&delta.derivative(1) * &d[1]);
    Ok((delta, phi))
}

fn normalized_tangency(z: &Congruence<f64>, p: [f64; 2], prev: Option<[f64; 2]>) -> Result<(f64, [f64; 2])> {
    let j = z.jet(&p[0], &p[1], 2)?;
    let si = invariants::series_invariants(&j);
    let [a, b, c] = si.bde.map(|s| s.value());
    let g = si.delta.gradient();
    let raw = if a.abs() >= c.abs() { [-b, 2.0 * a] } else { [2.0 * c, -b] };
    let n = raw[0].hypot(raw[1]);
    let gn = g[0].hypot(g[1]);
    if n == 0.0 || gn == 0.0 {
        return Ok((0.0, prev.unwrap_or([1.0, 0.0])));
    }
    let mut d = [raw[0] / n, raw[1] / n];
    if let Some(q) = prev {
        if d[0] * q[0] + d[1] * q[1] < 0.0 {
            d = [-d[0], -d[1]];
        }
    }
    Ok(((g[0] * d[0] + g[1] * d[1]) / gn, d))
}

/// Newton on `(delta, phi) = 0` from a starting point.
fn refine_folded(z: &Congruence<f64>, start: [f64; 2]) -> Option<[f64; 2]> {
    let mut p = start;
    for _ in 0..30 {
        let j = z.jet(&p[0], &p[1], 1).ok()?;
        let bde = bde_coefficients(&j);
        let (delta, phi) = tangency_series(z, p, bde.a.abs() >= bde.c.abs()).ok()?;
        let f = [delta.value(), phi.value()];
        let gd = delta.gradient();
        let gp = phi.gradient();
        let det = gd[0] * gp[1] - gd[1] * gp[0];
        if det.abs() < 1e-300 {
            return None;
        }
        let step = [(f[0] * gp[1] - f[1] * gd[1]) / det, (gd[0] * f[1] - gp[0] * f[0]) / det];
        p = [p[0] - step[0], p[1] - step[1]];
        if step[0].hypot(step[1]) < 1e-15 * (1.0 + p[0].abs() + p[1].abs()) {
            break;
        }
    }
    p.iter().all(|x| x.is_finite()).then_some(p)
}

/// Points of a traced parabolic curve where the double torsal direction is
/// tangent to the curve.
pub fn find_folded_singularities(z: &Congruence<f64>, curve: &PlanarCurve) -> Result<Vec<FoldedPoint>> {
    const FLAT: f64 = 1e-8;
    let mut vals = Vec::with_capacity(curve.points.len());
    let mut prev = None;
    for p in &curve.points {
        let (phi, d) = normalized_tangency(z, *p, prev)?;
        prev = Some(d);
        vals.push(phi);
    }
    let flat: Vec<bool> = vals.iter().map(|x| x.abs() <= FLAT).collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < vals.len() {
        if flat[k] {
            let start = k;
            while k < vals.len() && flat[k] {
                k += 1;
            }
            let isolated = k - start == 1;
            for p in &curve.points[start..k] {
                let p = if isolated { refine_folded(z, *p).unwrap_or(*p) } else { *p };
                out.push(FoldedPoint { u: p[0], v: p[1], isolated });
            }
            continue;
        }
        if k + 1 < vals.len() && !flat[k + 1] && (vals[k] > 0.0) != (vals[k + 1] > 0.0) {
            let (p0, p1) = (curve.points[k], curve.points[k + 1]);
            let s = vals[k] / (vals[k] - vals[k + 1]);
            let guess = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
            let p = refine_folded(z, guess).unwrap_or(guess);
            out.push(FoldedPoint { u: p[0], v: p[1], isolated: true });
        }
        k += 1;
    }
    Ok(out)
}
