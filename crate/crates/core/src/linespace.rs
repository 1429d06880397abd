//! Lines and planes of affine 3-space, the affine group action, incidence,
//! and the tangent-cone quadric with its two rulings.

use nalgebra::Matrix4;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, argmax_abs, cross, dot, Mat3, Vec3};
use crate::scalar::Scalar;
use crate::tol;

/// An oriented line `b + t a` in canonical chart form.
///
/// `a[axis] = 1` and `b[axis] = 0`, where `axis` is the largest-magnitude
/// direction component. `reversed` records that the oriented direction is
/// `-a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Line<T> {
    pub a: Vec3<T>,
    pub b: Vec3<T>,
    pub axis: usize,
    pub reversed: bool,
}

/// The plane `c . x = d`, scaled so the largest-magnitude entry of `c` is 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Plane<T> {
    pub c: Vec3<T>,
    pub d: T,
}

/// Tangent vector `(da_i, da_j, db_i, db_j)` in a line's chart, where `i < j`
/// are the two non-axis indices.
pub type TangentVector4<T> = [T; 4];

/// A point of the quadric split into its two ruling coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegrePoint<T> {
    /// `(alpha1 : alpha2)`, selecting the plane of the pencil.
    pub plane: [T; 2],
    /// `(beta1 : beta2)`, selecting the point on the line.
    pub point: [T; 2],
}

/// Line-incidence class of two lines.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Incidence<T> {
    Skew,
    Meet(Vec3<T>),
    Parallel,
    Equal,
}

/// The two rulings through a Segre point, with the point and plane they name.
#[derive(Clone, Debug, PartialEq)]
pub struct Generators<T> {
    pub w: [TangentVector4<T>; 2],
    pub v: [TangentVector4<T>; 2],
    /// `None` for the point at infinity.
    pub point: Option<Vec3<T>>,
    pub plane: Plane<T>,
}

pub(crate) fn other_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Canonical representative of the oriented line through `b` with
/// direction `a`.
pub fn canonicalize_line<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Result<Line<T>> {
    if a.iter().all(|x| x.is_zero()) {
        return Err(Error::ZeroDirection);
    }
    let k = argmax_abs(a);
    let ak = a[k].clone();
    let a = linalg::scale3(&(T::one() / ak.clone()), a);
    let s = b[k].clone();
    let mut b = linalg::sub3(b, &linalg::scale3(&s, &a));
    b[k] = T::zero();
    Ok(Line { a, b, axis: k, reversed: ak < T::zero() })
}

impl<T: Scalar> Line<T> {
    pub fn new(a: Vec3<T>, b: Vec3<T>) -> Result<Self> {
        canonicalize_line(&a, &b)
    }

    /// Oriented direction.
    pub fn direction(&self) -> Vec3<T> {
        if self.reversed {
            linalg::scale3(&-T::one(), &self.a)
        } else {
            self.a.clone()
        }
    }

    /// `b + t d` with `d` the oriented direction.
    pub fn point_at(&self, t: &T) -> Vec3<T> {
        linalg::add3(&self.b, &linalg::scale3(t, &self.direction()))
    }

    pub fn to_f64(&self) -> Line<f64> {
        Line {
            a: linalg::to_f64_3(&self.a),
            b: linalg::to_f64_3(&self.b),
            axis: self.axis,
            reversed: self.reversed,
        }
    }
}

impl Line<f64> {
    /// Componentwise comparison of canonical forms.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.axis == other.axis
            && self.reversed == other.reversed
            && (0..3).all(|i| (self.a[i] - other.a[i]).abs() <= tol && (self.b[i] - other.b[i]).abs() <= tol)
    }

    /// Comparison ignoring orientation.
    pub fn approx_eq_unoriented(&self, other: &Self, tol: f64) -> bool {
        self.axis == other.axis
            && (0..3).all(|i| (self.a[i] - other.a[i]).abs() <= tol && (self.b[i] - other.b[i]).abs() <= tol)
    }

    /// Euclidean distance from a point to the line.
    pub fn distance_to(&self, p: &[f64; 3]) -> f64 {
        let d = linalg::sub3(p, &self.b);
        linalg::norm(&cross(&d, &self.a)) / linalg::norm(&self.a)
    }
}

/// Canonical plane through scaling; fails for a zero covector.
pub fn canonicalize_plane<T: Scalar>(c: &Vec3<T>, d: &T) -> Result<Plane<T>> {
    if c.iter().all(|x| x.is_zero()) {
        return Err(Error::ZeroVector);
    }
    let k = argmax_abs(c);
    let s = T::one() / c[k].clone();
    let mut c = linalg::scale3(&s, c);
    c[k] = T::one();
    Ok(Plane { c, d: d.clone() * s })
}

impl<T: Scalar> Plane<T> {
    pub fn new(c: Vec3<T>, d: T) -> Result<Self> {
        canonicalize_plane(&c, &d)
    }

    pub fn eval(&self, x: &Vec3<T>) -> T {
        dot(&self.c, x) - self.d.clone()
    }

    pub fn contains_line(&self, l: &Line<T>, tol: f64) -> bool {
        dot(&self.c, &l.a).near_zero(tol) && self.eval(&l.b).near_zero(tol)
    }

    pub fn to_f64(&self) -> Plane<f64> {
        Plane { c: linalg::to_f64_3(&self.c), d: self.d.to_f64() }
    }
}

impl Plane<f64> {
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (0..3).all(|i| (self.c[i] - other.c[i]).abs() <= tol) && (self.d - other.d).abs() <= tol
    }
}

fn check_affine<T: Scalar>(m: &Mat3<T>) -> Result<()> {
    let det = linalg::det3(m);
    let scale = linalg::mat_norm(m).powi(3);
    if det.near_zero(tol::SINGULAR_MATRIX * scale) {
        return Err(Error::SingularMatrix);
    }
    Ok(())
}

/// `(A, T) * [a, b] = [A a, A b + T]`.
pub fn affine_transform_line<T: Scalar>(m: &Mat3<T>, t: &Vec3<T>, l: &Line<T>) -> Result<Line<T>> {
    check_affine(m)?;
    let a = linalg::mat_vec(m, &l.direction());
    let b = linalg::add3(&linalg::mat_vec(m, &l.b), t);
    canonicalize_line(&a, &b)
}

/// Image of the plane `c.x = d` under `x -> A x + T`.
pub fn affine_transform_plane<T: Scalar>(m: &Mat3<T>, t: &Vec3<T>, p: &Plane<T>) -> Result<Plane<T>> {
    check_affine(m)?;
    let inv = linalg::inverse3(m, 0.0).ok_or(Error::SingularMatrix)?;
    let c = linalg::vec_mat(&p.c, &inv);
    let d = p.d.clone() + dot(&c, t);
    canonicalize_plane(&c, &d)
}

pub fn affine_transform_point<T: Scalar>(m: &Mat3<T>, t: &Vec3<T>, x: &Vec3<T>) -> Vec3<T> {
    linalg::add3(&linalg::mat_vec(m, x), t)
}

/// Relative position of two lines. `tol` bounds the coplanarity determinant
/// and cross products (ignored for exact scalars).
pub fn line_incidence<T: Scalar>(l1: &Line<T>, l2: &Line<T>, tol: f64) -> Incidence<T> {
    let a1 = &l1.a;
    let a2 = &l2.a;
    let d = linalg::sub3(&l2.b, &l1.b);
    let n = cross(a1, a2);
    let scale = 1.0 + linalg::norm_t(&d);
    if n.iter().all(|x| x.near_zero(tol)) {
        let off = cross(&d, a1);
        return if off.iter().all(|x| x.near_zero(tol * scale)) {
            Incidence::Equal
        } else {
            Incidence::Parallel
        };
    }
    if !dot(&d, &n).near_zero(tol * scale) {
        return Incidence::Skew;
    }
    // b1 + s a1 = b2 + r a2  =>  s = ((b2 - b1) x a2) . n / |n|^2
    let s = dot(&cross(&d, a2), &n) / dot(&n, &n);
    Incidence::Meet(linalg::add3(&l1.b, &linalg::scale3(&s, a1)))
}

/// `w1 w4 - w2 w3`: the tangent cone of the lines meeting a given line.
pub fn quadric_evaluate<T: Scalar>(w: &TangentVector4<T>) -> T {
    w[0].clone() * w[3].clone() - w[1].clone() * w[2].clone()
}

/// Symmetric bilinear form of [`quadric_evaluate`].
pub fn quadric_polar<T: Scalar>(p: &TangentVector4<T>, q: &TangentVector4<T>) -> T {
    let half = T::one() / T::from_int(2);
    half * (p[0].clone() * q[3].clone() + p[3].clone() * q[0].clone()
        - p[1].clone() * q[2].clone()
        - p[2].clone() * q[1].clone())
}

/// Gradient of the quadric at `w`.
pub fn quadric_gradient<T: Scalar>(w: &TangentVector4<T>) -> TangentVector4<T> {
    [w[3].clone(), -w[2].clone(), -w[1].clone(), w[0].clone()]
}

fn projective_scale<T: Scalar>(p: [T; 2]) -> [T; 2] {
    let k = argmax_abs(&p);
    let s = p[k].clone();
    [p[0].clone() / s.clone(), p[1].clone() / s]
}

/// Splits an on-quadric vector as `(a1 b1, a2 b1, a1 b2, a2 b2)`.
pub fn segre_factor<T: Scalar>(w: &TangentVector4<T>) -> Result<SegrePoint<T>> {
    if w.iter().all(|x| x.is_zero()) {
        return Err(Error::ZeroVector);
    }
    let n2 = w.iter().map(|x| x.to_f64().powi(2)).sum::<f64>();
    let q = quadric_evaluate(w);
    if !q.near_zero(tol::ON_QUADRIC * n2) {
        return Err(Error::NotOnQuadric(q.to_f64().abs()));
    }
    // M = [[w1, w3], [w2, w4]] = alpha beta^T
    let m = [[w[0].clone(), w[2].clone()], [w[1].clone(), w[3].clone()]];
    let flat = [m[0][0].clone(), m[0][1].clone(), m[1][0].clone(), m[1][1].clone()];
    let k = argmax_abs(&flat);
    let (i, j) = (k / 2, k % 2);
    let alpha = [m[0][j].clone(), m[1][j].clone()];
    let beta = [m[i][0].clone(), m[i][1].clone()];
    Ok(SegrePoint { plane: projective_scale(alpha), point: projective_scale(beta) })
}

impl<T: Scalar> SegrePoint<T> {
    /// Line parameter `-beta2 / beta1`; `None` at infinity.
    pub fn param(&self, tol: f64) -> Option<T> {
        let [b1, b2] = &self.point;
        (!b1.near_zero(tol)).then(|| -b2.clone() / b1.clone())
    }

    /// The Segre product, recovering the tangent vector up to scale.
    pub fn product(&self) -> TangentVector4<T> {
        let [a1, a2] = &self.plane;
        let [b1, b2] = &self.point;
        [
            a1.clone() * b1.clone(),
            a2.clone() * b1.clone(),
            a1.clone() * b2.clone(),
            a2.clone() * b2.clone(),
        ]
    }
}

/// Plane of the pencil through `l` named by `(alpha1 : alpha2)`.
pub fn pencil_plane<T: Scalar>(l: &Line<T>, alpha: &[T; 2]) -> Result<Plane<T>> {
    let (i, j) = other_axes(l.axis);
    let k = l.axis;
    let mut c: Vec3<T> = [T::zero(), T::zero(), T::zero()];
    c[i] = -alpha[1].clone();
    c[j] = alpha[0].clone();
    c[k] = -(c[i].clone() * l.a[i].clone() + c[j].clone() * l.a[j].clone());
    let d = c[i].clone() * l.b[i].clone() + c[j].clone() * l.b[j].clone();
    canonicalize_plane(&c, &d)
}

/// The rulings through `s`: `W` (lines through the point) and `V` (lines in
/// the plane), with the point and plane themselves.
pub fn generator_planes<T: Scalar>(l: &Line<T>, s: &SegrePoint<T>) -> Result<Generators<T>> {
    let o = T::zero;
    let [a1, a2] = s.plane.clone();
    let [b1, b2] = s.point.clone();
    let w = [[b1.clone(), o(), b2.clone(), o()], [o(), b1.clone(), o(), b2.clone()]];
    let v = [[a1.clone(), a2.clone(), o(), o()], [o(), o(), a1, a2]];
    let point = s.param(0.0).filter(|_| !b1.is_zero()).map(|t| {
        // W is parametrised by the oriented canonical direction a
        linalg::add3(&l.b, &linalg::scale3(&t, &l.a))
    });
    let plane = pencil_plane(l, &s.plane)?;
    Ok(Generators { w, v, point, plane })
}

/// The polar line of `span(l)` with respect to the quadric.
pub fn dual_tangent_line(l: &[TangentVector4<f64>; 2]) -> Result<[TangentVector4<f64>; 2]> {
    let [p, q] = l;
    let qa = quadric_evaluate(p);
    let qb = quadric_polar(p, q);
    let qc = quadric_evaluate(q);
    let scale = (linalg::norm(p) * linalg::norm(q)).max(1e-300);
    let coef_scale = qa.abs().max(qb.abs()).max(qc.abs());
    if coef_scale <= tol::ON_QUADRIC * scale {
        return Err(Error::TangentLine);
    }
    // qa x^2 + 2 qb x y + qc y^2 = 0
    let disc = qb * qb - qa * qc;
    if disc.abs() <= 1e-12 * coef_scale * coef_scale {
        return Err(Error::TangentLine);
    }
    if disc < 0.0 {
        return Err(Error::NoRealIntersection);
    }
    // homogeneous roots (s : qa) and (qc : s), stable for either leading term
    let r = disc.sqrt();
    let s = if qb > 0.0 { -qb - r } else { -qb + r };
    let x1 = comb(p, q, s, qa);
    let x2 = comb(p, q, qc, s);
    let n1 = quadric_gradient(&x1);
    let n2 = quadric_gradient(&x2);
    let m = Matrix4::from_rows(&[
        nalgebra::RowVector4::from_row_slice(&n1),
        nalgebra::RowVector4::from_row_slice(&n2),
        nalgebra::RowVector4::zeros(),
        nalgebra::RowVector4::zeros(),
    ]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.ok_or(Error::TangentLine)?;
    let mut idx: Vec<usize> = (0..4).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
    let row = |k: usize| [vt[(k, 0)], vt[(k, 1)], vt[(k, 2)], vt[(k, 3)]];
    Ok([row(idx[0]), row(idx[1])])
}

fn comb(p: &[f64; 4], q: &[f64; 4], x: f64, y: f64) -> [f64; 4] {
    [x * p[0] + y * q[0], x * p[1] + y * q[1], x * p[2] + y * q[2], x * p[3] + y * q[3]]
}
