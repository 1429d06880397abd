//! Pointwise affine invariants of a congruence: the torsal equation, the
//! discriminant, point types, focal points and planes, and the middle point.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::congruence::{kernel2, ChartKind, Jet};
use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};
use crate::linespace::{canonicalize_plane, segre_factor, Plane};
use crate::scalar::Scalar;
use crate::series::Series;
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PointKind {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointClassification {
    pub kind: PointKind,
    pub stall: bool,
    pub delta: f64,
}

/// Coefficients of `A du^2 + B du dv + C dv^2 = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bde<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

/// `q2 t^2 + q1 t + q0`, vanishing at the focal parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FocalQuadratic<T> {
    pub q2: T,
    pub q1: T,
    pub q0: T,
}

/// Plane-pencil quadratic `p11 c1^2 + p12 c1 c2 + p22 c2^2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlaneQuadratic<T> {
    pub p11: T,
    pub p12: T,
    pub p22: T,
}

pub(crate) trait Ring: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {}
impl<R: Clone + Add<Output = R> + Sub<Output = R> + Mul<Output = R>> Ring for R {}

type J<R> = [[R; 2]; 2];

fn m<R: Ring>(x: &R, y: &R) -> R {
    x.clone() * y.clone()
}

pub(crate) fn bde_formula<R: Ring>(ja: &J<R>, jb: &J<R>) -> [R; 3] {
    let a = m(&ja[0][0], &jb[1][0]) - m(&ja[1][0], &jb[0][0]);
    let b = m(&ja[0][0], &jb[1][1]) + m(&ja[0][1], &jb[1][0]) - m(&ja[1][0], &jb[0][1]) - m(&ja[1][1], &jb[0][0]);
    let c = m(&ja[0][1], &jb[1][1]) - m(&ja[1][1], &jb[0][1]);
    [a, b, c]
}

pub(crate) fn focal_formula<R: Ring>(ja: &J<R>, jb: &J<R>) -> [R; 3] {
    let q2 = m(&ja[0][0], &ja[1][1]) - m(&ja[0][1], &ja[1][0]);
    let q1 = m(&ja[0][0], &jb[1][1]) + m(&jb[0][0], &ja[1][1]) - m(&ja[0][1], &jb[1][0]) - m(&jb[0][1], &ja[1][0]);
    let q0 = m(&jb[0][0], &jb[1][1]) - m(&jb[0][1], &jb[1][0]);
    [q2, q1, q0]
}

fn discriminant_formula<R: Ring>(b: &[R; 3]) -> R {
    let four = b[0].clone() + b[0].clone() + b[0].clone() + b[0].clone();
    m(&b[1], &b[1]) - four * b[2].clone()
}

pub fn bde_coefficients<T: Scalar>(j: &Jet<T>) -> Bde<T> {
    let [a, b, c] = bde_formula(&j.ja(), &j.jb());
    if j.chart == ChartKind::AChart {
        // reported with the sign convention a2u du^2 + (a2v - a1u) du dv - a1v dv^2
        return Bde { a: -a, b: -b, c: -c };
    }
    Bde { a, b, c }
}

/// `B^2 - 4 A C` of the torsal equation.
pub fn discriminant<T: Scalar>(j: &Jet<T>) -> T {
    let b = bde_coefficients(j);
    discriminant_formula(&[b.a, b.b, b.c])
}

pub fn focal_quadratic<T: Scalar>(j: &Jet<T>) -> FocalQuadratic<T> {
    let [q2, q1, q0] = focal_formula(&j.ja(), &j.jb());
    FocalQuadratic { q2, q1, q0 }
}

impl<T: Scalar> FocalQuadratic<T> {
    pub fn discriminant(&self) -> T {
        self.q1.clone() * self.q1.clone() - T::from_int(4) * self.q2.clone() * self.q0.clone()
    }

    pub fn eval(&self, t: &T) -> T {
        (self.q2.clone() * t.clone() + self.q1.clone()) * t.clone() + self.q0.clone()
    }

    /// The repeated root when the discriminant vanishes (exactly for exact
    /// scalars).
    pub fn double_root(&self, tol: f64) -> Option<T> {
        if self.q2.near_zero(tol) || !self.discriminant().near_zero(tol) {
            return None;
        }
        Some(-self.q1.clone() / (T::from_int(2) * self.q2.clone()))
    }
}

pub fn plane_quadratic<T: Scalar>(j: &Jet<T>) -> PlaneQuadratic<T> {
    let ja = j.ja();
    let jb = j.jb();
    let p11 = m(&ja[0][0], &jb[0][1]) - m(&ja[0][1], &jb[0][0]);
    let p12 = m(&ja[0][0], &jb[1][1]) + m(&ja[1][0], &jb[0][1]) - m(&ja[0][1], &jb[1][0]) - m(&ja[1][1], &jb[0][0]);
    let p22 = m(&ja[1][0], &jb[1][1]) - m(&ja[1][1], &jb[1][0]);
    PlaneQuadratic { p11, p12, p22 }
}

pub(crate) fn parabolic_band(bde: &Bde<f64>) -> f64 {
    tol::PARABOLIC * (1.0 + bde.b * bde.b + (bde.a * bde.c).abs())
}

pub(crate) fn stall_band(ja: &[[f64; 2]; 2]) -> f64 {
    let n2: f64 = ja.iter().flatten().map(|x| x * x).sum();
    tol::STALL * (1.0 + n2)
}

pub fn classify_point<T: Scalar>(j: &Jet<T>) -> PointClassification {
    let bde = bde_coefficients(j);
    let delta = discriminant_formula(&[bde.a.clone(), bde.b.clone(), bde.c.clone()]);
    let bf = Bde { a: bde.a.to_f64(), b: bde.b.to_f64(), c: bde.c.to_f64() };
    let band = parabolic_band(&bf);
    let kind = if delta.near_zero(band) {
        PointKind::Parabolic
    } else if delta > T::zero() {
        PointKind::Hyperbolic
    } else {
        PointKind::Elliptic
    };
    let ja = j.ja();
    let det = ja[0][0].clone() * ja[1][1].clone() - ja[0][1].clone() * ja[1][0].clone();
    let jaf = ja.map(|r| r.map(|x| x.to_f64()));
    let stall = j.chart != ChartKind::BChart && det.near_zero(stall_band(&jaf));
    PointClassification { kind, stall, delta: delta.to_f64() }
}

/// A focal parameter on the line; `Infinite` at stall points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FocalParam {
    Finite(f64),
    Infinite,
}

impl FocalParam {
    pub fn finite(&self) -> Option<f64> {
        match self {
            FocalParam::Finite(t) => Some(*t),
            FocalParam::Infinite => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FocalRoots {
    Distinct(f64, f64),
    Double(f64),
    Conjugate { re: f64, im: f64 },
    /// The quadratic degenerates to a linear one; the other root is at
    /// infinity.
    OneInfinite(f64),
}

impl FocalRoots {
    /// Both roots as complex numbers; an infinite root is `inf + 0i`.
    pub fn as_complex(&self) -> [Complex64; 2] {
        match *self {
            FocalRoots::Distinct(a, b) => [Complex64::new(a, 0.0), Complex64::new(b, 0.0)],
            FocalRoots::Double(t) => [Complex64::new(t, 0.0); 2],
            FocalRoots::Conjugate { re, im } => [Complex64::new(re, -im), Complex64::new(re, im)],
            FocalRoots::OneInfinite(t) => [Complex64::new(t, 0.0), Complex64::new(f64::INFINITY, 0.0)],
        }
    }
}

/// A focal point paired with its focal plane and torsal direction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FocalElement {
    pub param: FocalParam,
    /// `b + t a`; `None` at infinity.
    pub point: Option<[f64; 3]>,
    /// `None` when every direction is torsal.
    pub plane: Option<Plane<f64>>,
    /// Unit `(du, dv)` with nonnegative leading nonzero entry.
    pub direction: Option<[f64; 2]>,
    pub multiplicity: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FocalData {
    pub quadratic: FocalQuadratic<f64>,
    pub roots: FocalRoots,
    pub elements: Vec<FocalElement>,
    /// `-q1 / (2 q2)`, the real part of the mean of the roots.
    pub mid_parameter: Option<f64>,
    pub middle_point: Option<[f64; 3]>,
}

pub(crate) fn normalize_direction(d: [f64; 2]) -> Option<[f64; 2]> {
    let n = d[0].hypot(d[1]);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    let mut d = [d[0] / n, d[1] / n];
    let lead = if d[0].abs() > 1e-15 { d[0] } else { d[1] };
    if lead < 0.0 {
        d = [-d[0], -d[1]];
    }
    Some(d)
}

/// Plane through the line of the jet named by the pencil coordinate `alpha`.
pub(crate) fn chart_plane<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>, alpha: &[T; 2]) -> Result<Plane<T>> {
    let c1 = -alpha[1].clone();
    let c2 = alpha[0].clone();
    let c3 = -(c1.clone() * a[0].clone() + c2.clone() * a[1].clone());
    let d = c1.clone() * b[0].clone() + c2.clone() * b[1].clone() + c3.clone() * b[2].clone();
    canonicalize_plane(&[c1, c2, c3], &d)
}

fn mat2_vec(m: &[[f64; 2]; 2], x: &[f64; 2]) -> [f64; 2] {
    [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
}

fn element(j: &Jet<f64>, param: FocalParam, multiplicity: u8) -> FocalElement {
    let ja = j.ja();
    let jb = j.jb();
    let a = j.a();
    let b = j.b();
    let mtx = match param {
        FocalParam::Finite(t) => std::array::from_fn(|r| std::array::from_fn(|c| jb[r][c] + t * ja[r][c])),
        FocalParam::Infinite => ja,
    };
    let point = param.finite().map(|t| linalg::add3(&b, &linalg::scale3(&t, &a)));
    let kernel = kernel2(&mtx, tol::JET_ZERO * j.scale());
    let (plane, direction) = match kernel {
        None => (None, None),
        Some(w) => {
            let da = mat2_vec(&ja, &w);
            let db = mat2_vec(&jb, &w);
            let plane = segre_factor(&[da[0], da[1], db[0], db[1]])
                .ok()
                .and_then(|s| chart_plane(&a, &b, &s.plane).ok());
            (plane, normalize_direction(w))
        }
    };
    FocalElement { param, point, plane, direction, multiplicity }
}

pub fn focal_data(j: &Jet<f64>) -> Result<FocalData> {
    let q = focal_quadratic(j);
    let s = j.scale();
    let qs = q.q2.abs().max(q.q1.abs()).max(q.q0.abs());
    if qs <= tol::JET_ZERO * 1e-6 * s * s {
        return Err(Error::DegenerateQuadratic);
    }
    let cls = classify_point(j);
    let mid_parameter = (!cls.stall).then(|| -q.q1 / (2.0 * q.q2));
    let middle_point = mid_parameter.map(|mu| linalg::add3(&j.b(), &linalg::scale3(&mu, &j.a())));
    let (roots, elements) = if cls.stall {
        if q.q1.abs() <= tol::JET_ZERO * s * s {
            return Err(Error::DegenerateQuadratic);
        }
        let t = -q.q0 / q.q1;
        let el = vec![element(j, FocalParam::Finite(t), 1), element(j, FocalParam::Infinite, 1)];
        (FocalRoots::OneInfinite(t), el)
    } else {
        match cls.kind {
            PointKind::Parabolic => {
                let t = -q.q1 / (2.0 * q.q2);
                (FocalRoots::Double(t), vec![element(j, FocalParam::Finite(t), 2)])
            }
            PointKind::Hyperbolic => {
                let r = cls.delta.max(0.0).sqrt();
                let s = -0.5 * (q.q1 + if q.q1 >= 0.0 { r } else { -r });
                let (mut t1, mut t2) = (s / q.q2, q.q0 / s);
                if t2 < t1 {
                    std::mem::swap(&mut t1, &mut t2);
                }
                let el = vec![element(j, FocalParam::Finite(t1), 1), element(j, FocalParam::Finite(t2), 1)];
                (FocalRoots::Distinct(t1, t2), el)
            }
            PointKind::Elliptic => {
                let re = -q.q1 / (2.0 * q.q2);
                let im = (-cls.delta).sqrt() / (2.0 * q.q2.abs());
                (FocalRoots::Conjugate { re, im }, Vec::new())
            }
        }
    };
    Ok(FocalData { quadratic: q, roots, elements, mid_parameter, middle_point })
}

/// `-q1 / (2 q2)`.
pub fn mid_parameter<T: Scalar>(j: &Jet<T>) -> Result<T> {
    let q = focal_quadratic(j);
    let ja = j.ja().map(|r| r.map(|x| x.to_f64()));
    if q.q2.near_zero(stall_band(&ja)) {
        return Err(Error::StallPoint);
    }
    Ok(-q.q1 / (T::from_int(2) * q.q2))
}

/// Midpoint of the two focal points, real also where they are complex.
pub fn middle_point<T: Scalar>(j: &Jet<T>) -> Result<Vec3<T>> {
    let mu = mid_parameter(j)?;
    Ok(linalg::add3(&j.b(), &linalg::scale3(&mu, &j.a())))
}

/// Series versions of the invariants in a neighbourhood of the jet point;
/// each loses one order to differentiation.
pub(crate) struct SeriesInvariants<T> {
    pub bde: [Series<T>; 3],
    pub delta: Series<T>,
    pub focal: [Series<T>; 3],
}

pub(crate) fn series_invariants<T: Scalar>(j: &Jet<T>) -> SeriesInvariants<T> {
    let p = j.partials();
    let ja = [[p[0][0].clone(), p[0][1].clone()], [p[1][0].clone(), p[1][1].clone()]];
    let jb = [[p[2][0].clone(), p[2][1].clone()], [p[3][0].clone(), p[3][1].clone()]];
    let bde = bde_formula(&ja, &jb);
    let delta = discriminant_formula(&bde);
    let focal = focal_formula(&ja, &jb);
    SeriesInvariants { bde, delta, focal }
}

/// Middle-surface map as series around the jet point.
pub(crate) fn middle_series<T: Scalar>(j: &Jet<T>) -> Result<[Series<T>; 3]> {
    let si = series_invariants(j);
    let [q2, q1, _] = si.focal;
    let ja = j.ja().map(|r| r.map(|x| x.to_f64()));
    let inv = q2.scale(&T::from_int(2)).recip(stall_band(&ja)).map_err(|_| Error::StallPoint)?;
    let mu = -(&q1 * &inv);
    let order = mu.order();
    let a = [j.comps[0].truncate(order), j.comps[1].truncate(order), Series::constant(2, order, T::one())];
    let b = [j.comps[2].truncate(order), j.comps[3].truncate(order), Series::constant(2, order, j.height.clone())];
    Ok(std::array::from_fn(|i| &b[i] + &(&mu * &a[i])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::Congruence;
    use crate::poly::Poly;

    fn lin(b1: Poly<f64>, b2: Poly<f64>) -> Jet<f64> {
        Congruence::bchart(b1, b2).jet(&0.0, &0.0, 2).unwrap()
    }

    #[test]
    fn bde_examples() {
        let j = lin(Poly::v(), Poly::u());
        assert_eq!(bde_coefficients(&j), Bde { a: 1.0, b: 0.0, c: -1.0 });
        assert_eq!(discriminant(&j), 4.0);
        assert_eq!(classify_point(&j).kind, PointKind::Hyperbolic);
        let j = lin(Poly::v(), Poly::u().scale(&-1.0));
        assert_eq!(bde_coefficients(&j), Bde { a: -1.0, b: 0.0, c: -1.0 });
        assert_eq!(discriminant(&j), -4.0);
        assert_eq!(classify_point(&j).kind, PointKind::Elliptic);
    }

    #[test]
    fn achart_sign_convention_and_stall() {
        let z = Congruence::achart(Poly::from_terms([(2, 0, 1.0)]), Poly::v());
        let j = z.jet(&0.5, &0.0, 1).unwrap();
        // a2u = 0, a2v - a1u = 1 - 1, -a1v = 0
        assert_eq!(bde_coefficients(&j), Bde { a: 0.0, b: 0.0, c: 0.0 });
        let constant = Congruence::<f64>::achart(Poly::zero(), Poly::zero());
        assert!(classify_point(&constant.jet(&0.2, &0.1, 1).unwrap()).stall);
        let j = Congruence::achart(Poly::u().scale(&2.0), Poly::v()).jet(&0.0, &0.0, 1).unwrap();
        let b = bde_coefficients(&j);
        assert_eq!((b.a, b.b, b.c), (0.0, -1.0, 0.0));
    }

    #[test]
    fn focal_pairing_for_hyperbolic_example() {
        let fd = focal_data(&lin(Poly::v(), Poly::u())).unwrap();
        assert_eq!(fd.roots, FocalRoots::Distinct(-1.0, 1.0));
        let e = &fd.elements[0];
        assert_eq!(e.point, Some([0.0, 0.0, -1.0]));
        let d = e.direction.unwrap();
        assert!((d[0] - d[1]).abs() < 1e-15);
        assert!(e.plane.as_ref().unwrap().approx_eq(&Plane::new([1.0, -1.0, 0.0], 0.0).unwrap(), 1e-15));
        let e = &fd.elements[1];
        assert_eq!(e.point, Some([0.0, 0.0, 1.0]));
        assert!(e.plane.as_ref().unwrap().approx_eq(&Plane::new([1.0, 1.0, 0.0], 0.0).unwrap(), 1e-15));
    }

    #[test]
    fn focal_elliptic_and_degenerate() {
        let fd = focal_data(&lin(Poly::v(), Poly::u().scale(&-1.0))).unwrap();
        assert_eq!(fd.roots, FocalRoots::Conjugate { re: 0.0, im: 1.0 });
        assert_eq!(fd.mid_parameter, Some(0.0));
        assert!(fd.elements.is_empty());
        let fd = focal_data(&lin(Poly::zero(), Poly::zero())).unwrap();
        assert_eq!(fd.roots, FocalRoots::Double(0.0));
        assert_eq!(fd.elements[0].plane, None);
    }

    #[test]
    fn stall_point_has_infinite_root() {
        let z = Congruence::achart(Poly::from_terms([(2, 0, 1.0)]), Poly::v());
        let fd = focal_data(&z.jet(&0.0, &0.0, 1).unwrap()).unwrap();
        assert_eq!(fd.roots, FocalRoots::OneInfinite(-1.0));
        assert_eq!(fd.elements[1].param, FocalParam::Infinite);
        assert_eq!(fd.middle_point, None);
        assert_eq!(middle_point(&z.jet(&0.0, &0.0, 1).unwrap()), Err(Error::StallPoint));
    }

    #[test]
    fn middle_point_examples() {
        let z = Congruence::bchart(Poly::v(), Poly::u().scale(&-1.0));
        let p = middle_point(&z.jet(&0.4, &0.7, 1).unwrap()).unwrap();
        assert_eq!(p, [0.7, -0.4, 0.0]);
        let z = Congruence::<f64>::bchart(Poly::zero(), Poly::zero());
        assert_eq!(middle_point(&z.jet(&0.4, &-0.7, 1).unwrap()).unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn plane_quadratic_in_bchart() {
        let j = lin(Poly::v(), Poly::u());
        assert_eq!(plane_quadratic(&j), PlaneQuadratic { p11: 1.0, p12: 0.0, p22: -1.0 });
    }
}
