//! Two-parameter line families `(u, v) -> [a(u, v), b(u, v)]`, their jets,
//! re-charting, affine images and pointwise normal forms.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants;
use crate::linalg::{self, Mat3, Vec3};
use crate::linespace::{canonicalize_line, Line};
use crate::poly::Poly;
use crate::scalar::Scalar;
use crate::series::{invert_map, Series};
use crate::tol;

pub const A1: usize = 0;
pub const A2: usize = 1;
pub const B1: usize = 2;
pub const B2: usize = 3;

/// Which components are the parameters themselves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChartKind {
    /// `a = (u, v, 1)`, `b = (b1, b2, h)`.
    BChart,
    /// `a = (a1, a2, 1)`, `b = (u, v, h)`.
    AChart,
    /// `a = (a1, a2, 1)`, `b = (b1, b2, h)`.
    General,
}

/// Parameter rectangle. Infinite bounds are allowed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Domain {
    pub umin: f64,
    pub umax: f64,
    pub vmin: f64,
    pub vmax: f64,
}

impl Domain {
    pub fn new(umin: f64, umax: f64, vmin: f64, vmax: f64) -> Self {
        Domain { umin, umax, vmin, vmax }
    }

    pub fn unbounded() -> Self {
        Domain::new(f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        let eps = 1e-12;
        let su = eps * (1.0 + u.abs());
        let sv = eps * (1.0 + v.abs());
        u >= self.umin - su && u <= self.umax + su && v >= self.vmin - sv && v <= self.vmax + sv
    }

    pub fn is_empty(&self) -> bool {
        !(self.umin < self.umax && self.vmin < self.vmax)
    }
}

impl Default for Domain {
    fn default() -> Self {
        Domain::new(-1.0, 1.0, -1.0, 1.0)
    }
}

/// A smooth component: receives `u` and `v` as series and returns the
/// component as a series in the same variables.
pub type SmoothFn<T> = Arc<dyn Fn(&Series<T>, &Series<T>) -> Series<T> + Send + Sync>;

#[derive(Clone)]
pub enum Component<T> {
    Poly(Poly<T>),
    Smooth(SmoothFn<T>),
}

impl<T: Scalar> fmt::Debug for Component<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Poly(p) => f.debug_tuple("Poly").field(p).finish(),
            Component::Smooth(_) => f.write_str("Smooth(..)"),
        }
    }
}

impl<T: Scalar> Component<T> {
    fn eval_series(&self, u: &Series<T>, v: &Series<T>) -> Series<T> {
        match self {
            Component::Poly(p) => p.eval_series(u, v),
            Component::Smooth(f) => f(u, v),
        }
    }
}

/// A line family given as a whole rather than by four components. Returns
/// the series of `(a1, a2, b1, b2)` in the displacement from `(u, v)`.
pub trait LineFamily<T>: Send + Sync {
    fn series_at(&self, u: &T, v: &T, order: usize) -> Result<[Series<T>; 4]>;
}

#[derive(Clone)]
enum Source<T> {
    Components(Arc<[Component<T>; 4]>),
    Family(Arc<dyn LineFamily<T>>),
}

/// A congruence patch in the `x3` chart: `a = (a1, a2, 1)`, `b = (b1, b2, h)`.
#[derive(Clone)]
pub struct Congruence<T> {
    chart: ChartKind,
    domain: Domain,
    height: T,
    source: Source<T>,
}

impl<T: Scalar> fmt::Debug for Congruence<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Congruence");
        d.field("chart", &self.chart).field("domain", &self.domain).field("height", &self.height);
        match &self.source {
            Source::Components(c) => d.field("components", c),
            Source::Family(_) => d.field("components", &"family"),
        };
        d.finish()
    }
}

impl<T: Scalar> Congruence<T> {
    pub fn from_components(chart: ChartKind, components: [Component<T>; 4]) -> Self {
        Congruence { chart, domain: Domain::default(), height: T::zero(), source: Source::Components(Arc::new(components)) }
    }

    pub fn from_family(chart: ChartKind, family: Arc<dyn LineFamily<T>>) -> Self {
        Congruence { chart, domain: Domain::unbounded(), height: T::zero(), source: Source::Family(family) }
    }

    /// `a = (u, v, 1)`, `b = (b1, b2, 0)`.
    pub fn bchart(b1: Poly<T>, b2: Poly<T>) -> Self {
        use Component::Poly as P;
        Self::from_components(ChartKind::BChart, [P(Poly::u()), P(Poly::v()), P(b1), P(b2)])
    }

    /// `a = (a1, a2, 1)`, `b = (u, v, 0)`.
    pub fn achart(a1: Poly<T>, a2: Poly<T>) -> Self {
        use Component::Poly as P;
        Self::from_components(ChartKind::AChart, [P(a1), P(a2), P(Poly::u()), P(Poly::v())])
    }

    pub fn general(a1: Poly<T>, a2: Poly<T>, b1: Poly<T>, b2: Poly<T>) -> Self {
        use Component::Poly as P;
        Self::from_components(ChartKind::General, [P(a1), P(a2), P(b1), P(b2)])
    }

    /// B-chart congruence with smooth `b1, b2`.
    pub fn bchart_smooth(b1: SmoothFn<T>, b2: SmoothFn<T>) -> Self {
        use Component::{Poly as P, Smooth as S};
        Self::from_components(ChartKind::BChart, [P(Poly::u()), P(Poly::v()), S(b1), S(b2)])
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_height(mut self, h: T) -> Self {
        self.height = h;
        self
    }

    pub fn chart(&self) -> ChartKind {
        self.chart
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn height(&self) -> &T {
        &self.height
    }

    /// The four components when the congruence is given by them.
    pub fn components(&self) -> Option<&[Component<T>; 4]> {
        match &self.source {
            Source::Components(c) => Some(c),
            Source::Family(_) => None,
        }
    }

    /// The four polynomial components, if all are polynomial.
    pub fn polynomials(&self) -> Option<[&Poly<T>; 4]> {
        let c = self.components()?;
        let get = |i: usize| match &c[i] {
            Component::Poly(p) => Some(p),
            Component::Smooth(_) => None,
        };
        Some([get(0)?, get(1)?, get(2)?, get(3)?])
    }

    fn check_domain(&self, u: &T, v: &T) -> Result<()> {
        let (uf, vf) = (u.to_f64(), v.to_f64());
        if !self.domain.contains(uf, vf) {
            return Err(Error::OutOfDomain { u: uf, v: vf });
        }
        Ok(())
    }

    /// Taylor series of `(a1, a2, b1, b2)` in the displacement from `(u, v)`.
    pub fn series_at(&self, u: &T, v: &T, order: usize) -> Result<[Series<T>; 4]> {
        self.check_domain(u, v)?;
        match &self.source {
            Source::Components(c) => {
                let us = Series::variable(2, order, 0, u.clone());
                let vs = Series::variable(2, order, 1, v.clone());
                Ok(std::array::from_fn(|i| c[i].eval_series(&us, &vs)))
            }
            Source::Family(f) => f.series_at(u, v, order),
        }
    }

    /// Components evaluated on series arguments.
    pub fn eval_series(&self, u: &Series<T>, v: &Series<T>) -> Result<[Series<T>; 4]> {
        if let Source::Components(c) = &self.source {
            self.check_domain(&u.value(), &v.value())?;
            return Ok(std::array::from_fn(|i| c[i].eval_series(u, v)));
        }
        let order = u.order().min(v.order());
        let base = self.series_at(&u.value(), &v.value(), order)?;
        let args = [u.displacement(), v.displacement()];
        Ok(std::array::from_fn(|i| base[i].compose(&args)))
    }

    pub fn jet(&self, u: &T, v: &T, order: usize) -> Result<Jet<T>> {
        let comps = self.series_at(u, v, order)?;
        Ok(Jet { u: u.clone(), v: v.clone(), order, chart: self.chart, height: self.height.clone(), comps })
    }

    /// `(a1, a2, b1, b2)` at a point.
    pub fn components_at(&self, u: &T, v: &T) -> Result<[T; 4]> {
        let s = self.series_at(u, v, 0)?;
        Ok(std::array::from_fn(|i| s[i].value()))
    }

    /// Direction `(a1, a2, 1)` and base point `(b1, b2, h)`.
    pub fn direction_base(&self, u: &T, v: &T) -> Result<(Vec3<T>, Vec3<T>)> {
        let [a1, a2, b1, b2] = self.components_at(u, v)?;
        Ok(([a1, a2, T::one()], [b1, b2, self.height.clone()]))
    }

    pub fn line_at(&self, u: &T, v: &T) -> Result<Line<T>> {
        let (a, b) = self.direction_base(u, v)?;
        canonicalize_line(&a, &b)
    }

    /// The same family based on the plane `x3 = c`.
    pub fn rechart_at_height(&self, c: T) -> Self {
        let delta = c.clone() - self.height.clone();
        let source = match &self.source {
            Source::Components(comps) => {
                let shift = |b: &Component<T>, a: &Component<T>| -> Component<T> {
                    match (b, a) {
                        (Component::Poly(pb), Component::Poly(pa)) => Component::Poly(pb.add(&pa.scale(&delta))),
                        _ => {
                            let (b, a, k) = (b.clone(), a.clone(), delta.clone());
                            Component::Smooth(Arc::new(move |u, v| {
                                &b.eval_series(u, v) + &a.eval_series(u, v).scale(&k)
                            }))
                        }
                    }
                };
                Source::Components(Arc::new([
                    comps[0].clone(),
                    comps[1].clone(),
                    shift(&comps[2], &comps[0]),
                    shift(&comps[3], &comps[1]),
                ]))
            }
            Source::Family(f) => Source::Family(Arc::new(Shifted { inner: f.clone(), delta })),
        };
        let chart = if self.chart == ChartKind::AChart { ChartKind::General } else { self.chart };
        Congruence { chart, domain: self.domain, height: c, source }
    }

    /// The image family `[A a, A b + T]`, re-based on `x3 = 0` and keeping
    /// the parametrisation.
    pub fn affine_image(&self, m: &Mat3<T>, t: &Vec3<T>) -> Result<Self> {
        let det = linalg::det3(m);
        if det.near_zero(tol::SINGULAR_MATRIX * linalg::mat_norm(m).powi(3)) {
            return Err(Error::SingularMatrix);
        }
        let fam = AffineImage { inner: self.clone(), m: m.clone(), t: t.clone() };
        Ok(Congruence { chart: ChartKind::General, domain: self.domain, height: T::zero(), source: Source::Family(Arc::new(fam)) })
    }

    /// Converts an exactly given polynomial congruence to floating point.
    pub fn to_f64(&self) -> Result<Congruence<f64>> {
        let p = self
            .polynomials()
            .ok_or_else(|| Error::InvalidArgument("only polynomial congruences convert".into()))?;
        let conv = |q: &Poly<T>| Component::Poly(q.map(|c| c.to_f64()));
        Ok(Congruence {
            chart: self.chart,
            domain: self.domain,
            height: self.height.to_f64(),
            source: Source::Components(Arc::new([conv(p[0]), conv(p[1]), conv(p[2]), conv(p[3])])),
        })
    }
}

struct Shifted<T> {
    inner: Arc<dyn LineFamily<T>>,
    delta: T,
}

impl<T: Scalar> LineFamily<T> for Shifted<T> {
    fn series_at(&self, u: &T, v: &T, order: usize) -> Result<[Series<T>; 4]> {
        let [a1, a2, b1, b2] = self.inner.series_at(u, v, order)?;
        let b1 = &b1 + &a1.scale(&self.delta);
        let b2 = &b2 + &a2.scale(&self.delta);
        Ok([a1, a2, b1, b2])
    }
}

struct AffineImage<T> {
    inner: Congruence<T>,
    m: Mat3<T>,
    t: Vec3<T>,
}

impl<T: Scalar> LineFamily<T> for AffineImage<T> {
    fn series_at(&self, u: &T, v: &T, order: usize) -> Result<[Series<T>; 4]> {
        let [a1, a2, b1, b2] = self.inner.series_at(u, v, order)?;
        let one = Series::constant(2, order, T::one());
        let h = Series::constant(2, order, self.inner.height.clone());
        let a = [a1, a2, one];
        let b = [b1, b2, h];
        let row = |r: &[T; 3], x: &[Series<T>; 3], c: &T| {
            (&(&x[0].scale(&r[0]) + &x[1].scale(&r[1])) + &x[2].scale(&r[2])).add_constant(c)
        };
        let zero = T::zero();
        let na: [Series<T>; 3] = std::array::from_fn(|i| row(&self.m[i], &a, &zero));
        let nb: [Series<T>; 3] = std::array::from_fn(|i| row(&self.m[i], &b, &self.t[i]));
        let scale = 1.0 + na.iter().map(|s| s.value().to_f64().abs()).fold(0.0, f64::max);
        let w = na[2]
            .recip(tol::JET_ZERO * scale)
            .map_err(|_| Error::InvalidArgument("image line is parallel to the base plane".into()))?;
        let s = &nb[2] * &w;
        let a1 = &na[0] * &w;
        let a2 = &na[1] * &w;
        let b1 = &nb[0] - &(&s * &na[0]);
        let b2 = &nb[1] - &(&s * &na[1]);
        Ok([a1, a2, b1, b2])
    }
}

/// Reparametrisation of an `x3`-chart family by its direction map, giving a
/// B-chart family.
struct DirectionChart<T> {
    inner: Congruence<T>,
    center: (T, T),
    center_image: (T, T),
}

impl<T: Scalar> DirectionChart<T> {
    /// Parameter of `inner` whose direction is `(p, q)`.
    fn preimage(&self, p: &T, q: &T) -> Result<(T, T)> {
        if *p == self.center_image.0 && *q == self.center_image.1 {
            return Ok(self.center.clone());
        }
        let (tp, tq) = (p.to_f64(), q.to_f64());
        let mut u = self.center.0.to_f64();
        let mut v = self.center.1.to_f64();
        // reversion series at the centre as the starting guess
        if let Ok(s) = self.inner.series_at(&self.center.0, &self.center.1, 3) {
            let f: Vec<Series<f64>> = s[..2].iter().map(|x| x.displacement().to_f64()).collect();
            if let Ok(g) = invert_map(&f, 1e-300) {
                let d = [tp - self.center_image.0.to_f64(), tq - self.center_image.1.to_f64()];
                let (du, dv) = (g[0].eval(&d), g[1].eval(&d));
                if du.is_finite() && dv.is_finite() {
                    u += du;
                    v += dv;
                }
            }
        }
        let inner = self.inner.to_f64_view();
        for _ in 0..60 {
            let s = inner(u, v)?;
            let r = [s[0].value() - tp, s[1].value() - tq];
            let j = [s[0].gradient(), s[1].gradient()];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                return Err(Error::InversionFailed);
            }
            let du = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
            let dv = (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
            u -= du;
            v -= dv;
            if du.abs().max(dv.abs()) <= 1e-15 * (1.0 + u.abs().max(v.abs())) {
                let s = inner(u, v)?;
                let res = (s[0].value() - tp).abs().max((s[1].value() - tq).abs());
                if res <= 1e-12 * (1.0 + tp.abs().max(tq.abs())) {
                    return Ok((T::from_f64(u), T::from_f64(v)));
                }
            }
        }
        Err(Error::InversionFailed)
    }
}

impl<T: Scalar> Congruence<T> {
    /// First-order evaluation in floating point, used for Newton iterations.
    fn to_f64_view(&self) -> impl Fn(f64, f64) -> Result<[Series<f64>; 2]> + '_ {
        move |u, v| {
            let s = self.series_at(&T::from_f64(u), &T::from_f64(v), 1)?;
            Ok([s[0].to_f64(), s[1].to_f64()])
        }
    }
}

impl<T: Scalar> LineFamily<T> for DirectionChart<T> {
    fn series_at(&self, p: &T, q: &T, order: usize) -> Result<[Series<T>; 4]> {
        let (u, v) = self.preimage(p, q)?;
        let work = order.max(1);
        let s = self.inner.series_at(&u, &v, work)?;
        let f = [s[0].displacement(), s[1].displacement()];
        let scale = 1.0 + f.iter().map(|x| x.max_abs()).fold(0.0, f64::max);
        let g = invert_map(&f, tol::STALL * scale * scale).map_err(|_| Error::StallPoint)?;
        let a1 = Series::variable(2, order, 0, p.clone());
        let a2 = Series::variable(2, order, 1, q.clone());
        Ok([a1, a2, s[2].compose(&g).truncate(order), s[3].compose(&g).truncate(order)])
    }
}

/// Values and derivatives of the four components at a point.
#[derive(Clone, Debug)]
pub struct Jet<T> {
    pub u: T,
    pub v: T,
    pub order: usize,
    pub chart: ChartKind,
    pub height: T,
    /// Series of `(a1, a2, b1, b2)` in the displacement from `(u, v)`.
    pub comps: [Series<T>; 4],
}

impl<T: Scalar> Jet<T> {
    /// `d^(i+j) comp / du^i dv^j`.
    pub fn d(&self, comp: usize, i: u8, j: u8) -> T {
        self.comps[comp].derivative_at(&[i, j])
    }

    pub fn value(&self, comp: usize) -> T {
        self.comps[comp].value()
    }

    pub fn a(&self) -> Vec3<T> {
        [self.value(A1), self.value(A2), T::one()]
    }

    pub fn b(&self) -> Vec3<T> {
        [self.value(B1), self.value(B2), self.height.clone()]
    }

    /// `[[a1u, a1v], [a2u, a2v]]`.
    pub fn ja(&self) -> [[T; 2]; 2] {
        [[self.d(A1, 1, 0), self.d(A1, 0, 1)], [self.d(A2, 1, 0), self.d(A2, 0, 1)]]
    }

    /// `[[b1u, b1v], [b2u, b2v]]`.
    pub fn jb(&self) -> [[T; 2]; 2] {
        [[self.d(B1, 1, 0), self.d(B1, 0, 1)], [self.d(B2, 1, 0), self.d(B2, 0, 1)]]
    }

    /// First partials as series (one order lower), indexed `[comp][var]`.
    pub fn partials(&self) -> [[Series<T>; 2]; 4] {
        std::array::from_fn(|c| [self.comps[c].derivative(0), self.comps[c].derivative(1)])
    }

    pub fn taylor(&self) -> TaylorTable<T> {
        let table = |c: usize| -> Vec<Vec<T>> {
            (0..=self.order)
                .map(|k| (0..=k).map(|i| self.comps[c].coeff(&[(k - i) as u8, i as u8])).collect())
                .collect()
        };
        TaylorTable { order: self.order, b1: table(B1), b2: table(B2) }
    }

    pub fn to_f64(&self) -> Jet<f64> {
        Jet {
            u: self.u.to_f64(),
            v: self.v.to_f64(),
            order: self.order,
            chart: self.chart,
            height: self.height.to_f64(),
            comps: std::array::from_fn(|i| self.comps[i].to_f64()),
        }
    }

    /// Largest magnitude among the first derivatives, plus one.
    pub fn scale(&self) -> f64 {
        let ja = self.ja();
        let jb = self.jb();
        1.0 + ja.iter().chain(jb.iter()).flatten().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }
}

/// Factorial-scaled Taylor coefficients `b^j_{ki}` of `u^(k-i) v^i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaylorTable<T> {
    pub order: usize,
    pub b1: Vec<Vec<T>>,
    pub b2: Vec<Vec<T>>,
}

impl<T: Scalar> TaylorTable<T> {
    /// `b^j_{ki}` for `j` in `{1, 2}`.
    pub fn get(&self, j: usize, k: usize, i: usize) -> T {
        let t = if j == 1 { &self.b1 } else { &self.b2 };
        t.get(k).and_then(|r| r.get(i)).cloned().unwrap_or_else(T::zero)
    }
}

pub fn taylor_coefficients<T: Scalar>(z: &Congruence<T>, u: &T, v: &T, order: usize) -> Result<TaylorTable<T>> {
    Ok(z.jet(u, v, order)?.taylor())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NormalMode {
    /// Focal point at the origin, focal plane `x2 = 0`, torsal direction `u`.
    NonElliptic,
    /// Additionally the other focal point at `-e3` and focal plane `x1 = 0`.
    Hyperbolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormalizeOptions {
    pub mode: NormalMode,
    /// Index into the ascending real focal parameters of the one sent to the
    /// origin.
    pub root: usize,
}

impl NormalizeOptions {
    pub fn new(mode: NormalMode) -> Self {
        NormalizeOptions { mode, root: 0 }
    }

    pub fn root(mut self, root: usize) -> Self {
        self.root = root;
        self
    }
}

/// An affine normal form at a point: `congruence` is `(A, T) * Z` in B-chart
/// form, with the chosen point at parameter `(0, 0)`.
#[derive(Clone)]
pub struct Normalization<T> {
    pub a: Mat3<T>,
    pub t: Vec3<T>,
    pub congruence: Congruence<T>,
    pub origin: (T, T),
    image: Congruence<T>,
}

impl<T: Scalar> fmt::Debug for Normalization<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Normalization").field("a", &self.a).field("t", &self.t).field("origin", &self.origin).finish()
    }
}

impl<T: Scalar> Normalization<T> {
    /// New parameters of an original parameter point.
    pub fn from_original(&self, u: &T, v: &T) -> Result<(T, T)> {
        let [a1, a2, ..] = self.image.components_at(u, v)?;
        Ok((a1, a2))
    }
}

/// Canonical kernel vector of a 2x2 matrix: the largest-magnitude entry is 1.
pub(crate) fn kernel2<T: Scalar>(m: &[[T; 2]; 2], tol: f64) -> Option<[T; 2]> {
    let n0 = m[0][0].abs_val().to_f64().max(m[0][1].abs_val().to_f64());
    let n1 = m[1][0].abs_val().to_f64().max(m[1][1].abs_val().to_f64());
    let r = if n0 >= n1 { &m[0] } else { &m[1] };
    if n0.max(n1) <= tol && (!T::EXACT || (r[0].is_zero() && r[1].is_zero())) {
        return None;
    }
    let k = [-r[1].clone(), r[0].clone()];
    let i = linalg::argmax_abs(&k);
    let s = k[i].clone();
    Some([k[0].clone() / s.clone(), k[1].clone() / s])
}

fn mat2_vec<T: Scalar>(m: &[[T; 2]; 2], x: &[T; 2]) -> [T; 2] {
    [
        m[0][0].clone() * x[0].clone() + m[0][1].clone() * x[1].clone(),
        m[1][0].clone() * x[0].clone() + m[1][1].clone() * x[1].clone(),
    ]
}

/// Torsal kernel `w'` and focal-plane covector for focal parameter `t`.
fn torsal_frame<T: Scalar>(j: &Jet<T>, t: &T) -> Result<([T; 2], Vec3<T>)> {
    let ja = j.ja();
    let jb = j.jb();
    let m: [[T; 2]; 2] = std::array::from_fn(|r| std::array::from_fn(|c| jb[r][c].clone() + t.clone() * ja[r][c].clone()));
    let w = kernel2(&m, tol::JET_ZERO * j.scale()).ok_or(Error::DegenerateFocalData)?;
    let da = mat2_vec(&ja, &w);
    let a = j.a();
    let c1 = -da[1].clone();
    let c2 = da[0].clone();
    let c3 = -(c1.clone() * a[0].clone() + c2.clone() * a[1].clone());
    let c = [c1, c2, c3];
    let k = linalg::argmax_abs(&c);
    if c[k].is_zero() {
        return Err(Error::DegenerateFocalData);
    }
    let s = T::one() / c[k].clone();
    Ok((w, linalg::scale3(&s, &c)))
}

/// Affine normal form of `z` at `(u0, v0)`, in B-chart form.
pub fn normalize_at_point<T: Scalar>(z: &Congruence<T>, u0: &T, v0: &T, opts: NormalizeOptions) -> Result<Normalization<T>> {
    let j = z.jet(u0, v0, 1)?;
    let q = invariants::focal_quadratic(&j);
    let cls = invariants::classify_point(&j);
    let hyper = opts.mode == NormalMode::Hyperbolic;
    match cls.kind {
        invariants::PointKind::Elliptic if hyper => return Err(Error::NotHyperbolic),
        invariants::PointKind::Elliptic => return Err(Error::NotNonElliptic),
        invariants::PointKind::Parabolic if hyper => return Err(Error::DegenerateFocalData),
        _ => {}
    }
    if cls.stall {
        return Err(Error::StallPoint);
    }
    let two = T::from_int(2);
    let roots: Vec<T> = if cls.kind == invariants::PointKind::Parabolic {
        let t = -q.q1.clone() / (two * q.q2.clone());
        vec![t.clone(), t]
    } else {
        let disc = q.q1.clone() * q.q1.clone() - T::from_int(4) * q.q2.clone() * q.q0.clone();
        let r = disc
            .sqrt_opt()
            .ok_or_else(|| Error::InvalidArgument("focal parameters are not representable in this scalar type".into()))?;
        let mut v = vec![
            (-q.q1.clone() - r.clone()) / (two.clone() * q.q2.clone()),
            (-q.q1.clone() + r) / (two * q.q2.clone()),
        ];
        if v[1] < v[0] {
            v.swap(0, 1);
        }
        v
    };
    if opts.root > 1 {
        return Err(Error::InvalidArgument("root index must be 0 or 1".into()));
    }
    let t1 = roots[opts.root].clone();
    let t2 = roots[1 - opts.root].clone();
    let a0 = j.a();
    let b0 = j.b();
    let a0n = linalg::dot(&a0, &a0);
    let (w1, c1) = torsal_frame(&j, &t1)?;
    let ja = j.ja();
    let da = {
        let d = mat2_vec(&ja, &w1);
        [d[0].clone(), d[1].clone(), T::zero()]
    };
    let (row1, row3) = if hyper {
        let (_, c2) = torsal_frame(&j, &t2)?;
        let s = -T::one() / (t2.clone() - t1.clone());
        (c2, linalg::scale3(&(s / a0n.clone()), &a0))
    } else {
        let k = linalg::dot(&da, &a0) / a0n.clone();
        let r = linalg::sub3(&da, &linalg::scale3(&k, &a0));
        let rd = linalg::dot(&r, &da);
        if rd.is_zero() {
            return Err(Error::StallPoint);
        }
        (linalg::scale3(&(T::one() / rd), &r), linalg::scale3(&(T::one() / a0n), &a0))
    };
    let m: Mat3<T> = [row1, c1, row3];
    let p1 = linalg::add3(&b0, &linalg::scale3(&t1, &a0));
    let t = linalg::scale3(&-T::one(), &linalg::mat_vec(&m, &p1));
    let image = z.affine_image(&m, &t)?;
    let center_image = {
        let [a1, a2, ..] = image.components_at(u0, v0)?;
        (a1, a2)
    };
    let chart = DirectionChart { inner: image.clone(), center: (u0.clone(), v0.clone()), center_image: center_image.clone() };
    let congruence = Congruence::from_family(ChartKind::BChart, Arc::new(chart));
    Ok(Normalization { a: m, t, congruence, origin: center_image, image })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn crosscap() -> Congruence<f64> {
        let b1 = Poly::from_terms([
            (0, 1, 2.0), (2, 0, 1.0), (1, 1, 5.0), (0, 2, -1.0),
            (3, 0, -3.0), (2, 1, -1.0), (1, 2, 7.0), (0, 3, 1.0),
        ]);
        let b2 = Poly::from_terms([
            (2, 0, 7.0), (1, 1, -2.0), (0, 2, 3.0), (3, 0, 5.0),
            (2, 1, -2.0), (1, 2, 11.0), (0, 3, 1.0),
        ]);
        Congruence::bchart(b1, b2)
    }

    #[test]
    fn crosscap_jet() {
        let j = crosscap().jet(&0.0, &0.0, 3).unwrap();
        assert_eq!(j.jb(), [[0.0, 2.0], [0.0, 0.0]]);
        assert_eq!(j.d(B1, 2, 0), 2.0);
        assert_eq!(j.d(B2, 1, 1), -2.0);
        assert_eq!(j.d(B2, 2, 0), 14.0);
        assert_eq!(j.ja(), [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn crosscap_taylor_table() {
        let t = taylor_coefficients(&crosscap(), &0.0, &0.0, 3).unwrap();
        let want1 = [(1, 1, 2.0), (2, 0, 1.0), (2, 1, 5.0), (3, 0, -3.0), (3, 1, -1.0)];
        for (k, i, c) in want1 {
            assert_eq!(t.get(1, k, i), c, "b1 {k}{i}");
        }
        let want2 = [(2, 0, 7.0), (2, 1, -2.0), (2, 2, 3.0), (3, 1, -2.0), (3, 2, 11.0)];
        for (k, i, c) in want2 {
            assert_eq!(t.get(2, k, i), c, "b2 {k}{i}");
        }
        let single = Congruence::bchart(Poly::from_terms([(2, 1, 1.0)]), Poly::zero());
        let t = taylor_coefficients(&single, &0.0, &0.0, 3).unwrap();
        assert_eq!(t.get(1, 3, 1), 1.0);
        assert_eq!(t.get(1, 3, 0), 0.0);
    }

    #[test]
    fn linear_examples() {
        let z = Congruence::bchart(Poly::v(), Poly::u());
        let j = z.jet(&0.0, &0.0, 2).unwrap();
        assert_eq!(j.jb(), [[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(j.d(B1, 2, 0), 0.0);
        let zero = Congruence::<f64>::bchart(Poly::zero(), Poly::zero());
        let j = zero.jet(&0.3, &-0.4, 3).unwrap();
        assert!(j.comps[B1].is_zero_within(0.0));
    }

    #[test]
    fn out_of_domain() {
        assert!(matches!(crosscap().jet(&2.0, &0.0, 1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn rechart_keeps_lines() {
        let z = Congruence::bchart(Poly::v(), Poly::u());
        let r = z.rechart_at_height(1.0);
        let p = r.polynomials().unwrap();
        assert_eq!(p[2], &Poly::from_terms([(0, 1, 1.0), (1, 0, 1.0)]));
        assert_eq!(p[3], &Poly::from_terms([(0, 1, 1.0), (1, 0, 1.0)]));
        let l0 = z.line_at(&0.3, &-0.2).unwrap();
        let l1 = r.line_at(&0.3, &-0.2).unwrap();
        assert!(l0.approx_eq(&l1, 1e-12));
        let same = z.rechart_at_height(0.0);
        assert_eq!(same.polynomials().unwrap()[2], z.polynomials().unwrap()[2]);
    }

    #[test]
    fn crosscap_normal_form_is_identity() {
        let n = normalize_at_point(&crosscap(), &0.0, &0.0, NormalizeOptions::new(NormalMode::NonElliptic)).unwrap();
        assert_eq!(n.a, linalg::identity3::<f64>());
        assert_eq!(n.t, [0.0; 3]);
        let j = n.congruence.jet(&0.0, &0.0, 3).unwrap();
        assert_eq!(j.d(B2, 2, 0), 14.0);
    }

    #[test]
    fn exact_normal_form() {
        let q = |n: i64| BigRational::from_integer(n.into());
        let z = Congruence::bchart(
            Poly::from_terms([(0, 1, q(2)), (2, 0, q(1))]),
            Poly::from_terms([(1, 1, q(1))]),
        );
        let n = normalize_at_point(&z, &q(0), &q(0), NormalizeOptions::new(NormalMode::NonElliptic)).unwrap();
        let j = n.congruence.jet(&q(0), &q(0), 3).unwrap();
        assert_eq!(j.d(B1, 1, 0), q(0));
        assert_eq!(j.d(B2, 1, 0), q(0));
    }

    #[test]
    fn hyperbolic_normal_form() {
        let z = Congruence::bchart(Poly::v(), Poly::u());
        let n = normalize_at_point(&z, &0.0, &0.0, NormalizeOptions::new(NormalMode::Hyperbolic)).unwrap();
        let j = n.congruence.jet(&0.0, &0.0, 2).unwrap();
        let jb = j.jb();
        for (got, want) in [(jb[0][0], 0.0), (jb[1][0], 0.0), (jb[0][1], 0.0), (jb[1][1], 1.0)] {
            assert!((got - want).abs() < 1e-10, "{jb:?}");
        }
        assert_eq!(j.ja(), [[1.0, 0.0], [0.0, 1.0]]);
        let ell = Congruence::bchart(Poly::v(), Poly::u().scale(&-1.0));
        let e = normalize_at_point(&ell, &0.0, &0.0, NormalizeOptions::new(NormalMode::NonElliptic));
        assert_eq!(e.err(), Some(Error::NotNonElliptic));
    }

    #[test]
    fn normal_form_off_centre() {
        let z = crosscap();
        let (u0, v0) = (0.1, 0.05);
        let n = normalize_at_point(&z, &u0, &v0, NormalizeOptions::new(NormalMode::NonElliptic).root(1)).unwrap();
        let j = n.congruence.jet(&0.0, &0.0, 3).unwrap();
        assert!(j.d(B1, 1, 0).abs() < 1e-10);
        assert!(j.d(B2, 1, 0).abs() < 1e-10);
        // sampled lines of the normal form are the images of the original lines
        let (p, q) = n.from_original(&0.12, &0.04).unwrap();
        let l = z.line_at(&0.12, &0.04).unwrap();
        let img = crate::linespace::affine_transform_line(&n.a, &n.t, &l).unwrap();
        let got = n.congruence.line_at(&p, &q).unwrap();
        assert!(img.approx_eq_unoriented(&got, 1e-9), "{img:?} {got:?}");
    }
}
