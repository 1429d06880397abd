//! Contact of a congruence with model families of lines, classified up to
//! contact equivalence of the germ measuring the tangency.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use serde::Serialize;

use crate::congruence::{normalize_at_point, Congruence, NormalMode, NormalizeOptions};
use crate::error::{Error, Result};
use crate::invariants::{classify_point, PointKind};
use crate::linalg::{self, Mat3, Vec3};
use crate::linespace::{line_incidence, Incidence, Line, Plane};
use crate::series::Series;
use crate::surfaces::{morin_classify, MorinKind};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ContactModel {
    Point,
    Plane,
    Direction,
    ParallelPlanes,
    Pencil,
    LineIncidence,
    LineSelf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ContactType {
    A0,
    A1,
    A2,
    A3,
    /// `A_k` with `k >= 4`.
    AkHigher,
    D4,
    Degenerate,
}

impl ContactType {
    fn from_a(k: usize) -> Self {
        match k {
            0 => ContactType::A0,
            1 => ContactType::A1,
            2 => ContactType::A2,
            3 => ContactType::A3,
            _ => ContactType::AkHigher,
        }
    }

    /// True for every type other than `A0`.
    pub fn is_singular(&self) -> bool {
        *self != ContactType::A0
    }
}

/// The model object a contact was measured against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ModelObject {
    Point([f64; 3]),
    Plane(Plane<f64>),
    Covector([f64; 3]),
    PointInPlane { point: [f64; 3], plane: Plane<f64> },
    Line(Line<f64>),
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub object: ModelObject,
    pub u: f64,
    pub v: f64,
    pub line: Line<f64>,
}

/// Affine frame `x -> A x + T` in which the criteria were read.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Frame {
    pub a: Mat3<f64>,
    pub t: Vec3<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContactReport {
    pub model: ContactModel,
    /// Contact class computed from the germ.
    #[serde(rename = "type")]
    pub kind: ContactType,
    /// Class read off closed-form jet criteria, where such criteria exist.
    pub jet_verdict: Option<ContactType>,
    /// Fold/cusp recognition, for the direction map only.
    pub morin: Option<MorinKind>,
    pub witness: Witness,
    /// Named values of the criteria that were evaluated.
    pub criteria: BTreeMap<String, f64>,
    pub normalization: Option<Frame>,
}

const ORDER: usize = tol::RECOGNITION_ORDER + 1;

fn germ_scale(g: &[Series<f64>]) -> f64 {
    g.iter().map(|s| s.max_abs()).fold(1.0, f64::max)
}

/// Composes a two-variable germ with the linear substitution
/// `(u, v) = x e0 + y e1`.
fn rotate(f: &Series<f64>, e0: [f64; 2], e1: [f64; 2]) -> Series<f64> {
    let x = Series::variable(2, f.order(), 0, 0.0);
    let y = Series::variable(2, f.order(), 1, 0.0);
    let u = &x.scale(&e0[0]) + &y.scale(&e1[0]);
    let v = &x.scale(&e0[1]) + &y.scale(&e1[1]);
    f.compose(&[u, v])
}

/// First order `k >= 1` with a coefficient above `tol` in a one-variable
/// series.
fn first_order(s: &Series<f64>, tol: f64) -> Option<usize> {
    (1..=s.order()).find(|&k| s.coeff(&[k as u8]).abs() > tol)
}

fn cubic_discriminant(c: [f64; 4]) -> f64 {
    let [a, b, cc, d] = c;
    b * b * cc * cc - 4.0 * a * cc.powi(3) - 4.0 * b.powi(3) * d + 18.0 * a * b * cc * d - 27.0 * a * a * d * d
}

/// Contact class of a function germ `f: (R^2, 0) -> (R, 0)`.
pub fn classify_function_germ(f: &Series<f64>) -> (ContactType, BTreeMap<String, f64>) {
    let f = f.displacement();
    let scale = germ_scale(std::slice::from_ref(&f));
    let tol = tol::CONTACT * scale;
    let mut crit = BTreeMap::new();
    let g = f.gradient();
    crit.insert("gradient_norm".into(), g[0].hypot(g[1]));
    if g[0].hypot(g[1]) > tol {
        return (ContactType::A0, crit);
    }
    let h = f.hessian();
    let hm = Matrix2::new(h[0][0], h[0][1], h[1][0], h[1][1]);
    crit.insert("hessian_det".into(), hm.determinant());
    let eig = SymmetricEigen::new(hm);
    let (small, big) = if eig.eigenvalues[0].abs() <= eig.eigenvalues[1].abs() { (0, 1) } else { (1, 0) };
    let lam = [eig.eigenvalues[small], eig.eigenvalues[big]];
    if lam[0].abs() > tol {
        return (ContactType::A1, crit);
    }
    if lam[1].abs() <= tol {
        let c = [f.coeff(&[3, 0]), f.coeff(&[2, 1]), f.coeff(&[1, 2]), f.coeff(&[0, 3])];
        let disc = cubic_discriminant(c);
        crit.insert("cubic_discriminant".into(), disc);
        let kind = if disc.abs() > tol * scale.powi(3) { ContactType::D4 } else { ContactType::Degenerate };
        return (kind, crit);
    }
    let col = |k: usize| [eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)]];
    let ft = rotate(&f, col(small), col(big));
    let Ok(y) = ft.derivative(1).displacement().solve_implicit(1, 0.0) else {
        return (ContactType::Degenerate, crit);
    };
    let x = Series::variable(1, y.order(), 0, 0.0);
    let r = ft.compose(&[x, y]);
    match first_order(&r, tol) {
        Some(k) => {
            crit.insert("reduced_order".into(), k as f64);
            crit.insert("reduced_coefficient".into(), r.coeff(&[k as u8]));
            (ContactType::from_a(k - 1), crit)
        }
        None => (ContactType::Degenerate, crit),
    }
}

fn rank_and_kernel(dg: &[[f64; 2]], tol: f64) -> (usize, [f64; 2]) {
    let m = DMatrix::from_fn(dg.len(), 2, |r, c| dg[r][c]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.unwrap();
    let sv = &svd.singular_values;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    let k = if sv[0] >= sv[1] { 1 } else { 0 };
    (rank, [vt[(k, 0)], vt[(k, 1)]])
}

/// Contact class of a map germ `g: (R^2, 0) -> (R^m, 0)` with `m >= 2`.
pub fn classify_map_germ(g: &[Series<f64>]) -> (ContactType, BTreeMap<String, f64>) {
    let g: Vec<Series<f64>> = g.iter().map(|s| s.displacement()).collect();
    let scale = germ_scale(&g);
    let tol = tol::CONTACT * scale;
    let mut crit = BTreeMap::new();
    let dg: Vec<[f64; 2]> = g.iter().map(|s| {
        let d = s.gradient();
        [d[0], d[1]]
    }).collect();
    let (rank, kernel) = rank_and_kernel(&dg, tol);
    crit.insert("rank".into(), rank as f64);
    if rank == 2 {
        return (ContactType::A0, crit);
    }
    if rank == 0 {
        return (ContactType::Degenerate, crit);
    }
    let normal = [-kernel[1], kernel[0]];
    let gt: Vec<Series<f64>> = g.iter().map(|s| rotate(s, kernel, normal)).collect();
    let r = (0..gt.len())
        .max_by(|&a, &b| gt[a].coeff(&[0, 1]).abs().total_cmp(&gt[b].coeff(&[0, 1]).abs()))
        .unwrap();
    let Ok(y) = gt[r].solve_implicit(1, 0.0) else {
        return (ContactType::Degenerate, crit);
    };
    let x = Series::variable(1, y.order(), 0, 0.0);
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in gt.iter().enumerate() {
        if i == r {
            continue;
        }
        let h = s.compose(&[x.clone(), y.clone()]);
        if let Some(k) = first_order(&h, tol) {
            if best.map(|(b, _)| k < b).unwrap_or(true) {
                best = Some((k, h.coeff(&[k as u8])));
            }
        }
    }
    match best {
        Some((k, c)) => {
            crit.insert("reduced_order".into(), k as f64);
            crit.insert("reduced_coefficient".into(), c);
            (ContactType::from_a(k - 1), crit)
        }
        None => (ContactType::Degenerate, crit),
    }
}

fn incidence_tol(x: &[f64]) -> f64 {
    tol::ON_QUADRIC * (1.0 + linalg::norm(x))
}

fn report(
    model: ContactModel,
    z: &Congruence<f64>,
    u: f64,
    v: f64,
    object: ModelObject,
    (kind, criteria): (ContactType, BTreeMap<String, f64>),
) -> Result<ContactReport> {
    Ok(ContactReport {
        model,
        kind,
        jet_verdict: None,
        morin: None,
        witness: Witness { object, u, v, line: z.line_at(&u, &v)? },
        criteria,
        normalization: None,
    })
}

/// Lines through a point `p`, which must lie on `L(u, v)`.
pub fn contact_with_point_family(z: &Congruence<f64>, u: f64, v: f64, p: [f64; 3]) -> Result<ContactReport> {
    let line = z.line_at(&u, &v)?;
    if line.distance_to(&p) > incidence_tol(&p) {
        return Err(Error::NotIncident);
    }
    let s = z.series_at(&u, &v, ORDER)?;
    let t = p[2] - z.height();
    let g = [
        &s[2] + &s[0].scale(&t),
        &s[3] + &s[1].scale(&t),
    ];
    let g = [g[0].add_constant(&-p[0]), g[1].add_constant(&-p[1])];
    let mut rep = report(ContactModel::Point, z, u, v, ModelObject::Point(p), classify_map_germ(&g))?;
    let d: Vec<Vec<f64>> = g.iter().map(|s| s.gradient()).collect();
    let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
    rep.criteria.insert("jacobian_det".into(), det);
    let scale = germ_scale(&g);
    if det.abs() > tol::CONTACT * scale * scale {
        rep.jet_verdict = Some(ContactType::A0);
    } else {
        let rows: Vec<[f64; 2]> = d.iter().map(|r| [r[0], r[1]]).collect();
        let (_, k) = rank_and_kernel(&rows, tol::CONTACT * scale);
        let n = [-k[1], k[0]];
        let gn = [d[0][0] * n[0] + d[0][1] * n[1], d[1][0] * n[0] + d[1][1] * n[1]];
        let second = |s: &Series<f64>| {
            let h = s.hessian();
            h[0][0] * k[0] * k[0] + 2.0 * h[0][1] * k[0] * k[1] + h[1][1] * k[1] * k[1]
        };
        let gkk = [second(&g[0]), second(&g[1])];
        let cusp = gn[0] * gkk[1] - gn[1] * gkk[0];
        rep.criteria.insert("cusp_expression".into(), cusp);
        if cusp.abs() > tol::CONTACT * scale * scale {
            rep.jet_verdict = Some(ContactType::A1);
        }
    }
    Ok(rep)
}

/// Lines in a plane `P`, which must contain `L(u, v)`.
pub fn contact_with_plane_family(z: &Congruence<f64>, u: f64, v: f64, plane: &Plane<f64>) -> Result<ContactReport> {
    let line = z.line_at(&u, &v)?;
    if !plane.contains_line(&line, incidence_tol(&line.b)) {
        return Err(Error::NotContained);
    }
    let s = z.series_at(&u, &v, ORDER)?;
    let c = plane.c;
    let ca = &(&s[0].scale(&c[0]) + &s[1].scale(&c[1])).add_constant(&c[2]);
    let cb = &(&s[2].scale(&c[0]) + &s[3].scale(&c[1])).add_constant(&(c[2] * z.height() - plane.d));
    let germ = [ca.clone(), cb.clone()];
    let mut rep = report(ContactModel::Plane, z, u, v, ModelObject::Plane(plane.clone()), classify_map_germ(&germ))?;
    rep.jet_verdict = rep.criteria.get("rank").map(|&r| if r == 2.0 { ContactType::A0 } else { rep.kind });
    Ok(rep)
}

/// Singularities of the direction map `(u, v) -> (a1, a2)`.
pub fn classify_direction_map(z: &Congruence<f64>, u: f64, v: f64) -> Result<ContactReport> {
    let s = z.series_at(&u, &v, ORDER)?;
    let g = [s[0].displacement(), s[1].displacement()];
    let mut rep = report(ContactModel::Direction, z, u, v, ModelObject::None, classify_map_germ(&g))?;
    let m = morin_classify(&[g[0].truncate(tol::RECOGNITION_ORDER), g[1].truncate(tol::RECOGNITION_ORDER)]);
    rep.morin = Some(m);
    rep.jet_verdict = Some(match m {
        MorinKind::Regular => ContactType::A0,
        MorinKind::Fold => ContactType::A1,
        MorinKind::Cusp => ContactType::A2,
        _ => ContactType::Degenerate,
    });
    let d: Vec<Vec<f64>> = g.iter().map(|x| x.gradient()).collect();
    rep.criteria.insert("jacobian_det".into(), d[0][0] * d[1][1] - d[0][1] * d[1][0]);
    Ok(rep)
}

/// Lines parallel to the planes `alpha(x) = const`.
pub fn contact_parallel_planes(z: &Congruence<f64>, u: f64, v: f64, alpha: [f64; 3]) -> Result<ContactReport> {
    if linalg::norm(&alpha) == 0.0 {
        return Err(Error::ZeroVector);
    }
    let s = z.series_at(&u, &v, ORDER)?;
    let f = (&s[0].scale(&alpha[0]) + &s[1].scale(&alpha[1])).add_constant(&alpha[2]);
    if f.value().abs() > incidence_tol(&alpha) {
        return Err(Error::NotContained);
    }
    let mut rep = report(ContactModel::ParallelPlanes, z, u, v, ModelObject::Covector(alpha), classify_function_germ(&f))?;
    let g = f.gradient();
    let h = f.hessian();
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let scale = germ_scale(std::slice::from_ref(&f));
    rep.jet_verdict = Some(if g[0].hypot(g[1]) > tol::CONTACT * scale {
        ContactType::A0
    } else if det.abs() > tol::CONTACT * scale * scale {
        ContactType::A1
    } else {
        ContactType::Degenerate
    });
    Ok(rep)
}

/// An affine frame sending `p` to the origin, `plane` to `x2 = 0` and the
/// direction `a` to the `x3` axis.
fn pencil_frame(p: &[f64; 3], plane: &Plane<f64>, a: &[f64; 3]) -> Result<Frame> {
    let c = plane.c;
    let e1 = linalg::cross(&c, a);
    let b = [[e1[0], c[0], a[0]], [e1[1], c[1], a[1]], [e1[2], c[2], a[2]]];
    let m = linalg::inverse3(&b, tol::SINGULAR_MATRIX).ok_or(Error::SingularMatrix)?;
    let t = linalg::scale3(&-1.0, &linalg::mat_vec(&m, p));
    Ok(Frame { a: m, t })
}

/// Lines through `p` inside `plane`; `p` must lie on `L(u, v)` and the
/// plane must contain it.
pub fn contact_pencil(z: &Congruence<f64>, u: f64, v: f64, p: [f64; 3], plane: &Plane<f64>) -> Result<ContactReport> {
    let line = z.line_at(&u, &v)?;
    if line.distance_to(&p) > incidence_tol(&p) {
        return Err(Error::NotIncident);
    }
    if !plane.contains_line(&line, incidence_tol(&line.b)) {
        return Err(Error::NotContained);
    }
    let (a, _) = z.direction_base(&u, &v)?;
    let frame = pencil_frame(&p, plane, &a)?;
    let img = z.affine_image(&frame.a, &frame.t)?;
    let s = img.series_at(&u, &v, ORDER)?;
    let germ = [s[1].clone(), s[2].clone(), s[3].clone()];
    let object = ModelObject::PointInPlane { point: p, plane: plane.clone() };
    let mut rep = report(ContactModel::Pencil, z, u, v, object, classify_map_germ(&germ))?;
    rep.normalization = Some(frame);
    Ok(rep)
}

/// `det[a(u, v); a_L; b(u, v) - b_L]` as a series around `(u, v)`.
fn incidence_function(z: &Congruence<f64>, u: f64, v: f64, l: &Line<f64>) -> Result<Series<f64>> {
    let s = z.series_at(&u, &v, ORDER)?;
    let one = Series::constant(2, ORDER, 1.0);
    let a = [s[0].clone(), s[1].clone(), one];
    let b = [s[2].add_constant(&-l.b[0]), s[3].add_constant(&-l.b[1]), Series::constant(2, ORDER, z.height() - l.b[2])];
    let al = l.a;
    // expansion along the constant middle row
    let m0 = &(&a[1] * &b[2]) - &(&a[2] * &b[1]);
    let m1 = &(&a[0] * &b[2]) - &(&a[2] * &b[0]);
    let m2 = &(&a[0] * &b[1]) - &(&a[1] * &b[0]);
    Ok(&(&m1.scale(&al[1]) - &m0.scale(&al[0])) - &m2.scale(&al[2]))
}

/// Lines meeting a fixed line `L` that meets `L(u, v)`.
pub fn contact_line_incidence(z: &Congruence<f64>, u: f64, v: f64, l: &Line<f64>) -> Result<ContactReport> {
    let line = z.line_at(&u, &v)?;
    let scale = 1.0 + linalg::norm(&line.b) + linalg::norm(&l.b);
    match line_incidence(&line, l, tol::ON_QUADRIC * scale) {
        Incidence::Equal => return Err(Error::EqualLines),
        Incidence::Skew => return Err(Error::NotIncident),
        _ => {}
    }
    let f = incidence_function(z, u, v, l)?;
    report(ContactModel::LineIncidence, z, u, v, ModelObject::Line(l.clone()), classify_function_germ(&f))
}

/// Self-contact: lines of the congruence meeting `L(u, v)` itself.
pub fn contact_line_self(z: &Congruence<f64>, u: f64, v: f64) -> Result<ContactReport> {
    let line = z.line_at(&u, &v)?;
    let (a, b) = z.direction_base(&u, &v)?;
    let l = Line { a, b, axis: line.axis, reversed: false };
    let f = incidence_function(z, u, v, &l)?;
    let mut rep = report(ContactModel::LineSelf, z, u, v, ModelObject::None, classify_function_germ(&f))?;
    let j = z.jet(&u, &v, 1)?;
    let cls = classify_point(&j);
    rep.criteria.insert("delta".into(), cls.delta);
    rep.jet_verdict = match cls.kind {
        PointKind::Hyperbolic | PointKind::Elliptic => Some(ContactType::A1),
        PointKind::Parabolic => {
            match normalize_at_point(z, &u, &v, NormalizeOptions::new(NormalMode::NonElliptic)) {
                Ok(n) => {
                    let t = n.congruence.jet(&0.0, &0.0, 2)?.taylor();
                    let b2uu = 2.0 * t.get(2, 2, 0);
                    rep.criteria.insert("b2uu".into(), b2uu);
                    rep.normalization = Some(Frame { a: n.a, t: n.t });
                    let jscale = germ_scale(&n.congruence.series_at(&0.0, &0.0, 2)?);
                    Some(if b2uu.abs() > tol::CONTACT * jscale { ContactType::A2 } else { ContactType::A3 })
                }
                Err(_) => None,
            }
        }
    };
    Ok(rep)
}
