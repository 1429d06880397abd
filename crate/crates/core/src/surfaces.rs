//! Exponential maps and the surfaces they produce: focal and plane-focal
//! sheets, the middle surface, the parabolic curve, and singularity tests.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::congruence::{normalize_at_point, Congruence, Domain, NormalMode, NormalizeOptions};
use crate::error::{Error, Result};
use crate::invariants::{self, classify_point, focal_data, FocalRoots, PointKind};
use crate::linalg::{self, cross, Mat3, Vec3};
use crate::scalar::Scalar;
use crate::series::Series;
use crate::tol;

/// A `nu x nv` parameter grid including both endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub nu: usize,
    pub nv: usize,
    pub domain: Domain,
}

impl Grid {
    pub fn new(nu: usize, nv: usize, domain: Domain) -> Self {
        assert!(nu >= 2 && nv >= 2, "grid needs at least two nodes per side");
        Grid { nu, nv, domain }
    }

    pub fn u(&self, i: usize) -> f64 {
        let d = &self.domain;
        if i + 1 == self.nu {
            return d.umax;
        }
        d.umin + (d.umax - d.umin) * i as f64 / (self.nu - 1) as f64
    }

    pub fn v(&self, j: usize) -> f64 {
        let d = &self.domain;
        if j + 1 == self.nv {
            return d.vmax;
        }
        d.vmin + (d.vmax - d.vmin) * j as f64 / (self.nv - 1) as f64
    }

    /// Node index, `u` fastest.
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nu + i
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nu, k / self.nu)
    }

    fn neighbours(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.coords(k);
        let mut out = Vec::with_capacity(4);
        if i > 0 {
            out.push(self.node(i - 1, j));
        }
        if i + 1 < self.nu {
            out.push(self.node(i + 1, j));
        }
        if j > 0 {
            out.push(self.node(i, j - 1));
        }
        if j + 1 < self.nv {
            out.push(self.node(i, j + 1));
        }
        out.into_iter()
    }
}

/// Quad mesh sampled over a grid; nodes that failed are holes.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices, counter-clockwise in `(u, v)`.
    pub faces: Vec<[usize; 4]>,
    /// Parameter point of each vertex.
    pub params: Vec<[f64; 2]>,
    pub tags: Vec<PointKind>,
    /// Per-vertex scalar (line parameter `t` on focal sheets); may be empty.
    pub values: Vec<f64>,
}

impl Mesh {
    fn from_grid(grid: &Grid, nodes: &[Option<([f64; 3], PointKind, Option<f64>)>]) -> Mesh {
        let mut mesh = Mesh::default();
        let mut index = vec![usize::MAX; nodes.len()];
        for (k, n) in nodes.iter().enumerate() {
            if let Some((p, tag, val)) = n {
                if p.iter().all(|x| x.is_finite()) {
                    index[k] = mesh.vertices.len();
                    mesh.vertices.push(*p);
                    let (i, j) = grid.coords(k);
                    mesh.params.push([grid.u(i), grid.v(j)]);
                    mesh.tags.push(*tag);
                    if let Some(v) = val {
                        mesh.values.push(*v);
                    }
                }
            }
        }
        if mesh.values.len() != mesh.vertices.len() {
            mesh.values.clear();
        }
        for j in 0..grid.nv - 1 {
            for i in 0..grid.nu - 1 {
                let q = [grid.node(i, j), grid.node(i + 1, j), grid.node(i + 1, j + 1), grid.node(i, j + 1)];
                if q.iter().all(|&k| index[k] != usize::MAX) {
                    mesh.faces.push(q.map(|k| index[k]));
                }
            }
        }
        mesh
    }

    /// Vertex nearest to a parameter point.
    pub fn vertex_at(&self, u: f64, v: f64) -> Option<usize> {
        (0..self.params.len()).min_by(|&a, &b| {
            let da = (self.params[a][0] - u).hypot(self.params[a][1] - v);
            let db = (self.params[b][0] - u).hypot(self.params[b][1] - v);
            da.partial_cmp(&db).unwrap()
        })
    }
}

/// `b(u, v) + t a(u, v)`.
pub fn exponential_map<T: Scalar>(z: &Congruence<T>, u: &T, v: &T, t: &T) -> Result<Vec3<T>> {
    let (a, b) = z.direction_base(u, v)?;
    Ok(linalg::add3(&b, &linalg::scale3(t, &a)))
}

struct NodeFocal {
    kind: PointKind,
    roots: [Option<f64>; 2],
    points: [Option<[f64; 3]>; 2],
    planes: [Option<crate::linespace::Plane<f64>>; 2],
}

fn node_focal(z: &Congruence<f64>, u: f64, v: f64) -> Option<NodeFocal> {
    let j = z.jet(&u, &v, 1).ok()?;
    let fd = focal_data(&j).ok()?;
    let kind = classify_point(&j).kind;
    let mut roots = [None, None];
    let mut points = [None, None];
    let mut planes = [None, None];
    let els = &fd.elements;
    match fd.roots {
        FocalRoots::Conjugate { .. } => {}
        FocalRoots::Double(t) => {
            roots = [Some(t), Some(t)];
            points = [els[0].point, els[0].point];
            planes = [els[0].plane.clone(), els[0].plane.clone()];
        }
        FocalRoots::Distinct(..) | FocalRoots::OneInfinite(_) => {
            for (k, e) in els.iter().enumerate().take(2) {
                roots[k] = e.param.finite();
                points[k] = e.point;
                planes[k] = e.plane.clone();
            }
        }
    }
    Some(NodeFocal { kind, roots, points, planes })
}

/// Sheet assignment by continuation: `true` swaps the two roots at a node.
fn track_sheets(grid: &Grid, roots: &[Option<[Option<f64>; 2]>]) -> Vec<bool> {
    let mut swap = vec![false; roots.len()];
    let mut seen = vec![false; roots.len()];
    let has_real = |k: usize| roots[k].map(|r| r[0].is_some() || r[1].is_some()).unwrap_or(false);
    for seed in 0..roots.len() {
        if seen[seed] || !has_real(seed) {
            continue;
        }
        seen[seed] = true;
        let mut queue = VecDeque::from([seed]);
        while let Some(m) = queue.pop_front() {
            let rm = roots[m].unwrap();
            let rm = if swap[m] { [rm[1], rm[0]] } else { rm };
            for n in grid.neighbours(m) {
                if seen[n] || !has_real(n) {
                    continue;
                }
                let rn = roots[n].unwrap();
                let cost = |x: [Option<f64>; 2]| -> f64 {
                    (0..2)
                        .map(|s| match (x[s], rm[s]) {
                            (Some(a), Some(b)) => (a - b).abs(),
                            (None, None) => 0.0,
                            _ => 1e3,
                        })
                        .sum()
                };
                swap[n] = cost([rn[1], rn[0]]) < cost(rn);
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    swap
}

fn sample_nodes(z: &Congruence<f64>, grid: &Grid) -> Vec<Option<NodeFocal>> {
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = grid.coords(k);
            node_focal(z, grid.u(i), grid.v(j))
        })
        .collect()
}

/// The two focal sheets over a grid; elliptic nodes are holes.
pub fn sample_focal_surface(z: &Congruence<f64>, grid: &Grid) -> (Mesh, Mesh) {
    let nodes = sample_nodes(z, grid);
    let roots: Vec<_> = nodes.iter().map(|n| n.as_ref().map(|n| n.roots)).collect();
    let swap = track_sheets(grid, &roots);
    let sheet = |s: usize| -> Mesh {
        let vals: Vec<_> = nodes
            .iter()
            .enumerate()
            .map(|(k, n)| {
                let n = n.as_ref()?;
                let idx = if swap[k] { 1 - s } else { s };
                Some((n.points[idx]?, n.kind, n.roots[idx]))
            })
            .collect();
        Mesh::from_grid(grid, &vals)
    };
    (sheet(0), sheet(1))
}

/// Focal planes as points of plane space in the affine chart `c[axis] = 1`,
/// vertex `(other c-entry, c3, d)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlaneSheets {
    pub sheets: [Mesh; 2],
    /// 0 for `c1 = 1`, 1 for `c2 = 1`.
    pub axis: usize,
}

pub fn sample_plane_focal_surface(z: &Congruence<f64>, grid: &Grid) -> PlaneSheets {
    let nodes = sample_nodes(z, grid);
    let roots: Vec<_> = nodes.iter().map(|n| n.as_ref().map(|n| n.roots)).collect();
    let swap = track_sheets(grid, &roots);
    let axis = nodes
        .iter()
        .flatten()
        .flat_map(|n| n.planes.iter().flatten())
        .next()
        .map(|p| if p.c[0].abs() >= p.c[1].abs() { 0 } else { 1 })
        .unwrap_or(0);
    let other = 1 - axis;
    let sheet = |s: usize| -> Mesh {
        let vals: Vec<_> = nodes
            .iter()
            .enumerate()
            .map(|(k, n)| {
                let n = n.as_ref()?;
                let idx = if swap[k] { 1 - s } else { s };
                let p = n.planes[idx].as_ref()?;
                let ck = p.c[axis];
                if ck.abs() <= 1e-9 {
                    return None;
                }
                Some(([p.c[other] / ck, p.c[2] / ck, p.d / ck], n.kind, n.roots[idx]))
            })
            .collect();
        Mesh::from_grid(grid, &vals)
    };
    PlaneSheets { sheets: [sheet(0), sheet(1)], axis }
}

/// Middle points over a grid, defined on elliptic nodes too.
pub fn sample_middle_surface(z: &Congruence<f64>, grid: &Grid) -> Mesh {
    let vals: Vec<_> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = grid.coords(k);
            let jet = z.jet(&grid.u(i), &grid.v(j), 1).ok()?;
            let p = invariants::middle_point(&jet).ok()?;
            Some((p, classify_point(&jet).kind, None))
        })
        .collect();
    Mesh::from_grid(grid, &vals)
}

/// A polyline in the parameter plane with per-point residuals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanarCurve {
    pub points: Vec<[f64; 2]>,
    pub residuals: Vec<f64>,
    pub branch: usize,
}

impl PlanarCurve {
    /// Distance from a point to the polyline.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        let seg = |a: [f64; 2], b: [f64; 2]| {
            let d = [b[0] - a[0], b[1] - a[1]];
            let l2 = d[0] * d[0] + d[1] * d[1];
            let s = if l2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) };
            (a[0] + s * d[0] - p[0]).hypot(a[1] + s * d[1] - p[1])
        };
        if self.points.len() == 1 {
            return seg(self.points[0], self.points[0]);
        }
        self.points.windows(2).map(|w| seg(w[0], w[1])).fold(f64::INFINITY, f64::min)
    }
}

/// The discriminant and its gradient at a point.
pub fn delta_with_gradient<T: Scalar>(z: &Congruence<T>, u: f64, v: f64) -> Result<(f64, [f64; 2])> {
    let j = z.jet(&T::from_f64(u), &T::from_f64(v), 2)?;
    let d = invariants::series_invariants(&j).delta.to_f64();
    let g = d.gradient();
    Ok((d.value(), [g[0], g[1]]))
}

fn delta_at(z: &Congruence<f64>, u: f64, v: f64) -> Result<f64> {
    let j = z.jet(&u, &v, 1)?;
    Ok(invariants::discriminant(&j))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum EdgeId {
    /// `(i, j)` to `(i + 1, j)`.
    H(usize, usize),
    /// `(i, j)` to `(i, j + 1)`.
    V(usize, usize),
}

fn refine_edge(z: &Congruence<f64>, p0: [f64; 2], p1: [f64; 2], f0: f64, f1: f64) -> Result<([f64; 2], f64)> {
    let at = |s: f64| [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let pos0 = f0 >= 0.0;
    debug_assert!(pos0 != (f1 >= 0.0));
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p = at(mid);
        let f = delta_at(z, p[0], p[1])?;
        if (f >= 0.0) == pos0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let mut s = 0.5 * (lo + hi);
    // Newton polish along the edge, kept inside the bracket
    let dir = [p1[0] - p0[0], p1[1] - p0[1]];
    for _ in 0..3 {
        let p = at(s);
        let (f, g) = delta_with_gradient(z, p[0], p[1])?;
        let df = g[0] * dir[0] + g[1] * dir[1];
        if df == 0.0 || f == 0.0 {
            break;
        }
        let next = s - f / df;
        if !(lo..=hi).contains(&next) {
            break;
        }
        s = next;
    }
    let p = at(s);
    Ok((p, delta_at(z, p[0], p[1])?.abs()))
}

/// Zero set of the discriminant by marching squares with refined edge
/// crossings. Zero node values count as positive.
pub fn trace_parabolic_curve(z: &Congruence<f64>, domain: Domain, nu: usize, nv: usize) -> Result<Vec<PlanarCurve>> {
    let grid = Grid::new(nu, nv, domain);
    let vals: Vec<Result<(f64, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = grid.coords(k);
            let jet = z.jet(&grid.u(i), &grid.v(j), 1)?;
            let b = invariants::bde_coefficients(&jet);
            let band = invariants::parabolic_band(&b);
            Ok((invariants::discriminant(&jet), band))
        })
        .collect();
    let vals: Vec<(f64, f64)> = vals.into_iter().collect::<Result<_>>()?;
    let f = |i: usize, j: usize| vals[grid.node(i, j)].0;
    let zero = |i: usize, j: usize| {
        let (d, band) = vals[grid.node(i, j)];
        d.abs() <= band
    };
    let pos = |i: usize, j: usize| f(i, j) >= 0.0;
    let node_uv = |i: usize, j: usize| [grid.u(i), grid.v(j)];

    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for j in 0..nv - 1 {
        for i in 0..nu - 1 {
            if zero(i, j) && zero(i + 1, j) && zero(i + 1, j + 1) && zero(i, j + 1) {
                return Err(Error::DegenerateField);
            }
            let s = [pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1)];
            let edges = [EdgeId::H(i, j), EdgeId::V(i + 1, j), EdgeId::H(i, j + 1), EdgeId::V(i, j)];
            let crossing = [s[0] != s[1], s[1] != s[2], s[3] != s[2], s[0] != s[3]];
            let hits: Vec<usize> = (0..4).filter(|&k| crossing[k]).collect();
            match hits.len() {
                2 => segments.push((edges[hits[0]], edges[hits[1]])),
                4 => {
                    let cu = 0.5 * (grid.u(i) + grid.u(i + 1));
                    let cv = 0.5 * (grid.v(j) + grid.v(j + 1));
                    let centre = delta_at(z, cu, cv)? >= 0.0;
                    if centre == s[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut edge_ids: Vec<EdgeId> = segments.iter().flat_map(|&(a, b)| [a, b]).collect();
    edge_ids.sort();
    edge_ids.dedup();
    let refined: Vec<Result<([f64; 2], f64)>> = edge_ids
        .par_iter()
        .map(|&e| {
            let (a, b) = match e {
                EdgeId::H(i, j) => ((i, j), (i + 1, j)),
                EdgeId::V(i, j) => ((i, j), (i, j + 1)),
            };
            refine_edge(z, node_uv(a.0, a.1), node_uv(b.0, b.1), f(a.0, a.1), f(b.0, b.1))
        })
        .collect();
    let mut point: HashMap<EdgeId, ([f64; 2], f64)> = HashMap::new();
    for (e, r) in edge_ids.iter().zip(refined) {
        point.insert(*e, r?);
    }

    let mut adj: BTreeMap<EdgeId, Vec<usize>> = BTreeMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        adj.entry(a).or_default().push(k);
        adj.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();
    let walk = |start: EdgeId, used: &mut Vec<bool>| -> Vec<EdgeId> {
        let mut chain = vec![start];
        let mut cur = start;
        while let Some(&k) = adj[&cur].iter().find(|&&k| !used[k]) {
            used[k] = true;
            let (a, b) = segments[k];
            cur = if a == cur { b } else { a };
            chain.push(cur);
        }
        chain
    };
    let ends: Vec<EdgeId> = adj.iter().filter(|(_, s)| s.len() == 1).map(|(e, _)| *e).collect();
    let mut chains = Vec::new();
    for e in ends {
        if adj[&e].iter().all(|&k| used[k]) {
            continue;
        }
        chains.push(walk(e, &mut used));
    }
    for k in 0..segments.len() {
        if !used[k] {
            chains.push(walk(segments[k].0, &mut used));
        }
    }
    for chain in chains {
        let mut pts: Vec<[f64; 2]> = Vec::new();
        let mut res = Vec::new();
        for e in chain {
            let (p, r) = point[&e];
            if let Some(last) = pts.last() {
                let scale = 1.0 + last[0].abs().max(last[1].abs());
                if (p[0] - last[0]).hypot(p[1] - last[1]) <= 1e-12 * scale {
                    continue;
                }
            }
            pts.push(p);
            res.push(r);
        }
        if !pts.is_empty() {
            curves.push(PlanarCurve { points: pts, residuals: res, branch: curves.len() });
        }
    }
    Ok(curves)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MorinKind {
    Regular,
    Fold,
    Cusp,
    Swallowtail,
    Degenerate,
}

fn det_series(m: &[Vec<Series<f64>>]) -> Series<f64> {
    match m.len() {
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        3 => {
            let minor = |r: usize, c: usize| -> Series<f64> {
                let rows: Vec<usize> = (0..3).filter(|&x| x != r).collect();
                let cols: Vec<usize> = (0..3).filter(|&x| x != c).collect();
                &(&m[rows[0]][cols[0]] * &m[rows[1]][cols[1]]) - &(&m[rows[0]][cols[1]] * &m[rows[1]][cols[0]])
            };
            let t0 = &m[0][0] * &minor(0, 0);
            let t1 = &m[0][1] * &minor(0, 1);
            let t2 = &m[0][2] * &minor(0, 2);
            &(&t0 - &t1) + &t2
        }
        _ => unreachable!("maps of two or three variables"),
    }
}

/// Columns of the adjugate, as series.
fn adjugate_columns(m: &[Vec<Series<f64>>]) -> Vec<Vec<Series<f64>>> {
    let n = m.len();
    if n == 2 {
        // adj = [[d, -b], [-c, a]]
        return vec![vec![m[1][1].clone(), -&m[1][0]], vec![-&m[0][1], m[0][0].clone()]];
    }
    let cof = |r: usize, c: usize| -> Series<f64> {
        let rows: Vec<usize> = (0..3).filter(|&x| x != r).collect();
        let cols: Vec<usize> = (0..3).filter(|&x| x != c).collect();
        let d = &(&m[rows[0]][cols[0]] * &m[rows[1]][cols[1]]) - &(&m[rows[0]][cols[1]] * &m[rows[1]][cols[0]]);
        if (r + c).is_multiple_of(2) {
            d
        } else {
            -&d
        }
    };
    // adj[i][j] = cof(j, i); column j is (cof(j, 0), cof(j, 1), cof(j, 2))
    (0..3).map(|j| (0..3).map(|i| cof(j, i)).collect()).collect()
}

fn rank_of(vectors: &[Vec<f64>], rel: f64) -> usize {
    let rows = vectors.len();
    let cols = vectors[0].len();
    let m = nalgebra::DMatrix::from_fn(rows, cols, |r, c| vectors[r][c]);
    let sv = m.svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * smax).count()
}

/// Morin recognition of an equidimensional map germ given as series
/// (2 or 3 components in as many variables).
pub fn morin_classify(f: &[Series<f64>]) -> MorinKind {
    let n = f.len();
    assert!(n == 2 || n == 3);
    let df: Vec<Vec<Series<f64>>> = f.iter().map(|fi| (0..n).map(|j| fi.derivative(j)).collect()).collect();
    let d0: Vec<Vec<f64>> = df.iter().map(|r| r.iter().map(|s| s.value()).collect()).collect();
    let sigma = d0.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if sigma == 0.0 {
        return MorinKind::Degenerate;
    }
    let lambda = det_series(&df);
    if lambda.value().abs() > tol::MORIN * sigma.powi(n as i32) {
        return MorinKind::Regular;
    }
    if rank_of(&d0, tol::MORIN) < n - 1 {
        return MorinKind::Degenerate;
    }
    let grad = |s: &Series<f64>| s.gradient();
    let gl = grad(&lambda);
    let gl_norm = linalg::norm(&gl);
    if gl_norm <= tol::MORIN * sigma.powi(n as i32 - 1) {
        return MorinKind::Degenerate;
    }
    let cols = adjugate_columns(&df);
    let best = (0..n)
        .max_by(|&a, &b| {
            let na = linalg::norm(&cols[a].iter().map(|s| s.value()).collect::<Vec<_>>());
            let nb = linalg::norm(&cols[b].iter().map(|s| s.value()).collect::<Vec<_>>());
            na.partial_cmp(&nb).unwrap()
        })
        .unwrap();
    let eta_norm = linalg::norm(&cols[best].iter().map(|s| s.value()).collect::<Vec<_>>());
    let eta: Vec<Series<f64>> = cols[best].iter().map(|s| s.scale(&(1.0 / eta_norm))).collect();
    let lam = lambda.scale(&(1.0 / gl_norm));
    let phi1 = lam.lie_derivative(&eta);
    if phi1.value().abs() > tol::MORIN {
        return MorinKind::Fold;
    }
    let phi2 = phi1.lie_derivative(&eta);
    let g1 = grad(&phi1);
    if phi2.value().abs() > tol::MORIN {
        if n == 2 || rank_of(&[grad(&lam), g1], tol::MORIN) == 2 {
            return MorinKind::Cusp;
        }
        return MorinKind::Degenerate;
    }
    if n == 3 {
        let phi3 = phi2.lie_derivative(&eta);
        if phi3.value().abs() > tol::MORIN && rank_of(&[grad(&lam), g1, grad(&phi2)], tol::MORIN) == 3 {
            return MorinKind::Swallowtail;
        }
    }
    MorinKind::Degenerate
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpSingularity {
    pub kind: MorinKind,
    pub location: [f64; 3],
    /// Jacobian determinant of the exponential map at the location.
    pub g: f64,
}

/// The exponential map `(u, v, t) -> b + t a` as three series in the
/// displacement from `(u, v, t)`.
pub(crate) fn exponential_series<T: Scalar>(z: &Congruence<T>, u: &T, v: &T, t: &T, order: usize) -> Result<[Series<T>; 3]> {
    let s = z.series_at(u, v, order)?;
    let ts = Series::variable(3, order, 2, t.clone());
    let w = |k: usize| s[k].widen(3);
    Ok([
        &w(2) + &(&ts * &w(0)),
        &w(3) + &(&ts * &w(1)),
        ts.add_constant(z.height()),
    ])
}

pub fn classify_exponential_singularity(z: &Congruence<f64>, u: f64, v: f64, t: f64) -> Result<ExpSingularity> {
    let e = exponential_series(z, &u, &v, &t, tol::RECOGNITION_ORDER)?;
    let disp: Vec<Series<f64>> = e.iter().map(|s| s.displacement()).collect();
    let df: Vec<Vec<f64>> = disp.iter().map(|s| s.gradient()).collect();
    let g = linalg::det3(&[
        [df[0][0], df[0][1], df[0][2]],
        [df[1][0], df[1][1], df[1][2]],
        [df[2][0], df[2][1], df[2][2]],
    ]);
    Ok(ExpSingularity { kind: morin_classify(&disp), location: [u, v, t], g })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CrossCapVerdict {
    NotSingular,
    CrossCap,
    DegenerateSingular,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCapReport<T> {
    pub verdict: CrossCapVerdict,
    /// `b1uu + b2uv` in the normal form.
    pub immersion_term: T,
    pub f1: T,
    pub f2: T,
    pub a: Mat3<T>,
    pub t: Vec3<T>,
}

/// Middle-surface singularity test at a parabolic point.
pub fn cross_cap_test<T: Scalar>(z: &Congruence<T>, u0: &T, v0: &T) -> Result<CrossCapReport<T>> {
    let j = z.jet(u0, v0, 1)?;
    if classify_point(&j).kind != PointKind::Parabolic {
        return Err(Error::NotParabolic);
    }
    let n = normalize_at_point(z, u0, v0, NormalizeOptions::new(NormalMode::NonElliptic))?;
    let zero = T::zero();
    let tt = n.congruence.jet(&zero, &zero, 3)?.taylor();
    let b = |j: usize, k: usize, i: usize| tt.get(j, k, i);
    let two = T::from_int(2);
    let three = T::from_int(3);
    let four = T::from_int(4);
    let immersion_term = two.clone() * b(1, 2, 0) + b(2, 2, 1);
    let f1 = four.clone() * b(1, 1, 1) * b(1, 3, 1) + four.clone() * b(1, 1, 1) * b(2, 3, 2) - b(1, 2, 1) * b(1, 2, 1)
        + four * b(2, 2, 2) * b(2, 2, 2);
    let f2 = three * b(1, 1, 1) * b(1, 3, 0) + two.clone() * b(1, 1, 1) * b(2, 2, 0) + b(1, 1, 1) * b(2, 3, 1)
        - b(1, 2, 0) * b(1, 2, 1)
        - two * b(1, 2, 0) * b(2, 2, 2);
    let scale = 1.0
        + tt.b1.iter().chain(tt.b2.iter()).flatten().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
    let verdict = if !immersion_term.near_zero(tol::JET_ZERO * scale) {
        CrossCapVerdict::NotSingular
    } else if f1.near_zero(tol::JET_ZERO * scale * scale) || f2.near_zero(tol::JET_ZERO * scale * scale) {
        CrossCapVerdict::DegenerateSingular
    } else {
        CrossCapVerdict::CrossCap
    };
    Ok(CrossCapReport { verdict, immersion_term, f1, f2, a: n.a, t: n.t })
}

/// Jacobian `[[x_u, x_v]; 3]` of the middle surface.
pub fn middle_surface_jacobian<T: Scalar>(z: &Congruence<T>, u: &T, v: &T) -> Result<[[T; 2]; 3]> {
    let j = z.jet(u, v, 2)?;
    let m = invariants::middle_series(&j)?;
    Ok(std::array::from_fn(|i| {
        let g = m[i].gradient();
        [g[0].clone(), g[1].clone()]
    }))
}

/// A surface germ parametrised by two variables, as three series.
struct SurfaceGerm {
    x: [Series<f64>; 3],
}

impl SurfaceGerm {
    fn normal(&self) -> Result<[f64; 3]> {
        let xu: Vec3<f64> = std::array::from_fn(|i| self.x[i].gradient()[0]);
        let xv: Vec3<f64> = std::array::from_fn(|i| self.x[i].gradient()[1]);
        let n = cross(&xu, &xv);
        let nn = linalg::norm(&n);
        if nn <= 1e-9 * linalg::norm(&xu) * linalg::norm(&xv) || nn == 0.0 {
            return Err(Error::SurfaceSingular);
        }
        Ok([n[0] / nn, n[1] / nn, n[2] / nn])
    }

    /// Determinant of the Hessian of the height over the tangent plane,
    /// normalised by the squared area element.
    fn hessian_det(&self) -> Result<f64> {
        let n = self.normal()?;
        let h = &(&self.x[0].scale(&n[0]) + &self.x[1].scale(&n[1])) + &self.x[2].scale(&n[2]);
        let hs = h.hessian();
        let xu: Vec3<f64> = std::array::from_fn(|i| self.x[i].gradient()[0]);
        let xv: Vec3<f64> = std::array::from_fn(|i| self.x[i].gradient()[1]);
        let area2 = linalg::norm(&cross(&xu, &xv)).powi(2);
        Ok((hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0]) / area2)
    }
}

fn focal_germ(z: &Congruence<f64>, u: f64, v: f64) -> Result<SurfaceGerm> {
    let j = z.jet(&u, &v, 1)?;
    let cls = classify_point(&j);
    if cls.kind != PointKind::Parabolic {
        return Err(Error::NotParabolic);
    }
    let q = invariants::focal_quadratic(&j);
    let t0 = -q.q1 / (2.0 * q.q2);
    let order = 4;
    let e = exponential_series(z, &u, &v, &t0, order)?;
    let disp: Vec<Series<f64>> = e.iter().map(|s| s.displacement()).collect();
    let df: Vec<Vec<Series<f64>>> = disp.iter().map(|fi| (0..3).map(|k| fi.derivative(k)).collect()).collect();
    let lambda = det_series(&df);
    let g = lambda.gradient();
    let sigma = df.iter().flatten().map(|s| s.value().abs()).fold(0.0, f64::max).max(1.0);
    let solve_var = if g[0].abs() >= g[1].abs() { 0 } else { 1 };
    if g[solve_var].abs() <= tol::MORIN * sigma * sigma {
        return Err(Error::SurfaceSingular);
    }
    // lambda(0) is zero only up to round-off; solve lambda - lambda(0) = 0
    let x = lambda.displacement().solve_implicit(solve_var, 0.0)?;
    let order = x.order();
    let s1 = Series::variable(2, order, 0, 0.0);
    let s2 = Series::variable(2, order, 1, 0.0);
    let args = if solve_var == 0 { [x, s1, s2] } else { [s1, x, s2] };
    let surf: [Series<f64>; 3] = std::array::from_fn(|i| e[i].displacement().compose(&args).add_constant(&e[i].value()));
    Ok(SurfaceGerm { x: surf })
}

fn middle_germ(z: &Congruence<f64>, u: f64, v: f64) -> Result<SurfaceGerm> {
    let j = z.jet(&u, &v, 3)?;
    Ok(SurfaceGerm { x: invariants::middle_series(&j)? })
}

/// Angle in radians between the focal and middle tangent planes at a
/// parabolic point.
pub fn middle_focal_tangency(z: &Congruence<f64>, u: f64, v: f64) -> Result<f64> {
    let nf = focal_germ(z, u, v)?.normal()?;
    let nm = middle_germ(z, u, v)?.normal()?;
    let c = linalg::norm(&cross(&nf, &nm));
    let d = linalg::dot(&nf, &nm).abs();
    Ok(c.atan2(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WhichSurface {
    Focal,
    Middle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Convexity {
    HyperbolicPoint,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub kind: Convexity,
    pub hessian_det: f64,
}

/// Local shape of the focal or middle surface at the image of a parabolic
/// point: hyperbolic when the height function over the tangent plane is a
/// saddle.
pub fn local_convexity_on_parabolic_image(z: &Congruence<f64>, u: f64, v: f64, which: WhichSurface) -> Result<ConvexityReport> {
    let germ = match which {
        WhichSurface::Focal => focal_germ(z, u, v)?,
        WhichSurface::Middle => {
            if classify_point(&z.jet(&u, &v, 1)?).kind != PointKind::Parabolic {
                return Err(Error::NotParabolic);
            }
            middle_germ(z, u, v)?
        }
    };
    let det = germ.hessian_det()?;
    let kind = if det < -tol::JET_ZERO { Convexity::HyperbolicPoint } else { Convexity::Other };
    Ok(ConvexityReport { kind, hessian_det: det })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::ChartKind;
    use crate::poly::Poly;

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

    fn folded() -> Congruence<f64> {
        Congruence::bchart(Poly::from_terms([(0, 1, 2.0), (2, 0, 1.0)]), Poly::from_terms([(1, 1, 1.0)]))
    }

    #[test]
    fn exponential_examples() {
        assert_eq!(exponential_map(&crosscap(), &0.0, &0.0, &1.0).unwrap(), [0.0, 0.0, 1.0]);
        let z = Congruence::bchart(Poly::v(), Poly::u());
        assert_eq!(exponential_map(&z, &0.0, &0.0, &-1.0).unwrap(), [0.0, 0.0, -1.0]);
        assert_eq!(exponential_map(&z, &0.3, &0.2, &0.0).unwrap(), [0.2, 0.3, 0.0]);
    }

    #[test]
    fn focal_sheets_of_linear_example() {
        let z = Congruence::bchart(Poly::v(), Poly::u());
        let (s1, s2) = sample_focal_surface(&z, &Grid::new(5, 5, Domain::default()));
        let k1 = s1.vertex_at(0.0, 0.0).unwrap();
        let k2 = s2.vertex_at(0.0, 0.0).unwrap();
        let mut ts = [s1.values[k1], s2.values[k2]];
        ts.sort_by(f64::total_cmp);
        assert_eq!(ts, [-1.0, 1.0]);
        assert_eq!(s1.faces.len(), 16);
    }

    #[test]
    fn middle_surface_of_rotation_example() {
        let z = Congruence::bchart(Poly::v(), Poly::u().scale(&-1.0));
        let m = sample_middle_surface(&z, &Grid::new(3, 3, Domain::default()));
        for (p, uv) in m.vertices.iter().zip(&m.params) {
            assert_eq!(*p, [uv[1], -uv[0], 0.0]);
        }
    }

    #[test]
    fn plane_focal_sheets() {
        let z = Congruence::bchart(Poly::v(), Poly::u());
        let ps = sample_plane_focal_surface(&z, &Grid::new(3, 3, Domain::default()));
        assert_eq!(ps.axis, 0);
        let k = ps.sheets[0].vertex_at(0.0, 0.0).unwrap();
        let a = ps.sheets[0].vertices[k];
        let k = ps.sheets[1].vertex_at(0.0, 0.0).unwrap();
        let b = ps.sheets[1].vertices[k];
        let mut c2 = [a[0], b[0]];
        c2.sort_by(f64::total_cmp);
        assert_eq!(c2, [-1.0, 1.0]);
    }

    #[test]
    fn parabolic_curve_examples() {
        let curves = trace_parabolic_curve(&folded(), Domain::default(), 21, 21).unwrap();
        assert!(!curves.is_empty());
        for c in &curves {
            for p in &c.points {
                assert!((p[1] + p[0] * p[0] / 8.0).abs() < 1e-9, "{p:?}");
            }
        }
        assert!(curves.iter().any(|c| c.distance_to([0.0, 0.0]) < 1e-9));
        let z = Congruence::bchart(Poly::v(), Poly::u());
        assert!(trace_parabolic_curve(&z, Domain::default(), 11, 11).unwrap().is_empty());
        let zero = Congruence::<f64>::bchart(Poly::zero(), Poly::zero());
        assert_eq!(trace_parabolic_curve(&zero, Domain::default(), 5, 5), Err(Error::DegenerateField));
    }

    #[test]
    fn morin_normal_forms() {
        let x = Series::variable(3, 5, 0, 0.0);
        let y = Series::variable(3, 5, 1, 0.0);
        let w = Series::variable(3, 5, 2, 0.0);
        let fold = [x.clone(), y.clone(), &w * &w];
        assert_eq!(morin_classify(&fold), MorinKind::Fold);
        let cusp = [x.clone(), y.clone(), &(&(&w * &w) * &w) + &(&x * &w)];
        assert_eq!(morin_classify(&cusp), MorinKind::Cusp);
        let sw = [x.clone(), y.clone(), &(&w.powi(4) + &(&x * &w)) + &(&y * &(&w * &w))];
        assert_eq!(morin_classify(&sw), MorinKind::Swallowtail);
        let id = [x.clone(), y.clone(), w.clone()];
        assert_eq!(morin_classify(&id), MorinKind::Regular);
        let c2 = [x.clone(), &y * &y, &w * &w];
        assert_eq!(morin_classify(&c2), MorinKind::Degenerate);
    }

    #[test]
    fn exponential_singularities() {
        let s = classify_exponential_singularity(&crosscap(), 0.0, 0.0, 0.0).unwrap();
        assert_eq!(s.kind, MorinKind::Fold);
        let z = Congruence::bchart(Poly::v(), Poly::u());
        let s = classify_exponential_singularity(&z, 0.0, 0.0, 0.0).unwrap();
        assert_eq!((s.kind, s.g), (MorinKind::Regular, -1.0));
        // the focal set of this linear family is a pair of lines, so the
        // kernel field is tangent to the critical set everywhere
        let s = classify_exponential_singularity(&z, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(s.kind, MorinKind::Degenerate);
        assert_eq!(s.g, 0.0);
    }

    #[test]
    fn cross_cap_examples() {
        let r = cross_cap_test(&crosscap(), &0.0, &0.0).unwrap();
        assert_eq!((r.immersion_term, r.f1, r.f2), (0.0, 91.0, -5.0));
        assert_eq!(r.verdict, CrossCapVerdict::CrossCap);
        let r = cross_cap_test(&folded(), &0.0, &0.0).unwrap();
        assert_eq!(r.immersion_term, 3.0);
        assert_eq!(r.verdict, CrossCapVerdict::NotSingular);
        let z = Congruence::bchart(Poly::v(), Poly::u());
        assert_eq!(cross_cap_test(&z, &0.0, &0.0), Err(Error::NotParabolic));
    }

    #[test]
    fn middle_jacobian_rank_drops_at_cross_cap() {
        let m = middle_surface_jacobian(&crosscap(), &0.0, &0.0).unwrap();
        let c0 = [m[0][0], m[1][0], m[2][0]];
        let c1 = [m[0][1], m[1][1], m[2][1]];
        assert_eq!(cross(&c0, &c1), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn tangency_on_folded_example() {
        let z = folded();
        assert_eq!(middle_focal_tangency(&z, 0.0, 0.0), Err(Error::SurfaceSingular));
        let r = local_convexity_on_parabolic_image(&z, 0.0, 0.0, WhichSurface::Middle).unwrap();
        assert_eq!(r.kind, Convexity::HyperbolicPoint);
        let zero = Congruence::<f64>::bchart(Poly::zero(), Poly::zero());
        assert_eq!(
            local_convexity_on_parabolic_image(&zero, 0.0, 0.0, WhichSurface::Focal),
            Err(Error::SurfaceSingular)
        );
    }

    #[test]
    fn tangency_on_crosscap_curve() {
        let z = crosscap();
        let curves = trace_parabolic_curve(&z, Domain::new(-0.2, 0.2, -0.2, 0.2), 21, 21).unwrap();
        let mut checked = 0;
        for c in &curves {
            for p in c.points.iter().filter(|p| p[0].hypot(p[1]) > 0.05) {
                let angle = middle_focal_tangency(&z, p[0], p[1]).unwrap();
                assert!(angle < 1e-4, "{p:?} {angle}");
                checked += 1;
            }
        }
        assert!(checked > 5);
    }

    #[test]
    fn unused_chart_kinds_sample() {
        let z = Congruence::achart(Poly::u(), Poly::v());
        assert_eq!(z.chart(), ChartKind::AChart);
        let m = sample_middle_surface(&z, &Grid::new(3, 3, Domain::default()));
        assert_eq!(m.vertices.len(), 9);
    }
}
