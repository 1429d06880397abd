//! Small dense helpers over any [`Scalar`].

use crate::scalar::Scalar;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn cross<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1].clone() * b[2].clone() - a[2].clone() * b[1].clone(),
        a[2].clone() * b[0].clone() - a[0].clone() * b[2].clone(),
        a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone(),
    ]
}

pub fn det3<T: Scalar>(m: &Mat3<T>) -> T {
    dot(&m[0], &cross(&m[1], &m[2]))
}

pub fn add3<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0].clone() + b[0].clone(), a[1].clone() + b[1].clone(), a[2].clone() + b[2].clone()]
}

pub fn sub3<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0].clone() - b[0].clone(), a[1].clone() - b[1].clone(), a[2].clone() - b[2].clone()]
}

pub fn scale3<T: Scalar>(k: &T, a: &Vec3<T>) -> Vec3<T> {
    [k.clone() * a[0].clone(), k.clone() * a[1].clone(), k.clone() * a[2].clone()]
}

pub fn mat_vec<T: Scalar>(m: &Mat3<T>, x: &Vec3<T>) -> Vec3<T> {
    [dot(&m[0], x), dot(&m[1], x), dot(&m[2], x)]
}

/// Row covector times matrix.
pub fn vec_mat<T: Scalar>(c: &Vec3<T>, m: &Mat3<T>) -> Vec3<T> {
    let col = |j: usize| c[0].clone() * m[0][j].clone() + c[1].clone() * m[1][j].clone() + c[2].clone() * m[2][j].clone();
    [col(0), col(1), col(2)]
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_t<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt()
}

pub fn identity3<T: Scalar>() -> Mat3<T> {
    let o = T::zero;
    let i = T::one;
    [[i(), o(), o()], [o(), i(), o()], [o(), o(), i()]]
}

/// Frobenius norm.
pub fn mat_norm<T: Scalar>(m: &Mat3<T>) -> f64 {
    m.iter().flat_map(|r| r.iter()).map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt()
}

/// Gauss-Jordan inverse with partial pivoting; `None` when a pivot is below
/// `tol` (exact scalars only reject true zeros).
pub fn inverse<T: Scalar>(m: &[Vec<T>], tol: f64) -> Option<Vec<Vec<T>>> {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut inv: Vec<Vec<T>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col].to_f64().abs().partial_cmp(&a[j][col].to_f64().abs()).unwrap_or(std::cmp::Ordering::Equal)
        })?;
        let piv = if T::EXACT { (col..n).find(|&i| !a[i][col].is_zero())? } else { piv };
        if a[piv][col].near_zero(tol) {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].clone() / p.clone();
            inv[col][j] = inv[col][j].clone() / p.clone();
        }
        for i in 0..n {
            if i == col || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone();
            for j in 0..n {
                a[i][j] = a[i][j].clone() - f.clone() * a[col][j].clone();
                inv[i][j] = inv[i][j].clone() - f.clone() * inv[col][j].clone();
            }
        }
    }
    Some(inv)
}

pub fn inverse3<T: Scalar>(m: &Mat3<T>, tol: f64) -> Option<Mat3<T>> {
    let rows: Vec<Vec<T>> = m.iter().map(|r| r.to_vec()).collect();
    let inv = inverse(&rows, tol)?;
    Some([
        [inv[0][0].clone(), inv[0][1].clone(), inv[0][2].clone()],
        [inv[1][0].clone(), inv[1][1].clone(), inv[1][2].clone()],
        [inv[2][0].clone(), inv[2][1].clone(), inv[2][2].clone()],
    ])
}

pub fn to_f64_3<T: Scalar>(v: &Vec3<T>) -> [f64; 3] {
    [v[0].to_f64(), v[1].to_f64(), v[2].to_f64()]
}

pub fn from_f64_3<T: Scalar>(v: &[f64; 3]) -> Vec3<T> {
    [T::from_f64(v[0]), T::from_f64(v[1]), T::from_f64(v[2])]
}

/// Index of the largest-magnitude entry, lowest index on ties.
pub fn argmax_abs<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if x.abs_val() > v[best].abs_val() {
            best = i;
        }
    }
    best
}
