//! Multivariate truncated power series in up to three variables.
//!
//! A [`Series`] holds the Taylor coefficients of a function of the
//! displacement `x = (x0, x1, x2)` from some base point, truncated at a total
//! degree. Arithmetic is closed on a fixed (variables, order) layout; mixing
//! orders truncates to the lower one.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::scalar::{factorial, Scalar};

pub const MAX_VARS: usize = 3;

#[derive(Debug)]
struct Layout {
    nvars: usize,
    order: usize,
    exps: Vec<[u8; MAX_VARS]>,
    degree: Vec<usize>,
    lookup: Vec<usize>,
    // for each left index: (right index, product index)
    mul: Vec<Vec<(usize, usize)>>,
}

impl Layout {
    fn dense(&self, e: &[u8; MAX_VARS]) -> usize {
        let n = self.order + 1;
        e[0] as usize + n * (e[1] as usize + n * e[2] as usize)
    }

    fn index(&self, e: &[u8; MAX_VARS]) -> Option<usize> {
        let total: usize = e.iter().map(|&k| k as usize).sum();
        if total > self.order || e[self.nvars..].iter().any(|&k| k != 0) {
            return None;
        }
        let i = self.lookup[self.dense(e)];
        (i != usize::MAX).then_some(i)
    }

    fn build(nvars: usize, order: usize) -> Layout {
        assert!((1..=MAX_VARS).contains(&nvars), "series supports 1 to 3 variables");
        let mut exps = Vec::new();
        for deg in 0..=order {
            // lexicographic within a degree, x0 highest first
            let mut level = Vec::new();
            for e0 in (0..=deg).rev() {
                let rest = deg - e0;
                if nvars == 1 {
                    if rest == 0 {
                        level.push([e0 as u8, 0, 0]);
                    }
                    continue;
                }
                for e1 in (0..=rest).rev() {
                    let e2 = rest - e1;
                    if nvars == 2 && e2 != 0 {
                        continue;
                    }
                    level.push([e0 as u8, e1 as u8, e2 as u8]);
                }
            }
            exps.extend(level);
        }
        let n = order + 1;
        let mut layout = Layout {
            nvars,
            order,
            degree: exps.iter().map(|e| e.iter().map(|&k| k as usize).sum()).collect(),
            lookup: vec![usize::MAX; n * n * n],
            exps,
            mul: Vec::new(),
        };
        for (i, e) in layout.exps.clone().iter().enumerate() {
            let d = layout.dense(e);
            layout.lookup[d] = i;
        }
        let mut mul = vec![Vec::new(); layout.exps.len()];
        for (i, ei) in layout.exps.iter().enumerate() {
            for (j, ej) in layout.exps.iter().enumerate() {
                if layout.degree[i] + layout.degree[j] > order {
                    continue;
                }
                let s = [ei[0] + ej[0], ei[1] + ej[1], ei[2] + ej[2]];
                mul[i].push((j, layout.lookup[layout.dense(&s)]));
            }
        }
        layout.mul = mul;
        layout
    }
}

fn layout(nvars: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((nvars, order))
        .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
        .clone()
}

/// Truncated Taylor expansion `sum c_e x^e` with `|e| <= order`.
#[derive(Clone)]
pub struct Series<T> {
    layout: Arc<Layout>,
    c: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Series<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (e, c) in self.layout.exps.iter().zip(&self.c) {
            m.entry(&&e[..self.layout.nvars], c);
        }
        m.finish()
    }
}

impl<T: Scalar> PartialEq for Series<T> {
    fn eq(&self, other: &Self) -> bool {
        self.nvars() == other.nvars() && self.order() == other.order() && self.c == other.c
    }
}

impl<T: Scalar> Series<T> {
    pub fn zero(nvars: usize, order: usize) -> Self {
        let layout = layout(nvars, order);
        let c = vec![T::zero(); layout.exps.len()];
        Series { layout, c }
    }

    pub fn constant(nvars: usize, order: usize, value: T) -> Self {
        let mut s = Self::zero(nvars, order);
        s.c[0] = value;
        s
    }

    /// `value + x_var`: the coordinate function centred at `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: T) -> Self {
        let mut s = Self::constant(nvars, order, value);
        if order > 0 {
            let mut e = [0u8; MAX_VARS];
            e[var] = 1;
            let i = s.layout.index(&e).expect("variable in range");
            s.c[i] = T::one();
        }
        s
    }

    /// Builds a series from `(exponents, coefficient)` pairs; terms above the
    /// order are dropped.
    pub fn from_terms(nvars: usize, order: usize, terms: &[(&[u8], T)]) -> Self {
        let mut s = Self::zero(nvars, order);
        for (e, v) in terms {
            s.add_to_coeff(e, v.clone());
        }
        s
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> T {
        self.c[0].clone()
    }

    fn key(&self, exps: &[u8]) -> Option<usize> {
        assert!(exps.len() <= MAX_VARS);
        let mut e = [0u8; MAX_VARS];
        e[..exps.len()].copy_from_slice(exps);
        self.layout.index(&e)
    }

    /// Taylor coefficient of `x^exps`; zero above the order.
    pub fn coeff(&self, exps: &[u8]) -> T {
        self.key(exps).map(|i| self.c[i].clone()).unwrap_or_else(T::zero)
    }

    pub fn set_coeff(&mut self, exps: &[u8], value: T) {
        if let Some(i) = self.key(exps) {
            self.c[i] = value;
        }
    }

    pub fn add_to_coeff(&mut self, exps: &[u8], value: T) {
        if let Some(i) = self.key(exps) {
            self.c[i] = self.c[i].clone() + value;
        }
    }

    /// Partial derivative `d^|e| f / dx^e` at the base point.
    pub fn derivative_at(&self, exps: &[u8]) -> T {
        let scale: i64 = exps.iter().map(|&k| factorial(k as usize)).product();
        self.coeff(exps) * T::from_int(scale)
    }

    /// Iterator over `(exponents, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (&[u8], &T)> {
        let n = self.layout.nvars;
        self.layout.exps.iter().map(move |e| &e[..n]).zip(self.c.iter())
    }

    /// Coefficients of total degree `deg`, in layout order.
    pub fn homogeneous(&self, deg: usize) -> Vec<(Vec<u8>, T)> {
        self.terms()
            .filter(|(e, _)| e.iter().map(|&k| k as usize).sum::<usize>() == deg)
            .map(|(e, c)| (e.to_vec(), c.clone()))
            .collect()
    }

    pub fn gradient(&self) -> Vec<T> {
        (0..self.nvars())
            .map(|i| {
                let mut e = [0u8; MAX_VARS];
                e[i] = 1;
                self.coeff(&e[..self.nvars()])
            })
            .collect()
    }

    /// Matrix of second partial derivatives at the base point.
    pub fn hessian(&self) -> Vec<Vec<T>> {
        let n = self.nvars();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut e = [0u8; MAX_VARS];
                        e[i] += 1;
                        e[j] += 1;
                        self.derivative_at(&e[..n])
                    })
                    .collect()
            })
            .collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order == self.order() {
            return self.clone();
        }
        let mut out = Self::zero(self.nvars(), order);
        for (i, e) in self.layout.exps.iter().enumerate() {
            if let Some(j) = out.layout.index(e) {
                out.c[j] = self.c[i].clone();
            }
        }
        out
    }

    fn aligned(a: &Self, b: &Self) -> (Self, Self) {
        assert_eq!(a.nvars(), b.nvars(), "series variable counts differ");
        let o = a.order().min(b.order());
        (a.truncate(o), b.truncate(o))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Series<U> {
        Series { layout: self.layout.clone(), c: self.c.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> Series<f64> {
        self.map(|x| x.to_f64())
    }

    pub fn scale(&self, k: &T) -> Self {
        self.map(|x| x.clone() * k.clone())
    }

    pub fn add_constant(&self, k: &T) -> Self {
        let mut s = self.clone();
        s.c[0] = s.c[0].clone() + k.clone();
        s
    }

    /// The series with its constant term removed.
    pub fn displacement(&self) -> Self {
        let mut s = self.clone();
        s.c[0] = T::zero();
        s
    }

    pub fn is_zero_within(&self, tol: f64) -> bool {
        self.c.iter().all(|c| c.near_zero(tol))
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }

    fn mul_ref(&self, other: &Self) -> Self {
        if self.nvars() != other.nvars() || self.order() != other.order() {
            let (a, b) = Self::aligned(self, other);
            return a.mul_ref(&b);
        }
        let mut out = vec![T::zero(); self.c.len()];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for &(j, k) in &self.layout.mul[i] {
                let b = &other.c[j];
                if b.is_zero() {
                    continue;
                }
                out[k] = out[k].clone() + a.clone() * b.clone();
            }
        }
        Series { layout: self.layout.clone(), c: out }
    }

    fn zip(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        if self.nvars() != other.nvars() || self.order() != other.order() {
            let (a, b) = Self::aligned(self, other);
            return a.zip(&b, f);
        }
        let c = self.c.iter().zip(&other.c).map(|(a, b)| f(a, b)).collect();
        Series { layout: self.layout.clone(), c }
    }

    pub fn powi(&self, n: usize) -> Self {
        let mut r = Self::constant(self.nvars(), self.order(), T::one());
        for _ in 0..n {
            r = r.mul_ref(self);
        }
        r
    }

    /// `sum_n taylor[n] * (self - value)^n` for the Taylor coefficients of a
    /// univariate function at `self.value()`.
    pub fn compose_univariate(&self, taylor: &[T]) -> Self {
        let h = self.displacement();
        let mut r = Self::constant(self.nvars(), self.order(), T::zero());
        for c in taylor.iter().take(self.order() + 1).rev() {
            r = r.mul_ref(&h).add_constant(c);
        }
        r
    }

    /// Multiplicative inverse; fails when the constant term vanishes.
    pub fn recip(&self, tol: f64) -> Result<Self> {
        let c0 = self.value();
        if c0.near_zero(tol) {
            return Err(Error::InvalidArgument("reciprocal of a series with zero value".into()));
        }
        let inv = T::one() / c0;
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut p = inv.clone();
        for _ in 0..=self.order() {
            taylor.push(p.clone());
            p = -(p * inv.clone());
        }
        Ok(self.compose_univariate(&taylor))
    }

    pub fn div(&self, other: &Self, tol: f64) -> Result<Self> {
        Ok(self.mul_ref(&other.recip(tol)?))
    }

    /// Partial derivative as a series one order lower.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(var < self.nvars());
        if self.order() == 0 {
            return Self::zero(self.nvars(), 0);
        }
        let mut out = Self::zero(self.nvars(), self.order() - 1);
        for (i, e) in self.layout.exps.iter().enumerate() {
            let k = e[var];
            if k == 0 || self.c[i].is_zero() {
                continue;
            }
            let mut d = *e;
            d[var] -= 1;
            if let Some(j) = out.layout.index(&d) {
                out.c[j] = out.c[j].clone() + self.c[i].clone() * T::from_int(k as i64);
            }
        }
        out
    }

    /// Directional derivative `sum_i field[i] * d/dx_i`.
    pub fn lie_derivative(&self, field: &[Self]) -> Self {
        assert_eq!(field.len(), self.nvars());
        let mut r = self.derivative(0).mul_ref(&field[0]);
        for (i, f) in field.iter().enumerate().skip(1) {
            r = r.zip(&self.derivative(i).mul_ref(f), |a, b| a.clone() + b.clone());
        }
        r
    }

    /// Substitutes `x_i = args[i]` where every argument has zero constant
    /// term. The result lives in the argument space, at the lower of the two
    /// orders.
    pub fn compose(&self, args: &[Self]) -> Self {
        assert_eq!(args.len(), self.nvars(), "one argument per variable");
        let m = args[0].nvars();
        let order = self.order().min(args.iter().map(|a| a.order()).min().unwrap_or(0));
        let args: Vec<Self> = args.iter().map(|a| a.truncate(order)).collect();
        let mut powers: Vec<Vec<Self>> = Vec::with_capacity(args.len());
        for a in &args {
            assert_eq!(a.nvars(), m, "arguments must share one variable space");
            let mut p = vec![Self::constant(m, order, T::one())];
            for k in 1..=order {
                let next = p[k - 1].mul_ref(a);
                p.push(next);
            }
            powers.push(p);
        }
        let mut out = Self::zero(m, order);
        for (i, e) in self.layout.exps.iter().enumerate() {
            if self.layout.degree[i] > order || self.c[i].is_zero() {
                continue;
            }
            let mut term = powers[0][e[0] as usize].clone();
            for (v, p) in powers.iter().enumerate().skip(1) {
                if e[v] > 0 {
                    term = term.mul_ref(&p[e[v] as usize]);
                }
            }
            out = out.zip(&term.scale(&self.c[i]), |a, b| a.clone() + b.clone());
        }
        out
    }

    /// Evaluates the truncated polynomial at a displacement.
    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (e, c) in self.terms() {
            if c.is_zero() {
                continue;
            }
            let mut t = c.clone();
            for (v, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t = t * x[v].clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Re-expands the series around a new base point given as a displacement
    /// (exact for the truncated polynomial).
    pub fn recenter(&self, x: &[T]) -> Self {
        let args: Vec<Self> = (0..self.nvars())
            .map(|i| Self::variable(self.nvars(), self.order(), i, x[i].clone()))
            .collect();
        // compose requires zero constant terms, so expand by hand
        let mut out = Self::zero(self.nvars(), self.order());
        for (e, c) in self.terms() {
            if c.is_zero() {
                continue;
            }
            let mut t = Self::constant(self.nvars(), self.order(), c.clone());
            for (v, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t = t.mul_ref(&args[v]);
                }
            }
            out = out.zip(&t, |a, b| a.clone() + b.clone());
        }
        out
    }

    /// Embeds into a space with more variables (new variables unused).
    pub fn widen(&self, nvars: usize) -> Self {
        assert!(nvars >= self.nvars());
        let mut out = Self::zero(nvars, self.order());
        for (i, e) in self.layout.exps.iter().enumerate() {
            if let Some(j) = out.layout.index(e) {
                out.c[j] = self.c[i].clone();
            }
        }
        out
    }

    /// Solves `self(x) = 0` for variable `var` as a series in the remaining
    /// variables. Requires `self(0) = 0` and a nonzero partial in `var`.
    pub fn solve_implicit(&self, var: usize, tol: f64) -> Result<Self> {
        let n = self.nvars();
        assert!(n >= 2 && var < n);
        let g = self.gradient()[var].clone();
        if g.near_zero(tol) {
            return Err(Error::InvalidArgument("implicit variable has zero partial".into()));
        }
        let m = n - 1;
        let order = self.order();
        let mut x = Self::zero(m, order);
        let others: Vec<Self> = (0..m).map(|i| Self::variable(m, order, i, T::zero())).collect();
        for _ in 0..=order {
            let mut args = Vec::with_capacity(n);
            let mut k = 0;
            for i in 0..n {
                if i == var {
                    args.push(x.clone());
                } else {
                    args.push(others[k].clone());
                    k += 1;
                }
            }
            let f = self.compose(&args);
            x = x.zip(&f, |a, b| a.clone() - b.clone() / g.clone());
        }
        Ok(x)
    }
}

impl Series<f64> {
    fn univariate(&self, derivs: impl Fn(usize) -> f64) -> Self {
        let taylor: Vec<f64> =
            (0..=self.order()).map(|k| derivs(k) / factorial(k) as f64).collect();
        self.compose_univariate(&taylor)
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.univariate(|_| e)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.univariate(|k| [s, c, -s, -c][k % 4])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.univariate(|k| [c, -s, -c, s][k % 4])
    }

    /// Natural logarithm; requires a positive value.
    pub fn ln(&self) -> Self {
        let x = self.value();
        self.univariate(|k| {
            if k == 0 {
                x.ln()
            } else {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * factorial(k - 1) as f64 / x.powi(k as i32)
            }
        })
    }

    /// Real power; requires a positive value unless `p` is a whole number.
    pub fn powf(&self, p: f64) -> Self {
        let x = self.value();
        self.univariate(|k| {
            let mut falling = 1.0;
            for i in 0..k {
                falling *= p - i as f64;
            }
            falling * x.powf(p - k as f64)
        })
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }
}

impl<T: Scalar> Add for Series<T> {
    type Output = Series<T>;
    fn add(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a.clone() + b.clone())
    }
}

impl<T: Scalar> Sub for Series<T> {
    type Output = Series<T>;
    fn sub(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a.clone() - b.clone())
    }
}

impl<T: Scalar> Mul for Series<T> {
    type Output = Series<T>;
    fn mul(self, rhs: Self) -> Self {
        self.mul_ref(&rhs)
    }
}

impl<T: Scalar> Neg for Series<T> {
    type Output = Series<T>;
    fn neg(self) -> Self {
        self.map(|x| -x.clone())
    }
}

impl<'a, T: Scalar> Add<&'a Series<T>> for &'a Series<T> {
    type Output = Series<T>;
    fn add(self, rhs: &Series<T>) -> Series<T> {
        self.zip(rhs, |a, b| a.clone() + b.clone())
    }
}

impl<'a, T: Scalar> Sub<&'a Series<T>> for &'a Series<T> {
    type Output = Series<T>;
    fn sub(self, rhs: &Series<T>) -> Series<T> {
        self.zip(rhs, |a, b| a.clone() - b.clone())
    }
}

impl<'a, T: Scalar> Mul<&'a Series<T>> for &'a Series<T> {
    type Output = Series<T>;
    fn mul(self, rhs: &Series<T>) -> Series<T> {
        self.mul_ref(rhs)
    }
}

impl<T: Scalar> Neg for &Series<T> {
    type Output = Series<T>;
    fn neg(self) -> Series<T> {
        self.map(|x| -x.clone())
    }
}

/// Inverts a map germ `F: (K^n, 0) -> (K^n, 0)` with invertible linear part,
/// returning `G` with `F(G(y)) = y` to the series order.
pub fn invert_map<T: Scalar>(f: &[Series<T>], tol: f64) -> Result<Vec<Series<T>>> {
    let n = f.len();
    assert!(n >= 1 && f.iter().all(|s| s.nvars() == n));
    let order = f.iter().map(|s| s.order()).min().unwrap_or(0);
    let jac: Vec<Vec<T>> = f.iter().map(|s| s.gradient()).collect();
    let inv = crate::linalg::inverse(&jac, tol).ok_or(Error::SingularMatrix)?;
    let ys: Vec<Series<T>> = (0..n).map(|i| Series::variable(n, order, i, T::zero())).collect();
    let mut g: Vec<Series<T>> = (0..n).map(|_| Series::zero(n, order)).collect();
    for _ in 0..=order {
        let r: Vec<Series<T>> = f.iter().zip(&ys).map(|(fi, yi)| &fi.compose(&g) - yi).collect();
        g = (0..n)
            .map(|i| {
                let mut gi = g[i].clone();
                for (j, rj) in r.iter().enumerate() {
                    gi = &gi - &rj.scale(&inv[i][j]);
                }
                gi
            })
            .collect();
    }
    Ok(g)
}
