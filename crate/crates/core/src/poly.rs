//! Sparse bivariate polynomials with exact coefficient arithmetic.

use std::collections::BTreeMap;

use crate::scalar::Scalar;
use crate::series::Series;

/// `sum c_{ij} u^i v^j`, stored as `(i, j) -> c`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    terms: BTreeMap<(u32, u32), T>,
}

impl<T: Scalar> Default for Poly<T> {
    fn default() -> Self {
        Poly { terms: BTreeMap::new() }
    }
}

impl<T: Scalar> Poly<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: T) -> Self {
        Self::from_terms([(0, 0, c)])
    }

    pub fn u() -> Self {
        Self::from_terms([(1, 0, T::one())])
    }

    pub fn v() -> Self {
        Self::from_terms([(0, 1, T::one())])
    }

    /// Collects `(du, dv, coeff)` triples, summing repeats and dropping zeros.
    pub fn from_terms(terms: impl IntoIterator<Item = (u32, u32, T)>) -> Self {
        let mut p = Self::zero();
        for (i, j, c) in terms {
            p.add_term(i, j, c);
        }
        p
    }

    pub fn add_term(&mut self, du: u32, dv: u32, c: T) {
        let e = self.terms.entry((du, dv)).or_insert_with(T::zero);
        *e = e.clone() + c;
        if e.is_zero() {
            self.terms.remove(&(du, dv));
        }
    }

    pub fn coeff(&self, du: u32, dv: u32) -> T {
        self.terms.get(&(du, dv)).cloned().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, &T)> {
        self.terms.iter().map(|(&(i, j), c)| (i, j, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|&(i, j)| i + j).max().unwrap_or(0)
    }

    pub fn eval(&self, u: &T, v: &T) -> T {
        let mut acc = T::zero();
        for (&(i, j), c) in &self.terms {
            let mut t = c.clone();
            for _ in 0..i {
                t = t * u.clone();
            }
            for _ in 0..j {
                t = t * v.clone();
            }
            acc = acc + t;
        }
        acc
    }

    /// Substitutes series arguments; exact up to the series order.
    pub fn eval_series(&self, u: &Series<T>, v: &Series<T>) -> Series<T> {
        let order = u.order().min(v.order());
        let n = u.nvars();
        let mut out = Series::zero(n, order);
        if self.terms.is_empty() {
            return out;
        }
        let max_i = self.terms.keys().map(|k| k.0).max().unwrap_or(0) as usize;
        let max_j = self.terms.keys().map(|k| k.1).max().unwrap_or(0) as usize;
        let mut up = vec![Series::constant(n, order, T::one())];
        for k in 1..=max_i {
            let next = &up[k - 1] * u;
            up.push(next);
        }
        let mut vp = vec![Series::constant(n, order, T::one())];
        for k in 1..=max_j {
            let next = &vp[k - 1] * v;
            vp.push(next);
        }
        for (&(i, j), c) in &self.terms {
            out = &out + &(&up[i as usize] * &vp[j as usize]).scale(c);
        }
        out
    }

    pub fn partial(&self, du: u32, dv: u32) -> Self {
        let mut p = Self::zero();
        for (&(i, j), c) in &self.terms {
            if i < du || j < dv {
                continue;
            }
            let mut k = c.clone();
            for m in 0..du {
                k = k * T::from_int((i - m) as i64);
            }
            for m in 0..dv {
                k = k * T::from_int((j - m) as i64);
            }
            p.add_term(i - du, j - dv, k);
        }
        p
    }

    pub fn scale(&self, k: &T) -> Self {
        Self::from_terms(self.terms().map(|(i, j, c)| (i, j, c.clone() * k.clone())))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (i, j, c) in other.terms() {
            p.add_term(i, j, c.clone());
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero();
        for (i, j, a) in self.terms() {
            for (k, l, b) in other.terms() {
                p.add_term(i + k, j + l, a.clone() * b.clone());
            }
        }
        p
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Poly<U> {
        Poly::from_terms(self.terms().map(|(i, j, c)| (i, j, f(c))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn series_substitution_is_taylor_expansion() {
        // u^2 v + 3 at (1, 2)
        let p = Poly::from_terms([(2, 1, 1.0), (0, 0, 3.0)]);
        let s = p.eval_series(&Series::variable(2, 3, 0, 1.0), &Series::variable(2, 3, 1, 2.0));
        assert_eq!(s.value(), 5.0);
        assert_eq!(s.coeff(&[1, 0]), 4.0);
        assert_eq!(s.coeff(&[0, 1]), 1.0);
        assert_eq!(s.coeff(&[2, 0]), 2.0);
        assert_eq!(s.coeff(&[2, 1]), 1.0);
        assert_eq!(p.partial(1, 1).coeff(1, 0), 2.0);
    }

    #[test]
    fn exact_arithmetic_cancels() {
        let half = BigRational::new(1.into(), 2.into());
        let p = Poly::from_terms([(1, 0, half.clone()), (1, 0, half.clone())]);
        assert_eq!(p.coeff(1, 0), BigRational::from_integer(1.into()));
        let z = p.add(&p.scale(&BigRational::from_integer((-1).into())));
        assert!(z.is_zero());
        let sq = Poly::<f64>::u().add(&Poly::v()).mul(&Poly::u().add(&Poly::v()));
        assert_eq!(sq.coeff(1, 1), 2.0);
        assert_eq!(sq.degree(), 2);
    }
}
