#![allow(dead_code)]

use linecong::{Congruence, Poly, Scalar};

pub const CROSSCAP_B1: [(u32, u32, i64); 8] =
    [(0, 1, 2), (2, 0, 1), (1, 1, 5), (0, 2, -1), (3, 0, -3), (2, 1, -1), (1, 2, 7), (0, 3, 1)];
pub const CROSSCAP_B2: [(u32, u32, i64); 7] = [(2, 0, 7), (1, 1, -2), (0, 2, 3), (3, 0, 5), (2, 1, -2), (1, 2, 11), (0, 3, 1)];

fn poly<T: Scalar>(terms: &[(u32, u32, i64)]) -> Poly<T> {
    Poly::from_terms(terms.iter().map(|&(i, j, c)| (i, j, T::from_int(c))))
}

/// The cross-cap example congruence, in any scalar type.
pub fn crosscap<T: Scalar>() -> Congruence<T> {
    Congruence::bchart(poly(&CROSSCAP_B1), poly(&CROSSCAP_B2))
}

pub fn linear() -> Congruence<f64> {
    Congruence::bchart(Poly::v(), Poly::u())
}

pub fn rotation() -> Congruence<f64> {
    Congruence::bchart(Poly::v(), Poly::u().scale(&-1.0))
}

/// b1 = 2v + u^2, b2 = uv.
pub fn folded() -> Congruence<f64> {
    Congruence::bchart(Poly::from_terms([(0, 1, 2.0), (2, 0, 1.0)]), Poly::from_terms([(1, 1, 1.0)]))
}
