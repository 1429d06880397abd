//! Affine differential geometry of line congruences.
//!
//! A congruence is a two-parameter family of lines `(u, v) -> [a, b]`, the
//! line `b + t a`. This crate computes its pointwise invariants (torsal
//! directions, focal points and planes, middle points), the derived surfaces
//! and curves, singularity and contact classifications, and independent
//! numerical oracles for all of them.
//!
//! ```
//! use linecong::{Congruence, Poly, invariants};
//!
//! // b1 = v, b2 = u: two real focal points at t = -1 and t = 1
//! let z = Congruence::bchart(Poly::v(), Poly::u());
//! let jet = z.jet(&0.0, &0.0, 2).unwrap();
//! let fd = invariants::focal_data(&jet).unwrap();
//! assert_eq!(fd.roots, invariants::FocalRoots::Distinct(-1.0, 1.0));
//! ```

pub mod bde;
pub mod congruence;
pub mod contact;
pub mod error;
pub mod invariants;
pub mod linalg;
pub mod linespace;
pub mod poly;
pub mod scalar;
pub mod series;
pub mod surfaces;
pub mod tol;
pub mod verify;

pub use congruence::{ChartKind, Congruence, Domain, Jet};
pub use error::{Error, Result};
pub use linespace::{Line, Plane};
pub use poly::Poly;
pub use scalar::Scalar;
pub use series::Series;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/lines.md")]
    mod lines {}
    #[doc = include_str!("../../../book/src/congruences.md")]
    mod congruences {}
    #[doc = include_str!("../../../book/src/focal.md")]
    mod focal {}
    #[doc = include_str!("../../../book/src/surfaces.md")]
    mod surfaces {}
    #[doc = include_str!("../../../book/src/torsal.md")]
    mod torsal {}
    #[doc = include_str!("../../../book/src/contact.md")]
    mod contact {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
}
