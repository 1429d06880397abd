//! Numerical thresholds shared across modules.

/// `|Q(w)| <= ON_QUADRIC * |w|^2` counts as on the quadric.
pub const ON_QUADRIC: f64 = 1e-9;
/// `|det A| <= SINGULAR_MATRIX * |A|^3` counts as singular.
pub const SINGULAR_MATRIX: f64 = 1e-12;
/// Parabolic band: `|delta| <= PARABOLIC * (1 + B^2 + |A C|)`.
pub const PARABOLIC: f64 = 1e-10;
/// Relative threshold for vanishing jet quantities after normalisation.
pub const JET_ZERO: f64 = 1e-8;
/// Relative threshold of the singularity recognisers.
pub const MORIN: f64 = 1e-7;
/// Relative threshold of the contact classifier.
pub const CONTACT: f64 = 1e-7;
/// Numerical rank threshold relative to the largest singular value.
pub const RANK: f64 = 1e-9;
/// Stall test: `|det J_a| <= STALL * (1 + |J_a|^2)`.
pub const STALL: f64 = 1e-10;
/// Series order used by the singularity recognisers.
pub const RECOGNITION_ORDER: usize = 5;
