//! Monomial bases, univariate and multivariate polynomials, Chebyshev
//! polynomials, and the explicit certificate polynomial built from them.
//!
//! Every multivariate object shares one indexing convention: multi-indices in
//! graded lexicographic order (by total degree, then by exponent of `x₁`
//! descending, then `x₂`, …).

mod basis;
mod multivariate;
mod univariate;

pub use basis::{binomial_count, MonomialBasis, MultiIndex, BASIS_CAP};
pub use multivariate::{
    lift_along_direction, oracle_certificate, poly_norms, square_poly, MultivariatePoly,
    OracleCertificate,
};
pub use univariate::{
    affine_compose, band_shift, chebyshev_coeffs, chebyshev_eval, chebyshev_norm_bound_log2,
    UnivariatePoly, MAX_CHEBYSHEV_DEGREE,
};
