//! Learning origin-centered halfspaces under Tsybakov label noise by
//! certifying candidate hypotheses with low-degree sum-of-squares reweightings.
//!
//! The pieces, bottom-up:
//!
//! * [`geometry`]: vectors, halfspaces, angles.
//! * [`noise`] and [`distributions`]: the noise model and isotropic marginals.
//! * [`oracle`]: the noisy example oracle and datasets.
//! * [`polynomials`]: monomial bases, Chebyshev polynomials and the explicit
//!   certificate polynomial.
//! * [`certificate`]: empirical moment matrices and the spectral solution of
//!   the certificate feasibility problem.
//! * [`learner`]: online projected gradient descent driven by certificates.
//! * [`evaluation`]: error metrics and checks of the error-bound relations.

pub mod certificate;
pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod learner;
pub mod noise;
pub mod oracle;
pub mod polynomials;
pub mod rng;
pub mod stats;
pub mod suites;

pub use error::{Error, Result};
pub use geometry::{angle, sign, Halfspace, WeightVector};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
