use std::f64::consts::PI;
use std::sync::Arc;

use super::basis::MonomialBasis;
use super::univariate::{band_shift, UnivariatePoly};
use crate::distributions::BoundedParams;
use crate::error::{invalid, Error, Result};
use crate::geometry::{angle, orthogonal_component, Halfspace};

/// `p(x) = Σ_S C_S x^S` over a shared monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariatePoly {
    basis: Arc<MonomialBasis>,
    coeffs: Vec<f64>,
}

impl MultivariatePoly {
    pub fn new(basis: Arc<MonomialBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(invalid(
                "coeffs",
                format!(
                    "{} coefficients for a basis of {}",
                    coeffs.len(),
                    basis.len()
                ),
            ));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zero(basis: Arc<MonomialBasis>) -> Self {
        let coeffs = vec![0.0; basis.len()];
        Self { basis, coeffs }
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, exponents: &[u32]) -> f64 {
        self.basis
            .position(exponents)
            .map_or(0.0, |i| self.coeffs[i])
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let m = self.basis.eval_monomials(x)?;
        Ok(m.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum())
    }
}

/// `(‖p‖₂², ‖p‖₁)` over the coefficient vector.
pub fn poly_norms(p: &MultivariatePoly) -> (f64, f64) {
    let l2_sq = p.coeffs.iter().map(|c| c * c).sum();
    let l1 = p.coeffs.iter().map(|c| c.abs()).sum();
    (l2_sq, l1)
}

fn binom(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// `q(x) = p(⟨w, x⟩)` expanded by the multinomial theorem.
pub fn lift_along_direction(
    p: &UnivariatePoly,
    w: &[f64],
    basis: &Arc<MonomialBasis>,
) -> Result<MultivariatePoly> {
    if w.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: w.len(),
        });
    }
    if p.degree() > basis.degree() {
        return Err(Error::DegreeTooLarge {
            degree: p.degree(),
            max: basis.degree(),
        });
    }
    let c = p.coeffs();
    let coeffs = basis
        .indices()
        .iter()
        .map(|s| {
            let order = s.order();
            let Some(ci) = c.get(order) else { return 0.0 };
            let mut multinomial = 1.0;
            let mut seen = 0u32;
            let mut wpow = 1.0;
            for (e, wj) in s.exponents().iter().zip(w) {
                seen += e;
                multinomial *= binom(seen, *e);
                wpow *= wj.powi(*e as i32);
            }
            ci * multinomial * wpow
        })
        .collect();
    MultivariatePoly::new(basis.clone(), coeffs)
}

/// `p²` as a polynomial over the degree-`2k` basis.
pub fn square_poly(p: &MultivariatePoly) -> Result<MultivariatePoly> {
    let b = &p.basis;
    let out_basis = MonomialBasis::new(b.dim(), 2 * b.degree())?;
    let mut out = vec![0.0; out_basis.len()];
    let mut sum = vec![0u32; b.dim()];
    for (i, si) in b.indices().iter().enumerate() {
        let ci = p.coeffs[i];
        if ci == 0.0 {
            continue;
        }
        for (j, sj) in b.indices().iter().enumerate() {
            let cj = p.coeffs[j];
            if cj == 0.0 {
                continue;
            }
            for ((s, a), bb) in sum.iter_mut().zip(si.exponents()).zip(sj.exponents()) {
                *s = a + bb;
            }
            let pos = out_basis
                .position(&sum)
                .expect("sum of two degree-k indices lies in the degree-2k basis");
            out[pos] += ci * cj;
        }
    }
    MultivariatePoly::new(out_basis, out)
}

/// Explicit degree-`k` certificate polynomial for a candidate `w` against the
/// target `w*`, plus the band it is meant to be paired with.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCertificate {
    pub poly: MultivariatePoly,
    /// Unit vector `v` in `span(w, w*)`, orthogonal to `w`, pointing into the
    /// half of the band where `w` and `w*` disagree.
    pub direction: Vec<f64>,
    pub w_param: f64,
    pub angle: f64,
    /// Upper edge of the band `[0, θR/4]`, or `[0, πR/8]` for `θ > π/2`.
    pub band_upper: f64,
    /// Set when `θ(w, w*) > π/2`; that branch is experimental.
    pub wide_angle: bool,
}

/// `p(x) = T_k(g(⟨v, x⟩))` with `W = 8k/β` and `v` from
/// [`orthogonal_component`]. Inside the band, points with `⟨v, x⟩ ≥ R/4` are
/// the ones `w` misclassifies, and that is where `p²` grows.
pub fn oracle_certificate(
    wstar: &Halfspace,
    w: &Halfspace,
    k: usize,
    params: &BoundedParams,
    beta_override: Option<f64>,
) -> Result<OracleCertificate> {
    if k == 0 {
        return Err(invalid("k", "certificate degree must be at least 1"));
    }
    let theta = angle(w.normal().as_slice(), wstar.normal().as_slice())?;
    let v = orthogonal_component(wstar.normal().as_slice(), w.normal().as_slice())?;
    let beta = beta_override.unwrap_or(params.beta_tail);
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(
            "beta_override",
            format!("must be positive, got {beta}"),
        ));
    }
    let w_param = 8.0 * k as f64 / beta;
    let uni = band_shift(k, w_param, params.r_rad)?;
    let basis = MonomialBasis::new(w.dim(), k)?;
    let poly = lift_along_direction(&uni, v.as_slice(), &basis)?;
    let wide_angle = theta > PI / 2.0;
    let band_upper = if wide_angle {
        PI * params.r_rad / 8.0
    } else {
        theta * params.r_rad / 4.0
    };
    Ok(OracleCertificate {
        poly,
        direction: v.into_vec(),
        w_param,
        angle: theta,
        band_upper,
        wide_angle,
    })
}
