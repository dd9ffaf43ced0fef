//! Empirical moment matrices over monomial features and the certificate
//! feasibility problem
//!
//! ```text
//! minimize tr(A M̃)  subject to  A ⪰ 0,  ‖A‖_F² ≤ Q
//! ```
//!
//! which is solved exactly: the minimizer is `√Q · M̃⁻ / ‖M̃⁻‖_F` where `M̃⁻`
//! is the negative part of `M̃`, with value `−√Q · ‖M̃⁻‖_F`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::Halfspace;
use crate::oracle::Dataset;
use crate::polynomials::MonomialBasis;
use crate::stats::{median, MeanSe, Running};

const CHUNK: usize = 4096;

/// Indicator of the slab `{x : 0 ≤ ⟨w, x⟩ ≤ θR/4}`, closed on both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct BandIndicator {
    w: Halfspace,
    theta: f64,
    r_rad: f64,
}

impl BandIndicator {
    pub fn new(w: Halfspace, theta: f64, r_rad: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= PI / 2.0) {
            return Err(invalid(
                "theta",
                format!("must lie in (0, π/2], got {theta}"),
            ));
        }
        if !(r_rad > 0.0 && r_rad.is_finite()) {
            return Err(invalid("r_rad", format!("must be positive, got {r_rad}")));
        }
        Ok(Self { w, theta, r_rad })
    }

    pub fn w(&self) -> &Halfspace {
        &self.w
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn r_rad(&self) -> f64 {
        self.r_rad
    }

    pub fn upper(&self) -> f64 {
        self.theta * self.r_rad / 4.0
    }

    #[inline]
    pub fn contains_margin(&self, margin: f64) -> bool {
        (0.0..=self.upper()).contains(&margin)
    }

    pub fn value(&self, x: &[f64]) -> Result<u8> {
        check_dim(self.w.dim(), x.len())?;
        Ok(self.contains_margin(self.w.margin(x)) as u8)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// How the moment matrix is aggregated over samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentEstimator {
    #[default]
    Mean,
    /// Entrywise median of the means of `groups` contiguous blocks.
    MedianOfMeans { groups: usize },
}

/// `M̃ = (1/N) Σ m(x) m(x)ᵀ · Ind_B(x) · y · ⟨w, x⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub basis: Arc<MonomialBasis>,
    pub entries: DMatrix<f64>,
    pub n_used: usize,
    pub band: BandIndicator,
}

pub fn estimate_moment_matrix(
    data: &Dataset,
    band: &BandIndicator,
    basis: &Arc<MonomialBasis>,
) -> Result<MomentMatrix> {
    estimate_moment_matrix_with(data, band, basis, MomentEstimator::Mean)
}

pub fn estimate_moment_matrix_with(
    data: &Dataset,
    band: &BandIndicator,
    basis: &Arc<MonomialBasis>,
    estimator: MomentEstimator,
) -> Result<MomentMatrix> {
    if data.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    check_dim(basis.dim(), data.dim())?;
    check_dim(band.w.dim(), data.dim())?;
    let m = basis.len();
    let entries = match estimator {
        MomentEstimator::Mean => {
            let tri = lower_sum(data, 0, data.len(), band, basis, signed_weight);
            tri_to_matrix(&tri, m, 1.0 / data.len() as f64)
        }
        MomentEstimator::MedianOfMeans { groups } => {
            if groups == 0 || groups > data.len() {
                return Err(invalid(
                    "groups",
                    format!("need 1 ≤ groups ≤ {}, got {groups}", data.len()),
                ));
            }
            let size = data.len() / groups;
            let means: Vec<Vec<f64>> = (0..groups)
                .map(|g| {
                    let end = if g + 1 == groups {
                        data.len()
                    } else {
                        (g + 1) * size
                    };
                    let len = (end - g * size) as f64;
                    lower_sum(data, g * size, end, band, basis, signed_weight)
                        .into_iter()
                        .map(|v| v / len)
                        .collect()
                })
                .collect();
            let tri: Vec<f64> = (0..means[0].len())
                .map(|i| {
                    let mut col: Vec<f64> = means.iter().map(|mm| mm[i]).collect();
                    median(&mut col)
                })
                .collect();
            tri_to_matrix(&tri, m, 1.0)
        }
    };
    Ok(MomentMatrix {
        basis: basis.clone(),
        entries,
        n_used: data.len(),
        band: band.clone(),
    })
}

fn signed_weight(margin: f64, y: f64) -> f64 {
    y * margin
}

/// Lower-triangle sums of `weight(margin, y) · m(x) m(x)ᵀ` over the band rows
/// in `[start, end)`, reduced chunk by chunk in a fixed order so the result
/// does not depend on thread scheduling.
fn lower_sum<F>(
    data: &Dataset,
    start: usize,
    end: usize,
    band: &BandIndicator,
    basis: &MonomialBasis,
    weight_fn: F,
) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let m = basis.len();
    let tri_len = m * (m + 1) / 2;
    let starts: Vec<usize> = (start..end).step_by(CHUNK).collect();
    let partials: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| {
            let e = (s + CHUNK).min(end);
            let mut acc = vec![0.0; tri_len];
            let mut f = vec![0.0; m];
            for i in s..e {
                let x = data.x(i);
                let margin = band.w.margin(x);
                if !band.contains_margin(margin) {
                    continue;
                }
                let weight = weight_fn(margin, data.y(i));
                if weight == 0.0 {
                    continue;
                }
                basis.eval_into(x, &mut f);
                let mut pos = 0;
                for r in 0..m {
                    let wr = weight * f[r];
                    for c in 0..=r {
                        acc[pos] += wr * f[c];
                        pos += 1;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; tri_len];
    for p in partials {
        total.iter_mut().zip(p).for_each(|(t, v)| *t += v);
    }
    total
}

fn tri_to_matrix(tri: &[f64], m: usize, scale: f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m, m);
    let mut pos = 0;
    for r in 0..m {
        for c in 0..=r {
            out[(r, c)] = tri[pos] * scale;
            out[(c, r)] = tri[pos] * scale;
            pos += 1;
        }
    }
    out
}

/// A PSD matrix `A` whose quadratic form in the monomial features is the
/// certificate polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateMatrix {
    pub basis: Arc<MonomialBasis>,
    pub a_mat: DMatrix<f64>,
    pub q_bound: f64,
    /// `tr(A M̃)` on the matrix it was fitted to.
    pub objective: f64,
}

impl CertificateMatrix {
    pub fn zero(basis: Arc<MonomialBasis>, q_bound: f64) -> Self {
        let m = basis.len();
        Self {
            basis,
            a_mat: DMatrix::zeros(m, m),
            q_bound,
            objective: 0.0,
        }
    }

    /// `fᵀ A f` for a precomputed feature vector.
    pub fn quad_form(&self, f: &[f64]) -> f64 {
        let m = f.len();
        let a = self.a_mat.as_slice();
        let mut total = 0.0;
        for c in 0..m {
            let col = &a[c * m..(c + 1) * m];
            let dotc: f64 = col.iter().zip(f).map(|(x, y)| x * y).sum();
            total += f[c] * dotc;
        }
        total.max(0.0)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a_mat.iter().map(|v| v * v).sum()
    }

    /// Same direction, rescaled so that the fitted objective equals `target`.
    pub fn rescaled_to_objective(&self, target: f64) -> Self {
        let s = if self.objective == 0.0 {
            0.0
        } else {
            target / self.objective
        };
        Self {
            basis: self.basis.clone(),
            a_mat: &self.a_mat * s,
            q_bound: self.q_bound,
            objective: self.objective * s,
        }
    }
}

/// Minimizer of `tr(A M̃)` over `{A ⪰ 0, ‖A‖_F² ≤ Q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMinimum {
    pub objective: f64,
    /// `‖M̃⁻‖_F`.
    pub negative_norm: f64,
    /// `√Q · M̃⁻ / ‖M̃⁻‖_F`, or zero when `M̃` is PSD.
    pub a_star: DMatrix<f64>,
    pub min_eigenvalue: f64,
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in 0..r {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    worst
}

pub fn minimize_over_psd_ball(m: &DMatrix<f64>, q_bound: f64) -> Result<SpectralMinimum> {
    if !(q_bound > 0.0 && q_bound.is_finite()) {
        return Err(invalid(
            "q_bound",
            format!("must be positive, got {q_bound}"),
        ));
    }
    if m.nrows() != m.ncols() {
        return Err(invalid("matrix", "must be square"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("moment matrix has non-finite entries".into()));
    }
    let asym = max_asymmetry(m);
    if asym > 1e-12 {
        return Err(Error::NotSymmetric(asym));
    }
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100_000).ok_or_else(|| {
        Error::EigenFailure {
            dim: n,
            frobenius: m.norm(),
            max_abs: m.amax(),
        }
    })?;
    let mut neg = DMatrix::zeros(n, n);
    for (i, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda < 0.0 {
            let v = eig.eigenvectors.column(i);
            neg.ger(-lambda, &v, &v, 1.0);
        }
    }
    // symmetrize away rank-one rounding
    let neg = (&neg + neg.transpose()) * 0.5;
    let negative_norm = neg.norm();
    let min_eigenvalue = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let root_q = q_bound.sqrt();
    let (a_star, objective) = if negative_norm > 0.0 {
        (neg * (root_q / negative_norm), -root_q * negative_norm)
    } else {
        (DMatrix::zeros(n, n), 0.0)
    };
    Ok(SpectralMinimum {
        objective,
        negative_norm,
        a_star,
        min_eigenvalue,
    })
}

/// Returns the full-budget minimizer iff its objective is at most `threshold`.
pub fn solve_feasibility(
    mm: &MomentMatrix,
    q_bound: f64,
    threshold: f64,
) -> Result<Option<CertificateMatrix>> {
    if !(threshold < 0.0) {
        return Err(invalid(
            "threshold",
            format!("must be negative, got {threshold}"),
        ));
    }
    let sol = minimize_over_psd_ball(&mm.entries, q_bound)?;
    if sol.objective <= threshold {
        Ok(Some(CertificateMatrix {
            basis: mm.basis.clone(),
            a_mat: sol.a_star,
            q_bound,
            objective: sol.objective,
        }))
    } else {
        Ok(None)
    }
}

/// `m(x)ᵀ A m(x) · Ind_B(x)`.
pub fn certificate_poly_value(
    c: &CertificateMatrix,
    band: &BandIndicator,
    x: &[f64],
) -> Result<f64> {
    check_dim(c.basis.dim(), x.len())?;
    if band.value(x)? == 0 {
        return Ok(0.0);
    }
    let f = c.basis.eval_monomials(x)?;
    Ok(c.quad_form(&f))
}

/// Per-sample values of `F(x) · ⟨w,x⟩ · y` with `F = m(x)ᵀ A m(x) · Ind_B(x)`,
/// summarized as mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub objective_est: f64,
    /// `None` when the holdout has fewer than two samples.
    pub std_err: Option<f64>,
    pub n: usize,
}

impl ValidationReport {
    pub fn se_or_nan(&self) -> f64 {
        self.std_err.unwrap_or(f64::NAN)
    }
}

pub fn validate_certificate(
    c: &CertificateMatrix,
    holdout: &Dataset,
    band: &BandIndicator,
) -> Result<ValidationReport> {
    if holdout.is_empty() {
        return Err(Error::EmptyInput("holdout"));
    }
    check_dim(c.basis.dim(), holdout.dim())?;
    let s = weighted_margin_summary(holdout, band.w(), |x, margin| {
        if band.contains_margin(margin) {
            let mut f = vec![0.0; c.basis.len()];
            c.basis.eval_into(x, &mut f);
            c.quad_form(&f)
        } else {
            0.0
        }
    });
    Ok(ValidationReport {
        objective_est: s.mean,
        std_err: s.std_err,
        n: s.n,
    })
}

/// Mean and standard error of `F(x) · ⟨u, x⟩ · y` over a dataset, where
/// `weight(x, ⟨band_w, x⟩)` supplies `F`. Deterministic chunked reduction.
pub(crate) fn weighted_margin_summary<F>(data: &Dataset, w: &Halfspace, weight: F) -> MeanSe
where
    F: Fn(&[f64], f64) -> f64 + Sync,
{
    let starts: Vec<usize> = (0..data.len()).step_by(CHUNK).collect();
    let parts: Vec<Running> = starts
        .par_iter()
        .map(|&s| {
            let mut r = Running::default();
            for i in s..(s + CHUNK).min(data.len()) {
                let x = data.x(i);
                let margin = w.margin(x);
                r.push(weight(x, margin) * margin * data.y(i));
            }
            r
        })
        .collect();
    let mut total = Running::default();
    parts.iter().for_each(|p| total.merge(p));
    total.summary()
}

/// Linear change of monomial coordinates applied before the spectral solve.
/// The Frobenius budget then applies in the new coordinates; the returned
/// certificate is mapped back and stays PSD in the monomial basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    #[default]
    Identity,
    /// Whitens the features with `S = (1/N) Σ m(x) m(x)ᵀ · Ind_B(x) · ⟨w,x⟩^power`
    /// from the fitting data, dropping directions with negligible band mass.
    /// With `power = 2`, `S` approximates the second moment of the per-sample
    /// validation statistic, so the budget penalizes high-variance directions.
    MarginWhitening { power: u32 },
}

const WHITEN_REL_TOL: f64 = 1e-10;

/// Unsigned band moment `(1/N) Σ m(x) m(x)ᵀ · Ind_B(x) · ⟨w,x⟩^power`.
pub fn band_second_moment(
    data: &Dataset,
    band: &BandIndicator,
    basis: &Arc<MonomialBasis>,
    power: u32,
) -> Result<DMatrix<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    check_dim(basis.dim(), data.dim())?;
    let p = power as i32;
    let tri = lower_sum(data, 0, data.len(), band, basis, |margin, _| margin.powi(p));
    Ok(tri_to_matrix(&tri, basis.len(), 1.0 / data.len() as f64))
}

/// `T` with `T S Tᵀ = I` on the eigenspace of `S` whose eigenvalues exceed
/// `1e-10 · λ_max`. Has zero rows when `S = 0`.
pub fn whitening_transform(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    let eig = SymmetricEigen::try_new(s.clone(), f64::EPSILON, 100_000).ok_or_else(|| {
        Error::EigenFailure {
            dim: n,
            frobenius: s.norm(),
            max_abs: s.amax(),
        }
    })?;
    let top = eig.eigenvalues.max();
    let keep: Vec<usize> = (0..n)
        .filter(|&j| top > 0.0 && eig.eigenvalues[j] > WHITEN_REL_TOL * top)
        .collect();
    let mut t = DMatrix::zeros(keep.len(), n);
    for (row, &j) in keep.iter().enumerate() {
        let scale = 1.0 / eig.eigenvalues[j].sqrt();
        for col in 0..n {
            t[(row, col)] = scale * eig.eigenvectors[(col, j)];
        }
    }
    Ok(t)
}

/// How the certificate returned to callers is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CertificateScaling {
    /// `‖A‖_F² = Q`, the exact minimizer.
    #[default]
    FullBudget,
    /// The smallest multiple of the minimizer whose fitted objective meets
    /// the feasibility threshold exactly.
    MinimalNorm,
}

/// Parameters of one certify-then-validate decision.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig {
    pub theta: f64,
    pub r_rad: f64,
    pub k: usize,
    pub q_bound: f64,
    pub scaling: CertificateScaling,
    pub estimator: MomentEstimator,
    pub preconditioner: Preconditioner,
    /// Required held-out significance: accept only when
    /// `objective_est + z_accept · std_err < 0`.
    pub z_accept: f64,
}

impl CertifyConfig {
    pub fn new(theta: f64, r_rad: f64, k: usize, q_bound: f64) -> Self {
        Self {
            theta,
            r_rad,
            k,
            q_bound,
            scaling: CertificateScaling::FullBudget,
            estimator: MomentEstimator::Mean,
            preconditioner: Preconditioner::Identity,
            z_accept: 3.0,
        }
    }

    /// `−3θR/16`, the fitted-objective threshold.
    pub fn fit_threshold(&self) -> f64 {
        -3.0 * self.theta * self.r_rad / 16.0
    }

    /// `−θR/16`, the held-out acceptance threshold.
    pub fn accept_threshold(&self) -> f64 {
        -self.theta * self.r_rad / 16.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOutcome {
    pub basis_size: usize,
    /// Full-budget optimum `−√Q‖M̃⁻‖_F` on the fitting data.
    pub fit_objective: f64,
    pub fit_feasible: bool,
    pub certificate: Option<CertificateMatrix>,
    pub validation: Option<ValidationReport>,
    /// Feasible on the fitting data and confirmed on the holdout.
    pub accepted: bool,
    pub band: BandIndicator,
}

/// Fits a certificate for `w` on `fit` and validates it on `holdout`.
pub fn certify(
    fit: &Dataset,
    holdout: &Dataset,
    w: &Halfspace,
    cfg: &CertifyConfig,
) -> Result<CertifyOutcome> {
    let basis = MonomialBasis::new(w.dim(), cfg.k)?;
    let band = BandIndicator::new(w.clone(), cfg.theta, cfg.r_rad)?;
    let mm = estimate_moment_matrix_with(fit, &band, &basis, cfg.estimator)?;
    let (fit_objective, a_star) = match cfg.preconditioner {
        Preconditioner::Identity => {
            let sol = minimize_over_psd_ball(&mm.entries, cfg.q_bound)?;
            (sol.objective, sol.a_star)
        }
        Preconditioner::MarginWhitening { power } => {
            let t = whitening_transform(&band_second_moment(fit, &band, &basis, power)?)?;
            if t.nrows() == 0 {
                (0.0, DMatrix::zeros(basis.len(), basis.len()))
            } else {
                let mw = &t * &mm.entries * t.transpose();
                // exact up to rounding of the congruence
                let mw = (&mw + mw.transpose()) * 0.5;
                let sol = minimize_over_psd_ball(&mw, cfg.q_bound)?;
                let a = t.transpose() * sol.a_star * &t;
                (sol.objective, (&a + a.transpose()) * 0.5)
            }
        }
    };
    let threshold = cfg.fit_threshold();
    let fit_feasible = fit_objective <= threshold;
    let mut outcome = CertifyOutcome {
        basis_size: basis.len(),
        fit_objective,
        fit_feasible,
        certificate: None,
        validation: None,
        accepted: false,
        band: band.clone(),
    };
    if !fit_feasible {
        return Ok(outcome);
    }
    let full = CertificateMatrix {
        basis,
        a_mat: a_star,
        q_bound: cfg.q_bound,
        objective: fit_objective,
    };
    let mut cert = match cfg.scaling {
        CertificateScaling::FullBudget => full,
        CertificateScaling::MinimalNorm => full.rescaled_to_objective(threshold),
    };
    if cfg.preconditioner != Preconditioner::Identity {
        // the budget held in whitened coordinates; record what A needs here
        cert.q_bound = cert.frobenius_sq();
    }
    let report = validate_certificate(&cert, holdout, &band)?;
    let accept_threshold = cfg.accept_threshold();
    outcome.accepted = match report.std_err {
        Some(se) => {
            report.objective_est <= accept_threshold
                && report.objective_est + cfg.z_accept * se < 0.0
        }
        None => false,
    };
    outcome.validation = Some(report);
    outcome.certificate = Some(cert);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Points;

    fn w_e2() -> Halfspace {
        Halfspace::from_coords(vec![0.0, 1.0]).unwrap()
    }

    fn dataset(rows: &[([f64; 2], f64)]) -> Dataset {
        let flat: Vec<f64> = rows.iter().flat_map(|(x, _)| x.iter().copied()).collect();
        Dataset::new(
            Points::from_flat(2, flat).unwrap(),
            rows.iter().map(|(_, y)| *y).collect(),
        )
        .unwrap()
    }

    #[test]
    fn band_examples() {
        // θR/4 = 0.05
        let band = BandIndicator::new(w_e2(), 0.5, 0.4).unwrap();
        assert_eq!(band.value(&[5.0, 0.01]).unwrap(), 1);
        assert_eq!(band.value(&[0.0, -0.01]).unwrap(), 0);
        assert_eq!(band.value(&[1.0, 0.0]).unwrap(), 1);
        assert_eq!(band.value(&[1.0, 0.05]).unwrap(), 1);
        assert_eq!(band.value(&[1.0, 0.0501]).unwrap(), 0);
        assert!(band.value(&[1.0, 0.0, 0.0]).is_err());
        assert!(BandIndicator::new(w_e2(), 0.0, 1.0).is_err());
        assert!(BandIndicator::new(w_e2(), 2.0, 1.0).is_err());
    }

    #[test]
    fn moment_matrix_examples() {
        let band = BandIndicator::new(w_e2(), 0.5, 0.4).unwrap();
        let basis = MonomialBasis::new(2, 1).unwrap();
        let out = estimate_moment_matrix(&dataset(&[([1.0, 0.5], 1.0)]), &band, &basis).unwrap();
        assert!(out.entries.iter().all(|v| *v == 0.0));

        let x = [2.0, 0.04];
        let one = estimate_moment_matrix(&dataset(&[(x, 1.0)]), &band, &basis).unwrap();
        let v = [1.0, 2.0, 0.04];
        for r in 0..3 {
            for c in 0..3 {
                assert!((one.entries[(r, c)] - 0.04 * v[r] * v[c]).abs() < 1e-15);
            }
        }

        let pair = estimate_moment_matrix(&dataset(&[(x, 1.0), (x, -1.0)]), &band, &basis).unwrap();
        assert!(pair.entries.iter().all(|v| *v == 0.0));
        assert_eq!(max_asymmetry(&pair.entries), 0.0);

        let empty = dataset(&[(x, 1.0)]).split_at(0).unwrap().0;
        assert!(estimate_moment_matrix(&empty, &band, &basis).is_err());
    }

    #[test]
    fn median_of_means_single_group_equals_mean() {
        let band = BandIndicator::new(w_e2(), 1.0, 2.0).unwrap();
        let basis = MonomialBasis::new(2, 2).unwrap();
        let data = dataset(&[
            ([0.3, 0.1], 1.0),
            ([-0.4, 0.2], -1.0),
            ([1.1, 0.3], 1.0),
            ([0.2, 0.05], -1.0),
        ]);
        let a = estimate_moment_matrix(&data, &band, &basis).unwrap();
        let b = estimate_moment_matrix_with(
            &data,
            &band,
            &basis,
            MomentEstimator::MedianOfMeans { groups: 1 },
        )
        .unwrap();
        assert!((&a.entries - &b.entries).amax() < 1e-15);
        assert!(estimate_moment_matrix_with(
            &data,
            &band,
            &basis,
            MomentEstimator::MedianOfMeans { groups: 9 }
        )
        .is_err());
    }

    #[test]
    fn spectral_examples() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0]));
        let sol = minimize_over_psd_ball(&m, 1.0).unwrap();
        assert!((sol.objective + 2.0).abs() < 1e-12);
        assert!((sol.a_star[(0, 0)]).abs() < 1e-12);
        assert!((sol.a_star[(1, 1)] - 1.0).abs() < 1e-12);

        let minus_i = -DMatrix::<f64>::identity(3, 3);
        let sol = minimize_over_psd_ball(&minus_i, 3.0).unwrap();
        assert!((sol.objective + 3.0).abs() < 1e-12);
        assert!((&sol.a_star - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);

        let psd = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let sol = minimize_over_psd_ball(&psd, 5.0).unwrap();
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(
            minimize_over_psd_ball(&m, 1.0),
            Err(Error::NotSymmetric(_))
        ));
        assert!(minimize_over_psd_ball(&DMatrix::zeros(2, 2), 0.0).is_err());
    }

    #[test]
    fn feasibility_thresholds() {
        let basis = MonomialBasis::new(2, 0).unwrap();
        let band = BandIndicator::new(w_e2(), 1.0, 1.0).unwrap();
        let mm = |v: f64| MomentMatrix {
            basis: basis.clone(),
            entries: DMatrix::from_element(1, 1, v),
            n_used: 1,
            band: band.clone(),
        };
        assert!(solve_feasibility(&mm(1.0), 1.0, -0.1).unwrap().is_none());
        let c = solve_feasibility(&mm(-0.5), 4.0, -0.9).unwrap().unwrap();
        assert!((c.objective + 1.0).abs() < 1e-15);
        assert!((c.frobenius_sq() - 4.0).abs() < 1e-12);
        assert!(solve_feasibility(&mm(-0.5), 4.0, -1.1).unwrap().is_none());
        assert!(solve_feasibility(&mm(-0.5), 4.0, 0.0).is_err());

        let small = c.rescaled_to_objective(-0.25);
        assert!((small.objective + 0.25).abs() < 1e-15);
        assert!((small.frobenius_sq() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn poly_value_examples() {
        let basis = MonomialBasis::new(2, 1).unwrap();
        let band = BandIndicator::new(w_e2(), 1.0, 0.4).unwrap();
        let b = nalgebra::DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let cert = CertificateMatrix {
            basis: basis.clone(),
            a_mat: &b * b.transpose(),
            q_bound: 10.0,
            objective: -1.0,
        };
        let x = [0.3, 0.05];
        let expected = (0.5 - 0.3 + 2.0 * 0.05f64).powi(2);
        assert!((certificate_poly_value(&cert, &band, &x).unwrap() - expected).abs() < 1e-15);
        assert_eq!(
            certificate_poly_value(&cert, &band, &[0.3, 0.5]).unwrap(),
            0.0
        );
        let zero = CertificateMatrix::zero(basis, 1.0);
        assert_eq!(certificate_poly_value(&zero, &band, &x).unwrap(), 0.0);
    }

    #[test]
    fn validation_degenerate_cases() {
        let basis = MonomialBasis::new(2, 1).unwrap();
        let band = BandIndicator::new(w_e2(), 1.0, 0.4).unwrap();
        let zero = CertificateMatrix::zero(basis.clone(), 1.0);
        let data = dataset(&[([0.3, 0.05], 1.0), ([0.1, 0.02], -1.0)]);
        let r = validate_certificate(&zero, &data, &band).unwrap();
        assert_eq!(r.objective_est, 0.0);
        assert_eq!(r.std_err, Some(0.0));
        let one = dataset(&[([0.3, 0.05], 1.0)]);
        let mut eye = CertificateMatrix::zero(basis, 1.0);
        eye.a_mat = DMatrix::identity(3, 3);
        let r = validate_certificate(&eye, &one, &band).unwrap();
        assert!(r.std_err.is_none());
        assert!(r.objective_est > 0.0);
        let empty = one.split_at(0).unwrap().0;
        assert!(validate_certificate(&eye, &empty, &band).is_err());
    }
}
