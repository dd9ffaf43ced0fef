//! Named verification suites. Each returns one [`BoundCheck`] row per check;
//! a suite passes when every row holds.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::certificate::{estimate_moment_matrix, minimize_over_psd_ball, BandIndicator};
use crate::distributions::{check_bounds, isotropy, BoundedParams, Marginal};
use crate::error::{invalid, Result};
use crate::evaluation::{
    check_claim_4_7, check_error_sandwich, check_fact_positivity, check_lemma_3_2,
    disagreement_rate, BoundCheck, PiecewiseProfile, SE_MARGIN,
};
use crate::geometry::Halfspace;
use crate::noise::{
    boundary_power_admissible_a, default_t_grid, verify_tsybakov_condition, NoiseField,
    TsybakovParams,
};
use crate::oracle::{empirical_noise_rate, OracleConfig};
use crate::polynomials::{
    affine_compose, band_shift, chebyshev_coeffs, chebyshev_eval, chebyshev_norm_bound_log2,
    lift_along_direction, oracle_certificate, poly_norms, MonomialBasis, MultivariatePoly,
    UnivariatePoly,
};
use crate::rng::{derive_indexed, derive_seed, indexed_stream, stream, StreamRng};
use crate::stats::{mean_se, ols_slope};

pub const SUITES: &[&str] = &[
    "chebyshev",
    "regions",
    "composition",
    "moments",
    "sdp",
    "noise",
    "bounds",
    "lemma32",
    "claim47",
    "certificate",
    "positivity",
    "sandwich",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<BoundCheck>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    let checks = match name {
        "chebyshev" => chebyshev_suite()?,
        "regions" => regions_suite()?,
        "composition" => composition_suite(seed)?,
        "moments" => moments_suite(seed)?.checks,
        "sdp" => sdp_suite(seed)?,
        "noise" => noise_suite(seed)?,
        "bounds" => bounds_suite(seed)?,
        "lemma32" => lemma32_suite(seed)?,
        "claim47" => claim47_suite(seed)?,
        "certificate" => certificate_suite(seed)?.checks,
        "positivity" => positivity_suite(seed)?,
        "sandwich" => sandwich_suite(seed)?,
        other => {
            return Err(invalid(
                "suite",
                format!("unknown suite `{other}`; known: {}", SUITES.join(", ")),
            ))
        }
    };
    Ok(SuiteReport {
        suite: name.to_string(),
        checks,
    })
}

fn row(name: impl Into<String>, lhs: f64, rhs: f64, holds: bool, std_err: f64) -> BoundCheck {
    BoundCheck {
        name: name.into(),
        lhs,
        rhs,
        holds,
        std_err,
    }
}

fn normal(rng: &mut StreamRng) -> f64 {
    rng.sample(StandardNormal)
}

/// d = 2 Gaussian, `w*` at angle 0.3 from `w = e₂`, BoundaryPower noise with
/// α = 0.7, c = 0.5, radius R = 1/9.
#[derive(Debug, Clone)]
pub struct ReferenceScenario {
    pub oracle: OracleConfig,
    pub w: Halfspace,
    pub theta: f64,
    pub r_rad: f64,
    pub bounds: BoundedParams,
}

impl ReferenceScenario {
    pub const THETA: f64 = 0.3;
    pub const ALPHA: f64 = 0.7;
    pub const C: f64 = 0.5;

    pub fn new(seed: u64) -> Result<Self> {
        let theta = Self::THETA;
        let a = boundary_power_admissible_a(Self::ALPHA, Self::C, 1.0 / (2.0 * PI).sqrt());
        let tsybakov = TsybakovParams::new(Self::ALPHA, a)?;
        let wstar = Halfspace::from_coords(vec![-theta.sin(), theta.cos()])?;
        let oracle = OracleConfig::new(
            Marginal::Gaussian { d: 2 },
            wstar,
            NoiseField::BoundaryPower { c: Self::C },
            tsybakov,
            seed,
        )?;
        let bounds = BoundedParams::log_concave_default();
        Ok(Self {
            oracle,
            w: Halfspace::from_coords(vec![0.0, 1.0])?,
            theta,
            r_rad: bounds.r_rad,
            bounds,
        })
    }

    pub fn wstar(&self) -> &Halfspace {
        &self.oracle.target
    }

    pub fn band(&self) -> Result<BandIndicator> {
        BandIndicator::new(self.w.clone(), self.theta, self.r_rad)
    }
}

/// Branch consistency of `T_k` on `[−2, 2]` and the coefficient-norm bound.
pub fn chebyshev_suite() -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    for k in 0..=12usize {
        let coeffs = chebyshev_coeffs(k)?;
        let mut worst: f64 = 0.0;
        for i in 0..=4000 {
            let t = -2.0 + 4.0 * i as f64 / 4000.0;
            let closed = chebyshev_eval(k, t);
            let scale = closed.abs().max(1.0);
            worst = worst.max((closed - coeffs.eval(t)).abs() / scale);
            worst = worst.max((closed - recurrence(k, t)).abs() / scale);
        }
        for t in [-1.0f64, 1.0] {
            let inner = chebyshev_eval(k, t * (1.0 - 1e-12));
            let outer = chebyshev_eval(k, t * (1.0 + 1e-12));
            worst = worst.max((inner - outer).abs());
        }
        out.push(row(
            format!("branch_consistency_k{k}"),
            worst,
            1e-7,
            worst <= 1e-7,
            0.0,
        ));
    }
    for k in 0..=15usize {
        let lhs = chebyshev_coeffs(k)?.l2_sq().log2();
        let rhs = chebyshev_norm_bound_log2(k);
        out.push(row(
            format!("norm_bound_log2_k{k}"),
            lhs,
            rhs,
            lhs <= rhs,
            0.0,
        ));
    }
    Ok(out)
}

fn recurrence(k: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if k == 0 {
        return prev;
    }
    for _ in 1..k {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Region properties of `p = T_k(g(x₁))` with `W = 8k/β`, on 10³ grid points
/// per region:
/// `x₁ ≤ −W ⇒ p² ≤ (2g)^{2k}`, `x₁ ∈ [−W, R/4] ⇒ p² ≤ 1`, and
/// `x₁ ≥ R/2 ⇒ p² ≥ ½(1 + √(R/(2W + R/2)))^{2k}`.
pub fn regions_suite() -> Result<Vec<BoundCheck>> {
    let settings = [(1.0 / 9.0, 1.0), (1.0, 1.0), (12.0, 1.0), (1.0, 0.5)];
    let mut out = Vec::new();
    for (r, beta) in settings {
        for k in 1..=12usize {
            let w = 8.0 * k as f64 / beta;
            let p = band_shift(k, w, r)?;
            let g = |t: f64| 1.0 + 2.0 * (t - r / 4.0) / (w + r / 4.0);
            let grid = |lo: f64, hi: f64| (0..1000).map(move |i| lo + (hi - lo) * i as f64 / 999.0);
            let tag = format!("R{r:.3}_beta{beta}_k{k}");

            let exact = |t: f64| chebyshev_eval(k, g(t));

            // Ratio p² / (2g)^{2k}, must stay ≤ 1.
            let worst = grid(-5.0 * w, -w)
                .map(|t| exact(t).powi(2) / (2.0 * g(t)).powi(2 * k as i32))
                .fold(0.0, f64::max);
            out.push(row(
                format!("region_far_{tag}"),
                worst,
                1.0,
                worst <= 1.0 + 1e-12,
                0.0,
            ));

            let worst = grid(-w, r / 4.0)
                .map(|t| exact(t).powi(2))
                .fold(0.0, f64::max);
            out.push(row(
                format!("region_band_{tag}"),
                worst,
                1.0,
                worst <= 1.0 + 1e-12,
                0.0,
            ));

            let floor = 0.5 * (1.0 + (r / (2.0 * w + r / 2.0)).sqrt()).powi(2 * k as i32);
            let least = grid(r / 2.0, r / 2.0 + 4.0 * w)
                .map(|t| exact(t).powi(2))
                .fold(f64::INFINITY, f64::min);
            out.push(row(
                format!("region_growth_{tag}"),
                least,
                floor,
                least >= floor,
                0.0,
            ));

            // The monomial expansion loses ~1e-8 relative accuracy at k = 12
            // to cancellation; hold it to the branch-consistency tolerance.
            let worst = grid(-2.0 * w, r / 2.0 + 2.0 * w)
                .map(|t| {
                    let direct = exact(t);
                    (p.eval(t) - direct).abs() / direct.abs().max(1.0)
                })
                .fold(0.0, f64::max);
            out.push(row(
                format!("region_expansion_{tag}"),
                worst,
                1e-7,
                worst <= 1e-7,
                0.0,
            ));
        }
    }
    Ok(out)
}

/// Coefficient-norm bounds for lifting and affine composition, plus pointwise
/// agreement of lifted polynomials.
pub fn composition_suite(seed: u64) -> Result<Vec<BoundCheck>> {
    let mut rng = stream(seed, "suite-composition");
    let mut out = Vec::new();
    for i in 0..100 {
        let d = rng.random_range(2..=5usize);
        let k = rng.random_range(1..=6usize);
        let p = UnivariatePoly::new((0..=k).map(|_| normal(&mut rng)).collect());
        let mut w: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
        let scale = rng.random_range(0.0..1.0) / crate::geometry::norm(&w);
        w.iter_mut().for_each(|v| *v *= scale);
        let basis = MonomialBasis::new(d, k)?;
        let q = lift_along_direction(&p, &w, &basis)?;
        let lhs = poly_norms(&q).0;
        let rhs = (d as f64).powi(2 * k as i32) * p.l2_sq();
        out.push(row(format!("lift_norm_{i}"), lhs, rhs, lhs <= rhs, 0.0));

        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let x: Vec<f64> = (0..d).map(|_| 2.0 * normal(&mut rng)).collect();
            let direct = p.eval(crate::geometry::dot(&w, &x));
            worst = worst.max((q.eval(&x)? - direct).abs() / direct.abs().max(1.0));
        }
        out.push(row(
            format!("lift_pointwise_{i}"),
            worst,
            1e-9,
            worst <= 1e-9,
            0.0,
        ));
    }
    for i in 0..100 {
        let k = rng.random_range(1..=10usize);
        let p = UnivariatePoly::new((0..=k).map(|_| normal(&mut rng)).collect());
        let a = rng.random_range(0.01..4.0);
        let b = rng.random_range(0.0..4.0);
        let r = affine_compose(&p, a, b);
        let lhs = r.l2_sq();
        let rhs = (2.0 * a.max(1.0) * b.max(1.0)).powi(2 * k as i32) * p.l2_sq();
        out.push(row(format!("affine_norm_{i}"), lhs, rhs, lhs <= rhs, 0.0));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentsSummary {
    pub sizes: Vec<usize>,
    /// Root-mean-square Frobenius error per size.
    pub errors: Vec<f64>,
    pub slope: f64,
    pub checks: Vec<BoundCheck>,
}

pub const MOMENT_SLOPE_RANGE: (f64, f64) = (-0.65, -0.35);

/// Frobenius error of the moment matrix against a 10⁷-sample reference on
/// the reference scenario with k = 3, and its log-log slope in `N`.
pub fn moments_suite(seed: u64) -> Result<MomentsSummary> {
    let sc = ReferenceScenario::new(seed)?;
    let band = sc.band()?;
    let basis = MonomialBasis::new(2, 3)?;
    let chunk = 1_000_000;
    let mut reference = DMatrix::zeros(basis.len(), basis.len());
    for i in 0..10 {
        let data = sc.oracle.draw_stream(chunk, "moments-reference", i)?;
        reference += estimate_moment_matrix(&data, &band, &basis)?.entries;
    }
    reference /= 10.0;

    let sizes = vec![1_000usize, 10_000, 100_000, 1_000_000];
    let mut errors = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        // Band hits are rare, so small N needs many replicates for a stable
        // mean squared error.
        let reps = (4_000_000 / n).max(8) as u64;
        let mut sq = 0.0;
        let stream_name = format!("moments-n{n}");
        let per_rep: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let data = sc.oracle.draw_stream(n, &stream_name, r)?;
                let m = estimate_moment_matrix(&data, &band, &basis)?;
                Ok((m.entries - &reference).norm_squared())
            })
            .collect::<Result<_>>()?;
        sq += per_rep.iter().sum::<f64>();
        errors.push((sq / reps as f64).sqrt());
    }
    let lx: Vec<f64> = sizes.iter().map(|n| (*n as f64).ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let slope = ols_slope(&lx, &ly);
    let (lo, hi) = MOMENT_SLOPE_RANGE;
    let mut checks: Vec<BoundCheck> = sizes
        .iter()
        .zip(&errors)
        .map(|(n, e)| row(format!("moment_error_n{n}"), *e, 0.0, e.is_finite(), 0.0))
        .collect();
    checks.push(row(
        "moment_error_slope",
        slope,
        -0.5,
        (lo..=hi).contains(&slope),
        0.0,
    ));
    Ok(MomentsSummary {
        sizes,
        errors,
        slope,
        checks,
    })
}

/// `‖M⁻‖_F` from an SVD: with `M = UΣVᵀ`, `|M| = VΣVᵀ` and `M⁻ = (|M| − M)/2`.
fn negative_part_norm_svd(m: &DMatrix<f64>) -> f64 {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let abs = v_t.transpose() * DMatrix::from_diagonal(&svd.singular_values) * &v_t;
    ((abs - m) * 0.5).norm()
}

/// Spectral minimizer over `{A ⪰ 0, ‖A‖_F² ≤ Q}` against 10³ random feasible
/// PSD matrices, for 200 random symmetric `M` with `m ≤ 20`.
pub fn sdp_suite(seed: u64) -> Result<Vec<BoundCheck>> {
    let rows: Vec<Result<Vec<BoundCheck>>> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_stream(seed, "suite-sdp", i);
            let m = rng.random_range(1..=20usize);
            let raw = DMatrix::from_fn(m, m, |_, _| normal(&mut rng));
            let mut mat = (&raw + raw.transpose()) * 0.5;
            if i % 10 == 0 {
                // A few PSD inputs, where the minimum is exactly 0.
                mat = &raw * raw.transpose();
            }
            let q = rng.random_range(0.1..10.0);
            let sol = minimize_over_psd_ball(&mat, q)?;
            let mut best = f64::INFINITY;
            for _ in 0..1000 {
                let r = rng.random_range(1..=m);
                let b = DMatrix::from_fn(m, r, |_, _| normal(&mut rng));
                let target = q * rng.random_range(0.0..1.0f64);
                let a = rescale_frobenius(&b * b.transpose(), target.sqrt());
                best = best.min((&a * &mat).trace());
            }
            let neg = negative_part_norm_svd(&mat);
            let expected = -q.sqrt() * neg;
            // Relative 1e-9, with an absolute floor for PSD inputs where the
            // exact value is 0 and the SVD leaves rounding residue.
            let diff = (sol.objective - expected).abs();
            let tol = 1e-9 * expected.abs() + 1e-12 * q.sqrt() * mat.norm();
            let direct = (&sol.a_star * &mat).trace();
            let psd = sol.a_star.clone().symmetric_eigenvalues().min();
            let fro = sol.a_star.norm_squared();
            Ok(vec![
                row(
                    format!("sdp_{i}_below_samples"),
                    sol.objective,
                    best,
                    sol.objective <= best + 1e-9,
                    0.0,
                ),
                row(format!("sdp_{i}_closed_form"), diff, tol, diff <= tol, 0.0),
                row(
                    format!("sdp_{i}_objective_matches_trace"),
                    direct,
                    sol.objective,
                    (direct - sol.objective).abs() <= 1e-9 * sol.objective.abs().max(1.0),
                    0.0,
                ),
                row(
                    format!("sdp_{i}_feasible"),
                    fro,
                    q,
                    fro <= q * (1.0 + 1e-12) && psd >= -1e-9,
                    0.0,
                ),
            ])
        })
        .collect();
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

fn rescale_frobenius(a: DMatrix<f64>, target: f64) -> DMatrix<f64> {
    let n = a.norm();
    if n == 0.0 {
        a
    } else {
        a * (target / n)
    }
}

/// `E[η(x)]` for BoundaryPower noise under a Gaussian marginal by Simpson
/// quadrature over the margin.
fn boundary_power_mean_eta(c: f64, alpha: f64) -> f64 {
    let e = (1.0 - alpha) / alpha;
    let z0 = (0.5 / c).powf(1.0 / e);
    let f = |z: f64| (0.5 - c * z.powf(e)).max(0.0) * (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let n = 20_000;
    let h = z0 / n as f64;
    let mut s = f(0.0) + f(z0);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * s * h / 3.0
}

/// Tail condition for each noise family and the empirical flip rate of the
/// oracle against quadrature.
pub fn noise_suite(seed: u64) -> Result<Vec<BoundCheck>> {
    let n = 200_000;
    let grid = default_t_grid();
    let mut out = Vec::new();
    for d in [2usize, 3] {
        let marginal = Marginal::Gaussian { d };
        let mut coords = vec![0.0; d];
        coords[0] = 0.6;
        coords[1] = -0.8;
        let wstar = Halfspace::from_coords(coords)?;
        for alpha in [0.3, 0.5, 0.7, 0.9] {
            for c in [0.25, 0.5, 1.0] {
                let a = boundary_power_admissible_a(alpha, c, 1.0 / (2.0 * PI).sqrt());
                let p = TsybakovParams::new(alpha, a)?;
                let field = NoiseField::BoundaryPower { c };
                let s = derive_seed(seed, &format!("suite-noise-{d}-{alpha}-{c}"));
                let rep = verify_tsybakov_condition(&field, &marginal, &wstar, &p, n, &grid, s)?;
                // Worst violation in binomial standard errors of the bound.
                let worst = rep
                    .rows
                    .iter()
                    .map(|r| {
                        let b = r.bound.min(1.0);
                        let se = (b * (1.0 - b) / n as f64).sqrt().max(1.0 / n as f64);
                        r.violation / se
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                let tag = format!("d{d}_alpha{alpha}_c{c}");
                out.push(row(
                    format!("tail_boundary_power_{tag}"),
                    worst,
                    SE_MARGIN,
                    worst <= SE_MARGIN,
                    0.0,
                ));

                let oracle = OracleConfig::new(marginal, wstar.clone(), field, p, s)?;
                let data = oracle.draw(n)?;
                let rate = empirical_noise_rate(&data, &wstar)?;
                let exact = boundary_power_mean_eta(c, alpha);
                let se = (exact * (1.0 - exact) / n as f64).sqrt();
                out.push(row(
                    format!("flip_rate_{tag}"),
                    rate,
                    exact,
                    (rate - exact).abs() <= SE_MARGIN * se,
                    se,
                ));
            }
        }
    }
    let marginal = Marginal::Gaussian { d: 2 };
    let wstar = Halfspace::from_coords(vec![1.0, 0.0])?;
    let p = TsybakovParams::new(0.5, 1.0 / 0.3)?;
    for (field, step) in [
        (NoiseField::ConstantMassart { eta: 0.2 }, 0.3),
        (NoiseField::Zero, 0.5),
    ] {
        let rep = verify_tsybakov_condition(&field, &marginal, &wstar, &p, n, &grid, seed)?;
        let mismatches = rep
            .rows
            .iter()
            .filter(|r| r.estimate != if r.t >= step { 1.0 } else { 0.0 })
            .count();
        out.push(row(
            format!("tail_profile_{}", field.name()),
            mismatches as f64,
            0.0,
            mismatches == 0,
            0.0,
        ));
    }
    Ok(out)
}

/// Isotropy of every marginal family and the Gaussian bound parameters.
pub fn bounds_suite(seed: u64) -> Result<Vec<BoundCheck>> {
    let n = 400_000;
    let mut out = Vec::new();
    for name in ["gaussian", "uniform_ball", "laplace_product"] {
        let m = Marginal::from_name(name, 3)?;
        let pts = m.sample(n, derive_seed(seed, name))?;
        let iso = isotropy(&pts);
        out.push(row(
            format!("isotropy_mean_{name}"),
            iso.mean_norm,
            0.02,
            iso.mean_norm <= 0.02,
            0.0,
        ));
        out.push(row(
            format!("isotropy_cov_{name}"),
            iso.max_cov_dev,
            0.03,
            iso.max_cov_dev <= 0.03,
            0.0,
        ));
        let rep = check_bounds(&m, &BoundedParams::log_concave_default(), n, 8, seed)?;
        out.push(row(
            format!("log_concave_bounds_{name}"),
            rep.floor_margin.min(rep.tail_margin),
            0.0,
            rep.passes(),
            rep.bandwidth,
        ));
    }
    // The Gaussian constants are exact at the disk edge and at the origin, so
    // the empirical check gets 25% slack on both. Radii much below 1 leave too
    // few points per kernel box for a floor estimate at this n.
    for r in [1.0, 2.0] {
        let m = Marginal::Gaussian { d: 3 };
        let exact = BoundedParams::gaussian(r)?;
        let slack = BoundedParams::new(
            0.75 * exact.l_low,
            r,
            exact.u_up.map(|u| 1.25 * u),
            exact.b_tail,
            exact.beta_tail,
        )?;
        let rep = check_bounds(&m, &slack, n, 8, seed)?;
        out.push(row(
            format!("gaussian_bounds_R{r:.3}"),
            rep.floor_margin.min(rep.tail_margin),
            0.0,
            rep.passes(),
            rep.bandwidth,
        ));
    }
    // A density floor far above the true density must be rejected.
    let m = Marginal::Gaussian { d: 3 };
    let wrong = BoundedParams::new(1.0, 1.0, None, std::f64::consts::E, 1.0)?;
    let rep = check_bounds(&m, &wrong, n, 8, seed)?;
    out.push(row(
        "impossible_floor_rejected",
        rep.floor_margin,
        0.0,
        !rep.passes(),
        0.0,
    ));
    Ok(out)
}

/// 50 random admissible piecewise-constant profiles × 10 set masses, exact.
pub fn lemma32_suite(seed: u64) -> Result<Vec<BoundCheck>> {
    let mut rng = stream(seed, "suite-lemma32");
    let mut out = Vec::new();
    for i in 0..50 {
        let pieces = rng.random_range(1..=8usize);
        let mut breaks: Vec<f64> = (0..pieces - 1)
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        breaks.push(0.0);
        breaks.push(1.0);
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();
        let values: Vec<f64> = (0..breaks.len() - 1)
            .map(|_| rng.random_range(0.0..0.49))
            .collect();
        let profile = PiecewiseProfile::new(breaks, values)?;
        let alpha = rng.random_range(0.2..0.95);
        let a = profile.tight_a(alpha) * (1.0 + rng.random_range(0.0..2.0));
        let p = TsybakovParams::new(alpha, a)?;
        for j in 0..10 {
            let mass = rng.random_range(0.0..=1.0);
            let c = check_lemma_3_2(&profile, &p, mass)?;
            out.push(row(format!("lemma32_{i}_{j}"), c.lhs, c.rhs, c.holds, 0.0));
        }
    }
    Ok(out)
}

/// Disagreement against the noise-weighted error bound and against `θ/π` for Gaussians.
pub fn claim47_suite(seed: u64) -> Result<Vec<BoundCheck>> {
    let n = 1_000_000;
    let sc = ReferenceScenario::new(seed)?;
    let mut out = Vec::new();
    let params = BoundedParams::gaussian(sc.r_rad)?;
    for eps in [0.01, 0.05] {
        let s = derive_seed(seed, &format!("claim47-{eps}"));
        let mut c = check_claim_4_7(&sc.oracle.marginal, &params, &sc.w, sc.wstar(), eps, n, s)?;
        c.name = format!("claim_4_7_eps{eps}");
        out.push(c);
    }
    let m = Marginal::Gaussian { d: 3 };
    let u = Halfspace::from_coords(vec![1.0, 0.0, 0.0])?;
    for i in 1..=10 {
        let theta = PI * i as f64 / 11.0;
        let v = Halfspace::from_coords(vec![theta.cos(), theta.sin(), 0.0])?;
        let dis = disagreement_rate(&u, &v, &m, n, derive_indexed(seed, "claim47-angle", i))?;
        let se = dis.se_or_nan();
        let expected = theta / PI;
        out.push(row(
            format!("gaussian_disagreement_angle{theta:.4}"),
            dis.mean,
            expected,
            (dis.mean - expected).abs() <= 3.0 * se,
            se,
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSummary {
    /// `(k, estimate, std_err)` for each degree tried.
    pub per_degree: Vec<(usize, f64, f64)>,
    pub checks: Vec<BoundCheck>,
}

/// `E[p²·Ind_B·⟨w,x⟩·y]` for the explicit certificate polynomial on the
/// reference scenario, `k ∈ {2, …, 12}`, `n = 10⁶`.
pub fn certificate_suite(seed: u64) -> Result<CertificateSummary> {
    let sc = ReferenceScenario::new(seed)?;
    let band = sc.band()?;
    let data = sc.oracle.draw_stream(1_000_000, "suite-certificate", 0)?;
    let mut per_degree = Vec::new();
    let mut checks = Vec::new();
    for k in 2..=12usize {
        let oc = oracle_certificate(sc.wstar(), &sc.w, k, &sc.bounds, None)?;
        let poly: &MultivariatePoly = &oc.poly;
        let vals: Vec<f64> = (0..data.len())
            .into_par_iter()
            .map(|i| {
                let x = data.x(i);
                let m = sc.w.margin(x);
                if band.contains_margin(m) {
                    let p = poly.eval(x).unwrap_or(f64::NAN);
                    p * p * m * data.y(i)
                } else {
                    0.0
                }
            })
            .collect();
        let s = mean_se(vals);
        let se = s.se_or_nan();
        per_degree.push((k, s.mean, se));
        checks.push(row(
            format!("certificate_k{k}"),
            s.mean,
            -3.0 * se,
            s.mean <= -3.0 * se,
            se,
        ));
    }
    let any = checks.iter().any(|c| c.holds);
    let best = per_degree
        .iter()
        .map(|(_, m, se)| m / se)
        .fold(f64::INFINITY, f64::min);
    checks.push(row("certificate_exists", best, -3.0, any, 0.0));
    Ok(CertificateSummary { per_degree, checks })
}

/// At `w = w*`, 20 random squared polynomials each give a reweighted
/// objective no lower than −4 standard errors.
pub fn positivity_suite(seed: u64) -> Result<Vec<BoundCheck>> {
    let sc = ReferenceScenario::new(seed)?;
    let data = sc.oracle.draw_stream(1_000_000, "suite-positivity", 0)?;
    let mut rng = stream(seed, "suite-positivity-polys");
    let polys: Vec<MultivariatePoly> = (0..20)
        .map(|_| {
            let k = rng.random_range(1..=4usize);
            let basis = MonomialBasis::new(2, k)?;
            let coeffs = (0..basis.len()).map(|_| normal(&mut rng)).collect();
            MultivariatePoly::new(basis, coeffs)
        })
        .collect::<Result<_>>()?;
    let fns: Vec<Box<dyn Fn(&[f64]) -> f64 + Sync>> = polys
        .into_iter()
        .map(|p| {
            Box::new(move |x: &[f64]| {
                let v = p.eval(x).unwrap_or(f64::NAN);
                v * v
            }) as Box<dyn Fn(&[f64]) -> f64 + Sync>
        })
        .collect();
    let refs: Vec<&(dyn Fn(&[f64]) -> f64 + Sync)> = fns.iter().map(|f| f.as_ref()).collect();
    check_fact_positivity(&data, sc.wstar(), &refs)
}

/// Upper and lower error relations for `h = w` on the reference scenario.
pub fn sandwich_suite(seed: u64) -> Result<Vec<BoundCheck>> {
    let sc = ReferenceScenario::new(seed)?;
    let data = sc.oracle.draw_stream(1_000_000, "suite-sandwich", 0)?;
    let mut out = Vec::new();
    for theta in [0.05, 0.3, 1.0] {
        let h = Halfspace::from_coords(vec![-(sc.theta - theta).sin(), (sc.theta - theta).cos()])?;
        let rep = check_error_sandwich(&data, &h, sc.wstar(), &sc.oracle.tsybakov)?;
        let mut up = rep.upper;
        up.name = format!("sandwich_upper_theta{theta}");
        let mut lo = rep.lower;
        lo.name = format!("sandwich_lower_theta{theta}");
        out.push(up);
        out.push(lo);
    }
    Ok(out)
}
