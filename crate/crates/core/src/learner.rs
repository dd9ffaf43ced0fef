//! Online projected gradient descent over the unit ball, driven by
//! per-iteration certificate losses
//! `ℓ̂_t(w) = −(1/N) Σ (p_t(x) + λ) · y · ⟨w, x⟩`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::certificate::{
    certify, BandIndicator, CertificateMatrix, CertificateScaling, CertifyConfig, MomentEstimator,
    Preconditioner, ValidationReport,
};
use crate::distributions::BoundedParams;
use crate::error::{invalid, Error, Result};
use crate::geometry::{angle, dot, norm, Halfspace, WeightVector};
use crate::noise::{c_alpha_a, TsybakovParams};
use crate::oracle::{Dataset, OracleConfig};
use crate::rng::derive_indexed;
use crate::stats::{mean_se, median, MeanSe};

/// Diameter of the unit ball.
pub const DIAMETER: f64 = 2.0;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradBound {
    Fixed(f64),
    /// Running max of observed gradient norms, floored at 1.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossEstimator {
    #[default]
    Mean,
    MedianOfMeans {
        groups: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub eps: f64,
    pub delta: f64,
    pub k: usize,
    pub t_max: usize,
    pub n_per_iter: usize,
    /// `None` means `εR/32`.
    pub lambda: Option<f64>,
    pub grad_bound: GradBound,
    pub q_bound: f64,
    pub bounds: BoundedParams,
    pub tsybakov: TsybakovParams,
    pub seed: u64,
    pub scaling: CertificateScaling,
    pub preconditioner: Preconditioner,
    pub moment_estimator: MomentEstimator,
    pub loss_estimator: LossEstimator,
    pub z_accept: f64,
}

impl LearnerConfig {
    pub fn new(eps: f64, k: usize, bounds: BoundedParams, tsybakov: TsybakovParams) -> Self {
        Self {
            eps,
            delta: 0.1,
            k,
            t_max: 2000,
            n_per_iter: 20_000,
            lambda: None,
            grad_bound: GradBound::Adaptive,
            q_bound: 1.0,
            bounds,
            tsybakov,
            seed: 0,
            scaling: CertificateScaling::MinimalNorm,
            preconditioner: Preconditioner::MarginWhitening { power: 3 },
            moment_estimator: MomentEstimator::Mean,
            loss_estimator: LossEstimator::Mean,
            z_accept: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= PI / 2.0) {
            return Err(invalid(
                "eps",
                format!("must lie in (0, π/2], got {}", self.eps),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(
                "delta",
                format!("must lie in (0, 1), got {}", self.delta),
            ));
        }
        if self.k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        if self.t_max == 0 {
            return Err(invalid("t_max", "must be at least 1"));
        }
        if self.n_per_iter == 0 {
            return Err(invalid("n_per_iter", "must be at least 1"));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(invalid("lambda", format!("must be nonnegative, got {l}")));
            }
        }
        if let GradBound::Fixed(g) = self.grad_bound {
            if !(g > 0.0 && g.is_finite()) {
                return Err(invalid("grad_bound", format!("must be positive, got {g}")));
            }
        }
        if !(self.q_bound > 0.0 && self.q_bound.is_finite()) {
            return Err(invalid(
                "q_bound",
                format!("must be positive, got {}", self.q_bound),
            ));
        }
        if !(self.z_accept >= 0.0 && self.z_accept.is_finite()) {
            return Err(invalid(
                "z_accept",
                format!("must be nonnegative, got {}", self.z_accept),
            ));
        }
        if let MomentEstimator::MedianOfMeans { groups } = self.moment_estimator {
            if groups == 0 || groups > self.n_per_iter {
                return Err(invalid(
                    "moment_estimator",
                    "groups must lie in [1, n_per_iter]",
                ));
            }
        }
        if let LossEstimator::MedianOfMeans { groups } = self.loss_estimator {
            if groups == 0 || groups > self.n_per_iter {
                return Err(invalid(
                    "loss_estimator",
                    "groups must lie in [1, n_per_iter]",
                ));
            }
        }
        Ok(())
    }

    pub fn lambda_value(&self) -> f64 {
        self.lambda.unwrap_or(self.eps * self.bounds.r_rad / 32.0)
    }

    /// `ε′ = ε·R²/256 · C_α^A · (RL/2)^{1/α}`. Diagnostic only.
    pub fn eps_prime(&self) -> f64 {
        let b = &self.bounds;
        let a = self.tsybakov.alpha();
        self.eps * b.r_rad * b.r_rad / 256.0
            * c_alpha_a(&self.tsybakov)
            * (b.r_rad * b.l_low / 2.0).powf(1.0 / a)
    }

    pub fn certify_config(&self) -> CertifyConfig {
        CertifyConfig {
            theta: self.eps,
            r_rad: self.bounds.r_rad,
            k: self.k,
            q_bound: self.q_bound,
            scaling: self.scaling,
            estimator: self.moment_estimator,
            preconditioner: self.preconditioner,
            z_accept: self.z_accept,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub t: usize,
    pub w: WeightVector,
    pub last_certificate: Option<CertificateMatrix>,
    /// Largest gradient norm seen so far.
    pub g_max: f64,
    /// Step size used to reach this state; 0 before the first step.
    pub last_step: f64,
}

pub fn initial_state(cfg: &LearnerConfig, d: usize) -> Result<LearnerState> {
    cfg.validate()?;
    Ok(LearnerState {
        t: 0,
        w: WeightVector::basis(d, 0)?,
        last_certificate: None,
        g_max: 0.0,
        last_step: 0.0,
    })
}

/// Nonnegative reweighting `p_t` of the loss.
#[derive(Debug, Clone, Copy)]
pub enum Reweighting<'a> {
    Zero,
    Certificate {
        cert: &'a CertificateMatrix,
        band: &'a BandIndicator,
    },
}

impl Reweighting<'_> {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Reweighting::Zero => 0.0,
            Reweighting::Certificate { cert, band } => {
                if band.contains_margin(band.w().margin(x)) {
                    let mut f = vec![0.0; cert.basis.len()];
                    cert.basis.eval_into(x, &mut f);
                    cert.quad_form(&f)
                } else {
                    0.0
                }
            }
        }
    }
}

fn check_dims(data: &Dataset, rew: &Reweighting<'_>) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    if let Reweighting::Certificate { cert, .. } = rew {
        if cert.basis.dim() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: cert.basis.dim(),
                got: data.dim(),
            });
        }
    }
    Ok(())
}

/// Per-sample weights `(p_t(x) + λ) · y`.
fn weights(data: &Dataset, rew: &Reweighting<'_>, lambda: f64) -> Vec<f64> {
    let starts: Vec<usize> = (0..data.len()).step_by(CHUNK).collect();
    starts
        .par_iter()
        .map(|&s| {
            (s..(s + CHUNK).min(data.len()))
                .map(|i| (rew.value(data.x(i)) + lambda) * data.y(i))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Gradient of the linear loss: `−(1/N) Σ (p_t(x) + λ) · y · x`.
pub fn loss_gradient(data: &Dataset, rew: &Reweighting<'_>, lambda: f64) -> Result<Vec<f64>> {
    loss_gradient_with(data, rew, lambda, LossEstimator::Mean)
}

pub fn loss_gradient_with(
    data: &Dataset,
    rew: &Reweighting<'_>,
    lambda: f64,
    estimator: LossEstimator,
) -> Result<Vec<f64>> {
    check_dims(data, rew)?;
    let wts = weights(data, rew, lambda);
    let d = data.dim();
    let block_mean = |start: usize, end: usize| -> Vec<f64> {
        let mut g = vec![0.0; d];
        for i in start..end {
            let x = data.x(i);
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj -= wts[i] * xj;
            }
        }
        let len = (end - start) as f64;
        g.iter_mut().for_each(|v| *v /= len);
        g
    };
    match estimator {
        LossEstimator::Mean => Ok(block_mean(0, data.len())),
        LossEstimator::MedianOfMeans { groups } => {
            if groups == 0 || groups > data.len() {
                return Err(invalid(
                    "groups",
                    format!("need 1 ≤ groups ≤ {}", data.len()),
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
                    block_mean(g * size, end)
                })
                .collect();
            Ok((0..d)
                .map(|j| {
                    let mut col: Vec<f64> = means.iter().map(|m| m[j]).collect();
                    median(&mut col)
                })
                .collect())
        }
    }
}

/// `ℓ̂_t(w)` with its standard error.
pub fn loss_value(data: &Dataset, rew: &Reweighting<'_>, lambda: f64, w: &[f64]) -> Result<MeanSe> {
    check_dims(data, rew)?;
    if w.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: w.len(),
        });
    }
    let wts = weights(data, rew, lambda);
    Ok(mean_se(
        (0..data.len()).map(|i| -wts[i] * dot(w, data.x(i))),
    ))
}

/// Euclidean projection onto the unit ball.
pub fn project_unit_ball(v: &mut [f64]) {
    let n = norm(v);
    if n > 1.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// `w ← Π(w − η_t·g)` with `η_t = K/(G√t)`.
pub fn opgd_step(
    state: &LearnerState,
    gradient: &[f64],
    cfg: &LearnerConfig,
) -> Result<LearnerState> {
    if gradient.len() != state.w.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.w.dim(),
            got: gradient.len(),
        });
    }
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::Domain("gradient has non-finite entries".into()));
    }
    let t = state.t + 1;
    let g_norm = norm(gradient);
    let g_max = state.g_max.max(g_norm);
    let g_bound = match cfg.grad_bound {
        GradBound::Fixed(g) => g,
        GradBound::Adaptive => g_max.max(1.0),
    };
    let eta = DIAMETER / (g_bound * (t as f64).sqrt());
    let mut next: Vec<f64> = state
        .w
        .as_slice()
        .iter()
        .zip(gradient)
        .map(|(w, g)| w - eta * g)
        .collect();
    project_unit_ball(&mut next);
    Ok(LearnerState {
        t,
        w: WeightVector::new(next)?,
        last_certificate: state.last_certificate.clone(),
        g_max,
        last_step: eta,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    CertificateFailedAccept,
    IterationCap,
    Error(String),
}

impl RunStatus {
    pub fn as_str(&self) -> &str {
        match self {
            RunStatus::CertificateFailedAccept => "certificate_failed_accept",
            RunStatus::IterationCap => "iteration_cap",
            RunStatus::Error(_) => "error",
        }
    }
}

/// One OPGD round. `w` is the iterate the certificate was computed for;
/// `w_next` is the iterate after the step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub w: Vec<f64>,
    pub w_norm: f64,
    /// Angle between `w` and the target, when the target is known.
    pub angle: Option<f64>,
    /// Full-budget fitted objective; `None` when `w = 0`.
    pub fit_objective: Option<f64>,
    pub holdout: Option<ValidationReport>,
    pub certificate_found: bool,
    /// `ℓ̂_t(w)`.
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub grad_norm: f64,
    pub step: f64,
    pub w_next: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub status: RunStatus,
    /// Iteration whose iterate was returned.
    pub returned_t: usize,
    /// Set when the iteration cap fallback picked the returned iterate.
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub w_hat: WeightVector,
    pub trace: RunTrace,
    pub lambda: f64,
}

impl RunOutcome {
    pub fn angle_to(&self, wstar: &Halfspace) -> Result<f64> {
        angle(self.w_hat.as_slice(), wstar.normal().as_slice())
    }
}

/// Everything about a certified round that an observer may want to check.
pub struct CertifiedRound<'a> {
    pub t: usize,
    pub w: &'a WeightVector,
    pub certificate: &'a CertificateMatrix,
    pub band: &'a BandIndicator,
    pub lambda: f64,
}

pub fn run(cfg: &LearnerConfig, oracle: &OracleConfig) -> Result<RunOutcome> {
    run_with_observer(cfg, oracle, |_| Ok(()))
}

/// Runs the learner, calling `observer` on every round where a certificate
/// was accepted.
pub fn run_with_observer<F>(
    cfg: &LearnerConfig,
    oracle: &OracleConfig,
    mut observer: F,
) -> Result<RunOutcome>
where
    F: FnMut(&CertifiedRound<'_>) -> Result<()>,
{
    cfg.validate()?;
    oracle.validate()?;
    let d = oracle.dim();
    let lambda = cfg.lambda_value();
    let ccfg = cfg.certify_config();
    let wstar = oracle.target.clone();
    let mut state = initial_state(cfg, d)?;
    let mut records: Vec<TraceRecord> = Vec::new();

    let normalized = |w: &WeightVector| -> Result<WeightVector> {
        let n = w.norm();
        if n > 0.0 {
            Ok(w.scaled(1.0 / n))
        } else {
            WeightVector::basis(w.dim(), 0)
        }
    };

    for t in 1..=cfg.t_max {
        let idx = derive_indexed(cfg.seed, "learner", t as u64);
        let round = (|| -> Result<TraceRecord> {
            let w = state.w.clone();
            let w_norm = w.norm();
            let ang = if w_norm > 0.0 {
                Some(angle(w.as_slice(), wstar.normal().as_slice())?)
            } else {
                None
            };
            let mut fit_objective = None;
            let mut holdout = None;
            let mut cert_pair = None;
            if w_norm > 0.0 {
                let h = Halfspace::new(w.clone())?;
                let fit = oracle.draw_stream(cfg.n_per_iter, "fit", idx)?;
                let hold = oracle.draw_stream(cfg.n_per_iter, "holdout", idx)?;
                let out = certify(&fit, &hold, &h, &ccfg)?;
                fit_objective = Some(out.fit_objective);
                holdout = out.validation;
                if !out.accepted {
                    return Ok(TraceRecord {
                        t,
                        w: w.as_slice().to_vec(),
                        w_norm,
                        angle: ang,
                        fit_objective,
                        holdout,
                        certificate_found: false,
                        loss: f64::NAN,
                        gradient: Vec::new(),
                        grad_norm: f64::NAN,
                        step: 0.0,
                        w_next: w.as_slice().to_vec(),
                    });
                }
                let cert = out.certificate.expect("accepted implies a certificate");
                cert_pair = Some((cert, out.band));
            }
            let data = oracle.draw_stream(cfg.n_per_iter, "loss", idx)?;
            let rew = match &cert_pair {
                Some((c, b)) => Reweighting::Certificate { cert: c, band: b },
                None => Reweighting::Zero,
            };
            let gradient = loss_gradient_with(&data, &rew, lambda, cfg.loss_estimator)?;
            let loss = dot(&gradient, w.as_slice());
            if let Some((c, b)) = &cert_pair {
                observer(&CertifiedRound {
                    t,
                    w: &w,
                    certificate: c,
                    band: b,
                    lambda,
                })?;
            }
            let mut next = opgd_step(&state, &gradient, cfg)?;
            next.last_certificate = cert_pair.map(|(c, _)| c);
            let rec = TraceRecord {
                t,
                w: w.as_slice().to_vec(),
                w_norm,
                angle: ang,
                fit_objective,
                holdout,
                certificate_found: next.last_certificate.is_some(),
                loss,
                grad_norm: norm(&gradient),
                gradient,
                step: next.last_step,
                w_next: next.w.as_slice().to_vec(),
            };
            state = next;
            Ok(rec)
        })();
        match round {
            Ok(rec) if !rec.certificate_found && rec.w_norm > 0.0 => {
                let w_hat = normalized(&WeightVector::new(rec.w.clone())?)?;
                records.push(rec);
                return Ok(RunOutcome {
                    w_hat,
                    trace: RunTrace {
                        records,
                        status: RunStatus::CertificateFailedAccept,
                        returned_t: t,
                        fallback_used: false,
                    },
                    lambda,
                });
            }
            Ok(rec) => records.push(rec),
            Err(e) => {
                let w_hat = normalized(&state.w)?;
                return Ok(RunOutcome {
                    w_hat,
                    trace: RunTrace {
                        records,
                        status: RunStatus::Error(e.to_string()),
                        returned_t: state.t,
                        fallback_used: false,
                    },
                    lambda,
                });
            }
        }
    }

    // Iteration cap: least negative held-out objective among certified rounds.
    let best = records
        .iter()
        .filter_map(|r| r.holdout.map(|h| (r, h.objective_est)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(r, _)| r);
    let (w_hat, returned_t) = match best {
        Some(r) => (normalized(&WeightVector::new(r.w.clone())?)?, r.t),
        None => (normalized(&state.w)?, cfg.t_max),
    };
    Ok(RunOutcome {
        w_hat,
        trace: RunTrace {
            records,
            status: RunStatus::IterationCap,
            returned_t,
            fallback_used: true,
        },
        lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationReport {
    pub l_at_w: MeanSe,
    pub l_at_wstar: MeanSe,
    /// Paired `ℓ_t(w) − ℓ_t(w*)`.
    pub difference: MeanSe,
    /// `‖w‖(Rθ/16 − λ)`.
    pub lower_bound_w: f64,
    /// `−λ(R/2)·C_α^A·(RL/2)^{1/α}`.
    pub upper_bound_wstar: f64,
}

/// Empirical `ℓ_t` at `w` and at `w*` on fresh samples.
pub fn separation_check(
    w: &[f64],
    wstar: &Halfspace,
    cert: &CertificateMatrix,
    band: &BandIndicator,
    lambda: f64,
    samples: &Dataset,
    bounds: &BoundedParams,
    tsybakov: &TsybakovParams,
) -> Result<SeparationReport> {
    let rew = Reweighting::Certificate { cert, band };
    check_dims(samples, &rew)?;
    if w.len() != samples.dim() || wstar.dim() != samples.dim() {
        return Err(Error::DimensionMismatch {
            expected: samples.dim(),
            got: w.len(),
        });
    }
    let wts = weights(samples, &rew, lambda);
    let ws = wstar.normal().as_slice();
    let at = |u: &[f64]| mean_se((0..samples.len()).map(|i| -wts[i] * dot(u, samples.x(i))));
    let diff: Vec<f64> = w.iter().zip(ws).map(|(a, b)| a - b).collect();
    let r = bounds.r_rad;
    Ok(SeparationReport {
        l_at_w: at(w),
        l_at_wstar: at(ws),
        difference: at(&diff),
        lower_bound_w: norm(w) * (r * band.theta() / 16.0 - lambda),
        upper_bound_wstar: -lambda
            * (r / 2.0)
            * c_alpha_a(tsybakov)
            * (r * bounds.l_low / 2.0).powf(1.0 / tsybakov.alpha()),
    })
}

/// `Σ_t ℓ̂_t(w^(t)) − min_u Σ_t ℓ̂_t(u)` over the recorded iterates `u`, and
/// the bound `(3/2)·G·K·√T` with `G` the realized max gradient norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretReport {
    pub regret: f64,
    pub bound: f64,
    pub rounds: usize,
}

impl RegretReport {
    pub fn holds(&self) -> bool {
        self.regret <= self.bound + 1e-6
    }
}

pub fn regret_check(trace: &RunTrace) -> RegretReport {
    let steps: Vec<&TraceRecord> = trace
        .records
        .iter()
        .filter(|r| !r.gradient.is_empty())
        .collect();
    let rounds = steps.len();
    if rounds == 0 {
        return RegretReport {
            regret: 0.0,
            bound: 0.0,
            rounds,
        };
    }
    let d = steps[0].gradient.len();
    let mut total_grad = vec![0.0; d];
    let mut incurred = 0.0;
    for r in &steps {
        incurred += dot(&r.gradient, &r.w);
        total_grad
            .iter_mut()
            .zip(&r.gradient)
            .for_each(|(a, g)| *a += g);
    }
    let best = steps
        .iter()
        .map(|r| dot(&total_grad, &r.w))
        .chain(std::iter::once(dot(
            &total_grad,
            &steps.last().unwrap().w_next,
        )))
        .fold(f64::INFINITY, f64::min);
    let g = steps.iter().map(|r| r.grad_norm).fold(0.0, f64::max);
    RegretReport {
        regret: incurred - best,
        bound: 1.5 * g * DIAMETER * (rounds as f64).sqrt(),
        rounds,
    }
}
