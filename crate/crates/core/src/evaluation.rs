//! Error metrics and Monte-Carlo / exact checks of the error relations
//! between a hypothesis, the target, and the noisy labels.

use rayon::prelude::*;

use crate::distributions::{BoundedParams, Marginal, Points};
use crate::error::{invalid, Error, Result};
use crate::geometry::{angle, Halfspace};
use crate::noise::{c_alpha_a, TsybakovParams};
use crate::oracle::Dataset;
use crate::stats::{mean_se, MeanSe};

/// Pass margin, in standard errors, for all Monte-Carlo bound checks.
pub const SE_MARGIN: f64 = 4.0;

/// Smallest right-hand side kept for the lower error bound.
pub const RHS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub angle_err: f64,
    /// Disagreement with the target on the evaluation sample.
    pub disagreement: f64,
    /// Disagreement with the labels on the evaluation sample.
    pub misclass: f64,
    pub bound_checks: Vec<BoundCheck>,
}

fn disagreement_points(points: &Points, h1: &Halfspace, h2: &Halfspace) -> MeanSe {
    let flags: Vec<f64> = points
        .as_flat()
        .par_chunks(points.dim())
        .map(|x| (h1.classify(x) != h2.classify(x)) as u8 as f64)
        .collect();
    mean_se(flags)
}

/// Monte-Carlo `Pr_x[h1(x) ≠ h2(x)]` with its standard error.
pub fn disagreement_rate(
    h1: &Halfspace,
    h2: &Halfspace,
    m: &Marginal,
    n: usize,
    seed: u64,
) -> Result<MeanSe> {
    if n < 1000 {
        return Err(invalid("n", format!("need at least 1000 samples, got {n}")));
    }
    if h1.dim() != m.dim() || h2.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: h1.dim().max(h2.dim()),
        });
    }
    let points = m.sample(n, seed)?;
    Ok(disagreement_points(&points, h1, h2))
}

/// Estimates of `E[F(x)·⟨w*,x⟩·y]`; each passes iff `estimate ≥ −4·se`.
pub fn check_fact_positivity(
    data: &Dataset,
    wstar: &Halfspace,
    fns: &[&(dyn Fn(&[f64]) -> f64 + Sync)],
) -> Result<Vec<BoundCheck>> {
    if data.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    if wstar.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: wstar.dim(),
        });
    }
    Ok(fns
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let vals: Vec<f64> = (0..data.len())
                .into_par_iter()
                .map(|i| {
                    let x = data.x(i);
                    f(x) * wstar.margin(x) * data.y(i)
                })
                .collect();
            let s = mean_se(vals);
            let se = s.std_err.unwrap_or(0.0);
            BoundCheck {
                name: format!("positivity_{j}"),
                lhs: s.mean,
                rhs: 0.0,
                holds: s.mean >= -SE_MARGIN * se,
                std_err: se,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub err_h: MeanSe,
    pub err_f: MeanSe,
    pub dis: MeanSe,
    /// `err(h) ≤ err(f) + dis(h, f)`; zero tolerance.
    pub upper: BoundCheck,
    /// `err(h) − err(f) ≥ C_α^A · dis^{1/α}`, within 4 standard errors.
    pub lower: BoundCheck,
    /// The lower right-hand side was raised to [`RHS_FLOOR`].
    pub clamped: bool,
}

pub fn check_error_sandwich(
    data: &Dataset,
    h: &Halfspace,
    wstar: &Halfspace,
    p: &TsybakovParams,
) -> Result<SandwichReport> {
    if data.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    if h.dim() != data.dim() || wstar.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: h.dim(),
        });
    }
    let rows: Vec<[f64; 3]> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let x = data.x(i);
            let y = data.y(i);
            let hx = h.classify(x);
            let fx = wstar.classify(x);
            [
                (hx != y) as u8 as f64,
                (fx != y) as u8 as f64,
                (hx != fx) as u8 as f64,
            ]
        })
        .collect();
    let err_h = mean_se(rows.iter().map(|r| r[0]));
    let err_f = mean_se(rows.iter().map(|r| r[1]));
    let dis = mean_se(rows.iter().map(|r| r[2]));
    let slack = mean_se(rows.iter().map(|r| r[1] + r[2] - r[0]));
    let excess = mean_se(rows.iter().map(|r| r[0] - r[1]));

    let upper = BoundCheck {
        name: "error_upper".into(),
        lhs: err_h.mean,
        rhs: err_f.mean + dis.mean,
        // pointwise 1{h≠y} ≤ 1{f≠y} + 1{h≠f}, so the sample slack is never negative
        holds: slack.mean >= 0.0,
        std_err: slack.std_err.unwrap_or(0.0),
    };

    let alpha = p.alpha();
    let c = c_alpha_a(p);
    let (rhs, clamped) = if dis.mean > 0.0 {
        let log_rhs = c.ln() + dis.mean.ln() / alpha;
        if log_rhs < RHS_FLOOR.ln() {
            (RHS_FLOOR, true)
        } else {
            (log_rhs.exp(), false)
        }
    } else {
        (0.0, false)
    };
    // delta method for the right-hand side
    let rhs_se = if dis.mean > 0.0 {
        rhs / alpha / dis.mean * dis.std_err.unwrap_or(0.0)
    } else {
        0.0
    };
    let se = (excess.std_err.unwrap_or(0.0).powi(2) + rhs_se.powi(2)).sqrt();
    let lower = BoundCheck {
        name: "error_lower".into(),
        lhs: excess.mean,
        rhs,
        holds: excess.mean >= rhs - SE_MARGIN * se,
        std_err: se,
    };
    Ok(SandwichReport {
        err_h,
        err_f,
        dis,
        upper,
        lower,
        clamped,
    })
}

/// A flip-probability profile on `[0, 1]` that is constant on each piece
/// `[breaks[j], breaks[j+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseProfile {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseProfile {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breaks.len() != values.len() + 1 {
            return Err(invalid("breaks", "need one more break than values"));
        }
        if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(invalid("breaks", "must start at 0 and end at 1"));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("breaks", "must be strictly increasing"));
        }
        if values.iter().any(|v| !(0.0..=0.5).contains(v)) {
            return Err(invalid("values", "flip probabilities must lie in [0, 1/2]"));
        }
        Ok(Self { breaks, values })
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(j, v)| (self.breaks[j], self.breaks[j + 1], *v))
    }

    /// Measure of `{η ≥ level}`.
    pub fn mass_at_least(&self, level: f64) -> f64 {
        self.pieces()
            .filter(|(_, _, v)| *v >= level)
            .map(|(a, b, _)| b - a)
            .sum()
    }

    /// Smallest `A` for which the tail condition holds. Since the tail mass is
    /// a step function of `t`, it suffices to check `t_j = 1/2 − η_j`.
    pub fn tight_a(&self, alpha: f64) -> f64 {
        let e = alpha / (1.0 - alpha);
        self.values
            .iter()
            .map(|v| {
                let t = 0.5 - v;
                let mass = self.mass_at_least(*v);
                if t <= 0.0 {
                    f64::INFINITY
                } else {
                    mass / t.powf(e)
                }
            })
            .fold(0.0, f64::max)
    }

    /// `∫_0^s (1 − 2η(x)) dx`.
    pub fn integrate_margin(&self, s: f64) -> f64 {
        self.pieces()
            .map(|(a, b, v)| (b.min(s) - a).max(0.0) * (1.0 - 2.0 * v))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma32Check {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Exact check of `E[1_S(1 − 2η)] ≥ C_α^A · (E[1_S])^{1/α}` for
/// `S = [0, set_mass]` under the uniform measure on `[0, 1]`.
pub fn check_lemma_3_2(
    profile: &PiecewiseProfile,
    p: &TsybakovParams,
    set_mass: f64,
) -> Result<Lemma32Check> {
    if !(0.0..=1.0).contains(&set_mass) {
        return Err(invalid(
            "set_mass",
            format!("must lie in [0, 1], got {set_mass}"),
        ));
    }
    let violating: Vec<f64> = profile
        .values
        .iter()
        .filter_map(|v| {
            let t = 0.5 - v;
            let mass = profile.mass_at_least(*v);
            let ok = t > 0.0 && mass <= p.tail_bound(t) * (1.0 + 1e-12);
            (!ok).then_some(t)
        })
        .collect();
    if !violating.is_empty() {
        return Err(Error::Precondition(format!(
            "profile violates the tail condition at t = {violating:?}"
        )));
    }
    let lhs = profile.integrate_margin(set_mass);
    let rhs = c_alpha_a(p) * set_mass.powf(1.0 / p.alpha());
    Ok(Lemma32Check {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-12,
    })
}

/// Monte-Carlo disagreement against `U·(ln²(B/ε)/β²)·θ(u, v) + ε`.
pub fn check_claim_4_7(
    m: &Marginal,
    params: &BoundedParams,
    u: &Halfspace,
    v: &Halfspace,
    eps: f64,
    n: usize,
    seed: u64,
) -> Result<BoundCheck> {
    let u_up = params
        .u_up
        .ok_or_else(|| invalid("u_up", "the density ceiling U is required"))?;
    if !(eps > 0.0) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    let theta = angle(u.normal().as_slice(), v.normal().as_slice())?;
    let dis = disagreement_rate(u, v, m, n, seed)?;
    let log_term = (params.b_tail / eps).ln().max(0.0);
    let rhs = u_up * log_term * log_term / (params.beta_tail * params.beta_tail) * theta + eps;
    let se = dis.std_err.unwrap_or(0.0);
    Ok(BoundCheck {
        name: "claim_4_7".into(),
        lhs: dis.mean,
        rhs,
        holds: dis.mean <= rhs + SE_MARGIN * se,
        std_err: se,
    })
}

/// Angle, disagreement and misclassification of `w_hat` on a labeled sample.
pub fn evaluate(
    w_hat: &Halfspace,
    wstar: &Halfspace,
    data: &Dataset,
    p: &TsybakovParams,
) -> Result<EvalReport> {
    let sandwich = check_error_sandwich(data, w_hat, wstar, p)?;
    Ok(EvalReport {
        angle_err: angle(w_hat.normal().as_slice(), wstar.normal().as_slice())?,
        disagreement: sandwich.dis.mean,
        misclass: sandwich.err_h.mean,
        bound_checks: vec![sandwich.upper, sandwich.lower],
    })
}
