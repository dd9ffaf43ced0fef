//! Tsybakov noise parameters, concrete flip-probability fields, and a
//! Monte-Carlo check of the tail condition `Pr[η(x) ≥ 1/2 − t] ≤ A·t^{α/(1−α)}`.

use crate::distributions::Marginal;
use crate::error::{invalid, Error, Result};
use crate::geometry::Halfspace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsybakovParams {
    alpha: f64,
    a_const: f64,
}

impl TsybakovParams {
    pub fn new(alpha: f64, a_const: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        if !(a_const > 0.0 && a_const.is_finite()) {
            return Err(invalid(
                "a_const",
                format!("must be positive, got {a_const}"),
            ));
        }
        Ok(Self { alpha, a_const })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a_const(&self) -> f64 {
        self.a_const
    }

    /// `(1−α)/α`, the power applied to the margin by [`NoiseField::BoundaryPower`].
    pub fn margin_exponent(&self) -> f64 {
        (1.0 - self.alpha) / self.alpha
    }

    /// `α/(1−α)`, the power of `t` in the tail condition.
    pub fn tail_exponent(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }

    pub fn tail_bound(&self, t: f64) -> f64 {
        self.a_const * t.powf(self.tail_exponent())
    }
}

/// `C_α^A = α((1−α)/A)^{(1−α)/α}`.
pub fn c_alpha_a(p: &TsybakovParams) -> f64 {
    p.alpha * ((1.0 - p.alpha) / p.a_const).powf(p.margin_exponent())
}

/// Flip-probability field `η(x) ∈ [0, 1/2]` around the target halfspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseField {
    /// `η(x) = max(0, 1/2 − c·|⟨w*,x⟩|^{(1−α)/α})`.
    BoundaryPower {
        c: f64,
    },
    ConstantMassart {
        eta: f64,
    },
    Zero,
}

impl NoiseField {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseField::BoundaryPower { c } if !(c > 0.0 && c.is_finite()) => {
                Err(invalid("c", format!("must be positive, got {c}")))
            }
            NoiseField::ConstantMassart { eta } if !(0.0..0.5).contains(&eta) => {
                Err(invalid("eta", format!("must lie in [0, 1/2), got {eta}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseField::BoundaryPower { .. } => "boundary_power",
            NoiseField::ConstantMassart { .. } => "constant_massart",
            NoiseField::Zero => "zero",
        }
    }

    /// Smallest `A` for which this field satisfies the tail condition with
    /// exponent `alpha`, given the sup of the marginal's 1-D projection density.
    /// The event at `t = 1/2` is the whole space, so `A ≥ 2^{α/(1−α)}` always.
    pub fn admissible_a(&self, alpha: f64, proj_density_sup: f64) -> f64 {
        let e = alpha / (1.0 - alpha);
        match *self {
            NoiseField::BoundaryPower { c } => {
                boundary_power_admissible_a(alpha, c, proj_density_sup)
            }
            NoiseField::ConstantMassart { eta } => (0.5 - eta).powf(-e),
            NoiseField::Zero => 2f64.powf(e),
        }
    }

    /// Flip probability for a point whose signed margin to the target is `margin`.
    #[inline]
    pub fn eta_from_margin(&self, p: &TsybakovParams, margin: f64) -> f64 {
        match *self {
            NoiseField::BoundaryPower { c } => {
                (0.5 - c * margin.abs().powf(p.margin_exponent())).max(0.0)
            }
            NoiseField::ConstantMassart { eta } => eta,
            NoiseField::Zero => 0.0,
        }
    }

    pub fn eta_at(&self, p: &TsybakovParams, wstar: &Halfspace, x: &[f64]) -> Result<f64> {
        if x.len() != wstar.dim() {
            return Err(Error::DimensionMismatch {
                expected: wstar.dim(),
                got: x.len(),
            });
        }
        Ok(self.eta_from_margin(p, wstar.margin(x)))
    }
}

/// Smallest `A` for which [`NoiseField::BoundaryPower`] satisfies the tail
/// condition under a marginal whose 1-D projections have density at most
/// `proj_density_sup`.
///
/// For `t < 1/2` the event `η ≥ 1/2 − t` is `|⟨w*,x⟩| ≤ (t/c)^{α/(1−α)}`, of
/// probability at most `2·U'·(t/c)^{α/(1−α)}`. At `t = 1/2` the event is the
/// whole space, forcing `A ≥ 2^{α/(1−α)}`.
pub fn boundary_power_admissible_a(alpha: f64, c: f64, proj_density_sup: f64) -> f64 {
    let e = alpha / (1.0 - alpha);
    (2.0 * proj_density_sup * c.powf(-e)).max(2f64.powf(e))
}

/// 20 log-spaced points in `[10⁻³, 1/2]`.
pub fn default_t_grid() -> Vec<f64> {
    let (lo, hi) = (1e-3f64.ln(), 0.5f64.ln());
    (0..20)
        .map(|i| (lo + (hi - lo) * i as f64 / 19.0).exp())
        .map(|t| t.min(0.5))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsybakovRow {
    pub t: f64,
    pub estimate: f64,
    pub bound: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsybakovReport {
    pub rows: Vec<TsybakovRow>,
    /// Largest `estimate − bound`; negative means the condition held with slack.
    pub max_violation: f64,
    /// Smallest `A` consistent with the estimates on the grid.
    pub tight_a: f64,
}

pub fn verify_tsybakov_condition(
    field: &NoiseField,
    marginal: &Marginal,
    wstar: &Halfspace,
    p: &TsybakovParams,
    n_samples: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<TsybakovReport> {
    if n_samples < 10_000 {
        return Err(invalid(
            "n_samples",
            format!("need at least 1e4, got {n_samples}"),
        ));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0 && **t <= 0.5)) {
        return Err(invalid("t_grid", format!("t = {t} outside (0, 1/2]")));
    }
    if marginal.dim() != wstar.dim() {
        return Err(Error::DimensionMismatch {
            expected: wstar.dim(),
            got: marginal.dim(),
        });
    }
    field.validate()?;
    let points = marginal.sample(n_samples, seed)?;
    let mut etas: Vec<f64> = points
        .rows()
        .map(|x| field.eta_from_margin(p, wstar.margin(x)))
        .collect();
    etas.sort_by(|a, b| a.total_cmp(b));
    let n = etas.len() as f64;
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut max_violation = f64::NEG_INFINITY;
    let mut tight_a: f64 = 0.0;
    for &t in t_grid {
        let level = 0.5 - t;
        let first = etas.partition_point(|e| *e < level);
        let estimate = (etas.len() - first) as f64 / n;
        let bound = p.tail_bound(t);
        let violation = estimate - bound;
        max_violation = max_violation.max(violation);
        tight_a = tight_a.max(estimate / t.powf(p.tail_exponent()));
        rows.push(TsybakovRow {
            t,
            estimate,
            bound,
            violation,
        });
    }
    Ok(TsybakovReport {
        rows,
        max_violation,
        tight_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_alpha_a_examples() {
        let c = |a, b| c_alpha_a(&TsybakovParams::new(a, b).unwrap());
        assert!((c(0.5, 1.0) - 0.25).abs() < 1e-15);
        assert!((c(0.5, 2.0) - 0.125).abs() < 1e-15);
        // 0.9 · 0.1^{1/9}, evaluated independently as exp(ln 0.9 + ln(0.1)/9)
        let expected = (0.9f64.ln() + 0.1f64.ln() / 9.0).exp();
        assert!((c(0.9, 1.0) - expected).abs() < 1e-14);
        assert!((c(0.9, 1.0) - 0.69683).abs() < 1e-5);
    }

    #[test]
    fn admissible_a_per_family() {
        let m = NoiseField::ConstantMassart { eta: 0.2 };
        assert!((m.admissible_a(0.5, 0.4) - 1.0 / 0.3).abs() < 1e-12);
        assert!((NoiseField::Zero.admissible_a(0.5, 0.4) - 2.0).abs() < 1e-12);
        let b = NoiseField::BoundaryPower { c: 0.5 };
        assert_eq!(
            b.admissible_a(0.7, 0.4),
            boundary_power_admissible_a(0.7, 0.5, 0.4)
        );
    }

    #[test]
    fn c_alpha_a_decreases_in_a() {
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let mut prev = f64::INFINITY;
            for i in 1..50 {
                let v = c_alpha_a(&TsybakovParams::new(alpha, 0.2 * i as f64).unwrap());
                assert!(v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(TsybakovParams::new(1.0, 1.0).is_err());
        assert!(TsybakovParams::new(0.0, 1.0).is_err());
        assert!(TsybakovParams::new(1.5, 1.0).is_err());
        assert!(TsybakovParams::new(0.5, 0.0).is_err());
        assert!(NoiseField::ConstantMassart { eta: 0.5 }.validate().is_err());
        assert!(NoiseField::BoundaryPower { c: -1.0 }.validate().is_err());
    }

    #[test]
    fn eta_examples() {
        let p = TsybakovParams::new(0.5, 1.0).unwrap();
        let ws = Halfspace::from_coords(vec![1.0, 0.0]).unwrap();
        let f = NoiseField::BoundaryPower { c: 0.5 };
        assert!((f.eta_at(&p, &ws, &[0.25, 7.0]).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(f.eta_at(&p, &ws, &[2.0, 0.0]).unwrap(), 0.0);
        let m = NoiseField::ConstantMassart { eta: 0.2 };
        assert_eq!(m.eta_at(&p, &ws, &[3.0, -1.0]).unwrap(), 0.2);
        assert_eq!(NoiseField::Zero.eta_at(&p, &ws, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(f.eta_at(&p, &ws, &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn boundary_power_nonincreasing_in_margin() {
        let p = TsybakovParams::new(0.7, 5.0).unwrap();
        let f = NoiseField::BoundaryPower { c: 0.5 };
        let mut margins: Vec<f64> = (0..500)
            .map(|i| (i as f64 * 0.7919).sin().abs() * 3.0)
            .collect();
        margins.sort_by(|a, b| a.total_cmp(b));
        let etas: Vec<f64> = margins.iter().map(|m| f.eta_from_margin(&p, *m)).collect();
        assert!(etas.windows(2).all(|w| w[1] <= w[0]));
        assert!(etas.iter().all(|e| (0.0..=0.5).contains(e)));
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = default_t_grid();
        assert_eq!(g.len(), 20);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert!((g[19] - 0.5).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn zero_and_massart_reports() {
        let m = Marginal::Gaussian { d: 2 };
        let ws = Halfspace::from_coords(vec![0.0, 1.0]).unwrap();
        let p = TsybakovParams::new(0.5, 1.0).unwrap();
        let r =
            verify_tsybakov_condition(&NoiseField::Zero, &m, &ws, &p, 10_000, &default_t_grid(), 1)
                .unwrap();
        assert!(r
            .rows
            .iter()
            .all(|row| row.estimate == 0.0 && row.bound > 0.0));
        assert!(r.max_violation < 0.0);

        let field = NoiseField::ConstantMassart { eta: 0.2 };
        let grid = [0.05, 0.1, 0.29, 0.3, 0.31, 0.5];
        let r = verify_tsybakov_condition(&field, &m, &ws, &p, 10_000, &grid, 1).unwrap();
        let est: Vec<f64> = r.rows.iter().map(|row| row.estimate).collect();
        assert_eq!(est, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn verification_preconditions() {
        let m = Marginal::Gaussian { d: 2 };
        let ws = Halfspace::from_coords(vec![0.0, 1.0]).unwrap();
        let p = TsybakovParams::new(0.5, 1.0).unwrap();
        assert!(verify_tsybakov_condition(&NoiseField::Zero, &m, &ws, &p, 100, &[0.1], 1).is_err());
        assert!(
            verify_tsybakov_condition(&NoiseField::Zero, &m, &ws, &p, 10_000, &[0.6], 1).is_err()
        );
    }
}
