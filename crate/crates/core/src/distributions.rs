//! Isotropic marginal samplers and the `(L, R, U, B, β)` bound parameters.

use std::f64::consts::{E, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{invalid, Result};
use crate::geometry::{dot, norm};
use crate::rng::{stream, StreamRng};

/// Distributional bounds: density floor `l_low` on the disk of radius `r_rad`,
/// optional density ceiling `u_up`, and tail bound `b_tail · exp(−beta_tail · t)`
/// for every 2-D projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedParams {
    pub l_low: f64,
    pub r_rad: f64,
    pub u_up: Option<f64>,
    pub b_tail: f64,
    pub beta_tail: f64,
}

/// Default for the unnamed absolute tail constant of the log-concave bounds.
/// `c = e` makes `Pr[‖x_V‖ ≥ t] ≤ c·e^{−t}` hold for the standard Gaussian at
/// every `t ≥ 0`, since `1 − t + t²/2 > 0`.
pub const LOG_CONCAVE_TAIL_CONSTANT: f64 = E;

impl BoundedParams {
    pub fn new(
        l_low: f64,
        r_rad: f64,
        u_up: Option<f64>,
        b_tail: f64,
        beta_tail: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("l_low", l_low),
            ("r_rad", r_rad),
            ("b_tail", b_tail),
            ("beta_tail", beta_tail),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        if let Some(u) = u_up {
            if !(u > 0.0 && u.is_finite()) {
                return Err(invalid(
                    "u_up",
                    format!("must be positive and finite, got {u}"),
                ));
            }
            if u < l_low {
                return Err(invalid("u_up", format!("ceiling {u} below floor {l_low}")));
            }
        }
        Ok(Self {
            l_low,
            r_rad,
            u_up,
            b_tail,
            beta_tail,
        })
    }

    /// `(2⁻¹², 1/9, e·2¹⁷, c, 1)` with the tail constant `c` in the `B` slot.
    pub fn log_concave_with_tail_constant(c: f64) -> Result<Self> {
        Self::new(2f64.powi(-12), 1.0 / 9.0, Some(E * 2f64.powi(17)), c, 1.0)
    }

    pub fn log_concave_default() -> Self {
        Self::log_concave_with_tail_constant(LOG_CONCAVE_TAIL_CONSTANT)
            .expect("constants are valid")
    }

    /// Exact bounds of the standard Gaussian for a chosen radius: every 2-D
    /// projection has density `e^{−r²/2}/(2π)` at radius `r`, so
    /// `L = e^{−R²/2}/(2π)`, `U = 1/(2π)`, and `e^{−t²/2} ≤ e·e^{−t}`.
    pub fn gaussian(r_rad: f64) -> Result<Self> {
        Self::new(
            (-0.5 * r_rad * r_rad).exp() / (2.0 * PI),
            r_rad,
            Some(1.0 / (2.0 * PI)),
            E,
            1.0,
        )
    }
}

/// Row-major point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    d: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn from_flat(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || data.len() % d != 0 {
            return Err(invalid(
                "data",
                format!("length {} not a multiple of d = {d}", data.len()),
            ));
        }
        Ok(Self { d, data })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }
}

/// Isotropic marginal families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginal {
    Gaussian {
        d: usize,
    },
    /// Uniform on the ball of radius `√(d+2)`, which has identity covariance.
    UniformBall {
        d: usize,
    },
    /// Independent Laplace coordinates with unit variance.
    LaplaceProduct {
        d: usize,
    },
}

impl Marginal {
    pub fn dim(&self) -> usize {
        match *self {
            Marginal::Gaussian { d }
            | Marginal::UniformBall { d }
            | Marginal::LaplaceProduct { d } => d,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Marginal::Gaussian { .. } => "gaussian",
            Marginal::UniformBall { .. } => "uniform_ball",
            Marginal::LaplaceProduct { .. } => "laplace_product",
        }
    }

    pub fn from_name(name: &str, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(invalid("d", format!("dimension {d} < 2")));
        }
        match name {
            "gaussian" => Ok(Marginal::Gaussian { d }),
            "uniform_ball" => Ok(Marginal::UniformBall { d }),
            "laplace_product" => Ok(Marginal::LaplaceProduct { d }),
            other => Err(invalid(
                "family",
                format!("unknown marginal family `{other}`"),
            )),
        }
    }

    /// Supremum over unit `u` of the density of `⟨u, x⟩`.
    ///
    /// Gaussian: `1/√(2π)`. Laplace product: a coordinate projection has the
    /// largest peak, `1/√2`, since mixing in independent coordinates
    /// convolves and cannot raise the sup. Uniform ball of radius `r`:
    /// `Γ(d/2+1) / (√π Γ((d+1)/2) r)`.
    pub fn projection_density_sup(&self) -> f64 {
        match *self {
            Marginal::Gaussian { .. } => 1.0 / (2.0 * PI).sqrt(),
            Marginal::LaplaceProduct { .. } => std::f64::consts::FRAC_1_SQRT_2,
            Marginal::UniformBall { d } => {
                // c_1 = 1/2, c_2 = 2/π, c_{d+2} = c_d (d+2)/(d+1).
                let mut c = if d % 2 == 1 { 0.5 } else { 2.0 / PI };
                let mut j = if d % 2 == 1 { 1 } else { 2 };
                while j < d {
                    c *= (j + 2) as f64 / (j + 1) as f64;
                    j += 2;
                }
                c / ((d + 2) as f64).sqrt()
            }
        }
    }

    /// Writes one sample into `out` (length `d`).
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            Marginal::Gaussian { .. } => {
                for v in out.iter_mut() {
                    *v = StandardNormal.sample(rng);
                }
            }
            Marginal::UniformBall { d } => loop {
                for v in out.iter_mut() {
                    *v = StandardNormal.sample(rng);
                }
                let n = norm(out);
                if n > 0.0 {
                    let u: f64 = rng.random();
                    let r = (d as f64 + 2.0).sqrt() * u.powf(1.0 / d as f64);
                    out.iter_mut().for_each(|v| *v *= r / n);
                    break;
                }
            },
            Marginal::LaplaceProduct { .. } => {
                let b = std::f64::consts::FRAC_1_SQRT_2;
                for v in out.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *v = if rng.random::<bool>() { b * e } else { -b * e };
                }
            }
        }
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Points {
        let d = self.dim();
        let mut data = vec![0.0; n * d];
        for row in data.chunks_exact_mut(d) {
            self.fill(rng, row);
        }
        Points { d, data }
    }

    /// `n` i.i.d. points, a deterministic function of `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Points> {
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        let mut rng = stream(seed, "marginal");
        Ok(self.sample_with(&mut rng, n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropyReport {
    pub mean_norm: f64,
    pub max_cov_dev: f64,
}

pub fn isotropy(points: &Points) -> IsotropyReport {
    let d = points.dim();
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    for r in points.rows() {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![0.0; d * d];
    for r in points.rows() {
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((cov[i * d + j] / n - target).abs());
        }
    }
    IsotropyReport {
        mean_norm: norm(&mean),
        max_cov_dev: dev,
    }
}

/// Random orthonormal pair spanning a 2-D subspace of `R^d`.
pub fn random_plane<R: Rng + ?Sized>(rng: &mut R, d: usize) -> (Vec<f64>, Vec<f64>) {
    loop {
        let a: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let b: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let na = norm(&a);
        if na < 1e-8 {
            continue;
        }
        let u: Vec<f64> = a.iter().map(|v| v / na).collect();
        let c = dot(&u, &b);
        let r: Vec<f64> = b.iter().zip(&u).map(|(bi, ui)| bi - c * ui).collect();
        let nr = norm(&r);
        if nr < 1e-8 {
            continue;
        }
        return (u, r.iter().map(|v| v / nr).collect());
    }
}

/// Worst-case margins from [`check_bounds`]; a margin is `bound − observed`
/// for upper bounds and `observed − bound` for the floor, so nonnegative
/// means the bound held.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub floor_margin: f64,
    pub tail_margin: f64,
    pub ceiling_margin: Option<f64>,
    pub bandwidth: f64,
    pub n_dirs: usize,
}

impl BoundsReport {
    pub fn passes(&self) -> bool {
        self.floor_margin >= 0.0
            && self.tail_margin >= 0.0
            && self.ceiling_margin.map_or(true, |m| m >= 0.0)
    }
}

/// Empirical check of the bound parameters on `n_dirs` random 2-D projections.
///
/// The density floor is estimated with a box kernel of half-width
/// `0.1 · r_rad` at lattice points inside the radius-`r_rad` disk. The tail
/// bound is compared on `t ∈ {0.25, 0.5, …, 8}`.
pub fn check_bounds(
    m: &Marginal,
    p: &BoundedParams,
    n: usize,
    n_dirs: usize,
    seed: u64,
) -> Result<BoundsReport> {
    if n < 100_000 {
        return Err(invalid("n", format!("need at least 1e5 samples, got {n}")));
    }
    if n_dirs == 0 {
        return Err(invalid("n_dirs", "must be at least 1"));
    }
    let points = m.sample(n, seed)?;
    let mut dir_rng: StreamRng = stream(seed, "bounds-directions");
    let h = 0.1 * p.r_rad;
    let grid_pts: Vec<(f64, f64)> = lattice(p.r_rad, 9)
        .into_iter()
        .filter(|(a, b)| (a * a + b * b).sqrt() <= p.r_rad)
        .collect();
    let wide_h = h.max(0.05);
    let wide_grid = lattice(3.0, 13);
    let tails: Vec<f64> = (1..=32).map(|i| 0.25 * i as f64).collect();

    let mut floor_margin = f64::INFINITY;
    let mut tail_margin = f64::INFINITY;
    let mut ceiling_margin = p.u_up.map(|_| f64::INFINITY);
    for _ in 0..n_dirs {
        let (u, v) = random_plane(&mut dir_rng, m.dim());
        let proj: Vec<(f64, f64)> = points.rows().map(|x| (dot(&u, x), dot(&v, x))).collect();

        for &(g1, g2) in &grid_pts {
            let dens = box_density(&proj, g1, g2, h);
            floor_margin = floor_margin.min(dens - p.l_low);
        }
        if let (Some(u_up), Some(cm)) = (p.u_up, ceiling_margin.as_mut()) {
            for &(g1, g2) in &wide_grid {
                let dens = box_density(&proj, g1, g2, wide_h);
                *cm = cm.min(u_up - dens);
            }
        }
        let mut radii: Vec<f64> = proj.iter().map(|(a, b)| (a * a + b * b).sqrt()).collect();
        radii.sort_by(|a, b| a.total_cmp(b));
        for &t in &tails {
            let below = radii.partition_point(|r| *r < t);
            let freq = (radii.len() - below) as f64 / radii.len() as f64;
            tail_margin = tail_margin.min(p.b_tail * (-p.beta_tail * t).exp() - freq);
        }
    }
    Ok(BoundsReport {
        floor_margin,
        tail_margin,
        ceiling_margin,
        bandwidth: h,
        n_dirs,
    })
}

fn lattice(half_width: f64, per_side: usize) -> Vec<(f64, f64)> {
    let step = 2.0 * half_width / (per_side - 1) as f64;
    let mut out = Vec::with_capacity(per_side * per_side);
    for i in 0..per_side {
        for j in 0..per_side {
            out.push((-half_width + i as f64 * step, -half_width + j as f64 * step));
        }
    }
    out
}

fn box_density(proj: &[(f64, f64)], g1: f64, g2: f64, h: f64) -> f64 {
    let count = proj
        .iter()
        .filter(|(a, b)| (a - g1).abs() <= h && (b - g2).abs() <= h)
        .count();
    count as f64 / (proj.len() as f64 * 4.0 * h * h)
}
