use crate::error::{invalid, Error, Result};

/// Largest Chebyshev degree built by coefficient recurrence; coefficients of
/// `T_k` grow like `2^{k}` per term and lose usefulness in `f64` past this.
pub const MAX_CHEBYSHEV_DEGREE: usize = 25;

/// `p(t) = Σ c_i t^i` with trailing zeros trimmed; the zero polynomial has no
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariatePoly {
    coeffs: Vec<f64>,
}

impl UnivariatePoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn l2_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    fn mul_linear(&self, a: f64, b: f64) -> Vec<f64> {
        // (Σ c_i t^i)(a t + b)
        let mut out = vec![0.0; self.coeffs.len() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += b * c;
            out[i + 1] += a * c;
        }
        out
    }
}

/// `T_k(t)` from the closed form on each side of `|t| = 1`.
pub fn chebyshev_eval(k: usize, t: f64) -> f64 {
    if t.abs() <= 1.0 {
        (k as f64 * t.acos()).cos()
    } else {
        let s = (t * t - 1.0).sqrt();
        let k = k as i32;
        0.5 * ((t - s).powi(k) + (t + s).powi(k))
    }
}

/// Coefficients of `T_k` via `T_{k+1} = 2t·T_k − T_{k−1}`.
pub fn chebyshev_coeffs(k: usize) -> Result<UnivariatePoly> {
    if k > MAX_CHEBYSHEV_DEGREE {
        return Err(Error::DegreeTooLarge {
            degree: k,
            max: MAX_CHEBYSHEV_DEGREE,
        });
    }
    let mut prev = vec![1.0];
    if k == 0 {
        return Ok(UnivariatePoly::new(prev));
    }
    let mut cur = vec![0.0, 1.0];
    for _ in 1..k {
        let mut next = vec![0.0; cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
    }
    Ok(UnivariatePoly::new(cur))
}

/// `log₂` of the coefficient-norm bound `‖T_k‖₂² ≤ 2^{6k + 2 log₂ k + 4}`.
/// For `k = 0` the `log` term is taken as 0.
pub fn chebyshev_norm_bound_log2(k: usize) -> f64 {
    let log_k = if k == 0 { 0.0 } else { (k as f64).log2() };
    6.0 * k as f64 + 2.0 * log_k + 4.0
}

/// `r(t) = p(a t + b)`.
pub fn affine_compose(p: &UnivariatePoly, a: f64, b: f64) -> UnivariatePoly {
    let mut acc = UnivariatePoly::zero();
    for c in p.coeffs().iter().rev() {
        let mut next = acc.mul_linear(a, b);
        next[0] += c;
        acc = UnivariatePoly::new(next);
    }
    acc
}

/// `t ↦ T_k(g(t))` with `g(t) = 1 + 2(t − R/4)/(W + R/4)`, which maps `R/4`
/// to 1 and `−W` to −1.
pub fn band_shift(k: usize, w_param: f64, r_rad: f64) -> Result<UnivariatePoly> {
    if !(w_param > 0.0 && w_param.is_finite()) {
        return Err(invalid(
            "w_param",
            format!("must be positive, got {w_param}"),
        ));
    }
    if !(r_rad > 0.0 && r_rad.is_finite()) {
        return Err(invalid("r_rad", format!("must be positive, got {r_rad}")));
    }
    let span = w_param + r_rad / 4.0;
    let a = 2.0 / span;
    let b = 1.0 - 2.0 * (r_rad / 4.0) / span;
    Ok(affine_compose(&chebyshev_coeffs(k)?, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_values() {
        assert!((chebyshev_eval(3, 2.0) - 26.0).abs() < 1e-12);
        for k in 0..20 {
            assert!((chebyshev_eval(k, 1.0) - 1.0).abs() < 1e-12);
        }
        assert!((chebyshev_eval(4, 0.5) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_coefficients() {
        assert_eq!(chebyshev_coeffs(0).unwrap().coeffs(), &[1.0]);
        assert_eq!(chebyshev_coeffs(2).unwrap().coeffs(), &[-1.0, 0.0, 2.0]);
        assert_eq!(
            chebyshev_coeffs(3).unwrap().coeffs(),
            &[0.0, -3.0, 0.0, 4.0]
        );
        assert!(chebyshev_coeffs(26).is_err());
        assert_eq!(chebyshev_coeffs(25).unwrap().degree(), 25);
    }

    #[test]
    fn chebyshev_norm_bound_k6() {
        let p = chebyshev_coeffs(6).unwrap();
        // T_6 = 32t⁶ − 48t⁴ + 18t² − 1
        assert_eq!(p.coeffs(), &[-1.0, 0.0, 18.0, 0.0, -48.0, 0.0, 32.0]);
        assert_eq!(p.l2_sq(), 3653.0);
        assert!(p.l2_sq().log2() <= chebyshev_norm_bound_log2(6));
    }

    #[test]
    fn recurrence_matches_closed_form_up_to_15() {
        for k in 0..=15 {
            let p = chebyshev_coeffs(k).unwrap();
            for i in 0..=600 {
                let t = -3.0 + i as f64 * 0.01;
                let closed = chebyshev_eval(k, t);
                assert!(
                    (p.eval(t) - closed).abs() <= 1e-8 * closed.abs().max(1.0),
                    "k={k} t={t}"
                );
            }
        }
    }

    #[test]
    fn affine_compose_examples() {
        let id = UnivariatePoly::new(vec![0.0, 1.0]);
        let r = affine_compose(&id, 2.0, 3.0);
        assert_eq!(r.coeffs(), &[3.0, 2.0]);
        assert_eq!(r.l2_sq(), 13.0);
        let t2 = UnivariatePoly::new(vec![-1.0, 0.0, 2.0]);
        assert_eq!(affine_compose(&t2, 1.0, 0.0), t2);
        assert_eq!(affine_compose(&t2, 1.0, 1.0).coeffs(), &[1.0, 4.0, 2.0]);
        assert!(affine_compose(&UnivariatePoly::zero(), 2.0, 1.0).is_zero());
    }

    #[test]
    fn band_shift_examples() {
        let (w, r) = (3.0, 0.4);
        for k in 1..8 {
            let p = band_shift(k, w, r).unwrap();
            assert!((p.eval(r / 4.0) - 1.0).abs() < 1e-9);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((p.eval(-w) - sign).abs() < 1e-9);
        }
        // W = 1, R = 4: g(t) = 1 + 2(t − 1)/2 = t
        let p = band_shift(1, 1.0, 4.0).unwrap();
        assert_eq!(p.coeffs(), &[0.0, 1.0]);
        assert!(band_shift(2, 0.0, 1.0).is_err());
        assert!(band_shift(2, 1.0, -1.0).is_err());
    }

    #[test]
    fn zero_poly_trims() {
        let p = UnivariatePoly::new(vec![0.0, 0.0]);
        assert!(p.is_zero());
        assert_eq!(p.eval(3.0), 0.0);
        assert_eq!(UnivariatePoly::new(vec![1.0, 2.0, 0.0]).degree(), 1);
    }
}
