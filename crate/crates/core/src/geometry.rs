//! Vectors, origin-centered halfspaces and the sign/angle primitives every
//! other module builds on.

use crate::error::{invalid, Error, Result};

/// Label convention: `sign(0) = +1`.
#[inline]
pub fn sign(t: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A real vector of dimension at least 2 with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid("coords", format!("dimension {} < 2", coords.len())));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(invalid("coords", format!("entry {i} is not finite")));
        }
        Ok(Self(coords))
    }

    /// The standard basis vector `e_{i+1}` (zero-based `i`).
    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(invalid("i", format!("index {i} out of range for d = {d}")));
        }
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        Self::new(v)
    }

    pub fn zeros(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        dot(&self.0, x)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| v * c).collect())
    }
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Origin-centered halfspace `x ↦ sign(⟨w, x⟩)` with unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: WeightVector,
}

impl Halfspace {
    /// Normalizes `w`; fails only for the zero vector.
    pub fn new(w: WeightVector) -> Result<Self> {
        let n = w.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Domain("halfspace normal must be nonzero".into()));
        }
        Ok(Self {
            normal: w.scaled(1.0 / n),
        })
    }

    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        Self::new(WeightVector::new(coords)?)
    }

    pub fn normal(&self) -> &WeightVector {
        &self.normal
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    #[inline]
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.normal.dot(x)
    }

    #[inline]
    pub fn classify(&self, x: &[f64]) -> f64 {
        sign(self.margin(x))
    }

    pub fn negated(&self) -> Self {
        Self {
            normal: self.normal.scaled(-1.0),
        }
    }
}

/// Angle in `[0, π]`; the cosine is clamped to absorb rounding.
pub fn angle(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("angle undefined for a zero vector".into()));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0).acos())
}

/// 1 iff the two halfspaces label `x` differently.
pub fn disagreement(h1: &Halfspace, h2: &Halfspace, x: &[f64]) -> Result<u8> {
    for h in [h1, h2] {
        if h.dim() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                got: x.len(),
            });
        }
    }
    Ok((h1.classify(x) != h2.classify(x)) as u8)
}

/// Unit vector `v` in `span(w, w*)` with `⟨v, w⟩ = 0` and
/// `⟨v, w*⟩ = −sin θ(w, w*)`, so that `w* = cos θ · ŵ − sin θ · v`.
pub fn orthogonal_component(wstar: &[f64], w: &[f64]) -> Result<WeightVector> {
    let theta = angle(wstar, w)?;
    let nw = norm(w);
    let wh: Vec<f64> = w.iter().map(|c| c / nw).collect();
    let ns = norm(wstar);
    let sh: Vec<f64> = wstar.iter().map(|c| c / ns).collect();
    let c = dot(&sh, &wh);
    // residual of w* after removing its ŵ component, equals −sin θ · v
    let resid: Vec<f64> = sh.iter().zip(&wh).map(|(s, h)| s - c * h).collect();
    let rn = norm(&resid);
    if rn < 1e-12 || theta < 1e-12 || std::f64::consts::PI - theta < 1e-12 {
        return Err(Error::DegenerateGeometry(format!(
            "w and w* are (anti)parallel (angle {theta})"
        )));
    }
    WeightVector::new(resid.iter().map(|r| -r / rn).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sign_convention() {
        assert_eq!(sign(0.0), 1.0);
        assert_eq!(sign(3.5), 1.0);
        assert_eq!(sign(-0.001), -1.0);
    }

    #[test]
    fn angle_examples() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        assert_eq!(angle(&e1, &e1).unwrap(), 0.0);
        assert!((angle(&e1, &e2).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((angle(&e1, &[-1.0, 0.0]).unwrap() - PI).abs() < 1e-15);
        assert!(angle(&e1, &[0.0, 0.0]).is_err());
        assert!(angle(&e1, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn nearly_parallel_vectors_do_not_produce_nan() {
        let u = [0.1 + 0.2, 0.3];
        let v = [0.3, 0.3];
        assert!(!angle(&u, &v).unwrap().is_nan());
    }

    #[test]
    fn disagreement_examples() {
        let h1 = Halfspace::from_coords(vec![1.0, 0.0]).unwrap();
        let h2 = Halfspace::from_coords(vec![0.0, 1.0]).unwrap();
        assert_eq!(disagreement(&h1, &h1, &[-2.0, 5.0]).unwrap(), 0);
        assert_eq!(disagreement(&h1, &h2, &[1.0, -1.0]).unwrap(), 1);
        assert_eq!(disagreement(&h1, &h2, &[1.0, 1.0]).unwrap(), 0);
        assert!(disagreement(&h1, &h2, &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn orthogonal_component_matches_proof_frame() {
        let w = [0.0, 1.0];
        let ws = [-(0.3f64).sin(), 0.3f64.cos()];
        let v = orthogonal_component(&ws, &w).unwrap();
        assert!((v.as_slice()[0] - 1.0).abs() < 1e-12);
        assert!(v.as_slice()[1].abs() < 1e-12);

        let ws = [(0.3f64).sin(), 0.3f64.cos()];
        let v = orthogonal_component(&ws, &w).unwrap();
        assert!((v.as_slice()[0] + 1.0).abs() < 1e-12);

        assert!(matches!(
            orthogonal_component(&[1.0, 0.0], &[1.0, 0.0]),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(orthogonal_component(&[-1.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn halfspace_normalizes_input() {
        let h = Halfspace::from_coords(vec![3.0, 4.0]).unwrap();
        assert!((h.normal().norm() - 1.0).abs() < 1e-12);
        assert!(Halfspace::from_coords(vec![0.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![1.0]).is_err());
        assert!(WeightVector::new(vec![1.0, f64::NAN]).is_err());
    }
}
