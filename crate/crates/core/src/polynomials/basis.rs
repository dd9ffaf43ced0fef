use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Largest number of monomials a basis may hold.
pub const BASIS_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn order(&self) -> usize {
        self.exponents.iter().map(|e| *e as usize).sum()
    }

    /// `x^S = Π x_i^{s_i}`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .map(|(e, v)| v.powi(*e as i32))
            .product()
    }
}

/// `C(d+k, k)` without overflow for any realistic input.
pub fn binomial_count(d: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = acc * (d as u128 + i) / i;
    }
    acc
}

/// All monomials of degree at most `k` in `d` variables.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    d: usize,
    k: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<Vec<u32>, usize>,
    // (parent position, variable) with indices[j] = indices[parent] + e_var
    parents: Vec<(usize, usize)>,
}

impl PartialEq for MonomialBasis {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.k == other.k
    }
}

impl MonomialBasis {
    pub fn new(d: usize, k: usize) -> Result<Arc<Self>> {
        if d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        let m = binomial_count(d, k);
        if m > BASIS_CAP as u128 {
            return Err(Error::BasisTooLarge { m, cap: BASIS_CAP });
        }
        let mut indices = Vec::with_capacity(m as usize);
        let mut cur = vec![0u32; d];
        for g in 0..=k as u32 {
            compositions(0, g, &mut cur, &mut indices);
        }
        let lookup: HashMap<Vec<u32>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.exponents.clone(), i))
            .collect();
        let parents = indices
            .iter()
            .map(|s| match s.exponents.iter().position(|e| *e > 0) {
                None => (0, 0),
                Some(var) => {
                    let mut p = s.exponents.clone();
                    p[var] -= 1;
                    (lookup[&p], var)
                }
            })
            .collect();
        Ok(Arc::new(Self {
            d,
            k,
            indices,
            lookup,
            parents,
        }))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, exponents: &[u32]) -> Option<usize> {
        self.lookup.get(exponents).copied()
    }

    /// Feature vector `m(x)` written into `out` (length `m`).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        for j in 1..self.indices.len() {
            let (p, var) = self.parents[j];
            out[j] = out[p] * x[var];
        }
    }

    pub fn eval_monomials(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        Ok(out)
    }
}

fn compositions(pos: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let d = cur.len();
    if pos == d - 1 {
        cur[pos] = remaining;
        out.push(MultiIndex::new(cur.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e;
        compositions(pos + 1, remaining - e, cur, out);
    }
    cur[pos] = 0;
}
