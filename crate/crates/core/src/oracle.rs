//! The noisy example oracle: draws `x` from the marginal and returns
//! `sign(⟨w*, x⟩)` flipped with probability `η(x)`.

use rand::Rng;
use rayon::prelude::*;

use crate::distributions::{Marginal, Points};
use crate::error::{invalid, Error, Result};
use crate::geometry::Halfspace;
use crate::noise::{NoiseField, TsybakovParams};
use crate::rng::{indexed_stream, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Column-split labeled data: points plus `±1` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Points,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(points: Points, labels: Vec<f64>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(invalid(
                "labels",
                format!("{} labels for {} points", labels.len(), points.len()),
            ));
        }
        if let Some(i) = labels.iter().position(|y| *y != 1.0 && *y != -1.0) {
            return Err(invalid(
                "labels",
                format!("label {} at row {i} is not ±1", labels[i]),
            ));
        }
        Ok(Self { points, labels })
    }

    pub fn from_samples(samples: &[LabeledSample]) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyInput("samples"))?;
        let d = first.x.len();
        let mut flat = Vec::with_capacity(samples.len() * d);
        for s in samples {
            if s.x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: s.x.len(),
                });
            }
            flat.extend_from_slice(&s.x);
        }
        Self::new(
            Points::from_flat(d, flat)?,
            samples.iter().map(|s| s.y).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn x(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn y(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn get(&self, i: usize) -> LabeledSample {
        LabeledSample {
            x: self.x(i).to_vec(),
            y: self.y(i),
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&[f64], f64)> + '_ {
        self.points.rows().zip(self.labels.iter().copied())
    }

    /// Splits into the first `n` rows and the rest.
    pub fn split_at(&self, n: usize) -> Result<(Dataset, Dataset)> {
        let n = n.min(self.len());
        let d = self.dim();
        let (a, b) = self.points.as_flat().split_at(n * d);
        Ok((
            Dataset::new(Points::from_flat(d, a.to_vec())?, self.labels[..n].to_vec())?,
            Dataset::new(Points::from_flat(d, b.to_vec())?, self.labels[n..].to_vec())?,
        ))
    }

    pub fn with_labels(&self, labels: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.points.clone(), labels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub marginal: Marginal,
    pub target: Halfspace,
    pub noise: NoiseField,
    pub tsybakov: TsybakovParams,
    pub seed: u64,
    /// Number of independently seeded generation shards. Part of the
    /// reproducibility key: changing it changes the drawn data.
    pub shards: usize,
}

impl OracleConfig {
    pub fn new(
        marginal: Marginal,
        target: Halfspace,
        noise: NoiseField,
        tsybakov: TsybakovParams,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            marginal,
            target,
            noise,
            tsybakov,
            seed,
            shards: 8,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_shards(mut self, shards: usize) -> Result<Self> {
        self.shards = shards;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.marginal.dim() != self.target.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.target.dim(),
                got: self.marginal.dim(),
            });
        }
        if self.shards == 0 {
            return Err(invalid("shards", "must be at least 1"));
        }
        self.noise.validate()
    }

    pub fn dim(&self) -> usize {
        self.marginal.dim()
    }

    /// `n` labeled examples from the default stream.
    pub fn draw(&self, n: usize) -> Result<Dataset> {
        self.draw_stream(n, "oracle", 0)
    }

    /// `n` labeled examples from the named stream; distinct `(stream, index)`
    /// pairs give independent batches.
    pub fn draw_stream(&self, n: usize, stream: &str, index: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        let d = self.dim();
        let shards = self.shards.min(n);
        let base = n / shards;
        let extra = n % shards;
        let marginal_name = format!("{stream}/{index}/marginal");
        let noise_name = format!("{stream}/{index}/noise");
        let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..shards)
            .into_par_iter()
            .map(|s| {
                let len = base + usize::from(s < extra);
                let mut mrng = indexed_stream(self.seed, &marginal_name, s as u64);
                let mut nrng = indexed_stream(self.seed, &noise_name, s as u64);
                let pts = self.marginal.sample_with(&mut mrng, len);
                let labels = self.label_rows(&pts, &mut nrng);
                (pts.into_flat(), labels)
            })
            .collect();
        let mut flat = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for (p, l) in parts {
            flat.extend(p);
            labels.extend(l);
        }
        Dataset::new(Points::from_flat(d, flat)?, labels)
    }

    /// Labels an existing point cloud with a fresh noise stream.
    pub fn label_points(&self, points: Points, noise_seed: u64) -> Result<Dataset> {
        if points.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: points.dim(),
            });
        }
        let mut rng = indexed_stream(self.seed, "relabel", noise_seed);
        let labels = self.label_rows(&points, &mut rng);
        Dataset::new(points, labels)
    }

    fn label_rows(&self, pts: &Points, rng: &mut StreamRng) -> Vec<f64> {
        pts.rows()
            .map(|x| {
                let margin = self.target.margin(x);
                let clean = crate::geometry::sign(margin);
                let eta = self.noise.eta_from_margin(&self.tsybakov, margin);
                let u: f64 = rng.random();
                if u < eta {
                    -clean
                } else {
                    clean
                }
            })
            .collect()
    }
}

/// Fraction of samples whose label disagrees with `target`.
pub fn empirical_noise_rate(data: &Dataset, target: &Halfspace) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    let flips = data
        .iter()
        .filter(|(x, y)| target.classify(x) != *y)
        .count();
    Ok(flips as f64 / data.len() as f64)
}
