//! Small Monte-Carlo summaries shared by the estimators and checks.

/// Mean and standard error of the mean. The standard error is `None` when
/// fewer than two values are available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub std_err: Option<f64>,
    pub n: usize,
}

impl MeanSe {
    pub fn se_or_nan(&self) -> f64 {
        self.std_err.unwrap_or(f64::NAN)
    }
}

/// Welford accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    pub fn merge(&mut self, other: &Running) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = (self.n + other.n) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n;
        self.m2 += other.m2 + delta * delta * self.n as f64 * other.n as f64 / n;
        self.n += other.n;
    }

    pub fn summary(&self) -> MeanSe {
        let std_err = if self.n >= 2 {
            Some((self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt())
        } else {
            None
        };
        MeanSe {
            mean: self.mean,
            std_err,
            n: self.n,
        }
    }
}

pub fn mean_se(values: impl IntoIterator<Item = f64>) -> MeanSe {
    let mut r = Running::default();
    for v in values {
        r.push(v);
    }
    r.summary()
}

/// Median of a slice; NaN for an empty slice.
pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
