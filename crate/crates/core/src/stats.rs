//! Streaming ensemble statistics.

/// Welford accumulator for mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            libm::sqrt(self.variance() / self.count as f64)
        }
    }

    pub fn summary(&self) -> EnsembleStat {
        EnsembleStat {
            mean: self.mean(),
            stderr: self.stderr(),
            samples: self.count,
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStat {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl EnsembleStat {
    /// `|a − b| ≤ k·√(se_a² + se_b²)`.
    pub fn agrees_with(&self, other: &EnsembleStat, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * libm::hypot(self.stderr, other.stderr)
    }
}
