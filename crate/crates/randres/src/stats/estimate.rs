//! Mean and median estimates with 95% confidence intervals.

/// Two-sided 95% standard-normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Streaming mean/variance accumulator (Welford's algorithm).
#[derive(Clone, Copy, Debug, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; 0 for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn finish(&self) -> EstimateCI {
        EstimateCI::from_moments(self.mean, self.variance(), self.n)
    }
}

/// A point estimate with its normal-approximation 95% confidence interval.
#[derive(Clone, Copy, Debug)]
pub struct EstimateCI {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub lo: f64,
    pub hi: f64,
}

impl EstimateCI {
    pub fn from_moments(mean: f64, variance: f64, n: u64) -> Self {
        let stderr = if n > 0 {
            (variance / n as f64).sqrt()
        } else {
            0.0
        };
        EstimateCI {
            mean,
            stderr,
            n,
            lo: mean - Z95 * stderr,
            hi: mean + Z95 * stderr,
        }
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let mut acc = Welford::new();
        for &x in xs {
            acc.push(x);
        }
        acc.finish()
    }

    /// |mean - reference| measured in standard errors (infinite when stderr
    /// is zero and the means differ).
    pub fn sigmas_from(&self, reference: f64) -> f64 {
        let d = (self.mean - reference).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Median with a distribution-free 95% confidence interval.
#[derive(Clone, Copy, Debug)]
pub struct MedianCI {
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

/// Median CI from order statistics: ranks floor((n - 1.96 sqrt n)/2) and
/// ceil(1 + (n + 1.96 sqrt n)/2) - 1 (zero-based, clamped to the sample).
/// Distribution-free, so it stays honest when the per-seed error is skewed.
pub fn median_ci(samples: &[f64]) -> MedianCI {
    assert!(!samples.is_empty(), "median_ci needs at least one sample");
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("median_ci: NaN sample"));
    let n = xs.len();
    let nf = n as f64;
    let median = if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    };
    let lo_rank = (((nf - 1.96 * nf.sqrt()) / 2.0).floor().max(0.0)) as usize;
    let hi_rank = (((nf + 1.96 * nf.sqrt()) / 2.0 + 1.0).ceil() as usize)
        .saturating_sub(1)
        .min(n - 1);
    MedianCI {
        median,
        lo: xs[lo_rank],
        hi: xs[hi_rank],
        n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let est = EstimateCI::from_samples(&xs);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((est.mean - mean).abs() < 1e-12);
        assert!((est.stderr - (var / xs.len() as f64).sqrt()).abs() < 1e-12);
        assert!(est.lo <= est.mean && est.mean <= est.hi);
    }

    #[test]
    fn constant_samples_zero_stderr() {
        let est = EstimateCI::from_samples(&[3.0; 50]);
        assert_eq!(est.mean, 3.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.lo, 3.0);
        assert_eq!(est.hi, 3.0);
    }

    #[test]
    fn median_ci_brackets_median() {
        let xs: Vec<f64> = (0..101).map(|i| i as f64).collect();
        let m = median_ci(&xs);
        assert_eq!(m.median, 50.0);
        assert!(m.lo < 50.0 && m.hi > 50.0);
        // rank arithmetic for n = 101: lo = floor((101 - 19.7)/2) = 40,
        // hi = ceil(1 + (101 + 19.7)/2) - 1 = ceil(61.35) - 1 = 61
        assert_eq!(m.lo, 40.0);
        assert_eq!(m.hi, 61.0);
    }

    #[test]
    fn median_ci_tiny_sample_clamps() {
        let m = median_ci(&[2.0, 1.0, 3.0]);
        assert_eq!(m.median, 2.0);
        assert_eq!(m.lo, 1.0);
        assert_eq!(m.hi, 3.0);
    }
}
