//! Empirical central limit checks for rescaled boundary values of Bloch
//! functions, and the good/bad box decomposition of a martingale.

mod check;
mod partition;

pub use check::{clt_check, histogram_csv, CharacteristicDefect, CltReport, TruncationCheck};
pub use partition::{good_bad_partition, split_good_bad, variance_rate, GoodBadPartition};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Smallest sample on which a verdict is given.
pub const MIN_SAMPLES: usize = 100;

/// Sorted real samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("samples must be finite".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn real_parts(z: &[Complex64]) -> Result<Self> {
        Self::new(z.iter().map(|z| z.re).collect())
    }

    pub fn imag_parts(z: &[Complex64]) -> Result<Self> {
        Self::new(z.iter().map(|z| z.im).collect())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `#{x_i ≤ t} / N`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.samples.partition_point(|&x| x <= t) as f64 / self.samples.len() as f64
    }
}

/// Centered Gaussian; in the complex case Re and Im are independent with
/// variance `σ²/2` each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianReference {
    pub mean: f64,
    pub variance: f64,
    pub complex: bool,
}

impl GaussianReference {
    pub fn real(variance: f64) -> Result<Self> {
        Self::checked(variance, false)
    }

    pub fn complex(variance: f64) -> Result<Self> {
        Self::checked(variance, true)
    }

    fn checked(variance: f64, complex: bool) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter(format!("variance {variance} must be positive")));
        }
        Ok(Self { mean: 0.0, variance, complex })
    }

    /// Variance of one real coordinate.
    pub fn component_variance(&self) -> f64 {
        if self.complex {
            self.variance / 2.0
        } else {
            self.variance
        }
    }

    fn normal(&self) -> Normal {
        Normal::new(self.mean, self.component_variance().sqrt()).expect("positive variance")
    }

    /// CDF of one real coordinate.
    pub fn cdf(&self, t: f64) -> f64 {
        self.normal().cdf(t)
    }
}

/// `sup_t |F_emp(t) - F_ref(t)|`, attained at a sample point from one side
/// of its jump.
pub fn ks_distance(emp: &EmpiricalDistribution, reference: &GaussianReference) -> Result<f64> {
    let n = emp.len();
    if n < MIN_SAMPLES {
        return Err(Error::SampleTooSmall { got: n, need: MIN_SAMPLES });
    }
    let normal = reference.normal();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    let xs = emp.samples();
    let mut i = 0;
    while i < n {
        // ties form one jump
        let mut j = i;
        while j + 1 < n && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = normal.cdf(xs[i]);
        d = d.max((f - i as f64 / nf).abs()).max(((j + 1) as f64 / nf - f).abs());
        i = j + 1;
    }
    Ok(d)
}

/// `(1/N) Σ exp(i(s Re z + t Im z))`, summed in sample order.
pub fn char_function_2d(samples: &[Complex64], s: f64, t: f64) -> Result<Complex64> {
    if samples.is_empty() {
        return Err(Error::SampleTooSmall { got: 0, need: 1 });
    }
    let sum: Complex64 = samples.iter().map(|z| Complex64::from_polar(1.0, s * z.re + t * z.im)).sum();
    Ok(sum / samples.len() as f64)
}
