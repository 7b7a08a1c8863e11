use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{char_function_2d, ks_distance, EmpiricalDistribution, GaussianReference, GoodBadPartition};
use crate::bloch::{rescaled_boundary_samples, BlochEvaluator, ThetaSampling};
use crate::spectrum::fmt17;
use crate::{Error, Result};

/// Largest `|φ(s,t) - exp(-Σ̂²(s²+t²)/4)|` over the grid `s, t ∈ {-2, -1.5, …, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicDefect {
    pub max: f64,
    pub s: f64,
    pub t: f64,
}

/// The set `A_δ = {|Re b̃_r| < 1/δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    pub delta: f64,
    pub inside_fraction: f64,
    /// `(1/N) Σ_{A_δ} (Re b̃_r)²`.
    pub var_re_inside: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub r: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub sigma2_hat: f64,
    /// False when `Σ̂² ≤ 0`; the distances are then against `𝒩(0, 1)`.
    pub applicable: bool,
    pub ks_re: f64,
    pub ks_im: f64,
    pub var_re: f64,
    pub var_im: f64,
    pub cov_reim: f64,
    pub corr_reim: f64,
    pub characteristic: CharacteristicDefect,
    pub truncation: TruncationCheck,
    /// `(δ₂, bad mass)` pairs, filled by [`CltReport::with_bad_mass`].
    pub bad_mass: Vec<(f64, f64)>,
}

/// Truncation level of the `A_δ` check.
pub const TRUNCATION_DELTA: f64 = 0.1;

/// Compares `b̃_r = b(re^{iθ}) / sqrt|log(1-r)|` at `N` angles with the complex
/// Gaussian of variance `Σ̂²`.
pub fn clt_check(b: &dyn BlochEvaluator, r: f64, n: usize, sigma2_hat: f64, sampling: ThetaSampling) -> Result<CltReport> {
    if !sigma2_hat.is_finite() || sigma2_hat < 0.0 {
        return Err(Error::InvalidParameter(format!("Σ̂² = {sigma2_hat}")));
    }
    let z = rescaled_boundary_samples(b, r, n, sampling)?;
    let applicable = sigma2_hat > 0.0;
    let reference = if applicable { GaussianReference::complex(sigma2_hat)? } else { GaussianReference::real(1.0)? };
    let ks_re = ks_distance(&EmpiricalDistribution::real_parts(&z)?, &reference)?;
    let ks_im = ks_distance(&EmpiricalDistribution::imag_parts(&z)?, &reference)?;

    let nf = z.len() as f64;
    let mean = z.iter().sum::<Complex64>() / nf;
    let (mut vr, mut vi, mut c) = (0.0, 0.0, 0.0);
    for w in &z {
        let d = w - mean;
        vr += d.re * d.re;
        vi += d.im * d.im;
        c += d.re * d.im;
    }
    let (var_re, var_im, cov_reim) = (vr / nf, vi / nf, c / nf);
    let corr_reim = if var_re > 0.0 && var_im > 0.0 { cov_reim / (var_re * var_im).sqrt() } else { 0.0 };

    let mut characteristic = CharacteristicDefect { max: 0.0, s: 0.0, t: 0.0 };
    for i in 0..9 {
        for j in 0..9 {
            let (s, t) = (-2.0 + 0.5 * i as f64, -2.0 + 0.5 * j as f64);
            let want = (-sigma2_hat * (s * s + t * t) / 4.0).exp();
            let d = (char_function_2d(&z, s, t)? - want).norm();
            if d > characteristic.max {
                characteristic = CharacteristicDefect { max: d, s, t };
            }
        }
    }

    let cut = 1.0 / TRUNCATION_DELTA;
    let inside: Vec<f64> = z.iter().map(|w| w.re).filter(|x| x.abs() < cut).collect();
    let truncation = TruncationCheck {
        delta: TRUNCATION_DELTA,
        inside_fraction: inside.len() as f64 / nf,
        var_re_inside: inside.iter().map(|x| x * x).sum::<f64>() / nf,
    };

    Ok(CltReport {
        r,
        n,
        sigma2_hat,
        applicable,
        ks_re,
        ks_im,
        var_re,
        var_im,
        cov_reim,
        corr_reim,
        characteristic,
        truncation,
        bad_mass: Vec::new(),
    })
}

impl CltReport {
    pub fn with_bad_mass(mut self, partitions: &[GoodBadPartition]) -> Self {
        self.bad_mass = partitions.iter().map(|p| (p.delta2, p.bad_mass)).collect();
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `left,right,count` rows over `bins` equal bins spanning the samples.
pub fn histogram_csv(samples: &[f64], bins: usize) -> Result<String> {
    if bins == 0 || samples.is_empty() || samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("histogram needs bins > 0 and finite samples".into()));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in samples {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let mut s = String::from("left,right,count\n");
    for (k, c) in counts.iter().enumerate() {
        let left = lo + width * k as f64;
        let right = if k + 1 == bins { hi } else { lo + width * (k + 1) as f64 };
        s.push_str(&format!("{},{},{}\n", fmt17(left), fmt17(right), c));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{radius, sigma2_radial, theta_count, Constant, Lacunary};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_function_is_degenerate() {
        let b = Constant { value: Complex64::new(0.0, 0.0), domain: crate::bloch::Domain::Disk };
        let rep = clt_check(&b, 0.99, 1024, 0.0, ThetaSampling::Uniform).unwrap();
        assert!(!rep.applicable);
        assert!((rep.ks_re - 0.5).abs() < 1e-15);
        assert_eq!(rep.corr_reim, 0.0);
        assert!(rep.to_json().unwrap().contains("\"N\": 1024"));
    }

    #[test]
    fn lacunary_is_gaussian() {
        let j = 20;
        let r = radius(j);
        let b = Lacunary::standard(40);
        let s2 = sigma2_radial(&b, r, theta_count(j)).unwrap();
        let rep = clt_check(&b, r, 1 << 16, s2, ThetaSampling::Jittered { seed: 1 }).unwrap();
        assert!(rep.ks_re <= 0.05 && rep.ks_im <= 0.05, "{rep:?}");
        assert!(rep.corr_reim.abs() <= 0.05, "{rep:?}");
        assert!(rep.truncation.inside_fraction == 1.0);

        // The resonances 2^k + 2^k = 2^{k+1} give Re b̃ the third moment
        // κ₃ = (3/4) Σ a_k² a_{k+1} (scaled), which accounts for the gap between
        // φ(s, 0) and the Gaussian characteristic function.
        let scale = 1.0 / (1.0 - r).ln().abs().sqrt();
        let a: Vec<f64> = (0..41).map(|k| r.powf((k as f64).exp2()) * scale).collect();
        let k3: f64 = (0..40).map(|k| 0.75 * a[k] * a[k] * a[k + 1]).sum();
        let z = rescaled_boundary_samples(&b, r, 1 << 16, ThetaSampling::Jittered { seed: 1 }).unwrap();
        for s in [-2.0, 2.0] {
            let phi = char_function_2d(&z, s, 0.0).unwrap();
            let gauss = (-s2 * s * s / 4.0).exp();
            let edgeworth = gauss * Complex64::new(0.0, -s * s * s * k3 / 6.0).exp();
            assert!((phi - edgeworth).norm() < 0.03, "{phi} vs {edgeworth}");
            assert!((phi - gauss).norm() > 0.05);
        }

        // Oracle: the same truncation with independent uniform phases.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model: Vec<f64> = (0..1 << 16)
            .map(|_| {
                (0..40)
                    .map(|k| r.powf((k as f64).exp2()) * rng.gen_range(0.0..std::f64::consts::TAU).cos())
                    .sum::<f64>()
                    * scale
            })
            .collect();
        let ks_model = ks_distance(&EmpiricalDistribution::new(model).unwrap(), &GaussianReference::complex(s2).unwrap()).unwrap();
        assert!(ks_model <= 0.05, "{ks_model}");
        // the first Edgeworth term moves the CDF by at most skew·φ(0)/6
        let skew = k3 / rep.var_re.powf(1.5);
        let predicted = skew / (6.0 * (std::f64::consts::TAU).sqrt());
        assert!((rep.ks_re - predicted).abs() < 0.01, "{} vs {predicted}", rep.ks_re);
    }

    #[test]
    fn histogram_counts_every_sample() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let csv = histogram_csv(&xs, 20).unwrap();
        let total: usize = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
        assert_eq!(total, 1000);
        assert_eq!(csv.lines().count(), 21);
        assert!(histogram_csv(&[], 3).is_err());
    }
}
