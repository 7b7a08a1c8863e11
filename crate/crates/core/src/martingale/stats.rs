use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{JumpLaw, PAdicMartingale};
use crate::{Error, Result, SpectrumEstimate};

/// Both per-level estimators of the asymptotic variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticVariance {
    /// `(1/n) ∫ |X_n|² dx` for `n = 1..=depth`.
    pub by_value: Vec<f64>,
    /// `(1/n) ∫ ⟨X⟩_n dx` for `n = 1..=depth`.
    pub by_square_function: Vec<f64>,
    /// Ladder over levels with the square-function values; `limit` is the deepest one.
    pub estimate: SpectrumEstimate,
}

impl AsymptoticVariance {
    pub fn point_estimate(&self) -> f64 {
        self.estimate.limit
    }
}

fn mean(xs: impl Iterator<Item = f64>, n: usize) -> f64 {
    xs.sum::<f64>() / n as f64
}

pub fn asymptotic_variance(m: &PAdicMartingale) -> Result<AsymptoticVariance> {
    let depth = m.depth();
    let mut by_value = Vec::with_capacity(depth);
    let mut by_sq = Vec::with_capacity(depth);
    let mut cumulative = 0.0;
    for n in 1..=depth {
        let lv = m.level(n);
        let second = mean(lv.iter().map(|z| z.norm_sqr()), lv.len());
        // ∫ |Δ_n|² is the mean local variance of the level above.
        cumulative += mean(m.local_variances_at(n - 1)?.into_iter(), m.level(n - 1).len());
        by_value.push(second / n as f64);
        by_sq.push(cumulative / n as f64);
    }
    let scales: Vec<f64> = (1..=depth).map(|n| n as f64).collect();
    let errors: Vec<f64> = by_value.iter().zip(&by_sq).map(|(a, b)| (a - b).abs()).collect();
    let estimate = SpectrumEstimate::from_values("martingale-square-function", scales, by_sq.clone(), errors)?;
    Ok(AsymptoticVariance { by_value, by_square_function: by_sq, estimate })
}

/// Exact `(inf, sup)` of the local variance over all internal nodes.
pub fn sandwich_bounds(m: &PAdicMartingale) -> Result<(f64, f64)> {
    if m.depth() == 0 {
        return Ok((0.0, 0.0));
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for k in 0..m.depth() {
        for v in m.local_variances_at(k)? {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok((lo, hi))
}

/// `(1/n) log ∫ |e^{t X_n}| dx` via a max-shifted log-sum-exp.
pub fn integral_means(m: &PAdicMartingale, t: f64, n: usize) -> Result<f64> {
    if n > m.depth() {
        return Err(Error::LevelOutOfRange { level: n, depth: m.depth() });
    }
    if n == 0 || t == 0.0 {
        return Ok(0.0);
    }
    let lv = m.level(n);
    let shift = lv.iter().map(|z| t * z.re).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = lv.iter().map(|z| (t * z.re - shift).exp()).sum();
    Ok((shift + (s / lv.len() as f64).ln()) / n as f64)
}

pub const LIL_MIN_LEVEL: usize = 16;

fn lil_normalizer(n: usize) -> f64 {
    let nf = n as f64;
    (nf * nf.ln().ln()).sqrt()
}

/// `|X_n(x)| / sqrt(n log log n)`.
pub fn lil_ratio(m: &PAdicMartingale, x: f64, n: usize) -> Result<f64> {
    if n < LIL_MIN_LEVEL {
        return Err(Error::InvalidParameter(format!("LIL ratio needs n >= {LIL_MIN_LEVEL}, got {n}")));
    }
    Ok(m.value_at(x, n)?.norm() / lil_normalizer(n))
}

/// Max over leaves of the LIL ratio at each level `16..=depth`.
///
/// This is the stored-tree estimator. At desk depths it is dominated by the
/// extreme leaves and overshoots the constant; see [`lil_path_estimate`].
pub fn lil_constant_estimate(m: &PAdicMartingale) -> Result<SpectrumEstimate> {
    if m.depth() < LIL_MIN_LEVEL {
        return Err(Error::InsufficientDepth {
            level: 0,
            generations: LIL_MIN_LEVEL,
            depth: m.depth(),
        });
    }
    let levels: Vec<usize> = (LIL_MIN_LEVEL..=m.depth()).collect();
    let values: Vec<f64> = levels
        .iter()
        .map(|&n| m.level(n).iter().map(|z| z.norm()).fold(0.0, f64::max) / lil_normalizer(n))
        .collect();
    let scales = levels.iter().map(|&n| n as f64).collect();
    let errors = vec![0.0; values.len()];
    SpectrumEstimate::from_values("martingale-lil-max-leaf", scales, values, errors)
}

/// Monte-Carlo LIL estimate from independent root-to-leaf paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilPathEstimate {
    pub steps: usize,
    pub paths: usize,
    /// Per path: `sup_{√L ≤ n ≤ L} |S_n| / sqrt(n log log n)`.
    pub path_sups: Vec<f64>,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
}

/// Simulates `paths` uniformly random points `x` through a martingale of
/// `steps` generations drawn from `law` and reports the median of the windowed
/// suprema. A path through a random leaf has the same law as the square
/// function walk, so `2^steps` leaves never need to be stored.
pub fn lil_path_estimate(seed: u64, p: usize, law: &JumpLaw, steps: usize, paths: usize) -> Result<LilPathEstimate> {
    law.validate(p)?;
    if steps < LIL_MIN_LEVEL * LIL_MIN_LEVEL || paths == 0 {
        return Err(Error::InvalidParameter(format!(
            "need steps >= {} and paths >= 1",
            LIL_MIN_LEVEL * LIL_MIN_LEVEL
        )));
    }
    let start = (steps as f64).sqrt().ceil() as usize;
    let mut path_sups: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64 + 1);
            let mut amp = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            amp.set_stream(k as u64 + 1);
            let mut buf = vec![Complex64::new(0.0, 0.0); p];
            let mut s = Complex64::new(0.0, 0.0);
            let mut best: f64 = 0.0;
            for n in 1..=steps {
                law.draw(&mut rng, &mut amp, &mut buf);
                s += buf[rng.gen_range(0..p)];
                if n >= start {
                    best = best.max(s.norm() / lil_normalizer(n));
                }
            }
            best
        })
        .collect();
    let raw = path_sups.clone();
    path_sups.sort_by(f64::total_cmp);
    let q = |f: f64| path_sups[((paths - 1) as f64 * f).round() as usize];
    Ok(LilPathEstimate {
        steps,
        paths,
        median: q(0.5),
        lower_quartile: q(0.25),
        upper_quartile: q(0.75),
        path_sups: raw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    /// Leaf measure of `{|S_n| > t}`.
    pub empirical: f64,
    /// `2 exp(-t² / (2 n C²))` with `C` the declared jump bound.
    pub bound: f64,
    /// Binomial sampling deviation `sqrt(bound (1 - bound) / leaves)`.
    pub sigma: f64,
}

/// Tail of `S_n = Re(X_n - X_0)` over the leaves at `n = depth`.
pub fn subgaussian_tail(m: &PAdicMartingale, ts: &[f64]) -> Result<Vec<TailRow>> {
    let n = m.depth();
    if n == 0 {
        return Err(Error::InsufficientDepth { level: 0, generations: 1, depth: 0 });
    }
    let c = m.jump_bound().max(f64::MIN_POSITIVE);
    let x0 = m.root().re;
    let leaves = m.leaves();
    let count = leaves.len() as f64;
    Ok(ts
        .iter()
        .map(|&t| {
            let hits = leaves.iter().filter(|z| (z.re - x0).abs() > t).count() as f64;
            let bound = (2.0 * (-t * t / (2.0 * n as f64 * c * c)).exp()).min(1.0);
            TailRow {
                t,
                empirical: hits / count,
                bound,
                sigma: (bound * (1.0 - bound) / count).sqrt(),
            }
        })
        .collect())
}

/// `C_q = ((1/q!) ∫ |S_n|^{2q})^{1/q} / n` for `q = 1..=max_q`, the smallest
/// constant in `(1/Γ(q+1)) ∫|S_n|^{2q} ≤ (C n)^q`.
pub fn moment_constants(m: &PAdicMartingale, max_q: u32) -> Result<Vec<(u32, f64)>> {
    let n = m.depth();
    if n == 0 {
        return Ok((1..=max_q).map(|q| (q, 0.0)).collect());
    }
    let x0 = m.root();
    let leaves = m.leaves();
    let mut out = Vec::new();
    let mut fact = 1.0;
    for q in 1..=max_q {
        fact *= q as f64;
        let moment = mean(leaves.iter().map(|z| (z - x0).norm_sqr().powi(q as i32)), leaves.len());
        out.push((q, (moment / fact).powf(1.0 / q as f64) / n as f64));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleStats {
    pub sigma2: f64,
    /// Stored-tree LIL estimate at the deepest level; `None` below depth 16.
    pub lil_estimate: Option<f64>,
    /// `(t, β(t))` at the deepest level.
    pub beta: Vec<(f64, f64)>,
    pub local_var_min: f64,
    pub local_var_max: f64,
}

pub fn martingale_stats(m: &PAdicMartingale, taus: &[f64]) -> Result<MartingaleStats> {
    let av = asymptotic_variance(m)?;
    let (lo, hi) = sandwich_bounds(m)?;
    let lil = if m.depth() >= LIL_MIN_LEVEL {
        Some(lil_constant_estimate(m)?.limit)
    } else {
        None
    };
    let beta = taus
        .iter()
        .map(|&t| Ok((t, integral_means(m, t, m.depth())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MartingaleStats {
        sigma2: av.point_estimate(),
        lil_estimate: lil,
        beta,
        local_var_min: lo,
        local_var_max: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::random_martingale;

    #[test]
    fn unit_jumps_have_unit_variance_at_every_level() {
        let m = random_martingale(1, 2, 14, &JumpLaw::Rademacher).unwrap();
        let av = asymptotic_variance(&m).unwrap();
        for (a, b) in av.by_value.iter().zip(&av.by_square_function) {
            assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        }
        assert!((av.point_estimate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_variance_is_quadratic_in_scale() {
        let m = random_martingale(2, 3, 8, &JumpLaw::UniformComplex { radius: 1.0 }).unwrap();
        let base = asymptotic_variance(&m).unwrap().point_estimate();
        let scaled = asymptotic_variance(&m.scaled(Complex64::new(0.0, 3.0))).unwrap().point_estimate();
        assert!((scaled - 9.0 * base).abs() < 1e-12 * scaled);
    }

    #[test]
    fn constant_characteristics_vanish() {
        let m = PAdicMartingale::constant(2, 18, Complex64::new(0.0, 0.0)).unwrap();
        let stats = martingale_stats(&m, &[0.1, -0.5]).unwrap();
        assert_eq!(stats.sigma2, 0.0);
        assert_eq!(stats.lil_estimate, Some(0.0));
        assert!(stats.beta.iter().all(|(_, b)| *b == 0.0));
        assert_eq!((stats.local_var_min, stats.local_var_max), (0.0, 0.0));
        let d0 = PAdicMartingale::constant(2, 0, Complex64::new(5.0, 0.0)).unwrap();
        let s0 = martingale_stats(&d0, &[0.3]).unwrap();
        assert_eq!(s0.sigma2, 0.0);
        assert_eq!(s0.beta, vec![(0.3, 0.0)]);
    }

    #[test]
    fn rademacher_integral_means_is_log_cosh() {
        // Independent levels: ∫ e^{t S_n} = cosh(t)^n.
        let m = random_martingale(4, 2, 16, &JumpLaw::Rademacher).unwrap();
        for t in [0.05, 0.3, 1.0, -2.0] {
            let got = integral_means(&m, t, 16).unwrap();
            let want = f64::cosh(t).ln();
            assert!((got - want).abs() < 1e-12, "t={t}: {got} vs {want}");
        }
        assert_eq!(integral_means(&m, 0.0, 16).unwrap(), 0.0);
    }

    #[test]
    fn integral_means_survives_large_exponents() {
        let m = random_martingale(4, 2, 12, &JumpLaw::Rademacher).unwrap();
        let v = integral_means(&m, 50.0, 12).unwrap();
        assert!(v.is_finite());
        assert!((v - f64::cosh(50.0).ln()).abs() < 1e-10);
    }

    #[test]
    fn lil_ratio_requires_sixteen_levels() {
        let m = random_martingale(4, 2, 18, &JumpLaw::Rademacher).unwrap();
        assert!(lil_ratio(&m, 0.3, 15).is_err());
        let r = lil_ratio(&m, 0.3, 16).unwrap();
        let want = m.value_at(0.3, 16).unwrap().norm() / (16.0 * 16f64.ln().ln()).sqrt();
        assert_eq!(r, want);
    }

    #[test]
    fn lil_estimates_are_homogeneous() {
        let m = random_martingale(8, 2, 17, &JumpLaw::Rademacher).unwrap();
        let a = lil_constant_estimate(&m).unwrap();
        let b = lil_constant_estimate(&m.scaled(Complex64::new(2.5, 0.0))).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((2.5 * x - y).abs() < 1e-12);
        }
        let pm = |a: f64| JumpLaw::Fixed(vec![Complex64::new(a, 0.0), Complex64::new(-a, 0.0)]);
        let p1 = lil_path_estimate(3, 2, &pm(1.0), 4096, 16).unwrap();
        let p2 = lil_path_estimate(3, 2, &pm(2.5), 4096, 16).unwrap();
        for (x, y) in p1.path_sups.iter().zip(&p2.path_sups) {
            assert!(*x > 0.0 && (2.5 * x - y).abs() < 1e-12 * y);
        }
    }

    #[test]
    fn path_estimate_is_thread_independent() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| lil_path_estimate(11, 2, &JumpLaw::Rademacher, 1024, 24).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn rademacher_moment_constants() {
        // E S^2 = n, E S^4 = 3n² - 2n, E S^6 = 15n³ - 30n² + 16n.
        let m = random_martingale(5, 2, 16, &JumpLaw::Rademacher).unwrap();
        let n: f64 = 16.0;
        let c = moment_constants(&m, 3).unwrap();
        let want = [
            1.0,
            ((3.0 * n * n - 2.0 * n) / 2.0).sqrt() / n,
            ((15.0 * n * n * n - 30.0 * n * n + 16.0 * n) / 6.0).cbrt() / n,
        ];
        for ((_, got), w) in c.iter().zip(want) {
            assert!((got - w).abs() < 1e-12, "{got} vs {w}");
        }
        assert!(c[0].1 <= c[1].1 && c[1].1 <= c[2].1);
    }

    #[test]
    fn tail_counts_match_binomial() {
        // Rademacher leaves at depth n carry the binomial law exactly.
        let n = 12;
        let m = random_martingale(6, 2, n, &JumpLaw::Rademacher).unwrap();
        let rows = subgaussian_tail(&m, &[4.0]).unwrap();
        let mut exact = 0.0;
        let mut binom = 1.0;
        for k in 0..=n {
            let s = 2.0 * k as f64 - n as f64;
            if s.abs() > 4.0 {
                exact += binom;
            }
            binom = binom * (n - k) as f64 / (k + 1) as f64;
        }
        exact /= 2f64.powi(n as i32);
        assert!((rows[0].empirical - exact).abs() < 1e-15);
        assert!(rows[0].empirical <= rows[0].bound);
    }
}
