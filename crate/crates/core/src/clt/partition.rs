use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::martingale::{PAdicIndex, PAdicMartingale};
use crate::{Error, Result};

/// Classification of every internal node of a martingale.
///
/// A node `I` at level `k` is good when the local variance of the real part
/// over the window `w = min(n, depth - k)` satisfies
/// `|var_I^w / χ - Σ̂²/2| ≤ δ₂`, `χ = log p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodBadPartition {
    pub base: usize,
    pub n: usize,
    pub delta2: f64,
    pub sigma2_hat: f64,
    /// `good[k][i]` for level `k < depth`.
    pub good: Vec<Vec<bool>>,
    /// `(1/depth) Σ_k Σ_{I bad at level k} |I|`: the share of hyperbolic area
    /// of `[0,1] × (p^{-depth}, 1]` covered by bad boxes.
    pub bad_mass: f64,
}

impl GoodBadPartition {
    pub fn depth(&self) -> usize {
        self.good.len()
    }

    /// Local variance of the good band's midpoint, `χ Σ̂²/2`.
    pub fn target_variance(&self) -> f64 {
        (self.base as f64).ln() * self.sigma2_hat / 2.0
    }

    pub fn is_good(&self, index: PAdicIndex) -> bool {
        self.good[index.level][index.offset]
    }
}

pub fn good_bad_partition(m: &PAdicMartingale, n: usize, delta2: f64, sigma2_hat: f64) -> Result<GoodBadPartition> {
    let depth = m.depth();
    if n == 0 || depth < n {
        return Err(Error::InsufficientDepth { level: 0, generations: n.max(1), depth });
    }
    if delta2.is_nan() || delta2 < 0.0 || !sigma2_hat.is_finite() {
        return Err(Error::InvalidParameter(format!("band Σ̂²/2 ± δ₂ with Σ̂² = {sigma2_hat}, δ₂ = {delta2}")));
    }
    let re = m.real_part();
    let p = m.base();
    let chi = (p as f64).ln();
    let mid = sigma2_hat / 2.0;
    let mut good = Vec::with_capacity(depth);
    let mut bad_mass = 0.0;
    for k in 0..depth {
        let w = n.min(depth - k);
        let flags = (0..m.level(k).len())
            .map(|i| {
                let v = re.local_variance_n(PAdicIndex::new(p, k, i)?, w)?;
                Ok((v / chi - mid).abs() <= delta2)
            })
            .collect::<Result<Vec<bool>>>()?;
        let bad = flags.iter().filter(|g| !**g).count();
        bad_mass += bad as f64 / flags.len() as f64;
        good.push(flags);
    }
    Ok(GoodBadPartition { base: p, n, delta2, sigma2_hat, good, bad_mass: bad_mass / depth as f64 })
}

/// Zero-mean real jump pattern over `p` children with mean square 1.
fn synthetic_pattern(p: usize) -> Vec<f64> {
    if p == 2 {
        return vec![1.0, -1.0];
    }
    (0..p).map(|c| std::f64::consts::SQRT_2 * (TAU * c as f64 / p as f64).cos()).collect()
}

/// `S = S_good + S_bad`: `S_good` follows `S` on good nodes and takes
/// synthetic zero-mean jumps of local variance `χ Σ̂²/2` on bad ones; `S_bad`
/// carries the remainder, so its jumps vanish on good nodes.
pub fn split_good_bad(s: &PAdicMartingale, partition: &GoodBadPartition) -> Result<(PAdicMartingale, PAdicMartingale)> {
    if !s.is_real() {
        return Err(Error::InvalidParameter("the good/bad split needs a real martingale".into()));
    }
    if s.base() != partition.base || s.depth() != partition.depth() {
        return Err(Error::ShapeMismatch(format!(
            "martingale ({}, {}) vs partition ({}, {})",
            s.base(),
            s.depth(),
            partition.base,
            partition.depth()
        )));
    }
    let p = s.base();
    let amp = partition.target_variance().max(0.0).sqrt();
    let pattern: Vec<f64> = synthetic_pattern(p).into_iter().map(|x| x * amp).collect();
    let mut good_levels = vec![vec![s.root()]];
    for k in 0..s.depth() {
        let parent = &good_levels[k];
        let (above, below) = (s.level(k), s.level(k + 1));
        let mut next = Vec::with_capacity(below.len());
        for (i, g) in parent.iter().enumerate() {
            for c in 0..p {
                let jump = if partition.good[k][i] {
                    below[i * p + c] - above[i]
                } else {
                    Complex64::new(pattern[c], 0.0)
                };
                next.push(g + jump);
            }
        }
        good_levels.push(next);
    }
    let bad_levels: Vec<Vec<Complex64>> = s
        .levels()
        .iter()
        .zip(&good_levels)
        .map(|(a, g)| a.iter().zip(g).map(|(a, g)| a - g).collect())
        .collect();
    let build = |levels| {
        let m = PAdicMartingale::from_levels_unchecked(p, levels, 0.0, None);
        let bound = m.max_jump();
        let m = m.with_jump_bound(bound);
        m.check_averaging(1e-9)?;
        Ok::<_, Error>(m)
    };
    Ok((build(good_levels)?, build(bad_levels)?))
}

/// `∫|X_n - X_0|² / n` at the deepest level.
pub fn variance_rate(m: &PAdicMartingale) -> f64 {
    let depth = m.depth();
    if depth == 0 {
        return 0.0;
    }
    let root = m.root();
    let leaves = m.leaves();
    leaves.iter().map(|x| (x - root).norm_sqr()).sum::<f64>() / leaves.len() as f64 / depth as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{ExpTransplant, Lacunary};
    use crate::bridge::{martingale_from_bloch, BridgeOptions};
    use crate::martingale::{random_martingale, JumpLaw};
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn matching_constant_variance_is_all_good() {
        let m = random_martingale(3, 2, 10, &JumpLaw::Rademacher).unwrap();
        let part = good_bad_partition(&m, 4, 1e-9, 2.0 / LN_2).unwrap();
        assert_eq!(part.bad_mass, 0.0);
        let (good, bad) = split_good_bad(&m, &part).unwrap();
        assert_eq!(good.levels(), m.levels());
        assert!(bad.leaves().iter().all(|z| z.norm() == 0.0));
        let loose = good_bad_partition(&m, 4, f64::INFINITY, 123.0).unwrap();
        assert_eq!(loose.bad_mass, 0.0);
    }

    #[test]
    fn all_bad_gives_synthetic_jumps_only() {
        let m = random_martingale(4, 3, 6, &JumpLaw::Rademacher).unwrap().real_part();
        let part = good_bad_partition(&m, 2, 0.0, 10.0).unwrap();
        assert_eq!(part.bad_mass, 1.0);
        let (good, bad) = split_good_bad(&m, &part).unwrap();
        let target = part.target_variance();
        for k in 0..good.depth() {
            for v in good.local_variances_at(k).unwrap() {
                assert!((v - target).abs() < 1e-12 * target);
            }
        }
        assert!((bad.root()).norm() == 0.0);
        assert!(good.check_averaging(1e-12).is_ok());
    }

    #[test]
    fn complex_martingale_is_rejected() {
        let m = random_martingale(1, 2, 4, &JumpLaw::UniformComplex { radius: 1.0 }).unwrap();
        let part = good_bad_partition(&m, 2, 0.1, 1.0).unwrap();
        assert!(split_good_bad(&m, &part).is_err());
        assert!(good_bad_partition(&m, 5, 0.1, 1.0).is_err());
    }

    #[test]
    fn lacunary_bad_mass() {
        let b = ExpTransplant::new(Lacunary::standard(40));
        let bm = martingale_from_bloch(&b, &BridgeOptions::new(14)).unwrap();
        let s2 = 1.0 / LN_2;
        let masses: Vec<f64> = [2usize, 4, 8]
            .iter()
            .map(|&n| good_bad_partition(&bm.martingale, n, 0.3 * s2, s2).unwrap().bad_mass)
            .collect();
        assert!(masses.iter().all(|m| *m < 0.5), "{masses:?}");
        assert!(masses.windows(2).all(|w| w[1] <= w[0]), "{masses:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn split_is_exact_and_bad_part_is_small(seed in 0u64..500, p in 2usize..5, d2 in 0.0f64..0.5) {
            let m = random_martingale(seed, p, 6, &JumpLaw::UniformReal { scale: 1.0 }).unwrap();
            let s2 = 0.8;
            let part = good_bad_partition(&m, 3, d2, s2).unwrap();
            let (good, bad) = split_good_bad(&m, &part).unwrap();
            for k in 0..=m.depth() {
                for ((a, g), b) in m.level(k).iter().zip(good.level(k)).zip(bad.level(k)) {
                    prop_assert!((a - (g + b)).norm() < 1e-12);
                }
            }
            for idx in m.internal_nodes().filter(|i| part.is_good(*i)) {
                prop_assert!(bad.local_variance(idx).unwrap() < 1e-24);
            }
            let j = bad.max_jump();
            prop_assert!(variance_rate(&bad) <= part.bad_mass * j * j + 1e-12);
            let wider = good_bad_partition(&m, 3, d2 + 0.1, s2).unwrap();
            prop_assert!(wider.bad_mass <= part.bad_mass);
        }
    }
}
