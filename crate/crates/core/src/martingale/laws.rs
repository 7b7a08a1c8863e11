use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{checked_pow, PAdicMartingale};
use crate::{Error, Result};

/// How the `p` child offsets of a node are drawn.
///
/// Every law produces offsets with zero mean, so the averaging property holds
/// by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum JumpLaw {
    Zeros,
    /// `±1` in random order (half of each). For odd `p` one child stays put
    /// and the others move by `±sqrt(p/(p-1))`, keeping unit local variance.
    Rademacher,
    /// Unit roots `e^{2πi(k/p + φ)}` with a random phase and permutation.
    UnitRoots,
    /// Centered uniform real offsets, magnitude at most `scale`.
    UniformReal { scale: f64 },
    /// Centered uniform offsets from the disk of `radius`.
    UniformComplex { radius: f64 },
    /// Rademacher offsets scaled by `1/2` or `1` per node, so every local
    /// variance is `0.25` or `1`. The amplitude pattern depends only on
    /// `amplitude_seed`, signs on the martingale seed.
    Mixed { amplitude_seed: u64 },
    /// The same offsets at every node, in the given order.
    Fixed(Vec<Complex64>),
}

impl JumpLaw {
    pub fn validate(&self, p: usize) -> Result<()> {
        match self {
            JumpLaw::UniformReal { scale: s } | JumpLaw::UniformComplex { radius: s } => {
                if !(s.is_finite() && *s >= 0.0) {
                    return Err(Error::InvalidLaw(format!("scale {s} must be finite and >= 0")));
                }
            }
            JumpLaw::Fixed(v) => {
                if v.len() != p {
                    return Err(Error::InvalidLaw(format!("{} offsets for base {p}", v.len())));
                }
                let sum: Complex64 = v.iter().sum();
                let scale = v.iter().map(|z| z.norm()).fold(1.0, f64::max);
                if sum.norm() > 1e-12 * scale * p as f64 {
                    return Err(Error::InvalidLaw(format!("offsets sum to {sum}, not zero")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Upper bound on `|Δ|` for offsets drawn from this law.
    pub fn jump_bound(&self, p: usize) -> f64 {
        match self {
            JumpLaw::Zeros => 0.0,
            JumpLaw::Rademacher | JumpLaw::Mixed { .. } => odd_amplitude(p),
            JumpLaw::UnitRoots => 1.0,
            JumpLaw::UniformReal { scale } => *scale,
            JumpLaw::UniformComplex { radius } => *radius,
            JumpLaw::Fixed(v) => v.iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            JumpLaw::UnitRoots | JumpLaw::UniformComplex { .. } => false,
            JumpLaw::Fixed(v) => v.iter().all(|z| z.im == 0.0),
            _ => true,
        }
    }

    pub(super) fn draw(&self, rng: &mut ChaCha8Rng, amp_rng: &mut ChaCha8Rng, out: &mut [Complex64]) {
        let p = out.len();
        match self {
            JumpLaw::Zeros => out.fill(Complex64::new(0.0, 0.0)),
            JumpLaw::Rademacher => signs(rng, out, 1.0),
            JumpLaw::Mixed { .. } => {
                let a = if amp_rng.gen::<bool>() { 1.0 } else { 0.5 };
                signs(rng, out, a);
            }
            JumpLaw::UnitRoots => {
                let phase: f64 = rng.gen();
                for (k, z) in out.iter_mut().enumerate() {
                    *z = Complex64::from_polar(1.0, std::f64::consts::TAU * (k as f64 / p as f64 + phase));
                }
                out.shuffle(rng);
            }
            JumpLaw::UniformReal { scale } => {
                for z in out.iter_mut() {
                    *z = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
                }
                center(out, 0.5 * scale);
            }
            JumpLaw::UniformComplex { radius } => {
                for z in out.iter_mut() {
                    let r = rng.gen::<f64>().sqrt();
                    let t = rng.gen::<f64>() * std::f64::consts::TAU;
                    *z = Complex64::from_polar(r, t);
                }
                center(out, 0.5 * radius);
            }
            JumpLaw::Fixed(v) => out.copy_from_slice(v),
        }
    }
}

fn odd_amplitude(p: usize) -> f64 {
    if p.is_multiple_of(2) {
        1.0
    } else {
        (p as f64 / (p as f64 - 1.0)).sqrt()
    }
}

fn signs(rng: &mut ChaCha8Rng, out: &mut [Complex64], amplitude: f64) {
    let p = out.len();
    let a = amplitude * odd_amplitude(p);
    let half = p / 2;
    for (i, z) in out.iter_mut().enumerate() {
        let v = if i < half {
            a
        } else if i < 2 * half {
            -a
        } else {
            0.0
        };
        *z = Complex64::new(v, 0.0);
    }
    out.shuffle(rng);
}

// Subtracting the mean of values in the unit disk leaves magnitudes below 2.
fn center(out: &mut [Complex64], half_scale: f64) {
    let mean = out.iter().sum::<Complex64>() / out.len() as f64;
    for z in out.iter_mut() {
        *z = (*z - mean) * half_scale;
    }
}

/// Generates a martingale top-down from a single ChaCha8 stream, so the result
/// depends only on `(seed, p, depth, law)`.
pub fn random_martingale(seed: u64, p: usize, depth: usize, law: &JumpLaw) -> Result<PAdicMartingale> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("base {p} < 2")));
    }
    law.validate(p)?;
    checked_pow(p, depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp_seed = match law {
        JumpLaw::Mixed { amplitude_seed } => *amplitude_seed,
        _ => 0,
    };
    let mut amp_rng = ChaCha8Rng::seed_from_u64(amp_seed);
    let mut levels = vec![vec![Complex64::new(0.0, 0.0)]];
    let mut buf = vec![Complex64::new(0.0, 0.0); p];
    for _ in 0..depth {
        let above = levels.last().expect("root level");
        let mut below = Vec::with_capacity(above.len() * p);
        for x in above {
            law.draw(&mut rng, &mut amp_rng, &mut buf);
            below.extend(buf.iter().map(|d| x + d));
        }
        levels.push(below);
    }
    let bound = law.jump_bound(p);
    let m = PAdicMartingale::from_levels_unchecked(p, levels, bound, Some(seed));
    // Offsets are centered in floating point; re-verify rather than trust.
    m.check_averaging(1e-13)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::sandwich_bounds;

    #[test]
    fn zeros_give_constant() {
        let m = random_martingale(1, 3, 5, &JumpLaw::Zeros).unwrap();
        assert!(m.levels().iter().flatten().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn same_seed_same_martingale() {
        for law in [JumpLaw::Rademacher, JumpLaw::UniformComplex { radius: 1.0 }, JumpLaw::UnitRoots] {
            let a = random_martingale(42, 2, 10, &law).unwrap();
            let b = random_martingale(42, 2, 10, &law).unwrap();
            assert_eq!(a, b);
            let c = random_martingale(43, 2, 10, &law).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn rademacher_sandwich_is_one() {
        let m = random_martingale(7, 2, 12, &JumpLaw::Rademacher).unwrap();
        assert_eq!(sandwich_bounds(&m).unwrap(), (1.0, 1.0));
        let m3 = random_martingale(7, 3, 6, &JumpLaw::Rademacher).unwrap();
        let (lo, hi) = sandwich_bounds(&m3).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_variances_are_quarter_or_one() {
        let m = random_martingale(3, 2, 10, &JumpLaw::Mixed { amplitude_seed: 9 }).unwrap();
        // exhaustive node scan
        for idx in m.internal_nodes() {
            let v = m.local_variance(idx).unwrap();
            assert!(v == 0.25 || v == 1.0, "{v}");
        }
        assert_eq!(sandwich_bounds(&m).unwrap(), (0.25, 1.0));
    }

    #[test]
    fn mixed_profile_depends_only_on_amplitude_seed() {
        let law = JumpLaw::Mixed { amplitude_seed: 5 };
        let a = random_martingale(1, 2, 8, &law).unwrap();
        let b = random_martingale(2, 2, 8, &law).unwrap();
        assert_ne!(a, b);
        for idx in a.internal_nodes() {
            assert_eq!(a.local_variance(idx).unwrap(), b.local_variance(idx).unwrap());
        }
    }

    #[test]
    fn fixed_law_must_be_mean_zero() {
        let bad = JumpLaw::Fixed(vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)]);
        assert!(matches!(random_martingale(0, 2, 3, &bad), Err(Error::InvalidLaw(_))));
        let short = JumpLaw::Fixed(vec![Complex64::new(0.0, 0.0)]);
        assert!(matches!(random_martingale(0, 2, 3, &short), Err(Error::InvalidLaw(_))));
        let good = JumpLaw::Fixed(vec![Complex64::new(3.0, 0.0), Complex64::new(-3.0, 0.0)]);
        let m = random_martingale(0, 2, 1, &good).unwrap();
        assert_eq!(m.jump(0.1, 1).unwrap(), Complex64::new(3.0, 0.0));
    }

    #[test]
    fn declared_bounds_hold() {
        for p in 2..6 {
            for law in [
                JumpLaw::Rademacher,
                JumpLaw::UnitRoots,
                JumpLaw::UniformReal { scale: 0.7 },
                JumpLaw::UniformComplex { radius: 1.3 },
                JumpLaw::Mixed { amplitude_seed: 1 },
            ] {
                let m = random_martingale(p as u64, p, 5, &law).unwrap();
                assert!(m.max_jump() <= law.jump_bound(p) + 1e-12, "{law:?} p={p}");
                assert_eq!(m.is_real(), law.is_real());
            }
        }
    }
}
