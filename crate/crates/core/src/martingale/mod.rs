//! Finite-depth p-adic martingales on `[0, 1]`.
//!
//! A martingale is stored level by level: level `k` holds the `p^k` values
//! `X_I` for the p-adic intervals `I` of length `p^{-k}`, ordered left to
//! right. The averaging property (parent equals the mean of its children)
//! is maintained by every constructor.

mod io;
mod laws;
mod stats;

pub use io::{read_binary, write_binary, MartingaleRecord};
pub use laws::{random_martingale, JumpLaw};
pub use stats::{
    asymptotic_variance, integral_means, lil_constant_estimate, lil_path_estimate, lil_ratio,
    LilPathEstimate, LIL_MIN_LEVEL,
    martingale_stats, moment_constants, sandwich_bounds, subgaussian_tail, AsymptoticVariance,
    MartingaleStats, TailRow,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance used when validating externally supplied level arrays.
pub const AVERAGING_TOLERANCE: f64 = 1e-12;

/// A p-adic interval `[j p^{-k}, (j+1) p^{-k}]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PAdicIndex {
    pub base: usize,
    pub level: usize,
    pub offset: usize,
}

impl PAdicIndex {
    pub fn new(base: usize, level: usize, offset: usize) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidParameter(format!("base {base} < 2")));
        }
        let count = checked_pow(base, level)?;
        if offset >= count {
            return Err(Error::InvalidParameter(format!(
                "offset {offset} >= {base}^{level}"
            )));
        }
        Ok(Self { base, level, offset })
    }

    pub fn root(base: usize) -> Self {
        Self { base, level: 0, offset: 0 }
    }

    /// The interval containing `x` at `level`; `x = 1` belongs to the last interval.
    pub fn containing(base: usize, level: usize, x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutsideDomain(format!("x = {x}")));
        }
        let count = checked_pow(base, level)?;
        let j = ((x * count as f64).floor() as usize).min(count - 1);
        Ok(Self { base, level, offset: j })
    }

    pub fn length(&self) -> f64 {
        (self.base as f64).powi(-(self.level as i32))
    }

    pub fn endpoints(&self) -> (f64, f64) {
        let h = self.length();
        (self.offset as f64 * h, (self.offset + 1) as f64 * h)
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            base: self.base,
            level: self.level - 1,
            offset: self.offset / self.base,
        })
    }

    pub fn children(&self) -> impl Iterator<Item = Self> + '_ {
        (0..self.base).map(move |i| Self {
            base: self.base,
            level: self.level + 1,
            offset: self.offset * self.base + i,
        })
    }

    /// Offsets of the descendants `generations` levels below, as a range.
    pub fn descendant_range(&self, generations: usize) -> std::ops::Range<usize> {
        let w = self.base.pow(generations as u32);
        self.offset * w..(self.offset + 1) * w
    }
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    base.checked_pow(exp as u32)
        .filter(|n| *n <= (1usize << 40))
        .ok_or_else(|| Error::InvalidParameter(format!("{base}^{exp} too large")))
}

/// A complex p-adic martingale of finite depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PAdicMartingale {
    base: usize,
    levels: Vec<Vec<Complex64>>,
    jump_bound: f64,
    seed: Option<u64>,
}

impl PAdicMartingale {
    /// Builds the martingale whose deepest level is `leaves` by repeated averaging.
    pub fn from_leaves(base: usize, leaves: Vec<Complex64>) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidParameter(format!("base {base} < 2")));
        }
        let mut depth = 0;
        let mut n = 1usize;
        while n < leaves.len() {
            n *= base;
            depth += 1;
        }
        if n != leaves.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} leaves is not a power of {base}",
                leaves.len()
            )));
        }
        let mut levels = vec![leaves];
        for _ in 0..depth {
            let below = levels.last().expect("nonempty");
            let inv = 1.0 / base as f64;
            let above: Vec<Complex64> = below
                .chunks_exact(base)
                .map(|c| c.iter().sum::<Complex64>() * inv)
                .collect();
            levels.push(above);
        }
        levels.reverse();
        let mut m = Self { base, levels, jump_bound: 0.0, seed: None };
        m.jump_bound = m.max_jump();
        Ok(m)
    }

    /// Validates the averaging property before accepting the levels.
    pub fn from_levels(base: usize, levels: Vec<Vec<Complex64>>, jump_bound: f64) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidParameter(format!("base {base} < 2")));
        }
        if levels.is_empty() {
            return Err(Error::ShapeMismatch("no levels".into()));
        }
        for (k, lv) in levels.iter().enumerate() {
            if lv.len() != checked_pow(base, k)? {
                return Err(Error::ShapeMismatch(format!(
                    "level {k} has {} values, expected {base}^{k}",
                    lv.len()
                )));
            }
        }
        let m = Self { base, levels, jump_bound, seed: None };
        m.check_averaging(AVERAGING_TOLERANCE)?;
        let actual = m.max_jump();
        if actual > jump_bound * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::InvalidParameter(format!(
                "declared jump bound {jump_bound} below observed {actual}"
            )));
        }
        Ok(m)
    }

    pub(crate) fn from_levels_unchecked(base: usize, levels: Vec<Vec<Complex64>>, jump_bound: f64, seed: Option<u64>) -> Self {
        Self { base, levels, jump_bound, seed }
    }

    pub fn constant(base: usize, depth: usize, value: Complex64) -> Result<Self> {
        let leaves = vec![value; checked_pow(base, depth)?];
        Self::from_leaves(base, leaves)
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn jump_bound(&self) -> f64 {
        self.jump_bound
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    /// Raises the declared jump bound; it can never drop below the observed maximum.
    pub fn with_jump_bound(mut self, bound: f64) -> Self {
        self.jump_bound = bound.max(self.max_jump());
        self
    }

    pub fn level(&self, k: usize) -> &[Complex64] {
        &self.levels[k]
    }

    pub fn levels(&self) -> &[Vec<Complex64>] {
        &self.levels
    }

    pub fn leaves(&self) -> &[Complex64] {
        self.levels.last().expect("at least the root level")
    }

    pub fn root(&self) -> Complex64 {
        self.levels[0][0]
    }

    pub fn value(&self, index: PAdicIndex) -> Result<Complex64> {
        self.check_index(index)?;
        Ok(self.levels[index.level][index.offset])
    }

    fn check_index(&self, index: PAdicIndex) -> Result<()> {
        if index.base != self.base {
            return Err(Error::ShapeMismatch(format!(
                "index base {} vs martingale base {}",
                index.base, self.base
            )));
        }
        if index.level > self.depth() {
            return Err(Error::LevelOutOfRange { level: index.level, depth: self.depth() });
        }
        Ok(())
    }

    pub fn is_real(&self) -> bool {
        self.levels.iter().flatten().all(|z| z.im == 0.0)
    }

    /// Largest `|X_I - X_parent(I)|` over the tree.
    pub fn max_jump(&self) -> f64 {
        let mut m: f64 = 0.0;
        for k in 1..self.levels.len() {
            let (up, down) = (&self.levels[k - 1], &self.levels[k]);
            for (i, v) in down.iter().enumerate() {
                m = m.max((v - up[i / self.base]).norm());
            }
        }
        m
    }

    /// Largest relative violation of the averaging property; errors above `tol`.
    pub fn check_averaging(&self, tol: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let inv = 1.0 / self.base as f64;
        for k in 0..self.depth() {
            let scale = self.levels[k + 1].iter().map(|z| z.norm()).fold(1.0, f64::max);
            for (i, parent) in self.levels[k].iter().enumerate() {
                let kids = &self.levels[k + 1][i * self.base..(i + 1) * self.base];
                let mean = kids.iter().sum::<Complex64>() * inv;
                let defect = (mean - parent).norm() / scale;
                if defect > tol {
                    return Err(Error::NotAMartingale { level: k, index: i, defect });
                }
                worst = worst.max(defect);
            }
        }
        Ok(worst)
    }

    /// `X_n(x)`, the value on the level-`n` interval containing `x`.
    pub fn value_at(&self, x: f64, n: usize) -> Result<Complex64> {
        if n > self.depth() {
            return Err(Error::LevelOutOfRange { level: n, depth: self.depth() });
        }
        let idx = PAdicIndex::containing(self.base, n, x)?;
        Ok(self.levels[n][idx.offset])
    }

    /// The jump `Δ_j(x) = X_{I_j(x)} - X_{I_{j-1}(x)}`.
    pub fn jump(&self, x: f64, j: usize) -> Result<Complex64> {
        if j == 0 || j > self.depth() {
            return Err(Error::LevelOutOfRange { level: j, depth: self.depth() });
        }
        let idx = PAdicIndex::containing(self.base, j, x)?;
        Ok(self.levels[j][idx.offset] - self.levels[j - 1][idx.offset / self.base])
    }

    /// `⟨X⟩_n(x) = Σ_{j ≤ n} |Δ_j(x)|²`.
    pub fn square_function(&self, x: f64, n: usize) -> Result<f64> {
        if n > self.depth() {
            return Err(Error::LevelOutOfRange { level: n, depth: self.depth() });
        }
        let leaf = PAdicIndex::containing(self.base, n, x)?;
        let mut s = 0.0;
        let mut off = leaf.offset;
        for j in (1..=n).rev() {
            let d = self.levels[j][off] - self.levels[j - 1][off / self.base];
            s += d.norm_sqr();
            off /= self.base;
        }
        Ok(s)
    }

    /// `(1/p) Σ_i |X_{I_i} - X_I|²` over the children of `I`.
    pub fn local_variance(&self, index: PAdicIndex) -> Result<f64> {
        self.local_variance_n(index, 1)
    }

    /// `(1/n) p^{-n} Σ |X_{I_i} - X_I|²` over the descendants `n` levels below `I`.
    pub fn local_variance_n(&self, index: PAdicIndex, n: usize) -> Result<f64> {
        Ok(self.local_covariance_n(self, index, n)?.re)
    }

    /// Polarized local variance `(1/n) p^{-n} Σ (X_{I_i} - X_I) conj(Y_{I_i} - Y_I)`.
    pub fn local_covariance_n(&self, other: &Self, index: PAdicIndex, n: usize) -> Result<Complex64> {
        if self.base != other.base || self.depth() != other.depth() {
            return Err(Error::ShapeMismatch(format!(
                "base/depth ({}, {}) vs ({}, {})",
                self.base,
                self.depth(),
                other.base,
                other.depth()
            )));
        }
        self.check_index(index)?;
        if n == 0 || index.level + n > self.depth() {
            return Err(Error::InsufficientDepth {
                level: index.level,
                generations: n,
                depth: self.depth(),
            });
        }
        let x0 = self.levels[index.level][index.offset];
        let y0 = other.levels[index.level][index.offset];
        let range = index.descendant_range(n);
        let count = range.len() as f64;
        let lx = &self.levels[index.level + n][range.clone()];
        let ly = &other.levels[index.level + n][range];
        let s: Complex64 = lx.iter().zip(ly).map(|(x, y)| (x - x0) * (y - y0).conj()).sum();
        Ok(s / (count * n as f64))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let levels: Vec<Vec<Complex64>> = self
            .levels
            .iter()
            .map(|lv| lv.iter().map(|z| f(*z)).collect())
            .collect();
        let mut m = Self { base: self.base, levels, jump_bound: 0.0, seed: self.seed };
        m.jump_bound = m.max_jump();
        m
    }

    pub fn real_part(&self) -> Self {
        self.map(|z| Complex64::new(z.re, 0.0))
    }

    pub fn imag_part(&self) -> Self {
        self.map(|z| Complex64::new(z.im, 0.0))
    }

    /// Multiplies every value by `c`; linear maps preserve the averaging property.
    pub fn scaled(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    /// Keeps the first `depth + 1` levels.
    pub fn truncated(&self, depth: usize) -> Result<Self> {
        if depth > self.depth() {
            return Err(Error::LevelOutOfRange { level: depth, depth: self.depth() });
        }
        let levels = self.levels[..=depth].to_vec();
        let mut m = Self { base: self.base, levels, jump_bound: 0.0, seed: self.seed };
        m.jump_bound = m.max_jump();
        Ok(m)
    }

    /// Views the martingale as a `p^n`-adic martingale with `depth / n` levels.
    pub fn reblock(&self, n: usize) -> Result<Self> {
        if n == 0 || !self.depth().is_multiple_of(n) {
            return Err(Error::InvalidParameter(format!(
                "block size {n} does not divide depth {}",
                self.depth()
            )));
        }
        let base = checked_pow(self.base, n)?;
        let levels: Vec<Vec<Complex64>> = self.levels.iter().step_by(n).cloned().collect();
        // A reblocked jump is a sum of n original jumps.
        let declared = n as f64 * self.jump_bound;
        let m = Self { base, levels, jump_bound: 0.0, seed: self.seed };
        Ok(m.with_jump_bound(declared))
    }

    /// All internal nodes as indices, level by level.
    pub fn internal_nodes(&self) -> impl Iterator<Item = PAdicIndex> + '_ {
        (0..self.depth()).flat_map(move |k| {
            (0..self.levels[k].len()).map(move |j| PAdicIndex { base: self.base, level: k, offset: j })
        })
    }

    /// Local variances of every node at `level`, in order.
    pub fn local_variances_at(&self, level: usize) -> Result<Vec<f64>> {
        if level >= self.depth() {
            return Err(Error::InsufficientDepth { level, generations: 1, depth: self.depth() });
        }
        let inv = 1.0 / self.base as f64;
        Ok(self.levels[level]
            .iter()
            .enumerate()
            .map(|(i, x)| {
                self.levels[level + 1][i * self.base..(i + 1) * self.base]
                    .iter()
                    .map(|c| (c - x).norm_sqr())
                    .sum::<f64>()
                    * inv
            })
            .collect())
    }
}

impl std::ops::Add for &PAdicMartingale {
    type Output = PAdicMartingale;
    fn add(self, rhs: &PAdicMartingale) -> PAdicMartingale {
        assert_eq!(self.base, rhs.base, "base mismatch");
        assert_eq!(self.depth(), rhs.depth(), "depth mismatch");
        let levels = self
            .levels
            .iter()
            .zip(&rhs.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        let mut m = PAdicMartingale { base: self.base, levels, jump_bound: 0.0, seed: None };
        m.jump_bound = m.max_jump();
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn three_minus_three() -> PAdicMartingale {
        PAdicMartingale::from_leaves(2, vec![c(3.0), c(-3.0)]).unwrap()
    }

    // Independent oracle: walk from the root choosing children by digits of x.
    fn tree_walk_value(m: &PAdicMartingale, x: f64, level: usize) -> Complex64 {
        let p = m.base();
        let mut off = 0usize;
        let mut y = x;
        for k in 1..=level {
            let digit = ((y * p as f64).floor() as usize).min(p - 1);
            y = y * p as f64 - digit as f64;
            off = off * p + digit;
            let _ = k;
        }
        m.level(level)[off]
    }

    #[test]
    fn constant_martingale_has_no_jumps() {
        let m = PAdicMartingale::constant(3, 4, Complex64::new(1.0, 2.0)).unwrap();
        for x in [0.0, 0.3, 0.99, 1.0] {
            for j in 1..=4 {
                assert_eq!(m.jump(x, j).unwrap(), Complex64::new(0.0, 0.0));
            }
            assert_eq!(m.square_function(x, 4).unwrap(), 0.0);
        }
        assert_eq!(m.local_variance(PAdicIndex::root(3)).unwrap(), 0.0);
        assert_eq!(m.local_variance_n(PAdicIndex::root(3), 3).unwrap(), 0.0);
    }

    #[test]
    fn jump_from_direct_values() {
        let m = three_minus_three();
        assert_eq!(m.root(), c(0.0));
        assert_eq!(m.jump(0.1, 1).unwrap(), c(3.0));
        assert_eq!(m.jump(0.9, 1).unwrap(), c(-3.0));
        assert_eq!(m.local_variance(PAdicIndex::root(2)).unwrap(), 9.0);
    }

    #[test]
    fn jump_level_out_of_range() {
        let m = three_minus_three();
        assert!(matches!(m.jump(0.2, 0), Err(Error::LevelOutOfRange { .. })));
        assert!(matches!(m.jump(0.2, 2), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn local_variance_of_leaf_is_an_error() {
        let m = three_minus_three();
        let leaf = PAdicIndex::new(2, 1, 0).unwrap();
        assert!(matches!(m.local_variance(leaf), Err(Error::InsufficientDepth { .. })));
    }

    #[test]
    fn unimodular_jumps_give_square_function_n() {
        let m = random_martingale(11, 2, 10, &JumpLaw::Rademacher).unwrap();
        for x in [0.0, 0.123, 0.5, 0.77, 1.0] {
            assert!((m.square_function(x, 10).unwrap() - 10.0).abs() < 1e-12);
        }
        for idx in m.internal_nodes() {
            assert!((m.local_variance(idx).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jump_matches_tree_walk() {
        let m = random_martingale(5, 3, 7, &JumpLaw::UniformComplex { radius: 1.0 }).unwrap();
        for i in 0..200 {
            let x = (i as f64 + 0.5) / 200.0;
            for j in 1..=7 {
                let want = tree_walk_value(&m, x, j) - tree_walk_value(&m, x, j - 1);
                assert_eq!(m.jump(x, j).unwrap(), want);
            }
        }
    }

    #[test]
    fn square_function_matches_sum_of_jumps() {
        let m = random_martingale(9, 2, 12, &JumpLaw::UniformComplex { radius: 2.0 }).unwrap();
        for i in 0..100 {
            let x = (i as f64 * 0.618_033_988_7).fract();
            let direct: f64 = (1..=12).map(|j| m.jump(x, j).unwrap().norm_sqr()).sum();
            assert!((m.square_function(x, 12).unwrap() - direct).abs() < 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn local_variance_n_brute_force() {
        // Unit complex jumps in orthogonal directions: grandchildren offsets are
        // sums of n unit vectors; orthogonality gives mean squared norm n.
        let m = random_martingale(3, 4, 6, &JumpLaw::UnitRoots).unwrap();
        let root = PAdicIndex::root(4);
        let brute: f64 = m.level(6).iter().map(|z| (z - m.root()).norm_sqr()).sum::<f64>()
            / (4f64.powi(6) * 6.0);
        let got = m.local_variance_n(root, 6).unwrap();
        assert!((got - brute).abs() < 1e-12);
        assert!((got - 1.0).abs() < 1e-12);
        assert_eq!(m.local_variance_n(root, 1).unwrap(), m.local_variance(root).unwrap());
    }

    #[test]
    fn covariance_polarization() {
        let m1 = random_martingale(1, 2, 8, &JumpLaw::UniformComplex { radius: 1.0 }).unwrap();
        let zero = PAdicMartingale::constant(2, 8, Complex64::new(0.0, 0.0)).unwrap();
        let idx = PAdicIndex::new(2, 2, 1).unwrap();
        let v = m1.local_variance_n(idx, 5).unwrap();
        let cself = m1.local_covariance_n(&m1, idx, 5).unwrap();
        assert!((cself.re - v).abs() < 1e-14 && cself.im.abs() < 1e-14);
        assert_eq!(m1.local_covariance_n(&zero, idx, 5).unwrap(), Complex64::new(0.0, 0.0));
        let scaled = m1.scaled(c(-2.5));
        // direct summation oracle
        let x0 = m1.level(2)[1];
        let range = idx.descendant_range(5);
        let direct: f64 = m1.level(7)[range.clone()]
            .iter()
            .map(|x| (x - x0).norm_sqr() * -2.5)
            .sum::<f64>()
            / (range.len() as f64 * 5.0);
        let got = m1.local_covariance_n(&scaled, idx, 5).unwrap();
        assert!((got.re - direct).abs() < 1e-12 && got.im.abs() < 1e-12);
        let other = random_martingale(1, 2, 7, &JumpLaw::Rademacher).unwrap();
        assert!(matches!(m1.local_covariance_n(&other, idx, 5), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn reblock_preserves_leaves_and_rescales_variance() {
        let m = random_martingale(2, 2, 4, &JumpLaw::UniformReal { scale: 1.0 }).unwrap();
        assert_eq!(m.reblock(1).unwrap(), m);
        let r = m.reblock(2).unwrap();
        assert_eq!(r.base(), 4);
        assert_eq!(r.depth(), 2);
        assert_eq!(r.leaves(), m.leaves());
        r.check_averaging(1e-14).unwrap();
        for j in 0..4 {
            let i2 = PAdicIndex::new(2, 2, j).unwrap();
            let i4 = PAdicIndex::new(4, 1, j).unwrap();
            let lhs = m.local_variance_n(i2, 2).unwrap();
            let rhs = r.local_variance(i4).unwrap() / 2.0;
            assert!((lhs - rhs).abs() < 1e-14);
        }
        assert!(m.reblock(3).is_err());
    }

    #[test]
    fn from_levels_rejects_broken_averaging() {
        let levels = vec![vec![c(0.0)], vec![c(1.0), c(0.5)]];
        assert!(matches!(
            PAdicMartingale::from_levels(2, levels, 1.0),
            Err(Error::NotAMartingale { .. })
        ));
    }

    #[test]
    fn depth_zero_is_a_legal_constant() {
        let m = PAdicMartingale::from_leaves(2, vec![c(4.0)]).unwrap();
        assert_eq!(m.depth(), 0);
        assert_eq!(m.max_jump(), 0.0);
    }

    proptest! {
        #[test]
        fn averaging_holds_for_generated(seed in 0u64..1000, p in 2usize..5, depth in 0usize..6) {
            let m = random_martingale(seed, p, depth, &JumpLaw::UniformComplex { radius: 1.0 }).unwrap();
            prop_assert!(m.check_averaging(1e-13).is_ok());
            prop_assert!(m.max_jump() <= m.jump_bound() + 1e-12);
        }

        #[test]
        fn containing_interval_contains(x in 0.0f64..=1.0, p in 2usize..6, k in 0usize..8) {
            let idx = PAdicIndex::containing(p, k, x).unwrap();
            let (a, b) = idx.endpoints();
            prop_assert!(a <= x + 1e-15 && x <= b + 1e-15);
        }
    }
}
