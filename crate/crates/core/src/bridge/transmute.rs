use num_complex::Complex64;

use super::BlochMartingale;
use crate::martingale::PAdicMartingale;
use crate::{Error, Result};

/// Slows a dyadic martingale down by a factor two in scale.
///
/// Every node of the output at an even level `2k` carries a node of the input.
/// A carried node `P` with children `c0, c1` spreads over its four grandchildren
/// as `[P, c0, c1, P]`; the odd level in between holds the pair averages
/// `(P + c0)/2` and `(c1 + P)/2`. Input leaves are repeated unchanged. The
/// result is a dyadic martingale of twice the depth whose adjacent nodes stay
/// within `4C` of each other when adjacent input nodes stay within `C`.
pub fn transmutate(m: &PAdicMartingale) -> Result<BlochMartingale> {
    if m.base() != 2 {
        return Err(Error::InvalidParameter(format!("transmutation needs p = 2, got {}", m.base())));
    }
    if !m.jump_bound().is_finite() {
        return Err(Error::InvalidParameter("transmutation needs a finite jump bound".into()));
    }
    let depth = m.depth();
    let value = |(k, j): (usize, usize)| m.level(k)[j];
    let mut labels = vec![(0usize, 0usize)];
    let mut levels: Vec<Vec<Complex64>> = vec![vec![value((0, 0))]];
    for _ in 0..depth {
        let mut odd = Vec::with_capacity(2 * labels.len());
        let mut next = Vec::with_capacity(4 * labels.len());
        for &(k, j) in &labels {
            let q = if k == depth { [(k, j); 4] } else { [(k, j), (k + 1, 2 * j), (k + 1, 2 * j + 1), (k, j)] };
            odd.push(0.5 * (value(q[0]) + value(q[1])));
            odd.push(0.5 * (value(q[2]) + value(q[3])));
            next.extend_from_slice(&q);
        }
        levels.push(odd);
        levels.push(next.iter().map(|&l| value(l)).collect());
        labels = next;
    }
    let out = PAdicMartingale::from_levels(2, levels, m.jump_bound())?;
    BlochMartingale::from_martingale(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::adjacency_constant;
    use crate::martingale::{random_martingale, JumpLaw, PAdicIndex};

    #[test]
    fn constants_are_fixed() {
        let m = PAdicMartingale::constant(2, 5, Complex64::new(1.5, -2.0)).unwrap();
        let t = transmutate(&m).unwrap();
        assert_eq!(t.depth(), 10);
        assert!(t.martingale.leaves().iter().all(|z| *z == Complex64::new(1.5, -2.0)));
        assert_eq!(t.adjacency, 0.0);
    }

    #[test]
    fn shape_and_root() {
        let m = random_martingale(9, 2, 6, &JumpLaw::UniformComplex { radius: 1.0 }).unwrap();
        let t = transmutate(&m).unwrap();
        assert_eq!(t.depth(), 12);
        assert_eq!(t.martingale.root(), m.root());
        assert!(t.martingale.check_averaging(1e-12).is_ok());
        // level 2 carries [root, c0, c1, root]
        let l2 = t.martingale.level(2);
        assert_eq!(l2[0], m.root());
        assert_eq!(l2[1], m.level(1)[0]);
        assert_eq!(l2[2], m.level(1)[1]);
        assert_eq!(l2[3], m.root());
    }

    #[test]
    fn adjacency_within_four_c() {
        for seed in 0..6 {
            for law in [JumpLaw::Rademacher, JumpLaw::UniformComplex { radius: 1.0 }] {
                let m = random_martingale(seed, 2, 8, &law).unwrap();
                let c = adjacency_constant(&m, 8).unwrap();
                let t = transmutate(&m).unwrap();
                assert!(t.adjacency <= 4.0 * c + 1e-12, "{} vs {}", t.adjacency, c);
            }
        }
    }

    #[test]
    fn root_variance_quarters() {
        // Each input jump d is spread over two output generations as four jumps
        // of size |d|/2 shared by two grandchildren pairs.
        let m = random_martingale(4, 2, 8, &JumpLaw::Rademacher).unwrap();
        let t = transmutate(&m).unwrap();
        let root = PAdicIndex::root(2);
        let v_in = m.local_variance_n(root, 1).unwrap();
        let v_out = t.martingale.local_variance_n(root, 2).unwrap();
        assert!((v_out - 0.25 * v_in).abs() < 1e-14, "{v_out} vs {v_in}");
    }

    #[test]
    fn rejects_non_dyadic() {
        let m = random_martingale(1, 3, 3, &JumpLaw::Rademacher).unwrap();
        assert!(transmutate(&m).is_err());
    }
}
