use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BlochEvaluator, Domain, SharedEvaluator};
use crate::{Error, Result};

/// Conformal identifications between the three model domains.
///
/// `ℍ → 𝔻` is the Cayley map `z = (w - i)/(w + i)`; `𝔻 ↔ 𝔻*` is `z ↦ 1/z`.
/// A transported evaluator is `b ∘ φ⁻¹` on the target domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    HalfPlaneToDisk,
    DiskToHalfPlane,
    DiskToExterior,
    ExteriorToDisk,
}

impl Direction {
    pub fn source(self) -> Domain {
        match self {
            Direction::HalfPlaneToDisk => Domain::UpperHalfPlane,
            Direction::DiskToHalfPlane | Direction::DiskToExterior => Domain::Disk,
            Direction::ExteriorToDisk => Domain::ExteriorDisk,
        }
    }

    pub fn target(self) -> Domain {
        match self {
            Direction::HalfPlaneToDisk | Direction::ExteriorToDisk => Domain::Disk,
            Direction::DiskToHalfPlane => Domain::UpperHalfPlane,
            Direction::DiskToExterior => Domain::ExteriorDisk,
        }
    }

    /// Maps a target-domain point back to the source domain, with the
    /// derivative of that inverse map.
    fn pull_back(self, z: Complex64) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        match self {
            // w = i (1 + z)/(1 - z), dw/dz = 2i/(1 - z)²
            Direction::HalfPlaneToDisk => (i * (one + z) / (one - z), 2.0 * i / ((one - z) * (one - z))),
            // z = (w - i)/(w + i), dz/dw = 2i/(w + i)²
            Direction::DiskToHalfPlane => ((z - i) / (z + i), 2.0 * i / ((z + i) * (z + i))),
            Direction::DiskToExterior | Direction::ExteriorToDisk => (one / z, -one / (z * z)),
        }
    }

    /// Factor by which the declared bound changes. The Bloch density is a
    /// conformal invariant; only the ℍ normalization `(1/2) y|b'|` differs from
    /// `(1 - |z|²)|b'| = 2y|b'|` by a factor 4.
    fn bound_factor(self) -> f64 {
        match self {
            Direction::HalfPlaneToDisk => 4.0,
            Direction::DiskToHalfPlane => 0.25,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transported {
    inner: SharedEvaluator,
    direction: Direction,
}

pub fn cayley_transport(b: SharedEvaluator, direction: Direction) -> Result<Transported> {
    if b.domain() != direction.source() {
        return Err(Error::DomainMismatch {
            expected: direction.source().to_string(),
            got: b.domain().to_string(),
        });
    }
    Ok(Transported { inner: b, direction })
}

impl BlochEvaluator for Transported {
    fn domain(&self) -> Domain {
        self.direction.target()
    }
    fn value(&self, z: Complex64) -> Complex64 {
        self.inner.value(self.direction.pull_back(z).0)
    }
    fn derivative(&self, z: Complex64) -> Complex64 {
        self.value_and_derivative(z).1
    }
    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let (w, dw) = self.direction.pull_back(z);
        let (v, d) = self.inner.value_and_derivative(w);
        (v, d * dw)
    }
    fn norm_bound(&self) -> f64 {
        self.inner.norm_bound() * self.direction.bound_factor()
    }
    fn label(&self) -> String {
        format!("{:?}({})", self.direction, self.inner.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{derivative_defect, Constant, ExpTransplant, Lacunary};
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_stays_constant() {
        let b: SharedEvaluator = Arc::new(Constant { value: c(2.0, -1.0), domain: Domain::Disk });
        let t = cayley_transport(b, Direction::DiskToHalfPlane).unwrap();
        assert_eq!(t.value(c(0.3, 2.0)), c(2.0, -1.0));
        assert_eq!(t.derivative(c(0.3, 2.0)), c(0.0, 0.0));
    }

    #[test]
    fn round_trip_is_identity() {
        let h: SharedEvaluator = Arc::new(ExpTransplant::new(Lacunary::standard(16)));
        let d: SharedEvaluator = Arc::new(cayley_transport(h.clone(), Direction::HalfPlaneToDisk).unwrap());
        let back = cayley_transport(d, Direction::DiskToHalfPlane).unwrap();
        for w in [c(0.1, 0.2), c(-0.4, 0.05), c(0.7, 1.5)] {
            assert!((back.value(w) - h.value(w)).norm() < 1e-12);
        }
        let lac: SharedEvaluator = Arc::new(Lacunary::standard(16));
        let ext: SharedEvaluator = Arc::new(cayley_transport(lac.clone(), Direction::DiskToExterior).unwrap());
        let again = cayley_transport(ext, Direction::ExteriorToDisk).unwrap();
        let z = c(0.3, 0.5);
        assert!((again.value(z) - lac.value(z)).norm() < 1e-12);
        assert!((again.derivative(z) - lac.derivative(z)).norm() < 1e-12);
    }

    #[test]
    fn chain_rule_against_finite_differences() {
        let h: SharedEvaluator = Arc::new(ExpTransplant::new(Lacunary::standard(12)));
        let d = cayley_transport(h, Direction::HalfPlaneToDisk).unwrap();
        assert!(derivative_defect(&d, &[c(0.1, 0.2), c(-0.3, -0.4), c(0.5, 0.1)]) < 1e-6);
        let lac: SharedEvaluator = Arc::new(Lacunary::standard(12));
        let e = cayley_transport(lac, Direction::DiskToExterior).unwrap();
        assert!(derivative_defect(&e, &[c(1.5, 0.2), c(-2.0, 3.0)]) < 1e-6);
    }

    #[test]
    fn wrong_source_domain_is_rejected() {
        let lac: SharedEvaluator = Arc::new(Lacunary::standard(4));
        assert!(matches!(
            cayley_transport(lac, Direction::HalfPlaneToDisk),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn bloch_density_is_invariant() {
        let h: SharedEvaluator = Arc::new(ExpTransplant::new(Lacunary::standard(16)));
        let d = cayley_transport(h.clone(), Direction::HalfPlaneToDisk).unwrap();
        for w in [c(0.2, 0.3), c(0.9, 0.01)] {
            let z = (w - Complex64::i()) / (w + Complex64::i());
            let lhs = Domain::Disk.bloch_density(z, d.derivative(z));
            let rhs = 4.0 * Domain::UpperHalfPlane.bloch_density(w, h.derivative(w));
            assert!((lhs - rhs).abs() < 1e-9 * rhs.max(1.0));
        }
    }
}
