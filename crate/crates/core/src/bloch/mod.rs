//! Bloch-function evaluators on the half-plane, the disk and the exterior disk,
//! and the radial estimators of the asymptotic variance, LIL constant and
//! integral means spectrum.

mod families;
mod radial;
mod transport;

pub use families::{Constant, ExpTransplant, Identity, Lacunary, PowerSeries};
pub use radial::{
    beta_integral_means, bloch_certificate, circle_values, lil_estimate, radius, rescaled_boundary_samples,
    sigma2_area, sigma2_radial, sigma2_radial_ladder, theta_count, BlochCertificate, CircleAverage, ThetaSampling,
};
pub use transport::{cayley_transport, Direction, Transported};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    UpperHalfPlane,
    Disk,
    ExteriorDisk,
}

impl Domain {
    pub fn contains(self, z: Complex64) -> bool {
        match self {
            Domain::UpperHalfPlane => z.im > 0.0,
            Domain::Disk => z.norm_sqr() < 1.0,
            Domain::ExteriorDisk => z.norm_sqr() > 1.0,
        }
    }

    /// `2 / ρ(z)` for the hyperbolic density of the domain, so that the Bloch
    /// quantity is `|b'(z)| · scale(z)`: `2y`, `1 - |z|²`, `|z|² - 1`.
    pub fn scale(self, z: Complex64) -> f64 {
        match self {
            Domain::UpperHalfPlane => 2.0 * z.im,
            Domain::Disk => 1.0 - z.norm_sqr(),
            Domain::ExteriorDisk => z.norm_sqr() - 1.0,
        }
    }

    /// Bloch seminorm density as declared by [`BlochEvaluator::norm_bound`]:
    /// `(1/2) y |b'|` on ℍ, `(1 - |z|²)|b'|` on 𝔻, `(|z|² - 1)|b'|` on 𝔻*.
    pub fn bloch_density(self, z: Complex64, derivative: Complex64) -> f64 {
        match self {
            Domain::UpperHalfPlane => 0.5 * z.im * derivative.norm(),
            _ => self.scale(z) * derivative.norm(),
        }
    }

    pub fn require(self, expected: Domain) -> Result<()> {
        if self == expected {
            Ok(())
        } else {
            Err(Error::DomainMismatch { expected: expected.to_string(), got: self.to_string() })
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::UpperHalfPlane => "upper-half-plane",
            Domain::Disk => "disk",
            Domain::ExteriorDisk => "exterior-disk",
        })
    }
}

/// A holomorphic function with a declared Bloch bound on its domain.
///
/// On ℍ the bound refers to `sup (1/2) y |b'(z)|` over the strip `0 < y ≤ 1`
/// (all functions shipped here are 1-periodic or only used there); on 𝔻 and
/// 𝔻* to `sup (1 - |z|²)|b'|` and `sup (|z|² - 1)|b'|`.
pub trait BlochEvaluator: Send + Sync + fmt::Debug {
    fn domain(&self) -> Domain;
    fn value(&self, z: Complex64) -> Complex64;
    fn derivative(&self, z: Complex64) -> Complex64;
    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        (self.value(z), self.derivative(z))
    }
    fn norm_bound(&self) -> f64;
    fn label(&self) -> String;

    /// Values `b(r e^{iθ_k})` for `θ_k = 2π k / n`, `k ∈ start..start + out.len()`.
    /// Disk families with cheaper structured evaluation override this.
    fn circle_chunk(&self, r: f64, n: usize, start: usize, out: &mut [Complex64]) {
        for (i, v) in out.iter_mut().enumerate() {
            let theta = std::f64::consts::TAU * (start + i) as f64 / n as f64;
            *v = self.value(Complex64::from_polar(r, theta));
        }
    }

    /// All `n` values on the uniform grid at once, for families with a fast
    /// transform; `None` falls back to [`BlochEvaluator::circle_chunk`].
    fn circle_block(&self, _r: f64, _n: usize) -> Option<Vec<Complex64>> {
        None
    }

    /// `(m, c_m)` with `b = Σ c_m w^m`, where `w = z` on 𝔻 and `w = e^{2πiz}`
    /// on ℍ, for families that are such series.
    fn fourier_terms(&self) -> Option<Vec<(u64, Complex64)>> {
        None
    }
}

pub type SharedEvaluator = Arc<dyn BlochEvaluator>;

impl<T: BlochEvaluator + ?Sized> BlochEvaluator for Arc<T> {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn value(&self, z: Complex64) -> Complex64 {
        (**self).value(z)
    }
    fn derivative(&self, z: Complex64) -> Complex64 {
        (**self).derivative(z)
    }
    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        (**self).value_and_derivative(z)
    }
    fn norm_bound(&self) -> f64 {
        (**self).norm_bound()
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn circle_chunk(&self, r: f64, n: usize, start: usize, out: &mut [Complex64]) {
        (**self).circle_chunk(r, n, start, out)
    }
    fn circle_block(&self, r: f64, n: usize) -> Option<Vec<Complex64>> {
        (**self).circle_block(r, n)
    }
    fn fourier_terms(&self) -> Option<Vec<(u64, Complex64)>> {
        (**self).fourier_terms()
    }
}

/// Largest relative mismatch between `b'` and a central difference of `b`.
pub fn derivative_defect(b: &dyn BlochEvaluator, points: &[Complex64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &z in points {
        let scale = match b.domain() {
            Domain::UpperHalfPlane => z.im,
            Domain::Disk => 1.0 - z.norm(),
            Domain::ExteriorDisk => z.norm() - 1.0,
        };
        let h = 1e-5 * scale.clamp(1e-6, 1.0);
        let fd = (b.value(z + h) - b.value(z - h)) / (2.0 * h);
        let d = b.derivative(z);
        let denom = d.norm().max(fd.norm()).max(1e-3);
        worst = worst.max((fd - d).norm() / denom);
    }
    worst
}
