use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_magnitudes, StripCoefficient};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// `[r0, r1] × [θ0, θ1]` in polar coordinates.
pub type PolarCell = (f64, f64, f64, f64);

const BASE_RINGS: u32 = 7;
const BASE_SECTORS: usize = 256;
const FINE_ORDER: usize = 10;
const COARSE_ORDER: usize = 7;
/// Relative residual above which a disk quadrature is rejected.
pub const DISK_RESIDUAL_TOLERANCE: f64 = 1e-5;

/// Radial breaks `0, 1/2, 3/4, …, 1 - 2^{-rings}, 1`.
fn ring_edges(rings: u32) -> Vec<f64> {
    let mut e: Vec<f64> = (0..=rings).map(|k| 1.0 - (-(k as f64)).exp2()).collect();
    e.push(1.0);
    e
}

/// The polar partition every disk quadrature refines: 8 dyadic rings
/// towards the circle, 256 sectors each. It resolves `(1 - z w̄)^{-2}` for
/// `|z| ≤ 0.95`.
fn base_partition() -> Vec<PolarCell> {
    let e = ring_edges(BASE_RINGS);
    let mut out = Vec::with_capacity((e.len() - 1) * BASE_SECTORS);
    for r in e.windows(2) {
        for s in 0..BASE_SECTORS {
            let a = TAU * s as f64 / BASE_SECTORS as f64;
            out.push((r[0], r[1], a, a + TAU / BASE_SECTORS as f64));
        }
    }
    out
}

/// A bounded coefficient on the unit disk; `value` must be smooth on each
/// cell of [`DiskField::partition`] for the quadrature to converge.
pub trait DiskField: Sync {
    fn value(&self, w: Complex64) -> Complex64;
    fn partition(&self) -> Vec<PolarCell> {
        base_partition()
    }
}

/// Piecewise constant on polar cells: ring `k < rings` is
/// `1 - 2^{-k} ≤ |w| < 1 - 2^{-k-1}`, the last ring reaches the circle, and
/// ring `k` has `4 · 2^k` equal sectors. Values are stored ring by ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskCoefficient {
    rings: u32,
    values: Vec<Complex64>,
}

impl DiskCoefficient {
    pub fn cell_count(rings: u32) -> usize {
        4 * ((2usize << rings) - 1)
    }

    pub fn new(rings: u32, values: Vec<Complex64>) -> Result<Self> {
        if rings > 6 {
            return Err(Error::InvalidParameter(format!("disk grids have at most 6 rings, got {rings}")));
        }
        if values.len() != Self::cell_count(rings) {
            return Err(Error::ShapeMismatch(format!(
                "disk grid with {rings} rings has {} cells, got {}",
                Self::cell_count(rings),
                values.len()
            )));
        }
        check_magnitudes(&values)?;
        Ok(Self { rings, values })
    }

    pub fn constant(rings: u32, c: Complex64) -> Result<Self> {
        Self::new(rings, vec![c; Self::cell_count(rings)])
    }

    pub fn random_unimodular(rings: u32, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..Self::cell_count(rings)).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..TAU))).collect();
        Self::new(rings, v)
    }

    pub fn rings(&self) -> u32 {
        self.rings
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `w ↦ μ(e^{-iα} w)` for `α` a multiple of `π/2`.
    pub fn rotated_quarter(&self, quarters: usize) -> Self {
        let mut values = self.values.clone();
        let mut first = 0;
        for k in 0..=self.rings {
            let n = 4usize << k;
            let ring = &mut values[first..first + n];
            ring.rotate_right((quarters % 4) * (n / 4));
            first += n;
        }
        Self { rings: self.rings, values }
    }
}

impl DiskField for DiskCoefficient {
    fn value(&self, w: Complex64) -> Complex64 {
        let r = w.norm();
        if r >= 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut k = 0u32;
        while k < self.rings && r >= 1.0 - (-((k + 1) as f64)).exp2() {
            k += 1;
        }
        let n = 4usize << k;
        let theta = w.im.atan2(w.re).rem_euclid(TAU);
        let s = ((theta / TAU * n as f64).floor() as usize).min(n - 1);
        self.values[4 * ((1usize << k) - 1) + s]
    }
}

/// A coefficient given by a closure, smooth on the whole closed disk.
pub struct SmoothField<F>(pub F);

impl<F: Fn(Complex64) -> Complex64 + Sync> DiskField for SmoothField<F> {
    fn value(&self, w: Complex64) -> Complex64 {
        if w.norm() >= 1.0 {
            Complex64::new(0.0, 0.0)
        } else {
            (self.0)(w)
        }
    }
}

/// A strip coefficient carried to the disk by `z = e^{2πi ζ̄}` (the
/// exponential map followed by reflection in the circle).
///
/// With `w = ζ̄` the reflected coefficient is `conj μ(ζ)`, and pushing it
/// forward by `e^{2πiw}` multiplies by `φ'/conj φ' = -z/z̄`. The result is
/// invariant under `z ↦ z^p` on `|z| > e^{-2π/p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescendedCoefficient {
    strip: StripCoefficient,
}

pub fn descend_to_disk(mu: &StripCoefficient) -> DescendedCoefficient {
    DescendedCoefficient { strip: mu.clone() }
}

impl DescendedCoefficient {
    pub fn strip(&self) -> &StripCoefficient {
        &self.strip
    }

    pub fn eventually_invariant_degree(&self) -> u64 {
        self.strip.base()
    }

    /// The strip point `ζ` with `e^{2πi ζ̄} = z`, `Re ζ ∈ [0, 1)`.
    pub fn strip_point(z: Complex64) -> Complex64 {
        let x = (z.im.atan2(z.re) / TAU).rem_euclid(1.0);
        Complex64::new(x, z.norm().ln() / TAU)
    }

    pub fn disk_point(zeta: Complex64) -> Complex64 {
        (Complex64::i() * TAU * zeta.conj()).exp()
    }
}

impl DiskField for DescendedCoefficient {
    fn value(&self, z: Complex64) -> Complex64 {
        let r = z.norm();
        if r >= 1.0 || r <= (-TAU).exp() {
            return Complex64::new(0.0, 0.0);
        }
        let phase = -(z / z.conj());
        phase * self.strip.value_at(Self::strip_point(z)).conj()
    }
}

/// A quadrature value with the difference to a lower-order rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: Complex64,
    pub residual: f64,
}

/// `∫∫ f dA` over the cells, at two orders; cells are summed in order.
fn polar_integral(cells: &[PolarCell], f: &(dyn Fn(Complex64) -> Complex64 + Sync)) -> Result<Quadrature> {
    let rule = |order: usize| {
        let gl = GaussLegendre::new(order);
        let parts: Vec<Complex64> = cells
            .par_iter()
            .map(|&(r0, r1, a0, a1)| {
                gl.integrate_rect(r0, r1, a0, a1, |r, a| f(Complex64::from_polar(r, a)) * r)
            })
            .collect();
        parts.iter().sum::<Complex64>()
    };
    let value = rule(FINE_ORDER);
    let residual = (value - rule(COARSE_ORDER)).norm();
    if !value.is_finite() || residual > DISK_RESIDUAL_TOLERANCE * value.norm().max(1.0) {
        return Err(Error::Quadrature { residual });
    }
    Ok(Quadrature { value, residual })
}

fn inside(z: Complex64) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::OutsideDomain(format!("{z} is not in the unit disk")))
    }
}

/// `Pμ(z) = (1/π) ∫_𝔻 μ(w) / (1 - z w̄)² dA(w)`.
pub fn bergman_projection(mu: &dyn DiskField, z: Complex64) -> Result<Quadrature> {
    inside(z)?;
    let one = Complex64::new(1.0, 0.0);
    let q = polar_integral(&mu.partition(), &|w| {
        let d = one - z * w.conj();
        mu.value(w) / (d * d)
    })?;
    Ok(Quadrature { value: q.value / PI, residual: q.residual / PI })
}

/// `(Pμ)'(z) = (2/π) ∫_𝔻 w̄ μ(w) / (1 - z w̄)³ dA(w)`.
pub fn bergman_derivative(mu: &dyn DiskField, z: Complex64) -> Result<Quadrature> {
    inside(z)?;
    let one = Complex64::new(1.0, 0.0);
    let q = polar_integral(&mu.partition(), &|w| {
        let d = one - z * w.conj();
        w.conj() * mu.value(w) / (d * d * d)
    })?;
    Ok(Quadrature { value: 2.0 * q.value / PI, residual: 2.0 * q.residual / PI })
}

struct Conjugated<'a>(&'a dyn DiskField);

impl DiskField for Conjugated<'_> {
    fn value(&self, w: Complex64) -> Complex64 {
        self.0.value(w).conj()
    }
    fn partition(&self) -> Vec<PolarCell> {
        self.0.partition()
    }
}

/// `Sμ(z)` for `|z| > 1` through the Bergman projection,
/// `Sμ(z) = -(1/z²) conj(P[μ̄](1/z̄))`; for real `μ` this is
/// `-(1/z̄²) Pμ(1/z̄)`.
pub fn beurling_disk(mu: &dyn DiskField, z: Complex64) -> Result<Complex64> {
    if !(z.norm() > 1.0) {
        return Err(Error::OutsideDomain(format!("{z} is not in the exterior disk")));
    }
    let p = bergman_projection(&Conjugated(mu), z.conj().inv())?;
    Ok(-p.value.conj() / (z * z))
}

/// `Sμ(z) = -(1/π) ∫_𝔻 μ(w) / (z - w)² dA(w)` by direct quadrature.
pub fn beurling_disk_direct(mu: &dyn DiskField, z: Complex64) -> Result<Quadrature> {
    if !(z.norm() > 1.0) {
        return Err(Error::OutsideDomain(format!("{z} is not in the exterior disk")));
    }
    let q = polar_integral(&mu.partition(), &|w| {
        let d = z - w;
        mu.value(w) / (d * d)
    })?;
    Ok(Quadrature { value: -q.value / PI, residual: q.residual / PI })
}
