//! Beltrami coefficients on the strip and the disk, the Bergman projection
//! and the Beurling transforms.

mod disk;
mod strip;

pub use disk::{
    bergman_derivative, bergman_projection, beurling_disk, beurling_disk_direct, descend_to_disk, DescendedCoefficient,
    DiskCoefficient, DiskField, PolarCell, Quadrature, SmoothField,
};
pub use strip::{
    beurling_halfplane_derivative, beurling_halfplane_spectral, make_periodic, s_sharp, StripCell,
    StripCoefficient, SPECTRAL_CUTOFF,
};

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `K(w) = Σ_{n∈ℤ} (w + n)^{-3} = π³ cos(πw) / sin³(πw)`.
///
/// Evaluated through `q = e^{-2πiw}` (for `Im w < 0`) as
/// `K = -4π³ i q(1 + q)/(1 - q)³`, which stays finite far from the real axis;
/// the upper half-plane follows from `K(w̄) = conj K(w)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PeriodizedKernel;

impl PeriodizedKernel {
    pub fn value(&self, w: Complex64) -> Complex64 {
        if w.im > 0.0 {
            return self.value(w.conj()).conj();
        }
        let q = (-2.0 * PI * Complex64::i() * w).exp();
        let one = Complex64::new(1.0, 0.0);
        let d = one - q;
        -4.0 * PI.powi(3) * Complex64::i() * q * (one + q) / (d * d * d)
    }

    /// `(π/2) cot(πw)`, whose second derivative is `K`.
    pub fn second_antiderivative(&self, w: Complex64) -> Complex64 {
        if w.im > 0.0 {
            return self.second_antiderivative(w.conj()).conj();
        }
        let q = (-2.0 * PI * Complex64::i() * w).exp();
        let one = Complex64::new(1.0, 0.0);
        0.5 * PI * Complex64::i() * (one + q) / (one - q)
    }

    /// `Σ_{|n| ≤ N} (w + n)^{-3}`, summed from the outside in.
    pub fn truncated(&self, w: Complex64, n: u32) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for k in (1..=n as i64).rev() {
            let a = w + k as f64;
            let b = w - k as f64;
            s += (a * a * a).inv() + (b * b * b).inv();
        }
        s + (w * w * w).inv()
    }

    /// `∫∫_{[x0,x1]×[t0,t1]} K(ζ - z) dA(ζ)` in closed form from the corners.
    pub fn rectangle_integral(&self, cell: StripCell, z: Complex64) -> Complex64 {
        let h = |x: f64, t: f64| self.second_antiderivative(Complex64::new(x, t) - z);
        let (x0, x1, t0, t1) = cell;
        -Complex64::i() * (h(x1, t1) - h(x1, t0) - h(x0, t1) + h(x0, t0))
    }
}

/// A coefficient on either model domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BeltramiCoefficient {
    Strip(StripCoefficient),
    Disk(DiskCoefficient),
}

/// On-disk form: a header and a row-major array of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub domain: String,
    /// Strip: tile order `n` of the `2^n`-adic grid; disk: ring count.
    pub order: u32,
    pub depth: u32,
    pub periodic: bool,
    pub eventually_invariant_degree: Option<u64>,
    pub values: Vec<[f64; 2]>,
}

impl BeltramiCoefficient {
    pub fn to_file(&self) -> CoefficientFile {
        let pairs = |v: &[Complex64]| v.iter().map(|z| [z.re, z.im]).collect();
        match self {
            BeltramiCoefficient::Strip(s) => CoefficientFile {
                domain: "strip".into(),
                order: s.order(),
                depth: s.cell_depth(),
                periodic: true,
                eventually_invariant_degree: Some(s.base()),
                values: pairs(s.tile()),
            },
            BeltramiCoefficient::Disk(d) => CoefficientFile {
                domain: "disk".into(),
                order: d.rings(),
                depth: d.rings(),
                periodic: false,
                eventually_invariant_degree: None,
                values: pairs(d.values()),
            },
        }
    }

    pub fn from_file(f: CoefficientFile) -> Result<Self> {
        let values: Vec<Complex64> = f.values.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        match f.domain.as_str() {
            "strip" => Ok(BeltramiCoefficient::Strip(make_periodic(f.order, f.depth, values)?)),
            "disk" => Ok(BeltramiCoefficient::Disk(DiskCoefficient::new(f.depth, values)?)),
            other => Err(Error::Corrupt(format!("unknown coefficient domain {other:?}"))),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_file())?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: CoefficientFile =
            serde_json::from_str(&text).map_err(|e| Error::Corrupt(format!("{}: {e}", path.display())))?;
        Self::from_file(file)
    }
}

pub(crate) fn check_magnitudes(values: &[Complex64]) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !(v.norm() <= 1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("cell {i} has |μ| = {} > 1", v.norm())));
        }
    }
    Ok(())
}
