use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_magnitudes, PeriodizedKernel};
use crate::bloch::PowerSeries;
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// A rectangle `[x0, x1] × [t0, t1]` in the lower half-plane.
pub type StripCell = (f64, f64, f64, f64);

/// Tile Fourier coefficients `T(s)` are dropped once `e^{-2πs/p}` falls
/// below `e^{-SPECTRAL_CUTOFF}`.
pub const SPECTRAL_CUTOFF: f64 = 40.0;

/// A coefficient on the strip `{-1 < Im ζ < 0}`, periodic with respect to the
/// `p`-adic grid, `p = 2^order`.
///
/// The tile is the reflected `order`-box `[0,1] × [-1, -1/p]`, made of the
/// reflected dyadic 1-boxes `J × [-|J|, -|J|/2]` with `|J| = 2^{-j}`,
/// `j < order`; each 1-box is split into `2^depth × 2^depth` cells. Cells are
/// indexed by `(j, a, cx, cy)` with `cy` fastest. On the reflected box of a
/// `p`-adic interval `I`, `μ = tile ∘ L` for the affine map `L` taking `I`
/// to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripCoefficient {
    order: u32,
    depth: u32,
    tile: Vec<Complex64>,
}

pub fn make_periodic(order: u32, depth: u32, tile: Vec<Complex64>) -> Result<StripCoefficient> {
    if order == 0 || order > 16 {
        return Err(Error::InvalidParameter(format!("tile order must be in 1..=16, got {order}")));
    }
    if depth > 8 {
        return Err(Error::InvalidParameter(format!("cell depth must be <= 8, got {depth}")));
    }
    let need = StripCoefficient::cell_count(order, depth);
    if tile.len() != need {
        return Err(Error::ShapeMismatch(format!("tile has {} cells, expected {need}", tile.len())));
    }
    check_magnitudes(&tile)?;
    Ok(StripCoefficient { order, depth, tile })
}

impl StripCoefficient {
    pub fn cell_count(order: u32, depth: u32) -> usize {
        ((1usize << order) - 1) << (2 * depth)
    }

    pub fn constant(order: u32, depth: u32, c: Complex64) -> Result<Self> {
        make_periodic(order, depth, vec![c; Self::cell_count(order, depth)])
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn cell_depth(&self) -> u32 {
        self.depth
    }

    pub fn base(&self) -> u64 {
        1u64 << self.order
    }

    pub fn tile(&self) -> &[Complex64] {
        &self.tile
    }

    pub fn len(&self) -> usize {
        self.tile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tile.is_empty()
    }

    /// Replaces one tile value; periodicity is kept because every copy of the
    /// cell reads from the tile.
    pub fn set(&mut self, index: usize, value: Complex64) -> Result<()> {
        check_magnitudes(&[value])?;
        self.tile[index] = value;
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        make_periodic(self.order, self.depth, self.tile.iter().map(|v| v * s).collect())
    }

    /// Tile cell in unit coordinates.
    pub fn cell(&self, index: usize) -> StripCell {
        let per = 1usize << (2 * self.depth);
        let side = 1usize << self.depth;
        let mut j = 0;
        let mut first = 0;
        while first + (per << j) <= index {
            first += per << j;
            j += 1;
        }
        let k = index - first;
        let (a, cx, cy) = (k / per, (k % per) / side, k % side);
        let w = (-(j as f64)).exp2();
        let cw = w / side as f64;
        let ch = 0.5 * cw;
        let x0 = a as f64 * w + cx as f64 * cw;
        let t0 = -w + cy as f64 * ch;
        (x0, x0 + cw, t0, t0 + ch)
    }

    pub fn cells(&self) -> Vec<StripCell> {
        (0..self.len()).map(|i| self.cell(i)).collect()
    }

    /// Tile index of the unit-coordinate point `(u, s)`, `u ∈ [0,1)`, `s ∈ [-1, -1/p]`.
    fn locate(&self, u: f64, s: f64) -> usize {
        let side = 1usize << self.depth;
        let mut w = 1.0;
        let mut j = 0usize;
        while s > -0.5 * w && j + 1 < self.order as usize {
            w *= 0.5;
            j += 1;
        }
        let v = u / w;
        let a = (v.floor() as usize).min((1 << j) - 1);
        let cx = (((v - a as f64) * side as f64).floor() as usize).min(side - 1);
        let cy = ((((s + w) / (0.5 * w)) * side as f64).floor().max(0.0) as usize).min(side - 1);
        let per = side * side;
        (per << j) - per + a * per + cx * side + cy
    }

    /// `μ(ζ)`; zero off the strip.
    pub fn value_at(&self, zeta: Complex64) -> Complex64 {
        let mut s = zeta.im;
        if !(s > -1.0 && s < 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        let p = self.base() as f64;
        let mut u = zeta.re - zeta.re.floor();
        while s > -1.0 / p {
            s *= p;
            u *= p;
            u -= u.floor();
        }
        self.tile[self.locate(u, s)]
    }

    /// The tile sampled back at its own cell centres.
    pub fn retile(&self) -> Result<Self> {
        let tile = (0..self.len())
            .map(|i| {
                let (x0, x1, t0, t1) = self.cell(i);
                self.value_at(Complex64::new(0.5 * (x0 + x1), 0.5 * (t0 + t1)))
            })
            .collect();
        make_periodic(self.order, self.depth, tile)
    }

    /// `∫∫_cell e^{-2πisζ} dA(ζ)`.
    pub fn cell_fourier(cell: StripCell, s: f64) -> Complex64 {
        let (x0, x1, t0, t1) = cell;
        if s == 0.0 {
            return Complex64::new((x1 - x0) * (t1 - t0), 0.0);
        }
        let a = TAU * s;
        let ex = |x: f64| Complex64::from_polar(1.0, -a * x);
        let x = (ex(x1) - ex(x0)) / Complex64::new(0.0, -a);
        let y = ((a * t1).exp() - (a * t0).exp()) / a;
        x * y
    }

    /// Tile transform `T(s) = Σ_c μ_c ∫∫_c e^{-2πisζ} dA`.
    pub fn tile_fourier(&self, s: u64) -> Complex64 {
        self.tile
            .iter()
            .enumerate()
            .map(|(i, v)| v * Self::cell_fourier(self.cell(i), s as f64))
            .sum()
    }

    /// Largest `s` for which `T(s)` is kept.
    pub fn spectral_limit(&self) -> u64 {
        (SPECTRAL_CUTOFF * self.base() as f64 / TAU).ceil() as u64 + 10
    }

    /// `ĉ_m = ∫_{[0,1]×(-1,0)} μ e^{-2πimζ} dA = Σ_{p^l | m} p^{-l} T(m/p^l)`.
    pub fn strip_fourier(&self, m: u64, tile_fourier: &dyn Fn(u64) -> Complex64) -> Complex64 {
        let p = self.base();
        let limit = self.spectral_limit();
        let mut out = Complex64::new(0.0, 0.0);
        let mut s = m;
        let mut scale = 1.0;
        loop {
            if s < limit {
                out += scale * tile_fourier(s);
            }
            if !s.is_multiple_of(p) {
                break;
            }
            s /= p;
            scale /= p as f64;
        }
        out
    }
}

/// The disk function `F` with `S#μ(z) = F(e^{2πiz})` up to an additive
/// constant: `F(ξ) = Σ 4πm ĉ_m ξ^m` over `m = p^v o`, `o < spectral_limit`,
/// `v ≤ levels`.
pub fn s_sharp(mu: &StripCoefficient, levels: u32) -> Result<PowerSeries> {
    let p = mu.base();
    let limit = mu.spectral_limit();
    let top = (0..levels).try_fold(limit, |acc, _| acc.checked_mul(p));
    if top.is_none() {
        return Err(Error::InvalidParameter(format!("{levels} levels overflow the exponent range")));
    }
    let table: Vec<Complex64> = (0..limit).into_par_iter().map(|s| mu.tile_fourier(s)).collect();
    let t = |s: u64| table[s as usize];
    let rows = (0..=levels)
        .map(|v| {
            let pv = p.pow(v);
            (0..limit)
                .map(|o| {
                    if o % p == 0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let m = pv * o;
                    4.0 * PI * m as f64 * mu.strip_fourier(m, &t)
                })
                .collect()
        })
        .collect();
    Ok(PowerSeries::p_adic(p, rows).with_label(format!("s-sharp(order {}, depth {})", mu.order, mu.depth)))
}

/// `(S#μ)'(z)` from the Fourier series, `8π² i Σ m² ĉ_m e^{2πimz}`.
pub fn beurling_halfplane_spectral(mu: &StripCoefficient, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::OutsideDomain(format!("{z}")));
    }
    let p = mu.base() as f64;
    // e^{-2π m Im z} < e^{-45} for m ≥ p^levels
    let levels = ((45.0 / (TAU * z.im)).max(1.0).ln() / p.ln()).ceil().max(0.0) as u32;
    let f = s_sharp(mu, levels)?;
    let xi = (Complex64::i() * TAU * z).exp();
    use crate::bloch::BlochEvaluator;
    Ok(Complex64::i() * TAU * xi * f.derivative(xi))
}

/// `(S#μ)'(z) = -(2/π) ∫ μ(ζ)/(ζ - z)³ dA` by per-cell quadrature.
///
/// Level `l` of the strip consists of `p^l` copies of the tile scaled by
/// `p^{-l}`; with the periodized kernel `K` the copies collapse to
/// `p^l ∫_tile μ(u) K(u - p^l z) dA(u)`. Cells within two diameters of the
/// singularity are integrated exactly from the corner antiderivative of `K`,
/// the rest with a tensor Gauss–Legendre rule.
pub fn beurling_halfplane_derivative(mu: &StripCoefficient, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::OutsideDomain(format!("{z}")));
    }
    if z.im < (-30f64).exp2() {
        return Err(Error::OutsideDomain(format!("{z} is within 2^-30 of the support")));
    }
    let kernel = PeriodizedKernel;
    let gl = GaussLegendre::new(10);
    let cells = mu.cells();
    let p = mu.base() as f64;
    let mut total = Complex64::new(0.0, 0.0);
    let mut scale = 1.0;
    let mut zl = Complex64::new(z.re - z.re.floor(), z.im);
    loop {
        // |K(u - Z)| ≤ 8π³ e^{-2π Im Z} once Im Z ≥ 1; the tile has area < 1/2.
        if zl.im >= 1.0 && scale * 8.0 * PI.powi(3) * (-TAU * zl.im).exp() < 1e-18 {
            break;
        }
        let zc = zl;
        let parts: Vec<Complex64> = cells
            .par_iter()
            .zip(mu.tile.par_iter())
            .map(|(&cell, &v)| {
                if v == Complex64::new(0.0, 0.0) {
                    return v;
                }
                let (x0, x1, t0, t1) = cell;
                let diam = (x1 - x0).hypot(t1 - t0);
                let dx = periodic_gap(zc.re, x0, x1);
                let dist = dx.hypot(zc.im - t1);
                if dist < 2.0 * diam {
                    v * kernel.rectangle_integral(cell, zc)
                } else {
                    v * gl.integrate_rect(x0, x1, t0, t1, |x, t| kernel.value(Complex64::new(x, t) - zc))
                }
            })
            .collect();
        total += scale * parts.iter().sum::<Complex64>();
        scale *= p;
        zl = Complex64::new((zl.re * p) - (zl.re * p).floor(), zl.im * p);
    }
    Ok(-2.0 / PI * total)
}

/// Horizontal distance from `x` to `[x0, x1]` on the circle `ℝ/ℤ`.
fn periodic_gap(x: f64, x0: f64, x1: f64) -> f64 {
    [x - 1.0, x, x + 1.0]
        .iter()
        .map(|&y| if y < x0 { x0 - y } else if y > x1 { y - x1 } else { 0.0 })
        .fold(f64::INFINITY, f64::min)
}
