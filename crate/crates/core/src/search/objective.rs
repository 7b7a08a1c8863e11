use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beltrami::{s_sharp, StripCoefficient};
use crate::bloch::{ExpTransplant, PowerSeries};
use crate::bridge::{box_average, HyperbolicBox};
use crate::martingale::PAdicIndex;
use crate::{Error, Result};

/// Contribution of the mode `e^{2πimz}` to the box average:
/// `(1/(n log 2)) ∫_{2^{-n}}^1 4y (8π²m²)² e^{-4πmy} dy`.
pub fn mode_weight(m: u64, n: u32) -> f64 {
    let a = 2.0 * TAU * m as f64;
    let y0 = (-(n as f64)).exp2();
    let j = (y0 / a + 1.0 / (a * a)) * (-a * y0).exp() - (1.0 / a + 1.0 / (a * a)) * (-a).exp();
    let k = 4.0 * PI * TAU * (m as f64).powi(2);
    4.0 * j * k * k / (n as f64 * LN_2)
}

/// Number of modes kept at box order `n`, and a bound for the dropped tail
/// using `|ĉ_m| ≤ 1/(2πm)`.
pub fn mode_count(n: u32) -> (u64, f64) {
    let tail_term = |m: u64| mode_weight(m, n) / (TAU * m as f64).powi(2);
    let mut m = 1u64 << n;
    while tail_term(m) > 1e-20 {
        m += 1 << n.saturating_sub(4);
    }
    let mut tail = 0.0;
    let mut k = m + 1;
    loop {
        let t = tail_term(k);
        tail += t;
        if t < 1e-30 {
            break;
        }
        k += 1;
    }
    (m, tail)
}

/// A box average with its declared error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub value: f64,
    pub error: f64,
}

/// Box average of `|2y (S#μ)'|²` over `□^n_{[0,1]}` from the Fourier series:
/// `Σ_m w_m |ĉ_m|²`. Deeper `p`-adic boxes also see the coarser bands of
/// the strip, so their averages differ from this one.
pub fn objective(mu: &StripCoefficient, n: u32) -> Result<ObjectiveValue> {
    if n < 1 {
        return Err(Error::InvalidParameter("box order must be >= 1".into()));
    }
    let (count, tail) = mode_count(n);
    let limit = mu.spectral_limit();
    let table: Vec<Complex64> = (0..limit).into_par_iter().map(|s| mu.tile_fourier(s)).collect();
    let t = |s: u64| table[s as usize];
    let parts: Vec<f64> = (1..=count)
        .into_par_iter()
        .map(|m| mode_weight(m, n) * mu.strip_fourier(m, &t).norm_sqr())
        .collect();
    let value = parts.iter().sum();
    Ok(ObjectiveValue { value, error: tail + 1e-12 * f64::max(value, 1.0) })
}

/// `S#μ` on ℍ with enough `p`-adic levels to be exact down to height `y_min`.
pub fn s_sharp_halfplane(mu: &StripCoefficient, y_min: f64) -> Result<ExpTransplant<PowerSeries>> {
    if !(y_min > 0.0) {
        return Err(Error::InvalidParameter(format!("height {y_min} must be positive")));
    }
    let need = 45.0 / (TAU * y_min);
    let p = mu.base() as f64;
    let levels = (need.ln() / p.ln()).ceil().max(1.0) as u32;
    Ok(ExpTransplant::new(s_sharp(mu, levels)?))
}

/// The same box average by direct quadrature over the 1-boxes of
/// `□^n_I`, for each `p`-adic interval at `level` (offset ≤ `max_boxes`).
pub fn objective_by_quadrature(mu: &StripCoefficient, n: u32, level: u32, max_boxes: usize) -> Result<Vec<f64>> {
    let p = mu.base();
    let len = (p as f64).powi(-(level as i32));
    let b = s_sharp_halfplane(mu, len * (-(n as f64)).exp2())?;
    let dyadic_level = (level * mu.order()) as usize;
    let count = (p.pow(level) as usize).min(max_boxes);
    (0..count)
        .map(|j| {
            let i = PAdicIndex::new(2, dyadic_level, j)?;
            box_average(&b, &HyperbolicBox::new(i, n as usize)?, 16).map(|a| a.value)
        })
        .collect()
}

/// The objective as a quadratic form in the tile, `c = A v`, with the
/// columns of `A` cached for coordinate moves.
#[derive(Debug, Clone)]
pub struct BoxObjective {
    pub n: u32,
    pub weights: Vec<f64>,
    /// Column-major `modes × cells`.
    columns: Vec<Complex64>,
    modes: usize,
    pub tail: f64,
}

impl BoxObjective {
    pub fn new(order: u32, depth: u32, n: u32) -> Result<Self> {
        let shape = StripCoefficient::constant(order, depth, Complex64::new(0.0, 0.0))?;
        let (count, tail) = mode_count(n);
        let modes = count as usize;
        let bytes = modes * shape.len() * 16;
        if bytes > 1 << 31 {
            return Err(Error::InvalidParameter(format!("objective matrix would need {} MiB", bytes >> 20)));
        }
        let limit = shape.spectral_limit();
        let weights = (1..=count).map(|m| mode_weight(m, n)).collect();
        let columns: Vec<Complex64> = (0..shape.len())
            .into_par_iter()
            .flat_map_iter(|cell| {
                let geom = shape.cell(cell);
                let f = move |s: u64| {
                    if s < limit {
                        StripCoefficient::cell_fourier(geom, s as f64)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                };
                let shape = &shape;
                (1..=count).map(move |m| shape.strip_fourier(m, &f)).collect::<Vec<_>>()
            })
            .collect();
        Ok(Self { n, weights, columns, modes, tail })
    }

    pub fn column(&self, cell: usize) -> &[Complex64] {
        &self.columns[cell * self.modes..(cell + 1) * self.modes]
    }

    pub fn cells(&self) -> usize {
        self.columns.len() / self.modes
    }

    /// `c = A v`, accumulated cell by cell in index order.
    pub fn coefficients(&self, tile: &[Complex64]) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.modes];
        for (k, v) in tile.iter().enumerate() {
            if *v != Complex64::new(0.0, 0.0) {
                for (ci, a) in c.iter_mut().zip(self.column(k)) {
                    *ci += a * v;
                }
            }
        }
        c
    }

    pub fn value_of(&self, c: &[Complex64]) -> f64 {
        self.weights.iter().zip(c).map(|(w, x)| w * x.norm_sqr()).sum()
    }

    pub fn evaluate(&self, tile: &[Complex64]) -> f64 {
        self.value_of(&self.coefficients(tile))
    }

    /// For `c = c₀ + a_k v`: `(Σ w|a_k|², Σ w conj(c₀) a_k)`, so that the
    /// objective is `Σ w|c₀|² + |v|² d + 2 Re(v g)`.
    pub fn coordinate_terms(&self, c0: &[Complex64], cell: usize) -> (f64, Complex64) {
        let mut d = 0.0;
        let mut g = Complex64::new(0.0, 0.0);
        for ((w, a), x) in self.weights.iter().zip(self.column(cell)).zip(c0) {
            d += w * a.norm_sqr();
            g += w * x.conj() * a;
        }
        (d, g)
    }
}
