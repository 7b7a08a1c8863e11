//! Dyadic boxes in the upper half-plane and the dyadic martingale of a Bloch
//! function.

mod construct;
mod transmute;

pub use construct::{
    adjacency_constant, complexification_defects, greens_discrepancy, martingale_from_bloch, BlochMartingale,
    BridgeOptions, BridgeReport, GreensRow,
};
pub use transmute::transmutate;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{BlochEvaluator, Domain};
use crate::martingale::PAdicIndex;
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// `χ = log p`, the per-generation hyperbolic length of a p-adic tree.
pub fn chi(p: usize) -> Result<f64> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("chi needs an integer p >= 2, got {p}")));
    }
    Ok((p as f64).ln())
}

/// The n-box `□_I^n = I × [2^{-n}|I|, |I|]`, the union of the 1-boxes
/// `J × [|J|/2, |J|]` over dyadic `J ⊂ I` with `|J| ≥ 2^{1-n}|I|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperbolicBox {
    pub interval: PAdicIndex,
    pub order: usize,
}

/// A rectangle `[x0, x1] × [y0, y1]`.
pub type Cell = (f64, f64, f64, f64);

impl HyperbolicBox {
    pub fn new(interval: PAdicIndex, order: usize) -> Result<Self> {
        if interval.base != 2 {
            return Err(Error::InvalidParameter("hyperbolic boxes are dyadic".into()));
        }
        if order == 0 {
            return Err(Error::InvalidParameter("box order must be >= 1".into()));
        }
        Ok(Self { interval, order })
    }

    pub fn unit(order: usize) -> Result<Self> {
        Self::new(PAdicIndex::root(2), order)
    }

    /// Top-edge midpoint `z_I`.
    pub fn apex(&self) -> Complex64 {
        let (a, b) = self.interval.endpoints();
        Complex64::new(0.5 * (a + b), b - a)
    }

    /// `(x0, x1, y_bottom, y_top)`.
    pub fn bounds(&self) -> Cell {
        let (a, b) = self.interval.endpoints();
        let h = b - a;
        (a, b, h * (-(self.order as f64)).exp2(), h)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let (x0, x1, y0, y1) = self.bounds();
        (x0..=x1).contains(&z.re) && (y0..=y1).contains(&z.im)
    }

    /// The 1-boxes making up the n-box, level by level.
    pub fn one_boxes(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity((1 << self.order) - 1);
        for g in 0..self.order {
            let len = self.interval.length() * (-(g as f64)).exp2();
            for j in self.interval.descendant_range(g) {
                let x0 = j as f64 * len;
                out.push((x0, x0 + len, 0.5 * len, len));
            }
        }
        out
    }

    /// `∫ dA / y = n log 2 |I|`.
    pub fn hyperbolic_mass(&self) -> f64 {
        self.order as f64 * std::f64::consts::LN_2 * self.interval.length()
    }
}

/// `∑_cells ∫∫ f` with a tensor rule per cell; cells are summed in order.
pub(crate) fn integrate_cells(cells: &[Cell], gl: &GaussLegendre, f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    let parts: Vec<f64> = cells
        .par_iter()
        .map(|&(x0, x1, y0, y1)| gl.integrate_rect(x0, x1, y0, y1, &f))
        .collect();
    parts.iter().sum()
}

/// Average of `|2y b'|²` over `□_I^n` with respect to `dA/y`, with the
/// residual against a rule two orders lower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxAverage {
    pub value: f64,
    pub residual: f64,
}

/// Tolerated relative residual of box quadrature.
pub const BOX_RESIDUAL_TOLERANCE: f64 = 1e-3;

pub fn box_average(b: &dyn BlochEvaluator, bx: &HyperbolicBox, order: usize) -> Result<BoxAverage> {
    b.domain().require(Domain::UpperHalfPlane)?;
    let order = order.max(4);
    let cells = bx.one_boxes();
    let density = |x: f64, y: f64| 4.0 * y * b.derivative(Complex64::new(x, y)).norm_sqr();
    let fine = integrate_cells(&cells, &GaussLegendre::new(order), density);
    let coarse = integrate_cells(&cells, &GaussLegendre::new(order - 2), density);
    let mass = bx.hyperbolic_mass();
    let value = fine / mass;
    let residual = (fine - coarse).abs() / mass;
    if residual > BOX_RESIDUAL_TOLERANCE * value.abs().max(1e-3) {
        return Err(Error::Quadrature { residual });
    }
    Ok(BoxAverage { value, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{Constant, Identity};
    use std::f64::consts::LN_2;

    #[test]
    fn chi_values() {
        assert_eq!(chi(2).unwrap(), LN_2);
        assert!((chi(4).unwrap() - 2.0 * LN_2).abs() < 1e-15);
        assert!(chi(1).is_err());
    }

    #[test]
    fn unit_box_geometry() {
        let bx = HyperbolicBox::unit(5).unwrap();
        assert_eq!(bx.bounds(), (0.0, 1.0, 1.0 / 32.0, 1.0));
        assert_eq!(bx.apex(), Complex64::new(0.5, 1.0));
        assert_eq!(bx.one_boxes().len(), 31);
        let i = PAdicIndex::new(2, 3, 5).unwrap();
        let one = HyperbolicBox::new(i, 1).unwrap();
        assert_eq!(one.bounds(), (0.625, 0.75, 0.0625, 0.125));
    }

    #[test]
    fn one_boxes_tile_the_n_box() {
        let i = PAdicIndex::new(2, 2, 1).unwrap();
        let bx = HyperbolicBox::new(i, 6).unwrap();
        let area: f64 = bx.one_boxes().iter().map(|c| (c.1 - c.0) * (c.3 - c.2)).sum();
        let (x0, x1, y0, y1) = bx.bounds();
        assert!((area - (x1 - x0) * (y1 - y0)).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_mass_by_quadrature() {
        let gl = GaussLegendre::new(8);
        for (level, order) in [(0, 1), (0, 16), (3, 7)] {
            let bx = HyperbolicBox::new(PAdicIndex::new(2, level, 0).unwrap(), order).unwrap();
            let q = integrate_cells(&bx.one_boxes(), &gl, |_, y| 1.0 / y);
            assert!((q - bx.hyperbolic_mass()).abs() < 1e-10 * bx.hyperbolic_mass());
        }
    }

    #[test]
    fn box_average_closed_forms() {
        let c = Constant { value: Complex64::new(1.0, 1.0), domain: Domain::UpperHalfPlane };
        assert_eq!(box_average(&c, &HyperbolicBox::unit(4).unwrap(), 6).unwrap().value, 0.0);
        for n in [1usize, 4, 16] {
            let got = box_average(&Identity, &HyperbolicBox::unit(n).unwrap(), 6).unwrap().value;
            let want = 2.0 * (1.0 - 4f64.powi(-(n as i32))) / (n as f64 * LN_2);
            assert!((got - want).abs() < 1e-12, "n={n}: {got} vs {want}");
        }
    }
}
