use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{box_average, HyperbolicBox};
use crate::bloch::{BlochEvaluator, Domain};
use crate::martingale::{PAdicIndex, PAdicMartingale};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeOptions {
    pub depth: usize,
    /// Leaves are sampled at height `2^{-(depth + guard)}`.
    pub guard: u32,
    /// Gauss–Legendre nodes per leaf interval.
    pub leaf_nodes: usize,
}

impl BridgeOptions {
    pub fn new(depth: usize) -> Self {
        Self { depth, guard: 2, leaf_nodes: 32 }
    }

    pub fn leaf_height(&self) -> f64 {
        (-((self.depth as u32 + self.guard) as f64)).exp2()
    }
}

/// A dyadic martingale built from a Bloch function, with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochMartingale {
    pub martingale: PAdicMartingale,
    /// `max |B_I - B_J|` over adjacent same-size intervals, all levels.
    pub adjacency: f64,
    /// Per level `k`: `max_I |b(z_I) - B_I|` over intervals of length `2^{-k}`.
    pub fidelity: Vec<f64>,
    pub leaf_height: f64,
}

impl BlochMartingale {
    pub fn from_martingale(martingale: PAdicMartingale) -> Result<Self> {
        if martingale.base() != 2 {
            return Err(Error::InvalidParameter("Bloch martingales are dyadic".into()));
        }
        let adjacency = adjacency_constant(&martingale, martingale.depth())?;
        Ok(Self { martingale, adjacency, fidelity: Vec::new(), leaf_height: 0.0 })
    }

    pub fn depth(&self) -> usize {
        self.martingale.depth()
    }

    pub fn max_fidelity(&self) -> f64 {
        self.fidelity.iter().copied().fold(0.0, f64::max)
    }

    pub fn adjacency_by_level(&self) -> Vec<(usize, f64)> {
        (0..=self.depth())
            .map(|k| (k, adjacent_max(self.martingale.level(k))))
            .collect()
    }
}

/// `B_I = (1/|I|) ∫_I b(x + i y) dx` at the leaves, then exact bottom-up
/// re-averaging, so the tree is a martingale to rounding and the whole
/// approximation error shows up in the fidelity diagnostic `|b(z_I) - B_I|`.
pub fn martingale_from_bloch(b: &dyn BlochEvaluator, options: &BridgeOptions) -> Result<BlochMartingale> {
    b.domain().require(Domain::UpperHalfPlane)?;
    if options.depth > 26 {
        return Err(Error::InvalidParameter(format!("depth {} too large", options.depth)));
    }
    let y = options.leaf_height();
    let n = 1usize << options.depth;
    let w = 1.0 / n as f64;
    let terms = b.fourier_terms();
    let leaves: Vec<Complex64> = match &terms {
        Some(t) => periodic_grid(t, y, n, 0.0, true),
        None => {
            let gl = GaussLegendre::new(options.leaf_nodes.max(1));
            (0..n)
                .into_par_iter()
                .map(|j| {
                    let x0 = j as f64 * w;
                    gl.on(x0, x0 + w).map(|(x, wt)| b.value(Complex64::new(x, y)) * wt).sum::<Complex64>() / w
                })
                .collect()
        }
    };
    let martingale = PAdicMartingale::from_leaves(2, leaves)?;
    let fidelity = (0..=options.depth)
        .map(|k| {
            let lv = martingale.level(k);
            let len = (-(k as f64)).exp2();
            let at_apex: Vec<Complex64> = match &terms {
                Some(t) => periodic_grid(t, len, lv.len(), 0.5, false),
                None => (0..lv.len())
                    .into_par_iter()
                    .map(|j| b.value(Complex64::new((j as f64 + 0.5) * len, len)))
                    .collect(),
            };
            at_apex.iter().zip(lv).map(|(v, l)| (v - l).norm()).fold(0.0, f64::max)
        })
        .collect();
    let adjacency = adjacency_constant(&martingale, options.depth)?;
    Ok(BlochMartingale { martingale, adjacency, fidelity, leaf_height: y })
}

/// For `b = Σ c_m e^{2πimz}`: either `b((j + shift)/n + iy)` or, with
/// `average`, the mean of `b(· + iy)` over `[j/n, (j+1)/n]`, for all `j < n`
/// from one inverse FFT (`e^{2πimj/n}` depends only on `m mod n`).
fn periodic_grid(terms: &[(u64, Complex64)], y: f64, n: usize, shift: f64, average: bool) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let nf = n as f64;
    for &(m, c) in terms {
        let mf = m as f64;
        let decay = (-TAU * mf * y).exp();
        if decay < 1e-300 {
            continue;
        }
        let mut f = c * decay * Complex64::from_polar(1.0, TAU * ((m % n as u64) as f64) * shift / nf);
        if average && m > 0 {
            let h = PI * ((m % (2 * n as u64)) as f64) / nf;
            let x = PI * mf / nf;
            // e^{iπm/n} sin(πm/n)/(πm/n), with the phase reduced mod 2π
            f *= Complex64::from_polar(h.sin() / x, h);
        }
        buf[(m % n as u64) as usize] += f;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf
}

fn adjacent_max(level: &[Complex64]) -> f64 {
    level.windows(2).map(|p| (p[1] - p[0]).norm()).fold(0.0, f64::max)
}

/// `max |B_I - B_J|` over adjacent same-length intervals at levels `0..=depth`,
/// including neighbours with different parents.
pub fn adjacency_constant(m: &PAdicMartingale, depth: usize) -> Result<f64> {
    if depth > m.depth() {
        return Err(Error::LevelOutOfRange { level: depth, depth: m.depth() });
    }
    Ok((0..=depth).map(|k| adjacent_max(m.level(k))).fold(0.0, f64::max))
}

/// `|(1/log 2) var_I^n B - box_average(b, I, n)|`.
pub fn greens_discrepancy(
    b: &dyn BlochEvaluator,
    bm: &BlochMartingale,
    interval: PAdicIndex,
    n: usize,
    order: usize,
) -> Result<GreensRow> {
    let var = bm.martingale.local_variance_n(interval, n)?;
    let bx = HyperbolicBox::new(interval, n)?;
    let avg = box_average(b, &bx, order)?;
    let martingale_side = var / LN_2;
    Ok(GreensRow {
        level: interval.level,
        offset: interval.offset,
        interval_length: interval.length(),
        n,
        martingale_side,
        box_side: avg.value,
        defect: (martingale_side - avg.value).abs(),
    })
}

/// `(|var_I^n(Re B) - var_I^n(B)/2|, |var_I^n(Re B, Im B)|)`.
pub fn complexification_defects(m: &PAdicMartingale, interval: PAdicIndex, n: usize) -> Result<(f64, f64)> {
    let re = m.real_part();
    let im = m.imag_part();
    let full = m.local_variance_n(interval, n)?;
    let vr = re.local_variance_n(interval, n)?;
    let cov = re.local_covariance_n(&im, interval, n)?;
    Ok(((vr - 0.5 * full).abs(), cov.re.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreensRow {
    pub level: usize,
    pub offset: usize,
    pub interval_length: f64,
    pub n: usize,
    pub martingale_side: f64,
    pub box_side: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexificationRow {
    pub level: usize,
    pub offset: usize,
    pub n: usize,
    pub variance_defect: f64,
    pub covariance_defect: f64,
}

/// Diagnostic tables keyed by `(|I|, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub family: String,
    pub depth: usize,
    pub leaf_height: f64,
    pub adjacency_by_depth: Vec<(usize, f64)>,
    pub fidelity_by_level: Vec<f64>,
    pub greens: Vec<GreensRow>,
    pub complexification: Vec<ComplexificationRow>,
}

impl BridgeReport {
    /// Rows for every dyadic interval at `level` and every order in `orders`.
    pub fn build(
        b: &dyn BlochEvaluator,
        bm: &BlochMartingale,
        level: usize,
        orders: &[usize],
        quadrature_order: usize,
    ) -> Result<Self> {
        let mut greens = Vec::new();
        let mut complexification = Vec::new();
        for &n in orders {
            for j in 0..1usize << level {
                let i = PAdicIndex::new(2, level, j)?;
                greens.push(greens_discrepancy(b, bm, i, n, quadrature_order)?);
                let (v, c) = complexification_defects(&bm.martingale, i, n)?;
                complexification.push(ComplexificationRow {
                    level,
                    offset: j,
                    n,
                    variance_defect: v,
                    covariance_defect: c,
                });
            }
        }
        Ok(Self {
            family: b.label(),
            depth: bm.depth(),
            leaf_height: bm.leaf_height,
            adjacency_by_depth: bm.adjacency_by_level(),
            fidelity_by_level: bm.fidelity.clone(),
            greens,
            complexification,
        })
    }

    /// Median Green's defect at order `n`.
    pub fn median_defect(&self, n: usize) -> Option<f64> {
        let mut d: Vec<f64> = self.greens.iter().filter(|r| r.n == n).map(|r| r.defect).collect();
        if d.is_empty() {
            return None;
        }
        d.sort_by(f64::total_cmp);
        Some(d[d.len() / 2])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
