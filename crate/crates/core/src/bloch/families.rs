use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{BlochEvaluator, Domain};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct Constant {
    pub value: Complex64,
    pub domain: Domain,
}

impl BlochEvaluator for Constant {
    fn domain(&self) -> Domain {
        self.domain
    }
    fn value(&self, _: Complex64) -> Complex64 {
        self.value
    }
    fn derivative(&self, _: Complex64) -> Complex64 {
        ZERO
    }
    fn norm_bound(&self) -> f64 {
        0.0
    }
    fn label(&self) -> String {
        format!("constant({})", self.value)
    }
}

/// `b(z) = z` on ℍ. Not Bloch on all of ℍ; the bound `1/2` holds on `y ≤ 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl BlochEvaluator for Identity {
    fn domain(&self) -> Domain {
        Domain::UpperHalfPlane
    }
    fn value(&self, z: Complex64) -> Complex64 {
        z
    }
    fn derivative(&self, _: Complex64) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }
    fn norm_bound(&self) -> f64 {
        0.5
    }
    fn label(&self) -> String {
        "identity".into()
    }
}

/// Sup of a radial majorant `(1 - r²) g(r)` over `r = 1 - 2^{-s}`, `s ∈ [0, 64]`,
/// with a small safety factor for the grid spacing.
fn scan_majorant(step: f64, margin: f64, g: impl Fn(f64) -> f64) -> f64 {
    let mut best: f64 = 0.0;
    let mut s = 0.0;
    while s <= 64.0 {
        let r = 1.0 - (-s * std::f64::consts::LN_2).exp();
        best = best.max((1.0 - r * r) * g(r));
        s += step;
    }
    best * margin
}

/// `b(z) = Σ_k a_k z^{q^k}` on the disk.
#[derive(Debug, Clone)]
pub struct Lacunary {
    coeffs: Vec<Complex64>,
    q: u32,
    bound: f64,
}

/// Terms with `|z|^{q^k}` below this are dropped; with bounded coefficients
/// the tail is then below `1e-20` relative.
const LACUNARY_CUTOFF: f64 = 1e-22;

impl Lacunary {
    pub fn new(coeffs: Vec<Complex64>, q: u32) -> Self {
        assert!(q >= 2, "gap base must be at least 2");
        let abs: Vec<f64> = coeffs.iter().map(|c| c.norm()).collect();
        let qf = q as f64;
        let bound = scan_majorant(1.0 / 256.0, 1.002, |r| {
            let mut acc = 0.0;
            let mut e = 1.0;
            for a in &abs {
                acc += a * e * r.powf(e - 1.0);
                e *= qf;
            }
            acc
        });
        Self { coeffs, q, bound }
    }

    /// `Σ_{k < terms} z^{2^k}`.
    pub fn standard(terms: usize) -> Self {
        Self::new(vec![Complex64::new(1.0, 0.0); terms], 2)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn gap(&self) -> u32 {
        self.q
    }

    /// Exact circle mean `(1/2π)∫|b(re^{iθ})|² dθ = Σ |a_k|² r^{2 q^k}` of the truncation.
    pub fn parseval_circle_mean(&self, r: f64) -> f64 {
        let mut e = 1.0;
        let mut s = 0.0;
        for a in &self.coeffs {
            s += a.norm_sqr() * r.powf(2.0 * e);
            e *= self.q as f64;
        }
        s
    }

    fn pow_q(&self, w: Complex64) -> Complex64 {
        match self.q {
            2 => w * w,
            q => w.powu(q),
        }
    }
}

impl BlochEvaluator for Lacunary {
    fn domain(&self) -> Domain {
        Domain::Disk
    }

    fn value(&self, z: Complex64) -> Complex64 {
        let mut w = z;
        let mut acc = ZERO;
        for a in &self.coeffs {
            if w.norm_sqr() < LACUNARY_CUTOFF * LACUNARY_CUTOFF {
                break;
            }
            acc += a * w;
            w = self.pow_q(w);
        }
        acc
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        self.value_and_derivative(z).1
    }

    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        if z == ZERO {
            let a0 = self.coeffs.first().copied().unwrap_or(ZERO);
            return (ZERO, a0);
        }
        let mut w = z;
        let mut e = 1.0;
        let mut v = ZERO;
        let mut d = ZERO;
        for a in &self.coeffs {
            if e * w.norm() < LACUNARY_CUTOFF {
                break;
            }
            v += a * w;
            d += a * w * e;
            w = self.pow_q(w);
            e *= self.q as f64;
        }
        (v, d / z)
    }

    fn norm_bound(&self) -> f64 {
        self.bound
    }

    fn label(&self) -> String {
        format!("lacunary(q={}, K={})", self.q, self.coeffs.len())
    }

    fn fourier_terms(&self) -> Option<Vec<(u64, Complex64)>> {
        Some(
            self.coeffs
                .iter()
                .enumerate()
                .map_while(|(k, a)| (self.q as u64).checked_pow(k as u32).map(|m| (m, *a)))
                .collect(),
        )
    }
}

/// Sparse power series `Σ c_m z^m` on the disk.
///
/// Powers are produced by a running product over the sorted exponents; each
/// distinct gap `m_i - m_{i-1}` is raised once per evaluation point, so sets
/// like `{p^v · o}` cost one multiplication per term.
#[derive(Debug, Clone)]
pub struct PowerSeries {
    exponents: Vec<u64>,
    coeffs: Vec<Complex64>,
    gap_index: Vec<usize>,
    gaps: Vec<u64>,
    cmax: f64,
    blocks: Option<Blocks>,
    bound: OnceLock<f64>,
    label: String,
}

impl PowerSeries {
    /// Terms with equal exponents are merged; zero coefficients are kept.
    pub fn new(terms: impl IntoIterator<Item = (u64, Complex64)>) -> Self {
        let mut merged: Vec<(u64, Complex64)> = Vec::new();
        let mut sorted: Vec<(u64, Complex64)> = terms.into_iter().collect();
        sorted.sort_by_key(|t| t.0);
        for (m, c) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == m => last.1 += c,
                _ => merged.push((m, c)),
            }
        }
        let mut gaps = Vec::new();
        let mut lookup = HashMap::new();
        let mut gap_index = Vec::with_capacity(merged.len());
        let mut prev = 0;
        for (m, _) in &merged {
            let g = m - prev;
            prev = *m;
            let idx = *lookup.entry(g).or_insert_with(|| {
                gaps.push(g);
                gaps.len() - 1
            });
            gap_index.push(idx);
        }
        Self {
            exponents: merged.iter().map(|t| t.0).collect(),
            coeffs: merged.iter().map(|t| t.1).collect(),
            gap_index,
            gaps,
            cmax: merged.iter().map(|t| t.1.norm()).fold(0.0, f64::max),
            blocks: None,
            bound: OnceLock::new(),
            label: "power-series".into(),
        }
    }

    /// `Σ_v Σ_o rows[v][o] z^{p^v o}` (`rows[v][0]` must vanish for `v > 0`),
    /// evaluated level by level by Horner's rule in `u = z^{p^v}`; much cheaper
    /// than the running product when the exponents have large gaps.
    pub fn p_adic(p: u64, rows: Vec<Vec<Complex64>>) -> Self {
        assert!(p >= 2, "base must be at least 2");
        assert!(rows.iter().skip(1).all(|r| r.first().is_none_or(|c| *c == ZERO)), "constant term above level 0");
        let mut terms = Vec::new();
        let mut pv = 1u64;
        for (v, row) in rows.iter().enumerate() {
            for (o, c) in row.iter().enumerate() {
                if v == 0 || o > 0 {
                    terms.push((pv * o as u64, *c));
                }
            }
            if v + 1 < rows.len() {
                pv = pv.checked_mul(p).expect("exponent overflow");
            }
        }
        let mut out = Self::new(terms);
        out.blocks = Some(Blocks { p, rows });
        out
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Overrides the scanned Bloch bound, e.g. with an analytic one.
    pub fn with_norm_bound(self, bound: f64) -> Self {
        let _ = self.bound.set(bound);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.exponents.iter().copied().zip(self.coeffs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = match &self.blocks {
            Some(b) => Self::p_adic(b.p, b.rows.iter().map(|r| r.iter().map(|c| c * s).collect()).collect()),
            None => Self::new(self.terms().map(|(m, c)| (m, c * s))),
        };
        out.label = self.label.clone();
        out
    }

    /// Returns `(Σ c_m z^m, Σ m c_m z^m)`.
    fn sums(&self, z: Complex64) -> (Complex64, Complex64) {
        if let Some(blocks) = &self.blocks {
            return blocks.sums(z, self.cmax);
        }
        let mut powers = Vec::with_capacity(self.gaps.len());
        for &g in &self.gaps {
            powers.push(pow_u64(z, g));
        }
        let q = 1.0 - z.norm();
        let mut zp = Complex64::new(1.0, 0.0);
        let mut v = ZERO;
        let mut d = ZERO;
        for ((m, c), gi) in self.exponents.iter().zip(&self.coeffs).zip(&self.gap_index) {
            zp *= powers[*gi];
            let a = zp.norm();
            if a < 1e-300 {
                break;
            }
            let t = c * zp;
            let mf = *m as f64;
            v += t;
            d += t * mf;
            // Σ_{k>m} |z|^k ≤ |z|^m/q and Σ_{k>m} k|z|^k ≤ |z|^m (m/q + 1/q²)
            let scale = a * self.cmax;
            if scale * (mf / q + 1.0 / (q * q)) < TAIL_RELATIVE * d.norm() && scale / q < TAIL_RELATIVE * v.norm() {
                break;
            }
        }
        (v, d)
    }
}

#[derive(Debug, Clone)]
struct Blocks {
    p: u64,
    rows: Vec<Vec<Complex64>>,
}

impl Blocks {
    fn sums(&self, z: Complex64, cmax: f64) -> (Complex64, Complex64) {
        let mut u = z;
        let mut pv = 1.0;
        let mut v = ZERO;
        let mut d = ZERO;
        for row in &self.rows {
            let a = u.norm();
            if a < 1e-300 {
                break;
            }
            // later levels only have exponents ≥ p^v, and |u| shrinks like a power
            let q = 1.0 - a;
            if 2.0 * cmax * a * pv / (q * q) < TAIL_RELATIVE * d.norm() && 2.0 * cmax * a / q < TAIL_RELATIVE * v.norm() {
                break;
            }
            let (mut f, mut df) = (ZERO, ZERO);
            for c in row.iter().rev() {
                df = df * u + f;
                f = f * u + c;
            }
            v += f;
            d += u * df * pv;
            u = pow_u64(u, self.p);
            pv *= self.p as f64;
        }
        (v, d)
    }
}

/// Relative size of the neglected tail of a power series.
const TAIL_RELATIVE: f64 = 1e-17;

fn pow_u64(z: Complex64, mut e: u64) -> Complex64 {
    let mut base = z;
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

impl BlochEvaluator for PowerSeries {
    fn domain(&self) -> Domain {
        Domain::Disk
    }

    fn value(&self, z: Complex64) -> Complex64 {
        self.sums(z).0
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        self.value_and_derivative(z).1
    }

    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        if z == ZERO {
            let c0 = self.terms().find(|t| t.0 == 0).map(|t| t.1).unwrap_or(ZERO);
            let c1 = self.terms().find(|t| t.0 == 1).map(|t| t.1).unwrap_or(ZERO);
            return (c0, c1);
        }
        let (v, d) = self.sums(z);
        (v, d / z)
    }

    fn norm_bound(&self) -> f64 {
        *self.bound.get_or_init(|| {
            let terms: Vec<(f64, f64)> = self.terms().map(|(m, c)| (m as f64, c.norm())).collect();
            scan_majorant(1.0 / 64.0, 1.01, |r| {
                let lr = r.ln();
                terms.iter().map(|(m, a)| m * a * ((m - 1.0) * lr).exp()).sum()
            })
        })
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    /// Folds `c_m r^m` into `m mod n` and applies one inverse FFT; exact on
    /// the grid since `e^{imθ_k}` only depends on `m mod n`.
    fn circle_block(&self, r: f64, n: usize) -> Option<Vec<Complex64>> {
        let mut buf = vec![ZERO; n];
        let lr = r.ln();
        for (m, c) in self.terms() {
            let w = (m as f64 * lr).exp();
            if w < 1e-300 {
                break;
            }
            buf[(m % n as u64) as usize] += c * w;
        }
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        Some(buf)
    }

    fn fourier_terms(&self) -> Option<Vec<(u64, Complex64)>> {
        Some(self.terms().collect())
    }
}

/// `b_ℍ(w) = b(e^{2πiw})` for a disk function `b`; 1-periodic on ℍ.
///
/// `(1/2) y |b_ℍ'(w)| = π y e^{-2πy} |b'(ζ)| ≤ (1/4)(1 - |ζ|²)|b'(ζ)|` because
/// `2πy ≤ sinh(2πy)`, so the declared bound is a quarter of the disk bound.
#[derive(Debug, Clone)]
pub struct ExpTransplant<B> {
    inner: B,
}

impl<B: BlochEvaluator> ExpTransplant<B> {
    pub fn new(inner: B) -> Self {
        assert_eq!(inner.domain(), Domain::Disk, "exp transplant needs a disk function");
        Self { inner }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

pub(crate) fn exp_map(w: Complex64) -> Complex64 {
    Complex64::from_polar((-TAU * w.im).exp(), TAU * w.re)
}

impl<B: BlochEvaluator> BlochEvaluator for ExpTransplant<B> {
    fn domain(&self) -> Domain {
        Domain::UpperHalfPlane
    }
    fn value(&self, w: Complex64) -> Complex64 {
        self.inner.value(exp_map(w))
    }
    fn derivative(&self, w: Complex64) -> Complex64 {
        self.value_and_derivative(w).1
    }
    fn value_and_derivative(&self, w: Complex64) -> (Complex64, Complex64) {
        let z = exp_map(w);
        let (v, d) = self.inner.value_and_derivative(z);
        (v, Complex64::new(0.0, TAU) * z * d)
    }
    fn norm_bound(&self) -> f64 {
        0.25 * self.inner.norm_bound()
    }
    fn label(&self) -> String {
        format!("exp-transplant({})", self.inner.label())
    }
    fn fourier_terms(&self) -> Option<Vec<(u64, Complex64)>> {
        self.inner.fourier_terms()
    }
}
