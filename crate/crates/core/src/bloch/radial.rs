use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BlochEvaluator, Domain};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result, SpectrumEstimate};

/// Chunk length for circle sweeps. Fixed so that summation order, and hence
/// every result bit, is independent of the thread count.
const CHUNK: usize = 1 << 14;

/// `r_j = 1 - 2^{-j}`.
pub fn radius(j: u32) -> f64 {
    1.0 - (-(j as f64)).exp2()
}

/// Default number of θ nodes at radius `r_j`: `2^{max(12, j + 3)}`.
///
/// A uniform grid of `N = 2^M` nodes aliases `z^{2^k}` to a constant for
/// `k ≥ M`, so dyadic lacunary terms that are still alive at `r_j` (those with
/// `2^k ≲ 2^j`) must stay below `M`; three extra octaves put the aliased mass
/// below `e^{-8}`.
pub fn theta_count(j: u32) -> usize {
    1usize << (j + 3).max(12)
}

/// Placement of the θ nodes on a circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaSampling {
    /// `θ_k = 2πk/N` (trapezoid rule).
    Uniform,
    /// `θ_k = 2π(k + u_k)/N` with `u_k` uniform in `[0, 1)`: one node per
    /// stratum, which breaks the resonance of uniform grids with lacunary terms.
    Jittered { seed: u64 },
}

fn chunk_values(b: &dyn BlochEvaluator, r: f64, n: usize, sampling: ThetaSampling, chunk: usize, out: &mut Vec<Complex64>) {
    let start = chunk * CHUNK;
    let len = CHUNK.min(n - start);
    out.resize(len, Complex64::new(0.0, 0.0));
    match sampling {
        ThetaSampling::Uniform => b.circle_chunk(r, n, start, out),
        ThetaSampling::Jittered { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            for (i, v) in out.iter_mut().enumerate() {
                let u: f64 = rng.gen();
                *v = b.value(Complex64::from_polar(r, TAU * ((start + i) as f64 + u) / n as f64));
            }
        }
    }
}

/// Applies `f` to consecutive chunks of circle values, returning the results in order.
fn reduce_circle<T, F>(b: &dyn BlochEvaluator, r: f64, n: usize, sampling: ThetaSampling, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[Complex64]) -> T + Sync,
{
    if sampling == ThetaSampling::Uniform {
        if let Some(all) = b.circle_block(r, n) {
            return all.par_chunks(CHUNK).map(&f).collect();
        }
    }
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map_init(Vec::new, |buf, c| {
            chunk_values(b, r, n, sampling, c, buf);
            f(buf)
        })
        .collect()
}

/// All `n` circle values `b(r e^{iθ_k})`.
pub fn circle_values(b: &dyn BlochEvaluator, r: f64, n: usize, sampling: ThetaSampling) -> Result<Vec<Complex64>> {
    check_circle(b, r, n)?;
    Ok(reduce_circle(b, r, n, sampling, |v| v.to_vec()).concat())
}

fn check_circle(b: &dyn BlochEvaluator, r: f64, n: usize) -> Result<()> {
    b.domain().require(Domain::Disk)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutsideDomain(format!("radius {r} not in (0, 1)")));
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("N_theta = {n} must be a power of two >= 2")));
    }
    Ok(())
}

/// A normalized circle mean with its Richardson error (full grid vs even nodes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleAverage {
    pub value: f64,
    pub error: f64,
}

fn circle_mean(b: &dyn BlochEvaluator, r: f64, n: usize, f: impl Fn(Complex64) -> f64 + Sync) -> CircleAverage {
    let parts = reduce_circle(b, r, n, ThetaSampling::Uniform, |v| {
        let mut even = 0.0;
        let mut odd = 0.0;
        for pair in v.chunks(2) {
            even += f(pair[0]);
            if let Some(z) = pair.get(1) {
                odd += f(*z);
            }
        }
        (even, odd)
    });
    let (even, odd) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let value = (even + odd) / n as f64;
    let half = even / (n / 2) as f64;
    CircleAverage { value, error: (value - half).abs() }
}

/// `log((1/2π)∫ e^{g(re^{iθ})} dθ)` with a max shift.
fn circle_log_mean_exp(b: &dyn BlochEvaluator, r: f64, n: usize, g: impl Fn(Complex64) -> f64 + Sync) -> CircleAverage {
    let parts = reduce_circle(b, r, n, ThetaSampling::Uniform, |v| {
        let vals: Vec<f64> = v.iter().map(|z| g(*z)).collect();
        let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut even = 0.0;
        let mut odd = 0.0;
        for (i, x) in vals.iter().enumerate() {
            let e = (x - m).exp();
            if i % 2 == 0 {
                even += e;
            } else {
                odd += e;
            }
        }
        (m, even, odd)
    });
    let m = parts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let (even, odd) = parts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.1 * (p.0 - m).exp(), a.1 + p.2 * (p.0 - m).exp()));
    let value = m + ((even + odd) / n as f64).ln();
    let half = m + (even / (n / 2) as f64).ln();
    CircleAverage { value, error: (value - half).abs() }
}

/// `(1/|log(1-r)|) (1/2π) ∫ |b(re^{iθ})|² dθ` by the trapezoid rule.
pub fn sigma2_radial(b: &dyn BlochEvaluator, r: f64, n_theta: usize) -> Result<f64> {
    check_circle(b, r, n_theta)?;
    Ok(circle_mean(b, r, n_theta, |z| z.norm_sqr()).value / (1.0 - r).ln().abs())
}

fn ladder_js(js: &[u32]) -> Result<()> {
    if js.is_empty() || js.windows(2).any(|w| w[1] <= w[0]) || js[0] == 0 || *js.last().unwrap() > 52 {
        return Err(Error::InvalidParameter("radius indices must be ascending in 1..=52".into()));
    }
    Ok(())
}

/// Ladder of `sigma2_radial` over `r_j`; the limit is the slope of the circle
/// mean against `|log(1-r_j)| = j log 2` over the deeper half.
pub fn sigma2_radial_ladder(b: &dyn BlochEvaluator, js: &[u32], n_theta: Option<usize>) -> Result<SpectrumEstimate> {
    ladder_js(js)?;
    let mut num = Vec::new();
    let mut den = Vec::new();
    let mut err = Vec::new();
    for &j in js {
        let n = n_theta.unwrap_or_else(|| theta_count(j));
        let r = radius(j);
        check_circle(b, r, n)?;
        let avg = circle_mean(b, r, n, |z| z.norm_sqr());
        let l = j as f64 * LN_2;
        num.push(avg.value);
        den.push(l);
        err.push(avg.error / l);
    }
    let scales = js.iter().map(|&j| radius(j)).collect();
    SpectrumEstimate::from_ratios("sigma2-radial", scales, &num, &den, err)
}

/// `(1/|log h|) ∫_h^1 ∫_0^1 |2 y b'|² dA/y` over dyadic layers and columns,
/// tensor Gauss–Legendre of the given order per cell. The residual against
/// order + 4 must stay below `1e-8` relative.
pub fn sigma2_area(b: &dyn BlochEvaluator, h: f64, order: usize) -> Result<f64> {
    b.domain().require(Domain::UpperHalfPlane)?;
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidParameter(format!("h = {h} not in (0, 1)")));
    }
    let lo = GaussLegendre::new(order.max(2));
    let hi = GaussLegendre::new(order.max(2) + 4);
    let integrate = |gl: &GaussLegendre| -> f64 {
        let mut total = 0.0;
        let mut k = 0u32;
        loop {
            let top = (-(k as f64)).exp2();
            if top <= h {
                break;
            }
            let bottom = (top * 0.5).max(h);
            let cols = 1usize << k.min(24);
            let w = 1.0 / cols as f64;
            let layer: Vec<f64> = (0..cols)
                .into_par_iter()
                .map(|c| {
                    let x0 = c as f64 * w;
                    gl.integrate_rect(x0, x0 + w, bottom, top, |x, y| {
                        let d = b.derivative(Complex64::new(x, y));
                        4.0 * y * d.norm_sqr()
                    })
                })
                .collect();
            total += layer.iter().sum::<f64>();
            k += 1;
        }
        total
    };
    let a = integrate(&lo);
    let c = integrate(&hi);
    let residual = (a - c).abs();
    if residual > 1e-8 * c.abs().max(1e-300) + 1e-14 {
        return Err(Error::Quadrature { residual });
    }
    Ok(c / h.ln().abs())
}

/// Ladder of `log((1/2π)∫|e^{τ b}|) / |log(1-r_j)|` with slope extrapolation.
pub fn beta_integral_means(
    b: &dyn BlochEvaluator,
    tau: Complex64,
    js: &[u32],
    n_theta: Option<usize>,
) -> Result<SpectrumEstimate> {
    ladder_js(js)?;
    let mut num = Vec::new();
    let mut den = Vec::new();
    let mut err = Vec::new();
    for &j in js {
        let n = n_theta.unwrap_or_else(|| theta_count(j));
        let r = radius(j);
        check_circle(b, r, n)?;
        let avg = if tau == Complex64::new(0.0, 0.0) {
            CircleAverage { value: 0.0, error: 0.0 }
        } else {
            circle_log_mean_exp(b, r, n, |z| (tau * z).re)
        };
        if !avg.value.is_finite() {
            return Err(Error::InvalidParameter(format!("integral means overflow at j = {j}")));
        }
        let l = j as f64 * LN_2;
        num.push(avg.value);
        den.push(l);
        err.push(avg.error / l);
    }
    let scales = js.iter().map(|&j| radius(j)).collect();
    SpectrumEstimate::from_ratios("integral-means", scales, &num, &den, err)
}

/// Max over the θ grid of `|b(re^{iθ})| / sqrt(L · log log L)`, `L = log(1/(1-r))`,
/// i.e. the LIL normalization with `log log log 1/(1-r)` under the root.
pub fn lil_estimate(b: &dyn BlochEvaluator, n_theta: usize, js: &[u32]) -> Result<SpectrumEstimate> {
    ladder_js(js)?;
    let mut values = Vec::new();
    for &j in js {
        let l = j as f64 * LN_2;
        let lll = l.ln().ln();
        if !(lll > 0.0) {
            return Err(Error::InvalidParameter(format!("radius r_{j} too shallow for log log log")));
        }
        let r = radius(j);
        check_circle(b, r, n_theta)?;
        let m = reduce_circle(b, r, n_theta, ThetaSampling::Uniform, |v| {
            v.iter().map(|z| z.norm()).fold(0.0, f64::max)
        })
        .into_iter()
        .fold(0.0, f64::max);
        values.push(m / (l * lll).sqrt());
    }
    let scales = js.iter().map(|&j| radius(j)).collect();
    let errors = vec![0.0; values.len()];
    SpectrumEstimate::from_values("lil-radial", scales, values, errors)
}

/// `b(re^{iθ_k}) / sqrt|log(1-r)|` for `k < n`.
pub fn rescaled_boundary_samples(
    b: &dyn BlochEvaluator,
    r: f64,
    n: usize,
    sampling: ThetaSampling,
) -> Result<Vec<Complex64>> {
    let s = 1.0 / (1.0 - r).ln().abs().sqrt();
    Ok(circle_values(b, r, n, sampling)?.into_iter().map(|z| z * s).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochCertificate {
    pub declared: f64,
    pub sampled_max: f64,
    pub holds: bool,
}

/// Samples the Bloch density on a `grid × grid` hyperbolically uniform grid:
/// heights (or distances to the circle) log-spaced in `[2^{-24}, 1]`.
pub fn bloch_certificate(b: &dyn BlochEvaluator, grid: usize) -> BlochCertificate {
    let dom = b.domain();
    let mut worst: f64 = 0.0;
    for i in 0..grid {
        let s = (i as f64 + 0.5) / grid as f64;
        let dist = (-24.0 * s).exp2();
        for k in 0..grid {
            let t = (k as f64 + 0.5) / grid as f64;
            let z = match dom {
                Domain::UpperHalfPlane => Complex64::new(t, dist),
                Domain::Disk => Complex64::from_polar(1.0 - dist, TAU * t),
                Domain::ExteriorDisk => Complex64::from_polar(1.0 + dist, TAU * t),
            };
            worst = worst.max(dom.bloch_density(z, b.derivative(z)));
        }
    }
    let declared = b.norm_bound();
    BlochCertificate { declared, sampled_max: worst, holds: worst <= declared + 1e-9 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{Constant, ExpTransplant, Identity, Lacunary, PowerSeries};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn parseval(r: f64, terms: usize) -> f64 {
        (0..terms).map(|k| r.powf(2f64.powi(k as i32 + 1))).sum()
    }

    #[test]
    fn radius_ladder_is_exact() {
        assert_eq!(radius(1), 0.5);
        assert_eq!(1.0 - radius(22), 2f64.powi(-22));
        assert_eq!((1.0 - radius(22)).ln().abs(), 22.0 * LN_2);
    }

    #[test]
    fn constant_has_vanishing_limit() {
        let b = Constant { value: c(1.0, 2.0), domain: Domain::Disk };
        let r = radius(10);
        assert!((sigma2_radial(&b, r, 1024).unwrap() - 5.0 / (10.0 * LN_2)).abs() < 1e-13);
        let lad = sigma2_radial_ladder(&b, &(4..=16).collect::<Vec<_>>(), Some(256)).unwrap();
        assert!(lad.limit.abs() < 1e-12);
    }

    #[test]
    fn lacunary_matches_parseval_oracle() {
        let b = Lacunary::standard(40);
        for j in [4u32, 10, 16] {
            let r = radius(j);
            let got = sigma2_radial(&b, r, theta_count(j)).unwrap();
            let want = parseval(r, 40) / (j as f64 * LN_2);
            assert!(((got - want) / want).abs() < 1e-10, "j={j}: {got} vs {want}");
        }
    }

    #[test]
    fn coarse_uniform_grid_aliases_lacunary_terms() {
        // With N = 2^8 the terms z^{2^k}, k >= 8, are constant on the grid.
        let b = Lacunary::standard(40);
        let r = radius(14);
        let coarse = sigma2_radial(&b, r, 256).unwrap();
        let fine = sigma2_radial(&b, r, theta_count(14)).unwrap();
        assert!((coarse - fine).abs() > 0.1 * fine);
    }

    #[test]
    fn radius_outside_disk_is_rejected() {
        let b = Lacunary::standard(4);
        assert!(sigma2_radial(&b, 1.0, 64).is_err());
        assert!(sigma2_radial(&b, 0.5, 100).is_err());
        assert!(matches!(sigma2_radial(&Identity, 0.5, 64), Err(Error::DomainMismatch { .. })));
    }

    #[test]
    fn area_form_of_identity_is_closed_form() {
        for h in [0.5, 0.01, 2f64.powi(-12), 0.3] {
            let got = sigma2_area(&Identity, h, 4).unwrap();
            let want = 2.0 * (1.0 - h * h) / h.ln().abs();
            assert!((got - want).abs() < 1e-12 * want, "h={h}");
        }
        let zero = Constant { value: c(3.0, 0.0), domain: Domain::UpperHalfPlane };
        assert_eq!(sigma2_area(&zero, 0.1, 4).unwrap(), 0.0);
    }

    #[test]
    fn integral_means_trivial_cases() {
        let zero = Constant { value: c(0.0, 0.0), domain: Domain::Disk };
        let js: Vec<u32> = (2..=10).collect();
        let e = beta_integral_means(&zero, c(0.7, 0.0), &js, Some(512)).unwrap();
        assert!(e.values.iter().all(|v| *v == 0.0) && e.limit == 0.0);
        let lac = Lacunary::standard(30);
        let e0 = beta_integral_means(&lac, c(0.0, 0.0), &js, Some(512)).unwrap();
        assert!(e0.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn integral_means_are_midpoint_convex_in_t() {
        let lac = Lacunary::standard(30);
        let js = [8u32, 9, 10, 11, 12];
        let beta = |t: f64| beta_integral_means(&lac, c(t, 0.0), &js, None).unwrap().values;
        let ts: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.1).collect();
        let vals: Vec<Vec<f64>> = ts.iter().map(|&t| beta(t)).collect();
        for i in 1..ts.len() - 1 {
            for (k, v) in vals[i].iter().enumerate() {
                assert!(*v <= 0.5 * (vals[i - 1][k] + vals[i + 1][k]) + 1e-12);
            }
        }
    }

    #[test]
    fn lil_trivial_and_bounded() {
        let zero = Constant { value: c(0.0, 0.0), domain: Domain::Disk };
        let js: Vec<u32> = (6..=14).collect();
        assert!(lil_estimate(&zero, 256, &js).unwrap().values.iter().all(|v| *v == 0.0));
        let one = Constant { value: c(1.0, 0.0), domain: Domain::Disk };
        let seq = lil_estimate(&one, 256, &js).unwrap().values;
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        assert!(lil_estimate(&one, 256, &[3]).is_err());
        let lac = Lacunary::standard(40);
        let seq = lil_estimate(&lac, 1 << 15, &js).unwrap().values;
        assert!(seq.iter().all(|v| v.is_finite() && *v < 10.0));
    }

    #[test]
    fn boundary_samples_trivial_cases() {
        let one = Constant { value: c(2.0, 0.0), domain: Domain::Disk };
        let r = radius(8);
        let s = rescaled_boundary_samples(&one, r, 64, ThetaSampling::Uniform).unwrap();
        let want = 2.0 / (8.0 * LN_2).sqrt();
        assert!(s.iter().all(|z| (z.re - want).abs() < 1e-15 && z.im == 0.0));
    }

    #[test]
    fn jittered_samples_are_deterministic_and_unaliased() {
        let lac = Lacunary::standard(40);
        let r = radius(20);
        let a = rescaled_boundary_samples(&lac, r, 1 << 16, ThetaSampling::Jittered { seed: 3 }).unwrap();
        let b = rescaled_boundary_samples(&lac, r, 1 << 16, ThetaSampling::Jittered { seed: 3 }).unwrap();
        assert_eq!(a, b);
        let m2 = a.iter().map(|z| z.norm_sqr()).sum::<f64>() / a.len() as f64;
        let want = parseval(r, 40) / (20.0 * LN_2);
        assert!((m2 / want - 1.0).abs() < 0.05, "{m2} vs {want}");
    }

    #[test]
    fn certificates_hold_for_shipped_families() {
        let lac = Lacunary::standard(40);
        assert!(bloch_certificate(&lac, 64).holds);
        assert!(bloch_certificate(&ExpTransplant::new(lac), 64).holds);
        assert!(bloch_certificate(&Identity, 64).holds);
        let ps = PowerSeries::new([(1, c(0.5, 0.0)), (4, c(0.0, 0.25)), (16, c(0.1, 0.0))]);
        assert!(bloch_certificate(&ps, 64).holds);
    }
}
