//! Scale ladders of estimates with an extrapolated limit.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::{Error, Result};

/// A sequence of `(scale, value)` pairs for a limsup-type quantity.
///
/// `limit` is the extrapolated value. For ratio estimators `N(s)/D(s)` it is
/// the least-squares slope of `N` against `D` over the deeper half of the
/// ladder, which removes the `O(1)` offsets that make the raw ratios converge
/// like `1/log(1/(1-r))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub method: String,
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub limit: f64,
    pub error_bar: f64,
    /// Maximum of `values` over the deepest quartile of the ladder.
    pub quartile_max: f64,
}

impl SpectrumEstimate {
    /// Ladder whose limit is simply the deepest value.
    pub fn from_values(method: &str, scales: Vec<f64>, values: Vec<f64>, errors: Vec<f64>) -> Result<Self> {
        check_ladder(&scales, &values, &errors)?;
        let limit = values.last().copied().unwrap_or(0.0);
        let quartile_max = quartile_max(&values);
        let error_bar = errors.last().copied().unwrap_or(0.0).abs();
        Ok(Self {
            method: method.to_string(),
            scales,
            values,
            errors,
            limit,
            error_bar,
            quartile_max,
        })
    }

    /// Ladder of ratios `numerators[i] / normalizers[i]`, extrapolated by the
    /// slope of numerator against normalizer over the deeper half.
    pub fn from_ratios(
        method: &str,
        scales: Vec<f64>,
        numerators: &[f64],
        normalizers: &[f64],
        errors: Vec<f64>,
    ) -> Result<Self> {
        if numerators.len() != normalizers.len() {
            return Err(Error::InvalidParameter("numerator/normalizer length mismatch".into()));
        }
        let values: Vec<f64> = numerators
            .iter()
            .zip(normalizers)
            .map(|(n, d)| if *d == 0.0 { 0.0 } else { n / d })
            .collect();
        check_ladder(&scales, &values, &errors)?;
        let k = values.len();
        let (limit, error_bar) = if k >= 3 {
            let start = k / 2;
            let (slope, se) = least_squares_slope(&normalizers[start..], &numerators[start..]);
            let q = (3 * k) / 4;
            let deep = if k - q >= 2 {
                least_squares_slope(&normalizers[q..], &numerators[q..]).0
            } else {
                slope
            };
            (slope, se + (slope - deep).abs())
        } else {
            let last = values.last().copied().unwrap_or(0.0);
            (last, errors.last().copied().unwrap_or(0.0).abs())
        };
        let quartile_max = quartile_max(&values);
        Ok(Self {
            method: method.to_string(),
            scales,
            values,
            errors,
            limit,
            error_bar,
            quartile_max,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// CSV with header `scale_index,scale,value,error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scale_index,scale,value,error\n");
        for (i, ((s, v), e)) in self.scales.iter().zip(&self.values).zip(&self.errors).enumerate() {
            let _ = writeln!(out, "{i},{},{},{}", fmt17(*s), fmt17(*v), fmt17(*e));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum estimate serializes")
    }
}

/// Decimal with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_ladder(scales: &[f64], values: &[f64], errors: &[f64]) -> Result<()> {
    if scales.len() != values.len() || values.len() != errors.len() {
        return Err(Error::InvalidParameter("ladder arrays differ in length".into()));
    }
    let increasing = scales.windows(2).all(|w| w[1] > w[0]);
    let decreasing = scales.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::InvalidParameter("scales must be strictly monotone".into()));
    }
    if errors.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::InvalidParameter("error bars must be nonnegative".into()));
    }
    Ok(())
}

fn quartile_max(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let start = (3 * values.len()) / 4;
    values[start.min(values.len() - 1)..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Slope of the least-squares line through `(x, y)` and its standard error.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return (0.0, 0.0);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if x.len() > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, se)
}
