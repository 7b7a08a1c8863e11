use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beltrami::{s_sharp, StripCoefficient};
use crate::bloch::beta_integral_means;
use crate::{Error, Result, SpectrumEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureRow {
    pub t: f64,
    pub beta: f64,
    /// `β(t) / (t²/4)`.
    pub curvature: f64,
    pub estimate: SpectrumEstimate,
}

/// `β_F(t) / (t²/4)` for the disk function `F` with `S#μ = F ∘ e^{2πi·}`,
/// from the integral means ladder at radii `1 - 2^{-j}`.
pub fn b0_curvature(mu: &StripCoefficient, t: f64, js: &[u32]) -> Result<CurvatureRow> {
    if !(t > 0.0 && t <= 0.3) {
        return Err(Error::InvalidParameter(format!("t = {t} outside (0, 0.3]")));
    }
    let jmax = js.iter().copied().max().unwrap_or(0);
    // modes up to m with e^{-m 2^{-jmax}} < e^{-45}
    let need = 45.0 * (jmax as f64).exp2();
    let p = mu.base() as f64;
    let levels = (need.ln() / p.ln()).ceil().max(1.0) as u32;
    let f = s_sharp(mu, levels)?;
    let estimate = beta_integral_means(&f, Complex64::new(t, 0.0), js, None)?;
    let beta = estimate.limit;
    Ok(CurvatureRow { t, beta, curvature: beta / (t * t / 4.0), estimate })
}
