//! Savitzky-Golay smoothing.

use nalgebra::DMatrix;

use super::FilterSpec;
use crate::{Error, Result};

/// Smoothing (zeroth-derivative) convolution coefficients for a centred
/// window: the first row of the least-squares pseudo-inverse of the local
/// Vandermonde matrix.
pub fn savgol_coefficients(window: usize, polyorder: usize) -> Result<Vec<f64>> {
    let spec = FilterSpec {
        savgol_window: window,
        savgol_polyorder: polyorder,
        ..FilterSpec::default()
    };
    spec.validate_savgol()?;
    let half = (window / 2) as f64;
    let scale = if half > 0.0 { half } else { 1.0 };
    // Abscissae scaled to [-1, 1] keep the normal equations well conditioned;
    // the constant-term row is unaffected by the scaling.
    let a = DMatrix::from_fn(window, polyorder + 1, |i, j| {
        ((i as f64 - half) / scale).powi(j as i32)
    });
    let ata = a.transpose() * &a;
    let chol = ata
        .cholesky()
        .ok_or_else(|| Error::FilterSpec("singular Savitzky-Golay normal equations".into()))?;
    let pinv = chol.solve(&a.transpose());
    Ok(pinv.row(0).iter().copied().collect())
}

/// Local polynomial smoothing with mirror padding (`x[k], .., x[1]` on the
/// left; symmetric on the right).
pub fn savgol_filter(series: &[f64], spec: &FilterSpec) -> Result<Vec<f64>> {
    spec.validate_savgol()?;
    let w = spec.savgol_window;
    if series.len() < w {
        return Err(Error::FilterSpec(format!(
            "series of length {} is shorter than the window {w}",
            series.len()
        )));
    }
    let coeffs = savgol_coefficients(w, spec.savgol_polyorder)?;
    let half = w / 2;
    let n = series.len();
    let at = |i: isize| -> f64 {
        let j = if i < 0 {
            (-i) as usize
        } else if i as usize >= n {
            2 * (n - 1) - i as usize
        } else {
            i as usize
        };
        series[j]
    };
    Ok((0..n as isize)
        .map(|i| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * at(i + k as isize - half as isize))
                .sum()
        })
        .collect())
}
