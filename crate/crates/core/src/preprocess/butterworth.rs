//! Butterworth low-pass design by bilinear transform, realised as cascaded
//! second-order sections and applied forward-backward.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::FilterSpec;
use crate::{Error, Result};

/// One second-order section, `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Transposed direct-form-II state for a constant unit input.
    fn steady_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[2] * g;
        let z1 = self.b[1] - self.a[1] * g + z2;
        [z1, z2]
    }
}

/// Digital Butterworth low-pass of the given order with unit DC gain.
pub fn butterworth_lowpass(order: usize, cutoff_hz: f64, rate_hz: f64) -> Result<Vec<Biquad>> {
    if order == 0 {
        return Err(Error::FilterSpec("order must be >= 1".into()));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < rate_hz / 2.0) {
        return Err(Error::FilterSpec(format!(
            "cutoff {cutoff_hz} Hz is not below the Nyquist frequency {}",
            rate_hz / 2.0
        )));
    }
    // Pre-warped analog cutoff for the bilinear map z = (1 + s) / (1 - s).
    let warped = (PI * cutoff_hz / rate_hz).tan();
    let n = order as f64;
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for k in 0..order / 2 {
        let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
        let s = Complex64::from_polar(warped, theta);
        let z = (1.0 + s) / (1.0 - s);
        let a = [1.0, -2.0 * z.re, z.norm_sqr()];
        let g = a.iter().sum::<f64>() / 4.0;
        sections.push(Biquad {
            b: [g, 2.0 * g, g],
            a,
        });
    }
    if order % 2 == 1 {
        let z = (1.0 - warped) / (1.0 + warped);
        let g = (1.0 - z) / 2.0;
        sections.push(Biquad {
            b: [g, g, 0.0],
            a: [1.0, -z, 0.0],
        });
    }
    Ok(sections)
}

/// Causal filtering through the cascade, optionally from initial states.
pub fn sosfilt(sections: &[Biquad], x: &[f64], zi: Option<&[[f64; 2]]>) -> Vec<f64> {
    let mut state: Vec<[f64; 2]> = match zi {
        Some(z) => z.to_vec(),
        None => vec![[0.0; 2]; sections.len()],
    };
    x.iter()
        .map(|&v| {
            let mut u = v;
            for (s, z) in sections.iter().zip(state.iter_mut()) {
                let y = s.b[0] * u + z[0];
                z[0] = s.b[1] * u - s.a[1] * y + z[1];
                z[1] = s.b[2] * u - s.a[2] * y;
                u = y;
            }
            u
        })
        .collect()
}

fn scaled_steady_state(sections: &[Biquad], level: f64) -> Vec<[f64; 2]> {
    let mut gain = level;
    sections
        .iter()
        .map(|s| {
            let [z1, z2] = s.steady_state();
            let out = [z1 * gain, z2 * gain];
            gain *= s.dc_gain();
            out
        })
        .collect()
}

/// Zero-phase filtering: odd extension at both ends, steady-state initial
/// conditions, forward pass, backward pass.
pub fn sosfiltfilt(sections: &[Biquad], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let padlen = (3 * (2 * sections.len() + 1)).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * padlen);
    ext.extend((1..=padlen).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=padlen).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let zi = scaled_steady_state(sections, ext[0]);
    let mut y = sosfilt(sections, &ext, Some(&zi));
    y.reverse();
    let zi = scaled_steady_state(sections, y[0]);
    let mut y = sosfilt(sections, &y, Some(&zi));
    y.reverse();
    y[padlen..padlen + n].to_vec()
}

/// Zero-phase Butterworth low-pass of `series` sampled at `rate_hz`.
pub fn lowpass_filter(series: &[f64], spec: &FilterSpec, rate_hz: f64) -> Result<Vec<f64>> {
    spec.validate_lowpass(rate_hz)?;
    let min_len = 3 * spec.lowpass_order;
    if series.len() < min_len {
        return Err(Error::FilterSpec(format!(
            "series of length {} is shorter than 3 x order = {min_len}",
            series.len()
        )));
    }
    let sections = butterworth_lowpass(spec.lowpass_order, spec.lowpass_cutoff_hz, rate_hz)?;
    Ok(sosfiltfilt(&sections, series))
}
