//! CFR denoising, artifact rejection and featurisation.
//!
//! Each per-subcarrier magnitude series is low-pass filtered (zero-phase
//! Butterworth), smoothed with a Savitzky-Golay filter, and averaged over
//! non-overlapping windows to give one 64-dimensional example per window.

mod artifacts;
mod butterworth;
mod features;
mod savgol;
mod standardize;

pub use artifacts::{reject_artifacts, Rejection};
pub use butterworth::{butterworth_lowpass, lowpass_filter, sosfilt, sosfiltfilt, Biquad};
pub use features::{featurize, Featurized, LabeledExample};
pub use savgol::{savgol_coefficients, savgol_filter};
pub use standardize::Standardizer;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub lowpass_order: usize,
    /// Cutoff in Hz relative to the CFR snapshot rate.
    pub lowpass_cutoff_hz: f64,
    pub savgol_window: usize,
    pub savgol_polyorder: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            lowpass_order: 4,
            lowpass_cutoff_hz: 5.0,
            savgol_window: 11,
            savgol_polyorder: 3,
        }
    }
}

impl FilterSpec {
    pub fn validate_lowpass(&self, rate_hz: f64) -> Result<()> {
        if self.lowpass_order == 0 {
            return Err(Error::FilterSpec("low-pass order must be >= 1".into()));
        }
        if !(self.lowpass_cutoff_hz > 0.0 && self.lowpass_cutoff_hz < rate_hz / 2.0) {
            return Err(Error::FilterSpec(format!(
                "cutoff {} Hz must lie in (0, {}) for rate {} Hz",
                self.lowpass_cutoff_hz,
                rate_hz / 2.0,
                rate_hz
            )));
        }
        Ok(())
    }

    pub fn validate_savgol(&self) -> Result<()> {
        if self.savgol_window.is_multiple_of(2) {
            return Err(Error::FilterSpec(format!(
                "Savitzky-Golay window must be odd, got {}",
                self.savgol_window
            )));
        }
        if self.savgol_polyorder >= self.savgol_window {
            return Err(Error::FilterSpec(format!(
                "polyorder {} must be below window {}",
                self.savgol_polyorder, self.savgol_window
            )));
        }
        Ok(())
    }
}
