//! OFDM transmitter and receiver.
//!
//! Each frame carries `n_subcarriers` Gray-coded QPSK symbols, one per
//! subcarrier, all of them known to the receiver. The forward DFT is unscaled
//! and the inverse is scaled by `1/N`, so an assembled frame body has unit
//! energy and `h_i = y_i / x_i` needs no further normalisation.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{ComplexSample, Error, Result};

/// Link parameters. Defaults describe a 64-subcarrier, 16-sample-CP QPSK link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub n_subcarriers: usize,
    pub cp_len: usize,
    pub bits_per_frame: usize,
    pub bits_per_symbol: usize,
    /// Metadata only: every subcarrier carries a known symbol.
    pub n_data_subcarriers: usize,
    /// Metadata only.
    pub n_pilot_subcarriers: usize,
    /// Samples per second.
    pub sample_rate: f64,
    /// Hz, metadata only.
    pub center_frequency: f64,
    pub master_seed: u64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            n_subcarriers: 64,
            cp_len: 16,
            bits_per_frame: 128,
            bits_per_symbol: 2,
            n_data_subcarriers: 52,
            n_pilot_subcarriers: 12,
            sample_rate: 20_000.0,
            center_frequency: 5.23e9,
            master_seed: 0,
        }
    }
}

impl OfdmConfig {
    pub fn frame_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }

    /// CFR snapshots per second (250 with the defaults).
    pub fn frames_per_second(&self) -> f64 {
        self.sample_rate / self.frame_len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 {
            return Err(Error::Config("n_subcarriers must be positive".into()));
        }
        if self.bits_per_symbol != 2 {
            return Err(Error::Config(format!(
                "bits_per_symbol must be 2 (QPSK), got {}",
                self.bits_per_symbol
            )));
        }
        if self.bits_per_frame != self.n_subcarriers * self.bits_per_symbol {
            return Err(Error::Config(format!(
                "bits_per_frame {} != n_subcarriers {} x bits_per_symbol {}",
                self.bits_per_frame, self.n_subcarriers, self.bits_per_symbol
            )));
        }
        if self.n_data_subcarriers + self.n_pilot_subcarriers != self.n_subcarriers {
            return Err(Error::Config(format!(
                "data ({}) + pilot ({}) subcarriers != {}",
                self.n_data_subcarriers, self.n_pilot_subcarriers, self.n_subcarriers
            )));
        }
        if self.cp_len > self.n_subcarriers {
            return Err(Error::Config("cp_len longer than the frame body".into()));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Time-domain frame: cyclic prefix followed by the IDFT body.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrame {
    pub samples: Vec<ComplexSample>,
    pub frame_index: u64,
}

/// Frequency-domain values, one per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqSymbolVector(pub Vec<ComplexSample>);

impl FreqSymbolVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Gray-coded QPSK: `(0,0) -> (1+j)/sqrt2`, `(0,1) -> (-1+j)/sqrt2`,
/// `(1,1) -> (-1-j)/sqrt2`, `(1,0) -> (1-j)/sqrt2`.
///
/// The first bit selects the sign of the imaginary part, the second the sign
/// of the real part, so phase-adjacent points differ in one bit. Any nonzero
/// digit is read as 1.
pub fn qpsk_map(b0: u8, b1: u8) -> ComplexSample {
    let re = if b1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    let im = if b0 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    ComplexSample::new(re, im)
}

/// Nearest-point demapping (quadrant decision).
pub fn qpsk_demap(sym: ComplexSample) -> Result<(u8, u8)> {
    if sym.re == 0.0 && sym.im == 0.0 {
        return Err(Error::DemapAmbiguity);
    }
    Ok((u8::from(sym.im < 0.0), u8::from(sym.re < 0.0)))
}

/// Stateless modem with cached FFT plans; cheap to share between threads.
#[derive(Clone)]
pub struct Modem {
    cfg: OfdmConfig,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Modem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modem").field("cfg", &self.cfg).finish()
    }
}

impl Modem {
    pub fn new(cfg: OfdmConfig) -> Result<Self> {
        cfg.validate()?;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(cfg.n_subcarriers);
        let ifft = planner.plan_fft_inverse(cfg.n_subcarriers);
        Ok(Self { cfg, fft, ifft })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    /// Maps bits pairwise onto the subcarriers in index order.
    pub fn map_bits(&self, bits: &[u8]) -> Result<FreqSymbolVector> {
        if bits.len() != self.cfg.bits_per_frame {
            return Err(Error::Config(format!(
                "expected {} bits per frame, got {}",
                self.cfg.bits_per_frame,
                bits.len()
            )));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Config(format!("bit {pos} is not 0 or 1")));
        }
        Ok(FreqSymbolVector(
            bits.chunks_exact(2).map(|p| qpsk_map(p[0], p[1])).collect(),
        ))
    }

    pub fn assemble_frame(&self, bits: &[u8], frame_index: u64) -> Result<TimeFrame> {
        let symbols = self.map_bits(bits)?;
        self.modulate(&symbols, frame_index)
    }

    /// Inverse DFT (scaled `1/N`) of `symbols`, prefixed with the last
    /// `cp_len` body samples.
    pub fn modulate(&self, symbols: &FreqSymbolVector, frame_index: u64) -> Result<TimeFrame> {
        let n = self.cfg.n_subcarriers;
        if symbols.len() != n {
            return Err(Error::FrameFormat(format!(
                "expected {n} symbols, got {}",
                symbols.len()
            )));
        }
        let mut body = symbols.0.clone();
        self.ifft.process(&mut body);
        let scale = 1.0 / n as f64;
        body.iter_mut().for_each(|s| *s *= scale);

        let mut samples = Vec::with_capacity(self.cfg.frame_len());
        samples.extend_from_slice(&body[n - self.cfg.cp_len..]);
        samples.extend_from_slice(&body);
        Ok(TimeFrame {
            samples,
            frame_index,
        })
    }

    /// Strips the cyclic prefix and applies the unscaled forward DFT.
    pub fn disassemble_frame(&self, frame: &TimeFrame) -> Result<FreqSymbolVector> {
        if frame.samples.len() != self.cfg.frame_len() {
            return Err(Error::FrameFormat(format!(
                "frame {} has {} samples, expected {}",
                frame.frame_index,
                frame.samples.len(),
                self.cfg.frame_len()
            )));
        }
        let mut body = frame.samples[self.cfg.cp_len..].to_vec();
        self.fft.process(&mut body);
        Ok(FreqSymbolVector(body))
    }

    /// Demaps every subcarrier of a received frame back to bits.
    pub fn demodulate_bits(&self, frame: &TimeFrame) -> Result<Vec<u8>> {
        let symbols = self.disassemble_frame(frame)?;
        let mut bits = Vec::with_capacity(self.cfg.bits_per_frame);
        for s in symbols.0 {
            let (b0, b1) = qpsk_demap(s)?;
            bits.push(b0);
            bits.push(b1);
        }
        Ok(bits)
    }
}
