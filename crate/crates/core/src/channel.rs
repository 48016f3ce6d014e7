//! Synthetic body channel: a short tapped delay line with an exponential
//! power profile, a hydration-dependent perturbation of the direct tap,
//! chest-wall breathing modulation, and complex AWGN.
//!
//! Base taps depend only on `(seed, subject_id)`: the geometry between the
//! antennas and a seated subject is the same in every session. The session id
//! keys the transmitted bits and the noise, and the label enters only through
//! the tap-0 perturbation.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ofdm::{Modem, OfdmConfig, TimeFrame};
use crate::rng::{derive_seed, prng_bits, stream_rng};
use crate::{ComplexSample, Error, Label, Result};

const TAG_TAPS: u64 = 0x7441_5053;
const TAG_TX: u64 = 0x7478_4249;
const TAG_NOISE: u64 = 0x6e6f_6973;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Reflection off the chest; breathing modulates the direct tap.
    Chest,
    /// Transmission through the hand; no micro-motion.
    Hand,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::Chest => "chest",
            ScenarioKind::Hand => "hand",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chest" => Ok(ScenarioKind::Chest),
            "hand" => Ok(ScenarioKind::Hand),
            other => Err(Error::Scenario(format!("unknown scenario kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScenario {
    pub kind: ScenarioKind,
    pub hydration_label: Label,
    /// Inter-class channel difference (dimensionless, >= 0).
    pub separation: f64,
    /// Per-frame average SNR; `f64::INFINITY` means noiseless.
    pub snr_db: f64,
    pub n_taps: usize,
    pub breathing_rate_hz: f64,
    pub breathing_depth: f64,
    pub subject_id: u32,
    pub session_id: u32,
    pub seed: u64,
}

impl ChannelScenario {
    pub fn new(kind: ScenarioKind, hydration_label: Label) -> Self {
        Self {
            kind,
            hydration_label,
            separation: 0.2,
            snr_db: 15.0,
            n_taps: 4,
            breathing_rate_hz: 0.25,
            breathing_depth: 0.1,
            subject_id: 0,
            session_id: 0,
            seed: 0,
        }
    }

    pub fn validate(&self, cfg: &OfdmConfig) -> Result<()> {
        if self.n_taps == 0 {
            return Err(Error::Scenario("n_taps must be at least 1".into()));
        }
        if self.n_taps > cfg.cp_len {
            return Err(Error::Scenario(format!(
                "n_taps {} exceeds cyclic prefix length {}",
                self.n_taps, cfg.cp_len
            )));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(Error::Scenario(format!(
                "separation must be finite and >= 0, got {}",
                self.separation
            )));
        }
        if !(0.0..1.0).contains(&self.breathing_depth) {
            return Err(Error::Scenario(format!(
                "breathing_depth must lie in [0, 1), got {}",
                self.breathing_depth
            )));
        }
        if !self.breathing_rate_hz.is_finite() {
            return Err(Error::Scenario("breathing_rate_hz must be finite".into()));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Scenario("snr_db is NaN".into()));
        }
        Ok(())
    }
}

/// Channel impulse response for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<ComplexSample>,
    pub frame_index: u64,
}

impl ChannelRealization {
    pub fn identity(frame_index: u64) -> Self {
        Self {
            taps: vec![ComplexSample::new(1.0, 0.0)],
            frame_index,
        }
    }
}

/// Subject-level taps with power profile `exp(-l/2)`, normalised to unit energy.
pub fn base_taps(scenario: &ChannelScenario) -> Vec<ComplexSample> {
    let mut rng = stream_rng(
        derive_seed(scenario.seed, &[TAG_TAPS, scenario.subject_id as u64]),
        0,
    );
    let mut taps: Vec<ComplexSample> = (0..scenario.n_taps)
        .map(|l| {
            let sd = (0.5 * (-(l as f64) / 2.0).exp()).sqrt();
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            ComplexSample::new(re * sd, im * sd)
        })
        .collect();
    let energy: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
    let scale = 1.0 / energy.sqrt();
    taps.iter_mut().for_each(|t| *t *= scale);
    taps
}

pub fn draw_channel(
    cfg: &OfdmConfig,
    scenario: &ChannelScenario,
    frame_index: u64,
) -> Result<ChannelRealization> {
    scenario.validate(cfg)?;
    let mut taps = base_taps(scenario);
    if scenario.hydration_label == Label::Dehydrated {
        let d = scenario.separation;
        taps[0] *= ComplexSample::from_polar(1.0 - d, d * PI / 4.0);
    }
    if scenario.kind == ScenarioKind::Chest {
        let t = frame_index as f64 / cfg.frames_per_second();
        taps[0] *= 1.0 + scenario.breathing_depth * (2.0 * PI * scenario.breathing_rate_hz * t).sin();
    }
    Ok(ChannelRealization { taps, frame_index })
}

/// Linear convolution of the (CP-extended) frame with the taps, truncated to
/// the frame length, plus complex AWGN at `snr_db` relative to the frame's
/// average received power.
pub fn apply_channel(
    frame: &TimeFrame,
    ch: &ChannelRealization,
    snr_db: f64,
    noise_seed: u64,
) -> TimeFrame {
    let n = frame.samples.len();
    let mut out = vec![ComplexSample::new(0.0, 0.0); n];
    for (i, y) in out.iter_mut().enumerate() {
        for (l, h) in ch.taps.iter().enumerate().take(i + 1) {
            *y += h * frame.samples[i - l];
        }
    }
    if snr_db.is_finite() && n > 0 {
        let power = out.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
        let sd = (power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
        let mut rng = stream_rng(noise_seed, 0);
        for y in out.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *y += ComplexSample::new(re * sd, im * sd);
        }
    }
    TimeFrame {
        samples: out,
        frame_index: frame.frame_index,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    pub tx: TimeFrame,
    pub rx: TimeFrame,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub scenario: ChannelScenario,
    pub frames: Vec<FramePair>,
}

/// Frames emitted for a session of `duration_s` seconds.
pub fn frames_in(cfg: &OfdmConfig, duration_s: f64) -> usize {
    (duration_s * cfg.frames_per_second() + 1e-9).floor() as usize
}

pub fn session_tx_seed(scenario: &ChannelScenario) -> u64 {
    derive_seed(
        scenario.seed,
        &[TAG_TX, scenario.subject_id as u64, scenario.session_id as u64],
    )
}

pub fn frame_noise_seed(scenario: &ChannelScenario, frame_index: u64) -> u64 {
    derive_seed(
        scenario.seed,
        &[
            TAG_NOISE,
            scenario.subject_id as u64,
            scenario.session_id as u64,
            frame_index,
        ],
    )
}

pub fn simulate_session(
    modem: &Modem,
    scenario: &ChannelScenario,
    duration_s: f64,
) -> Result<Session> {
    let cfg = modem.config();
    scenario.validate(cfg)?;
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::Config(format!("duration_s must be > 0, got {duration_s}")));
    }
    let n_frames = frames_in(cfg, duration_s);
    let tx_seed = session_tx_seed(scenario);
    let frames = (0..n_frames as u64)
        .into_par_iter()
        .map(|i| {
            let bits = prng_bits(tx_seed, i, cfg.bits_per_frame);
            let tx = modem.assemble_frame(&bits, i)?;
            let ch = draw_channel(cfg, scenario, i)?;
            let rx = apply_channel(&tx, &ch, scenario.snr_db, frame_noise_seed(scenario, i));
            Ok(FramePair { tx, rx })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Session {
        scenario: scenario.clone(),
        frames,
    })
}

/// Parameters of a recording campaign. Defaults:
/// 5 subjects, 5 sessions per class, 30 s per session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub kind: ScenarioKind,
    pub n_subjects: u32,
    pub sessions_per_class: u32,
    pub duration_s: f64,
    pub separation: f64,
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::Chest,
            n_subjects: 5,
            sessions_per_class: 5,
            duration_s: 30.0,
            separation: 0.2,
            snr_db: 15.0,
            seed: 0,
        }
    }
}

/// Campaign plan: one scenario per session. Sessions are simulated on demand
/// so a full campaign never has to be held in memory at once.
#[derive(Debug, Clone)]
pub struct SessionSet {
    pub cfg: OfdmConfig,
    pub duration_s: f64,
    pub scenarios: Vec<ChannelScenario>,
}

impl SessionSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.scenarios
            .iter()
            .filter(|s| s.hydration_label == label)
            .count()
    }

    pub fn simulate(&self, modem: &Modem, index: usize) -> Result<Session> {
        simulate_session(modem, &self.scenarios[index], self.duration_s)
    }
}

/// Session ids run `0..2*sessions_per_class` within each subject, hydrated first.
pub fn simulate_campaign(cfg: &OfdmConfig, spec: &CampaignSpec) -> Result<SessionSet> {
    cfg.validate()?;
    if spec.n_subjects == 0 || spec.sessions_per_class == 0 {
        return Err(Error::Config("subject and session counts must be positive".into()));
    }
    if !(spec.duration_s.is_finite() && spec.duration_s > 0.0) {
        return Err(Error::Config("duration_s must be > 0".into()));
    }
    let mut scenarios = Vec::new();
    for subject in 0..spec.n_subjects {
        for (li, label) in Label::ALL.into_iter().enumerate() {
            for j in 0..spec.sessions_per_class {
                let scenario = ChannelScenario {
                    separation: spec.separation,
                    snr_db: spec.snr_db,
                    subject_id: subject,
                    session_id: li as u32 * spec.sessions_per_class + j,
                    seed: spec.seed,
                    ..ChannelScenario::new(spec.kind, label)
                };
                scenario.validate(cfg)?;
                scenarios.push(scenario);
            }
        }
    }
    Ok(SessionSet {
        cfg: cfg.clone(),
        duration_s: spec.duration_s,
        scenarios,
    })
}
