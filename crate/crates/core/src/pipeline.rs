//! Campaign simulation through to labelled examples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfr::{session_cfr, CfrSnapshot};
use crate::channel::{simulate_campaign, CampaignSpec};
use crate::ofdm::{Modem, OfdmConfig};
use crate::preprocess::{featurize, reject_artifacts, Featurized, FilterSpec, LabeledExample};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSettings {
    pub filter: FilterSpec,
    pub window_frames: usize,
    pub z_threshold: f64,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            filter: FilterSpec::default(),
            window_frames: 125,
            z_threshold: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub examples: Vec<LabeledExample>,
    pub rejected_frames: usize,
    pub short_sessions: usize,
}

/// Artifact rejection followed by featurisation. Returns the examples and
/// the number of rejected snapshots.
pub fn snapshots_to_examples(
    snapshots: Vec<CfrSnapshot>,
    settings: &FeatureSettings,
    rate_hz: f64,
) -> Result<(Featurized, usize)> {
    let r = reject_artifacts(snapshots, settings.z_threshold);
    let f = featurize(&r.kept, &settings.filter, rate_hz, settings.window_frames)?;
    Ok((f, r.rejected))
}

/// Simulates every session of the campaign, estimates its CFR stream,
/// rejects artifacts and featurises it. Sessions run in parallel and are
/// concatenated in campaign order, so the output is deterministic.
pub fn campaign_examples(
    cfg: &OfdmConfig,
    campaign: &CampaignSpec,
    settings: &FeatureSettings,
) -> Result<PipelineOutput> {
    let modem = Modem::new(cfg.clone())?;
    let plan = simulate_campaign(cfg, campaign)?;
    let rate = cfg.frames_per_second();
    let per_session = (0..plan.len())
        .into_par_iter()
        .map(|i| {
            let session = plan.simulate(&modem, i)?;
            let snaps = session_cfr(&modem, &session)?;
            drop(session);
            snapshots_to_examples(snaps, settings, rate)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = PipelineOutput {
        examples: Vec::new(),
        rejected_frames: 0,
        short_sessions: 0,
    };
    for (f, rejected) in per_session {
        out.examples.extend(f.examples);
        out.short_sessions += f.short_sessions;
        out.rejected_frames += rejected;
    }
    Ok(out)
}
