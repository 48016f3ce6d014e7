use serde::{Deserialize, Serialize};

use super::{lowpass_filter, savgol_filter, FilterSpec};
use crate::cfr::{CfrSnapshot, SessionMeta};
use crate::{Error, Label, Result};

/// One classifier input: windowed mean of filtered per-subcarrier magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: Label,
    pub subject_id: u32,
    pub session_id: u32,
    pub window_index: u32,
}

impl LabeledExample {
    pub fn meta(&self) -> SessionMeta {
        SessionMeta {
            subject_id: self.subject_id,
            session_id: self.session_id,
            label: self.label,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Featurized {
    pub examples: Vec<LabeledExample>,
    /// Sessions that produced no example because they were shorter than a window.
    pub short_sessions: usize,
}

/// Filters each session's magnitude series and averages it over
/// non-overlapping windows of `window_frames` snapshots. A trailing partial
/// window is dropped. Sessions are processed in order of first appearance.
pub fn featurize(
    snapshots: &[CfrSnapshot],
    spec: &FilterSpec,
    rate_hz: f64,
    window_frames: usize,
) -> Result<Featurized> {
    if window_frames == 0 {
        return Err(Error::Config("window_frames must be >= 1".into()));
    }
    let mut order: Vec<SessionMeta> = Vec::new();
    let mut rows: std::collections::HashMap<SessionMeta, Vec<&CfrSnapshot>> = Default::default();
    for s in snapshots {
        let meta = s.meta();
        rows.entry(meta)
            .or_insert_with(|| {
                order.push(meta);
                Vec::new()
            })
            .push(s);
    }

    let mut out = Featurized {
        examples: Vec::new(),
        short_sessions: 0,
    };
    for meta in order {
        let session = &rows[&meta];
        let len = session.len();
        if len < window_frames {
            log::warn!(
                "session (subject {}, session {}) has {len} snapshots, fewer than one window of {window_frames}",
                meta.subject_id,
                meta.session_id
            );
            out.short_sessions += 1;
            continue;
        }
        let width = session[0].h.len();
        if session.iter().any(|s| s.h.len() != width) {
            return Err(Error::Input(format!(
                "session {} mixes CFR widths",
                meta.session_id
            )));
        }
        let filtered: Vec<Vec<f64>> = (0..width)
            .map(|k| {
                let series: Vec<f64> = session.iter().map(|s| s.h[k].norm()).collect();
                let smooth = lowpass_filter(&series, spec, rate_hz)?;
                savgol_filter(&smooth, spec)
            })
            .collect::<Result<_>>()?;
        for w in 0..len / window_frames {
            let range = w * window_frames..(w + 1) * window_frames;
            let features = filtered
                .iter()
                .map(|series| series[range.clone()].iter().sum::<f64>() / window_frames as f64)
                .collect();
            out.examples.push(LabeledExample {
                features,
                label: meta.label,
                subject_id: meta.subject_id,
                session_id: meta.session_id,
                window_index: w as u32,
            });
        }
    }
    Ok(out)
}
