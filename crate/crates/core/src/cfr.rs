//! Per-subcarrier channel estimation, `h_i = y_i / x_i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{FramePair, Session};
use crate::ofdm::{Modem, TimeFrame};
use crate::{ComplexSample, Error, Label, Result};

/// Session identity attached to every snapshot and example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SessionMeta {
    pub subject_id: u32,
    pub session_id: u32,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfrSnapshot {
    pub h: Vec<ComplexSample>,
    pub frame_index: u64,
    pub subject_id: u32,
    pub session_id: u32,
    pub label: Label,
}

impl CfrSnapshot {
    pub fn meta(&self) -> SessionMeta {
        SessionMeta {
            subject_id: self.subject_id,
            session_id: self.session_id,
            label: self.label,
        }
    }
}

impl From<&Session> for SessionMeta {
    fn from(s: &Session) -> Self {
        SessionMeta {
            subject_id: s.scenario.subject_id,
            session_id: s.scenario.session_id,
            label: s.scenario.hydration_label,
        }
    }
}

pub fn estimate_cfr(
    modem: &Modem,
    tx: &TimeFrame,
    rx: &TimeFrame,
    meta: SessionMeta,
) -> Result<CfrSnapshot> {
    let x = modem.disassemble_frame(tx)?;
    let y = modem.disassemble_frame(rx)?;
    let mut h = Vec::with_capacity(x.len());
    for (i, (xi, yi)) in x.0.iter().zip(&y.0).enumerate() {
        if xi.norm_sqr() == 0.0 {
            return Err(Error::Estimation {
                frame_index: tx.frame_index,
                reason: format!("transmitted symbol on subcarrier {i} is zero"),
            });
        }
        let hi = yi / xi;
        if !(hi.re.is_finite() && hi.im.is_finite()) {
            return Err(Error::Estimation {
                frame_index: tx.frame_index,
                reason: format!("non-finite estimate on subcarrier {i}"),
            });
        }
        h.push(hi);
    }
    Ok(CfrSnapshot {
        h,
        frame_index: tx.frame_index,
        subject_id: meta.subject_id,
        session_id: meta.session_id,
        label: meta.label,
    })
}

/// One snapshot per frame pair, in order.
pub fn cfr_stream(modem: &Modem, pairs: &[FramePair], meta: SessionMeta) -> Result<Vec<CfrSnapshot>> {
    pairs
        .par_iter()
        .map(|p| {
            estimate_cfr(modem, &p.tx, &p.rx, meta).map_err(|e| match e {
                Error::Estimation { .. } => e,
                other => Error::Estimation {
                    frame_index: p.tx.frame_index,
                    reason: other.to_string(),
                },
            })
        })
        .collect()
}

pub fn session_cfr(modem: &Modem, session: &Session) -> Result<Vec<CfrSnapshot>> {
    cfr_stream(modem, &session.frames, SessionMeta::from(session))
}
