//! Robust z-score artifact rejection.

use std::collections::HashMap;

use crate::cfr::{CfrSnapshot, SessionMeta};

/// Scale of the robust standard deviation: `1.4826 x MAD`.
const MAD_TO_SD: f64 = 1.4826;

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub kept: Vec<CfrSnapshot>,
    pub rejected: usize,
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, &mut hi, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        hi
    } else {
        let lo = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Drops every snapshot whose magnitude on any subcarrier lies more than
/// `z_threshold` robust standard deviations from its session's median.
///
/// Sessions are identified by `(subject_id, session_id, label)`; input order
/// is preserved. The robust scale is floored at `1e-9 x (1 + |median|)` so
/// that a noiseless, constant session (MAD = 0) is not rejected on rounding
/// error alone.
pub fn reject_artifacts(snapshots: Vec<CfrSnapshot>, z_threshold: f64) -> Rejection {
    if snapshots.is_empty() || z_threshold.is_infinite() {
        return Rejection {
            kept: snapshots,
            rejected: 0,
        };
    }
    let mut sessions: HashMap<SessionMeta, Vec<usize>> = HashMap::new();
    for (i, s) in snapshots.iter().enumerate() {
        sessions.entry(s.meta()).or_default().push(i);
    }
    let mut keep = vec![true; snapshots.len()];
    for rows in sessions.values() {
        let width = rows.iter().map(|&r| snapshots[r].h.len()).max().unwrap_or(0);
        for k in 0..width {
            let mags: Vec<f64> = rows
                .iter()
                .map(|&r| snapshots[r].h.get(k).map_or(f64::NAN, |h| h.norm()))
                .collect();
            let med = median(&mut mags.clone());
            let mut dev: Vec<f64> = mags.iter().map(|m| (m - med).abs()).collect();
            let scale = (MAD_TO_SD * median(&mut dev)).max(1e-9 * (1.0 + med.abs()));
            for (&r, m) in rows.iter().zip(&mags) {
                // NaN magnitudes fail the comparison and are rejected too.
                let within = (m - med).abs() <= z_threshold * scale;
                if !within {
                    keep[r] = false;
                }
            }
        }
    }
    let before = snapshots.len();
    let kept: Vec<CfrSnapshot> = snapshots
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect();
    Rejection {
        rejected: before - kept.len(),
        kept,
    }
}
