use std::fs;
use std::path::{Path, PathBuf};

use crate::eval::{baseline_table, CvReport};
use crate::{Error, Result};

fn pct(v: f64) -> String {
    format!("{v:.4}")
}

/// `variant,mean_accuracy,pooled_accuracy,fold_1..fold_K`, one row per report.
pub fn accuracy_csv(reports: &[CvReport]) -> String {
    let k = reports.iter().map(|r| r.fold_accuracies.len()).max().unwrap_or(0);
    let mut out = String::from("variant,mean_accuracy,pooled_accuracy");
    for f in 1..=k {
        out.push_str(&format!(",fold_{f}"));
    }
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{}",
            r.variant,
            pct(r.mean_accuracy),
            pct(r.pooled_accuracy)
        ));
        for a in &r.fold_accuracies {
            out.push(',');
            out.push_str(&pct(*a));
        }
        out.push('\n');
    }
    out
}

pub fn confusion_csv(reports: &[CvReport]) -> String {
    let mut out = String::from("variant,tp,tn,fp,fn\n");
    for r in reports {
        let c = r.pooled;
        out.push_str(&format!("{},{},{},{},{}\n", r.variant, c.tp, c.tn, c.fp, c.fn_));
    }
    out
}

/// Published figures followed by this run's pooled accuracies.
pub fn comparison_csv(reports: &[CvReport]) -> String {
    let mut out = String::from("source,name,contact,accuracy\n");
    for b in baseline_table() {
        out.push_str(&format!("published,{},{},{}\n", b.work, b.contact, pct(b.accuracy)));
    }
    for r in reports {
        out.push_str(&format!("measured,{},false,{}\n", r.variant, pct(r.pooled_accuracy)));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportPaths {
    pub accuracy: PathBuf,
    pub confusion: PathBuf,
    pub comparison: PathBuf,
}

/// Writes `PREFIX_accuracy.csv`, `PREFIX_confusion.csv` and
/// `PREFIX_comparison.csv`.
pub fn write_report(reports: &[CvReport], prefix: &Path) -> Result<ReportPaths> {
    let with = |suffix: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    let paths = ReportPaths {
        accuracy: with("_accuracy.csv"),
        confusion: with("_confusion.csv"),
        comparison: with("_comparison.csv"),
    };
    for (p, text) in [
        (&paths.accuracy, accuracy_csv(reports)),
        (&paths.confusion, confusion_csv(reports)),
        (&paths.comparison, comparison_csv(reports)),
    ] {
        fs::write(p, text).map_err(|e| Error::io(p, e))?;
    }
    Ok(paths)
}
