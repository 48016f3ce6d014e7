//! On-disk formats: CFR and example CSVs, run manifests, report CSVs and
//! model files.
//!
//! CSVs are UTF-8 with LF line endings. Reals are written in scientific
//! notation with 9 significant digits, so a round trip is exact to about
//! 5e-9 relative.

mod manifest;
mod model;
mod report;
mod tables;

pub use manifest::{
    hash_file, read_manifest, verify_manifest, write_manifest, FileRecord, RunManifest,
    MANIFEST_SCHEMA_VERSION,
};
pub use model::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use report::{
    accuracy_csv, comparison_csv, confusion_csv, write_report, ReportPaths,
};
pub use tables::{
    cfr_header, examples_header, format_real, read_cfr_csv, read_examples_csv, write_cfr_csv,
    write_examples_csv,
};
