use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::TrainedModel;
use crate::{Error, Result, TOOL_VERSION};

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u64,
    tool_version: String,
    model: TrainedModel,
}

/// JSON with shortest round-trip floats, so reloaded models predict
/// identically.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        model: model.clone(),
    };
    let text = serde_json::to_string(&file)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Schema("format_version".into()))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(value)?;
    Ok(file.model)
}
