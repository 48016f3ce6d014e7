use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{CampaignSpec, ChannelScenario};
use crate::classifiers::ModelSpec;
use crate::ofdm::OfdmConfig;
use crate::preprocess::FilterSpec;
use crate::{Error, Result, TOOL_VERSION};

pub const MANIFEST_SCHEMA_VERSION: u64 = 1;

/// One emitted file: path relative to the manifest's directory and its
/// SHA-256 digest in lowercase hex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything needed to reproduce a run. Maps are ordered, so the JSON key
/// order is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u64,
    pub tool_version: String,
    pub command: String,
    pub created_unix_s: u64,
    pub ofdm: Option<OfdmConfig>,
    pub campaign: Option<CampaignSpec>,
    pub scenarios: Vec<ChannelScenario>,
    pub filter: Option<FilterSpec>,
    pub models: Vec<ModelSpec>,
    pub seeds: BTreeMap<String, u64>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub files: Vec<FileRecord>,
}

const REQUIRED_KEYS: [&str; 12] = [
    "schema_version",
    "tool_version",
    "command",
    "created_unix_s",
    "ofdm",
    "campaign",
    "scenarios",
    "filter",
    "models",
    "seeds",
    "parameters",
    "files",
];

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let created_unix_s = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            created_unix_s,
            ofdm: None,
            campaign: None,
            scenarios: Vec::new(),
            filter: None,
            models: Vec::new(),
            seeds: BTreeMap::new(),
            parameters: BTreeMap::new(),
            files: Vec::new(),
        }
    }

    /// Hashes `dir/relative` and appends it to the file list.
    pub fn add_file(&mut self, dir: &Path, relative: &str) -> Result<()> {
        let path = dir.join(relative);
        let (sha256, bytes) = hash_file(&path)?;
        self.files.push(FileRecord {
            path: relative.to_string(),
            sha256,
            bytes,
        });
        Ok(())
    }
}

pub fn hash_file(path: &Path) -> Result<(String, u64)> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&data)), data.len() as u64))
}

pub fn write_manifest(manifest: &RunManifest, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Schema("schema_version".into()))?;
    let version = obj
        .get("schema_version")
        .ok_or_else(|| Error::Schema("schema_version".into()))?
        .as_u64()
        .ok_or_else(|| Error::Schema("schema_version".into()))?;
    if version != MANIFEST_SCHEMA_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MANIFEST_SCHEMA_VERSION,
        });
    }
    if let Some(missing) = REQUIRED_KEYS.iter().find(|k| !obj.contains_key(**k)) {
        return Err(Error::Schema(missing.to_string()));
    }
    Ok(serde_json::from_value(value)?)
}

/// Re-hashes every listed file relative to `dir`.
pub fn verify_manifest(manifest: &RunManifest, dir: &Path) -> Result<()> {
    for f in &manifest.files {
        let path = dir.join(&f.path);
        let (found, _) = hash_file(&path)?;
        if found != f.sha256 {
            return Err(Error::HashMismatch {
                path,
                expected: f.sha256.clone(),
                found,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::Variant;

    fn sample(dir: &Path) -> RunManifest {
        fs::write(dir.join("data.csv"), "a,b\n1,2\n").unwrap();
        let mut m = RunManifest::new("simulate");
        m.ofdm = Some(OfdmConfig::default());
        m.campaign = Some(CampaignSpec::default());
        m.filter = Some(FilterSpec::default());
        m.models.push(ModelSpec::new(Variant::SvmCubic, 3));
        m.seeds.insert("master".into(), 42);
        m.parameters.insert("window_frames".into(), 125.into());
        m.add_file(dir, "data.csv").unwrap();
        m
    }

    #[test]
    fn round_trip_is_equal() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample(dir.path());
        let p = dir.path().join("manifest.json");
        write_manifest(&m, &p).unwrap();
        assert_eq!(read_manifest(&p).unwrap(), m);
        verify_manifest(&m, dir.path()).unwrap();
    }

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            hash_file(&p).unwrap().0,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample(dir.path());
        fs::write(dir.path().join("data.csv"), "a,b\n1,3\n").unwrap();
        match verify_manifest(&m, dir.path()) {
            Err(Error::HashMismatch { path, .. }) => assert!(path.ends_with("data.csv")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_key_and_version_errors() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample(dir.path());
        let p = dir.path().join("manifest.json");
        let mut v = serde_json::to_value(&m).unwrap();
        v.as_object_mut().unwrap().remove("files");
        fs::write(&p, v.to_string()).unwrap();
        assert!(matches!(read_manifest(&p), Err(Error::Schema(k)) if k == "files"));

        let mut v = serde_json::to_value(&m).unwrap();
        v["schema_version"] = 99.into();
        fs::write(&p, v.to_string()).unwrap();
        assert!(matches!(
            read_manifest(&p),
            Err(Error::Version { found: 99, expected: 1 })
        ));
    }

    #[test]
    fn writer_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample(dir.path());
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        write_manifest(&m, &a).unwrap();
        write_manifest(&m, &b).unwrap();
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    }
}
