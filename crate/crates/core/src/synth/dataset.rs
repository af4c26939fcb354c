use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{write_transcript, Generator, SynthConfig};
use crate::coarse::write_asr_file;
use crate::error::{Error, Result};
use crate::model::{load_match, write_feature_file, write_match_file, MatchRecord};
use crate::seeds::derive_seed;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MATCH_DIR: &str = "matches";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config: SynthConfig,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetManifest {
    pub fn ids(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

pub fn match_file(dir: &Path, id: &str) -> PathBuf {
    dir.join(MATCH_DIR).join(format!("{id}.json"))
}

/// Generates `cfg.num_matches` matches into `dir` (match, feature and
/// transcript files under `matches/`) and writes `manifest.json`.
pub fn write_dataset(dir: impl AsRef<Path>, cfg: &SynthConfig) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    if cfg.num_matches == 0 {
        return Err(Error::Config("num_matches must be at least 1".into()));
    }
    if cfg.num_test + cfg.num_val > cfg.num_matches {
        return Err(Error::Config("split sizes exceed num_matches".into()));
    }
    let gen = Generator::new(cfg.clone())?;
    let match_dir = dir.join(MATCH_DIR);
    fs::create_dir_all(&match_dir).map_err(|e| Error::io(&match_dir, e))?;

    let mut ids = Vec::with_capacity(cfg.num_matches);
    for i in 0..cfg.num_matches {
        let id = format!("m{i:03}");
        let m = gen.generate_match(gen.match_seed(i));
        let mut record = m.record;
        record.match_id = id.clone();
        record.half = 1 + (i % 2) as u8;

        let feature_path = match_dir.join(format!("{id}.alnf"));
        write_feature_file(&feature_path, &record.frames)?;
        record.feature_path = Some(feature_path);
        if cfg.write_transcripts {
            let asr_path = match_dir.join(format!("{id}.asr.json"));
            let transcript = write_transcript(
                &record,
                &m.truth,
                derive_seed(cfg.seed, "transcript", i as u64),
                cfg.filler_per_minute,
            );
            write_asr_file(&asr_path, &transcript)?;
            record.asr_path = Some(asr_path);
        }
        write_match_file(match_file(dir, &id), &record, None)?;
        ids.push(id);
    }

    let n_train = cfg.num_matches - cfg.num_val - cfg.num_test;
    let manifest = DatasetManifest {
        config: cfg.clone(),
        train: ids[..n_train].to_vec(),
        val: ids[n_train..n_train + cfg.num_val].to_vec(),
        test: ids[n_train + cfg.num_val..].to_vec(),
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path,
        match_id: "?".into(),
        message: e.to_string(),
    })
}

/// Loads every match of one split, in manifest order.
pub fn load_split(dir: impl AsRef<Path>, split: Split) -> Result<Vec<MatchRecord>> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    manifest
        .ids(split)
        .iter()
        .map(|id| load_match(match_file(dir, id)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SynthConfig {
        SynthConfig {
            num_matches: 3,
            num_test: 1,
            commentaries_per_match: 5,
            duration_s: 300.0,
            d: 4,
            ..Default::default()
        }
    }

    #[test]
    fn writes_loadable_splits() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_dataset(dir.path(), &tiny()).unwrap();
        assert_eq!(manifest.train, vec!["m000", "m001"]);
        assert_eq!(manifest.test, vec!["m002"]);
        let train = load_split(dir.path(), Split::Train).unwrap();
        assert_eq!(train.len(), 2);
        assert!(train
            .iter()
            .all(|m| m.has_ground_truth() && m.asr_path.is_some()));
        assert_eq!(train[1].half, 2);
    }

    #[test]
    fn zero_matches_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig {
            num_matches: 0,
            num_test: 0,
            ..tiny()
        };
        assert!(matches!(
            write_dataset(dir.path(), &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn default_split_shape() {
        let cfg = SynthConfig::default();
        assert_eq!(cfg.num_matches - cfg.num_test - cfg.num_val, 40);
        assert_eq!(cfg.num_test, 4);
    }
}
