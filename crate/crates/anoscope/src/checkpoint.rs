//! Model persistence. Checkpoints are self-describing JSON: a format tag,
//! a version, the model family, and the serde tree of the fitted model.
//! f64 values round-trip exactly (shortest-representation encoding), so a
//! reloaded model scores bit-identically.

use crate::detector::DetectorModel;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

const FORMAT: &str = "anoscope-checkpoint";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    family: String,
    model: DetectorModel,
}

pub fn save_model(path: &Path, model: &DetectorModel) -> Result<()> {
    let cp = Checkpoint {
        format: FORMAT.to_string(),
        version: VERSION,
        family: model.family_name().to_string(),
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&cp)
        .map_err(|e| Error::CheckpointFormat(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<DetectorModel> {
    let text = fs::read_to_string(path).map_err(|source| Error::MissingFile {
        path: path.display().to_string(),
        source,
    })?;
    let cp: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::CheckpointFormat(e.to_string()))?;
    if cp.format != FORMAT {
        return Err(Error::CheckpointFormat(format!(
            "unexpected format tag {:?}",
            cp.format
        )));
    }
    if cp.version != VERSION {
        return Err(Error::CheckpointFormat(format!(
            "unsupported version {}",
            cp.version
        )));
    }
    let mut model = cp.model;
    model.refresh_cache()?;
    Ok(model)
}
