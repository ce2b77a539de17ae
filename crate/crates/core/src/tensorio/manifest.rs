use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_tensor, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Image,
    Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestItem {
    pub path: String,
    pub kind: ItemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<u32>,
    pub shape: Vec<usize>,
}

/// A list of tensor files, with paths relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: i64,
    pub items: Vec<ManifestItem>,
    #[serde(skip)]
    root: PathBuf,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, items: Vec<ManifestItem>) -> Self {
        DatasetManifest {
            version: 1,
            items,
            root: root.into(),
        }
    }

    /// Directory the item paths are relative to.
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn resolve(&self, item: &ManifestItem) -> PathBuf {
        self.root.join(&item.path)
    }

    /// Reads one item, checking it against the shape recorded in the manifest.
    pub fn load(&self, item: &ManifestItem) -> Result<Tensor> {
        let path = self.resolve(item);
        let t = read_tensor(&path)?;
        if t.shape() != item.shape.as_slice() {
            return Err(Error::Manifest {
                path,
                reason: format!(
                    "file has shape {:?} but manifest says {:?}",
                    t.shape(),
                    item.shape
                ),
            });
        }
        Ok(t)
    }

    /// Reads every item in manifest order.
    pub fn load_all(&self) -> Result<Vec<Tensor>> {
        self.items.iter().map(|item| self.load(item)).collect()
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("version").and_then(serde_json::Value::as_i64) {
        Some(1) => {}
        Some(v) => return Err(Error::Version(v)),
        None => {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                reason: "missing integer 'version'".into(),
            })
        }
    }
    let mut manifest: DatasetManifest = serde_json::from_value(value)?;
    manifest.root = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();

    for item in &manifest.items {
        let bad = |reason: &str| Error::Manifest {
            path: PathBuf::from(&item.path),
            reason: reason.into(),
        };
        if Path::new(&item.path).is_absolute() {
            return Err(bad("path must be relative to the manifest directory"));
        }
        match (item.kind, item.layer) {
            (ItemKind::Activation, None) => return Err(bad("activation entry needs a layer")),
            (ItemKind::Image, Some(_)) => return Err(bad("image entry must not carry a layer")),
            _ => {}
        }
        if !(2..=4).contains(&item.shape.len()) || item.shape.contains(&0) {
            return Err(bad("shape must have 2 to 4 positive dimensions"));
        }
        if !manifest.resolve(item).is_file() {
            return Err(bad("file does not exist"));
        }
    }
    Ok(manifest)
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
