use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use spectral_stats::tensorio::{load_manifest, read_tensor, ItemKind};
use spectral_stats::Tensor;

use crate::InputArgs;

/// Rank-2 planes of a manifest or `.npy` input. Stacked tensors contribute
/// every channel (and every batch entry) as a separate plane.
pub fn load_planes(args: &InputArgs) -> Result<Vec<Tensor>> {
    let path = &args.input;
    let tensors = if path.extension().is_some_and(|e| e == "json") {
        let manifest = load_manifest(path)?;
        let mut out = Vec::new();
        for item in &manifest.items {
            let selected = match args.layer {
                Some(layer) => item.kind == ItemKind::Activation && item.layer == Some(layer),
                None => true,
            };
            if selected {
                out.push(manifest.load(item)?);
            }
        }
        out
    } else {
        if args.layer.is_some() {
            bail!(crate::UsageError("--layer needs a manifest input".into()));
        }
        vec![read_tensor(path).with_context(|| format!("reading {}", path.display()))?]
    };
    let planes: Vec<Tensor> = tensors.iter().flat_map(|t| t.planes()).collect();
    if planes.is_empty() {
        bail!("{} selects no tensors", path.display());
    }
    Ok(planes)
}

/// Two-column `ln k  ln value` blocks separated by blank lines, one per series.
pub fn plot_blocks(series: Vec<(String, Vec<(f64, f64)>)>) -> Vec<u8> {
    let mut text = String::new();
    for (i, (label, points)) in series.into_iter().enumerate() {
        if i > 0 {
            text.push_str("\n\n");
        }
        writeln!(text, "# {label}").unwrap();
        for (x, y) in points {
            writeln!(text, "{x} {y}").unwrap();
        }
    }
    text.into_bytes()
}

pub fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes every file through a temporary sibling and renames only once all
/// of them have been written, so a failure leaves no partial output.
pub fn write_outputs(files: &[(&Path, Vec<u8>)]) -> Result<()> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)
            .with_context(|| format!("creating a temporary file next to {}", path.display()))?;
        tmp.write_all(bytes)?;
        tmp.flush()?;
        staged.push((tmp, *path));
    }
    for (tmp, path) in staged {
        tmp.persist(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
