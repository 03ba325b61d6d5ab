use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pngio::{read_label_png, write_label_png};
use super::write_atomic;
use crate::error::{Error, Result};
use crate::maskgeom::LabelRaster;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Index of an exported pseudo-label set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config_fingerprint: String,
    /// Image id to PNG file name, relative to the manifest.
    pub images: BTreeMap<String, String>,
}

/// Writes one 8-bit grayscale PNG per raster plus `manifest.json`.
pub fn export_pseudo_labels<'a>(
    rasters: impl IntoIterator<Item = (&'a str, &'a LabelRaster)>,
    out_dir: &Path,
    config_fingerprint: &str,
) -> Result<Manifest> {
    let mut images = BTreeMap::new();
    for (id, raster) in rasters {
        if id.is_empty() || id.starts_with('.') || id.contains(['/', '\\']) {
            return Err(Error::Dataset(format!("image id {id:?} is not usable as a file name")));
        }
        let file = format!("{id}.png");
        write_label_png(raster, &out_dir.join(&file))?;
        if images.insert(id.to_string(), file).is_some() {
            return Err(Error::Dataset(format!("duplicate image id {id:?} in export")));
        }
    }
    let manifest = Manifest {
        config_fingerprint: config_fingerprint.to_string(),
        images,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_atomic(&out_dir.join(MANIFEST_FILE), &bytes)?;
    Ok(manifest)
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Malformed {
        path,
        message: e.to_string(),
    })
}

/// Reads back an exported set, in image id order.
pub fn load_pseudo_labels(dir: &Path) -> Result<(Manifest, Vec<(String, LabelRaster)>)> {
    let manifest = load_manifest(dir)?;
    let rasters = manifest
        .images
        .iter()
        .map(|(id, file)| Ok((id.clone(), read_label_png(&dir.join(file))?)))
        .collect::<Result<_>>()?;
    Ok((manifest, rasters))
}
