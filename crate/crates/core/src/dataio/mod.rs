//! Dataset ingestion, class tables, the interchange store, pseudo-label
//! export, result caching and config files.

mod cache;
mod classes;
mod config_file;
mod dataset;
mod export;
mod interchange;
mod pngio;

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

pub use cache::ResultCache;
pub use classes::{ClassEntry, ClassTable};
pub use config_file::{ConfigFile, NoiseSection, RunSection};
pub use dataset::{
    load_dataset, rasterize_polygons, write_voc_like, DatasetFormat, DatasetIndex, GroundTruth, ImageRecord, Instance,
    CLASSES_FILE,
};
pub use export::{export_pseudo_labels, load_manifest, load_pseudo_labels, Manifest, MANIFEST_FILE};
pub use interchange::{
    interchange_path, parse_interchange, read_interchange, write_interchange, CandidateEntry, DetectionEntry,
    InterchangeRecord, Producer, RleJson, ScoreEntry, SCHEMA_VERSION,
};
pub use pngio::{decode_label_png, encode_label_png, read_label_png, write_label_png};

use crate::error::{Error, Result};

/// Writes to a temporary sibling and renames it over `path`, so readers see
/// either the old or the new content. Creates missing parent directories.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(
        ".{name}.tmp-{}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}
