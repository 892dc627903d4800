//! On-disk formats: feature bundles, cut lists, configuration, and the
//! synthetic-instance generator.
//!
//! All writes go through [`write_atomic`], which writes a sibling temporary
//! file and renames it over the destination.

mod bundle;
mod config;
mod cutlist;
mod synth;

pub use bundle::{
    load_bundle, write_bundle, AudioPayload, EnergySource, FeatureBundle, BUNDLE_SCHEMA_VERSION, MANIFEST_FILE,
};
pub use config::{load_config, Config};
pub use cutlist::{build_cutlist, emit_cutlist, load_cutlist, CutList, CutSegment, CUTLIST_SCHEMA_VERSION};
pub use synth::{synth_instance, SynthInstance, SynthSpec};

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Error::Internal(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Encodes values as raw little-endian f32.
pub fn encode_f32(values: impl IntoIterator<Item = f32>) -> Vec<u8> {
    values.into_iter().flat_map(f32::to_le_bytes).collect()
}

/// Decodes raw little-endian f32, requiring exactly `expected` values.
/// `name` identifies the array in error messages.
pub fn decode_f32(bytes: &[u8], expected: usize, name: &str) -> Result<Vec<f32>> {
    let want = expected
        .checked_mul(4)
        .ok_or_else(|| Error::invalid(format!("array `{name}`: declared size overflows")))?;
    if bytes.len() != want {
        return Err(Error::invalid(format!(
            "array `{name}`: expected {want} bytes ({expected} f32 values), found {}",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}
