//! Number formatting and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use tempfile::NamedTempFile;

use crate::error::CliError;

/// Round to 12 significant digits; non-finite values pass through.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest round-trip text of `x` rounded to 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(x);
    let magnitude = r.abs();
    if r == 0.0 || (1e-5..1e15).contains(&magnitude) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Serialize to pretty JSON with every float rounded to 12 significant
/// digits and non-finite floats written as strings.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut tree = serde_json::to_value(value).map_err(|e| CliError::Internal(e.to_string()))?;
    round_tree(&mut tree);
    let mut text = serde_json::to_string_pretty(&tree).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn round_tree(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *value = serde_json::Number::from_f64(round12(x)).map_or(Value::String(fmt_float(x)), Value::Number);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_tree),
        Value::Object(map) => map.values_mut().for_each(round_tree),
        _ => {}
    }
}

/// `f64` fields that may be infinite, serialized as text in that case.
pub fn json_float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(fmt_float(x)), Value::Number)
}

/// Create `dir` (and parents) if missing.
pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Write `contents` to `dir/name` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(&path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(&path, e))?;
    persist(tmp, &path)?;
    Ok(path)
}

/// Move a finished temporary file into place with ordinary file permissions.
pub fn persist(tmp: NamedTempFile, path: &Path) -> Result<(), CliError> {
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(tmp.path(), std::fs::Permissions::from_mode(0o644)).map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Build CSV text from a header and rows of already formatted cells.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).map_err(|e| CliError::Internal(e.to_string()))?;
    for row in rows {
        writer.write_record(&row).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    writer.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}
