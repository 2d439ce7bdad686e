//! Canonical JSON: sorted object keys, shortest round-trip float rendering.

use serde::Serialize;

use crate::error::Result;

/// Pretty-printed with a trailing newline. Equal values give equal bytes.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // routing through Value sorts every map by key
    let value = serde_json::to_value(value)?;
    let mut out = serde_json::to_string_pretty(&value)?;
    out.push('\n');
    Ok(out)
}
