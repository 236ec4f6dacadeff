// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

/// Writes through a sibling temporary file and renames it into place, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().with_context(|| format!("{} is not a file path", path.display()))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

/// What a verb hands back to `main` when it did not hit an error.
pub struct Outcome {
    /// 0, or 2 for a validation failure.
    pub code: u8,
    pub summary: String,
    pub warnings: Vec<String>,
    pub details: Value,
}

impl Outcome {
    pub fn status(&self) -> &'static str {
        if self.code == 0 {
            "ok"
        } else {
            "validation_failed"
        }
    }
}

pub fn diagnostics(verb: &str, outcome: Result<&Outcome, &anyhow::Error>) -> Value {
    match outcome {
        Ok(o) => json!({
            "verb": verb,
            "status": o.status(),
            "exit_code": o.code,
            "warnings": o.warnings,
            "details": o.details,
            "spanning_trees_built": emsteady::topology::spanning_trees_built(),
        }),
        Err(e) => json!({
            "verb": verb,
            "status": "error",
            "exit_code": 1,
            "error": format!("{e:#}"),
            "spanning_trees_built": emsteady::topology::spanning_trees_built(),
        }),
    }
}
