use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::CliError;

/// Version and resolved configuration; the worker count is left out so outputs
/// do not depend on it.
pub fn manifest(command: &str, config: &impl Serialize) -> Value {
    json!({
        "tool": "biplane",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
    })
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(p, e))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Pretty JSON: the body fields plus a `manifest` key.
pub fn write_json(out: Option<&Path>, manifest: Value, body: Value) -> Result<(), CliError> {
    let mut doc = serde_json::Map::new();
    doc.insert("manifest".into(), manifest);
    match body {
        Value::Object(m) => doc.extend(m),
        other => {
            doc.insert("result".into(), other);
        }
    }
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, &Value::Object(doc))
        .map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Data(e.to_string()))
}

/// Run `write` against the output, and place the manifest next to a CSV file as `<out>.manifest.json`.
pub fn write_csv<F>(out: Option<&Path>, manifest: Value, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    let mut w = sink(out)?;
    write(&mut w)?;
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    if let Some(p) = out {
        let mut side = PathBuf::from(p).into_os_string();
        side.push(".manifest.json");
        write_json(Some(Path::new(&side)), manifest, json!({}))?;
    }
    Ok(())
}
