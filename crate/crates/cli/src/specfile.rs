//! Manifold-spec JSON files: schema validation with JSON-pointer errors,
//! compilation, and export.

use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use symptube::contact::{ContactError, ManifoldSpec, SpecSource};

#[derive(Debug, Error)]
pub enum SpecFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("specification does not compile: {0}")]
    Compile(#[from] ContactError),
    #[error("validation failure in check `{check}`: max residual {max_residual:.3e} (tolerance {tolerance:.1e}){detail}")]
    Validation {
        check: String,
        max_residual: f64,
        tolerance: f64,
        detail: String,
    },
}

fn expect_string_array(v: &Value, pointer: &str) -> Result<(), SpecFileError> {
    let arr = v.as_array().ok_or_else(|| SpecFileError::Schema {
        pointer: pointer.into(),
        message: "expected an array of expression strings".into(),
    })?;
    for (i, item) in arr.iter().enumerate() {
        if !item.is_string() {
            return Err(SpecFileError::Schema {
                pointer: format!("{pointer}/{i}"),
                message: "expected a string".into(),
            });
        }
    }
    Ok(())
}

/// Structural checks producing JSON-pointer errors before deserialization.
fn validate_schema(root: &Value) -> Result<(), SpecFileError> {
    let obj = root.as_object().ok_or_else(|| SpecFileError::Schema {
        pointer: "/".into(),
        message: "top level must be an object".into(),
    })?;
    for key in [
        "dim_n",
        "coords",
        "theta",
        "chart_box",
        "embedding",
        "ambient_j",
        "reeb_extension",
    ] {
        if !obj.contains_key(key) {
            return Err(SpecFileError::Schema {
                pointer: format!("/{key}"),
                message: "missing required key".into(),
            });
        }
    }
    if !obj["dim_n"].is_u64() {
        return Err(SpecFileError::Schema {
            pointer: "/dim_n".into(),
            message: "expected a positive integer".into(),
        });
    }
    expect_string_array(&obj["coords"], "/coords")?;
    expect_string_array(&obj["theta"], "/theta")?;
    expect_string_array(&obj["embedding"], "/embedding")?;
    expect_string_array(&obj["reeb_extension"], "/reeb_extension")?;
    if let Some(reeb) = obj.get("reeb") {
        if !reeb.is_null() {
            expect_string_array(reeb, "/reeb")?;
        }
    }
    let boxes = obj["chart_box"]
        .as_array()
        .ok_or_else(|| SpecFileError::Schema {
            pointer: "/chart_box".into(),
            message: "expected an array of [lo, hi] pairs".into(),
        })?;
    for (i, pair) in boxes.iter().enumerate() {
        let ok = pair
            .as_array()
            .map(|p| p.len() == 2 && p.iter().all(|x| x.is_number()))
            .unwrap_or(false);
        if !ok {
            return Err(SpecFileError::Schema {
                pointer: format!("/chart_box/{i}"),
                message: "expected [lo, hi]".into(),
            });
        }
    }
    match &obj["ambient_j"] {
        Value::String(s) if s == "standard" => {}
        Value::Array(rows) => {
            for (i, row) in rows.iter().enumerate() {
                let ok = row
                    .as_array()
                    .map(|r| r.iter().all(|x| x.is_number()))
                    .unwrap_or(false);
                if !ok {
                    return Err(SpecFileError::Schema {
                        pointer: format!("/ambient_j/{i}"),
                        message: "expected a row of numbers".into(),
                    });
                }
            }
        }
        _ => {
            return Err(SpecFileError::Schema {
                pointer: "/ambient_j".into(),
                message: "expected \"standard\" or a square matrix".into(),
            })
        }
    }
    Ok(())
}

/// Parse, compile and validate a manifold-spec file.
pub fn load_spec(path: &Path) -> Result<ManifoldSpec, SpecFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let root: Value = serde_json::from_str(&text)?;
    validate_schema(&root)?;
    let source: SpecSource = serde_json::from_value(root)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "spec".into());
    let spec = ManifoldSpec::from_source(&name, &source)?;
    let report = spec.validate(100, 0);
    if let Some(item) = report.first_failure() {
        return Err(SpecFileError::Validation {
            check: item.name.clone(),
            max_residual: item.max_residual,
            tolerance: item.tolerance,
            detail: item
                .error
                .as_ref()
                .map(|e| format!(": {e}"))
                .unwrap_or_default(),
        });
    }
    Ok(spec)
}

/// Serialize a specification to the file format.
pub fn export_spec(spec: &ManifoldSpec) -> String {
    let mut out = serde_json::to_string_pretty(&spec.to_source()).expect("source serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use symptube::contact::registry;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn export_and_reload_is_identity() {
        for spec in [registry::heisenberg(1), registry::sphere(2)] {
            let json = export_spec(&spec);
            let file = write_temp(&json);
            let loaded = load_spec(file.path()).unwrap();
            assert_eq!(loaded, spec);
        }
    }

    #[test]
    fn missing_theta_reports_pointer() {
        let mut v: Value = serde_json::from_str(&export_spec(&registry::heisenberg(1))).unwrap();
        v.as_object_mut().unwrap().remove("theta");
        let file = write_temp(&v.to_string());
        let err = load_spec(file.path()).unwrap_err();
        match err {
            SpecFileError::Schema { pointer, .. } => assert_eq!(pointer, "/theta"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn expression_errors_carry_offsets() {
        let mut v: Value = serde_json::from_str(&export_spec(&registry::heisenberg(1))).unwrap();
        v["theta"][0] = Value::String("x1 + (y1".into());
        let file = write_temp(&v.to_string());
        let err = load_spec(file.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("offset 8"), "{msg}");
    }

    #[test]
    fn non_contact_theta_fails_validation_naming_the_check() {
        let mut v: Value = serde_json::from_str(&export_spec(&registry::heisenberg(1))).unwrap();
        v["theta"] = serde_json::json!(["0", "0", "1"]);
        v.as_object_mut().unwrap().remove("reeb");
        let file = write_temp(&v.to_string());
        let err = load_spec(file.path()).unwrap_err();
        match err {
            SpecFileError::Validation { check, .. } => assert_eq!(check, "contact_volume"),
            other => panic!("unexpected {other}"),
        }
    }
}
