//! Checks JSON values against the schemas in docs/schemas.
//!
//! Understands the keywords those files use: type (single or list),
//! required, properties, additionalProperties: false, items, enum, minimum,
//! maximum, minLength, maxLength, format: date-time and `$ref` to a sibling
//! file.

use std::path::Path;

use serde_json::Value;

pub fn load(name: &str) -> Value {
    let path = schema_dir().join(name);
    let raw = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&raw).unwrap()
}

fn schema_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("docs").join("schemas")
}

/// Violations of `schema` by `value`, as `path: message` strings.
pub fn violations(value: &Value, schema: &Value) -> Vec<String> {
    let mut out = Vec::new();
    check(value, schema, "$", &mut out);
    out
}

pub fn assert_valid(value: &Value, schema_name: &str) {
    let errors = violations(value, &load(schema_name));
    assert!(errors.is_empty(), "{schema_name}: {errors:#?}\n{value:#}");
}

fn type_matches(value: &Value, name: &str) -> bool {
    match name {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "number" => value.is_number(),
        "integer" => value.is_i64() || value.is_u64(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        other => panic!("unsupported type {other}"),
    }
}

fn check(value: &Value, schema: &Value, path: &str, out: &mut Vec<String>) {
    let schema = schema.as_object().expect("schema must be an object");
    if let Some(target) = schema.get("$ref").and_then(Value::as_str) {
        check(value, &load(target), path, out);
        return;
    }
    if let Some(ty) = schema.get("type") {
        let ok = match ty {
            Value::String(name) => type_matches(value, name),
            Value::Array(names) => names.iter().any(|n| type_matches(value, n.as_str().unwrap())),
            _ => panic!("bad type keyword"),
        };
        if !ok {
            out.push(format!("{path}: expected type {ty}, got {value}"));
            return;
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            out.push(format!("{path}: {value} not in {allowed:?}"));
        }
    }
    if let Some(x) = value.as_f64() {
        if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
            if x < min {
                out.push(format!("{path}: {x} < minimum {min}"));
            }
        }
        if let Some(max) = schema.get("maximum").and_then(Value::as_f64) {
            if x > max {
                out.push(format!("{path}: {x} > maximum {max}"));
            }
        }
    }
    if let Some(s) = value.as_str() {
        let len = s.chars().count() as u64;
        if let Some(min) = schema.get("minLength").and_then(Value::as_u64) {
            if len < min {
                out.push(format!("{path}: length {len} < {min}"));
            }
        }
        if let Some(max) = schema.get("maxLength").and_then(Value::as_u64) {
            if len > max {
                out.push(format!("{path}: length {len} > {max}"));
            }
        }
        if schema.get("format").and_then(Value::as_str) == Some("date-time")
            && chrono::DateTime::parse_from_rfc3339(s).is_err()
        {
            out.push(format!("{path}: {s:?} is not an RFC 3339 date-time"));
        }
    }
    if let Some(object) = value.as_object() {
        let properties = schema.get("properties").and_then(Value::as_object);
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !object.contains_key(key) {
                out.push(format!("{path}: missing required {key}"));
            }
        }
        for (key, child) in object {
            match properties.and_then(|p| p.get(key)) {
                Some(sub) => check(child, sub, &format!("{path}.{key}"), out),
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    out.push(format!("{path}: unexpected property {key}"));
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(array)) = (schema.get("items"), value.as_array()) {
        for (i, child) in array.iter().enumerate() {
            check(child, items, &format!("{path}[{i}]"), out);
        }
    }
}
