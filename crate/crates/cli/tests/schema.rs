//! The shipped JSON schema and the built-in validator must agree.

use std::path::Path;

use clockphase::config::{validate, ScenarioConfig, ScenarioId};
use serde_json::{json, Map, Value};

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/config.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Wraps `value` at `path` into a minimal document.
fn doc(path: &[&str], value: Value) -> Value {
    let mut v = value;
    for key in path.iter().rev() {
        let mut m = Map::new();
        m.insert((*key).to_string(), v);
        v = Value::Object(m);
    }
    v
}

fn violations_at(d: &Value, pointer: &str) -> usize {
    validate(d).violations.iter().filter(|v| v.pointer == pointer).count()
}

fn sample(node: &Value) -> Value {
    if let Some(options) = node.get("enum") {
        return options[0].clone();
    }
    match node.get("type") {
        Some(Value::String(t)) if t == "object" => json!({}),
        Some(Value::String(t)) if t == "array" => json!([]),
        Some(Value::String(t)) if t == "boolean" => json!(true),
        Some(Value::Array(ts)) if ts.contains(&json!("null")) => Value::Null,
        _ => {
            let lo = node.get("minimum").or(node.get("exclusiveMinimum")).and_then(Value::as_f64).unwrap_or(0.0);
            let x = lo.max(0.0) + if node.get("exclusiveMinimum").is_some() { 0.5 } else { 0.0 };
            let x = node.get("maximum").and_then(Value::as_f64).map_or(x, |m| x.min(m));
            if node.get("type") == Some(&json!("integer")) { json!(x.ceil() as u64) } else { json!(x) }
        }
    }
}

fn check_object(node: &Value, path: &mut Vec<&'static str>) {
    let pointer: String = path.iter().map(|k| format!("/{k}")).collect();
    let props = node["properties"].as_object().unwrap();
    assert_eq!(node["additionalProperties"], json!(false), "{pointer}");
    assert_eq!(violations_at(&doc(path, json!({"not_a_field": 1})), &format!("{pointer}/not_a_field")), 1);

    for (key, sub) in props {
        let key: &'static str = Box::leak(key.clone().into_boxed_str());
        let ptr = format!("{pointer}/{key}");
        path.push(key);
        let ok = doc(path, sample(sub));
        assert!(validate(&ok).violations.iter().all(|v| !v.pointer.starts_with(&ptr)), "{ptr} rejects {ok}");
        if let Some(options) = sub.get("enum") {
            assert_eq!(violations_at(&doc(path, json!("bogus")), &ptr), 1, "{ptr}");
            for o in options.as_array().unwrap() {
                assert_eq!(violations_at(&doc(path, o.clone()), &ptr), 0, "{ptr}={o}");
            }
        }
        if let Some(min) = sub.get("minimum").and_then(Value::as_f64) {
            let below = match (sub["type"] == "integer", min > 0.0) {
                (true, true) => json!(min as u64 - 1),
                (true, false) => json!(-1),
                (false, _) => json!(min - 0.5),
            };
            assert_eq!(violations_at(&doc(path, below.clone()), &ptr), 1, "{ptr}={below}");
        }
        if let Some(min) = sub.get("exclusiveMinimum").and_then(Value::as_f64) {
            assert_eq!(violations_at(&doc(path, json!(min)), &ptr), 1, "{ptr} at exclusive bound");
        }
        if let Some(max) = sub.get("maximum").and_then(Value::as_f64) {
            assert_eq!(violations_at(&doc(path, json!(max)), &ptr), 0, "{ptr} at max");
            assert_eq!(violations_at(&doc(path, json!(max + 0.5)), &ptr), 1, "{ptr} above max");
        }
        if let Some(items) = sub.get("items") {
            if let Some(max) = items.get("maximum").and_then(Value::as_f64) {
                assert_eq!(violations_at(&doc(path, json!([max + 0.5])), &format!("{ptr}/0")), 1, "{ptr}/0");
            }
            if let Some(min) = items.get("minimum").and_then(Value::as_f64) {
                assert_eq!(violations_at(&doc(path, json!([min - 0.5])), &format!("{ptr}/0")), 1, "{ptr}/0");
            }
        }
        if sub.get("properties").is_some() {
            check_object(sub, path);
        }
        path.pop();
    }
}

#[test]
fn schema_and_validator_agree() {
    check_object(&schema(), &mut Vec::new());
}

#[test]
fn defaults_validate_and_cover_schema() {
    let s = schema();
    let top: Vec<&String> = s["properties"].as_object().unwrap().keys().collect();
    for id in ScenarioId::ALL {
        let v = serde_json::to_value(ScenarioConfig::defaults(id)).unwrap();
        let report = validate(&v);
        assert!(report.is_valid(), "{id}: {:?}", report.violations);
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        for k in &keys {
            assert!(top.contains(k), "default field {k} missing from schema");
        }
    }
}
