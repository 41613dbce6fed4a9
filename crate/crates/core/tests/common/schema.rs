//! Validator for the subset of JSON Schema 2020-12 used by the shipped schemas:
//! `$ref` (local pointers and sibling files), `type`, `const`, `enum`,
//! `properties`, `required`, `additionalProperties`, `items`, `minItems`,
//! `contains`, `minimum`, `pattern`, `allOf`, `oneOf`, `not`, `if`/`then`/`else`.
//! Unknown keywords fail loudly so a schema edit cannot silently escape the checks.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

const ANNOTATIONS: &[&str] = &["$schema", "$id", "$defs", "title", "description"];

pub struct Schemas {
    docs: BTreeMap<String, Value>,
}

impl Schemas {
    pub fn load(dir: &Path) -> Self {
        let mut docs = BTreeMap::new();
        for name in ["problem.schema.json", "report.schema.json"] {
            let text = std::fs::read_to_string(dir.join(name)).expect("schema file");
            docs.insert(name.to_string(), serde_json::from_str(&text).expect("schema is JSON"));
        }
        Self { docs }
    }

    /// Errors as `path: message`; empty when `value` validates against `doc`.
    pub fn validate(&self, doc: &str, value: &Value) -> Vec<String> {
        let mut errors = Vec::new();
        self.check(doc, &self.docs[doc], value, "$", &mut errors);
        errors
    }

    fn resolve(&self, doc: &str, reference: &str) -> (String, &Value) {
        let (file, pointer) = reference.split_once('#').unwrap_or((reference, ""));
        let file = if file.is_empty() { doc.to_string() } else { file.to_string() };
        let root = self.docs.get(&file).unwrap_or_else(|| panic!("unknown schema {file}"));
        let target = root.pointer(pointer).unwrap_or_else(|| panic!("dangling $ref {reference}"));
        (file, target)
    }

    fn valid(&self, doc: &str, schema: &Value, value: &Value, path: &str) -> bool {
        let mut e = Vec::new();
        self.check(doc, schema, value, path, &mut e);
        e.is_empty()
    }

    fn check(&self, doc: &str, schema: &Value, value: &Value, path: &str, errors: &mut Vec<String>) {
        let Some(obj) = schema.as_object() else {
            if schema == &Value::Bool(false) {
                errors.push(format!("{path}: nothing is allowed here"));
            }
            return;
        };
        for (key, sub) in obj {
            match key.as_str() {
                k if ANNOTATIONS.contains(&k) => {}
                "$ref" => {
                    let (file, target) = self.resolve(doc, sub.as_str().expect("$ref is a string"));
                    self.check(&file, target, value, path, errors);
                }
                "type" => {
                    let types: Vec<&str> = match sub {
                        Value::String(s) => vec![s.as_str()],
                        Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
                        _ => panic!("bad type keyword"),
                    };
                    if !types.iter().any(|t| has_type(value, t)) {
                        errors.push(format!("{path}: expected {types:?}, got {value}"));
                    }
                }
                "const" => {
                    if value != sub {
                        errors.push(format!("{path}: expected {sub}"));
                    }
                }
                "enum" => {
                    if !sub.as_array().expect("enum array").contains(value) {
                        errors.push(format!("{path}: {value} not in {sub}"));
                    }
                }
                "required" => {
                    if let Some(o) = value.as_object() {
                        for name in sub.as_array().expect("required array").iter().filter_map(Value::as_str) {
                            if !o.contains_key(name) {
                                errors.push(format!("{path}: missing `{name}`"));
                            }
                        }
                    }
                }
                "properties" => {
                    if let Some(o) = value.as_object() {
                        for (name, s) in sub.as_object().expect("properties object") {
                            if let Some(v) = o.get(name) {
                                self.check(doc, s, v, &format!("{path}.{name}"), errors);
                            }
                        }
                    }
                }
                "additionalProperties" => {
                    if let Some(o) = value.as_object() {
                        let known = obj.get("properties").and_then(Value::as_object);
                        for (name, v) in o {
                            if known.is_some_and(|k| k.contains_key(name)) {
                                continue;
                            }
                            match sub {
                                Value::Bool(false) => errors.push(format!("{path}: unexpected `{name}`")),
                                Value::Bool(true) => {}
                                s => self.check(doc, s, v, &format!("{path}.{name}"), errors),
                            }
                        }
                    }
                }
                "items" => {
                    if let Some(a) = value.as_array() {
                        for (i, v) in a.iter().enumerate() {
                            self.check(doc, sub, v, &format!("{path}[{i}]"), errors);
                        }
                    }
                }
                "minItems" => {
                    if let Some(a) = value.as_array() {
                        if (a.len() as u64) < sub.as_u64().expect("minItems") {
                            errors.push(format!("{path}: fewer than {sub} items"));
                        }
                    }
                }
                "contains" => {
                    if let Some(a) = value.as_array() {
                        if !a.iter().enumerate().any(|(i, v)| self.valid(doc, sub, v, &format!("{path}[{i}]"))) {
                            errors.push(format!("{path}: no item matches `contains`"));
                        }
                    }
                }
                "minimum" => {
                    if let Some(x) = value.as_f64() {
                        if x < sub.as_f64().expect("minimum") {
                            errors.push(format!("{path}: {x} < {sub}"));
                        }
                    }
                }
                "pattern" => {
                    if let Some(s) = value.as_str() {
                        let re = regex::Regex::new(sub.as_str().expect("pattern")).expect("valid pattern");
                        if !re.is_match(s) {
                            errors.push(format!("{path}: `{s}` does not match {sub}"));
                        }
                    }
                }
                "allOf" => {
                    for s in sub.as_array().expect("allOf") {
                        self.check(doc, s, value, path, errors);
                    }
                }
                "oneOf" => {
                    let n = sub.as_array().expect("oneOf").iter().filter(|s| self.valid(doc, s, value, path)).count();
                    if n != 1 {
                        errors.push(format!("{path}: {n} branches of oneOf match"));
                    }
                }
                "not" => {
                    if self.valid(doc, sub, value, path) {
                        errors.push(format!("{path}: matches a `not` schema"));
                    }
                }
                "if" => {
                    let branch = if self.valid(doc, sub, value, path) { obj.get("then") } else { obj.get("else") };
                    if let Some(b) = branch {
                        self.check(doc, b, value, path, errors);
                    }
                }
                "then" | "else" => {}
                other => panic!("schema keyword `{other}` is not supported by the test validator"),
            }
        }
    }
}

fn has_type(v: &Value, t: &str) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "number" => v.is_number(),
        "integer" => v.is_i64() || v.is_u64() || v.as_f64().is_some_and(|x| x.fract() == 0.0),
        other => panic!("unknown type {other}"),
    }
}

/// Paths of floating-point numbers in `v` that are not the `value` or `error`
/// of a measured object.
pub fn untagged_floats(v: &Value) -> Vec<String> {
    fn walk(v: &Value, path: String, covered: bool, out: &mut Vec<String>) {
        match v {
            Value::Number(n) if n.is_f64() && !covered => out.push(path),
            Value::Object(o) => {
                let measured = o.contains_key("tag") && o.contains_key("value");
                for (k, x) in o {
                    walk(x, format!("{path}.{k}"), covered || (measured && (k == "value" || k == "error")), out);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(x, format!("{path}[{i}]"), covered, out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(v, "$".into(), false, &mut out);
    out
}
