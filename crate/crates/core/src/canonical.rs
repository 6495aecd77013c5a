//! Canonical JSON: object keys sorted, floats rounded to a fixed number of
//! decimals, no insignificant whitespace. Equal documents give equal bytes.

use serde::Serialize;
use serde_json::{Map, Number, Value};

/// Decimal places kept for non-integer numbers.
pub const FLOAT_DECIMALS: i32 = 6;

fn round(x: f64) -> f64 {
    let f = 10f64.powi(FLOAT_DECIMALS);
    let r = (x * f).round() / f;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Rounds every float and sorts every object's keys.
pub fn canonicalize(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round(n.as_f64().unwrap_or(0.0));
            Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.iter().map(canonicalize).collect()),
        Value::Object(o) => {
            let mut keys: Vec<&String> = o.keys().collect();
            keys.sort();
            let mut out = Map::new();
            for k in keys {
                out.insert(k.clone(), canonicalize(&o[k]));
            }
            Value::Object(out)
        }
        other => other.clone(),
    }
}

pub fn to_canonical_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    serde_json::to_string(&canonicalize(&v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorts_and_rounds() {
        let v = json!({"b": 1.23456789, "a": [-0.0000001, 2], "c": {"z": 1, "y": 0.1}});
        assert_eq!(
            to_canonical_string(&v).unwrap(),
            r#"{"a":[0.0,2],"b":1.234568,"c":{"y":0.1,"z":1}}"#
        );
    }
}
