//! Canonical JSON: sorted object keys, no whitespace, floats with 17
//! significant digits. Checksums are taken over these bytes.

use serde::Serialize;
use serde_json::Value;

pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, &mut out);
    Ok(out)
}

pub fn to_canonical_bytes<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<Vec<u8>> {
    to_canonical_string(value).map(String::into_bytes)
}

/// `{:.16e}` round-trips every finite `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(&map[k], out);
            }
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_compact() {
        let v = json!({"b": 1, "a": [true, null, "x\"y"], "L": {"z": 2, "c": 3}});
        assert_eq!(
            to_canonical_string(&v).unwrap(),
            r#"{"L":{"c":3,"z":2},"a":[true,null,"x\"y"],"b":1}"#
        );
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 45.666666666666664, 1e-300, -2.5e17] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let back: f64 = serde_json::from_str(&to_canonical_string(&x).unwrap()).unwrap();
            assert_eq!(back, x);
        }
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
    }

    proptest::proptest! {
        #[test]
        fn any_finite_float_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let back: f64 = serde_json::from_str(&to_canonical_string(&x).unwrap()).unwrap();
            proptest::prop_assert_eq!(back.to_bits(), x.to_bits());
        }

        #[test]
        fn canonical_form_is_stable(v in proptest::collection::btree_map("[a-z]{1,4}", -1e6f64..1e6, 0..8)) {
            let once = to_canonical_string(&v).unwrap();
            let parsed: serde_json::Value = serde_json::from_str(&once).unwrap();
            proptest::prop_assert_eq!(to_canonical_string(&parsed).unwrap(), once);
        }
    }
}
