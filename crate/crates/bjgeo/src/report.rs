//! One canonical report object per run. Keys are emitted in sorted order
//! (the default serde_json map is a BTreeMap) and every scalar the tool
//! computes is rendered with a fixed 17-significant-digit format, so the
//! canonical bytes are reproducible across runs and worker counts. Timing
//! lives outside the canonical tree.

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::field::Field;
use crate::matfile::{fmt_f64, fmt_scalar};
use crate::operator::OperatorMatrix;
use crate::scalar::FiniteVector;

#[derive(Clone, Debug)]
pub struct Report {
    root: Map<String, Value>,
    pub timing_ms: Option<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Fixed-format scalar, as a JSON string to keep the byte stream
/// independent of any float-printing strategy.
pub fn scalar(x: f64) -> Value {
    Value::String(fmt_f64(x))
}

pub fn matrix_value(t: &OperatorMatrix) -> Value {
    let rows: Vec<Value> = (0..t.m())
        .map(|i| {
            Value::Array(
                (0..t.n())
                    .map(|j| Value::String(fmt_scalar(t.entry(i, j), t.field())))
                    .collect(),
            )
        })
        .collect();
    let mut obj = Map::new();
    obj.insert("m".into(), t.m().into());
    obj.insert("n".into(), t.n().into());
    obj.insert(
        "field".into(),
        match t.field() {
            Field::Real => "real".into(),
            Field::Complex => "complex".into(),
        },
    );
    obj.insert("rows".into(), Value::Array(rows));
    Value::Object(obj)
}

pub fn vector_value(v: &FiniteVector) -> Value {
    Value::Array(
        v.entries()
            .iter()
            .map(|&z| Value::String(fmt_scalar(z, v.field())))
            .collect(),
    )
}

impl Report {
    pub fn new(command: &str) -> Report {
        let mut root = Map::new();
        root.insert("command".into(), command.into());
        root.insert("inputs".into(), Value::Object(Map::new()));
        root.insert("config".into(), Value::Object(Map::new()));
        root.insert("results".into(), Value::Object(Map::new()));
        Report {
            root,
            timing_ms: None,
        }
    }

    fn section(&mut self, name: &str) -> &mut Map<String, Value> {
        self.root
            .get_mut(name)
            .and_then(Value::as_object_mut)
            .expect("section exists by construction")
    }

    pub fn add_input(&mut self, label: &str, path: &str, content: &[u8]) {
        let mut rec = Map::new();
        rec.insert("path".into(), path.into());
        rec.insert("sha256".into(), sha256_hex(content).into());
        self.section("inputs")
            .insert(label.into(), Value::Object(rec));
    }

    pub fn set_config(&mut self, key: &str, value: Value) {
        self.section("config").insert(key.into(), value);
    }

    pub fn set_result(&mut self, key: &str, value: Value) {
        self.section("results").insert(key.into(), value);
    }

    pub fn set_error(&mut self, exit_code: i32, message: &str) {
        let mut rec = Map::new();
        rec.insert("exit_code".into(), exit_code.into());
        rec.insert("message".into(), message.into());
        self.root.insert("error".into(), Value::Object(rec));
    }

    /// The determinism contract covers exactly these bytes.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&Value::Object(self.root.clone())).expect("tree is plain JSON")
    }

    pub fn to_json_line(&self) -> String {
        let mut full = self.root.clone();
        if let Some(ms) = self.timing_ms {
            full.insert("timing_ms".into(), Value::String(format!("{ms:.3}")));
        }
        let mut line = serde_json::to_string(&Value::Object(full)).expect("tree is plain JSON");
        line.push('\n');
        line
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        render(&Value::Object(self.root.clone()), 0, &mut out);
        if let Some(ms) = self.timing_ms {
            out.push_str(&format!("timing_ms: {ms:.3}\n"));
        }
        out
    }
}

fn is_leaf(v: &Value) -> bool {
    !matches!(v, Value::Object(_) | Value::Array(_))
}

fn leaf_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                if is_leaf(val) {
                    out.push_str(&format!("{pad}{k}: {}\n", leaf_text(val)));
                } else {
                    out.push_str(&format!("{pad}{k}:\n"));
                    render(val, indent + 1, out);
                }
            }
        }
        Value::Array(items) => {
            if items.iter().all(is_leaf) {
                let inline: Vec<String> = items.iter().map(leaf_text).collect();
                out.push_str(&format!("{pad}[{}]\n", inline.join(", ")));
            } else {
                for item in items {
                    out.push_str(&format!("{pad}-\n"));
                    render(item, indent + 1, out);
                }
            }
        }
        leaf => out.push_str(&format!("{pad}{}\n", leaf_text(leaf))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(timing: f64) -> Report {
        let mut r = Report::new("norm");
        r.add_input("matrix", "a.mat", b"1 1 real\n1\n");
        r.set_config("workers", 4.into());
        r.set_result("norm", scalar(1.0));
        r.timing_ms = Some(timing);
        r
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn canonical_bytes_ignore_timing() {
        let a = sample(1.0);
        let b = sample(250.0);
        assert_eq!(a.canonical_bytes(), b.canonical_bytes());
        assert_ne!(a.to_json_line(), b.to_json_line());
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let mut a = Report::new("x");
        a.set_result("beta", scalar(2.0));
        a.set_result("alpha", scalar(1.0));
        let mut b = Report::new("x");
        b.set_result("alpha", scalar(1.0));
        b.set_result("beta", scalar(2.0));
        assert_eq!(a.canonical_bytes(), b.canonical_bytes());
    }

    #[test]
    fn human_rendering_walks_the_tree() {
        let text = sample(2.0).to_human();
        assert!(text.contains("command: norm"));
        assert!(text.contains("norm: 1.0000000000000000e0"));
        assert!(text.contains("timing_ms: 2.000"));
    }

    #[test]
    fn matrix_value_shape() {
        let t = OperatorMatrix::from_rows_real(&[vec![0.5, -0.5]]).unwrap();
        let v = matrix_value(&t);
        assert_eq!(v["m"], 1);
        assert_eq!(
            v["rows"][0][1],
            Value::String("-5.0000000000000000e-1".into())
        );
    }
}
