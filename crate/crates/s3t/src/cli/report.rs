use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::canonical::to_canonical_string;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Rendered output of one subcommand: metadata, summary lines, a table and
/// the JSON payload.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pub summary: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub result: Value,
}

impl Report {
    pub fn new(command: &'static str, seed: Option<u64>, config: Value) -> Self {
        Self {
            command,
            seed,
            config,
            summary: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            result: Value::Null,
        }
    }

    pub fn summary(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn meta(&self) -> Value {
        json!({
            "tool": "s3t",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => {
                let mut doc = json!({"meta": self.meta(), "result": self.result});
                if !self.summary.is_empty() {
                    let summary: serde_json::Map<String, Value> = self
                        .summary
                        .iter()
                        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                        .collect();
                    doc["summary"] = Value::Object(summary);
                }
                let mut s = serde_json::to_string_pretty(&doc).expect("json value");
                s.push('\n');
                s
            }
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool: s3t {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# command: {}", self.command);
        match self.seed {
            Some(s) => {
                let _ = writeln!(out, "# seed: {s}");
            }
            None => out.push_str("# seed: none\n"),
        }
        let _ = writeln!(
            out,
            "# config: {}",
            to_canonical_string(&self.config).expect("json value")
        );
        for (k, v) in &self.summary {
            let _ = writeln!(out, "# {k}: {v}");
        }
        if !self.columns.is_empty() {
            out.push_str(&self.columns.join(","));
            out.push('\n');
            for row in &self.rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        out
    }
}

pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "null".into(), num)
}

/// Slice order as space-separated indices, safe inside a CSV cell.
pub fn seq(order: &[usize]) -> String {
    order.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}
