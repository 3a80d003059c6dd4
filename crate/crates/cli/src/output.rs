use clap::ValueEnum;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Result of one subcommand, renderable in every format.
#[derive(Debug, Clone)]
pub struct Report {
    pub json: Value,
    /// Header and rows for CSV.
    pub table: Option<(Vec<String>, Vec<Vec<String>>)>,
    pub text: String,
}

impl Report {
    pub fn new(json: Value, text: String) -> Report {
        Report { json, table: None, text }
    }

    pub fn with_table(mut self, header: &[&str], rows: Vec<Vec<String>>) -> Report {
        self.table = Some((header.iter().map(|s| s.to_string()).collect(), rows));
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
                s.push('\n');
                s
            }
            Format::Text => {
                let mut s = self.text.clone();
                if !s.ends_with('\n') {
                    s.push('\n');
                }
                s
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                match &self.table {
                    Some((header, rows)) => {
                        w.write_record(header).expect("in-memory write");
                        for row in rows {
                            w.write_record(row).expect("in-memory write");
                        }
                    }
                    None => {
                        w.write_record(["key", "value"]).expect("in-memory write");
                        flatten("", &self.json, &mut |k, v| w.write_record([k, v]).expect("in-memory write"));
                    }
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
            }
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut dyn FnMut(&str, &str)) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out(prefix, s),
        other => out(prefix, &other.to_string()),
    }
}
