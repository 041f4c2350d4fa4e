//! Output tables: CSV (comma separated, LF endings, no quoting needed by
//! construction) and a stable JSON schema
//! `{"config": {...}, "rows": [...], "diagnostics": [...]}`.

use gibbs_core::XReal;
use serde_json::{json, Map, Value};

use crate::render::{format_f64, format_real};

pub enum Cell {
    Int(i64),
    Real(XReal),
    F64(f64),
    Str(String),
}

pub struct Table {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub diagnostics: Vec<String>,
    /// Set by commands whose outcome is a verdict (validate): a true value
    /// turns into a numerical-failure exit code after the table is emitted.
    pub failed: bool,
    prec: u32,
}

impl Table {
    pub fn new(
        command: &str,
        config: Vec<(&str, String)>,
        headers: &[&'static str],
        prec: u32,
    ) -> Self {
        Table {
            command: command.to_string(),
            config: config
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            headers: headers.to_vec(),
            rows: Vec::new(),
            diagnostics: Vec::new(),
            failed: false,
            prec,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn cell_string(&self, cell: &Cell) -> String {
        match cell {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format_real(x, self.prec),
            Cell::F64(v) => format_f64(*v),
            Cell::Str(s) => s.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.headers.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|c| self.cell_string(c)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut config = Map::new();
        config.insert("command".into(), Value::String(self.command.clone()));
        for (k, v) in &self.config {
            config.insert(k.clone(), Value::String(v.clone()));
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (h, c) in self.headers.iter().zip(row) {
                    let v = match c {
                        Cell::Int(i) => json!(i),
                        other => Value::String(self.cell_string(other)),
                    };
                    obj.insert((*h).to_string(), v);
                }
                Value::Object(obj)
            })
            .collect();
        let doc = json!({
            "config": Value::Object(config),
            "rows": rows,
            "diagnostics": self.diagnostics,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }
}
