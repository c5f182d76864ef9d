//! Tabular command output in CSV (RFC-4180-style quoting) or JSON (one
//! top-level object with `meta` and `rows`). Formatting is deterministic:
//! identical tables serialize to identical bytes.

use std::io::Write;

use serde_json::{json, Map, Value as Json};

use crate::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Str(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn opt_num(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Num)
    }

    fn to_json(&self) -> Json {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(x) => json!(x),
            Cell::Str(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Json::Null,
        }
    }

    fn to_csv(&self) -> String {
        match self {
            // Debug for f64 prints the shortest decimal that parses back
            // to the same bits, so the CSV is lossless
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(x) => format!("{x}"),
            Cell::Str(s) => csv_escape(s),
            Cell::Bool(b) => format!("{b}"),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub meta: Map<String, Json>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, columns: Vec<&'static str>) -> Table {
        let mut meta = Map::new();
        meta.insert("command".into(), json!(command));
        Table {
            meta,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn meta_entry(&mut self, key: &str, value: Json) {
        self.meta.insert(key.to_string(), value);
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write + ?Sized>(&self, format: Format, w: &mut W) -> CliResult<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }

    fn write_csv<W: Write + ?Sized>(&self, w: &mut W) -> CliResult<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_csv).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    fn write_json<W: Write + ?Sized>(&self, w: &mut W) -> CliResult<()> {
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (col, cell) in self.columns.iter().zip(row) {
                    obj.insert(col.to_string(), cell.to_json());
                }
                Json::Object(obj)
            })
            .collect();
        let doc = json!({ "meta": Json::Object(self.meta.clone()), "rows": rows });
        let text =
            serde_json::to_string_pretty(&doc).map_err(|e| crate::CliError::Io(e.to_string()))?;
        writeln!(w, "{text}")?;
        Ok(())
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_quotes_when_needed() {
        let mut t = Table::new("demo", vec!["a", "b"]);
        t.push(vec![Cell::Num(0.5), Cell::Str("x,y".into())]);
        t.push(vec![Cell::Empty, Cell::Str("plain".into())]);
        let mut buf = Vec::new();
        t.write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "a,b\n0.5,\"x,y\"\n,plain\n");
    }

    #[test]
    fn csv_floats_round_trip() {
        let values = [
            0.1,
            6.974633018034519e-5,
            1.0 / 3.0,
            0.993_095_113_312_145_7,
        ];
        let mut t = Table::new("demo", vec!["v"]);
        for &v in &values {
            t.push(vec![Cell::Num(v)]);
        }
        let mut buf = Vec::new();
        t.write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for (line, &v) in text.lines().skip(1).zip(&values) {
            assert_eq!(line.parse::<f64>().unwrap(), v, "line {line}");
        }
    }

    #[test]
    fn json_object_shape() {
        let mut t = Table::new("demo", vec!["v", "s"]);
        t.meta_entry("seed", json!(7));
        t.push(vec![Cell::Num(1.5), Cell::Str("ok".into())]);
        let mut buf = Vec::new();
        t.write(Format::Json, &mut buf).unwrap();
        let doc: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(doc["meta"]["command"], "demo");
        assert_eq!(doc["meta"]["seed"], 7);
        assert_eq!(doc["rows"][0]["v"], 1.5);
        assert_eq!(doc["rows"][0]["s"], "ok");
    }
}
