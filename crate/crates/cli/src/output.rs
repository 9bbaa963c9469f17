//! Rendering of flat records as aligned tables, CSV or JSON lines.

use std::fmt::Write as _;

use asymbound::Real;
use clap::ValueEnum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Ordered `key -> text` pairs. Numbers are already formatted.
#[derive(Clone, Debug, Default)]
pub struct Record(pub Vec<(String, String)>);

impl Record {
    pub fn new() -> Self {
        Record(Vec::new())
    }

    pub fn put(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.0.push((key.to_string(), value.into()));
        self
    }

    fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(k, _)| k.as_str())
    }
}

/// How a table-format listing of several records is laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// One aligned row per record.
    Columns,
    /// One `key  value` block per record.
    Blocks,
}

/// Fixed notation with `digits` truncated decimals for moderate values,
/// scientific notation with `digits` significant digits otherwise.
pub fn num(v: &Real, digits: usize) -> String {
    if v.is_zero() {
        return "0".to_string();
    }
    let a = v.abs().to_f64();
    if (1e-4..1e15).contains(&a) {
        v.to_decimal_truncated(digits)
    } else {
        v.to_sci(digits)
    }
}

pub fn render(records: &[Record], format: Format, layout: Layout) -> String {
    match format {
        Format::Table => match layout {
            Layout::Columns => columns(records),
            Layout::Blocks => blocks(records),
        },
        Format::Csv => csv(records),
        Format::Json => json(records),
    }
}

fn blocks(records: &[Record]) -> String {
    let mut out = String::new();
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let w = r.keys().map(str::len).max().unwrap_or(0);
        for (k, v) in &r.0 {
            let _ = writeln!(out, "{k:<w$}  {v}");
        }
    }
    out
}

fn columns(records: &[Record]) -> String {
    let Some(first) = records.first() else {
        return String::new();
    };
    let n = first.0.len();
    let mut widths: Vec<usize> = first.keys().map(str::len).collect();
    for r in records {
        for (i, (_, v)) in r.0.iter().enumerate().take(n) {
            widths[i] = widths[i].max(v.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let row: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", row.join("  ").trim_end());
    };
    line(first.keys().collect(), &mut out);
    for r in records {
        line(r.0.iter().map(|(_, v)| v.as_str()).collect(), &mut out);
    }
    out
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv(records: &[Record]) -> String {
    let Some(first) = records.first() else {
        return String::new();
    };
    let mut out = String::new();
    let header: Vec<String> = first.keys().map(csv_cell).collect();
    let _ = writeln!(out, "{}", header.join(","));
    for r in records {
        let row: Vec<String> = r.0.iter().map(|(_, v)| csv_cell(v)).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn json(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        let map: serde_json::Map<String, serde_json::Value> =
            r.0.iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect();
        let _ = writeln!(out, "{}", serde_json::Value::Object(map));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec() -> Record {
        let mut r = Record::new();
        r.put("delta", "1/3").put("note", "a, \"b\"");
        r
    }

    #[test]
    fn csv_quotes_separators() {
        let s = render(&[rec()], Format::Csv, Layout::Columns);
        assert_eq!(s, "delta,note\n1/3,\"a, \"\"b\"\"\"\n");
    }

    #[test]
    fn json_values_are_strings() {
        let s = render(&[rec()], Format::Json, Layout::Columns);
        let v: serde_json::Value = serde_json::from_str(s.trim()).unwrap();
        assert_eq!(v["delta"], "1/3");
    }

    #[test]
    fn num_switches_notation() {
        let p = 128;
        assert_eq!(num(&Real::parse("5/6", p).unwrap(), 5), "0.83333");
        assert_eq!(num(&Real::parse("2.5e-17", p).unwrap(), 3), "2.50e-17");
        assert_eq!(num(&Real::zero(p), 3), "0");
    }
}
