//! Plain CSV tables: comma separated, header row, LF line endings, numbers
//! with 17 significant digits.

use std::io::{self, Write};

/// `v` with 17 significant digits, so the value round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    format!("{v:.16e}")
}

/// Quotes fields containing commas, quotes or line breaks.
fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: vec![],
        }
    }

    /// Appends a numeric row.
    pub fn push(&mut self, values: &[f64]) {
        self.push_fields(values.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn push_fields(&mut self, fields: Vec<String>) {
        assert_eq!(fields.len(), self.header.len(), "row width must match the header");
        self.rows.push(fields);
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        let line = |fields: &[String]| fields.iter().map(|f| escape(f)).collect::<Vec<_>>().join(",");
        writeln!(w, "{}", line(&self.header))?;
        for r in &self.rows {
            writeln!(w, "{}", line(r))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("fields are UTF-8")
    }
}
