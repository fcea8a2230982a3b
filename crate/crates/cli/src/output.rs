use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

use crate::config::Format;

/// Columns of a solve run, in output order.
pub const SOLVE_COLUMNS: [&str; 13] = [
    "t", "lambda", "mu", "F0", "F1", "F2", "F3", "F4", "Hprime", "q", "p", "s", "lax_residual",
];

pub const BACKLUND_COLUMNS: [&str; 5] = ["t", "lambda", "mu", "image_lambda", "image_mu"];

pub const CONVERT_COLUMNS: [&str; 8] = ["t", "s", "q", "p", "dq_ds", "dp_ds", "rhs_q", "rhs_p"];

/// Numeric table; `None` marks a value that was not computed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

#[derive(Serialize, Deserialize)]
struct JsonDoc {
    #[serde(default)]
    meta: serde_json::Value,
    columns: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> anyhow::Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| anyhow!("input has no `{name}` column"))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| r[idx].ok_or_else(|| anyhow!("row {i} has no `{name}` value")))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> anyhow::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| v.map(fmt_num).unwrap_or_default()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W, meta: &serde_json::Value) -> anyhow::Result<()> {
        let doc = JsonDoc {
            meta: meta.clone(),
            columns: self.columns.clone(),
            rows: self.rows.clone(),
        };
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)?;
        Ok(())
    }

    /// Writes to `dest`, or to stdout when `dest` is `None`.
    pub fn write(&self, format: Format, meta: &serde_json::Value, dest: Option<&Path>) -> anyhow::Result<()> {
        match dest {
            Some(path) => {
                let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                self.write_to(format, meta, BufWriter::new(file))
            }
            None => self.write_to(format, meta, io::stdout().lock()),
        }
    }

    fn write_to<W: Write>(&self, format: Format, meta: &serde_json::Value, w: W) -> anyhow::Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w, meta),
        }
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let doc: JsonDoc = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            return Ok(Self {
                columns: doc.columns,
                rows: doc.rows,
            });
        }
        let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    if f.is_empty() {
                        Ok(None)
                    } else {
                        f.parse::<f64>().map(Some)
                    }
                })
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("row {} of {}", i + 1, path.display()))?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }
}
