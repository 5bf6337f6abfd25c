//! Time-series CSV with a fixed column schema.
//!
//! Numbers are written with 17 significant digits so that every `f64`
//! round-trips exactly. Columns an experiment does not produce stay empty.

use anyhow::{bail, Context, Result};
use hjcrit_core::physical::PhysicalRecord;
use hjcrit_core::similarity::DiagnosticsRecord;

pub const COLUMNS: [&str; 11] = [
    "tau",
    "t",
    "mass",
    "l1",
    "l2",
    "linf",
    "h1m",
    "dissipation",
    "omega_ratio",
    "manifold_remainder",
    "rescaled_mass",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row(pub [Option<f64>; 11]);

impl Row {
    /// A row at similarity time `tau` with `t = e^τ - 1` filled in.
    pub fn at_tau(tau: f64) -> Self {
        let mut row = Self::default();
        row.set("tau", tau);
        row.set("t", tau.exp_m1());
        row
    }

    pub fn set(&mut self, column: &str, value: f64) {
        let idx = COLUMNS
            .iter()
            .position(|c| *c == column)
            .unwrap_or_else(|| panic!("unknown column {column}"));
        self.0[idx] = Some(value);
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        COLUMNS
            .iter()
            .position(|c| *c == column)
            .and_then(|i| self.0[i])
    }

    pub fn from_similarity(r: &DiagnosticsRecord) -> Self {
        let mut row = Self::at_tau(r.tau);
        row.set("mass", r.mass);
        row.set("l1", r.l1);
        row.set("l2", r.l2);
        row.set("linf", r.linf);
        row.set("h1m", r.h1m);
        row.set("dissipation", r.dissipation);
        if let Some(w) = r.omega_ratio {
            row.set("omega_ratio", w);
        }
        row.set("manifold_remainder", r.manifold_remainder);
        row.set("rescaled_mass", r.rescaled_mass);
        row
    }

    pub fn from_physical(r: &PhysicalRecord) -> Self {
        let mut row = Self::default();
        row.set("tau", r.t.ln_1p());
        row.set("t", r.t);
        row.set("mass", r.mass);
        row.set("l1", r.l1);
        row.set("linf", r.linf);
        row
    }
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row
            .0
            .iter()
            .map(|v| v.map(|x| format!("{x:.16e}")).unwrap_or_default())
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// A parsed CSV: header names and optional numeric cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn parse_csv(text: &str) -> Result<Table> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let Some(header) = lines.next() else {
        bail!("CSV is empty");
    };
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            bail!(
                "data row {} has {} cells, header has {}",
                i + 1,
                cells.len(),
                columns.len()
            );
        }
        let row = cells
            .iter()
            .zip(&columns)
            .map(|(cell, name)| {
                let cell = cell.trim();
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>()
                        .map(Some)
                        .with_context(|| format!("data row {}, column {name}: `{cell}`", i + 1))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { columns, rows })
}
