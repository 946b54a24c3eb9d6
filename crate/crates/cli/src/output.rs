//! Line-delimited records: space-separated `key:value` fields, one record per
//! line, the first field always `kind`. Spaces, newlines and `%` in values
//! are percent-encoded, so every record parses back to the same fields.

use std::fmt;
use std::io::Write;

use sgl::{BlockStructure, BlockVector};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    fields: Vec<(String, String)>,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        Self {
            fields: vec![("kind".to_string(), kind.to_string())],
        }
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with_f64(self, key: &str, value: f64) -> Self {
        self.with(key, float(value))
    }

    pub fn kind(&self) -> &str {
        &self.fields[0].1
    }

    pub fn fields(&self) -> &[(String, String)] {
        &self.fields
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| CliError::Validation(format!("{} record has no '{key}' field", self.kind())))?;
        raw.parse()
            .map_err(|_| CliError::Validation(format!("field '{key}' of {} record: cannot parse '{raw}'", self.kind())))
    }

    pub fn parse_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(key).unwrap_or("");
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Validation(format!("field '{key}': cannot parse '{v}'")))
            })
            .collect()
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}:{}", escape(v))?;
        }
        Ok(())
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn float(x: f64) -> String {
    if x == 0.0 || (1e-4..1e7).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn float_list(values: &[f64]) -> String {
    values.iter().map(|&v| float(v)).collect::<Vec<_>>().join(",")
}

fn escape(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    for c in v.chars() {
        match c {
            '%' => out.push_str("%25"),
            ' ' => out.push_str("%20"),
            '\t' => out.push_str("%09"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(v: &str) -> Option<String> {
    let bytes = v.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = v.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

pub fn parse_line(line: &str) -> Option<Record> {
    let fields = line
        .split(' ')
        .map(|token| {
            let (k, v) = token.split_once(':')?;
            Some((k.to_string(), unescape(v)?))
        })
        .collect::<Option<Vec<_>>>()?;
    match fields.first() {
        Some((k, _)) if k == "kind" => Some(Record { fields }),
        _ => None,
    }
}

pub fn parse_records(text: &str) -> Result<Vec<Record>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| parse_line(l).ok_or_else(|| CliError::Validation(format!("line {}: malformed record", i + 1))))
        .collect()
}

pub fn write_records(out: &mut dyn Write, records: &[Record]) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{r}")?;
    }
    out.flush()
}

/// Nonzero coefficients of the penalized blocks as `block/index/value`
/// triplets, comma-separated.
pub fn coefficient_triplets(beta: &BlockVector, skip_blocks: usize) -> String {
    let s = beta.structure();
    let mut parts = Vec::new();
    for j in skip_blocks..s.num_blocks() {
        for (i, &v) in beta.block(j).iter().enumerate() {
            if v != 0.0 {
                parts.push(format!("{j}/{i}/{}", float(v)));
            }
        }
    }
    parts.join(",")
}

/// Rebuilds the coefficient vector of a path record from its `intercept`
/// and `coefficients` fields.
pub fn coefficients_from_record(record: &Record, structure: &BlockStructure) -> Result<BlockVector> {
    let mut beta = BlockVector::zeros(structure);
    let intercept = record.parse_list("intercept")?;
    beta.set_block(0, &intercept)?;
    let raw = record.get("coefficients").unwrap_or("");
    for triplet in raw.split(',').filter(|t| !t.is_empty()) {
        let bad = || CliError::Validation(format!("malformed coefficient '{triplet}'"));
        let mut parts = triplet.splitn(3, '/');
        let j: usize = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let i: usize = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let v: f64 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        if j >= structure.num_blocks() || i >= structure.block_dim(j) {
            return Err(bad());
        }
        beta.block_mut(j)[i] = v;
    }
    Ok(beta)
}
