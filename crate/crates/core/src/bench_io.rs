//! Benchmark instance formats, best-known-value tables and run records.
//!
//! TOP instances use the Chao layout:
//!
//! ```text
//! n <vertex count>
//! m <path count>
//! tmax <budget>
//! x y score        (one line per vertex; first = start, last = end)
//! ```
//!
//! QAP instances use the QAPLIB layout: `n`, then `n^2` flow entries and
//! `n^2` distance entries, whitespace separated with arbitrary wrapping.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qap::QapInstance;
use crate::top::{TopInstance, Vertex};

fn parse_num(tok: &str, line: usize, what: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("{what}: `{tok}` is not a number")))
}

fn header_value<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<(usize, f64)> {
    let (line, text) = lines
        .next()
        .ok_or_else(|| Error::parse(0, format!("missing `{key}` header")))?;
    let mut toks = text.split_whitespace();
    match (toks.next(), toks.next(), toks.next()) {
        (Some(k), Some(v), None) if k.eq_ignore_ascii_case(key) => Ok((line, parse_num(v, line, key)?)),
        _ => Err(Error::parse(line, format!("expected `{key} <value>`, got `{}`", text.trim()))),
    }
}

/// Parses a Chao-format TOP instance. `Tmax` is taken as written.
pub fn parse_top_instance(text: &str) -> Result<TopInstance> {
    parse_top_instance_scaled(text, 1.0)
}

/// Parses a Chao-format TOP instance, multiplying the header `Tmax` by
/// `tmax_scale` (some distributions store it scaled).
pub fn parse_top_instance_scaled(text: &str, tmax_scale: f64) -> Result<TopInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (nline, n) = header_value(&mut lines, "n")?;
    let (pline, m) = header_value(&mut lines, "m")?;
    let (_, tmax) = header_value(&mut lines, "tmax")?;
    if n.fract() != 0.0 || n < 2.0 {
        return Err(Error::parse(nline, format!("vertex count {n} is not an integer >= 2")));
    }
    if m.fract() != 0.0 || m < 1.0 {
        return Err(Error::parse(pline, format!("path count {m} is not a positive integer")));
    }
    let n = n as usize;
    let mut vertices = Vec::with_capacity(n);
    let mut last_line = pline;
    for (line, text) in lines {
        last_line = line;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(line, format!("expected `x y score`, got {} fields", toks.len())));
        }
        vertices.push(Vertex {
            x: parse_num(toks[0], line, "x")?,
            y: parse_num(toks[1], line, "y")?,
            score: parse_num(toks[2], line, "score")?,
        });
    }
    if vertices.len() != n {
        return Err(Error::parse(
            last_line,
            format!("header declares {n} vertices, found {}", vertices.len()),
        ));
    }
    TopInstance::new(vertices, 0, n - 1, m as usize, tmax * tmax_scale)
}

/// Serializes a TOP instance in the Chao layout with round-trip precision.
pub fn write_top_instance(inst: &TopInstance) -> String {
    let mut out = format!("n {}\nm {}\ntmax {}\n", inst.len(), inst.path_count(), inst.tmax());
    for v in inst.vertices() {
        out.push_str(&format!("{}\t{}\t{}\n", v.x, v.y, v.score));
    }
    out
}

fn numeric_tokens(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            out.push(parse_num(tok, i + 1, "matrix entry")?);
        }
    }
    Ok(out)
}

/// Parses a QAPLIB instance: flow matrix first, distance matrix second.
pub fn parse_qap_instance(text: &str) -> Result<QapInstance> {
    let toks = numeric_tokens(text)?;
    let n = *toks.first().ok_or_else(|| Error::parse(1, "empty QAP file"))?;
    if n.fract() != 0.0 || n < 1.0 {
        return Err(Error::parse(1, format!("size {n} is not a positive integer")));
    }
    let n = n as usize;
    let expected = 1 + 2 * n * n;
    if toks.len() != expected {
        return Err(Error::parse(
            text.lines().count(),
            format!("size {n} needs {expected} tokens, found {}", toks.len()),
        ));
    }
    QapInstance::new(n, toks[1..1 + n * n].to_vec(), toks[1 + n * n..].to_vec())
}

/// Serializes a QAP instance in the QAPLIB layout.
pub fn write_qap_instance(inst: &QapInstance) -> String {
    let n = inst.size();
    let mut out = format!("{n}\n");
    for m in [inst.flow_matrix(), inst.distance_matrix()] {
        out.push('\n');
        for row in m.chunks(n) {
            let row: Vec<String> = row.iter().map(f64::to_string).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

/// A QAPLIB solution file: size, published cost and 1-based permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct QapSolutionFile {
    pub n: usize,
    pub cost: f64,
    /// Zero-based facility-to-location permutation.
    pub perm: Vec<usize>,
}

pub fn parse_qap_solution(text: &str) -> Result<QapSolutionFile> {
    let toks = numeric_tokens(text)?;
    if toks.len() < 2 {
        return Err(Error::parse(1, "solution file needs `n cost` and a permutation"));
    }
    let n = toks[0] as usize;
    if toks.len() != 2 + n {
        return Err(Error::parse(1, format!("size {n} needs {} tokens, found {}", 2 + n, toks.len())));
    }
    let perm: Vec<usize> = toks[2..]
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && v >= 1.0 && v <= n as f64 {
                Ok(v as usize - 1)
            } else {
                Err(Error::parse(2, format!("permutation entry {v} is not in 1..={n}")))
            }
        })
        .collect::<Result<_>>()?;
    if !crate::qap::is_permutation(&perm) {
        return Err(Error::parse(2, "solution is not a permutation"));
    }
    Ok(QapSolutionFile { n, cost: toks[1], perm })
}

/// Best-known objective per instance name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BksTable {
    values: BTreeMap<String, f64>,
}

impl BksTable {
    pub fn get(&self, instance: &str) -> Option<f64> {
        self.values.get(instance).copied()
    }

    pub fn require(&self, instance: &str) -> Result<f64> {
        self.get(instance).ok_or_else(|| Error::MissingBks(instance.to_string()))
    }

    pub fn insert(&mut self, instance: impl Into<String>, value: f64) -> Option<f64> {
        self.values.insert(instance.into(), value)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Reads `instance,value` lines. Blank lines and `#` comments are skipped;
/// a repeated name keeps the last value.
pub fn load_bks(text: &str) -> Result<BksTable> {
    let mut table = BksTable::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, value) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(i + 1, format!("expected `instance,value`, got `{line}`")))?;
        let value = parse_num(value.trim(), i + 1, "best-known value")?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::parse(i + 1, format!("best-known value {value} must be positive")));
        }
        if let Some(old) = table.insert(name.trim(), value) {
            log::warn!("duplicate best-known entry for `{}` ({old} replaced by {value})", name.trim());
        }
    }
    Ok(table)
}

pub fn load_bks_file(path: &Path) -> Result<BksTable> {
    load_bks(&read_to_string(path)?)
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Instance file names listed one per line; blank lines and `#` comments
/// are ignored.
pub fn parse_manifest(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

/// One generation of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecordRow {
    pub instance: String,
    pub strategy: String,
    pub population_size: usize,
    pub p_r: f64,
    pub p_m: f64,
    pub seed: u64,
    pub generation: usize,
    pub elapsed_seconds: f64,
    pub best_objective: f64,
}

pub const RUN_RECORD_HEADER: &str =
    "instance,strategy,population_size,p_r,p_m,seed,generation,elapsed_seconds,best_objective";

/// Writes rows as CSV with a fixed header.
pub fn write_run_records_to<W: Write>(rows: &[RunRecordRow], sink: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(RUN_RECORD_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}

/// Writes a run file atomically: a sibling temp file renamed into place.
pub fn write_run_records(rows: &[RunRecordRow], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("csv.tmp");
    let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    write_run_records_to(rows, std::io::BufWriter::new(file))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_run_records_from<R: std::io::Read>(source: R) -> Result<Vec<RunRecordRow>> {
    let mut r = csv::Reader::from_reader(source);
    let rows: std::result::Result<Vec<RunRecordRow>, _> = r.deserialize().collect();
    Ok(rows?)
}

pub fn read_run_records(path: &Path) -> Result<Vec<RunRecordRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_run_records_from(file)
}
