//! Tabular artifacts and their parsers.
//!
//! Every CSV written here has a header row and ends with a metadata comment
//! `# <version>,<config sha256>`. Floats use the shortest round-trip form;
//! infinities are written as `inf`.

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::directopt::StudyRow;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::mfg::{FlowSnapshot, ParticleCloud};
use crate::trajectory::Trajectory;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex sha256 of a config document.
pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:?}")
    }
}

/// Parses a float cell, accepting `inf`, `-inf` and `nan`.
pub fn parse_f64(cell: &str) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| Error::Config(format!("not a number: {cell:?}")))
}

/// A header plus string rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// The trailing metadata of a CSV artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub version: String,
    pub config_hash: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self, config_hash: &str) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let mut bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        bytes.extend_from_slice(format!("# {VERSION},{config_hash}\n").as_bytes());
        String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
    }

    /// Array of row objects; numeric cells become JSON numbers, the rest
    /// (including `inf`) stay strings.
    pub fn to_json(&self, config_hash: &str) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(h, c)| {
                        let v = if let Ok(i) = c.parse::<i64>() {
                            Value::from(i)
                        } else {
                            match c.parse::<f64>() {
                                Ok(x) if x.is_finite() => serde_json::Number::from_f64(x).map_or(Value::String(c.clone()), Value::Number),
                                _ => Value::String(c.clone()),
                            }
                        };
                        (h.clone(), v)
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect();
        serde_json::json!({ "version": VERSION, "config_hash": config_hash, "rows": rows })
    }

    /// Parses a CSV artifact. Rows must match the header width; the
    /// metadata line, if present, must be the last line.
    pub fn parse_csv(text: &str) -> Result<(Table, Option<Meta>)> {
        let mut body = text;
        let mut meta = None;
        let trimmed = text.trim_end_matches('\n');
        if let Some(pos) = trimmed.rfind('\n').map(|p| p + 1).or(Some(0)) {
            let last = &trimmed[pos..];
            if let Some(rest) = last.strip_prefix("# ") {
                let (version, hash) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::Config(format!("malformed metadata line {last:?}")))?;
                if version.is_empty() || hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
                    return Err(Error::Config(format!("malformed metadata line {last:?}")));
                }
                meta = Some(Meta { version: version.to_string(), config_hash: hash.to_string() });
                body = &trimmed[..pos];
            }
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(body.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
        if header.is_empty() || header.iter().any(|h| h.is_empty()) {
            return Err(Error::Config("empty header".into()));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            if rec.iter().next().is_some_and(|c| c.starts_with('#')) {
                return Err(Error::Config("comment lines are only allowed at the end".into()));
            }
            rows.push(rec.iter().map(|s| s.to_string()).collect());
        }
        Ok((Table { header, rows }, meta))
    }
}

/// Comma-separated list of positive finite horizons, e.g. `1,2.5,4`.
pub fn parse_theta_list(text: &str) -> Result<Vec<f64>> {
    let out: Vec<f64> = text
        .split(',')
        .map(|s| {
            let th = parse_f64(s)?;
            if th.is_finite() && th > 0.0 {
                Ok(th)
            } else {
                Err(Error::Config(format!("horizon {s:?} must be positive and finite")))
            }
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Config("empty horizon list".into()));
    }
    Ok(out)
}

fn component_names(prefix: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=dim).map(|i| format!("{prefix}{i}")).collect()
    }
}

fn state_header(first: &[&str], dim: usize, last: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = first.iter().map(|s| s.to_string()).collect();
    h.extend(component_names("x", dim));
    h.extend(component_names("v", dim));
    h.extend(last.iter().map(|s| s.to_string()));
    h
}

/// `k,t,x…,v…,a…`; the final row has empty acceleration cells.
pub fn trajectory_table(tr: &Trajectory) -> Table {
    let n = tr.dim();
    let mut header = state_header(&["k", "t"], n, &[]);
    header.extend(component_names("a", n));
    let mut table = Table { header, rows: Vec::new() };
    for k in 0..=tr.steps() {
        let mut row = vec![k.to_string(), fmt_f64(tr.time(k))];
        row.extend(tr.position(k).iter().map(|&z| fmt_f64(z)));
        row.extend(tr.velocity(k).iter().map(|&z| fmt_f64(z)));
        if k < tr.steps() {
            row.extend(tr.acceleration(k).iter().map(|&z| fmt_f64(z)));
        } else {
            row.extend(std::iter::repeat(String::new()).take(n));
        }
        table.rows.push(row);
    }
    table
}

/// Rebuilds a trajectory from its CSV form. The grid must be uniform and
/// the stored states must agree with the integrated accelerations.
pub fn read_trajectory(text: &str) -> Result<Trajectory> {
    let (table, _) = Table::parse_csv(text)?;
    let width = table.header.len();
    if width < 5 || (width - 2) % 3 != 0 || table.header[0] != "k" || table.header[1] != "t" {
        return Err(Error::Config(format!("unexpected trajectory header {:?}", table.header)));
    }
    let n = (width - 2) / 3;
    let mut expected = state_header(&["k", "t"], n, &[]);
    expected.extend(component_names("a", n));
    if table.header != expected {
        return Err(Error::Config(format!("unexpected trajectory header {:?}", table.header)));
    }
    let steps = table.rows.len().checked_sub(1).filter(|&s| s >= 1).ok_or_else(|| Error::Config("a trajectory needs at least two rows".into()))?;
    let cell = |k: usize, c: usize| parse_f64(&table.rows[k][c]);
    let t0 = cell(0, 1)?;
    let dt = (cell(steps, 1)? - t0) / steps as f64;
    if !(t0.is_finite() && dt.is_finite() && dt > 0.0) {
        return Err(Error::Config("time column must be finite and increasing".into()));
    }
    let x0: Vec<f64> = (0..n).map(|i| cell(0, 2 + i)).collect::<Result<_>>()?;
    let v0: Vec<f64> = (0..n).map(|i| cell(0, 2 + n + i)).collect::<Result<_>>()?;
    let mut acc = Vec::with_capacity(steps * n);
    for k in 0..steps {
        if table.rows[k][0] != k.to_string() {
            return Err(Error::Config(format!("row {k} has index {:?}", table.rows[k][0])));
        }
        for i in 0..n {
            acc.push(cell(k, 2 + 2 * n + i)?);
        }
    }
    if acc.iter().chain(&x0).chain(&v0).any(|z| !z.is_finite()) {
        return Err(Error::Config("trajectory entries must be finite".into()));
    }
    let tr = Trajectory::from_accelerations(t0, dt, &x0, &v0, acc);
    let scale = 1.0 + tr.max_speed() * tr.final_time().abs().max(1.0);
    for k in 0..=steps {
        let t = cell(k, 1)?;
        if (t - tr.time(k)).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::Config(format!("time grid is not uniform at row {k}")));
        }
        for i in 0..n {
            let (x, v) = (cell(k, 2 + i)?, cell(k, 2 + n + i)?);
            if !((x - tr.position(k)[i]).abs() <= 1e-8 * scale && (v - tr.velocity(k)[i]).abs() <= 1e-8 * scale) {
                return Err(Error::Config(format!("row {k} disagrees with the integrated accelerations")));
            }
        }
    }
    Ok(tr)
}

/// `N,cost,violation,grad_norm`, one row per solve.
pub fn study_table(rows: &[StudyRow]) -> Table {
    let mut table = Table::new(&["N", "cost", "violation", "grad_norm"]);
    for r in rows {
        table.push(vec![r.steps.to_string(), fmt_f64(r.cost), fmt_f64(r.violation), fmt_f64(r.grad_norm)]);
    }
    table
}

/// `t,x…,v…,weight` for snapshot `k` of a flow.
pub fn flow_table(flow: &FlowSnapshot, k: usize) -> Table {
    let dim = flow.dim();
    let mut table = Table { header: state_header(&["t"], dim, &["weight"]), rows: Vec::new() };
    let t = fmt_f64(flow.times()[k]);
    for j in 0..flow.members() {
        let mut row = vec![t.clone()];
        row.extend(flow.position(k, j).iter().map(|&z| fmt_f64(z)));
        row.extend(flow.velocity(k, j).iter().map(|&z| fmt_f64(z)));
        row.push(fmt_f64(flow.weights()[j]));
        table.rows.push(row);
    }
    table
}

/// Reads a snapshot CSV back as an admissible cloud on `domain`.
pub fn read_cloud(text: &str, domain: &Domain) -> Result<ParticleCloud> {
    let (table, _) = Table::parse_csv(text)?;
    let width = table.header.len();
    if width < 4 || (width - 2) % 2 != 0 {
        return Err(Error::Config(format!("unexpected snapshot header {:?}", table.header)));
    }
    let dim = (width - 2) / 2;
    if table.header != state_header(&["t"], dim, &["weight"]) {
        return Err(Error::Config(format!("unexpected snapshot header {:?}", table.header)));
    }
    let rows: Vec<Vec<f64>> = table
        .rows
        .iter()
        .map(|r| r[1..].iter().map(|c| parse_f64(c)).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    ParticleCloud::from_rows(domain, dim, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_metadata() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1.0".into(), "inf".into()]);
        t.push(vec!["x,y".into(), "".into()]);
        let hash = config_hash(b"{}");
        let text = t.to_csv(&hash).unwrap();
        assert!(text.ends_with(&format!("# {VERSION},{hash}\n")));
        let (back, meta) = Table::parse_csv(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(meta.unwrap().config_hash, hash);
    }

    #[test]
    fn json_rows_keep_inf_as_string() {
        let mut t = Table::new(&["v", "tag"]);
        t.push(vec!["inf".into(), "blowup".into()]);
        t.push(vec!["0.5".into(), "zero".into()]);
        let j = t.to_json("00");
        assert_eq!(j["rows"][0]["v"], "inf");
        assert_eq!(j["rows"][1]["v"], 0.5);
    }

    #[test]
    fn theta_lists() {
        assert_eq!(parse_theta_list("1,2.5,4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert!(parse_theta_list("1,,2").is_err());
        assert!(parse_theta_list("0").is_err());
        assert!(parse_theta_list("inf").is_err());
        assert!(parse_theta_list("-1").is_err());
    }

    #[test]
    fn trajectory_round_trip() {
        let tr = Trajectory::from_accelerations(0.5, 0.1, &[0.1, -0.2], &[1.0, 0.0], (0..20).map(|i| (i as f64).sin()).collect());
        let text = trajectory_table(&tr).to_csv(&config_hash(b"")).unwrap();
        let back = read_trajectory(&text).unwrap();
        assert_eq!(back.steps(), tr.steps());
        assert!((back.dt() - tr.dt()).abs() < 1e-15);
        assert_eq!(back.accelerations(), tr.accelerations());
        let broken = text.replacen("\n1,", "\n7,", 1);
        assert!(read_trajectory(&broken).is_err());
    }

    #[test]
    fn fmt_is_round_trip() {
        for x in [0.1, 1e-7, -3.25, 1.0 / 3.0, f64::INFINITY] {
            assert_eq!(parse_f64(&fmt_f64(x)).unwrap(), x);
        }
    }
}
