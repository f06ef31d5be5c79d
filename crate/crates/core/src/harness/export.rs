//! CSV and JSON export. Floats are written in Rust's shortest round-trip form,
//! so a fixed seed gives byte-identical files.

use super::experiments::{EquivalenceReport, EquivalenceTable, GlobalLocalReport, RatioRow, NORM_NAMES};
use crate::error::{HardyError, Result};
use serde::Serialize;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

const RATIO_HEADER: [&str; 7] = ["p", "numerator", "denominator", "min", "max", "median", "count"];

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        v.to_string()
    }
}

fn parse_num(s: &str) -> Result<f64> {
    match s {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| HardyError::Format(format!("not a number: {s:?}"))),
    }
}

/// One row per `(p, pair)`. An empty slice gives the header alone.
pub fn write_ratio_csv<W: Write>(tables: &[EquivalenceTable], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RATIO_HEADER)?;
    for t in tables {
        for r in &t.rows {
            out.write_record([
                num(t.p),
                r.numerator.clone(),
                r.denominator.clone(),
                num(r.min),
                num(r.max),
                num(r.median),
                r.count.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_ratio_csv`]; `λ` is not stored and comes back as NaN.
pub fn read_ratio_csv<R: Read>(r: R) -> Result<Vec<EquivalenceTable>> {
    let mut rd = csv::Reader::from_reader(r);
    if rd.headers()?.iter().ne(RATIO_HEADER) {
        return Err(HardyError::Format("unexpected ratio table header".into()));
    }
    let mut tables: Vec<EquivalenceTable> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != RATIO_HEADER.len() {
            return Err(HardyError::Format(format!("ratio row has {} fields", rec.len())));
        }
        let p = parse_num(&rec[0])?;
        let row = RatioRow {
            numerator: rec[1].to_string(),
            denominator: rec[2].to_string(),
            min: parse_num(&rec[3])?,
            max: parse_num(&rec[4])?,
            median: parse_num(&rec[5])?,
            count: rec[6].parse().map_err(|_| HardyError::Format(format!("bad count {:?}", &rec[6])))?,
        };
        match tables.last_mut() {
            Some(t) if t.p.to_bits() == p.to_bits() => t.rows.push(row),
            _ => tables.push(EquivalenceTable { p, lambda: f64::NAN, rows: vec![row] }),
        }
    }
    Ok(tables)
}

/// Per-point columns: `point,<name>...`.
pub fn write_point_csv<W: Write>(names: &[&str], columns: &[&[f64]], w: W) -> Result<()> {
    if names.len() != columns.len() {
        return Err(HardyError::Shape { expected: names.len(), got: columns.len() });
    }
    let n = columns.first().map_or(0, |c| c.len());
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(HardyError::Shape { expected: n, got: c.len() });
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(std::iter::once("point").chain(names.iter().copied()))?;
    for x in 0..n {
        out.write_record(std::iter::once(x.to_string()).chain(columns.iter().map(|c| num(c[x]))))?;
    }
    out.flush()?;
    Ok(())
}

/// Per-input quasi-norms of an equivalence run.
pub fn write_norms_csv<W: Write>(report: &EquivalenceReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["p", "index", "kind"].into_iter().chain(NORM_NAMES))?;
    for r in &report.values {
        let kind = serde_json::to_value(r.kind)?.as_str().unwrap_or_default().to_string();
        out.write_record([num(r.p), r.index.to_string(), kind].into_iter().chain(r.norms.iter().map(|&v| num(v))))?;
    }
    out.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a super::experiments::ExperimentConfig,
    space: &'a str,
    n: usize,
    omega: f64,
    beta: f64,
    p_threshold: f64,
    theta_violations: usize,
    lambda_violations: usize,
    routes: &'a [super::experiments::RouteStats],
    tables: &'a [EquivalenceTable],
}

/// Writes `equivalence.json` (config, constants, tables), `ratios.csv` and
/// `norms.csv` into `dir`, creating it if needed. Returns the written paths.
pub fn export_report(report: &EquivalenceReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let json = dir.join("equivalence.json");
    write_json(
        &Summary {
            config: &report.config,
            space: &report.space,
            n: report.n,
            omega: report.omega,
            beta: report.beta,
            p_threshold: report.p_threshold,
            theta_violations: report.theta_violations,
            lambda_violations: report.lambda_violations,
            routes: &report.routes,
            tables: &report.tables,
        },
        &json,
    )?;
    let ratios = dir.join("ratios.csv");
    write_ratio_csv(&report.tables, fs::File::create(&ratios)?)?;
    let norms = dir.join("norms.csv");
    write_norms_csv(report, fs::File::create(&norms)?)?;
    Ok(vec![json, ratios, norms])
}

pub fn export_global_local(report: &GlobalLocalReport, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("globallocal.json");
    write_json(report, &path)?;
    Ok(path)
}
