//! Trace CSV: one row per evaluation, floats with 17 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use bo_core::engine::{RecordFlag, TraceRecord};

use crate::error::{HarnessError, Result};

pub const COLUMNS: [&str; 15] = [
    "t",
    "x",
    "y",
    "y_plus",
    "mu_prev",
    "sigma_prev",
    "beta_sqrt",
    "acq_value",
    "r_inst",
    "r_cum",
    "info_gain_cum",
    "grid_size",
    "flags",
    "f_x",
    "orientation",
];

pub fn fmt_f64(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

fn row(r: &TraceRecord) -> [String; 15] {
    [
        r.t.to_string(),
        r.x.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(";"),
        fmt_f64(r.y),
        fmt_f64(r.y_plus),
        fmt_f64(r.mu_prev),
        fmt_f64(r.sigma_prev),
        r.beta_sqrt.map(fmt_f64).unwrap_or_default(),
        r.acq_value.map(fmt_f64).unwrap_or_default(),
        fmt_f64(r.r_inst),
        fmt_f64(r.r_cum),
        fmt_f64(r.info_gain_cum),
        r.grid_size.map(|g| g.to_string()).unwrap_or_default(),
        r.flags.iter().map(|f| f.name()).collect::<Vec<_>>().join("|"),
        fmt_f64(r.f_x),
        r.orientation.name().to_string(),
    ]
}

pub fn write_trace<W: Write>(out: W, records: &[TraceRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_to_string(records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    let s = rec.get(i).ok_or_else(|| format!("missing column {}", COLUMNS[i]))?;
    s.parse::<T>().map_err(|e| format!("column {}: `{s}`: {e}", COLUMNS[i]))
}

fn optional<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> std::result::Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    match rec.get(i) {
        Some("") | None => Ok(None),
        Some(_) => field(rec, i).map(Some),
    }
}

fn parse_row(rec: &csv::StringRecord) -> std::result::Result<TraceRecord, String> {
    let x = rec
        .get(1)
        .unwrap_or("")
        .split(';')
        .map(|s| s.parse::<f64>().map_err(|e| format!("column x: `{s}`: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let flags = match rec.get(12).unwrap_or("") {
        "" => Vec::new(),
        s => s
            .split('|')
            .map(|f| f.parse::<RecordFlag>().map_err(|e| e.to_string()))
            .collect::<std::result::Result<Vec<_>, _>>()?,
    };
    Ok(TraceRecord {
        t: field(rec, 0)?,
        x,
        y: field(rec, 2)?,
        y_plus: field(rec, 3)?,
        mu_prev: field(rec, 4)?,
        sigma_prev: field(rec, 5)?,
        beta_sqrt: optional(rec, 6)?,
        acq_value: optional(rec, 7)?,
        r_inst: field(rec, 8)?,
        r_cum: field(rec, 9)?,
        info_gain_cum: field(rec, 10)?,
        grid_size: optional(rec, 11)?,
        flags,
        f_x: field(rec, 13)?,
        orientation: rec
            .get(14)
            .unwrap_or("")
            .parse()
            .map_err(|e: bo_core::Error| e.to_string())?,
    })
}

/// Parses a trace; `origin` names the source in errors.
pub fn read_trace<R: Read>(input: R, origin: &Path) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| HarnessError::format(origin, e))?;
    if headers.iter().ne(COLUMNS) {
        return Err(HarnessError::format(origin, format!("unexpected header {headers:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::format(origin, e))?;
        out.push(parse_row(&rec).map_err(|e| HarnessError::format(origin, format!("row {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRecord>> {
    let f = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_trace(std::io::BufReader::new(f), path)
}

/// Problems with a parsed trace, empty when all record invariants hold.
pub fn invariant_violations(records: &[TraceRecord]) -> Vec<String> {
    let mut out = Vec::new();
    let mut cum = 0.0;
    let mut prev_plus = f64::INFINITY;
    let mut prev_gain = 0.0;
    for (i, r) in records.iter().enumerate() {
        if r.t != i + 1 {
            out.push(format!("row {}: t = {}", i + 1, r.t));
        }
        cum += r.r_inst;
        if (cum - r.r_cum).abs() > 1e-9 * (1.0 + cum.abs()) {
            out.push(format!("t = {}: r_cum {} differs from running sum {cum}", r.t, r.r_cum));
        }
        if r.y_plus > prev_plus {
            out.push(format!("t = {}: y_plus increased", r.t));
        }
        if r.info_gain_cum < prev_gain {
            out.push(format!("t = {}: info_gain_cum decreased", r.t));
        }
        prev_plus = r.y_plus;
        prev_gain = r.info_gain_cum;
    }
    out
}
