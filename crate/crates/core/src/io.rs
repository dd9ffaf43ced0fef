//! CSV and key=value sidecar formats for datasets, polynomials,
//! certificates, run traces, models and reports.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! reader recovers the written values exactly. Timestamps only ever appear in
//! sidecars.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use csv::{ReaderBuilder, StringRecord, WriterBuilder};
use nalgebra::DMatrix;

use crate::certificate::{CertificateMatrix, ValidationReport};
use crate::distributions::Points;
use crate::error::{Error, Result};
use crate::evaluation::BoundCheck;
use crate::learner::TraceRecord;
use crate::noise::{TsybakovReport, TsybakovRow};
use crate::oracle::Dataset;
use crate::polynomials::{MonomialBasis, MultivariatePoly};

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: `{s}`")))
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(s).map(Some)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn split(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(parse_f64).collect()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(WriterBuilder::new().from_path(path)?)
}

fn reader(path: &Path, headers: bool) -> Result<csv::Reader<fs::File>> {
    Ok(ReaderBuilder::new()
        .has_headers(headers)
        .flexible(true)
        .from_path(path)?)
}

/// `<path>.meta`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes `key=value` lines, followed by a `created_unix` timestamp.
pub fn write_sidecar(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in entries {
        if k.contains('=') || k.contains('\n') || v.contains('\n') {
            return Err(Error::Parse(format!(
                "sidecar entry `{k}` cannot be encoded"
            )));
        }
        out.push_str(&format!("{k}={v}\n"));
    }
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    out.push_str(&format!("created_unix={secs}\n"));
    fs::write(sidecar_path(path), out)?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(sidecar_path(path))?;
    parse_key_values(&text)
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn write_points(path: &Path, points: &Points) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record((1..=points.dim()).map(|i| format!("x{i}")))?;
    for row in points.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = (1..=data.dim()).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for (x, y) in data.iter() {
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `x1,...,xd[,y]` format; labels are `None` when the `y` column
/// is absent.
pub fn read_table(path: &Path) -> Result<(Points, Option<Vec<f64>>)> {
    let mut r = reader(path, true)?;
    let header = r.headers()?.clone();
    let has_y = header.iter().last() == Some("y");
    let d = header.len() - usize::from(has_y);
    for (i, h) in header.iter().take(d).enumerate() {
        if h != format!("x{}", i + 1) {
            return Err(Error::Parse(format!("unexpected column `{h}`")));
        }
    }
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!(
                "row has {} fields, expected {}",
                rec.len(),
                header.len()
            )));
        }
        for v in rec.iter().take(d) {
            flat.push(parse_f64(v)?);
        }
        if has_y {
            labels.push(parse_f64(&rec[d])?);
        }
    }
    let points = Points::from_flat(d, flat)?;
    Ok((points, has_y.then_some(labels)))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    match read_table(path)? {
        (points, Some(labels)) => Dataset::new(points, labels),
        _ => Err(Error::Parse(format!(
            "{}: missing `y` column",
            path.display()
        ))),
    }
}

pub fn write_polynomial(path: &Path, p: &MultivariatePoly) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["exponents", "coefficient"])?;
    for (idx, c) in p.basis().indices().iter().zip(p.coeffs()) {
        let exps = idx
            .exponents()
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([exps, c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_polynomial(path: &Path) -> Result<MultivariatePoly> {
    let mut r = reader(path, true)?;
    let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Parse("expected `exponents,coefficient` rows".into()));
        }
        let exps = rec[0]
            .split(';')
            .map(|e| {
                e.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad exponent `{e}`")))
            })
            .collect::<Result<Vec<u32>>>()?;
        terms.push((exps, parse_f64(&rec[1])?));
    }
    let d = terms
        .first()
        .map(|t| t.0.len())
        .ok_or(Error::EmptyInput("polynomial"))?;
    let k = terms
        .iter()
        .map(|t| t.0.iter().sum::<u32>() as usize)
        .max()
        .unwrap_or(0);
    let basis = MonomialBasis::new(d, k)?;
    let mut coeffs = vec![0.0; basis.len()];
    for (exps, c) in terms {
        let pos = basis
            .position(&exps)
            .ok_or_else(|| Error::Parse(format!("exponents {exps:?} not in basis")))?;
        coeffs[pos] = c;
    }
    MultivariatePoly::new(basis, coeffs)
}

/// Basis descriptor line, then the dense lower triangle one row per line;
/// objective and budget go in the sidecar.
pub fn write_certificate(
    path: &Path,
    c: &CertificateMatrix,
    extra: &[(String, String)],
) -> Result<()> {
    let mut w = WriterBuilder::new().flexible(true).from_path(path)?;
    let b = &c.basis;
    w.write_record([
        "basis".to_string(),
        format!("d={}", b.dim()),
        format!("k={}", b.degree()),
        format!("m={}", b.len()),
    ])?;
    let m = b.len();
    for r in 0..m {
        w.write_record((0..=r).map(|col| c.a_mat[(r, col)].to_string()))?;
    }
    w.flush()?;
    let mut meta = vec![
        ("objective".to_string(), c.objective.to_string()),
        ("q_bound".to_string(), c.q_bound.to_string()),
        ("version".to_string(), crate::VERSION.to_string()),
    ];
    meta.extend_from_slice(extra);
    write_sidecar(path, &meta)
}

fn descriptor_value(rec: &StringRecord, i: usize, key: &str) -> Result<usize> {
    rec.get(i)
        .and_then(|s| s.strip_prefix(&format!("{key}=")))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad basis descriptor field `{key}`")))
}

pub fn read_certificate(path: &Path) -> Result<CertificateMatrix> {
    let mut r = reader(path, false)?;
    let mut records = r.records();
    let head = records.next().ok_or(Error::EmptyInput("certificate"))??;
    if head.get(0) != Some("basis") {
        return Err(Error::Parse("missing basis descriptor".into()));
    }
    let d = descriptor_value(&head, 1, "d")?;
    let k = descriptor_value(&head, 2, "k")?;
    let m = descriptor_value(&head, 3, "m")?;
    let basis = MonomialBasis::new(d, k)?;
    if basis.len() != m {
        return Err(Error::Parse(format!(
            "descriptor m = {m} but C(d+k, k) = {}",
            basis.len()
        )));
    }
    let mut a = DMatrix::zeros(m, m);
    let mut rows = 0;
    for (r_idx, rec) in records.enumerate() {
        let rec = rec?;
        if r_idx >= m || rec.len() != r_idx + 1 {
            return Err(Error::Parse(format!(
                "row {r_idx} has {} entries",
                rec.len()
            )));
        }
        for (c_idx, v) in rec.iter().enumerate() {
            let v = parse_f64(v)?;
            a[(r_idx, c_idx)] = v;
            a[(c_idx, r_idx)] = v;
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::Parse(format!("expected {m} rows, found {rows}")));
    }
    let meta = read_sidecar(path)?;
    let get = |key: &str| -> Result<f64> {
        meta.get(key)
            .ok_or_else(|| Error::Parse(format!("sidecar missing `{key}`")))
            .and_then(|v| parse_f64(v))
    };
    Ok(CertificateMatrix {
        basis,
        a_mat: a,
        q_bound: get("q_bound")?,
        objective: get("objective")?,
    })
}

const TRACE_HEADER: [&str; 14] = [
    "t",
    "w_norm",
    "angle",
    "fit_objective",
    "holdout_objective",
    "holdout_se",
    "holdout_n",
    "certificate_found",
    "loss",
    "grad_norm",
    "step",
    "w",
    "gradient",
    "w_next",
];

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TRACE_HEADER)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.w_norm.to_string(),
            fmt_opt(r.angle),
            fmt_opt(r.fit_objective),
            fmt_opt(r.holdout.map(|h| h.objective_est)),
            fmt_opt(r.holdout.and_then(|h| h.std_err)),
            r.holdout.map(|h| h.n.to_string()).unwrap_or_default(),
            (r.certificate_found as u8).to_string(),
            r.loss.to_string(),
            r.grad_norm.to_string(),
            r.step.to_string(),
            join(&r.w),
            join(&r.gradient),
            join(&r.w_next),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let mut r = reader(path, true)?;
    if r.headers()?.iter().ne(TRACE_HEADER) {
        return Err(Error::Parse("unexpected trace header".into()));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != TRACE_HEADER.len() {
            return Err(Error::Parse("short trace row".into()));
        }
        let holdout = match parse_opt(&rec[4])? {
            Some(objective_est) => Some(ValidationReport {
                objective_est,
                std_err: parse_opt(&rec[5])?,
                n: rec[6]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad holdout_n `{}`", &rec[6])))?,
            }),
            None => None,
        };
        out.push(TraceRecord {
            t: rec[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad t `{}`", &rec[0])))?,
            w_norm: parse_f64(&rec[1])?,
            angle: parse_opt(&rec[2])?,
            fit_objective: parse_opt(&rec[3])?,
            holdout,
            certificate_found: &rec[7] == "1",
            loss: parse_f64(&rec[8])?,
            grad_norm: parse_f64(&rec[9])?,
            step: parse_f64(&rec[10])?,
            w: split(&rec[11])?,
            gradient: split(&rec[12])?,
            w_next: split(&rec[13])?,
        });
    }
    Ok(out)
}

/// One line of comma-separated coordinates.
pub fn write_model(path: &Path, w: &[f64], meta: &[(String, String)]) -> Result<()> {
    let mut wr = WriterBuilder::new().has_headers(false).from_path(path)?;
    wr.write_record(w.iter().map(|v| v.to_string()))?;
    wr.flush()?;
    write_sidecar(path, meta)
}

pub fn read_model(path: &Path) -> Result<Vec<f64>> {
    let mut r = reader(path, false)?;
    let rec = r.records().next().ok_or(Error::EmptyInput("model"))??;
    rec.iter().map(parse_f64).collect()
}

pub fn write_noise_report(path: &Path, report: &TsybakovReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "estimate", "bound", "violation"])?;
    for row in &report.rows {
        w.write_record([row.t, row.estimate, row.bound, row.violation].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_noise_report(path: &Path) -> Result<Vec<TsybakovRow>> {
    let mut r = reader(path, true)?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            let v = rec.iter().map(parse_f64).collect::<Result<Vec<_>>>()?;
            if v.len() != 4 {
                return Err(Error::Parse("expected 4 columns".into()));
            }
            Ok(TsybakovRow {
                t: v[0],
                estimate: v[1],
                bound: v[2],
                violation: v[3],
            })
        })
        .collect()
}

pub fn write_checks(path: &Path, checks: &[BoundCheck]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["metric", "value", "std_err", "bound", "holds"])?;
    for c in checks {
        w.write_record([
            c.name.clone(),
            c.lhs.to_string(),
            c.std_err.to_string(),
            c.rhs.to_string(),
            c.holds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checks(path: &Path) -> Result<Vec<BoundCheck>> {
    let mut r = reader(path, true)?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(Error::Parse("expected 5 columns".into()));
            }
            Ok(BoundCheck {
                name: rec[0].to_string(),
                lhs: parse_f64(&rec[1])?,
                std_err: parse_f64(&rec[2])?,
                rhs: parse_f64(&rec[3])?,
                holds: match &rec[4] {
                    "true" => true,
                    "false" => false,
                    other => return Err(Error::Parse(format!("bad flag `{other}`"))),
                },
            })
        })
        .collect()
}

/// Long-form table with a fixed header; values are written verbatim.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::Parse(format!(
                "row has {} fields, header {}",
                r.len(),
                header.len()
            )));
        }
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = reader(path, true)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| Ok(rec?.iter().map(String::from).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("halfcert-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let pts = Points::from_flat(2, vec![0.1, -1.0 / 3.0, 1e-300, 7.0]).unwrap();
        let data = Dataset::new(pts, vec![1.0, -1.0]).unwrap();
        let p = tmp("data.csv");
        write_dataset(&p, &data).unwrap();
        assert!(fs::read_to_string(&p).unwrap().starts_with("x1,x2,y\n"));
        assert_eq!(read_dataset(&p).unwrap(), data);
        let q = tmp("points.csv");
        write_points(&q, data.points()).unwrap();
        let (pts, labels) = read_table(&q).unwrap();
        assert_eq!(&pts, data.points());
        assert!(labels.is_none());
        assert!(read_dataset(&q).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let p = tmp("x.csv");
        write_sidecar(&p, &[("alpha".into(), "0.7".into())]).unwrap();
        let m = read_sidecar(&p).unwrap();
        assert_eq!(m["alpha"], "0.7");
        assert!(m.contains_key("created_unix"));
        assert!(parse_key_values("novalue").is_err());
    }

    #[test]
    fn certificate_round_trip() {
        let basis = MonomialBasis::new(2, 1).unwrap();
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, -0.2, 0.1, -0.2, 3.0]);
        let c = CertificateMatrix {
            basis,
            a_mat: a,
            q_bound: 4.5,
            objective: -0.125,
        };
        let p = tmp("cert.csv");
        write_certificate(&p, &c, &[]).unwrap();
        assert_eq!(read_certificate(&p).unwrap(), c);
    }
}
