use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Terminator, WriterBuilder};

use crate::cfr::CfrSnapshot;
use crate::preprocess::LabeledExample;
use crate::{ComplexSample, Error, Label, Result};

const CFR_ID_COLUMNS: [&str; 4] = ["subject_id", "session_id", "frame_index", "label"];
const EXAMPLE_ID_COLUMNS: [&str; 4] = ["subject_id", "session_id", "window_index", "label"];
const DEFAULT_WIDTH: usize = 64;

/// Nine significant digits, round-half-even on the exact binary value.
pub fn format_real(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn cfr_header(width: usize) -> Vec<String> {
    let mut h: Vec<String> = CFR_ID_COLUMNS.iter().map(|s| s.to_string()).collect();
    for k in 0..width {
        h.push(format!("h{k:02}_re"));
        h.push(format!("h{k:02}_im"));
    }
    h
}

pub fn examples_header(width: usize) -> Vec<String> {
    let mut h: Vec<String> = EXAMPLE_ID_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.extend((0..width).map(|k| format!("f{k:02}")));
    h
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

fn finish<W: Write>(path: &Path, w: csv::Writer<W>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

pub fn write_cfr_csv(snapshots: &[CfrSnapshot], path: &Path) -> Result<()> {
    let width = snapshots.first().map_or(DEFAULT_WIDTH, |s| s.h.len());
    let mut w = csv_writer(path)?;
    w.write_record(cfr_header(width)).map_err(|e| csv_err(path, e))?;
    let mut row: Vec<String> = Vec::with_capacity(4 + 2 * width);
    for s in snapshots {
        if s.h.len() != width {
            return Err(Error::Input(format!(
                "snapshot {} has {} subcarriers, expected {width}",
                s.frame_index,
                s.h.len()
            )));
        }
        row.clear();
        row.push(s.subject_id.to_string());
        row.push(s.session_id.to_string());
        row.push(s.frame_index.to_string());
        row.push(s.label.to_string());
        for h in &s.h {
            row.push(format_real(h.re));
            row.push(format_real(h.im));
        }
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn write_examples_csv(examples: &[LabeledExample], path: &Path) -> Result<()> {
    let width = examples.first().map_or(DEFAULT_WIDTH, |e| e.features.len());
    let mut w = csv_writer(path)?;
    w.write_record(examples_header(width)).map_err(|e| csv_err(path, e))?;
    let mut row: Vec<String> = Vec::with_capacity(4 + width);
    for e in examples {
        if e.features.len() != width {
            return Err(Error::Input(format!(
                "example has {} features, expected {width}",
                e.features.len()
            )));
        }
        row.clear();
        row.push(e.subject_id.to_string());
        row.push(e.session_id.to_string());
        row.push(e.window_index.to_string());
        row.push(e.label.to_string());
        row.extend(e.features.iter().map(|v| format_real(*v)));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Rows of a file after its header was checked against `expected(width)`.
/// Yields `(line, record)`; width is inferred from the header length.
fn read_rows(
    path: &Path,
    id_columns: usize,
    per_column: usize,
    expected: fn(usize) -> Vec<String>,
) -> Result<(usize, Vec<(u64, StringRecord)>)> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    if text.contains('\r') {
        return Err(Error::Parse {
            line: 1 + text[..text.find('\r').unwrap()].matches('\n').count() as u64,
            message: "carriage return found; files use LF line endings".into(),
        });
    }
    let mut rdr = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    let numeric = header.len().saturating_sub(id_columns);
    if header.len() < id_columns || numeric % per_column != 0 {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header with {} columns", header.len()),
        });
    }
    let width = numeric / per_column;
    let want = expected(width);
    if let Some((i, (got, exp))) = header.iter().zip(&want).enumerate().find(|(_, (g, e))| g != e) {
        return Err(Error::Parse {
            line: 1,
            message: format!("header column {} is `{got}`, expected `{exp}`", i + 1),
        });
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        rows.push((line, rec));
    }
    Ok((width, rows))
}

fn parse_int<T: std::str::FromStr>(field: &str, name: &str, line: u64) -> Result<T> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{field}` is not a valid {name}"),
    })
}

fn parse_label(field: &str, line: u64) -> Result<Label> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("unknown label `{field}`"),
    })
}

fn parse_real(field: &str, line: u64) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Data {
            line,
            message: format!("non-finite value `{field}`"),
        });
    }
    Ok(v)
}

pub fn read_cfr_csv(path: &Path) -> Result<Vec<CfrSnapshot>> {
    let (width, rows) = read_rows(path, 4, 2, cfr_header)?;
    rows.into_iter()
        .map(|(line, r)| {
            let h = (0..width)
                .map(|k| {
                    Ok(ComplexSample::new(
                        parse_real(&r[4 + 2 * k], line)?,
                        parse_real(&r[5 + 2 * k], line)?,
                    ))
                })
                .collect::<Result<_>>()?;
            Ok(CfrSnapshot {
                subject_id: parse_int(&r[0], "subject_id", line)?,
                session_id: parse_int(&r[1], "session_id", line)?,
                frame_index: parse_int(&r[2], "frame_index", line)?,
                label: parse_label(&r[3], line)?,
                h,
            })
        })
        .collect()
}

pub fn read_examples_csv(path: &Path) -> Result<Vec<LabeledExample>> {
    let (width, rows) = read_rows(path, 4, 1, examples_header)?;
    rows.into_iter()
        .map(|(line, r)| {
            Ok(LabeledExample {
                subject_id: parse_int(&r[0], "subject_id", line)?,
                session_id: parse_int(&r[1], "session_id", line)?,
                window_index: parse_int(&r[2], "window_index", line)?,
                label: parse_label(&r[3], line)?,
                features: (0..width)
                    .map(|k| parse_real(&r[4 + k], line))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}
