//! Artifact formats: long-format trajectory CSV, a compact binary frame
//! file, center/spectrum/decay tables and JSON reports.
//!
//! Every float is written as `{:.16e}` (17 significant digits), which
//! round-trips `f64` exactly.
//!
//! # Binary frame format
//!
//! All integers and floats little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"TWFRAME1"
//! 8       8     u64    n_nodes
//! 16      8     u64    n_frames
//! 24      8     f64    epsilon
//! 32      8     f64    half_length
//! 40      8     f64    dx
//! 48      ...   n_frames × (f64 t, n_nodes × f64 m1, n_nodes × f64 m2)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::center::CenterEstimate;
use crate::grid::{build_grid, Field, Grid1D};
use crate::linear::LinearRecord;
use crate::spde::{CoupledState, SimConfig, Trajectory};

pub const FRAME_MAGIC: &[u8; 8] = b"TWFRAME1";

/// Errors from reading or writing artifacts.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed artifact: {0}")]
    Format(String),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn bad(msg: impl Into<String>) -> IoError {
    IoError::Format(msg.into())
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> IoResult<f64> {
    s.trim()
        .parse()
        .map_err(|_| bad(format!("not a number: {s:?}")))
}

fn check_header(reader: &mut csv::Reader<File>, expected: &[&str]) -> IoResult<()> {
    let header = reader.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(bad(format!("expected header {}", expected.join(","))));
    }
    Ok(())
}

/// Long format: one row `t,x,m1,m2` per frame and node.
pub fn write_trajectory_csv(path: &Path, trajectory: &Trajectory) -> IoResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "m1", "m2"])?;
    for frame in &trajectory.frames {
        let grid = frame.grid();
        let t = fmt_f64(frame.t);
        for j in 0..grid.n_nodes() {
            w.write_record([
                t.as_str(),
                &fmt_f64(grid.x(j)),
                &fmt_f64(frame.m1.values()[j]),
                &fmt_f64(frame.m2.values()[j]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a long-format trajectory on `grid`. Node positions must match the
/// grid to within `1e-9·dx`.
pub fn read_trajectory_csv(path: &Path, grid: &Grid1D) -> IoResult<Trajectory> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(&mut r, &["t", "x", "m1", "m2"])?;
    let n = grid.n_nodes();
    let mut frames = Vec::new();
    let (mut t, mut m1, mut m2) = (0.0, Vec::with_capacity(n), Vec::with_capacity(n));
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(bad(format!("row {row}: expected 4 columns")));
        }
        let j = row % n;
        let x = parse_f64(&rec[1])?;
        if (x - grid.x(j)).abs() > 1e-9 * grid.dx() {
            return Err(bad(format!("row {row}: x = {x} is not node {j}")));
        }
        let rt = parse_f64(&rec[0])?;
        if j == 0 {
            t = rt;
        } else if rt != t {
            return Err(bad(format!("row {row}: frame time changed mid-frame")));
        }
        m1.push(parse_f64(&rec[2])?);
        m2.push(parse_f64(&rec[3])?);
        if j + 1 == n {
            let a = Field::new(*grid, std::mem::take(&mut m1)).map_err(|e| bad(e.to_string()))?;
            let b = Field::new(*grid, std::mem::take(&mut m2)).map_err(|e| bad(e.to_string()))?;
            frames.push(CoupledState { t, m1: a, m2: b });
        }
    }
    if !m1.is_empty() {
        return Err(bad("truncated final frame"));
    }
    Ok(Trajectory { frames })
}

pub fn write_trajectory_binary(path: &Path, trajectory: &Trajectory) -> IoResult<()> {
    let first = trajectory
        .frames
        .first()
        .ok_or_else(|| bad("empty trajectory"))?;
    let grid = *first.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FRAME_MAGIC)?;
    w.write_all(&(grid.n_nodes() as u64).to_le_bytes())?;
    w.write_all(&(trajectory.len() as u64).to_le_bytes())?;
    for v in [grid.epsilon(), grid.half_length(), grid.dx()] {
        w.write_all(&v.to_le_bytes())?;
    }
    for frame in &trajectory.frames {
        if *frame.grid() != grid {
            return Err(bad("frames live on different grids"));
        }
        w.write_all(&frame.t.to_le_bytes())?;
        for v in frame.m1.values().iter().chain(frame.m2.values()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_binary(path: &Path) -> IoResult<Trajectory> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != FRAME_MAGIC {
        return Err(bad("bad magic bytes"));
    }
    let mut word = [0u8; 8];
    let mut u64_le = |r: &mut BufReader<File>| -> IoResult<u64> {
        r.read_exact(&mut word)?;
        Ok(u64::from_le_bytes(word))
    };
    let n = u64_le(&mut r)? as usize;
    let n_frames = u64_le(&mut r)? as usize;
    let epsilon = f64::from_bits(u64_le(&mut r)?);
    let half_length = f64::from_bits(u64_le(&mut r)?);
    let dx = f64::from_bits(u64_le(&mut r)?);
    let grid = build_grid(epsilon, dx, Some(half_length)).map_err(|e| bad(e.to_string()))?;
    if grid.n_nodes() != n {
        return Err(bad(format!(
            "header declares {n} nodes, grid has {}",
            grid.n_nodes()
        )));
    }
    let mut frames = Vec::with_capacity(n_frames);
    let mut buf = vec![0u8; 8 * (1 + 2 * n)];
    for _ in 0..n_frames {
        r.read_exact(&mut buf)?;
        let vals: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let field = |s: &[f64]| Field::new(grid, s.to_vec()).map_err(|e| bad(e.to_string()));
        frames.push(CoupledState {
            t: vals[0],
            m1: field(&vals[1..=n])?,
            m2: field(&vals[n + 1..])?,
        });
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(bad("trailing bytes after the last frame"));
    }
    Ok(Trajectory { frames })
}

/// Center path as `t,xi,residual,proper`.
pub fn write_center_csv(path: &Path, path_rows: &[(f64, CenterEstimate)]) -> IoResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "xi", "residual", "proper"])?;
    for (t, c) in path_rows {
        w.write_record([
            fmt_f64(*t),
            fmt_f64(c.xi),
            fmt_f64(c.residual),
            c.proper.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `index,eigenvalue` in descending order.
pub fn write_spectrum_csv(path: &Path, eigenvalues: &[f64]) -> IoResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "eigenvalue"])?;
    for (i, mu) in eigenvalues.iter().enumerate() {
        w.write_record([i.to_string(), fmt_f64(*mu)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectrum_csv(path: &Path) -> IoResult<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(&mut r, &["index", "eigenvalue"])?;
    r.records().map(|rec| parse_f64(&rec?[1])).collect()
}

/// `t,proj_plus,proj_minus,orth_norm`.
pub fn write_decay_csv(path: &Path, records: &[LinearRecord]) -> IoResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "proj_plus", "proj_minus", "orth_norm"])?;
    for r in records {
        w.write_record([
            fmt_f64(r.t),
            fmt_f64(r.proj_plus),
            fmt_f64(r.proj_minus),
            fmt_f64(r.orth_norm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Generic numeric table with a header row.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> IoResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(bad("row width does not match the header"));
        }
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON envelope: the full configuration, its master seed and the payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub seed: u64,
    pub config: SimConfig,
    pub report: T,
}

impl<T> Report<T> {
    pub fn new(config: &SimConfig, report: T) -> Self {
        Self {
            seed: config.seed,
            config: config.clone(),
            report,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> IoResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> IoResult<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
