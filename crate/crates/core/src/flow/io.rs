//! Line-oriented trajectory files: one header line naming the columns,
//! then one sample per line, whitespace separated, 17 significant digits.

use std::io::{self, BufRead, Write};

use super::TrajectoryRecord;

pub const TRAJECTORY_HEADER: [&str; 6] = ["s", "s_tilde", "r", "f", "radial", "spherical_norm"];

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub s: f64,
    pub s_tilde: f64,
    pub r: f64,
    pub f: f64,
    pub radial: f64,
    pub spherical_norm: f64,
    pub x: Vec<f64>,
}

fn header(dim: usize) -> String {
    let mut cols: Vec<String> = TRAJECTORY_HEADER.iter().map(|s| s.to_string()).collect();
    cols.extend((0..dim).map(|i| format!("x{i}")));
    format!("# {}", cols.join(" "))
}

pub fn write_trajectory<W: Write>(rec: &TrajectoryRecord, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", header(rec.dimension()))?;
    for s in &rec.samples {
        let mut line = format!(
            "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
            s.s, s.s_tilde, s.r, s.f_val, s.split.radial, s.split.spherical_norm
        );
        for v in &s.x {
            line.push_str(&format!(" {v:.16e}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_trajectory<R: BufRead>(input: R) -> io::Result<Vec<TrajectoryRow>> {
    let bad = |line: usize, msg: &str| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
    let mut lines = input.lines().enumerate();
    let dim = match lines.next() {
        Some((_, h)) => {
            let h = h?;
            let cols: Vec<&str> = h.trim_start_matches('#').split_whitespace().collect();
            if cols.len() < TRAJECTORY_HEADER.len() + 1 || cols[..6] != TRAJECTORY_HEADER {
                return Err(bad(1, "missing or malformed header"));
            }
            cols.len() - TRAJECTORY_HEADER.len()
        }
        None => return Err(bad(1, "empty file")),
    };
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(i + 1, &e.to_string()))?;
        if vals.len() != 6 + dim {
            return Err(bad(i + 1, &format!("expected {} columns, found {}", 6 + dim, vals.len())));
        }
        rows.push(TrajectoryRow {
            s: vals[0],
            s_tilde: vals[1],
            r: vals[2],
            f: vals[3],
            radial: vals[4],
            spherical_norm: vals[5],
            x: vals[6..].to_vec(),
        });
    }
    Ok(rows)
}
