//! Plain-text file formats.
//!
//! Matrices are comma-separated, one row per line, with `NA` marking a missing
//! entry. Numbers are written with 17 significant digits so that identical
//! runs produce byte-identical files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::NeighborGraph;
use crate::incomplete::ObservedMatrix;

pub const MISSING_TOKEN: &str = "NA";

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Raw parse result: values (zero where missing) and observation flags.
pub fn read_matrix(path: &Path, has_header: bool) -> Result<(DMatrix<f64>, DMatrix<bool>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 && has_header {
            continue;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                if tok == MISSING_TOKEN {
                    Ok(None)
                } else {
                    tok.parse::<f64>()
                        .map(Some)
                        .map_err(|e| parse_err(lineno + 1, format!("{tok:?}: {e}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    lineno + 1,
                    format!("expected {} fields, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }
    let (m, n) = (rows.len(), rows[0].len());
    let values = DMatrix::from_fn(m, n, |i, j| rows[i][j].unwrap_or(0.0));
    let mask = DMatrix::from_fn(m, n, |i, j| rows[i][j].is_some());
    Ok((values, mask))
}

pub fn read_observed(path: &Path, has_header: bool) -> Result<ObservedMatrix> {
    let (values, mask) = read_matrix(path, has_header)?;
    ObservedMatrix::new(values, mask)
}

/// Reads a matrix that must not contain missing entries.
pub fn read_dense(path: &Path, has_header: bool) -> Result<DMatrix<f64>> {
    let (values, mask) = read_matrix(path, has_header)?;
    if let Some(pos) = mask.iter().position(|&b| !b) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: pos % values.nrows() + 1 + usize::from(has_header),
            msg: "unexpected missing entry".into(),
        });
    }
    Ok(values)
}

fn write_lines<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_header(w: &mut dyn Write, header: Option<&[String]>) -> std::io::Result<()> {
    if let Some(h) = header {
        writeln!(w, "{}", h.join(","))?;
    }
    Ok(())
}

pub fn write_dense(path: &Path, values: &DMatrix<f64>, header: Option<&[String]>) -> Result<()> {
    write_lines(path, |w| {
        write_header(w, header)?;
        for row in values.row_iter() {
            let line: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    })
}

pub fn write_observed(path: &Path, x: &ObservedMatrix, header: Option<&[String]>) -> Result<()> {
    write_lines(path, |w| {
        write_header(w, header)?;
        for i in 0..x.nrows() {
            let line: Vec<String> = (0..x.ncols())
                .map(|j| {
                    if x.is_observed(i, j) {
                        format_number(x.values()[(i, j)])
                    } else {
                        MISSING_TOKEN.to_string()
                    }
                })
                .collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    })
}

/// Edge list, 1-indexed, one `i,j` pair per line in lexicographic order.
pub fn write_edges(path: &Path, graph: &NeighborGraph) -> Result<()> {
    write_lines(path, |w| {
        for &(i, j) in graph.edges() {
            writeln!(w, "{},{}", i + 1, j + 1)?;
        }
        Ok(())
    })
}

pub fn read_edges(path: &Path, node_count: usize) -> Result<NeighborGraph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: msg.to_string(),
        };
        let (a, b) = line.split_once(',').ok_or_else(|| err("expected i,j"))?;
        let a: usize = a.trim().parse().map_err(|_| err("bad node index"))?;
        let b: usize = b.trim().parse().map_err(|_| err("bad node index"))?;
        if a == 0 || b == 0 {
            return Err(err("node indices are 1-based"));
        }
        edges.push((a - 1, b - 1));
    }
    NeighborGraph::new(node_count, edges)
}

/// Writes `key=value` lines in the given order.
pub fn write_key_values(path: &Path, entries: &[(String, String)]) -> Result<()> {
    write_lines(path, |w| {
        for (k, v) in entries {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    })
}

/// Parses `key=value` lines; `#` starts a comment.
pub fn read_key_values(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: "expected key=value".into(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Writes arbitrary pre-formatted text lines.
pub fn write_text_lines(path: &Path, lines: &[String]) -> Result<()> {
    write_lines(path, |w| {
        for l in lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}
