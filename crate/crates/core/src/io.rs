//! CSV point files and atomic artifact writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Parses rows of comma-separated decimals. A first line starting with '#'
/// is a header and is returned separately; blank lines are ignored.
pub fn parse_rows(text: &str) -> Result<(Option<String>, Vec<Vec<f64>>)> {
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if lineno == 0 {
                header = Some(line[1..].trim().to_string());
                continue;
            }
            return Err(Error::Format(format!("line {}: header only allowed on the first line", lineno + 1)));
        }
        let row = line
            .split(',')
            .map(|f| {
                let v: f64 = f.trim().parse().map_err(|_| Error::Format(format!("line {}: bad number {:?}", lineno + 1, f.trim())))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Format(format!("line {}: non-finite value", lineno + 1)))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Format(format!("line {}: expected {} columns, found {}", lineno + 1, w, row.len())));
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn read_rows(path: &Path) -> Result<(Option<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    parse_rows(&text)
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let (_, rows) = read_rows(path)?;
    if rows.is_empty() {
        return Err(Error::Format(format!("{}: no data rows", path.display())));
    }
    PointCloud::from_rows(&rows).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::Format(m),
        other => other,
    })
}

/// Reads a two-column file of planar coordinates.
pub fn read_pairs(path: &Path) -> Result<Vec<[f64; 2]>> {
    let (_, rows) = read_rows(path)?;
    if let Some(r) = rows.first() {
        if r.len() != 2 {
            return Err(Error::Format(format!("{}: expected 2 columns, found {}", path.display(), r.len())));
        }
    }
    Ok(rows.into_iter().map(|r| [r[0], r[1]]).collect())
}

/// CSV text with an optional '#' header line. Values use the shortest
/// representation that round-trips exactly.
pub fn format_rows<R: AsRef<[f64]>>(header: Option<&str>, rows: &[R]) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str("# ");
        out.push_str(&h.replace('\n', " "));
        out.push('\n');
    }
    for r in rows {
        let mut first = true;
        for v in r.as_ref() {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format!("{v:?}"));
        }
        out.push('\n');
    }
    out
}

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(Error::from)
}

pub fn write_rows<R: AsRef<[f64]>>(path: &Path, header: Option<&str>, rows: &[R]) -> Result<()> {
    write_atomic(path, format_rows(header, rows).as_bytes())
}
