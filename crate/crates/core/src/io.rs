//! Dataset ingestion and export.
//!
//! Formats:
//! - dense CSV: one row per line, comma-separated reals, no header unless
//!   the caller says so;
//! - IDX images: big-endian magic `0x00000803`, then count/rows/cols and
//!   raw `u8` pixels, flattened row-major (pixel values kept as `0..=255`);
//! - triplet text: a `rows cols nnz` header line, then `i j v` entries with
//!   0-based indices, loaded into compressed sparse rows;
//! - weighted matrix: dense CSV with a trailing `weight` column.
//!
//! All-zero rows are dropped at load time (the line metric is undefined at
//! the origin) and reported through [`Dataset::dropped_zero_rows`].

use crate::error::Error;
use crate::points::{Csr, WeightedPointSet};
use crate::Result;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// A named, loaded dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub points: WeightedPointSet,
    pub provenance: PathBuf,
    pub format: FileFormat,
    /// How many all-zero rows were filtered at load time.
    pub dropped_zero_rows: usize,
}

/// Supported on-disk formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    DenseCsv,
    Idx,
    Triplets,
    WeightedCsv,
}

impl FileFormat {
    /// Infers the format from the extension: `.idx`/`.ubyte` -> IDX,
    /// `.tri`/`.txt` -> triplets, `.wcsv` -> weighted CSV, else dense CSV.
    pub fn infer(path: &Path) -> FileFormat {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase()
            .as_str()
        {
            "idx" | "ubyte" => FileFormat::Idx,
            "tri" | "txt" => FileFormat::Triplets,
            "wcsv" => FileFormat::WeightedCsv,
            _ => FileFormat::DenseCsv,
        }
    }

    pub fn parse(s: &str) -> Result<FileFormat> {
        match s {
            "csv" | "dense-csv" => Ok(FileFormat::DenseCsv),
            "idx" => Ok(FileFormat::Idx),
            "triplets" | "tri" => Ok(FileFormat::Triplets),
            "weighted-csv" | "wcsv" => Ok(FileFormat::WeightedCsv),
            other => Err(Error::InvalidParam(format!("unknown format '{other}'"))),
        }
    }
}

/// Loads a dataset, inferring the format from the extension.
pub fn load(path: &Path, header: bool) -> Result<Dataset> {
    load_as(path, FileFormat::infer(path), header)
}

/// Loads a dataset in an explicit format.
pub fn load_as(path: &Path, format: FileFormat, header: bool) -> Result<Dataset> {
    let points = match format {
        FileFormat::DenseCsv => load_dense_csv(path, header)?,
        FileFormat::Idx => load_idx(path)?,
        FileFormat::Triplets => load_triplets(path)?,
        FileFormat::WeightedCsv => load_weighted_csv(path, header)?,
    };
    let n_before = points.len();
    let (points, dropped) = points.drop_zero_rows();
    if dropped > 0 {
        log::info!(
            "{}: dropped {dropped} all-zero rows of {n_before}",
            path.display()
        );
    }
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    Ok(Dataset {
        name,
        points,
        provenance: path.to_path_buf(),
        format,
        dropped_zero_rows: dropped,
    })
}

/// Dense CSV of reals; every line must have the same width.
pub fn load_dense_csv(path: &Path, header: bool) -> Result<WeightedPointSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if idx == 0 && header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_csv_row(path, line_no, line)?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected {w} columns, found {}", row.len()),
                ))
            }
            _ => {}
        }
        rows.push(row);
    }
    WeightedPointSet::from_rows(rows)
}

/// Dense CSV with a trailing `weight` column.
pub fn load_weighted_csv(path: &Path, header: bool) -> Result<WeightedPointSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if idx == 0 && header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut row = parse_csv_row(path, line_no, line)?;
        if row.len() < 2 {
            return Err(Error::parse(
                path,
                line_no,
                "weighted rows need at least one coordinate and a weight",
            ));
        }
        let w = row.pop().unwrap();
        if !w.is_finite() || w < 0.0 {
            return Err(Error::parse(path, line_no, format!("bad weight {w}")));
        }
        match width {
            None => width = Some(row.len()),
            Some(wd) if wd != row.len() => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected {wd} columns, found {}", row.len()),
                ))
            }
            _ => {}
        }
        rows.push(row);
        weights.push(w);
    }
    WeightedPointSet::from_rows_weighted(rows, weights)
}

fn parse_csv_row(path: &Path, line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|cell| {
            let cell = cell.trim();
            let v = cell
                .parse::<f64>()
                .map_err(|_| Error::parse(path, line_no, format!("non-numeric cell '{cell}'")))?;
            if !v.is_finite() {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("non-finite cell '{cell}'"),
                ));
            }
            Ok(v)
        })
        .collect()
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;

/// IDX image file: images flattened row-major to `rows*cols` reals with the
/// raw `0..=255` pixel values.
pub fn load_idx(path: &Path) -> Result<WeightedPointSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let word = |off: usize| -> Result<u32> {
        bytes
            .get(off..off + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| Error::parse(path, 0, "truncated IDX header"))
    };
    let magic = word(0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::parse(
            path,
            0,
            format!("bad IDX magic {magic:#010x}, want {IDX_IMAGES_MAGIC:#010x}"),
        ));
    }
    let count = word(4)? as usize;
    let rows = word(8)? as usize;
    let cols = word(12)? as usize;
    let pixels = count * rows * cols;
    let data = bytes
        .get(16..16 + pixels)
        .ok_or_else(|| Error::parse(path, 0, "IDX payload shorter than declared shape"))?;
    let flat: Vec<f64> = data.iter().map(|&b| b as f64).collect();
    WeightedPointSet::from_flat(flat, rows * cols, vec![1.0; count])
}

/// Writes images (values clamped to `0..=255` and rounded) in IDX layout.
pub fn write_idx(path: &Path, images: &WeightedPointSet, rows: usize, cols: usize) -> Result<()> {
    if rows * cols != images.dims() {
        return Err(Error::DimensionMismatch {
            left: rows * cols,
            right: images.dims(),
        });
    }
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for i in 0..images.len() {
        for v in images.dense_row(i) {
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Sparse triplets: `rows cols nnz` header, then `i j v` lines (0-based).
pub fn load_triplets(path: &Path) -> Result<WeightedPointSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (rows, cols, nnz) = loop {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 0, "missing header line"))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::parse(
                path,
                idx + 1,
                "header must be 'rows cols nnz'",
            ));
        }
        let parse = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad header value '{s}'")))
        };
        break (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    };
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(nnz);
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::parse(path, line_no, "entry must be 'i j v'"));
        }
        let i: usize = parts[0]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad row index '{}'", parts[0])))?;
        let j: usize = parts[1]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad col index '{}'", parts[1])))?;
        let v: f64 = parts[2]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad value '{}'", parts[2])))?;
        if !v.is_finite() {
            return Err(Error::parse(
                path,
                line_no,
                format!("non-finite value '{}'", parts[2]),
            ));
        }
        if i >= rows || j >= cols {
            return Err(Error::parse(
                path,
                line_no,
                format!("index ({i}, {j}) outside declared {rows} x {cols}"),
            ));
        }
        triplets.push((i, j, v));
    }
    if triplets.len() != nnz {
        return Err(Error::parse(
            path,
            0,
            format!("header declared {nnz} entries, found {}", triplets.len()),
        ));
    }
    triplets.sort_by_key(|&(i, j, _)| (i, j));
    let mut indptr = vec![0usize; rows + 1];
    let mut indices = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    for &(i, j, v) in &triplets {
        indptr[i + 1] += 1;
        indices.push(j as u32);
        values.push(v);
    }
    for i in 0..rows {
        indptr[i + 1] += indptr[i];
    }
    WeightedPointSet::from_csr(
        Csr {
            indptr,
            indices,
            values,
            ncols: cols,
        },
        vec![1.0; rows],
    )
}

/// Writes a weighted point set as dense CSV with a trailing weight column.
pub fn write_weighted_csv(path: &Path, points: &WeightedPointSet) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = String::new();
    for i in 0..points.len() {
        buf.clear();
        for v in points.dense_row(i) {
            buf.push_str(&format!("{v}"));
            buf.push(',');
        }
        buf.push_str(&format!("{}", points.weight(i)));
        buf.push('\n');
        f.write_all(buf.as_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Writes a dense CSV (weights ignored).
pub fn write_dense_csv(path: &Path, points: &WeightedPointSet) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = String::new();
    for i in 0..points.len() {
        buf.clear();
        let row = points.dense_row(i);
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                buf.push(',');
            }
            buf.push_str(&format!("{v}"));
        }
        buf.push('\n');
        f.write_all(buf.as_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::tempdir;

    #[test]
    fn zero_csv_rows_flagged_and_dropped() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("zeros.csv");
        fs::write(&p, "0,0\n0,0\n0,0\n").unwrap();
        let ds = load(&p, false).unwrap();
        assert_eq!(ds.dropped_zero_rows, 3);
        assert_eq!(ds.points.len(), 0);
    }

    #[test]
    fn csv_error_carries_line_number() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "1,2\n3,oops\n").unwrap();
        match load_dense_csv(&p, false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("want parse error, got {other:?}"),
        }
        fs::write(&p, "1,2\nNaN,4\n").unwrap();
        match load_dense_csv(&p, false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("want parse error, got {other:?}"),
        }
    }

    #[test]
    fn idx_round_trip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("img.idx");
        // writer first: 2 images of 28x28
        let mut rows = Vec::new();
        for i in 0..2 {
            rows.push((0..784).map(|j| ((i * 37 + j * 11) % 256) as f64).collect());
        }
        let set = WeightedPointSet::from_rows(rows.clone()).unwrap();
        write_idx(&p, &set, 28, 28).unwrap();
        let back = load_idx(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.dims(), 784);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(&back.dense_row(i), row);
        }
        // magic is checked
        let mut bytes = fs::read(&p).unwrap();
        bytes[3] = 0x01;
        fs::write(&p, bytes).unwrap();
        assert!(load_idx(&p).is_err());
    }

    #[test]
    fn triplets_small() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.tri");
        fs::write(&p, "4 5 3\n0 1 2.5\n2 0 -1\n3 4 7\n").unwrap();
        let set = load_triplets(&p).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.dims(), 5);
        assert_eq!(set.row(0).sq_norm(), 6.25);
        assert_eq!(set.row(1).sq_norm(), 0.0);
        assert_eq!(set.row(3).sq_norm(), 49.0);
    }

    #[test]
    fn triplets_out_of_bounds() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.tri");
        fs::write(&p, "2 2 1\n2 0 1.0\n").unwrap();
        match load_triplets(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("want parse error, got {other:?}"),
        }
    }

    proptest! {
        // weighted CSV round-trips exactly through shortest-float formatting
        #[test]
        fn weighted_csv_round_trip(
            rows in proptest::collection::vec(
                proptest::collection::vec(-1e6f64..1e6, 3),
                1..12,
            ),
            ws in proptest::collection::vec(0.001f64..1e3, 12),
        ) {
            let n = rows.len();
            // keep rows nonzero so the loader's zero filter stays out of the way
            let rows: Vec<Vec<f64>> = rows
                .into_iter()
                .map(|mut r| {
                    if r.iter().all(|&x| x == 0.0) {
                        r[0] = 1.0;
                    }
                    r
                })
                .collect();
            let set = WeightedPointSet::from_rows_weighted(rows, ws[..n].to_vec()).unwrap();
            let dir = tempdir().unwrap();
            let p = dir.path().join("w.wcsv");
            write_weighted_csv(&p, &set).unwrap();
            let back = load_weighted_csv(&p, false).unwrap();
            prop_assert_eq!(back, set);
        }
    }
}
