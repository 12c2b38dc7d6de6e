//! Matrix Market files and whitespace-delimited tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fe::Mesh;
use crate::linalg::BandMatrix;

/// Dense matrix in Matrix Market `array` format (column-major, round-trip precision).
pub fn dense_to_mtx(a: &DMatrix<f64>) -> String {
    let mut s = String::with_capacity(24 * a.len() + 64);
    s.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", a.nrows(), a.ncols());
    for v in a.iter() {
        let _ = writeln!(s, "{v:.17e}");
    }
    s
}

/// Band matrix in Matrix Market `coordinate` format; structural zeros are skipped.
pub fn band_to_mtx(a: &BandMatrix) -> String {
    let mut entries = Vec::new();
    for i in 0..a.n() {
        for j in a.row_range(i) {
            let v = a.get(i, j);
            if v != 0.0 {
                entries.push((i, j, v));
            }
        }
    }
    let mut s = String::with_capacity(48 * entries.len() + 64);
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.n(), a.n(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(s, "{} {} {v:.17e}", i + 1, j + 1);
    }
    s
}

/// Parses either Matrix Market flavour into a dense matrix.
pub fn mtx_to_dense(text: &str) -> std::result::Result<DMatrix<f64>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty file")?.to_ascii_lowercase();
    if !header.starts_with("%%matrixmarket matrix") {
        return Err("missing Matrix Market header".into());
    }
    let symmetric = header.contains("symmetric");
    let coordinate = header.contains("coordinate");
    let mut lines = lines.filter(|l| !l.starts_with('%'));
    let size: Vec<usize> = lines
        .next()
        .ok_or("missing size line")?
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    let num = |t: Option<&str>| -> std::result::Result<f64, String> {
        t.ok_or("truncated entry")?.parse::<f64>().map_err(|e| e.to_string())
    };
    if coordinate {
        let [nr, nc, nnz] = size[..] else {
            return Err("coordinate size line needs three integers".into());
        };
        let mut a = DMatrix::zeros(nr, nc);
        for _ in 0..nnz {
            let line = lines.next().ok_or("fewer entries than declared")?;
            let mut t = line.split_whitespace();
            let i = num(t.next())? as usize - 1;
            let j = num(t.next())? as usize - 1;
            let v = num(t.next())?;
            if i >= nr || j >= nc {
                return Err(format!("entry ({}, {}) out of range", i + 1, j + 1));
            }
            a[(i, j)] = v;
            if symmetric {
                a[(j, i)] = v;
            }
        }
        Ok(a)
    } else {
        let [nr, nc] = size[..] else {
            return Err("array size line needs two integers".into());
        };
        let vals: Vec<f64> = lines
            .map(|l| num(Some(l.trim())))
            .collect::<std::result::Result<_, _>>()?;
        if vals.len() != nr * nc {
            return Err(format!("expected {} values, found {}", nr * nc, vals.len()));
        }
        Ok(DMatrix::from_column_slice(nr, nc, &vals))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn read_mtx(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    mtx_to_dense(&text).map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        message,
    })
}

/// `id x y z` per node, mm.
pub fn node_table(mesh: &Mesh) -> String {
    let mut s = String::from("# node x_mm y_mm z_mm\n");
    for (i, x) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{i} {:.17e} {:.17e} {:.17e}", x[0], x[1], x[2]);
    }
    s
}

/// `id n0 … n7` per element.
pub fn element_table(mesh: &Mesh) -> String {
    let mut s = String::from("# element n0 n1 n2 n3 n4 n5 n6 n7\n");
    for (e, conn) in mesh.elements.iter().enumerate() {
        let _ = write!(s, "{e}");
        for n in conn {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    s
}
