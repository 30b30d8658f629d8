//! CSV artifacts: path files `t,x_0_0,x_0_1,...` (row-major state entries),
//! eigenvalue files `t,l_1,...,l_n`, and bare matrices one row per line.

use std::fmt::Write as _;
use std::path::Path as FsPath;

use orbitflow::matcore::Symmetric;
use orbitflow::processes::EigenPath;
use orbitflow::sde::Path;
use orbitflow::Matrix;

use crate::error::{CliError, CliResult};

/// 17 significant digits, enough to round-trip every `f64`.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, t: f64, values: impl Iterator<Item = f64>) {
    out.push_str(&fmt(t));
    for v in values {
        out.push(',');
        out.push_str(&fmt(v));
    }
    out.push('\n');
}

fn row_major(m: &Matrix) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

pub fn path_csv(path: &Path) -> String {
    let (r, c) = path.states.first().map_or((0, 0), |m| m.shape());
    let mut out = String::from("t");
    for i in 0..r {
        for j in 0..c {
            let _ = write!(out, ",x_{i}_{j}");
        }
    }
    out.push('\n');
    for (t, m) in path.times.iter().zip(&path.states) {
        push_row(&mut out, *t, row_major(m));
    }
    out
}

pub fn eigen_csv(path: &EigenPath) -> String {
    let n = path.values.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",l_{i}");
    }
    out.push('\n');
    for (t, v) in path.times.iter().zip(&path.values) {
        push_row(&mut out, *t, v.iter().copied());
    }
    out
}

/// Named scalar columns against `times`.
pub fn series_csv(times: &[f64], columns: &[(&str, &[f64])]) -> String {
    let mut out = String::from("t");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, t) in times.iter().enumerate() {
        push_row(&mut out, *t, columns.iter().map(|(_, v)| v[i]));
    }
    out
}

pub fn matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn parse_num(tok: &str, line: usize) -> CliResult<f64> {
    tok.trim()
        .parse()
        .map_err(|_| CliError::config(format!("line {line}: `{}` is not a number", tok.trim())))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Times and states of a path file.
pub fn read_path_csv(text: &str) -> CliResult<(Vec<f64>, Vec<Matrix>)> {
    let mut lines = data_lines(text);
    let (_, header) = lines.next().ok_or_else(|| CliError::config("empty path CSV"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") {
        return Err(CliError::config("path CSV header must start with `t`"));
    }
    let mut shape = (0, 0);
    for c in &cols[1..] {
        let ij: Vec<usize> = c
            .strip_prefix("x_")
            .map(|s| s.split('_').filter_map(|p| p.parse().ok()).collect())
            .unwrap_or_default();
        if ij.len() != 2 {
            return Err(CliError::config(format!("path CSV column `{c}` is not of the form x_i_j")));
        }
        shape = (shape.0.max(ij[0] + 1), shape.1.max(ij[1] + 1));
    }
    if shape.0 * shape.1 != cols.len() - 1 {
        return Err(CliError::config("path CSV columns do not cover a full matrix"));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (line, l) in lines {
        let v: Vec<f64> = l.split(',').map(|t| parse_num(t, line)).collect::<CliResult<_>>()?;
        if v.len() != cols.len() {
            return Err(CliError::config(format!("line {line}: {} fields, header has {}", v.len(), cols.len())));
        }
        times.push(v[0]);
        states.push(Matrix::from_row_slice(shape.0, shape.1, &v[1..]));
    }
    Ok((times, states))
}

/// A bare matrix, or the last state of a path file.
pub fn read_matrix(text: &str) -> CliResult<Matrix> {
    if data_lines(text).next().is_some_and(|(_, l)| l.starts_with("t,")) {
        let (_, states) = read_path_csv(text)?;
        return states.into_iter().last().ok_or_else(|| CliError::config("path CSV has no rows"));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, l) in data_lines(text) {
        let row: Vec<f64> = l.split(',').map(|t| parse_num(t, line)).collect::<CliResult<_>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::config(format!("line {line}: {} columns, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::config("matrix CSV has no rows"));
    }
    let flat: Vec<f64> = rows.concat();
    Ok(Matrix::from_row_slice(rows.len(), rows[0].len(), &flat))
}

pub fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::config(format!("`{}` is not a number", t.trim()))))
        .collect()
}

/// `diag(a,b,...)` inline, otherwise a CSV file.
pub fn matrix_arg(arg: &str) -> CliResult<(Matrix, Option<Vec<u8>>)> {
    let s = arg.trim();
    if let Some(inner) = s.strip_prefix("diag(").and_then(|r| r.strip_suffix(')')) {
        let d = parse_list(inner)?;
        return Ok((Symmetric::from_diagonal(&d).into_matrix(), None));
    }
    let bytes = std::fs::read(FsPath::new(s)).map_err(|e| CliError::config(format!("cannot read matrix file `{s}`: {e}")))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::config(format!("`{s}` is not UTF-8 text")))?;
    let m = read_matrix(&text).map_err(|e| CliError::config(format!("{s}: {e}")))?;
    Ok((m, Some(bytes)))
}

pub fn write(path: &FsPath, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use orbitflow::sde::{PathStatus, TimeGrid};

    fn constant_path(m: Matrix, steps: usize) -> Path {
        let grid = TimeGrid::new(0.0, 1.0, steps).unwrap();
        Path {
            manifold: "test".into(),
            times: (0..=steps).map(|s| grid.time(s)).collect(),
            states: vec![m; steps + 1],
            grid,
            status: PathStatus::Completed,
        }
    }

    #[test]
    fn constant_path_rows_repeat() {
        let p = constant_path(Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]), 3);
        let csv = path_csv(&p);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x_0_0,x_0_1,x_1_0,x_1_1");
        let tails: Vec<&str> = lines[1..].iter().map(|l| l.split_once(',').unwrap().1).collect();
        assert!(tails.windows(2).all(|w| w[0] == w[1]));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let vals = [0.1, -1.0 / 3.0, std::f64::consts::PI * 1e-300, 1.7976931348623157e308, -0.0, 5e-324];
        let m = Matrix::from_row_slice(2, 3, &vals);
        let (times, states) = read_path_csv(&path_csv(&constant_path(m.clone(), 2))).unwrap();
        assert_eq!(times.len(), 3);
        for s in &states {
            for (a, b) in s.iter().zip(m.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        let back = read_matrix(&matrix_csv(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn grassmann_shape_gives_ten_columns() {
        let p = constant_path(Matrix::identity(3, 3), 1);
        assert_eq!(path_csv(&p).lines().next().unwrap().split(',').count(), 10);
    }

    #[test]
    fn matrix_inputs() {
        let (m, src) = matrix_arg("diag(3, 1)").unwrap();
        assert_eq!(m, Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]));
        assert!(src.is_none());
        assert!(read_matrix("1,2\n3\n").is_err());
        assert!(read_matrix("1,x\n").is_err());
        assert!(read_matrix("# only a comment\n").is_err());
        assert!(matrix_arg("/nonexistent/P.csv").is_err());
        let last = read_matrix("t,x_0_0\n0,1\n1,2\n").unwrap();
        assert_eq!(last[(0, 0)], 2.0);
    }
}
