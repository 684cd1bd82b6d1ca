//! Plain-text instance files.
//!
//! ```text
//! # optional comments
//! n d p
//! x_11 ... x_1d
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use mfmomp::Point;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub points: Vec<Point>,
    pub p: usize,
}

impl InstanceFile {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn d(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

pub fn parse_instance(text: &str, path: &str) -> CliResult<InstanceFile> {
    let err = |line: usize, msg: String| CliError::Parse { path: path.to_string(), line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| err(1, "missing `n d p` header".into()))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(err(hline, format!("expected `n d p`, found {:?}", header)));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| err(hline, format!("not a nonnegative integer: {s:?}")));
    let (n, d, p) = (num(head[0])?, num(head[1])?, num(head[2])?);
    if n == 0 || d == 0 {
        return Err(err(hline, "n and d must be positive".into()));
    }

    let mut points = Vec::with_capacity(n);
    for (ln, line) in lines {
        if points.len() == n {
            return Err(err(ln, format!("more than {n} coordinate lines")));
        }
        let coords = line
            .split_whitespace()
            .map(|t| match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(err(ln, format!("bad coordinate {t:?}"))),
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if coords.len() != d {
            return Err(err(ln, format!("expected {d} coordinates, found {}", coords.len())));
        }
        points.push(coords);
    }
    if points.len() != n {
        return Err(err(hline, format!("header announces {n} points, file has {}", points.len())));
    }
    Ok(InstanceFile { points, p })
}

pub fn read_instance(path: &Path) -> CliResult<InstanceFile> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: shown.clone(), source })?;
    parse_instance(&text, &shown)
}

/// Writes coordinates in shortest round-trip form, so reading the text back
/// gives bit-identical values.
pub fn format_instance(inst: &InstanceFile) -> String {
    let mut s = format!("{} {} {}\n", inst.n(), inst.d(), inst.p);
    for pt in &inst.points {
        let row: Vec<String> = pt.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let text = "# demo\n\n2 2 1\n0 0\n# mid\n3.5 -1e-3\n";
        let inst = parse_instance(text, "t").unwrap();
        assert_eq!(inst.points, vec![vec![0.0, 0.0], vec![3.5, -0.001]]);
        assert_eq!(inst.p, 1);
    }

    #[test]
    fn malformed() {
        for bad in ["", "2 2\n", "2 2 1\n0 0\n", "1 2 1\n0\n", "1 1 1\n0\n1\n", "1 1 1\nnan\n", "1 1 x\n0\n"] {
            assert!(matches!(parse_instance(bad, "t"), Err(CliError::Parse { .. })), "{bad:?}");
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let inst = InstanceFile { points: vec![vec![0.1 + 0.2, 1.0 / 3.0], vec![-1e-300, 12345.678901234567]], p: 2 };
        assert_eq!(parse_instance(&format_instance(&inst), "t").unwrap(), inst);
    }
}
