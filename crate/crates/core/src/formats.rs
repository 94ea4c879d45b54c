//! Plain-text file formats.
//!
//! Floating-point values are written with 17 significant digits so that a
//! read → write cycle reproduces the file byte for byte.
//!
//! | file    | layout                                                          |
//! |---------|-----------------------------------------------------------------|
//! | alm     | `ALM l_max=<n>` then rows `l m re im`, l-major order            |
//! | points  | rows `theta phi value` (value optional when only positions matter) |
//! | weights | one weight per row                                              |
//! | beta    | `BETA B=<r> lmax=<n> jmax=<n> a00=<v>`, then per level `J j n_side count` and `count` rows |
//! | map     | rows `theta phi value`                                          |
//! | grid    | rows `k theta phi`                                              |
//! | histogram | rows `bin_lo bin_hi count`                                    |
//! | metrics | rows `key=value`                                                |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harmonics::HarmonicCoeffs;
use crate::healpix::{HealpixGrid, SphPoint};
use crate::needlet::{make_plan, NeedletCoeffs};

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

/// Writes a file, creating missing parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Self {
            path,
            inner: text.lines().enumerate(),
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }
}

impl<'a> Iterator for Lines<'a> {
    // (1-based line number, fields)
    type Item = (usize, Vec<&'a str>);

    fn next(&mut self) -> Option<Self::Item> {
        for (i, line) in self.inner.by_ref() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Some((i + 1, line.split_whitespace().collect()));
        }
        None
    }
}

fn parse<T: std::str::FromStr>(lines: &Lines, line: usize, field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| lines.err(line, format!("cannot parse {what} from {field:?}")))
}

fn key_value<'a>(lines: &Lines, line: usize, field: &'a str, key: &str) -> Result<&'a str> {
    field
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| lines.err(line, format!("expected {key}=<value>, found {field:?}")))
}

// ---- alm ----

pub fn format_alm(alm: &HarmonicCoeffs) -> String {
    let mut out = format!("ALM l_max={}\n", alm.l_max());
    for (l, m, a) in alm.iter() {
        let _ = writeln!(out, "{l} {m} {} {}", fmt_f64(a.re), fmt_f64(a.im));
    }
    out
}

pub fn parse_alm(path: &Path, text: &str) -> Result<HarmonicCoeffs> {
    let mut lines = Lines::new(path, text);
    let (n, header) = lines.next().ok_or_else(|| lines.err(1, "empty alm file"))?;
    if header.len() != 2 || header[0] != "ALM" {
        return Err(lines.err(n, "expected header `ALM l_max=<n>`"));
    }
    let l_max: usize = parse(
        &lines,
        n,
        key_value(&lines, n, header[1], "l_max")?,
        "l_max",
    )?;
    let mut alm = HarmonicCoeffs::zeros(l_max);
    let mut seen = vec![false; alm.as_slice().len()];
    while let Some((n, f)) = lines.next() {
        if f.len() != 4 {
            return Err(lines.err(n, "expected `l m re im`"));
        }
        let l: usize = parse(&lines, n, f[0], "l")?;
        let m: usize = parse(&lines, n, f[1], "m")?;
        if m > l || l > l_max {
            return Err(lines.err(n, format!("(l={l}, m={m}) outside 0 <= m <= l <= {l_max}")));
        }
        let re: f64 = parse(&lines, n, f[2], "re")?;
        let im: f64 = parse(&lines, n, f[3], "im")?;
        let idx = crate::harmonics::packed_index(l, m);
        if std::mem::replace(&mut seen[idx], true) {
            return Err(lines.err(n, format!("duplicate entry for (l={l}, m={m})")));
        }
        alm.set(l, m, Complex64::new(re, im));
    }
    Ok(alm)
}

pub fn read_alm(path: &Path) -> Result<HarmonicCoeffs> {
    parse_alm(path, &read_text(path)?)
}

pub fn write_alm(path: &Path, alm: &HarmonicCoeffs) -> Result<()> {
    write_text(path, &format_alm(alm))
}

// ---- points / maps ----

/// Positions and, when every row carries a third column, sample values.
pub fn parse_points(path: &Path, text: &str) -> Result<(Vec<SphPoint>, Option<Vec<f64>>)> {
    let mut lines = Lines::new(path, text);
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut columns = None;
    while let Some((n, f)) = lines.next() {
        if !(f.len() == 2 || f.len() == 3) || *columns.get_or_insert(f.len()) != f.len() {
            return Err(lines.err(
                n,
                "expected `theta phi [value]` with a consistent column count",
            ));
        }
        let theta: f64 = parse(&lines, n, f[0], "theta")?;
        let phi: f64 = parse(&lines, n, f[1], "phi")?;
        points.push(SphPoint::new(theta, phi).map_err(|e| lines.err(n, e.to_string()))?);
        if f.len() == 3 {
            values.push(parse(&lines, n, f[2], "value")?);
        }
    }
    Ok((points, (columns == Some(3)).then_some(values)))
}

pub fn read_points(path: &Path) -> Result<(Vec<SphPoint>, Option<Vec<f64>>)> {
    parse_points(path, &read_text(path)?)
}

pub fn format_map(points: &[SphPoint], values: &[f64]) -> String {
    let mut out = String::with_capacity(points.len() * 72);
    for (p, v) in points.iter().zip(values) {
        let _ = writeln!(
            out,
            "{} {} {}",
            fmt_f64(p.theta),
            fmt_f64(p.phi),
            fmt_f64(*v)
        );
    }
    out
}

pub fn write_map(path: &Path, points: &[SphPoint], values: &[f64]) -> Result<()> {
    write_text(path, &format_map(points, values))
}

// ---- weights ----

pub fn parse_weights(path: &Path, text: &str) -> Result<Vec<f64>> {
    let mut lines = Lines::new(path, text);
    let mut out = Vec::new();
    while let Some((n, f)) = lines.next() {
        if f.len() != 1 {
            return Err(lines.err(n, "expected one weight per line"));
        }
        out.push(parse(&lines, n, f[0], "weight")?);
    }
    Ok(out)
}

pub fn read_weights(path: &Path) -> Result<Vec<f64>> {
    parse_weights(path, &read_text(path)?)
}

pub fn format_weights(weights: &[f64]) -> String {
    weights.iter().map(|w| fmt_f64(*w) + "\n").collect()
}

// ---- beta ----

pub fn format_beta(beta: &NeedletCoeffs) -> String {
    let plan = beta.plan();
    let mut out = format!(
        "BETA B={} lmax={} jmax={} a00={}\n",
        plan.base(),
        plan.l_max(),
        plan.j_max(),
        fmt_f64(beta.a00)
    );
    for level in plan.levels() {
        let values = beta.level(level.j);
        let _ = writeln!(out, "J {} {} {}", level.j, level.n_side, values.len());
        for v in values {
            out.push_str(&fmt_f64(*v));
            out.push('\n');
        }
    }
    out
}

pub fn parse_beta(path: &Path, text: &str) -> Result<NeedletCoeffs> {
    let mut lines = Lines::new(path, text);
    let (n, h) = lines
        .next()
        .ok_or_else(|| lines.err(1, "empty beta file"))?;
    if h.len() != 5 || h[0] != "BETA" {
        return Err(lines.err(n, "expected header `BETA B=<r> lmax=<n> jmax=<n> a00=<v>`"));
    }
    let b: f64 = parse(&lines, n, key_value(&lines, n, h[1], "B")?, "B")?;
    let l_max: usize = parse(&lines, n, key_value(&lines, n, h[2], "lmax")?, "lmax")?;
    let j_max: usize = parse(&lines, n, key_value(&lines, n, h[3], "jmax")?, "jmax")?;
    let a00: f64 = parse(&lines, n, key_value(&lines, n, h[4], "a00")?, "a00")?;
    let plan = make_plan(b, l_max).map_err(|e| lines.err(n, e.to_string()))?;
    if plan.j_max() != j_max {
        return Err(lines.err(
            n,
            format!("jmax={j_max} but B={b}, lmax={l_max} give {}", plan.j_max()),
        ));
    }
    let mut betas = Vec::with_capacity(j_max + 1);
    for level in plan.levels() {
        let (n, f) = lines
            .next()
            .ok_or_else(|| lines.err(0, format!("missing level {}", level.j)))?;
        let expect = [level.j, level.n_side, level.n_pix()];
        let got: Vec<usize> = if f.len() == 4 && f[0] == "J" {
            f[1..]
                .iter()
                .map(|s| parse(&lines, n, s, "level field"))
                .collect::<Result<_>>()?
        } else {
            return Err(lines.err(n, "expected `J j n_side count`"));
        };
        if got != expect {
            return Err(lines.err(n, format!("level header {got:?}, expected {expect:?}")));
        }
        let mut values = Vec::with_capacity(level.n_pix());
        for _ in 0..level.n_pix() {
            let (n, f) = lines
                .next()
                .ok_or_else(|| lines.err(0, format!("level {} truncated", level.j)))?;
            if f.len() != 1 {
                return Err(lines.err(n, "expected one coefficient per line"));
            }
            values.push(parse(&lines, n, f[0], "coefficient")?);
        }
        betas.push(values);
    }
    if let Some((n, _)) = lines.next() {
        return Err(lines.err(n, "trailing data after last level"));
    }
    NeedletCoeffs::new(plan, a00, betas)
}

pub fn read_beta(path: &Path) -> Result<NeedletCoeffs> {
    parse_beta(path, &read_text(path)?)
}

pub fn write_beta(path: &Path, beta: &NeedletCoeffs) -> Result<()> {
    write_text(path, &format_beta(beta))
}

// ---- misc outputs ----

pub fn format_grid(grid: &HealpixGrid) -> String {
    let mut out = String::with_capacity(grid.n_pix() * 56);
    for (k, p) in grid.centers().iter().enumerate() {
        let _ = writeln!(out, "{k} {} {}", fmt_f64(p.theta), fmt_f64(p.phi));
    }
    out
}

/// `(bin_lo, bin_hi, count)` rows.
pub fn format_histogram(bins: &[(f64, f64, usize)]) -> String {
    bins.iter()
        .map(|(lo, hi, c)| format!("{} {} {c}\n", fmt_f64(*lo), fmt_f64(*hi)))
        .collect()
}

pub fn format_metrics(metrics: &[(String, String)]) -> String {
    metrics.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Two-column rows `x y`.
pub fn format_pairs(rows: &[(f64, f64)]) -> String {
    rows.iter()
        .map(|(x, y)| format!("{} {}\n", fmt_f64(*x), fmt_f64(*y)))
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::needlet::analyze;

    #[test]
    fn alm_round_trip_is_byte_identical() {
        let alm = HarmonicCoeffs::random(7, &mut ChaCha8Rng::seed_from_u64(2));
        let text = format_alm(&alm);
        let back = parse_alm(Path::new("mem"), &text).unwrap();
        assert_eq!(back, alm);
        assert_eq!(format_alm(&back), text);
        assert!(text.starts_with("ALM l_max=7\n0 0 "));
    }

    #[test]
    fn beta_round_trip_is_byte_identical() {
        let plan = make_plan(2.0, 8).unwrap();
        let alm = HarmonicCoeffs::random(8, &mut ChaCha8Rng::seed_from_u64(3));
        let beta = analyze(&alm, &plan).unwrap();
        let text = format_beta(&beta);
        assert!(text.starts_with("BETA B=2 lmax=8 jmax=4 a00="));
        let back = parse_beta(Path::new("mem"), &text).unwrap();
        assert_eq!(format_beta(&back), text);
        assert_eq!(back.levels(), beta.levels());
    }

    #[test]
    fn malformed_inputs() {
        let p = Path::new("mem");
        assert!(matches!(
            parse_alm(p, "ALM l_max=1\n2 0 1 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_alm(p, "ALM l_max=1\n1 0 1 0\n1 0 1 0\n").is_err());
        assert!(parse_alm(p, "ALX l_max=1\n").is_err());
        assert!(parse_points(p, "0.1 0.2 3\n0.2 0.3\n").is_err());
        assert!(parse_points(p, "4.0 0.2 3\n").is_err());
        assert!(parse_weights(p, "1 2\n").is_err());
        let plan = make_plan(2.0, 2).unwrap();
        let good = format_beta(&NeedletCoeffs::zeros(plan));
        assert!(parse_beta(p, &good).is_ok());
        assert!(parse_beta(p, &good.replace("jmax=2", "jmax=3")).is_err());
        assert!(parse_beta(p, &(good.clone() + "1.0\n")).is_err());
        let truncated: String = good.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(parse_beta(p, &truncated).is_err());
    }

    #[test]
    fn points_with_and_without_values() {
        let p = Path::new("mem");
        let (pts, vals) = parse_points(p, "# comment\n0.5 1.0 2.0\n1.5 7.0 -1\n").unwrap();
        assert_eq!(pts.len(), 2);
        assert!((pts[1].phi - (7.0 - 2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert_eq!(vals, Some(vec![2.0, -1.0]));
        let (_, none) = parse_points(p, "0.5 1.0\n").unwrap();
        assert_eq!(none, None);
    }

    proptest! {
        #[test]
        fn map_text_round_trips(rows in proptest::collection::vec(
            (0.0f64..=std::f64::consts::PI, 0.0f64..std::f64::consts::TAU, -1e6f64..1e6), 1..40))
        {
            let pts: Vec<SphPoint> = rows.iter().map(|r| SphPoint::new(r.0, r.1).unwrap()).collect();
            let vals: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let text = format_map(&pts, &vals);
            let (p2, v2) = parse_points(Path::new("mem"), &text).unwrap();
            prop_assert_eq!(format_map(&p2, &v2.unwrap()), text);
        }
    }
}
