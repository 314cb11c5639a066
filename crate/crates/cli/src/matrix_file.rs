//! Dense complex matrices as text.
//!
//! The first line holds the dimension `n`; each of the next `n` lines holds
//! `n` whitespace-separated entries written `a`, `a+bj` or `a-bj`. Blank
//! lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use qsymplectic::space::CMatrix;

use crate::CliError;

pub fn parse_entry(token: &str) -> Option<Complex64> {
    let Some(body) = token.strip_suffix('j') else {
        return parse_real(token).map(|re| Complex64::new(re, 0.0));
    };
    // the split is the last sign that does not belong to an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => Some(Complex64::new(parse_real(&body[..i])?, parse_real(&body[i..])?)),
        None => Some(Complex64::new(0.0, parse_real(body)?)),
    }
}

fn parse_real(s: &str) -> Option<f64> {
    let valid = !s.is_empty()
        && s.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'));
    let v: f64 = if valid { s.parse().ok()? } else { return None };
    v.is_finite().then_some(v)
}

pub fn format_entry(z: Complex64) -> String {
    if z.im == 0.0 && !z.im.is_sign_negative() {
        return format!("{:e}", z.re);
    }
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:e}{sign}{:e}j", z.re, z.im.abs())
}

pub fn parse_matrix(text: &str) -> Result<CMatrix, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (first, header) = lines.next().ok_or("empty matrix file")?;
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| format!("line {}: expected the dimension, found \"{}\"", first + 1, header.trim()))?;
    if n == 0 {
        return Err(format!("line {}: dimension must be positive", first + 1));
    }
    let mut m = CMatrix::zeros(n, n);
    for row in 0..n {
        let (lineno, line) = lines.next().ok_or_else(|| format!("expected {n} rows, found {row}"))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != n {
            return Err(format!("line {}: expected {n} entries, found {}", lineno + 1, tokens.len()));
        }
        for (col, token) in tokens.into_iter().enumerate() {
            m[(row, col)] = parse_entry(token)
                .ok_or_else(|| format!("line {}: malformed entry \"{token}\"", lineno + 1))?;
        }
    }
    if let Some((lineno, _)) = lines.next() {
        return Err(format!("line {}: unexpected content after {n} rows", lineno + 1));
    }
    Ok(m)
}

pub fn format_matrix(m: &CMatrix) -> String {
    let mut out = format!("{}\n", m.nrows());
    for row in m.row_iter() {
        let entries: Vec<String> = row.iter().map(|z| format_entry(*z)).collect();
        let _ = writeln!(out, "{}", entries.join(" "));
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<CMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_matrix(&text).map_err(|msg| CliError::Config(format!("{}: {msg}", path.display())))
}

pub fn write_matrix(path: &Path, m: &CMatrix) -> Result<(), CliError> {
    std::fs::write(path, format_matrix(m)).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}
