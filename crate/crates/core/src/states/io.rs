//! QSTATE v1: a line-oriented text format for sparse states.
//!
//! ```text
//! qstate v1
//! kind: density
//! dims: 2 2
//! nnz: 4
//! 0 0 5.0000000000000000e-1 0.0000000000000000e0
//! ...
//! ```
//!
//! Density payload lines are `<row> <col> <re> <im>`; pure payload lines are
//! `<index> <re> <im>`. Indices are 0-based composite indices. Lines starting
//! with `#` are comments. For density payloads, an off-diagonal entry whose
//! mirror is absent is completed by conjugation; when both are present they
//! must agree to the Hermiticity tolerance.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use super::{validate_density_with, DensityState, PureStateVec, PSD_TOL};
use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix, ComplexVector, CompositeIndexMap};

const MAGIC: &str = "qstate v1";

/// Contents of a QSTATE file.
#[derive(Debug, Clone, PartialEq)]
pub enum QState {
    Density(DensityState),
    Pure(PureStateVec),
}

impl QState {
    pub fn map(&self) -> &CompositeIndexMap {
        match self {
            QState::Density(rho) => rho.map(),
            QState::Pure(psi) => psi.map(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            QState::Density(_) => "density",
            QState::Pure(_) => "pure",
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            QState::Density(rho) => rho.trace(),
            QState::Pure(psi) => psi.norm() * psi.norm(),
        }
    }

    /// Density operator of the state (projector for pure states).
    pub fn to_density(&self) -> DensityState {
        match self {
            QState::Density(rho) => rho.clone(),
            QState::Pure(psi) => psi.projector(),
        }
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a state; only nonzero entries are written.
pub fn format_qstate(state: &QState) -> String {
    let mut out = String::new();
    let dims: Vec<String> = state.map().dims().iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "kind: {}", state.kind());
    let _ = writeln!(out, "dims: {}", dims.join(" "));
    match state {
        QState::Density(rho) => {
            let m = rho.matrix();
            let n = m.nrows();
            let entries: Vec<(usize, usize)> = (0..n)
                .flat_map(|r| (0..n).map(move |c| (r, c)))
                .filter(|&(r, c)| m[(r, c)].re != 0.0 || m[(r, c)].im != 0.0)
                .collect();
            let _ = writeln!(out, "nnz: {}", entries.len());
            for (r, c) in entries {
                let z = m[(r, c)];
                let _ = writeln!(out, "{r} {c} {} {}", fmt_f64(z.re), fmt_f64(z.im));
            }
        }
        QState::Pure(psi) => {
            let v = psi.amplitudes();
            let entries: Vec<usize> = (0..v.len()).filter(|&i| v[i].re != 0.0 || v[i].im != 0.0).collect();
            let _ = writeln!(out, "nnz: {}", entries.len());
            for i in entries {
                let _ = writeln!(out, "{i} {} {}", fmt_f64(v[i].re), fmt_f64(v[i].im));
            }
        }
    }
    out
}

/// Writes atomically: the payload goes to a temporary file in the target
/// directory which is then renamed over `path`.
pub fn write_qstate(state: &QState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(format_qstate(state).as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn read_qstate(path: impl AsRef<Path>) -> Result<QState> {
    parse_qstate(&std::fs::read_to_string(path)?)
}

/// [`read_qstate`] validating density payloads with tolerance `tol`.
pub fn read_qstate_with(path: impl AsRef<Path>, tol: f64) -> Result<QState> {
    parse_qstate_with(&std::fs::read_to_string(path)?, tol)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str, last: usize) -> Result<(usize, &'a str)> {
    let (no, text) = lines.next().ok_or_else(|| parse_err(last + 1, format!("missing '{key}:' header")))?;
    let value = text
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(':'))
        .ok_or_else(|| parse_err(no, format!("expected '{key}: ...', found '{text}'")))?;
    Ok((no, value.trim()))
}

fn parse_num<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} '{token}'")))
}

pub fn parse_qstate(text: &str) -> Result<QState> {
    parse_qstate_with(text, PSD_TOL)
}

pub fn parse_qstate_with(text: &str, tol: f64) -> Result<QState> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (magic_line, magic) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if magic != MAGIC {
        return Err(parse_err(magic_line, format!("expected '{MAGIC}', found '{magic}'")));
    }
    let (kind_line, kind) = header(&mut lines, "kind", magic_line)?;
    let density = match kind {
        "density" => true,
        "pure" => false,
        other => return Err(parse_err(kind_line, format!("unknown kind '{other}'"))),
    };
    let (dims_line, dims_text) = header(&mut lines, "dims", kind_line)?;
    let dims: Vec<usize> = dims_text
        .split_whitespace()
        .map(|t| parse_num(Some(t), dims_line, "dimension"))
        .collect::<Result<_>>()?;
    let map = CompositeIndexMap::new(dims).map_err(|e| parse_err(dims_line, e.to_string()))?;
    let (nnz_line, nnz_text) = header(&mut lines, "nnz", dims_line)?;
    let nnz: usize = parse_num(Some(nnz_text), nnz_line, "nnz")?;
    let n = map.total();

    let payload: Vec<(usize, &str)> = lines.collect();
    if payload.len() != nnz {
        return Err(parse_err(
            nnz_line,
            format!("nnz declares {nnz} entries but {} payload lines follow", payload.len()),
        ));
    }

    if density {
        let mut entries: HashMap<(usize, usize), (usize, f64, f64)> = HashMap::with_capacity(nnz);
        for (no, text) in payload {
            let mut tok = text.split_whitespace();
            let r: usize = parse_num(tok.next(), no, "row")?;
            let c: usize = parse_num(tok.next(), no, "column")?;
            let re: f64 = parse_num(tok.next(), no, "real part")?;
            let im: f64 = parse_num(tok.next(), no, "imaginary part")?;
            if tok.next().is_some() {
                return Err(parse_err(no, "trailing tokens"));
            }
            if r >= n || c >= n {
                return Err(parse_err(no, format!("index ({r}, {c}) out of range for dimension {n}")));
            }
            if !re.is_finite() || !im.is_finite() {
                return Err(parse_err(no, "non-finite value"));
            }
            if entries.insert((r, c), (no, re, im)).is_some() {
                return Err(parse_err(no, format!("duplicate entry ({r}, {c})")));
            }
        }
        let mut m = ComplexMatrix::zeros(n, n);
        for (&(r, c), &(_, re, im)) in &entries {
            m[(r, c)] = c64(re, im);
            if !entries.contains_key(&(c, r)) {
                m[(c, r)] = c64(re, -im);
            }
        }
        validate_density_with(m, map, tol).map_err(|e| {
            let line = match &e {
                Error::NotHermitian { row, col, .. } => entries
                    .get(&(*row, *col))
                    .or_else(|| entries.get(&(*col, *row)))
                    .map_or(nnz_line, |v| v.0),
                _ => nnz_line,
            };
            parse_err(line, format!("invalid density payload: {e}"))
        })
        .map(QState::Density)
    } else {
        let mut v = ComplexVector::zeros(n);
        let mut seen = vec![false; n];
        for (no, text) in payload {
            let mut tok = text.split_whitespace();
            let i: usize = parse_num(tok.next(), no, "index")?;
            let re: f64 = parse_num(tok.next(), no, "real part")?;
            let im: f64 = parse_num(tok.next(), no, "imaginary part")?;
            if tok.next().is_some() {
                return Err(parse_err(no, "trailing tokens"));
            }
            if i >= n {
                return Err(parse_err(no, format!("index {i} out of range for dimension {n}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(parse_err(no, format!("duplicate index {i}")));
            }
            v[i] = c64(re, im);
        }
        PureStateVec::new(map, v)
            .map(QState::Pure)
            .map_err(|e| parse_err(nnz_line, format!("invalid pure payload: {e}")))
    }
}
