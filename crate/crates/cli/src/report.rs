//! Line-oriented `key=value` reports.
//!
//! Header lines are `key=value` where the value runs to the end of the
//! line. Record lines start with `record=<type>` followed by space-separated
//! `key=value` fields; values containing spaces are double-quoted.

use std::fmt::Write as _;
use std::time::Instant;

pub const FORMAT: &str = "finent-report/1";

pub struct Report {
    out: String,
    started: Instant,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        let mut out = String::new();
        writeln!(out, "format={FORMAT}").unwrap();
        writeln!(out, "command={command}").unwrap();
        writeln!(out, "seed={seed}").unwrap();
        Self { out, started: Instant::now() }
    }

    pub fn record(&mut self, kind: &str, fields: &[(&str, String)]) {
        self.out.push_str("record=");
        self.out.push_str(kind);
        for (k, v) in fields {
            if v.contains(char::is_whitespace) || v.is_empty() {
                write!(self.out, " {k}=\"{}\"", v.replace('"', "'")).unwrap();
            } else {
                write!(self.out, " {k}={v}").unwrap();
            }
        }
        self.out.push('\n');
    }

    /// Appends the wall-clock footer and returns the text.
    pub fn finish(mut self) -> String {
        writeln!(self.out, "elapsed_ms={:.3}", self.started.elapsed().as_secs_f64() * 1e3).unwrap();
        self.out
    }
}

/// Shortest representation that parses back to the same `f64`. Negative
/// zero prints as `0e0`.
pub fn num(x: f64) -> String {
    format!("{:e}", x + 0.0)
}

pub fn list(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}
