//! Number formatting and output sinks.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use serde_json::Value;

/// Formats `v` with exactly 17 significant digits. Positional notation for
/// decimal exponents in `-5..=16`, scientific otherwise.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..=16).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if exp >= 0 {
        let split = exp as usize + 1;
        let (int, frac) = digits.split_at(split);
        if frac.is_empty() {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac}")
        }
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{zeros}{digits}")
    }
}

/// JSON number carrying the 17-digit text verbatim; `null` when not finite.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    Value::Number(fmt_num(v).parse().expect("formatted number parses"))
}

pub fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sink {
    Stdout,
    Stderr,
    File(PathBuf),
}

impl Sink {
    pub fn describe(&self) -> String {
        match self {
            Sink::Stdout => "-".into(),
            Sink::Stderr => "stderr".into(),
            Sink::File(p) => p.display().to_string(),
        }
    }

    pub fn write(&self, content: &[u8]) -> io::Result<()> {
        match self {
            Sink::Stdout => {
                let mut out = io::stdout().lock();
                out.write_all(content)?;
                out.flush()
            }
            Sink::Stderr => io::stderr().lock().write_all(content),
            Sink::File(p) => fs::write(p, content),
        }
    }
}

/// Data goes to `--out` (default stdout); the JSON companion goes to its own
/// flag, else stdout when the data went to a file, else stderr.
pub fn sinks(out: &Option<PathBuf>, companion: &Option<PathBuf>) -> (Sink, Sink) {
    let data = out.clone().map_or(Sink::Stdout, Sink::File);
    let side = match (companion, out) {
        (Some(p), _) => Sink::File(p.clone()),
        (None, Some(_)) => Sink::Stdout,
        (None, None) => Sink::Stderr,
    };
    (data, side)
}

pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s.into_bytes()
}

pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.into_iter()).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
