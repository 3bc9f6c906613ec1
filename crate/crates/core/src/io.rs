//! Dataset text format.
//!
//! ```text
//! kind=categorical,V=5        or        kind=real
//! 3                                     -1.2345678901234567e0
//! 1                                     4.0000000000000000e-1
//! ```
//!
//! One observation per line after the header. Categories are 1-based
//! integers; reals are written with 17 significant digits so that every
//! value round-trips exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mixture::{DataKind, Dataset};

fn parse_header(line: &str) -> Result<DataKind> {
    let err = |m: String| Error::Parse { line: 1, message: m };
    let mut kind = None;
    let mut categories = None;
    for field in line.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| err(format!("header field `{}` is not key=value", field.trim())))?;
        match key.trim() {
            "kind" => kind = Some(value.trim().to_string()),
            "V" => {
                categories = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| err(format!("bad category count `{}`: {e}", value.trim())))?,
                )
            }
            other => return Err(err(format!("unknown header key `{other}`"))),
        }
    }
    match kind.as_deref() {
        Some("real") => {
            if categories.is_some() {
                return Err(err("real datasets take no V".into()));
            }
            Ok(DataKind::Real)
        }
        Some("categorical") => match categories {
            Some(v) if v >= 1 => Ok(DataKind::Categorical { categories: v }),
            Some(v) => Err(err(format!("category count must be >= 1, got {v}"))),
            None => Err(err("categorical header needs V=<int>".into())),
        },
        Some(other) => Err(err(format!("unknown kind `{other}`"))),
        None => Err(err("header needs kind=real or kind=categorical".into())),
    }
}

/// Parse a dataset file. Returns `None` for an input with no lines at all.
pub fn parse_dataset(text: &str) -> Result<Option<Dataset>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((header_idx, header)) = lines.next() else {
        return Ok(None);
    };
    let kind = parse_header(header).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse { line: header_idx + 1, message },
        other => other,
    })?;
    match kind {
        DataKind::Categorical { categories } => {
            let mut values = Vec::new();
            for (idx, line) in lines {
                let t = line.trim();
                let v: usize = t.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("`{t}` is not a category index"),
                })?;
                if v == 0 || v > categories {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("category {v} outside 1..={categories}"),
                    });
                }
                values.push(v);
            }
            Ok(Some(Dataset::Categorical { categories, values }))
        }
        DataKind::Real => {
            let mut values = Vec::new();
            for (idx, line) in lines {
                let t = line.trim();
                let v: f64 = t.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("`{t}` is not a real number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse { line: idx + 1, message: format!("`{t}` is not finite") });
                }
                values.push(v);
            }
            Ok(Some(Dataset::Real(values)))
        }
    }
}

pub fn format_dataset(data: &Dataset) -> String {
    let mut out = String::new();
    match data {
        Dataset::Categorical { categories, values } => {
            writeln!(out, "kind=categorical,V={categories}").unwrap();
            for v in values {
                writeln!(out, "{v}").unwrap();
            }
        }
        Dataset::Real(values) => {
            out.push_str("kind=real\n");
            for v in values {
                writeln!(out, "{v:.16e}").unwrap();
            }
        }
    }
    out
}
