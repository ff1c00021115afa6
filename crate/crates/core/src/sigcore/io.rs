//! Plain-text set files.
//!
//! ```text
//! # optional comment lines
//! K L
//! +1 -1 +1 ...   (K rows of L chips)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Signature, SignatureSet};
use crate::error::{Error, Result};

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::Malformed { line, reason: reason.into() }
}

pub fn parse_set(text: &str) -> Result<SignatureSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or_else(|| malformed(1, "missing \"K L\" header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| malformed(header_line, format!("bad header \"{header}\": {e}")))?;
    let &[k, l] = dims.as_slice() else {
        return Err(malformed(header_line, format!("header must be \"K L\", got \"{header}\"")));
    };
    if k == 0 || l == 0 {
        return Err(malformed(header_line, "K and L must be positive"));
    }

    let mut signatures = Vec::with_capacity(k);
    for (line_no, line) in lines {
        if signatures.len() == k {
            return Err(malformed(line_no, format!("more than the {k} declared rows")));
        }
        let chips = line
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|_| malformed(line_no, format!("bad chip \"{t}\""))))
            .collect::<Result<Vec<_>>>()?;
        if chips.len() != l {
            return Err(malformed(line_no, format!("expected {l} chips, found {}", chips.len())));
        }
        let sig = Signature::from_ints(&chips).map_err(|e| match e {
            Error::Alphabet { index, value } => {
                malformed(line_no, format!("chip {value} at column {} is not +1 or -1", index + 1))
            }
            other => other,
        })?;
        signatures.push(sig);
    }
    if signatures.len() != k {
        return Err(malformed(
            text.lines().count().max(1),
            format!("header declares {k} rows, found {}", signatures.len()),
        ));
    }
    SignatureSet::new(signatures)
}

pub fn write_set(set: &SignatureSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", set.size(), set.signature_len());
    for s in set {
        let _ = writeln!(out, "{s}");
    }
    out
}

pub fn load_set(path: impl AsRef<Path>) -> Result<SignatureSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    parse_set(&text)
}

pub fn save_set(set: &SignatureSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_set(set)).map_err(|source| Error::Io { path: path.into(), source })
}
