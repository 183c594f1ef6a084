//! Plain-text QUBO exchange format.
//!
//! ```text
//! # comment
//! p qubo <size> <num_terms>
//! <i> <j> <coeff>        (i <= j, num_terms lines)
//! c offset <value>
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{Qubo, VarRegistry};
use crate::error::{Error, Result};

pub(super) fn write(model: &Qubo, registry: Option<&VarRegistry>) -> String {
    let mut out = String::new();
    if let Some(reg) = registry {
        for (idx, name) in reg.iter() {
            let _ = writeln!(out, "# var {idx} {name}");
        }
    }
    let _ = writeln!(out, "p qubo {} {}", model.size(), model.num_terms());
    for ((i, j), c) in model.terms() {
        let _ = writeln!(out, "{i} {j} {c:?}");
    }
    let _ = writeln!(out, "c offset {:?}", model.offset());
    out
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { line, reason: reason.into() }
}

fn number<T: std::str::FromStr>(line: usize, token: Option<&str>, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    token.parse().map_err(|_| parse_err(line, format!("invalid {what} `{token}`")))
}

fn finite(line: usize, value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(parse_err(line, format!("{what} must be finite")))
    }
}

fn no_trailing<'a>(line: usize, mut rest: impl Iterator<Item = &'a str>) -> Result<()> {
    match rest.next() {
        Some(tok) => Err(parse_err(line, format!("unexpected token `{tok}`"))),
        None => Ok(()),
    }
}

pub(super) fn parse(source: &str) -> Result<Qubo> {
    let mut model: Option<(Qubo, usize)> = None;
    let mut seen = HashSet::new();
    let mut terms_read = 0usize;
    let mut offset: Option<f64> = None;

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut tokens = text.split_whitespace();
        match tokens.next() {
            Some("p") => {
                if model.is_some() {
                    return Err(parse_err(line, "duplicate problem line"));
                }
                if tokens.next() != Some("qubo") {
                    return Err(parse_err(line, "expected `p qubo <size> <num_terms>`"));
                }
                let size: usize = number(line, tokens.next(), "size")?;
                let declared: usize = number(line, tokens.next(), "term count")?;
                no_trailing(line, tokens)?;
                model = Some((Qubo::new(size), declared));
            }
            Some("c") => {
                if tokens.next() != Some("offset") {
                    return Err(parse_err(line, "expected `c offset <value>`"));
                }
                let value = finite(line, number(line, tokens.next(), "offset")?, "offset")?;
                no_trailing(line, tokens)?;
                if offset.replace(value).is_some() {
                    return Err(parse_err(line, "duplicate offset line"));
                }
            }
            Some(first) => {
                let (qubo, _) = model.as_mut().ok_or_else(|| parse_err(line, "term before problem line"))?;
                let i: usize = number(line, Some(first), "row index")?;
                let j: usize = number(line, tokens.next(), "column index")?;
                let c = finite(line, number(line, tokens.next(), "coefficient")?, "coefficient")?;
                no_trailing(line, tokens)?;
                if i > j {
                    return Err(parse_err(line, format!("term ({i},{j}) is below the diagonal")));
                }
                if j >= qubo.size() {
                    return Err(parse_err(line, format!("index {j} out of range for size {}", qubo.size())));
                }
                if !seen.insert((i, j)) {
                    return Err(parse_err(line, format!("duplicate term ({i},{j})")));
                }
                terms_read += 1;
                if c != 0.0 {
                    qubo.add_term(i, j, c)?;
                }
            }
            None => unreachable!("blank lines are skipped"),
        }
    }

    let (mut qubo, declared) = model.ok_or_else(|| parse_err(0, "missing `p qubo` line"))?;
    if declared != terms_read {
        return Err(parse_err(0, format!("header declares {declared} terms, found {terms_read}")));
    }
    qubo.add_offset(offset.unwrap_or(0.0));
    Ok(qubo)
}
