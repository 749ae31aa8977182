//! Small helpers shared by the model and kernel text formats.

use std::str::FromStr;

use crate::{Error, Result};

/// Scientific notation with 17 significant digits; parses back to the same bits.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn join_f64(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" ")
}

/// Cursor over the non-blank, non-comment lines of a text file.
pub(crate) struct Records<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Records<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Records { lines, pos: 0 }
    }

    pub(crate) fn line(&self) -> usize {
        self.lines.get(self.pos).map_or(0, |(n, _)| *n)
    }

    /// Next line as tokens.
    pub(crate) fn next_tokens(&mut self) -> Result<(usize, Vec<&'a str>)> {
        let (n, l) = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::ModelFormat("unexpected end of file (truncated?)".into()))?;
        self.pos += 1;
        Ok((*n, l.split_whitespace().collect()))
    }

    /// Next line, which must start with `keyword`; returns the remaining tokens.
    pub(crate) fn expect(&mut self, keyword: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, toks) = self.next_tokens()?;
        if toks.first() != Some(&keyword) {
            return Err(Error::ModelFormat(format!(
                "line {n}: expected `{keyword}`, found `{}`",
                toks.first().unwrap_or(&"")
            )));
        }
        Ok((n, toks[1..].to_vec()))
    }

    pub(crate) fn is_done(&self) -> bool {
        self.pos >= self.lines.len()
    }
}

pub(crate) fn parse_tok<T: FromStr>(tok: Option<&&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::ModelFormat(format!("line {line}: missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::ModelFormat(format!("line {line}: invalid {what} `{tok}`")))
}

pub(crate) fn parse_floats(toks: &[&str], line: usize, expected: usize) -> Result<Vec<f64>> {
    if toks.len() != expected {
        return Err(Error::ModelFormat(format!(
            "line {line}: expected {expected} values, found {}",
            toks.len()
        )));
    }
    toks.iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::ModelFormat(format!("line {line}: invalid number `{t}`")))
        })
        .collect()
}
