//! Line-based dataset text format.
//!
//! ```text
//! dataset <name> <M> <A>
//! graph <id> <target|->
//! v <vertex_index> <label>
//! e <src> <dst> <arc_label> <d|u>
//! end
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Vertices must be
//! declared before any arc that references them, and the declared indices of
//! a graph must cover `0..n` exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::{Arc, Graph, GraphDataset};
use crate::{Error, Result};

struct Builder {
    id: String,
    target: Option<usize>,
    labels: Vec<Option<usize>>,
    arcs: Vec<Arc>,
    start_line: usize,
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{tok}`")))
}

fn no_more<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match toks.next() {
        Some(t) => Err(Error::parse(line, format!("unexpected token `{t}`"))),
        None => Ok(()),
    }
}

/// Parses a dataset, enforcing every graph invariant with line-numbered errors.
pub fn parse_dataset<R: Read>(reader: R) -> Result<GraphDataset> {
    let reader = BufReader::new(reader);
    let mut header: Option<(String, usize, usize)> = None;
    let mut graphs = Vec::new();
    let mut current: Option<Builder> = None;

    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        let Some(keyword) = toks.next() else { continue };

        match keyword {
            "dataset" => {
                if header.is_some() {
                    return Err(Error::parse(lineno, "duplicate dataset header"));
                }
                let name: String = field(toks.next(), lineno, "dataset name")?;
                let m: usize = field(toks.next(), lineno, "vertex alphabet size")?;
                let a: usize = field(toks.next(), lineno, "arc alphabet size")?;
                no_more(toks, lineno)?;
                if m == 0 || a == 0 {
                    return Err(Error::parse(lineno, "alphabet sizes must be at least 1"));
                }
                header = Some((name, m, a));
            }
            "graph" => {
                if header.is_none() {
                    return Err(Error::parse(lineno, "graph before dataset header"));
                }
                if current.is_some() {
                    return Err(Error::parse(lineno, "graph opened before previous `end`"));
                }
                let id: String = field(toks.next(), lineno, "graph id")?;
                let target = match toks.next() {
                    Some("-") => None,
                    tok => Some(field(tok, lineno, "target")?),
                };
                no_more(toks, lineno)?;
                current = Some(Builder {
                    id,
                    target,
                    labels: Vec::new(),
                    arcs: Vec::new(),
                    start_line: lineno,
                });
            }
            "v" => {
                let (_, m, _) = header.as_ref().expect("graph requires header");
                let g = current
                    .as_mut()
                    .ok_or_else(|| Error::parse(lineno, "vertex outside a graph"))?;
                let idx: usize = field(toks.next(), lineno, "vertex index")?;
                let label: usize = field(toks.next(), lineno, "vertex label")?;
                no_more(toks, lineno)?;
                if label == 0 || label > *m {
                    return Err(Error::parse(lineno, format!("vertex label {label} outside 1..={m}")));
                }
                if g.labels.len() <= idx {
                    g.labels.resize(idx + 1, None);
                }
                if g.labels[idx].replace(label).is_some() {
                    return Err(Error::parse(lineno, format!("duplicate vertex index {idx}")));
                }
            }
            "e" => {
                let (_, _, a) = header.as_ref().expect("graph requires header");
                let g = current
                    .as_mut()
                    .ok_or_else(|| Error::parse(lineno, "edge outside a graph"))?;
                let src: usize = field(toks.next(), lineno, "edge source")?;
                let dst: usize = field(toks.next(), lineno, "edge destination")?;
                let label: usize = field(toks.next(), lineno, "arc label")?;
                let kind: String = field(toks.next(), lineno, "edge kind")?;
                no_more(toks, lineno)?;
                if label == 0 || label > *a {
                    return Err(Error::parse(lineno, format!("arc label {label} outside 1..={a}")));
                }
                for v in [src, dst] {
                    if !matches!(g.labels.get(v), Some(Some(_))) {
                        return Err(Error::parse(lineno, format!("edge endpoint {v} is not a declared vertex")));
                    }
                }
                match kind.as_str() {
                    "d" => g.arcs.push(Arc::new(src, dst, label)),
                    "u" => {
                        g.arcs.push(Arc::new(src, dst, label));
                        g.arcs.push(Arc::new(dst, src, label));
                    }
                    other => return Err(Error::parse(lineno, format!("edge kind must be `d` or `u`, got `{other}`"))),
                }
            }
            "end" => {
                no_more(toks, lineno)?;
                let g = current
                    .take()
                    .ok_or_else(|| Error::parse(lineno, "`end` without an open graph"))?;
                let labels = g
                    .labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| l.ok_or_else(|| Error::parse(g.start_line, format!("vertex {i} never declared"))))
                    .collect::<Result<Vec<_>>>()?;
                graphs.push(Graph::new(g.id, labels, g.arcs, g.target));
            }
            other => return Err(Error::parse(lineno, format!("unknown record `{other}`"))),
        }
    }

    if let Some(g) = current {
        return Err(Error::parse(g.start_line, format!("graph `{}` is missing `end`", g.id)));
    }
    let (name, m, a) = header.ok_or_else(|| Error::parse(0, "missing dataset header"))?;
    Ok(GraphDataset::new(name, m, a, graphs))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<GraphDataset> {
    let path = path.as_ref();
    let file = fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_dataset(file)
}

/// Renders the dataset; every arc is written as a directed record.
pub fn serialize_dataset(dataset: &GraphDataset) -> String {
    let mut out = String::new();
    writeln!(out, "dataset {} {} {}", dataset.name, dataset.n_labels, dataset.n_arc_labels).unwrap();
    for g in &dataset.graphs {
        match g.target {
            Some(t) => writeln!(out, "graph {} {t}", g.id).unwrap(),
            None => writeln!(out, "graph {} -", g.id).unwrap(),
        }
        for (i, label) in g.labels.iter().enumerate() {
            writeln!(out, "v {i} {label}").unwrap();
        }
        for arc in &g.arcs {
            writeln!(out, "e {} {} {} d", arc.src, arc.dst, arc.label).unwrap();
        }
        out.push_str("end\n");
    }
    out
}

pub fn write_dataset<W: Write>(dataset: &GraphDataset, mut sink: W) -> Result<()> {
    sink.write_all(serialize_dataset(dataset).as_bytes())?;
    Ok(())
}
