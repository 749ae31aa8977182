//! Model file.
//!
//! ```text
//! cgmm-model v1
//! alphabet <M> <A>
//! layers <n>
//! <n layer sections>
//! log <records>
//! depth <d> <accuracy> <winner> <kept 0|1>
//! seeds <pool seeds>
//! scores <pool scores>
//! stop <max-layers|no-improvement|none>
//! end
//! ```

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::{ConstructionLog, DepthRecord, StackModel};
use crate::layer::{parse_layer, write_layer_section};
use crate::textio::{fmt_f64, join_f64, parse_floats, parse_tok, Records};
use crate::{Error, Result};

pub const MODEL_HEADER: &str = "cgmm-model v1";

impl StackModel {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MODEL_HEADER}").unwrap();
        writeln!(out, "alphabet {} {}", self.n_labels, self.n_arc_labels).unwrap();
        writeln!(out, "layers {}", self.layers.len()).unwrap();
        for (l, p) in self.layers.iter().enumerate() {
            write_layer_section(&mut out, l, p);
        }
        writeln!(out, "log {}", self.log.depths.len()).unwrap();
        for d in &self.log.depths {
            writeln!(out, "depth {} {} {} {}", d.depth, fmt_f64(d.accuracy), d.winner, u8::from(d.kept)).unwrap();
            let seeds: Vec<String> = d.seeds.iter().map(u64::to_string).collect();
            writeln!(out, "seeds {}", seeds.join(" ")).unwrap();
            writeln!(out, "scores {}", join_f64(&d.scores)).unwrap();
        }
        writeln!(out, "stop {}", self.log.stop).unwrap();
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut records = Records::new(text);
        let (_, header) = records.next_tokens()?;
        let found = header.join(" ");
        if found != MODEL_HEADER {
            if header.first() == Some(&"cgmm-model") {
                return Err(Error::Version {
                    found,
                    expected: MODEL_HEADER.into(),
                });
            }
            return Err(Error::ModelFormat(format!("not a model file (header `{found}`)")));
        }
        let (n, toks) = records.expect("alphabet")?;
        let m: usize = parse_tok(toks.first(), n, "vertex alphabet")?;
        let a: usize = parse_tok(toks.get(1), n, "arc alphabet")?;
        let (n, toks) = records.expect("layers")?;
        let n_layers: usize = parse_tok(toks.first(), n, "layer count")?;
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let line = records.line();
            let (index, params) = parse_layer(&mut records)?;
            if index != l {
                return Err(Error::ModelFormat(format!("line {line}: expected layer {l}, found {index}")));
            }
            layers.push(params);
        }

        let (n, toks) = records.expect("log")?;
        let n_records: usize = parse_tok(toks.first(), n, "log size")?;
        let mut depths = Vec::with_capacity(n_records);
        for _ in 0..n_records {
            let (n, toks) = records.expect("depth")?;
            let depth = parse_tok(toks.first(), n, "depth")?;
            let accuracy = parse_tok(toks.get(1), n, "accuracy")?;
            let winner = parse_tok(toks.get(2), n, "winner")?;
            let kept = match toks.get(3) {
                Some(&"1") => true,
                Some(&"0") => false,
                _ => return Err(Error::ModelFormat(format!("line {n}: kept flag must be 0 or 1"))),
            };
            let (n, toks) = records.expect("seeds")?;
            let seeds = toks
                .iter()
                .map(|t| parse_tok(Some(t), n, "seed"))
                .collect::<Result<Vec<u64>>>()?;
            let (n, toks) = records.expect("scores")?;
            let scores = parse_floats(&toks, n, seeds.len())?;
            depths.push(DepthRecord {
                depth,
                accuracy,
                winner,
                kept,
                seeds,
                scores,
            });
        }
        let (n, toks) = records.expect("stop")?;
        let stop = toks
            .first()
            .ok_or_else(|| Error::ModelFormat(format!("line {n}: missing stop reason")))?
            .parse()?;
        records.expect("end")?;
        if !records.is_done() {
            return Err(Error::ModelFormat(format!("line {}: trailing content", records.line())));
        }
        StackModel::new(layers, m, a, ConstructionLog { depths, stop })
    }
}

pub fn save_stack<W: Write>(model: &StackModel, mut sink: W) -> Result<()> {
    sink.write_all(model.to_text().as_bytes())?;
    Ok(())
}

pub fn load_stack<R: std::io::Read>(mut source: R) -> Result<StackModel> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    StackModel::parse(&text)
}

/// Loads a model file; I/O errors name the path.
pub fn read_stack(path: impl AsRef<Path>) -> Result<StackModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    StackModel::parse(&text)
}
