//! Text section describing one layer inside a model file.
//!
//! ```text
//! layer <index>
//! states <C>
//! alphabet <M> <A>
//! predecessors <k> <layer>:<states> ...
//! emission                      # C lines of M values, P(y | Q = i)
//! prior <C values>              # base layer only
//! layer-weight <k values>       # deep layers only
//! arc-weight <p> <A values>     # one line per predecessor slot
//! transition <p> <a>            # C_p + 1 lines of C values, bottom last
//! end-layer
//! ```

use std::fmt::Write as _;

use super::{LayerParams, Predecessor};
use crate::textio::{join_f64, parse_floats, parse_tok, Records};
use crate::{Error, Result};

pub fn write_layer_section(out: &mut String, index: usize, params: &LayerParams) {
    let shape = params.shape();
    writeln!(out, "layer {index}").unwrap();
    writeln!(out, "states {}", shape.n_states).unwrap();
    writeln!(out, "alphabet {} {}", shape.n_labels, shape.n_arc_labels).unwrap();
    write!(out, "predecessors {}", shape.predecessors.len()).unwrap();
    for p in &shape.predecessors {
        write!(out, " {}:{}", p.layer, p.n_states).unwrap();
    }
    out.push('\n');
    out.push_str("emission\n");
    for i in 0..shape.n_states {
        writeln!(out, "{}", join_f64(&params.emission_row(i))).unwrap();
    }
    if params.is_base() {
        writeln!(out, "prior {}", join_f64(params.prior())).unwrap();
    } else {
        writeln!(out, "layer-weight {}", join_f64(params.layer_weight())).unwrap();
        for p in 0..shape.predecessors.len() {
            writeln!(out, "arc-weight {p} {}", join_f64(params.arc_weight(p))).unwrap();
        }
        for (p, pred) in shape.predecessors.iter().enumerate() {
            for a in 1..=shape.n_arc_labels {
                writeln!(out, "transition {p} {}", a - 1).unwrap();
                for j in 0..=pred.n_states {
                    writeln!(out, "{}", join_f64(params.transition_column(p, a, j))).unwrap();
                }
            }
        }
    }
    out.push_str("end-layer\n");
}

pub(crate) fn parse_layer(records: &mut Records<'_>) -> Result<(usize, LayerParams)> {
    let (n, toks) = records.expect("layer")?;
    let index: usize = parse_tok(toks.first(), n, "layer index")?;
    let (n, toks) = records.expect("states")?;
    let c: usize = parse_tok(toks.first(), n, "state count")?;
    let (n, toks) = records.expect("alphabet")?;
    let m: usize = parse_tok(toks.first(), n, "vertex alphabet")?;
    let a: usize = parse_tok(toks.get(1), n, "arc alphabet")?;
    let (n, toks) = records.expect("predecessors")?;
    let k: usize = parse_tok(toks.first(), n, "predecessor count")?;
    if toks.len() != k + 1 {
        return Err(Error::ModelFormat(format!("line {n}: expected {k} predecessors")));
    }
    let predecessors = toks[1..]
        .iter()
        .map(|t| {
            let (l, s) = t
                .split_once(':')
                .ok_or_else(|| Error::ModelFormat(format!("line {n}: predecessor must be layer:states")))?;
            Ok(Predecessor::new(
                parse_tok(Some(&l), n, "predecessor layer")?,
                parse_tok(Some(&s), n, "predecessor states")?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    records.expect("emission")?;
    let mut emission = Vec::with_capacity(c);
    for _ in 0..c {
        let (n, toks) = records.next_tokens()?;
        emission.push(parse_floats(&toks, n, m)?);
    }

    let params = if predecessors.is_empty() {
        let (n, toks) = records.expect("prior")?;
        let prior = parse_floats(&toks, n, c)?;
        LayerParams::base(emission, prior)?.with_arc_alphabet(a)?
    } else {
        let (n, toks) = records.expect("layer-weight")?;
        let layer_weight = parse_floats(&toks, n, k)?;
        let mut arc_weight = Vec::with_capacity(k);
        for p in 0..k {
            let (n, toks) = records.expect("arc-weight")?;
            let slot: usize = parse_tok(toks.first(), n, "predecessor slot")?;
            if slot != p {
                return Err(Error::ModelFormat(format!("line {n}: expected arc-weight {p}")));
            }
            arc_weight.push(parse_floats(&toks[1..], n, a)?);
        }
        let mut transition = Vec::with_capacity(k);
        for (p, pred) in predecessors.iter().enumerate() {
            let mut per_arc = Vec::with_capacity(a);
            for arc in 0..a {
                let (n, toks) = records.expect("transition")?;
                let tp: usize = parse_tok(toks.first(), n, "predecessor slot")?;
                let ta: usize = parse_tok(toks.get(1), n, "arc index")?;
                if (tp, ta) != (p, arc) {
                    return Err(Error::ModelFormat(format!("line {n}: expected transition {p} {arc}")));
                }
                let mut cols = Vec::with_capacity(pred.n_states + 1);
                for _ in 0..=pred.n_states {
                    let (n, toks) = records.next_tokens()?;
                    cols.push(parse_floats(&toks, n, c)?);
                }
                per_arc.push(cols);
            }
            transition.push(per_arc);
        }
        LayerParams::deep(a, predecessors, emission, layer_weight, arc_weight, transition)?
    };
    records.expect("end-layer")?;
    Ok((index, params))
}

/// Parses a single layer section from text.
pub fn parse_layer_section(text: &str) -> Result<(usize, LayerParams)> {
    let mut records = Records::new(text);
    let out = parse_layer(&mut records)?;
    if !records.is_done() {
        return Err(Error::ModelFormat(format!("line {}: trailing content", records.line())));
    }
    Ok(out)
}
