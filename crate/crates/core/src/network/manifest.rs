//! `.ctnet` manifests: line-oriented `key = value` text.
//!
//! ```text
//! [network]
//! input = 32,32,126
//! encoder = ternary_thermometer
//!
//! [layer]
//! kind = conv2d
//! in_ch = 126
//! out_ch = 128
//! kernel = 3,3
//! stride = 1,1
//! padding = full
//! weights = l00_w.cttensor
//! bn = l00_bn.cttensor
//! activation = hardtanh
//! ```
//!
//! Tensor paths are relative to the manifest's directory. Weights may be
//! trit or real tensors; `bn` is a `(5, out_ch)` real tensor with rows
//! gamma, beta, mean, var, eps. An optional `bias` is a real `(out_ch)`
//! tensor. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::network::io::{load_real, load_tensor, save_real, save_tensor, TensorData};
use crate::network::{
    Activation, BatchNorm, Encoder, LayerDesc, LayerKind, NetworkDesc, Padding, Weights,
};
use crate::scalar::Real;
use crate::tensor::Tensor;

#[derive(Default)]
struct Block {
    line: usize,
    entries: Vec<(usize, String, String)>,
}

impl Block {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(l, _, v)| (*l, v.as_str()))
    }

    fn require(&self, key: &str) -> Result<(usize, &str)> {
        self.get(key).ok_or_else(|| Error::Parse {
            line: self.line,
            msg: format!("missing key `{key}`"),
        })
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_usize(line: usize, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| perr(line, format!("expected an unsigned integer, got `{v}`")))
}

fn parse_list(line: usize, v: &str) -> Result<Vec<usize>> {
    v.split(',').map(|p| parse_usize(line, p)).collect()
}

fn parse_pair(line: usize, v: &str) -> Result<(usize, usize)> {
    match parse_list(line, v)?[..] {
        [a] => Ok((a, a)),
        [a, b] => Ok((a, b)),
        _ => Err(perr(line, format!("expected `a` or `a,b`, got `{v}`"))),
    }
}

fn split_blocks(text: &str) -> Result<Vec<(String, Block)>> {
    let mut blocks: Vec<(String, Block)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if let Some(name) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            blocks.push((
                name.trim().to_string(),
                Block {
                    line,
                    entries: Vec::new(),
                },
            ));
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            return Err(perr(line, format!("expected `key = value`, got `{s}`")));
        };
        let Some((_, block)) = blocks.last_mut() else {
            return Err(perr(line, "key outside of a section"));
        };
        let key = k.trim().to_string();
        if block.get(&key).is_some() {
            return Err(perr(line, format!("duplicate key `{key}`")));
        }
        block.entries.push((line, key, v.trim().to_string()));
    }
    Ok(blocks)
}

/// Parse manifest text; tensor paths resolve against `base`.
pub fn parse_network<T: Real>(text: &str, base: &Path) -> Result<NetworkDesc<T>> {
    let blocks = split_blocks(text)?;
    let mut iter = blocks.into_iter();
    let (name, head) = iter.next().ok_or_else(|| perr(1, "empty manifest"))?;
    if name != "network" {
        return Err(perr(head.line, "manifest must start with [network]"));
    }
    let (l, input) = head.require("input")?;
    let input_dims = match parse_list(l, input)?[..] {
        [h, w, c] => (h, w, c),
        _ => return Err(perr(l, "input must be H,W,C")),
    };
    let encoder = match head.get("encoder") {
        Some((l, e)) => Encoder::parse(e).ok_or_else(|| perr(l, format!("unknown encoder `{e}`")))?,
        None => Encoder::default(),
    };

    let mut layers = Vec::new();
    for (name, block) in iter {
        if name != "layer" {
            return Err(perr(block.line, format!("unknown section [{name}]")));
        }
        layers.push(parse_layer(&block, base)?);
    }
    Ok(NetworkDesc {
        input_dims,
        encoder,
        layers,
    })
}

fn parse_layer<T: Real>(b: &Block, base: &Path) -> Result<LayerDesc<T>> {
    let (l, k) = b.require("kind")?;
    let kind = LayerKind::parse(k).ok_or_else(|| perr(l, format!("unknown kind `{k}`")))?;
    let (l, v) = b.require("in_ch")?;
    let in_ch = parse_usize(l, v)?;
    let out_ch = match b.get("out_ch") {
        Some((l, v)) => parse_usize(l, v)?,
        None if kind.is_pool() => in_ch,
        None => return Err(perr(b.line, "missing key `out_ch`")),
    };
    let kernel = match b.get("kernel") {
        Some((l, v)) => parse_pair(l, v)?,
        None if kind == LayerKind::FullyConnected => (1, 1),
        None => return Err(perr(b.line, "missing key `kernel`")),
    };
    let stride = match b.get("stride") {
        Some((l, v)) => parse_pair(l, v)?,
        None if kind.is_pool() => kernel,
        None => (1, 1),
    };
    let padding = match b.get("padding") {
        Some((_, "full" | "same")) => Padding::Full,
        Some((_, "none" | "valid")) => Padding::None,
        Some((l, v)) => return Err(perr(l, format!("unknown padding `{v}`"))),
        None if kind.is_pool() || kind == LayerKind::FullyConnected => Padding::None,
        None => Padding::Full,
    };
    let activation = match b.get("activation") {
        Some((_, "hardtanh")) => Activation::Hardtanh,
        Some((_, "none")) => Activation::None,
        Some((l, v)) => return Err(perr(l, format!("unknown activation `{v}`"))),
        None if kind.is_pool() => Activation::None,
        None => Activation::Hardtanh,
    };
    let load = |key: &str| -> Result<Option<(usize, PathBuf)>> {
        Ok(b.get(key).map(|(l, p)| (l, base.join(p))))
    };
    let weights = match load("weights")? {
        Some((l, p)) => Some(match load_tensor(&p).map_err(|e| perr(l, format!("{}: {e}", p.display())))? {
            TensorData::Trits(t) => Weights::Ternary(Tensor::unpack(&t)),
            TensorData::Real(t) => Weights::Real(t.map(T::of)),
            TensorData::Int(t) => Weights::Real(t.map(|v| T::of_int(v as i64))),
        }),
        None => None,
    };
    let bn = match load("bn")? {
        Some((l, p)) => {
            let t = load_real::<T>(&p).map_err(|e| perr(l, format!("{}: {e}", p.display())))?;
            Some(BatchNorm::from_tensor(&t).map_err(|e| perr(l, e.to_string()))?)
        }
        None => None,
    };
    let bias = match load("bias")? {
        Some((l, p)) => Some(
            load_real::<T>(&p)
                .map_err(|e| perr(l, format!("{}: {e}", p.display())))?
                .into_data(),
        ),
        None => None,
    };
    if !kind.is_pool() && weights.is_none() {
        return Err(perr(b.line, "missing key `weights`"));
    }
    Ok(LayerDesc {
        kind,
        in_ch,
        out_ch,
        kernel,
        stride,
        padding,
        weights,
        bias,
        bn,
        activation,
    })
}

pub fn load_network<T: Real>(path: impl AsRef<Path>) -> Result<NetworkDesc<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_network(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Write `net` as `<dir>/<stem>.ctnet` plus one tensor file per parameter.
/// Returns the manifest path.
pub fn save_network<T: Real>(net: &NetworkDesc<T>, dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let (h, w, c) = net.input_dims;
    let mut text = String::new();
    writeln!(text, "[network]").unwrap();
    writeln!(text, "input = {h},{w},{c}").unwrap();
    writeln!(text, "encoder = {}", net.encoder.name()).unwrap();
    for (i, layer) in net.layers.iter().enumerate() {
        writeln!(text, "\n[layer]").unwrap();
        writeln!(text, "kind = {}", layer.kind.name()).unwrap();
        writeln!(text, "in_ch = {}", layer.in_ch).unwrap();
        writeln!(text, "out_ch = {}", layer.out_ch).unwrap();
        writeln!(text, "kernel = {},{}", layer.kernel.0, layer.kernel.1).unwrap();
        writeln!(text, "stride = {},{}", layer.stride.0, layer.stride.1).unwrap();
        let pad = match layer.padding {
            Padding::Full => "full",
            Padding::None => "none",
        };
        writeln!(text, "padding = {pad}").unwrap();
        if let Some(wt) = &layer.weights {
            let name = format!("{stem}_l{i:02}_w.cttensor");
            match wt {
                Weights::Ternary(t) => save_tensor(dir.join(&name), &TensorData::Trits(t.pack()))?,
                Weights::Real(t) => save_real(dir.join(&name), t)?,
            }
            writeln!(text, "weights = {name}").unwrap();
        }
        if let Some(bn) = &layer.bn {
            let name = format!("{stem}_l{i:02}_bn.cttensor");
            save_real(dir.join(&name), &bn.to_tensor())?;
            writeln!(text, "bn = {name}").unwrap();
        }
        if let Some(bias) = &layer.bias {
            let name = format!("{stem}_l{i:02}_bias.cttensor");
            save_real(dir.join(&name), &Tensor::new(&[bias.len()], bias.clone())?)?;
            writeln!(text, "bias = {name}").unwrap();
        }
        let act = match layer.activation {
            Activation::Hardtanh => "hardtanh",
            Activation::None => "none",
        };
        writeln!(text, "activation = {act}").unwrap();
    }
    let path = dir.join(format!("{stem}.ctnet"));
    fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_carry_line_numbers() {
        let text = "[network]\ninput = 4,4,2\n\n[layer]\nkind = warp\n";
        match parse_network::<f64>(text, Path::new(".")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let text = "input = 1,1,1\n";
        assert!(matches!(
            parse_network::<f64>(text, Path::new(".")),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn pool_layers_need_no_tensors() {
        let text = "[network]\ninput = 4,4,2\nencoder = raw\n[layer]\nkind = maxpool\nin_ch = 2\nkernel = 2,2\n";
        let net = parse_network::<f64>(text, Path::new(".")).unwrap();
        assert_eq!(net.layers[0].stride, (2, 2));
        assert_eq!(net.layers[0].out_ch, 2);
        assert_eq!(net.encoder, Encoder::RawTrits);
    }
}
