//! Lowering of a [`NetworkDesc`] to the accelerator's layer instructions,
//! threshold image and weight image.

pub mod fold;
pub mod program_io;

pub use fold::{
    fold_thresholds, fold_thresholds_pooled, normalize_gamma_sign, ThresholdPair,
};

use crate::error::{Error, Result};
use crate::network::{
    validate, ArchConfig, LayerDesc, LayerKind, NetworkDesc, Padding, Weights,
};
use crate::scalar::Real;
use crate::tensor::Tensor;
use crate::trit::{PackedTritTensor, Trit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Pooling {
    #[default]
    None,
    Max { ph: usize, pw: usize },
    Avg { ph: usize, pw: usize },
}

impl Pooling {
    pub fn window(self) -> (usize, usize) {
        match self {
            Pooling::None => (1, 1),
            Pooling::Max { ph, pw } | Pooling::Avg { ph, pw } => (ph, pw),
        }
    }

    pub fn area(self) -> usize {
        let (h, w) = self.window();
        h * w
    }

    pub fn is_none(self) -> bool {
        self == Pooling::None
    }
}

/// One fused layer: convolution (or lowered dense layer), optional pooling
/// and the threshold decider.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LayerInstr {
    /// `(H, W, C)` of the layer input.
    pub in_dims: (usize, usize, usize),
    pub out_ch: usize,
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: Padding,
    pub pooling: Pooling,
    /// Trit offset of the layer's first kernel in the weight image.
    pub weight_base: usize,
    /// Index of the layer's first pair in the threshold image.
    pub threshold_base: usize,
    /// Flattened input length of a dense layer, 0 for convolutions.
    pub dense_inputs: usize,
    /// Lowered from a depthwise convolution (affects the operation count only).
    pub depthwise: bool,
}

impl LayerInstr {
    pub fn is_dense(&self) -> bool {
        self.dense_inputs > 0
    }

    /// Spatial dims of the convolution output, before pooling.
    pub fn conv_out_dims(&self) -> (usize, usize) {
        if self.is_dense() {
            return (1, 1);
        }
        let (h, w, _) = self.in_dims;
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        match self.padding {
            Padding::Full => (h.div_ceil(sh), w.div_ceil(sw)),
            Padding::None => ((h - kh) / sh + 1, (w - kw) / sw + 1),
        }
    }

    /// `(H, W, C)` of the layer output.
    pub fn out_dims(&self) -> (usize, usize, usize) {
        let (h, w) = self.conv_out_dims();
        let (ph, pw) = self.pooling.window();
        (h / ph, w / pw, self.out_ch)
    }

    /// Number of output pixels the compute units evaluate.
    pub fn windows(&self) -> usize {
        let (h, w) = self.conv_out_dims();
        h * w
    }

    /// Operation count of the source layer.
    pub fn ops(&self) -> u64 {
        let (h, w) = self.conv_out_dims();
        let (kh, kw) = self.kernel;
        let (ci, co) = (self.in_dims.2 as u64, self.out_ch as u64);
        if self.is_dense() {
            2 * self.dense_inputs as u64 * co
        } else if self.depthwise {
            2 * (h * w * kh * kw) as u64 * co
        } else {
            2 * (h * w * kh * kw) as u64 * ci * co
        }
    }

    pub fn check(&self, arch: &ArchConfig) -> Result<()> {
        let (h, w, c) = self.in_dims;
        let bad = |m: String| Err(Error::Capacity(m));
        if h > arch.i_h || w > arch.i_w {
            return bad(format!("input {h}x{w} exceeds {}x{}", arch.i_h, arch.i_w));
        }
        if self.out_ch > arch.n_o || self.out_ch == 0 {
            return bad(format!("out_ch {} outside [1, {}]", self.out_ch, arch.n_o));
        }
        if self.is_dense() {
            if self.dense_inputs > arch.window_trits() || self.dense_inputs != h * w * c {
                return bad(format!("dense input {} does not fit", self.dense_inputs));
            }
            return Ok(());
        }
        if c > arch.n_i {
            return bad(format!("in_ch {c} exceeds {}", arch.n_i));
        }
        let (kh, kw) = self.kernel;
        if kh > arch.k || kw > arch.k || kh % 2 == 0 || kw % 2 == 0 {
            return bad(format!("kernel {kh}x{kw} unsupported"));
        }
        let (sh, sw) = self.stride;
        if !(1..=3).contains(&sh) || !(1..=3).contains(&sw) {
            return bad(format!("stride ({sh},{sw}) unsupported"));
        }
        if self.padding == Padding::None && (h < kh || w < kw) {
            return bad(format!("kernel {kh}x{kw} larger than {h}x{w}"));
        }
        let (oh, ow) = self.conv_out_dims();
        let (ph, pw) = self.pooling.window();
        if ph == 0 || pw == 0 || oh % ph != 0 || ow % pw != 0 {
            return bad(format!("pool {ph}x{pw} does not tile {oh}x{ow}"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledProgram {
    pub arch: ArchConfig,
    pub instrs: Vec<LayerInstr>,
    /// `(kernels, K, K, N_I)`: every kernel slot is a full window.
    pub weight_image: PackedTritTensor,
    pub threshold_image: Vec<ThresholdPair>,
}

impl CompiledProgram {
    pub fn input_dims(&self) -> Option<(usize, usize, usize)> {
        self.instrs.first().map(|i| i.in_dims)
    }

    pub fn output_dims(&self) -> Option<(usize, usize, usize)> {
        self.instrs.last().map(|i| i.out_dims())
    }

    pub fn thresholds(&self, layer: usize) -> &[ThresholdPair] {
        let i = &self.instrs[layer];
        &self.threshold_image[i.threshold_base..i.threshold_base + i.out_ch]
    }

    /// Unpacked kernel slots of one layer, `out_ch * K * K * N_I` trits.
    pub fn layer_weights(&self, layer: usize) -> Vec<Trit> {
        let i = &self.instrs[layer];
        let n = i.out_ch * self.arch.window_trits();
        (i.weight_base..i.weight_base + n)
            .map(|j| self.weight_image.get(j))
            .collect()
    }

    pub fn total_ops(&self) -> u64 {
        self.instrs.iter().map(|i| i.ops()).sum()
    }

    /// Largest threshold magnitude in the image.
    pub fn max_threshold_magnitude(&self) -> i64 {
        self.threshold_image
            .iter()
            .map(|p| p.t_lo.abs().max(p.t_hi.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn check(&self) -> Result<()> {
        self.arch.check()?;
        if self.instrs.len() > self.arch.l {
            return Err(Error::QueueOverflow {
                layers: self.instrs.len(),
                max: self.arch.l,
            });
        }
        let wt = self.arch.window_trits();
        let mut prev: Option<(usize, usize, usize)> = None;
        for instr in &self.instrs {
            instr.check(&self.arch)?;
            if let Some(p) = prev {
                if p != instr.in_dims {
                    return Err(Error::Shape(format!(
                        "layer input {:?} does not follow {:?}",
                        instr.in_dims, p
                    )));
                }
            }
            if instr.weight_base + instr.out_ch * wt > self.weight_image.len()
                || instr.threshold_base + instr.out_ch > self.threshold_image.len()
            {
                return Err(Error::Capacity("layer reads past the parameter images".into()));
            }
            prev = Some(instr.out_dims());
        }
        Ok(())
    }
}

/// Attach a pooling layer to the instruction of the convolution it follows.
pub fn fuse_pooling<T: Real>(conv_instr: LayerInstr, pool: &LayerDesc<T>) -> Result<LayerInstr> {
    let (ph, pw) = pool.kernel;
    let pooling = match pool.kind {
        LayerKind::MaxPool => Pooling::Max { ph, pw },
        LayerKind::AvgPool => Pooling::Avg { ph, pw },
        other => {
            return Err(Error::UnsupportedGraph(format!(
                "{} is not a pooling layer",
                other.name()
            )))
        }
    };
    if !conv_instr.pooling.is_none() {
        return Err(Error::UnsupportedGraph("two pooling layers in a row".into()));
    }
    let (oh, ow) = conv_instr.conv_out_dims();
    if ph == 0 || pw == 0 || ph > oh || pw > ow || oh % ph != 0 || ow % pw != 0 {
        return Err(Error::UnsupportedGraph(format!(
            "pool window {ph}x{pw} does not tile {oh}x{ow}"
        )));
    }
    Ok(LayerInstr {
        pooling,
        ..conv_instr
    })
}

/// A dense layer as a convolution with a `K x K` kernel over a
/// `(K, K, N_I)` map holding the zero-padded flattened input.
pub fn lower_dense<T: Real>(fc: &LayerDesc<T>, arch: &ArchConfig) -> Result<LayerDesc<T>> {
    if fc.kind != LayerKind::FullyConnected {
        return Err(Error::UnsupportedGraph(format!("{} is not dense", fc.kind.name())));
    }
    let slot = arch.window_trits();
    if fc.in_ch > slot || fc.out_ch > arch.n_o {
        return Err(Error::UnsupportedGraph(format!(
            "dense {}->{} exceeds {}->{}",
            fc.in_ch, fc.out_ch, slot, arch.n_o
        )));
    }
    let dims = [fc.out_ch, arch.k, arch.k, arch.n_i];
    let weights = match &fc.weights {
        Some(Weights::Ternary(w)) => Weights::Ternary(pad_rows(w, fc.in_ch, slot, Trit::Zero, &dims)?),
        Some(Weights::Real(w)) => Weights::Real(pad_rows(w, fc.in_ch, slot, T::zero(), &dims)?),
        None => return Err(Error::UnsupportedGraph("dense layer without weights".into())),
    };
    Ok(LayerDesc {
        kind: LayerKind::Conv2D,
        in_ch: arch.n_i,
        out_ch: fc.out_ch,
        kernel: (arch.k, arch.k),
        stride: (1, 1),
        padding: Padding::None,
        weights: Some(weights),
        bias: fc.bias.clone(),
        bn: fc.bn.clone(),
        activation: fc.activation,
    })
}

fn pad_rows<E: Copy>(w: &Tensor<E>, n: usize, slot: usize, zero: E, dims: &[usize]) -> Result<Tensor<E>> {
    let rows = dims[0];
    if w.dims() != [rows, n] {
        return Err(Error::Shape(format!("dense weights {:?} != [{rows}, {n}]", w.dims())));
    }
    let mut data = vec![zero; rows * slot];
    for r in 0..rows {
        data[r * slot..r * slot + n].copy_from_slice(&w.data()[r * n..(r + 1) * n]);
    }
    Tensor::new(dims, data)
}

/// A depthwise convolution as a full convolution whose kernel for output
/// channel `c` is zero except at input channel `c`.
pub fn lower_depthwise<T: Real>(dw: &LayerDesc<T>) -> Result<LayerDesc<T>> {
    if dw.kind != LayerKind::DepthwiseConv2D {
        return Err(Error::UnsupportedGraph(format!("{} is not depthwise", dw.kind.name())));
    }
    if dw.in_ch != dw.out_ch {
        return Err(Error::UnsupportedGraph(format!(
            "depthwise in_ch {} != out_ch {}",
            dw.in_ch, dw.out_ch
        )));
    }
    let c = dw.in_ch;
    let (kh, kw) = dw.kernel;
    fn spread<E: Copy>(w: &Tensor<E>, c: usize, kh: usize, kw: usize, zero: E) -> Result<Tensor<E>> {
        if w.dims() != [c, kh, kw, 1] {
            return Err(Error::Shape(format!("depthwise weights {:?}", w.dims())));
        }
        let mut out = Tensor::filled(&[c, kh, kw, c], zero)?;
        for o in 0..c {
            for y in 0..kh {
                for x in 0..kw {
                    out.set(&[o, y, x, o], w.at(&[o, y, x, 0]));
                }
            }
        }
        Ok(out)
    }
    let weights = match &dw.weights {
        Some(Weights::Ternary(w)) => Weights::Ternary(spread(w, c, kh, kw, Trit::Zero)?),
        Some(Weights::Real(w)) => Weights::Real(spread(w, c, kh, kw, T::zero())?),
        None => return Err(Error::UnsupportedGraph("depthwise layer without weights".into())),
    };
    Ok(LayerDesc {
        kind: LayerKind::Conv2D,
        weights: Some(weights),
        ..dw.clone()
    })
}

/// Compute layers of `net`, each with the pooling layer that follows it.
pub fn fuse_groups<T: Real>(net: &NetworkDesc<T>) -> Result<Vec<(usize, Option<usize>)>> {
    let mut groups: Vec<(usize, Option<usize>)> = Vec::new();
    for (i, layer) in net.layers.iter().enumerate() {
        if layer.kind.is_pool() {
            match groups.last_mut() {
                Some((c, p @ None)) if *c + 1 == i => *p = Some(i),
                _ => {
                    return Err(Error::UnsupportedGraph(format!(
                        "layer {i}: pooling without preceding convolution"
                    )))
                }
            }
        } else {
            groups.push((i, None));
        }
    }
    Ok(groups)
}

/// Place a `(out, kh, kw, in)` kernel centered in `K x K x N_I` slots.
fn write_slots(
    image: &mut Vec<Trit>,
    w: &Tensor<Trit>,
    arch: &ArchConfig,
) -> Result<()> {
    let [out, kh, kw, ci] = w.dims()[..] else {
        return Err(Error::Shape(format!("kernel dims {:?}", w.dims())));
    };
    let (k, ni) = (arch.k, arch.n_i);
    let (oy, ox) = ((k - kh) / 2, (k - kw) / 2);
    let base = image.len();
    image.resize(base + out * k * k * ni, Trit::Zero);
    for o in 0..out {
        for y in 0..kh {
            for x in 0..kw {
                for c in 0..ci {
                    let dst = base + ((o * k + y + oy) * k + x + ox) * ni + c;
                    image[dst] = w.at(&[o, y, x, c]);
                }
            }
        }
    }
    Ok(())
}

/// Compile `net` for `arch`.
pub fn emit_program<T: Real>(net: &NetworkDesc<T>, arch: &ArchConfig) -> Result<CompiledProgram> {
    arch.check()?;
    let violations = validate(net, arch);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let groups = fuse_groups(net)?;
    if groups.len() > arch.l {
        return Err(Error::QueueOverflow {
            layers: groups.len(),
            max: arch.l,
        });
    }
    let dims = net.dims_chain()?;
    let mut instrs = Vec::with_capacity(groups.len());
    let mut weights: Vec<Trit> = Vec::new();
    let mut thresholds = Vec::new();
    for (ci, pool) in groups {
        let layer = &net.layers[ci];
        let Some(Weights::Ternary(_)) = &layer.weights else {
            return Err(Error::NotTernary(ci));
        };
        let norm = normalize_gamma_sign(layer);
        let area = match pool.map(|p| net.layers[p].kind) {
            Some(LayerKind::AvgPool) => {
                let (ph, pw) = net.layers[pool.unwrap()].kernel;
                ph * pw
            }
            _ => 1,
        };
        let pairs = fold_thresholds_pooled(&norm, area, ci)?;
        let lowered = match layer.kind {
            LayerKind::DepthwiseConv2D => lower_depthwise(&norm)?,
            LayerKind::FullyConnected => lower_dense(&norm, arch)?,
            _ => norm,
        };
        let in_dims = dims[ci].0;
        let mut instr = LayerInstr {
            in_dims,
            out_ch: layer.out_ch,
            kernel: layer.kernel,
            stride: layer.stride,
            padding: layer.padding,
            pooling: Pooling::None,
            weight_base: weights.len(),
            threshold_base: thresholds.len(),
            dense_inputs: 0,
            depthwise: layer.kind == LayerKind::DepthwiseConv2D,
        };
        if layer.kind == LayerKind::FullyConnected {
            instr.dense_inputs = layer.in_ch;
            instr.kernel = (arch.k, arch.k);
            instr.padding = Padding::None;
        }
        if let Some(p) = pool {
            instr = fuse_pooling(instr, &net.layers[p])?;
        }
        let w = lowered
            .weights
            .as_ref()
            .and_then(|w| w.as_ternary())
            .expect("ternary checked above");
        write_slots(&mut weights, w, arch)?;
        thresholds.extend(pairs);
        instrs.push(instr);
    }
    let slots = weights.len() / arch.window_trits();
    let weight_image = PackedTritTensor::from_trits(&[slots, arch.k, arch.k, arch.n_i], &weights)?;
    let prog = CompiledProgram {
        arch: *arch,
        instrs,
        weight_image,
        threshold_image: thresholds,
    };
    prog.check()?;
    Ok(prog)
}

/// Compile a network with more fused layers than the layer queue holds as
/// consecutive programs of at most `L` layers each. The output of one
/// program is the input of the next.
pub fn emit_segments<T: Real>(net: &NetworkDesc<T>, arch: &ArchConfig) -> Result<Vec<CompiledProgram>> {
    arch.check()?;
    let violations = validate(net, arch);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let groups = fuse_groups(net)?;
    let dims = net.dims_chain()?;
    let mut out = Vec::new();
    for chunk in groups.chunks(arch.l) {
        let first = chunk[0].0;
        let (last_c, last_p) = chunk[chunk.len() - 1];
        let end = last_p.unwrap_or(last_c) + 1;
        let seg = NetworkDesc {
            input_dims: dims[first].0,
            encoder: if first == 0 { net.encoder } else { crate::network::Encoder::RawTrits },
            layers: net.layers[first..end].to_vec(),
        };
        out.push(emit_program(&seg, arch).map_err(|e| offset_layer_error(e, first))?);
    }
    Ok(out)
}

fn offset_layer_error(e: Error, first: usize) -> Error {
    match e {
        Error::NotTernary(i) => Error::NotTernary(i + first),
        Error::DegenerateChannel { layer, channel } => Error::DegenerateChannel {
            layer: layer + first,
            channel,
        },
        other => other,
    }
}

/// One row of the compiled layer table.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerRow {
    pub index: usize,
    pub kind: &'static str,
    pub in_dims: (usize, usize, usize),
    pub out_dims: (usize, usize, usize),
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub pooling: Pooling,
    pub ops: u64,
    pub t_min: i64,
    pub t_max: i64,
}

pub fn layer_table(prog: &CompiledProgram) -> Vec<LayerRow> {
    prog.instrs
        .iter()
        .enumerate()
        .map(|(i, instr)| {
            let th = prog.thresholds(i);
            LayerRow {
                index: i,
                kind: if instr.is_dense() {
                    "dense"
                } else if instr.depthwise {
                    "depthwise"
                } else {
                    "conv"
                },
                in_dims: instr.in_dims,
                out_dims: instr.out_dims(),
                kernel: instr.kernel,
                stride: instr.stride,
                pooling: instr.pooling,
                ops: instr.ops(),
                t_min: th.iter().map(|p| p.t_lo).min().unwrap_or(0),
                t_max: th.iter().map(|p| p.t_hi).max().unwrap_or(0),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::zoo::{reference_cnn, ZooOptions};
    use crate::network::{BatchNorm, Encoder};

    #[test]
    fn reference_network_needs_two_segments() {
        let net = reference_cnn::<f64>(&ZooOptions::default(), 0);
        let arch = ArchConfig::default();
        assert!(matches!(
            emit_program(&net, &arch),
            Err(Error::QueueOverflow { layers: 9, max: 8 })
        ));
        let segs = emit_segments(&net, &arch).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].instrs.len(), 8);
        assert_eq!(segs[1].instrs.len(), 1);
        assert_eq!(segs[1].instrs[0].dense_inputs, 128);
        assert_eq!(segs[0].instrs[7].pooling, Pooling::Avg { ph: 4, pw: 4 });
        assert_eq!(segs[0].weight_image.len(), 8 * 128 * 1152);
        assert_eq!(segs[0].output_dims(), segs[1].input_dims());
        assert_eq!(segs[1].output_dims(), Some((1, 1, 10)));
        let ops: Vec<u64> = segs.iter().flat_map(|p| p.instrs.iter().map(|i| i.ops())).collect();
        assert_eq!(ops[0], 297_271_296);
        assert_eq!(ops[8], 2560);

        let wide = ArchConfig { l: 9, ..arch };
        assert_eq!(emit_program(&net, &wide).unwrap().instrs.len(), 9);
    }

    #[test]
    fn queue_overflow_for_nine_layers() {
        let w = || Weights::Ternary(Tensor::filled(&[2, 1, 1, 2], Trit::Pos).unwrap());
        let net = NetworkDesc::<f64> {
            input_dims: (2, 2, 2),
            encoder: Encoder::RawTrits,
            layers: (0..9)
                .map(|_| LayerDesc::conv(2, 2, (1, 1), (1, 1), Padding::Full, w()))
                .collect(),
        };
        assert!(matches!(
            emit_program(&net, &ArchConfig::default()),
            Err(Error::QueueOverflow { layers: 9, max: 8 })
        ));
    }

    #[test]
    fn dense_boundaries() {
        let arch = ArchConfig::default();
        let full = LayerDesc::<f64>::dense(
            1152,
            128,
            Weights::Ternary(Tensor::filled(&[128, 1152], Trit::Pos).unwrap()),
        );
        let l = lower_dense(&full, &arch).unwrap();
        let w = l.weights.unwrap();
        assert!(w.as_ternary().unwrap().data().iter().all(|&t| t == Trit::Pos));
        let big = LayerDesc::<f64>::dense(
            2000,
            10,
            Weights::Ternary(Tensor::filled(&[10, 2000], Trit::Pos).unwrap()),
        );
        assert!(matches!(lower_dense(&big, &arch), Err(Error::UnsupportedGraph(_))));
    }

    #[test]
    fn depthwise_kernels_are_diagonal() {
        let w = Tensor::filled(&[128, 3, 3, 1], Trit::Pos).unwrap();
        let dw = LayerDesc::<f64>::depthwise(128, (3, 3), (1, 1), Padding::Full, Weights::Ternary(w));
        let l = lower_depthwise(&dw).unwrap();
        let t = l.weights.unwrap();
        let t = t.as_ternary().unwrap();
        for o in 0..128 {
            let nz = t.data()[o * 9 * 128..(o + 1) * 9 * 128]
                .iter()
                .filter(|x| !x.is_zero())
                .count();
            assert_eq!(nz, 9);
        }
        let mut bad = dw.clone();
        bad.out_ch = 64;
        assert!(lower_depthwise(&bad).is_err());
    }

    #[test]
    fn pooling_fusion() {
        let instr = LayerInstr {
            in_dims: (4, 4, 1),
            out_ch: 1,
            kernel: (3, 3),
            stride: (1, 1),
            padding: Padding::Full,
            pooling: Pooling::None,
            weight_base: 0,
            threshold_base: 0,
            dense_inputs: 0,
            depthwise: false,
        };
        let fused = fuse_pooling(instr, &LayerDesc::<f64>::max_pool(1, (2, 2))).unwrap();
        assert_eq!(fused.pooling, Pooling::Max { ph: 2, pw: 2 });
        assert_eq!(fused.out_dims(), (2, 2, 1));
        assert!(fuse_pooling(fused, &LayerDesc::<f64>::max_pool(1, (2, 2))).is_err());
        assert!(fuse_pooling(instr, &LayerDesc::<f64>::avg_pool(1, (8, 8))).is_err());

        // average pooling folds thresholds on the window sum
        let w = Weights::Ternary(Tensor::filled(&[1, 3, 3, 128], Trit::Pos).unwrap());
        let l = LayerDesc::<f64>::conv(128, 1, (3, 3), (1, 1), Padding::Full, w).with_bn(BatchNorm {
            gamma: vec![2.0],
            beta: vec![0.5],
            mean: vec![3.0],
            var: vec![4.0],
            eps: vec![0.0],
        });
        let plain = fold_thresholds(&l).unwrap()[0];
        assert_eq!(plain, ThresholdPair::new(2, 3));
        let pooled = fold_thresholds_pooled(&l, 16, 0).unwrap()[0];
        assert_eq!(pooled, ThresholdPair::new(32, 48));
    }

    #[test]
    fn pool_without_conv_is_unsupported() {
        let net = NetworkDesc::<f64> {
            input_dims: (4, 4, 1),
            encoder: Encoder::RawTrits,
            layers: vec![LayerDesc::max_pool(1, (2, 2))],
        };
        assert!(matches!(fuse_groups(&net), Err(Error::UnsupportedGraph(_))));
    }
}
