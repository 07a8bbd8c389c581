//! Straightforward reference implementation used as the equivalence oracle.
//!
//! Everything here works on plain `i64` tensors with direct nested loops.
//! It shares no code with the simulator's datapath.

use crate::compiler::fold::float_reference;
use crate::compiler::{CompiledProgram, LayerInstr, Pooling, ThresholdPair};
use crate::error::{Error, Result};
use crate::network::{LayerDesc, LayerKind, NetworkDesc, Padding, Weights};
use crate::scalar::Real;
use crate::tensor::Tensor;
use crate::trit::Trit;

/// Integer tensor: trits for activations, wide integers for accumulators.
pub type RefTensor = Tensor<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefPool {
    Max,
    Sum,
}

pub fn from_trits(t: &Tensor<Trit>) -> RefTensor {
    t.map(|v| v.value() as i64)
}

pub fn to_trits(t: &RefTensor) -> Result<Tensor<Trit>> {
    for &v in t.data() {
        Trit::new(v)?;
    }
    Ok(t.map(|v| Trit::new(v).expect("checked")))
}

fn out_extent(n: usize, k: usize, s: usize, padding: Padding) -> Result<usize> {
    match padding {
        Padding::Full => Ok(n.div_ceil(s)),
        Padding::None if n >= k => Ok((n - k) / s + 1),
        Padding::None => Err(Error::Shape(format!("kernel {k} exceeds extent {n}"))),
    }
}

/// Direct convolution. `kernels` is `(out, kh, kw, in)`.
pub fn ref_conv(
    input: &RefTensor,
    kernels: &RefTensor,
    stride: (usize, usize),
    padding: Padding,
) -> Result<RefTensor> {
    let (h, w, c) = input.hwc()?;
    let [co, kh, kw, ci] = kernels.dims()[..] else {
        return Err(Error::Shape(format!("kernel dims {:?}", kernels.dims())));
    };
    if ci != c {
        return Err(Error::Shape(format!("kernel depth {ci} != input channels {c}")));
    }
    let (sh, sw) = stride;
    let oh = out_extent(h, kh, sh, padding)?;
    let ow = out_extent(w, kw, sw, padding)?;
    let (py, px) = match padding {
        Padding::Full => ((kh / 2) as i64, (kw / 2) as i64),
        Padding::None => (0, 0),
    };
    let (inp, ker) = (input.data(), kernels.data());
    let mut out = Tensor::filled(&[oh, ow, co], 0i64)?;
    for oy in 0..oh {
        for ox in 0..ow {
            for o in 0..co {
                let mut acc = 0i64;
                for ky in 0..kh {
                    for kx in 0..kw {
                        let iy = (oy * sh + ky) as i64 - py;
                        let ix = (ox * sw + kx) as i64 - px;
                        if iy < 0 || ix < 0 || iy >= h as i64 || ix >= w as i64 {
                            continue;
                        }
                        let ib = (iy as usize * w + ix as usize) * c;
                        let kb = ((o * kh + ky) * kw + kx) * ci;
                        for i in 0..ci {
                            acc += inp[ib + i] * ker[kb + i];
                        }
                    }
                }
                out.set(&[oy, ox, o], acc);
            }
        }
    }
    Ok(out)
}

/// Per-channel direct convolution; `kernels` is `(channels, kh, kw, 1)`.
pub fn ref_depthwise(
    input: &RefTensor,
    kernels: &RefTensor,
    stride: (usize, usize),
    padding: Padding,
) -> Result<RefTensor> {
    let (_, _, c) = input.hwc()?;
    let [co, kh, kw, 1] = kernels.dims()[..] else {
        return Err(Error::Shape(format!("depthwise kernel dims {:?}", kernels.dims())));
    };
    if co != c {
        return Err(Error::Shape(format!("{co} depthwise kernels for {c} channels")));
    }
    let mut channels = Vec::with_capacity(c);
    for ch in 0..c {
        let (h, w, _) = input.hwc()?;
        let plane = Tensor::from_fn(&[h, w, 1], |i| input.data()[i * c + ch])?;
        let k = Tensor::from_fn(&[1, kh, kw, 1], |i| kernels.data()[ch * kh * kw + i])?;
        channels.push(ref_conv(&plane, &k, stride, padding)?);
    }
    let (oh, ow, _) = channels[0].hwc()?;
    Tensor::from_fn(&[oh, ow, c], |i| channels[i % c].data()[i / c])
}

/// Dense layer over the row-major flattening of `input`.
pub fn ref_dense(input: &RefTensor, weights: &RefTensor) -> Result<RefTensor> {
    let [o, n] = weights.dims()[..] else {
        return Err(Error::Shape(format!("dense weight dims {:?}", weights.dims())));
    };
    if n != input.len() {
        return Err(Error::Shape(format!("dense expects {n} inputs, got {}", input.len())));
    }
    let mut out = Tensor::filled(&[1, 1, o], 0i64)?;
    for r in 0..o {
        let mut acc = 0;
        for i in 0..n {
            acc += weights.data()[r * n + i] * input.data()[i];
        }
        out.set(&[0, 0, r], acc);
    }
    Ok(out)
}

pub fn ref_threshold(acc: &RefTensor, pairs: &[ThresholdPair]) -> Result<RefTensor> {
    let (h, w, c) = acc.hwc()?;
    if pairs.len() != c {
        return Err(Error::Shape(format!("{} threshold pairs for {c} channels", pairs.len())));
    }
    let mut out = Tensor::filled(&[h, w, c], 0i64)?;
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let a = acc.at(&[y, x, ch]);
                let p = pairs[ch];
                let t = if a >= p.t_hi {
                    1
                } else if a < p.t_lo {
                    -1
                } else {
                    0
                };
                out.set(&[y, x, ch], t);
            }
        }
    }
    Ok(out)
}

pub fn ref_pool(t: &RefTensor, kind: RefPool, window: (usize, usize)) -> Result<RefTensor> {
    let (h, w, c) = t.hwc()?;
    let (ph, pw) = window;
    if ph == 0 || pw == 0 || h % ph != 0 || w % pw != 0 {
        return Err(Error::Shape(format!("pool {ph}x{pw} does not tile {h}x{w}")));
    }
    let mut out = Tensor::filled(&[h / ph, w / pw, c], 0i64)?;
    for y in 0..h / ph {
        for x in 0..w / pw {
            for ch in 0..c {
                let vals = (0..ph).flat_map(|dy| (0..pw).map(move |dx| (dy, dx)));
                let v = match kind {
                    RefPool::Max => vals
                        .map(|(dy, dx)| t.at(&[y * ph + dy, x * pw + dx, ch]))
                        .max()
                        .unwrap(),
                    RefPool::Sum => vals
                        .map(|(dy, dx)| t.at(&[y * ph + dy, x * pw + dx, ch]))
                        .sum(),
                };
                out.set(&[y, x, ch], v);
            }
        }
    }
    Ok(out)
}

/// Kernels of one compiled layer as `(out, kh, kw, in)`, read from the
/// centered slots of the weight image.
pub fn program_kernels(prog: &CompiledProgram, layer: usize) -> Result<RefTensor> {
    let instr = &prog.instrs[layer];
    let (k, ni) = (prog.arch.k, prog.arch.n_i);
    let slot = k * k * ni;
    let (kh, kw) = instr.kernel;
    let ci = instr.in_dims.2;
    let (oy, ox) = ((k - kh) / 2, (k - kw) / 2);
    Tensor::from_fn(&[instr.out_ch, kh, kw, ci], |i| {
        let c = i % ci;
        let x = (i / ci) % kw;
        let y = (i / (ci * kw)) % kh;
        let o = i / (ci * kw * kh);
        let idx = instr.weight_base + o * slot + ((y + oy) * k + x + ox) * ni + c;
        prog.weight_image.get(idx).value() as i64
    })
}

fn run_instr(prog: &CompiledProgram, layer: usize, input: &RefTensor) -> Result<RefTensor> {
    let instr: &LayerInstr = &prog.instrs[layer];
    let pairs = prog.thresholds(layer);
    let acc = if instr.is_dense() {
        let n = instr.dense_inputs;
        let slot = prog.arch.window_trits();
        let w = Tensor::from_fn(&[instr.out_ch, n], |i| {
            let (o, j) = (i / n, i % n);
            prog.weight_image.get(instr.weight_base + o * slot + j).value() as i64
        })?;
        ref_dense(input, &w)?
    } else {
        ref_conv(input, &program_kernels(prog, layer)?, instr.stride, instr.padding)?
    };
    match instr.pooling {
        Pooling::None => ref_threshold(&acc, pairs),
        Pooling::Max { ph, pw } => ref_pool(&ref_threshold(&acc, pairs)?, RefPool::Max, (ph, pw)),
        Pooling::Avg { ph, pw } => ref_threshold(&ref_pool(&acc, RefPool::Sum, (ph, pw))?, pairs),
    }
}

/// Integer path: execute a compiled program.
pub fn run_program(prog: &CompiledProgram, input: &Tensor<Trit>) -> Result<Tensor<Trit>> {
    if let Some(d) = prog.input_dims() {
        if input.hwc()? != d {
            return Err(Error::Shape(format!(
                "input {:?} does not match program input {:?}",
                input.dims(),
                d
            )));
        }
    }
    let mut cur = from_trits(input);
    for layer in 0..prog.instrs.len() {
        cur = run_instr(prog, layer, &cur)?;
    }
    to_trits(&cur)
}

/// Execute consecutive program segments.
pub fn run_segments(progs: &[CompiledProgram], input: &Tensor<Trit>) -> Result<Tensor<Trit>> {
    let mut cur = input.clone();
    for p in progs {
        cur = run_program(p, &cur)?;
    }
    Ok(cur)
}

fn ternary_weights<T: Real>(layer: &LayerDesc<T>, index: usize) -> Result<RefTensor> {
    match &layer.weights {
        Some(Weights::Ternary(t)) => Ok(from_trits(t)),
        _ => Err(Error::NotTernary(index)),
    }
}

/// Apply batch norm, Hardtanh and ternarization to accumulator sums of
/// `area` positions each.
fn float_activate<T: Real>(layer: &LayerDesc<T>, acc: &RefTensor, area: usize) -> Result<RefTensor> {
    let (h, w, c) = acc.hwc()?;
    let bn = layer.bn_or_identity();
    let bias = layer.bias.as_deref();
    Tensor::from_fn(&[h, w, c], |i| {
        float_reference(&bn, bias, i % c, acc.data()[i], area).value() as i64
    })
}

/// Float path: execute the source network with batch norm applied in the
/// real domain. Weights must be ternary.
pub fn run_network<T: Real>(net: &NetworkDesc<T>, input: &Tensor<Trit>) -> Result<Tensor<Trit>> {
    if input.hwc()? != net.input_dims {
        return Err(Error::Shape(format!(
            "input {:?} does not match network input {:?}",
            input.dims(),
            net.input_dims
        )));
    }
    let mut cur = from_trits(input);
    let mut i = 0;
    while i < net.layers.len() {
        let layer = &net.layers[i];
        let next = net.layers.get(i + 1).filter(|l| l.kind.is_pool());
        let acc = match layer.kind {
            LayerKind::Conv2D => ref_conv(&cur, &ternary_weights(layer, i)?, layer.stride, layer.padding)?,
            LayerKind::DepthwiseConv2D => {
                ref_depthwise(&cur, &ternary_weights(layer, i)?, layer.stride, layer.padding)?
            }
            LayerKind::FullyConnected => ref_dense(&cur, &ternary_weights(layer, i)?)?,
            LayerKind::MaxPool | LayerKind::AvgPool => {
                return Err(Error::UnsupportedGraph(format!(
                    "layer {i}: pooling without preceding convolution"
                )))
            }
        };
        cur = match next.map(|p| (p.kind, p.kernel)) {
            Some((LayerKind::MaxPool, win)) => ref_pool(&float_activate(layer, &acc, 1)?, RefPool::Max, win)?,
            Some((_, win)) => float_activate(layer, &ref_pool(&acc, RefPool::Sum, win)?, win.0 * win.1)?,
            None => float_activate(layer, &acc, 1)?,
        };
        i += if next.is_some() { 2 } else { 1 };
    }
    to_trits(&cur)
}
