//! Full-precision network descriptions (the compiler's input), the
//! accelerator instantiation parameters, and their on-disk formats.

pub mod io;
pub mod manifest;
pub mod zoo;

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;
use crate::trit::Trit;

/// Instantiation parameters of the accelerator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ArchConfig {
    /// Input channels per pixel.
    pub n_i: usize,
    /// Output channels, one compute unit each.
    pub n_o: usize,
    /// Maximum (odd) kernel side.
    pub k: usize,
    pub i_w: usize,
    pub i_h: usize,
    /// Layer queue depth.
    pub l: usize,
    /// Pipeline stages of the compute-unit broadcast.
    pub p: usize,
    /// Feature-map memory words per pixel.
    pub w_s: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            n_i: 128,
            n_o: 128,
            k: 3,
            i_w: 32,
            i_h: 32,
            l: 8,
            p: 4,
            w_s: 4,
        }
    }
}

impl ArchConfig {
    pub fn check(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Format(format!("invalid architecture: {m}")));
        if self.n_i == 0 || self.n_o == 0 || self.i_w == 0 || self.i_h == 0 {
            return fail("dimensions must be nonzero".into());
        }
        if self.k == 0 || self.k.is_multiple_of(2) {
            return fail(format!("K = {} must be odd", self.k));
        }
        if self.l == 0 {
            return fail("L must be at least 1".into());
        }
        if self.p == 0 || !self.n_o.is_multiple_of(self.p) {
            return fail(format!("N_O = {} not divisible by P = {}", self.n_o, self.p));
        }
        if self.w_s * self.word_trits() < self.n_i {
            return fail(format!(
                "W_S = {} words of {} trits cannot hold {} channels",
                self.w_s,
                self.word_trits(),
                self.n_i
            ));
        }
        Ok(())
    }

    /// Feature-map memory word width in trits.
    pub fn word_trits(&self) -> usize {
        self.n_o / self.p
    }

    /// Trits in one released window (and in one kernel slot).
    pub fn window_trits(&self) -> usize {
        self.k * self.k * self.n_i
    }

    /// Weight buffer bits per compute unit: two banks at two bits per trit.
    pub fn weight_buffer_bits(&self) -> usize {
        4 * self.k * self.k * self.n_i
    }

    /// Peak operations per cycle with every compute unit busy.
    pub fn peak_ops_per_cycle(&self) -> u64 {
        2 * (self.k * self.k * self.n_i * self.n_o) as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv2D,
    DepthwiseConv2D,
    MaxPool,
    AvgPool,
    FullyConnected,
}

impl LayerKind {
    pub fn is_pool(self) -> bool {
        matches!(self, LayerKind::MaxPool | LayerKind::AvgPool)
    }

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Conv2D => "conv2d",
            LayerKind::DepthwiseConv2D => "depthwise_conv2d",
            LayerKind::MaxPool => "maxpool",
            LayerKind::AvgPool => "avgpool",
            LayerKind::FullyConnected => "fully_connected",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "conv2d" | "conv" => LayerKind::Conv2D,
            "depthwise_conv2d" | "depthwise" => LayerKind::DepthwiseConv2D,
            "maxpool" | "max_pool" => LayerKind::MaxPool,
            "avgpool" | "avg_pool" => LayerKind::AvgPool,
            "fully_connected" | "dense" | "fc" => LayerKind::FullyConnected,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Padding {
    None,
    /// Zero padding of `kernel / 2` on every edge.
    #[default]
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Activation {
    #[default]
    Hardtanh,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Encoder {
    BinaryThermometer,
    #[default]
    TernaryThermometer,
    RawTrits,
}

impl Encoder {
    pub fn name(self) -> &'static str {
        match self {
            Encoder::BinaryThermometer => "binary_thermometer",
            Encoder::TernaryThermometer => "ternary_thermometer",
            Encoder::RawTrits => "raw_trits",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "binary_thermometer" | "binary" => Encoder::BinaryThermometer,
            "ternary_thermometer" | "ternary" => Encoder::TernaryThermometer,
            "raw_trits" | "raw" => Encoder::RawTrits,
            _ => return None,
        })
    }
}

/// Per-channel batch normalization parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub eps: Vec<T>,
}

impl<T: Real> BatchNorm<T> {
    pub fn identity(channels: usize) -> Self {
        Self {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
            eps: vec![T::zero(); channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn consistent(&self) -> bool {
        let n = self.gamma.len();
        [&self.beta, &self.mean, &self.var, &self.eps]
            .iter()
            .all(|v| v.len() == n)
    }

    /// `sqrt(var + eps)` of one channel.
    pub fn scale(&self, c: usize) -> T {
        (self.var[c] + self.eps[c]).sqrt()
    }

    /// Pack into a `(5, channels)` tensor: gamma, beta, mean, var, eps rows.
    pub fn to_tensor(&self) -> Tensor<T> {
        let mut data = Vec::with_capacity(5 * self.channels());
        for row in [&self.gamma, &self.beta, &self.mean, &self.var, &self.eps] {
            data.extend_from_slice(row);
        }
        Tensor::new(&[5, self.channels()], data).expect("five rows")
    }

    pub fn from_tensor(t: &Tensor<T>) -> Result<Self> {
        let [5, n] = t.dims()[..] else {
            return Err(Error::Shape(format!(
                "batch-norm tensor must be (5, channels), got {:?}",
                t.dims()
            )));
        };
        let row = |r: usize| t.data()[r * n..(r + 1) * n].to_vec();
        Ok(Self {
            gamma: row(0),
            beta: row(1),
            mean: row(2),
            var: row(3),
            eps: row(4),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Weights<T> {
    Real(Tensor<T>),
    Ternary(Tensor<Trit>),
}

impl<T: Real> Weights<T> {
    pub fn dims(&self) -> &[usize] {
        match self {
            Weights::Real(t) => t.dims(),
            Weights::Ternary(t) => t.dims(),
        }
    }

    pub fn as_ternary(&self) -> Option<&Tensor<Trit>> {
        match self {
            Weights::Ternary(t) => Some(t),
            Weights::Real(_) => None,
        }
    }

    /// Negate the weights of output channel `oc` (outermost axis).
    pub fn negate_output_channel(&mut self, oc: usize) {
        fn neg_span<E: Copy>(t: &mut Tensor<E>, oc: usize, f: impl Fn(E) -> E) {
            let per = t.len() / t.dims()[0];
            for v in &mut t.data_mut()[oc * per..(oc + 1) * per] {
                *v = f(*v);
            }
        }
        match self {
            Weights::Real(t) => neg_span(t, oc, |v| -v),
            Weights::Ternary(t) => neg_span(t, oc, |v| -v),
        }
    }
}

/// One layer of a full-precision network.
///
/// Convolution weights are `(out, kh, kw, in)`, depthwise weights
/// `(out, kh, kw, 1)`, dense weights `(out, in)` with `in` the row-major
/// flattening of the incoming `(H, W, C)` feature map. Pooling layers use
/// `kernel` as the window and carry no parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerDesc<T> {
    pub kind: LayerKind,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: Padding,
    pub weights: Option<Weights<T>>,
    pub bias: Option<Vec<T>>,
    pub bn: Option<BatchNorm<T>>,
    pub activation: Activation,
}

impl<T: Real> LayerDesc<T> {
    pub fn conv(
        in_ch: usize,
        out_ch: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: Padding,
        weights: Weights<T>,
    ) -> Self {
        Self {
            kind: LayerKind::Conv2D,
            in_ch,
            out_ch,
            kernel,
            stride,
            padding,
            weights: Some(weights),
            bias: None,
            bn: None,
            activation: Activation::Hardtanh,
        }
    }

    pub fn depthwise(
        channels: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: Padding,
        weights: Weights<T>,
    ) -> Self {
        Self {
            kind: LayerKind::DepthwiseConv2D,
            ..Self::conv(channels, channels, kernel, stride, padding, weights)
        }
    }

    pub fn dense(in_features: usize, out_features: usize, weights: Weights<T>) -> Self {
        Self {
            kind: LayerKind::FullyConnected,
            kernel: (1, 1),
            stride: (1, 1),
            padding: Padding::None,
            ..Self::conv(in_features, out_features, (1, 1), (1, 1), Padding::None, weights)
        }
    }

    pub fn max_pool(channels: usize, window: (usize, usize)) -> Self {
        Self::pool(LayerKind::MaxPool, channels, window)
    }

    pub fn avg_pool(channels: usize, window: (usize, usize)) -> Self {
        Self::pool(LayerKind::AvgPool, channels, window)
    }

    fn pool(kind: LayerKind, channels: usize, window: (usize, usize)) -> Self {
        Self {
            kind,
            in_ch: channels,
            out_ch: channels,
            kernel: window,
            stride: window,
            padding: Padding::None,
            weights: None,
            bias: None,
            bn: None,
            activation: Activation::None,
        }
    }

    pub fn with_bn(mut self, bn: BatchNorm<T>) -> Self {
        self.bn = Some(bn);
        self
    }

    pub fn with_bias(mut self, bias: Vec<T>) -> Self {
        self.bias = Some(bias);
        self
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    /// Batch norm of the layer, identity when absent.
    pub fn bn_or_identity(&self) -> BatchNorm<T> {
        self.bn
            .clone()
            .unwrap_or_else(|| BatchNorm::identity(self.out_ch))
    }

    /// Output dims for an `(H, W, C)` input.
    pub fn output_dims(&self, input: (usize, usize, usize)) -> Result<(usize, usize, usize)> {
        let (h, w, c) = input;
        match self.kind {
            LayerKind::Conv2D | LayerKind::DepthwiseConv2D => {
                let (kh, kw) = self.kernel;
                let (sh, sw) = self.stride;
                if sh == 0 || sw == 0 {
                    return Err(Error::Shape("zero stride".into()));
                }
                let span = |n: usize, k: usize, s: usize| -> Result<usize> {
                    match self.padding {
                        Padding::Full => Ok(n.div_ceil(s)),
                        Padding::None if n >= k => Ok((n - k) / s + 1),
                        Padding::None => Err(Error::Shape(format!(
                            "kernel {k} larger than unpadded extent {n}"
                        ))),
                    }
                };
                Ok((span(h, kh, sh)?, span(w, kw, sw)?, self.out_ch))
            }
            LayerKind::MaxPool | LayerKind::AvgPool => {
                let (ph, pw) = self.kernel;
                if ph == 0 || pw == 0 || h % ph != 0 || w % pw != 0 {
                    return Err(Error::Shape(format!(
                        "pool window {ph}x{pw} does not tile {h}x{w}"
                    )));
                }
                Ok((h / ph, w / pw, c))
            }
            LayerKind::FullyConnected => Ok((1, 1, self.out_ch)),
        }
    }

    pub fn is_compute(&self) -> bool {
        !self.kind.is_pool()
    }
}

/// A full-precision network and its input encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkDesc<T> {
    /// `(H, W, C)` of the encoded input.
    pub input_dims: (usize, usize, usize),
    pub encoder: Encoder,
    pub layers: Vec<LayerDesc<T>>,
}

impl<T: Real> NetworkDesc<T> {
    /// `(input, output)` dims of every layer.
    pub fn dims_chain(&self) -> Result<Vec<((usize, usize, usize), (usize, usize, usize))>> {
        let mut cur = self.input_dims;
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let next = layer.output_dims(cur)?;
            out.push((cur, next));
            cur = next;
        }
        Ok(out)
    }

    pub fn output_dims(&self) -> Result<(usize, usize, usize)> {
        Ok(self
            .dims_chain()?
            .last()
            .map_or(self.input_dims, |&(_, o)| o))
    }

    pub fn compute_layers(&self) -> usize {
        self.layers.iter().filter(|l| l.is_compute()).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    InputExceedsFeatureMap,
    InputChannels,
    ChannelChain,
    KernelExceedsK,
    KernelNotOdd,
    StrideRange,
    InChExceedsNI,
    OutChExceedsNO,
    WeightShape,
    BatchNormShape,
    DepthwiseChannels,
    DenseTooLarge,
    PoolWithoutConv,
    PoolWindow,
    Geometry,
}

impl Constraint {
    pub fn label(self) -> &'static str {
        match self {
            Constraint::InputExceedsFeatureMap => "input exceeds feature-map memory",
            Constraint::InputChannels => "input channels exceed N_I",
            Constraint::ChannelChain => "in_ch does not match incoming channels",
            Constraint::KernelExceedsK => "kernel exceeds K",
            Constraint::KernelNotOdd => "kernel not odd",
            Constraint::StrideRange => "stride outside [1, 3]",
            Constraint::InChExceedsNI => "in_ch exceeds N_I",
            Constraint::OutChExceedsNO => "out_ch exceeds N_O",
            Constraint::WeightShape => "weight shape mismatch",
            Constraint::BatchNormShape => "batch-norm shape mismatch",
            Constraint::DepthwiseChannels => "depthwise in_ch != out_ch",
            Constraint::DenseTooLarge => "dense input exceeds K*K*N_I",
            Constraint::PoolWithoutConv => "pooling without preceding convolution",
            Constraint::PoolWindow => "pool window does not tile feature map",
            Constraint::Geometry => "invalid layer geometry",
        }
    }
}

/// A reason why a network cannot be mapped onto an architecture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// `None` for network-level violations.
    pub layer: Option<usize>,
    pub constraint: Constraint,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.layer {
            Some(i) => write!(f, "layer {i}: {} ({})", self.constraint.label(), self.detail),
            None => write!(f, "network: {} ({})", self.constraint.label(), self.detail),
        }
    }
}

/// Check that `net` can be mapped onto `arch`. Violations are data; an
/// empty list means the network is mappable.
pub fn validate<T: Real>(net: &NetworkDesc<T>, arch: &ArchConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut push = |layer: Option<usize>, constraint: Constraint, detail: String| {
        v.push(Violation {
            layer,
            constraint,
            detail,
        })
    };

    let (h, w, c) = net.input_dims;
    if h > arch.i_h || w > arch.i_w {
        push(
            None,
            Constraint::InputExceedsFeatureMap,
            format!("{h}x{w} > {}x{}", arch.i_h, arch.i_w),
        );
    }
    if c > arch.n_i {
        push(None, Constraint::InputChannels, format!("{c} > {}", arch.n_i));
    }

    let mut cur = net.input_dims;
    let mut prev_compute = false;
    for (i, layer) in net.layers.iter().enumerate() {
        let at = Some(i);
        let (kh, kw) = layer.kernel;
        match layer.kind {
            LayerKind::Conv2D | LayerKind::DepthwiseConv2D => {
                if kh > arch.k || kw > arch.k {
                    push(at, Constraint::KernelExceedsK, format!("{kh}x{kw} > K={}", arch.k));
                }
                if kh % 2 == 0 || kw % 2 == 0 {
                    push(at, Constraint::KernelNotOdd, format!("{kh}x{kw}"));
                }
                let (sh, sw) = layer.stride;
                if !(1..=3).contains(&sh) || !(1..=3).contains(&sw) {
                    push(at, Constraint::StrideRange, format!("({sh},{sw})"));
                }
                if layer.in_ch > arch.n_i {
                    push(at, Constraint::InChExceedsNI, format!("{} > {}", layer.in_ch, arch.n_i));
                }
                if layer.out_ch > arch.n_o {
                    push(at, Constraint::OutChExceedsNO, format!("{} > {}", layer.out_ch, arch.n_o));
                }
                if layer.in_ch != cur.2 {
                    push(at, Constraint::ChannelChain, format!("{} != {}", layer.in_ch, cur.2));
                }
                let depth = if layer.kind == LayerKind::DepthwiseConv2D {
                    if layer.in_ch != layer.out_ch {
                        push(
                            at,
                            Constraint::DepthwiseChannels,
                            format!("{} != {}", layer.in_ch, layer.out_ch),
                        );
                    }
                    1
                } else {
                    layer.in_ch
                };
                let expect = [layer.out_ch, kh, kw, depth];
                match &layer.weights {
                    Some(wt) if wt.dims() == expect => {}
                    Some(wt) => push(
                        at,
                        Constraint::WeightShape,
                        format!("{:?} != {:?}", wt.dims(), expect),
                    ),
                    None => push(at, Constraint::WeightShape, "missing weights".into()),
                }
            }
            LayerKind::FullyConnected => {
                let n = cur.0 * cur.1 * cur.2;
                if layer.in_ch != n {
                    push(at, Constraint::ChannelChain, format!("{} != {}", layer.in_ch, n));
                }
                if n > arch.window_trits() {
                    push(
                        at,
                        Constraint::DenseTooLarge,
                        format!("{n} > {}", arch.window_trits()),
                    );
                }
                if layer.out_ch > arch.n_o {
                    push(at, Constraint::OutChExceedsNO, format!("{} > {}", layer.out_ch, arch.n_o));
                }
                let expect = [layer.out_ch, layer.in_ch];
                match &layer.weights {
                    Some(wt) if wt.dims() == expect => {}
                    Some(wt) => push(
                        at,
                        Constraint::WeightShape,
                        format!("{:?} != {:?}", wt.dims(), expect),
                    ),
                    None => push(at, Constraint::WeightShape, "missing weights".into()),
                }
            }
            LayerKind::MaxPool | LayerKind::AvgPool => {
                if !prev_compute {
                    push(at, Constraint::PoolWithoutConv, layer.kind.name().into());
                }
                if kh == 0 || kw == 0 || !cur.0.is_multiple_of(kh) || !cur.1.is_multiple_of(kw) {
                    push(
                        at,
                        Constraint::PoolWindow,
                        format!("{kh}x{kw} over {}x{}", cur.0, cur.1),
                    );
                }
            }
        }
        if layer.is_compute() {
            if let Some(bn) = &layer.bn {
                if !bn.consistent() || bn.channels() != layer.out_ch {
                    push(
                        at,
                        Constraint::BatchNormShape,
                        format!("{} channels for out_ch {}", bn.channels(), layer.out_ch),
                    );
                }
            }
            if let Some(b) = &layer.bias {
                if b.len() != layer.out_ch {
                    push(
                        at,
                        Constraint::BatchNormShape,
                        format!("bias of {} for out_ch {}", b.len(), layer.out_ch),
                    );
                }
            }
        }
        prev_compute = layer.is_compute();

        match layer.output_dims(cur) {
            Ok(next) if layer.kind.is_pool() => cur = next,
            Ok(next) => cur = next,
            Err(e) => {
                if !layer.kind.is_pool() {
                    push(at, Constraint::Geometry, e.to_string());
                }
                // keep checking the rest against a best-effort shape
                cur = (cur.0.max(1), cur.1.max(1), layer.out_ch);
            }
        }
    }
    v
}

/// Operations of a convolution or dense layer:
/// `2 * out_h * out_w * kh * kw * in_ch * out_ch`.
///
/// Depthwise layers count `2 * out_h * out_w * kh * kw * channels`, and
/// dense layers `2 * in * out`. Pooling is not counted.
pub fn op_count<T: Real>(layer: &LayerDesc<T>, out_dims: (usize, usize)) -> Result<u64> {
    let (oh, ow) = (out_dims.0 as u64, out_dims.1 as u64);
    let (kh, kw) = (layer.kernel.0 as u64, layer.kernel.1 as u64);
    let (ci, co) = (layer.in_ch as u64, layer.out_ch as u64);
    match layer.kind {
        LayerKind::Conv2D => Ok(2 * oh * ow * kh * kw * ci * co),
        LayerKind::DepthwiseConv2D => Ok(2 * oh * ow * kh * kw * co),
        LayerKind::FullyConnected => Ok(2 * ci * co),
        LayerKind::MaxPool | LayerKind::AvgPool => Err(Error::NotCounted),
    }
}

/// Per-layer operation counts of a network (`None` for pooling layers).
pub fn network_op_counts<T: Real>(net: &NetworkDesc<T>) -> Result<Vec<Option<u64>>> {
    net.layers
        .iter()
        .zip(net.dims_chain()?)
        .map(|(layer, (_, out))| match op_count(layer, (out.0, out.1)) {
            Ok(n) => Ok(Some(n)),
            Err(Error::NotCounted) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Encode an `(H, W, colors)` integer image into `(H, W, colors * m)` trits,
/// with the `m` channels of each color adjacent.
pub fn encode_image(pixels: &Tensor<i64>, encoder: Encoder, m: usize) -> Result<Tensor<Trit>> {
    let (h, w, colors) = pixels.hwc()?;
    let mut data = Vec::with_capacity(h * w * colors * m);
    for &x in pixels.data() {
        match encoder {
            Encoder::BinaryThermometer => data.extend(crate::trit::binary_thermometer(x, m)?),
            Encoder::TernaryThermometer => data.extend(crate::trit::ternary_thermometer(x, m)?),
            Encoder::RawTrits => {
                if m != 1 {
                    return Err(Error::Shape("raw trits use one channel per value".into()));
                }
                data.push(Trit::new(x)?);
            }
        }
    }
    Tensor::new(&[h, w, colors * m], data)
}
