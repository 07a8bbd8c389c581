//! Ready-made networks: the 13-layer CIFAR-style reference CNN and random
//! mappable networks for testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::network::{encode_image, ArchConfig, BatchNorm, Encoder, LayerDesc, NetworkDesc, Padding, Weights};
use crate::scalar::Real;
use crate::tensor::Tensor;
use crate::trit::Trit;

/// Thermometer channels per color of the reference network input.
pub const REFERENCE_CHANNELS_PER_COLOR: usize = 42;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZooOptions {
    /// Probability of a zero weight (ternary networks).
    pub weight_zero_fraction: f64,
    /// Target fraction of zero activations after each layer (ternary networks).
    pub activation_zero_fraction: f64,
    /// Binary weights/activations and binary thermometer input.
    pub binary: bool,
}

impl Default for ZooOptions {
    fn default() -> Self {
        Self {
            weight_zero_fraction: 0.5,
            activation_zero_fraction: 0.663,
            binary: false,
        }
    }
}

/// Random trits with `p_zero` zeros and equally likely signs.
pub fn random_trits(rng: &mut impl Rng, dims: &[usize], p_zero: f64) -> Tensor<Trit> {
    Tensor::from_fn(dims, |_| {
        if rng.random_bool(p_zero.clamp(0.0, 1.0)) {
            Trit::Zero
        } else if rng.random_bool(0.5) {
            Trit::Pos
        } else {
            Trit::Neg
        }
    })
    .expect("dims are small")
}

/// Inverse of the standard normal CDF.
pub(crate) fn probit(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(p)
}

/// Batch norm whose ternarization zeroes about `zero_fraction` of outputs
/// for an accumulator with standard deviation `sigma`, with a small random
/// jitter per channel.
fn sparse_bn<T: Real>(rng: &mut impl Rng, channels: usize, sigma: f64, zero_fraction: f64) -> BatchNorm<T> {
    // |a| < 0.5 * s maps to zero, so s = 2 * sigma * z for P(|a| < sigma z) = f
    let z = probit((1.0 + zero_fraction) / 2.0);
    let mut bn = BatchNorm::identity(channels);
    for c in 0..channels {
        let s = 2.0 * sigma.max(0.5) * z * rng.random_range(0.9..1.1);
        let gamma = rng.random_range(0.5..2.0);
        // var chosen so that s / gamma keeps the intended ratio
        let scale = s * gamma;
        bn.gamma[c] = T::of(gamma);
        bn.var[c] = T::of(scale * scale * 0.999);
        bn.eps[c] = T::of(scale * scale * 0.001);
        bn.beta[c] = T::of(rng.random_range(-0.1..0.1));
        bn.mean[c] = T::of(rng.random_range(-0.5..0.5) * sigma.min(4.0));
    }
    bn
}

/// Batch norm for binary layers: the half-integer mean keeps every output
/// away from zero, so ternarization yields only +1 and -1.
fn binary_bn<T: Real>(rng: &mut impl Rng, channels: usize, sigma: f64) -> BatchNorm<T> {
    let mut bn = BatchNorm::identity(channels);
    for c in 0..channels {
        bn.gamma[c] = T::of(4.0);
        bn.mean[c] = T::of((rng.random_range(-0.3..0.3) * sigma).round() + 0.5);
    }
    bn
}

fn layer_weights(rng: &mut impl Rng, dims: &[usize], opts: &ZooOptions) -> Weights<f64> {
    let p_zero = if opts.binary { 0.0 } else { opts.weight_zero_fraction };
    Weights::Ternary(random_trits(rng, dims, p_zero))
}

fn cast_weights<T: Real>(w: Weights<f64>) -> Weights<T> {
    match w {
        Weights::Ternary(t) => Weights::Ternary(t),
        Weights::Real(t) => Weights::Real(t.map(T::of)),
    }
}

/// Accumulator standard deviation for `fan_in` inputs of the given density.
fn acc_sigma(fan_in: usize, weight_density: f64, act_density: f64) -> f64 {
    (fan_in as f64 * weight_density * act_density).sqrt()
}

/// The 13-layer reference CNN on a 32x32x126 thermometer-encoded input:
/// three blocks of 3x3 convolutions with 2x2 max pooling, a fourth
/// convolution with 4x4 average pooling and a 128-to-10 classifier.
pub fn reference_cnn<T: Real>(opts: &ZooOptions, seed: u64) -> NetworkDesc<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_density = if opts.binary { 1.0 } else { 1.0 - opts.weight_zero_fraction };
    let a_density = if opts.binary { 1.0 } else { 1.0 - opts.activation_zero_fraction };
    let c_in = 3 * REFERENCE_CHANNELS_PER_COLOR;
    let conv = |rng: &mut ChaCha8Rng, i: usize, o: usize, first: bool| {
        let w = layer_weights(rng, &[o, 3, 3, i], opts);
        // the encoded input is denser than intermediate maps
        let density = if first { 0.6 } else { a_density };
        let sigma = acc_sigma(9 * i, w_density, density);
        let bn = if opts.binary {
            binary_bn(rng, o, sigma)
        } else {
            sparse_bn(rng, o, sigma, opts.activation_zero_fraction)
        };
        LayerDesc::conv(i, o, (3, 3), (1, 1), Padding::Full, cast_weights(w)).with_bn(bn)
    };
    let mut layers = vec![
        conv(&mut rng, c_in, 128, true),
        conv(&mut rng, 128, 128, false),
        conv(&mut rng, 128, 128, false),
        LayerDesc::max_pool(128, (2, 2)),
        conv(&mut rng, 128, 128, false),
        conv(&mut rng, 128, 128, false),
        LayerDesc::max_pool(128, (2, 2)),
        conv(&mut rng, 128, 128, false),
        conv(&mut rng, 128, 128, false),
        LayerDesc::max_pool(128, (2, 2)),
        conv(&mut rng, 128, 128, false),
        LayerDesc::avg_pool(128, (4, 4)),
    ];
    let fc_w = layer_weights(&mut rng, &[10, 128], opts);
    let sigma = acc_sigma(128, w_density, a_density);
    let fc_bn = if opts.binary {
        binary_bn(&mut rng, 10, sigma)
    } else {
        sparse_bn(&mut rng, 10, sigma, 0.3)
    };
    layers.push(LayerDesc::dense(128, 10, cast_weights(fc_w)).with_bn(fc_bn));
    NetworkDesc {
        input_dims: (32, 32, c_in),
        encoder: if opts.binary {
            Encoder::BinaryThermometer
        } else {
            Encoder::TernaryThermometer
        },
        layers,
    }
}

/// A smooth 8-bit test image: a few random sinusoids per color plus mild
/// noise, values in `[0, 255]`.
pub fn smooth_image(rng: &mut impl Rng, (h, w): (usize, usize), colors: usize) -> Tensor<i64> {
    let waves: Vec<[f64; 4]> = (0..colors * 3)
        .map(|_| {
            [
                rng.random_range(0.02..0.2),
                rng.random_range(0.02..0.2),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(20.0..50.0),
            ]
        })
        .collect();
    let mut data = Vec::with_capacity(h * w * colors);
    for y in 0..h {
        for x in 0..w {
            for c in 0..colors {
                let v: f64 = waves[c * 3..c * 3 + 3]
                    .iter()
                    .map(|&[fy, fx, ph, amp]| amp * (fy * y as f64 * std::f64::consts::TAU + fx * x as f64 * std::f64::consts::TAU + ph).sin())
                    .sum::<f64>()
                    + 128.0
                    + rng.random_range(-4.0..4.0);
                data.push(v.round().clamp(0.0, 255.0) as i64);
            }
        }
    }
    Tensor::new(&[h, w, colors], data).expect("consistent dims")
}

/// Encode an 8-bit image for the reference network: the ternary code has
/// `2 * 42 + 1` levels per color, the binary code `42 + 1`.
pub fn encode_reference_input(image: &Tensor<i64>, binary: bool) -> Result<Tensor<Trit>> {
    let m = REFERENCE_CHANNELS_PER_COLOR;
    let (levels, encoder) = if binary {
        (m, Encoder::BinaryThermometer)
    } else {
        (2 * m, Encoder::TernaryThermometer)
    };
    let scaled = image.map(|p| (p.clamp(0, 255) as f64 * levels as f64 / 255.0).round() as i64);
    encode_image(&scaled, encoder, m)
}

/// Bounds for [`random_network`].
#[derive(Clone, Copy, Debug)]
pub struct RandomNetOptions {
    pub max_compute_layers: usize,
    pub max_side: usize,
    pub max_channels: usize,
    pub allow_stride: bool,
    pub allow_pooling: bool,
    pub allow_dense: bool,
    pub allow_depthwise: bool,
    pub allow_unpadded: bool,
    /// Allow batch-norm gains of either sign.
    pub negative_gains: bool,
    pub bias: bool,
}

impl Default for RandomNetOptions {
    fn default() -> Self {
        Self {
            max_compute_layers: 4,
            max_side: 12,
            max_channels: 16,
            allow_stride: true,
            allow_pooling: true,
            allow_dense: true,
            allow_depthwise: true,
            allow_unpadded: true,
            negative_gains: true,
            bias: true,
        }
    }
}

/// A random network that maps onto `arch`, with ternary weights and
/// raw-trit input.
pub fn random_network<T: Real>(
    rng: &mut impl Rng,
    arch: &ArchConfig,
    opts: &RandomNetOptions,
) -> NetworkDesc<T> {
    let side_cap = opts.max_side.min(arch.i_h).min(arch.i_w).max(1);
    let ch_cap = opts.max_channels.min(arch.n_i).min(arch.n_o).max(1);
    let h = rng.random_range(1..=side_cap);
    let w = rng.random_range(1..=side_cap);
    let c = rng.random_range(1..=ch_cap);
    let n_layers = rng.random_range(1..=opts.max_compute_layers.min(arch.l).max(1));
    let mut layers: Vec<LayerDesc<T>> = Vec::new();
    let mut cur = (h, w, c);
    for i in 0..n_layers {
        let last = i + 1 == n_layers;
        let flat = cur.0 * cur.1 * cur.2;
        if last && opts.allow_dense && flat <= arch.window_trits() && rng.random_bool(0.3) {
            let out = rng.random_range(1..=ch_cap);
            let pz = rng.random_range(0.0..0.7);
            let wt = random_trits(rng, &[out, flat], pz);
            let mut l = LayerDesc::dense(flat, out, Weights::Ternary(wt));
            l.bn = Some(random_bn(rng, out, (flat as f64 * 0.3).sqrt(), opts));
            if opts.bias && rng.random_bool(0.3) {
                l.bias = Some((0..out).map(|_| T::of(rng.random_range(-2.0..2.0))).collect());
            }
            layers.push(l);
            break;
        }

        let odd: Vec<usize> = (1..=arch.k).step_by(2).collect();
        let k_max_fit = |n: usize| odd.iter().copied().filter(|&k| k <= n).max().unwrap_or(1);
        let mut kh = odd[rng.random_range(0..odd.len())];
        let mut kw = odd[rng.random_range(0..odd.len())];
        let padding = if opts.allow_unpadded && rng.random_bool(0.25) {
            kh = kh.min(k_max_fit(cur.0));
            kw = kw.min(k_max_fit(cur.1));
            Padding::None
        } else {
            Padding::Full
        };
        let stride = if opts.allow_stride && rng.random_bool(0.3) {
            (rng.random_range(1..=2), rng.random_range(1..=2))
        } else {
            (1, 1)
        };
        let depthwise = opts.allow_depthwise && rng.random_bool(0.2);
        let (out, wt) = if depthwise {
            let pz = rng.random_range(0.0..0.5);
            (cur.2, random_trits(rng, &[cur.2, kh, kw, 1], pz))
        } else {
            let out = rng.random_range(1..=ch_cap);
            let pz = rng.random_range(0.0..0.7);
            (out, random_trits(rng, &[out, kh, kw, cur.2], pz))
        };
        let fan_in = kh * kw * if depthwise { 1 } else { cur.2 };
        let mut l = if depthwise {
            LayerDesc::depthwise(cur.2, (kh, kw), stride, padding, Weights::Ternary(wt))
        } else {
            LayerDesc::conv(cur.2, out, (kh, kw), stride, padding, Weights::Ternary(wt))
        };
        l.bn = Some(random_bn(rng, out, (fan_in as f64 * 0.3).sqrt(), opts));
        if opts.bias && rng.random_bool(0.3) {
            l.bias = Some((0..out).map(|_| T::of(rng.random_range(-2.0..2.0))).collect());
        }
        let next = l.output_dims(cur).expect("geometry chosen to fit");
        layers.push(l);
        cur = next;

        if opts.allow_pooling && rng.random_bool(0.35) {
            let divisors = |n: usize| (2..=4).filter(move |d| n.is_multiple_of(*d)).collect::<Vec<_>>();
            let (dh, dw) = (divisors(cur.0), divisors(cur.1));
            if !dh.is_empty() && !dw.is_empty() {
                let ph = dh[rng.random_range(0..dh.len())];
                let pw = dw[rng.random_range(0..dw.len())];
                let pool = if rng.random_bool(0.5) {
                    LayerDesc::max_pool(cur.2, (ph, pw))
                } else {
                    LayerDesc::avg_pool(cur.2, (ph, pw))
                };
                cur = pool.output_dims(cur).expect("divisible");
                layers.push(pool);
            }
        }
    }
    NetworkDesc {
        input_dims: (h, w, c),
        encoder: Encoder::RawTrits,
        layers,
    }
}

fn random_bn<T: Real>(rng: &mut impl Rng, channels: usize, sigma: f64, opts: &RandomNetOptions) -> BatchNorm<T> {
    let mut bn = BatchNorm::identity(channels);
    for c in 0..channels {
        let mut gamma: f64 = rng.random_range(0.25..2.0);
        if opts.negative_gains && rng.random_bool(0.3) {
            gamma = -gamma;
        }
        bn.gamma[c] = T::of(gamma);
        bn.beta[c] = T::of(rng.random_range(-0.75..0.75));
        bn.mean[c] = T::of(rng.random_range(-1.0..1.0) * sigma);
        bn.var[c] = T::of(rng.random_range(0.25..1.5) * sigma * sigma + 0.1);
        bn.eps[c] = T::of(1e-5);
    }
    bn
}

/// Random ternary input for a raw-trit network.
pub fn random_input(rng: &mut impl Rng, dims: (usize, usize, usize), p_zero: f64) -> Tensor<Trit> {
    random_trits(rng, &[dims.0, dims.1, dims.2], p_zero)
}
