//! Folding of bias, batch norm, Hardtanh and ternarization into two integer
//! thresholds per output channel.
//!
//! The float reference is `y = gamma * (a + bias - mean) / sqrt(var + eps) + beta`
//! followed by ternarization: `+1` if `y >= 0.5`, `-1` if `y < -0.5`, else `0`.
//! Hardtanh clamps to `[-1, 1]` and does not move either boundary.
//! The integer decider is `+1` iff `a >= t_hi`, `-1` iff `a < t_lo`.

use crate::error::{Error, Result};
use crate::network::{BatchNorm, LayerDesc, LayerKind, Weights};
use crate::scalar::Real;
use crate::trit::Trit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct ThresholdPair {
    pub t_lo: i64,
    pub t_hi: i64,
}

impl ThresholdPair {
    pub fn new(t_lo: i64, t_hi: i64) -> Self {
        debug_assert!(t_lo <= t_hi);
        Self { t_lo, t_hi }
    }

    #[inline]
    pub fn decide(&self, acc: i64) -> Trit {
        if acc >= self.t_hi {
            Trit::Pos
        } else if acc < self.t_lo {
            Trit::Neg
        } else {
            Trit::Zero
        }
    }
}

/// Ternarize a normalized value with the mid-rise rule.
#[inline]
pub fn ternarize<T: Real>(y: T) -> Trit {
    let half = T::of(0.5);
    if y >= half {
        Trit::Pos
    } else if y < -half {
        Trit::Neg
    } else {
        Trit::Zero
    }
}

pub fn hardtanh<T: Real>(y: T) -> T {
    y.max(-T::one()).min(T::one())
}

/// Batch-normalized value of channel `c` for pre-activation `x`.
#[inline]
pub fn bn_value<T: Real>(bn: &BatchNorm<T>, bias: Option<&[T]>, c: usize, x: T) -> T {
    let x = match bias {
        Some(b) => x + b[c],
        None => x,
    };
    bn.gamma[c] * (x - bn.mean[c]) / bn.scale(c) + bn.beta[c]
}

/// The float reference for one channel: accumulator sum `s` over `area`
/// pooled positions (1 without average pooling).
pub fn float_reference<T: Real>(
    bn: &BatchNorm<T>,
    bias: Option<&[T]>,
    c: usize,
    sum: i64,
    area: usize,
) -> Trit {
    let x = if area == 1 {
        T::of_int(sum)
    } else {
        T::of_int(sum) / T::of_int(area as i64)
    };
    ternarize(hardtanh(bn_value(bn, bias, c, x)))
}

/// Accumulator range of one output value: `fan_in * area`.
pub fn accumulator_range<T: Real>(layer: &LayerDesc<T>, area: usize) -> i64 {
    let (kh, kw) = layer.kernel;
    let fan_in = match layer.kind {
        LayerKind::FullyConnected => layer.in_ch,
        LayerKind::DepthwiseConv2D => kh * kw,
        _ => kh * kw * layer.in_ch,
    };
    (fan_in * area) as i64
}

/// Smallest `a` in `[lo, hi]` satisfying a monotone predicate, starting
/// from an analytic guess; `hi` when none below it does.
fn snap(guess: f64, lo: i64, hi: i64, pred: impl Fn(i64) -> bool) -> i64 {
    let mut t = if guess.is_finite() {
        (guess as i64).clamp(lo, hi)
    } else if guess > 0.0 {
        hi
    } else {
        lo
    };
    while t > lo && pred(t - 1) {
        t -= 1;
    }
    while t < hi && !pred(t) {
        t += 1;
    }
    t
}

/// Thresholds of one channel on the sum domain of `area` accumulators.
fn fold_channel<T: Real>(
    bn: &BatchNorm<T>,
    bias: Option<&[T]>,
    c: usize,
    area: usize,
    range: i64,
) -> ThresholdPair {
    let s = bn.scale(c).as_f64();
    let gamma = bn.gamma[c].as_f64();
    let beta = bn.beta[c].as_f64();
    let mu = bn.mean[c].as_f64();
    let b = bias.map_or(0.0, |b| b[c].as_f64());
    let a = area as f64;
    // y >= 0.5  <=>  x >= (0.5 - beta) * s / gamma + mu - bias
    let hi_guess = (a * ((0.5 - beta) * s / gamma + mu - b)).ceil();
    let lo_guess = (a * ((-0.5 - beta) * s / gamma + mu - b)).ceil();
    let y = |sum: i64| {
        let x = if area == 1 {
            T::of_int(sum)
        } else {
            T::of_int(sum) / T::of_int(area as i64)
        };
        hardtanh(bn_value(bn, bias, c, x))
    };
    let half = T::of(0.5);
    let t_hi = snap(hi_guess, -range, range + 1, |v| y(v) >= half);
    let t_lo = snap(lo_guess, -range, range + 1, |v| y(v) >= -half);
    ThresholdPair::new(t_lo.min(t_hi), t_hi)
}

fn check_gains<T: Real>(bn: &BatchNorm<T>, layer_index: usize) -> Result<()> {
    for (c, &g) in bn.gamma.iter().enumerate() {
        if g == T::zero() || g.is_nan() {
            return Err(Error::DegenerateChannel {
                layer: layer_index,
                channel: c,
            });
        }
        if g < T::zero() {
            return Err(Error::NegativeGain {
                layer: layer_index,
                channel: c,
            });
        }
    }
    Ok(())
}

/// Thresholds of a layer without pooling (or with max pooling).
pub fn fold_thresholds<T: Real>(layer: &LayerDesc<T>) -> Result<Vec<ThresholdPair>> {
    fold_thresholds_pooled(layer, 1, 0)
}

/// Thresholds on the sum of `area` accumulators, for fused average
/// pooling. Equivalent to scaling the unpooled thresholds by `area`.
pub fn fold_thresholds_pooled<T: Real>(
    layer: &LayerDesc<T>,
    area: usize,
    layer_index: usize,
) -> Result<Vec<ThresholdPair>> {
    let bn = layer.bn_or_identity();
    check_gains(&bn, layer_index)?;
    let range = accumulator_range(layer, area.max(1));
    let bias = layer.bias.as_deref();
    Ok((0..layer.out_ch)
        .map(|c| fold_channel(&bn, bias, c, area.max(1), range))
        .collect())
}

/// Make every batch-norm gain positive: for channels with negative gain the
/// kernel, gain, mean and bias are negated, which leaves the layer's
/// function unchanged.
pub fn normalize_gamma_sign<T: Real>(layer: &LayerDesc<T>) -> LayerDesc<T> {
    let mut out = layer.clone();
    let Some(bn) = out.bn.as_mut() else {
        return out;
    };
    for c in 0..bn.gamma.len() {
        if bn.gamma[c] < T::zero() {
            bn.gamma[c] = -bn.gamma[c];
            bn.mean[c] = -bn.mean[c];
            if let Some(b) = out.bias.as_mut() {
                b[c] = -b[c];
            }
            if let Some(w) = out.weights.as_mut() {
                w.negate_output_channel(c);
            }
        }
    }
    out
}

/// Whether every weight of the layer is ternary.
pub fn has_ternary_weights<T: Real>(layer: &LayerDesc<T>) -> bool {
    matches!(layer.weights, Some(Weights::Ternary(_)) | None)
}
