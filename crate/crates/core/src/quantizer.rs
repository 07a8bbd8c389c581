//! Incremental weight quantization: ordering strategies, stepwise
//! partitioning, ternary projection and sparsity.
//!
//! Retraining between steps is outside this crate; [`RefinementHook`] is
//! the seam where a trainer would update the still-real weights.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;
use crate::trit::{PackedTritTensor, Trit};

/// Default projection threshold relative to `max |w|`.
pub const DEFAULT_DELTA: f64 = 0.33;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuantStrategy {
    /// Largest magnitudes first.
    Magnitude,
    /// Smallest magnitudes first.
    MagnitudeInverse,
    /// Alternating smallest and largest of the remaining weights.
    ZigZag,
}

impl QuantStrategy {
    pub const ALL: [QuantStrategy; 3] = [
        QuantStrategy::Magnitude,
        QuantStrategy::MagnitudeInverse,
        QuantStrategy::ZigZag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QuantStrategy::Magnitude => "magnitude",
            QuantStrategy::MagnitudeInverse => "magnitude-inverse",
            QuantStrategy::ZigZag => "zigzag",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "magnitude" => Some(QuantStrategy::Magnitude),
            "magnitude-inverse" | "magnitudeinverse" | "inverse" => Some(QuantStrategy::MagnitudeInverse),
            "zigzag" | "zig-zag" => Some(QuantStrategy::ZigZag),
            _ => None,
        }
    }
}

/// Cumulative quantized fractions, strictly increasing and ending at 1.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantSchedule {
    fractions: Vec<f64>,
}

impl QuantSchedule {
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        let bad = |m: String| Err(Error::Undefined(format!("quantization schedule: {m}")));
        if fractions.is_empty() {
            return bad("empty".into());
        }
        let mut prev = 0.0;
        for &f in &fractions {
            if !(f > prev && f <= 1.0) {
                return bad(format!("{f} does not increase within (0, 1]"));
            }
            prev = f;
        }
        if prev != 1.0 {
            return bad(format!("last fraction is {prev}, not 1"));
        }
        Ok(Self { fractions })
    }

    /// Comma-separated fractions, e.g. `0.2,0.4,1.0`.
    pub fn parse(s: &str) -> Result<Self> {
        let fractions = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Undefined(format!("quantization schedule entry {p:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(fractions)
    }

    /// Step sizes of 20%, then 10%, then 5% of all weights.
    pub fn decaying() -> Self {
        Self::new(vec![0.2, 0.4, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0]).unwrap()
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    /// Cumulative counts `ceil(f * n)` for each step.
    pub fn cumulative_counts(&self, n: usize) -> Vec<usize> {
        self.fractions
            .iter()
            .map(|&f| {
                // guard against 0.7 * 10 = 7.000000000000001
                let c = (f * n as f64 - 1e-9).ceil().max(0.0) as usize;
                c.min(n)
            })
            .collect()
    }
}

impl Default for QuantSchedule {
    fn default() -> Self {
        Self::decaying()
    }
}

fn by_magnitude<T: Real>(w: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (w[a].as_f64().abs(), w[b].as_f64().abs());
        x.total_cmp(&y).then(a.cmp(&b))
    });
    idx
}

/// Quantization order of the flat weights. Ties go to the lower index.
pub fn order_weights<T: Real>(w: &[T], strategy: QuantStrategy) -> Vec<usize> {
    let asc = by_magnitude(w);
    match strategy {
        QuantStrategy::MagnitudeInverse => asc,
        QuantStrategy::Magnitude => {
            let mut idx = asc;
            // descending magnitude, ascending index within ties
            idx.sort_by(|&a, &b| {
                let (x, y) = (w[a].as_f64().abs(), w[b].as_f64().abs());
                y.total_cmp(&x).then(a.cmp(&b))
            });
            idx
        }
        QuantStrategy::ZigZag => {
            let desc = order_weights(w, QuantStrategy::Magnitude);
            let n = w.len();
            let (mut lo, mut hi) = (0, 0);
            let mut taken = vec![false; n];
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let src = if out.len() % 2 == 0 { &asc } else { &desc };
                let cur = if out.len() % 2 == 0 { &mut lo } else { &mut hi };
                while taken[src[*cur]] {
                    *cur += 1;
                }
                taken[src[*cur]] = true;
                out.push(src[*cur]);
            }
            out
        }
    }
}

/// Index sets quantized at each step of the schedule.
pub fn partition_steps<T: Real>(w: &[T], strategy: QuantStrategy, schedule: &QuantSchedule) -> Vec<Vec<usize>> {
    let order = order_weights(w, strategy);
    let mut prev = 0;
    schedule
        .cumulative_counts(w.len())
        .into_iter()
        .map(|c| {
            let step = order[prev..c].to_vec();
            prev = c;
            step
        })
        .collect()
}

fn check_delta<T: Real>(delta: T) -> Result<()> {
    if delta.as_f64() > 0.0 {
        Ok(())
    } else {
        Err(Error::Undefined(format!("projection delta {} must be positive", delta.as_f64())))
    }
}

fn max_abs<T: Real>(w: &[T]) -> T {
    w.iter().fold(T::zero(), |m, &x| if x.abs() > m { x.abs() } else { m })
}

fn project_one<T: Real>(x: T, threshold: T, max: T) -> Trit {
    if max == T::zero() || x.abs() < threshold {
        Trit::Zero
    } else if x > T::zero() {
        Trit::Pos
    } else {
        Trit::Neg
    }
}

/// `sgn(w)` where `|w| >= delta * max |w|`, zero elsewhere.
pub fn project_ternary<T: Real>(w: &Tensor<T>, delta: T) -> Result<PackedTritTensor> {
    check_delta(delta)?;
    let max = max_abs(w.data());
    let th = delta * max;
    let trits: Vec<Trit> = w.data().iter().map(|&x| project_one(x, th, max)).collect();
    PackedTritTensor::from_trits(w.dims(), &trits)
}

/// Fraction of zero trits.
pub fn sparsity(t: &PackedTritTensor) -> Result<f64> {
    trit_sparsity(&t.to_trits())
}

pub fn trit_sparsity(t: &[Trit]) -> Result<f64> {
    if t.is_empty() {
        return Err(Error::Undefined("sparsity of an empty tensor".into()));
    }
    Ok(t.iter().filter(|x| x.is_zero()).count() as f64 / t.len() as f64)
}

/// Updates the not-yet-quantized weights between steps.
pub trait RefinementHook<T> {
    /// `frozen[i]` marks weights already quantized.
    fn refine(&mut self, step: usize, weights: &mut [T], frozen: &[bool]);
}

/// Leaves the weights unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl<T> RefinementHook<T> for Identity {
    fn refine(&mut self, _step: usize, _weights: &mut [T], _frozen: &[bool]) {}
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub fraction: f64,
    pub quantized: usize,
    /// Zero fraction of the weights quantized in this step.
    pub step_sparsity: f64,
    /// Zero fraction of all weights quantized so far.
    pub cumulative_sparsity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InqResult {
    pub trits: Tensor<Trit>,
    pub steps: Vec<StepReport>,
}

/// Quantize in steps. The projection threshold is fixed from the initial
/// `max |w|`; each step projects the weights the schedule selects and then
/// lets `hook` refine the rest.
pub fn quantize_incremental<T: Real>(
    w: &Tensor<T>,
    strategy: QuantStrategy,
    schedule: &QuantSchedule,
    delta: T,
    hook: &mut dyn RefinementHook<T>,
) -> Result<InqResult> {
    check_delta(delta)?;
    let mut weights = w.data().to_vec();
    let max = max_abs(&weights);
    let th = delta * max;
    let mut frozen = vec![false; weights.len()];
    let mut trits = vec![Trit::Zero; weights.len()];
    let mut steps = Vec::new();
    let (mut done, mut zeros) = (0usize, 0usize);
    for (k, set) in partition_steps(&weights, strategy, schedule).into_iter().enumerate() {
        let mut step_zeros = 0;
        for &i in &set {
            trits[i] = project_one(weights[i], th, max);
            frozen[i] = true;
            step_zeros += trits[i].is_zero() as usize;
        }
        done += set.len();
        zeros += step_zeros;
        steps.push(StepReport {
            step: k,
            fraction: schedule.fractions()[k],
            quantized: set.len(),
            step_sparsity: if set.is_empty() { 0.0 } else { step_zeros as f64 / set.len() as f64 },
            cumulative_sparsity: if done == 0 { 0.0 } else { zeros as f64 / done as f64 },
        });
        hook.refine(k, &mut weights, &frozen);
    }
    Ok(InqResult {
        trits: Tensor::new(w.dims(), trits)?,
        steps,
    })
}

/// Sparsity of the first-step subset under fixed-delta projection.
pub fn first_step_sparsity<T: Real>(w: &[T], strategy: QuantStrategy, schedule: &QuantSchedule, delta: T) -> Result<f64> {
    check_delta(delta)?;
    let max = max_abs(w);
    let th = delta * max;
    let first = partition_steps(w, strategy, schedule).into_iter().next().unwrap_or_default();
    let t: Vec<Trit> = first.iter().map(|&i| project_one(w[i], th, max)).collect();
    trit_sparsity(&t)
}
