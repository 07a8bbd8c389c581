//! Output channel compute units: double-buffered weights, the unrolled
//! multiply/popcount datapath, pooling and the threshold decider.

use crate::compiler::{Pooling, ThresholdPair};
use crate::error::Result;
use crate::sim::pool::{PoolOp, PoolUnit};
use crate::trit::{Trit, TritPlanes};

/// Result of one OCU cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OcuOutput {
    /// Popcount accumulator of the window.
    pub intermediate: i64,
    /// Value after the pooling stage (the accumulator when not pooling).
    pub pooled: i64,
    /// Output trit, present on the cycles the OCU writes a pixel.
    pub out: Option<Trit>,
}

#[derive(Clone, Debug)]
pub struct Ocu {
    banks: [TritPlanes; 2],
    active: usize,
    pub thresholds: ThresholdPair,
    pooling: Pooling,
    pool: Option<PoolUnit>,
}

impl Ocu {
    pub fn new(window_trits: usize) -> Self {
        Self {
            banks: [TritPlanes::zeros(window_trits), TritPlanes::zeros(window_trits)],
            active: 0,
            thresholds: ThresholdPair::new(0, 1),
            pooling: Pooling::None,
            pool: None,
        }
    }

    /// Capacity of both weight banks at 2 bits per trit.
    pub fn buffer_bits(&self) -> usize {
        4 * self.banks[0].len()
    }

    pub fn active_bank(&self) -> usize {
        self.active
    }

    pub fn weights(&self) -> &TritPlanes {
        &self.banks[self.active]
    }

    /// Write the next layer's kernel into the idle bank.
    pub fn load_bank(&mut self, weights: TritPlanes) {
        debug_assert_eq!(weights.len(), self.banks[0].len());
        self.banks[1 - self.active] = weights;
    }

    /// Switch to the bank loaded last and configure the layer.
    pub fn start_layer(&mut self, thresholds: ThresholdPair, pooling: Pooling, max_width: usize) {
        self.active = 1 - self.active;
        self.thresholds = thresholds;
        self.pooling = pooling;
        self.pool = match pooling {
            Pooling::None => None,
            Pooling::Max { ph, pw } => Some(PoolUnit::new(PoolOp::Max, (ph, pw), max_width)),
            Pooling::Avg { ph, pw } => Some(PoolUnit::new(PoolOp::Add, (ph, pw), max_width)),
        };
    }

    /// Evaluate one window at output position `pos`.
    pub fn cycle(&mut self, window: &TritPlanes, pos: (usize, usize)) -> Result<OcuOutput> {
        let acc = window.dot(&self.banks[self.active]);
        let t = &self.thresholds;
        let out = match (&mut self.pool, self.pooling) {
            (None, _) => OcuOutput {
                intermediate: acc,
                pooled: acc,
                out: Some(t.decide(acc)),
            },
            (Some(p), Pooling::Max { .. }) => {
                let done = p.update(t.decide(acc).value() as i64, pos.0, pos.1)?;
                OcuOutput {
                    intermediate: acc,
                    pooled: done.unwrap_or(p.register()),
                    out: done.map(Trit::signum),
                }
            }
            (Some(p), _) => {
                let done = p.update(acc, pos.0, pos.1)?;
                OcuOutput {
                    intermediate: acc,
                    pooled: done.unwrap_or(p.register()),
                    out: done.map(|s| t.decide(s)),
                }
            }
        };
        Ok(out)
    }
}
