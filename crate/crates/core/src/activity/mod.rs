//! Switching activity, energy and tiling models.
//!
//! Toggles are counted on the adder-tree inputs (the products) and on the
//! multiplier inputs (the window trits). In the unrolled datapath the
//! weights are stationary for a whole layer, so a product toggles only
//! when its weight is nonzero and its activation changes between
//! consecutive windows. The iterative model replays the same windows on a
//! datapath `f` times narrower that alternates input-channel tiles of
//! activations and weights every cycle.

pub mod energy;
pub mod hamming;
pub mod report;
pub mod tiling;

use crate::error::{Error, Result};
use crate::network::ArchConfig;
use crate::sim::{Phase, SimTrace};
use crate::trit::TritPlanes;

pub use energy::{binary_discount, energy_estimate, energy_from_toggles, CostModel, EnergyItems, EnergyReport};
pub use hamming::{hamming_distance, hamming_stats, synthetic_feature_map, FmKind, SyntheticStream};
pub use tiling::{tiling_transfer, TilingPlan, TilingReport, TilingStrategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ToggleMode {
    Unrolled,
    /// Input channels split into this many tiles.
    Iterative(usize),
}

impl ToggleMode {
    pub fn name(self) -> String {
        match self {
            ToggleMode::Unrolled => "unrolled".into(),
            ToggleMode::Iterative(f) => format!("iterative{f}"),
        }
    }
}

/// Toggle counts of one layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LayerToggles {
    pub layer: usize,
    /// Datapath cycles compared (windows, or windows times `f`).
    pub cycles: u64,
    pub adder_toggles: u64,
    /// Adder input nodes times cycle transitions.
    pub adder_nodes: u64,
    pub multiplier_toggles: u64,
    pub multiplier_nodes: u64,
}

impl LayerToggles {
    fn add(&mut self, o: &LayerToggles) {
        self.cycles += o.cycles;
        self.adder_toggles += o.adder_toggles;
        self.adder_nodes += o.adder_nodes;
        self.multiplier_toggles += o.multiplier_toggles;
        self.multiplier_nodes += o.multiplier_nodes;
    }
}

fn prob(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToggleStats {
    pub mode: ToggleMode,
    pub layers: Vec<LayerToggles>,
    pub total: LayerToggles,
}

impl ToggleStats {
    pub fn adder_toggle_prob(&self) -> f64 {
        prob(self.total.adder_toggles, self.total.adder_nodes)
    }

    pub fn multiplier_toggle_prob(&self) -> f64 {
        prob(self.total.multiplier_toggles, self.total.multiplier_nodes)
    }

    fn from_layers(mode: ToggleMode, layers: Vec<LayerToggles>) -> Self {
        let mut total = LayerToggles::default();
        for l in &layers {
            total.add(l);
        }
        Self { mode, layers, total }
    }
}

fn popcount(words: &[u64]) -> u64 {
    words.iter().map(|w| w.count_ones() as u64).sum()
}

/// Toggles of a window stream on the unrolled datapath. `weights` holds one
/// kernel per used OCU; `active_ocus` counts the OCUs in unsilenced stages.
pub fn unrolled_toggles(windows: &[&TritPlanes], weights: &[TritPlanes], active_ocus: usize) -> LayerToggles {
    let mut t = LayerToggles {
        cycles: windows.len() as u64,
        ..Default::default()
    };
    let Some(first) = windows.first() else {
        return t;
    };
    let n = first.len() as u64;
    let masks: Vec<Vec<u64>> = weights.iter().map(|w| w.nonzero_mask()).collect();
    for pair in windows.windows(2) {
        let changed = pair[1].changed_mask(pair[0]);
        let c = popcount(&changed);
        t.multiplier_toggles += c * active_ocus as u64;
        if c == 0 {
            continue;
        }
        for m in &masks {
            t.adder_toggles += changed.iter().zip(m).map(|(a, b)| (a & b).count_ones() as u64).sum::<u64>();
        }
    }
    let transitions = windows.len() as u64 - 1;
    t.adder_nodes = transitions * n * weights.len() as u64;
    t.multiplier_nodes = transitions * n * active_ocus as u64;
    t
}

/// Split a window into `f` input-channel tiles. Window position
/// `(pos, ch)` lives at `pos * n_i + ch`.
fn channel_tiles(x: &TritPlanes, n_i: usize, f: usize) -> Vec<TritPlanes> {
    let positions = x.len() / n_i;
    let tile = n_i.div_ceil(f);
    (0..f)
        .map(|j| {
            let (c0, c1) = ((j * tile).min(n_i), ((j + 1) * tile).min(n_i));
            let mut p = TritPlanes::zeros(positions * tile);
            for pos in 0..positions {
                p.copy_from(pos * tile, x, pos * n_i + c0, c1 - c0);
            }
            p
        })
        .collect()
}

/// Toggles of the same computation on an output-stationary datapath of
/// `1/f` the width that alternates channel tiles of activations and
/// weights each cycle.
pub fn iterative_toggles(
    windows: &[&TritPlanes],
    weights: &[TritPlanes],
    active_ocus: usize,
    n_i: usize,
    f: usize,
) -> LayerToggles {
    let f = f.max(1);
    let w_tiles: Vec<Vec<TritPlanes>> = weights.iter().map(|w| channel_tiles(w, n_i, f)).collect();
    let mut t = LayerToggles {
        cycles: (windows.len() * f) as u64,
        ..Default::default()
    };
    let mut prev_x: Option<TritPlanes> = None;
    let mut prev_products: Vec<Option<TritPlanes>> = vec![None; weights.len()];
    let mut width = 0;
    for x in windows {
        for (j, xt) in channel_tiles(x, n_i, f).into_iter().enumerate() {
            width = xt.len() as u64;
            if let Some(px) = &prev_x {
                t.multiplier_toggles += popcount(&xt.changed_mask(px)) * active_ocus as u64;
            }
            for (o, wt) in w_tiles.iter().enumerate() {
                let prod = xt.product(&wt[j]);
                if let Some(pp) = &prev_products[o] {
                    t.adder_toggles += popcount(&prod.changed_mask(pp));
                }
                prev_products[o] = Some(prod);
            }
            prev_x = Some(xt);
        }
    }
    let transitions = t.cycles.saturating_sub(1);
    t.adder_nodes = transitions * width * weights.len() as u64;
    t.multiplier_nodes = transitions * width * active_ocus as u64;
    t
}

fn active_ocus(arch: &ArchConfig, stages: usize) -> usize {
    (stages * arch.word_trits()).min(arch.n_o)
}

/// Count toggles over the compute cycles of a recorded trace. The first
/// window of each layer has no predecessor and is not counted.
pub fn count_toggles(trace: &SimTrace, mode: ToggleMode) -> Result<ToggleStats> {
    if trace.records.is_empty() || !trace.is_recorded() {
        return Err(Error::EmptyTrace);
    }
    let arch = &trace.arch;
    let layers = trace
        .layers
        .iter()
        .map(|l| {
            let windows: Vec<&TritPlanes> = trace.records[l.records.clone()]
                .iter()
                .filter(|r| r.phase == Phase::Compute)
                .filter_map(|r| r.window.as_ref())
                .collect();
            let ocus = active_ocus(arch, l.active_stages);
            let mut t = match mode {
                ToggleMode::Unrolled => unrolled_toggles(&windows, &l.weights, ocus),
                ToggleMode::Iterative(f) => iterative_toggles(&windows, &l.weights, ocus, arch.n_i, f),
            };
            t.layer = l.index;
            t
        })
        .collect();
    Ok(ToggleStats::from_layers(mode, layers))
}
