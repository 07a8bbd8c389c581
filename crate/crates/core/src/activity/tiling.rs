//! External-memory traffic of tiled execution for feature maps larger than
//! the on-chip memory.
//!
//! The network is `layers` padded `K x K` convolutions with `N_I` input and
//! `N_O` output channels; the halo is `h = K / 2` per layer and tile edge.
//! Feature values move at 1.6 bits per trit. The network input is read from
//! DRAM; the final output is not charged.
//!
//! * A map that fits on chip is read once and never leaves the chip.
//! * Layer-first: every layer reads each tile with a halo of `h` (output
//!   region `T - 2h`) and writes its output map back, except after the
//!   last layer. Weights load once per layer.
//! * Depth-first: each tile passes through all layers on chip. The tile
//!   output region shrinks to `T - 2 * layers * h` and the halos are
//!   recomputed at every depth. Weights of all layers reload per tile.
//!
//! Compute energy uses the cost model's nominal toggle probability for
//! every adder node of every computed window.

use crate::activity::energy::{CostModel, BITS_PER_TRIT};
use crate::error::{Error, Result};
use crate::network::ArchConfig;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TilingStrategy {
    LayerFirst,
    DepthFirst,
}

impl TilingStrategy {
    pub fn name(self) -> &'static str {
        match self {
            TilingStrategy::LayerFirst => "layer_first",
            TilingStrategy::DepthFirst => "depth_first",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "layer_first" | "layer" => Some(TilingStrategy::LayerFirst),
            "depth_first" | "depth" => Some(TilingStrategy::DepthFirst),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TilingPlan {
    /// Feature map `(H, W)`.
    pub fm: (usize, usize),
    /// Tile `(H, W)`, at most the on-chip map.
    pub tile: (usize, usize),
    pub layers: usize,
    pub strategy: TilingStrategy,
}

impl TilingPlan {
    /// Tiles as large as the on-chip feature map memory.
    pub fn new(fm: (usize, usize), layers: usize, strategy: TilingStrategy, arch: &ArchConfig) -> Self {
        Self {
            fm,
            tile: (arch.i_h, arch.i_w),
            layers,
            strategy,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TilingReport<T> {
    pub plan: TilingPlan,
    pub tiles: usize,
    /// Feature-map bits to and from external memory.
    pub external_bits: T,
    pub weight_bits: T,
    /// Output windows computed, recomputation included.
    pub windows: u64,
    pub fm_transfer_pj: T,
    pub weight_pj: T,
    pub compute_pj: T,
}

impl<T: Real> TilingReport<T> {
    pub fn total_pj(&self) -> T {
        self.fm_transfer_pj + self.weight_pj + self.compute_pj
    }
}

/// Output ranges of 1-D tiles with output length `o`.
fn ranges(n: usize, o: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(o)).map(|i| (i * o, ((i + 1) * o).min(n))).collect()
}

/// Total length of the ranges widened by `d` and clipped to `[0, n)`.
fn widened(rs: &[(usize, usize)], d: usize, n: usize) -> usize {
    rs.iter().map(|&(s, e)| (e + d).min(n) - s.saturating_sub(d)).sum()
}

fn tile_output(t: usize, n: usize, halo: usize) -> Result<usize> {
    if n <= t {
        return Ok(n);
    }
    t.checked_sub(2 * halo).filter(|&o| o > 0).ok_or_else(|| {
        Error::Capacity(format!("tile of {t} leaves no output inside a halo of {halo}"))
    })
}

pub fn tiling_transfer<T: Real>(plan: &TilingPlan, arch: &ArchConfig, cost: &CostModel<T>) -> Result<TilingReport<T>> {
    let (h, w) = plan.fm;
    let (th, tw) = plan.tile;
    let n = plan.layers;
    if th > arch.i_h || tw > arch.i_w || th == 0 || tw == 0 {
        return Err(Error::Capacity(format!(
            "tile {th}x{tw} exceeds the {}x{} feature map memory",
            arch.i_h, arch.i_w
        )));
    }
    if n == 0 || h == 0 || w == 0 {
        return Err(Error::Shape("tiling needs at least one layer and a nonempty map".into()));
    }
    if plan.strategy == TilingStrategy::DepthFirst && n > arch.l {
        return Err(Error::Capacity(format!("{n} fused layers exceed the {} queued layers", arch.l)));
    }
    let halo = arch.k / 2;
    let px_bits = arch.n_i as f64 * BITS_PER_TRIT;
    let kernel_trits = (arch.n_o * arch.window_trits()) as f64;
    let fits = h <= th && w <= tw;

    let (tiles, ext_px, windows, weight_loads) = if fits {
        (1, h * w, (n * h * w) as u64, n)
    } else {
        match plan.strategy {
            TilingStrategy::LayerFirst => {
                let (oy, ox) = (tile_output(th, h, halo)?, tile_output(tw, w, halo)?);
                let (ry, rx) = (ranges(h, oy), ranges(w, ox));
                let read = widened(&ry, halo, h) * widened(&rx, halo, w);
                let tiles = ry.len() * rx.len();
                // every layer reads its tiles, all but the last write the map back
                (tiles, n * read + (n - 1) * h * w, (n * h * w) as u64, n)
            }
            TilingStrategy::DepthFirst => {
                let (oy, ox) = (tile_output(th, h, n * halo)?, tile_output(tw, w, n * halo)?);
                let (ry, rx) = (ranges(h, oy), ranges(w, ox));
                let read = widened(&ry, n * halo, h) * widened(&rx, n * halo, w);
                let windows: usize = (1..=n)
                    .map(|l| widened(&ry, (n - l) * halo, h) * widened(&rx, (n - l) * halo, w))
                    .sum();
                let tiles = ry.len() * rx.len();
                (tiles, read, windows as u64, n * tiles)
            }
        }
    };

    let external_bits = T::of(ext_px as f64 * px_bits);
    let weight_bits = T::of(weight_loads as f64 * kernel_trits * BITS_PER_TRIT);
    let nodes = T::of(windows as f64 * kernel_trits);
    Ok(TilingReport {
        plan: *plan,
        tiles,
        external_bits,
        weight_bits,
        windows,
        fm_transfer_pj: external_bits * cost.dram_pj_per_bit,
        weight_pj: weight_bits * cost.weight_mem_pj_per_bit,
        compute_pj: nodes * cost.nominal_toggle_prob * cost.compute_pj_per_toggled_node,
    })
}
