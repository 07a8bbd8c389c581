//! Per-operation energy estimator.
//!
//! Energy items (picojoules):
//!
//! * `io`: network input and output over external DRAM, at 1.6 bits per trit
//! * `fm_memory`: feature-map words read and written, 1.6 bits per trit
//! * `weight_memory`: weights loaded into the OCUs, 1.6 bits per trit
//! * `codec`: trits converted between the 5-per-byte storage format and the
//!   2-bit compute format (every memory trit passes a codec)
//! * `popcount`: toggled adder-tree inputs
//! * `multiplier`: toggled multiplier inputs
//! * `static_`: a constant per cycle
//!
//! The shipped constants are calibrated, not first-principles.

use std::path::Path;

use crate::activity::{count_toggles, ToggleMode, ToggleStats};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sim::SimTrace;

/// Storage density of the 5-trits-per-byte format.
pub const BITS_PER_TRIT: f64 = 1.6;

pub const COST_MODEL_ENV: &str = "CUTIE_COST_MODEL";

pub const GF22_SCM: &str = include_str!("../../data/cost_gf22_scm.txt");
pub const N7: &str = include_str!("../../data/cost_7nm.txt");

#[derive(Clone, Debug, PartialEq)]
pub struct CostModel<T> {
    pub name: String,
    pub dram_pj_per_bit: T,
    pub fm_mem_pj_per_bit: T,
    pub weight_mem_pj_per_bit: T,
    pub codec_pj_per_trit: T,
    /// Per toggled adder-tree input node.
    pub compute_pj_per_toggled_node: T,
    pub multiplier_pj_per_toggle: T,
    pub static_pj_per_cycle: T,
    /// Toggle probability assumed where no trace exists (tiling model).
    pub nominal_toggle_prob: T,
}

impl<T: Real> CostModel<T> {
    const KEYS: [&'static str; 8] = [
        "dram_pj_per_bit",
        "fm_mem_pj_per_bit",
        "weight_mem_pj_per_bit",
        "codec_pj_per_trit",
        "compute_pj_per_toggled_node",
        "multiplier_pj_per_toggle",
        "static_pj_per_cycle",
        "nominal_toggle_prob",
    ];

    fn field(&mut self, key: &str) -> Option<&mut T> {
        Some(match key {
            "dram_pj_per_bit" => &mut self.dram_pj_per_bit,
            "fm_mem_pj_per_bit" => &mut self.fm_mem_pj_per_bit,
            "weight_mem_pj_per_bit" => &mut self.weight_mem_pj_per_bit,
            "codec_pj_per_trit" => &mut self.codec_pj_per_trit,
            "compute_pj_per_toggled_node" => &mut self.compute_pj_per_toggled_node,
            "multiplier_pj_per_toggle" => &mut self.multiplier_pj_per_toggle,
            "static_pj_per_cycle" => &mut self.static_pj_per_cycle,
            "nominal_toggle_prob" => &mut self.nominal_toggle_prob,
            _ => return None,
        })
    }

    /// Parse `key = value` lines; `#` starts a comment. Every key is
    /// required and values must be non-negative.
    pub fn parse(text: &str) -> Result<Self> {
        let z = T::zero();
        let mut m = Self {
            name: String::new(),
            dram_pj_per_bit: z,
            fm_mem_pj_per_bit: z,
            weight_mem_pj_per_bit: z,
            codec_pj_per_trit: z,
            compute_pj_per_toggled_node: z,
            multiplier_pj_per_toggle: z,
            static_pj_per_cycle: z,
            nominal_toggle_prob: z,
        };
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "name" {
                m.name = v.to_string();
                continue;
            }
            let x: f64 = v.parse().map_err(|e| err(format!("{k}: {e}")))?;
            if !(x >= 0.0 && x.is_finite()) {
                return Err(err(format!("{k} must be a non-negative number")));
            }
            *m.field(k).ok_or_else(|| err(format!("unknown key {k:?}")))? = T::of(x);
            seen.push(k.to_string());
        }
        if let Some(missing) = Self::KEYS.iter().find(|k| !seen.iter().any(|s| s == *k)) {
            return Err(Error::Parse {
                line: 0,
                msg: format!("missing key {missing}"),
            });
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The 22 nm SCM constants.
    pub fn gf22_scm() -> Self {
        Self::parse(GF22_SCM).expect("shipped cost model parses")
    }

    pub fn n7() -> Self {
        Self::parse(N7).expect("shipped cost model parses")
    }

    /// The file named by `CUTIE_COST_MODEL`, else the 22 nm constants.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(COST_MODEL_ENV) {
            Some(p) if !p.is_empty() => Self::load(p),
            _ => Ok(Self::gf22_scm()),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("name = {}\n", self.name);
        let mut c = self.clone();
        for k in Self::KEYS {
            s += &format!("{k} = {}\n", c.field(k).unwrap().as_f64());
        }
        s
    }
}

/// Energy items in picojoules.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyItems<T> {
    pub io: T,
    pub fm_memory: T,
    pub weight_memory: T,
    pub codec: T,
    pub popcount: T,
    pub multiplier: T,
    pub static_: T,
}

impl<T: Real> EnergyItems<T> {
    pub const NAMES: [&'static str; 7] = [
        "io",
        "fm_memory",
        "weight_memory",
        "codec",
        "popcount",
        "multiplier",
        "static",
    ];

    pub fn zero() -> Self {
        let z = T::zero();
        Self {
            io: z,
            fm_memory: z,
            weight_memory: z,
            codec: z,
            popcount: z,
            multiplier: z,
            static_: z,
        }
    }

    pub fn values(&self) -> [T; 7] {
        [
            self.io,
            self.fm_memory,
            self.weight_memory,
            self.codec,
            self.popcount,
            self.multiplier,
            self.static_,
        ]
    }

    pub fn total(&self) -> T {
        self.values().into_iter().fold(T::zero(), |a, b| a + b)
    }

    /// Everything but I/O.
    pub fn core(&self) -> T {
        self.values()[1..].iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn compute(&self) -> T {
        self.popcount + self.multiplier
    }

    pub fn add(&mut self, o: &Self) {
        self.io += o.io;
        self.fm_memory += o.fm_memory;
        self.weight_memory += o.weight_memory;
        self.codec += o.codec;
        self.popcount += o.popcount;
        self.multiplier += o.multiplier;
        self.static_ += o.static_;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerEnergy<T> {
    pub layer: usize,
    pub cycles: u64,
    pub ops: u64,
    pub adder_toggles: u64,
    pub multiplier_toggles: u64,
    pub items: EnergyItems<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport<T> {
    pub layers: Vec<LayerEnergy<T>>,
    /// Sum over layers.
    pub total: EnergyItems<T>,
}

impl<T: Real> EnergyReport<T> {
    fn from_layers(layers: Vec<LayerEnergy<T>>) -> Self {
        let mut total = EnergyItems::zero();
        for l in &layers {
            total.add(&l.items);
        }
        Self { layers, total }
    }

    pub fn total_pj(&self) -> T {
        self.total.total()
    }

    pub fn core_pj(&self) -> T {
        self.total.core()
    }

    pub fn total_ops(&self) -> u64 {
        self.layers.iter().map(|l| l.ops).sum()
    }

    /// Operations per joule over the core energy, in TOp/s/W.
    pub fn tops_per_watt(&self) -> f64 {
        // ops / pJ = TOp/J
        self.total_ops() as f64 / self.core_pj().as_f64()
    }
}

/// Energy of a trace given its toggle counts (unrolled mode).
pub fn energy_from_toggles<T: Real>(trace: &SimTrace, toggles: &ToggleStats, cost: &CostModel<T>) -> Result<EnergyReport<T>> {
    if toggles.layers.len() != trace.layers.len() {
        return Err(Error::Shape(format!(
            "{} toggle rows for {} layers",
            toggles.layers.len(),
            trace.layers.len()
        )));
    }
    let bpt = T::of(BITS_PER_TRIT);
    let word = trace.arch.word_trits() as u64;
    let n = trace.layers.len();
    let layers = trace
        .layers
        .iter()
        .zip(&toggles.layers)
        .enumerate()
        .map(|(i, (l, t))| {
            let fm_trits = (l.words_read + l.words_written) * word;
            let mut io_trits = 0;
            if i == 0 {
                io_trits += trace.input_trits;
            }
            if i + 1 == n {
                io_trits += trace.output_trits;
            }
            let of = |v: u64| T::of(v as f64);
            LayerEnergy {
                layer: l.index,
                cycles: l.cycles.total(),
                ops: l.ops(),
                adder_toggles: t.adder_toggles,
                multiplier_toggles: t.multiplier_toggles,
                items: EnergyItems {
                    io: of(io_trits) * bpt * cost.dram_pj_per_bit,
                    fm_memory: of(fm_trits) * bpt * cost.fm_mem_pj_per_bit,
                    weight_memory: of(l.weight_trits_loaded) * bpt * cost.weight_mem_pj_per_bit,
                    codec: of(fm_trits + l.weight_trits_loaded) * cost.codec_pj_per_trit,
                    popcount: of(t.adder_toggles) * cost.compute_pj_per_toggled_node,
                    multiplier: of(t.multiplier_toggles) * cost.multiplier_pj_per_toggle,
                    static_: of(l.cycles.total()) * cost.static_pj_per_cycle,
                },
            }
        })
        .collect();
    Ok(EnergyReport::from_layers(layers))
}

/// Energy of a recorded trace.
pub fn energy_estimate<T: Real>(trace: &SimTrace, cost: &CostModel<T>) -> Result<EnergyReport<T>> {
    let toggles = count_toggles(trace, ToggleMode::Unrolled)?;
    energy_from_toggles(trace, &toggles, cost)
}

/// Binary-equivalent estimate: memory items divided by 1.6, popcount
/// halved, codec removed.
pub fn binary_discount<T: Real>(report: &EnergyReport<T>) -> EnergyReport<T> {
    let bpt = T::of(BITS_PER_TRIT);
    let two = T::of(2.0);
    let layers = report
        .layers
        .iter()
        .map(|l| {
            let i = l.items;
            LayerEnergy {
                items: EnergyItems {
                    fm_memory: i.fm_memory / bpt,
                    weight_memory: i.weight_memory / bpt,
                    codec: T::zero(),
                    popcount: i.popcount / two,
                    ..i
                },
                ..l.clone()
            }
        })
        .collect();
    EnergyReport::from_layers(layers)
}
