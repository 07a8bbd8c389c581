//! Cycle-approximate simulator.
//!
//! Each layer runs in two phases: a weight load into the idle OCU bank and
//! the execution of every window. Loads of layer `k + 1` overlap the
//! execution of layer `k`, so only the first layer of a program (and any
//! load longer than the previous execution) is exposed.
//!
//! Cycle model of one execution phase:
//!
//! ```text
//! execute = ISSUE + prime + sum(row stalls) + Ho * Wo + P
//! ```
//!
//! * `ISSUE` (1 cycle) decodes the layer instruction.
//! * `prime` is one cycle per tile-buffer read before the first window.
//!   A line of `W` pixels takes `ceil(W / K)` reads of up to `K` pixels.
//! * At each later row advance with `n` new lines (`R = n * ceil(W / K)`
//!   reads) the [`RowAdvance::Stall`] mode stalls
//!   `n + max(0, R - n - Wo)` cycles, hiding the other reads under the
//!   previous row's compute cycles. [`RowAdvance::Hide`] stalls only
//!   `max(0, R - Wo)`.
//! * One window issues per compute cycle; `P` cycles drain the pipeline.
//! * A weight load takes `K^2 * W_S` cycles (one word per OCU per cycle).
//!
//! Dense layers read the whole input during priming and compute in one
//! cycle. OCUs are grouped into `P` stages of `N_O / P` units; stages whose
//! channels all exceed `out_ch` are silenced.

pub mod ocu;
pub mod pool;
pub mod tile_buffer;
pub mod trace_io;

use std::ops::Range;

use crate::compiler::{CompiledProgram, LayerInstr, ThresholdPair};
use crate::error::{Error, Result};
use crate::network::ArchConfig;
use crate::tensor::Tensor;
use crate::trit::{Trit, TritPlanes};

pub use ocu::{Ocu, OcuOutput};
pub use pool::{PoolOp, PoolUnit};
pub use tile_buffer::{dense_window, FeatureMap, Release, TileBuffer};

/// Cycles to decode a layer instruction.
pub const ISSUE_CYCLES: u64 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RowAdvance {
    /// Stall for the new lines and any reads that do not fit under the
    /// previous row.
    #[default]
    Stall,
    /// Hide as many line reads as possible under the previous row.
    Hide,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimOptions {
    pub row_advance: RowAdvance,
    /// Keep per-cycle records.
    pub record: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            row_advance: RowAdvance::Stall,
            record: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Phase {
    Load = 0,
    Issue = 1,
    Prime = 2,
    Stall = 3,
    Compute = 4,
    Drain = 5,
}

impl Phase {
    pub fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            0 => Phase::Load,
            1 => Phase::Issue,
            2 => Phase::Prime,
            3 => Phase::Stall,
            4 => Phase::Compute,
            5 => Phase::Drain,
            _ => return Err(Error::Format(format!("unknown phase {v}"))),
        })
    }
}

/// One simulated cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleRecord {
    pub cycle: u64,
    /// Layer index counted across all simulated programs.
    pub layer: usize,
    pub phase: Phase,
    pub active_stages: usize,
    pub center: Option<(usize, usize)>,
    /// Released window, compute cycles only.
    pub window: Option<TritPlanes>,
    /// Accumulator per OCU (`N_O` entries, silenced OCUs read 0), empty
    /// outside compute cycles.
    pub acc: Vec<i64>,
    /// Pooling-stage value per OCU.
    pub pooled: Vec<i64>,
    /// Output trit per OCU with its validity (`N_O` entries), empty when
    /// nothing is written.
    pub out: Vec<Trit>,
    pub out_valid: Vec<bool>,
    /// Tile-buffer read operations this cycle.
    pub read_ops: usize,
    pub words_read: usize,
    pub words_written: usize,
}

impl CycleRecord {
    fn idle(cycle: u64, layer: usize, phase: Phase, active_stages: usize) -> Self {
        Self {
            cycle,
            layer,
            phase,
            active_stages,
            center: None,
            window: None,
            acc: Vec::new(),
            pooled: Vec::new(),
            out: Vec::new(),
            out_valid: Vec::new(),
            read_ops: 0,
            words_read: 0,
            words_written: 0,
        }
    }

    pub fn outputs_valid(&self) -> bool {
        self.out_valid.iter().any(|&v| v)
    }
}

/// Cycle breakdown of one layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LayerCycles {
    /// Cycles the weight load takes.
    pub load: u64,
    /// Load cycles not hidden under the previous layer.
    pub exposed_load: u64,
    pub issue: u64,
    pub prime: u64,
    pub stall: u64,
    pub compute: u64,
    pub drain: u64,
}

impl LayerCycles {
    /// From instruction issue to the last output write.
    pub fn execute(&self) -> u64 {
        self.issue + self.prime + self.stall + self.compute + self.drain
    }

    pub fn total(&self) -> u64 {
        self.exposed_load + self.execute()
    }

    /// Execute cycles beyond one per window.
    pub fn overhead(&self) -> u64 {
        self.execute() - self.compute
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerTrace {
    pub index: usize,
    pub instr: LayerInstr,
    /// Kernel slot of each of the `out_ch` OCUs.
    pub weights: Vec<TritPlanes>,
    pub thresholds: Vec<ThresholdPair>,
    pub cycles: LayerCycles,
    pub read_ops: u64,
    pub words_read: u64,
    pub words_written: u64,
    pub weight_trits_loaded: u64,
    pub active_stages: usize,
    pub max_abs_acc: i64,
    /// Records of this layer, empty when recording is off.
    pub records: Range<usize>,
}

impl LayerTrace {
    pub fn ops(&self) -> u64 {
        self.instr.ops()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimTrace {
    pub arch: ArchConfig,
    pub layers: Vec<LayerTrace>,
    pub records: Vec<CycleRecord>,
    pub total_cycles: u64,
    /// Network input and output sizes, in trits.
    pub input_trits: u64,
    pub output_trits: u64,
}

impl SimTrace {
    fn empty(arch: ArchConfig) -> Self {
        Self {
            arch,
            layers: Vec::new(),
            records: Vec::new(),
            total_cycles: 0,
            input_trits: 0,
            output_trits: 0,
        }
    }

    /// Chain the trace of a following program onto this one.
    pub fn append(&mut self, mut next: SimTrace) {
        let (c0, l0, r0) = (self.total_cycles, self.layers.len(), self.records.len());
        for l in &mut next.layers {
            l.index += l0;
            l.records = l.records.start + r0..l.records.end + r0;
        }
        for r in &mut next.records {
            r.cycle += c0;
            r.layer += l0;
        }
        if self.layers.is_empty() {
            self.input_trits = next.input_trits;
        }
        self.output_trits = next.output_trits;
        self.total_cycles += next.total_cycles;
        self.layers.extend(next.layers);
        self.records.extend(next.records);
    }

    pub fn is_recorded(&self) -> bool {
        self.records.len() as u64 == self.total_cycles && self.total_cycles > 0
    }

    pub fn layer_records(&self, layer: usize) -> &[CycleRecord] {
        &self.records[self.layers[layer].records.clone()]
    }

    pub fn total_ops(&self) -> u64 {
        self.layers.iter().map(|l| l.ops()).sum()
    }

    pub fn words_read(&self) -> u64 {
        self.layers.iter().map(|l| l.words_read).sum()
    }

    pub fn words_written(&self) -> u64 {
        self.layers.iter().map(|l| l.words_written).sum()
    }

    /// Rebuild a trace from its programs and per-cycle records, as read
    /// back from a trace file.
    pub fn rebuild(programs: &[CompiledProgram], records: Vec<CycleRecord>) -> Result<SimTrace> {
        let arch = programs
            .first()
            .map(|p| p.arch)
            .ok_or_else(|| Error::Format("no programs".into()))?;
        let mut trace = SimTrace::empty(arch);
        let mut index = 0;
        for p in programs {
            if p.arch != arch {
                return Err(Error::Format("programs target different architectures".into()));
            }
            for li in 0..p.instrs.len() {
                trace.layers.push(new_layer_trace(p, li, index));
                index += 1;
            }
        }
        trace.input_trits = programs[0].input_dims().map_or(0, trits_of);
        trace.output_trits = programs.last().and_then(|p| p.output_dims()).map_or(0, trits_of);
        let mut start = vec![usize::MAX; trace.layers.len()];
        for (i, r) in records.iter().enumerate() {
            if r.cycle != i as u64 {
                return Err(Error::Format(format!("record {i} has cycle {}", r.cycle)));
            }
            let l = trace
                .layers
                .get_mut(r.layer)
                .ok_or_else(|| Error::Format(format!("record {i} names layer {}", r.layer)))?;
            if start[r.layer] == usize::MAX {
                start[r.layer] = i;
                l.records = i..i;
            }
            if l.records.end != i {
                return Err(Error::Format(format!("records of layer {} are not contiguous", r.layer)));
            }
            l.records.end = i + 1;
            let c = &mut l.cycles;
            match r.phase {
                Phase::Load => c.exposed_load += 1,
                Phase::Issue => c.issue += 1,
                Phase::Prime => c.prime += 1,
                Phase::Stall => c.stall += 1,
                Phase::Compute => c.compute += 1,
                Phase::Drain => c.drain += 1,
            }
            l.read_ops += r.read_ops as u64;
            l.words_read += r.words_read as u64;
            l.words_written += r.words_written as u64;
            l.max_abs_acc = r.acc.iter().fold(l.max_abs_acc, |m, a| m.max(a.abs()));
        }
        trace.total_cycles = records.len() as u64;
        trace.records = records;
        Ok(trace)
    }
}

fn trits_of(d: (usize, usize, usize)) -> u64 {
    (d.0 * d.1 * d.2) as u64
}

/// Kernel slots of the OCUs of one layer.
pub fn layer_kernels(prog: &CompiledProgram, layer: usize) -> Vec<TritPlanes> {
    let wt = prog.arch.window_trits();
    let instr = &prog.instrs[layer];
    (0..instr.out_ch)
        .map(|o| {
            let base = instr.weight_base + o * wt;
            let mut p = TritPlanes::zeros(wt);
            for j in 0..wt {
                let t = prog.weight_image.get(base + j);
                if !t.is_zero() {
                    p.set(j, t);
                }
            }
            p
        })
        .collect()
}

/// Stages holding at least one used output channel.
pub fn active_stages(arch: &ArchConfig, out_ch: usize) -> usize {
    out_ch.div_ceil(arch.word_trits()).min(arch.p)
}

/// Cycles to load one layer's weights.
pub fn weight_load_cycles(arch: &ArchConfig) -> u64 {
    (arch.k * arch.k * arch.w_s) as u64
}

fn new_layer_trace(prog: &CompiledProgram, li: usize, index: usize) -> LayerTrace {
    let arch = &prog.arch;
    let instr = prog.instrs[li];
    LayerTrace {
        index,
        instr,
        weights: layer_kernels(prog, li),
        thresholds: prog.thresholds(li).to_vec(),
        cycles: LayerCycles {
            load: weight_load_cycles(arch),
            ..Default::default()
        },
        read_ops: 0,
        words_read: 0,
        words_written: 0,
        weight_trits_loaded: (instr.out_ch * arch.window_trits()) as u64,
        active_stages: active_stages(arch, instr.out_ch),
        max_abs_acc: 0,
        records: 0..0,
    }
}

struct Run<'a> {
    arch: &'a ArchConfig,
    opts: SimOptions,
    cycle: u64,
    records: Vec<CycleRecord>,
}

impl Run<'_> {
    fn push(&mut self, rec: impl FnOnce(u64) -> CycleRecord) {
        if self.opts.record {
            let r = rec(self.cycle);
            self.records.push(r);
        }
        self.cycle += 1;
    }

    fn idle(&mut self, lt: &mut LayerTrace, phase: Phase) {
        let (layer, stages) = (lt.index, lt.active_stages);
        self.push(|c| CycleRecord::idle(c, layer, phase, stages));
    }

    /// Word counts of the reads that fetch the given lines.
    fn line_reads(&self, lines: usize, w: usize) -> Vec<usize> {
        let k = self.arch.k;
        let per_line: Vec<usize> = (0..w.div_ceil(k))
            .map(|j| (w - j * k).min(k) * self.arch.w_s)
            .collect();
        (0..lines).flat_map(|_| per_line.iter().copied()).collect()
    }

    /// A cycle that performs one tile-buffer read.
    fn read_cycle(&mut self, lt: &mut LayerTrace, phase: Phase, words: usize) {
        lt.read_ops += 1;
        lt.words_read += words as u64;
        let (layer, stages) = (lt.index, lt.active_stages);
        self.push(|c| {
            let mut r = CycleRecord::idle(c, layer, phase, stages);
            r.read_ops = 1;
            r.words_read = words;
            r
        });
    }
}

fn execute_layer(
    run: &mut Run,
    prog: &CompiledProgram,
    li: usize,
    lt: &mut LayerTrace,
    ocus: &mut [Ocu],
    fm: &FeatureMap,
) -> Result<FeatureMap> {
    let arch = run.arch;
    let instr = prog.instrs[li];
    let (oh, ow, oc) = instr.out_dims();
    let width = arch.n_i.max(arch.n_o);
    let mut out = FeatureMap::zeros(oh, ow, oc, width);
    let words_per_write = lt.active_stages;
    let (ph, pw) = instr.pooling.window();
    let c0 = run.cycle;
    let r0 = run.records.len();

    run.idle(lt, Phase::Issue);
    lt.cycles.issue = ISSUE_CYCLES;

    for (o, ocu) in ocus.iter_mut().enumerate().take(instr.out_ch) {
        ocu.start_layer(prog.thresholds(li)[o], instr.pooling, instr.conv_out_dims().1);
    }

    let mut compute = |run: &mut Run, lt: &mut LayerTrace, rel: &Release, out: &mut FeatureMap| -> Result<usize> {
        let mut acc = vec![0i64; arch.n_o];
        let mut pooled = vec![0i64; arch.n_o];
        let mut trits = vec![Trit::Zero; arch.n_o];
        let mut valid = vec![false; arch.n_o];
        let mut px = TritPlanes::zeros(width);
        let mut emitted = false;
        for (o, ocu) in ocus.iter_mut().enumerate().take(instr.out_ch) {
            let r = ocu.cycle(&rel.window, rel.out_pos)?;
            acc[o] = r.intermediate;
            pooled[o] = r.pooled;
            lt.max_abs_acc = lt.max_abs_acc.max(r.intermediate.abs());
            if let Some(t) = r.out {
                trits[o] = t;
                valid[o] = true;
                px.set(o, t);
                emitted = true;
            }
        }
        let written = if emitted { words_per_write } else { 0 };
        if emitted {
            out.set_pixel(rel.out_pos.0 / ph, rel.out_pos.1 / pw, px);
            lt.words_written += written as u64;
        }
        let (layer, stages) = (lt.index, lt.active_stages);
        run.push(|c| CycleRecord {
            cycle: c,
            layer,
            phase: Phase::Compute,
            active_stages: stages,
            center: Some(rel.center),
            window: Some(rel.window.clone()),
            acc,
            pooled,
            out: if emitted { trits } else { Vec::new() },
            out_valid: if emitted { valid } else { Vec::new() },
            read_ops: 0,
            words_read: 0,
            words_written: written,
        });
        Ok(1)
    };

    if instr.is_dense() {
        for words in run.line_reads(fm.h, fm.w) {
            run.read_cycle(lt, Phase::Prime, words);
            lt.cycles.prime += 1;
        }
        let rel = Release {
            center: (0, 0),
            out_pos: (0, 0),
            window: dense_window(fm, arch.window_trits()),
            new_lines: (0..fm.h).collect(),
            row_start: true,
        };
        lt.cycles.compute += compute(run, lt, &rel, &mut out)? as u64;
    } else {
        let mut tb = TileBuffer::new(arch.k, arch.n_i, &instr);
        let mut first = true;
        let mut row_compute_end = r0;
        while let Some(rel) = tb.next_window(fm) {
            if rel.row_start {
                let reads = run.line_reads(rel.new_lines.len(), fm.w);
                if first {
                    for words in reads {
                        run.read_cycle(lt, Phase::Prime, words);
                        lt.cycles.prime += 1;
                    }
                    first = false;
                } else if !reads.is_empty() {
                    let n = rel.new_lines.len();
                    let total = reads.len();
                    let wo = tb.output_dims().1;
                    let stall = match run.opts.row_advance {
                        RowAdvance::Stall => n + total.saturating_sub(n + wo),
                        RowAdvance::Hide => total.saturating_sub(wo),
                    };
                    let hidden = total - stall;
                    // hidden reads occupy the last compute cycles of the previous row
                    for (j, &words) in reads[..hidden].iter().enumerate() {
                        lt.read_ops += 1;
                        lt.words_read += words as u64;
                        if run.opts.record {
                            let r = &mut run.records[row_compute_end - hidden + j];
                            r.read_ops += 1;
                            r.words_read += words;
                        }
                    }
                    for &words in &reads[hidden..] {
                        run.read_cycle(lt, Phase::Stall, words);
                        lt.cycles.stall += 1;
                    }
                }
            }
            lt.cycles.compute += compute(run, lt, &rel, &mut out)? as u64;
            row_compute_end = run.records.len();
        }
    }

    for _ in 0..arch.p {
        run.idle(lt, Phase::Drain);
    }
    lt.cycles.drain = arch.p as u64;
    debug_assert_eq!(run.cycle - c0, lt.cycles.execute());
    Ok(out)
}

/// Simulate one program.
pub fn run_program(
    prog: &CompiledProgram,
    input: &Tensor<Trit>,
    opts: SimOptions,
) -> Result<(Tensor<Trit>, SimTrace)> {
    prog.check()?;
    let arch = &prog.arch;
    if let Some(d) = prog.input_dims() {
        if input.hwc()? != d {
            return Err(Error::Shape(format!(
                "input {:?} does not match program input {:?}",
                input.dims(),
                d
            )));
        }
    }
    let mut run = Run {
        arch,
        opts,
        cycle: 0,
        records: Vec::new(),
    };
    let mut trace = SimTrace::empty(*arch);
    trace.input_trits = input.len() as u64;
    let width = arch.n_i.max(arch.n_o);
    let mut fm = FeatureMap::from_tensor(input, width)?;
    let mut ocus: Vec<Ocu> = (0..arch.n_o).map(|_| Ocu::new(arch.window_trits())).collect();
    let mut prev_execute = None;

    for li in 0..prog.instrs.len() {
        let mut lt = new_layer_trace(prog, li, li);
        let r0 = run.records.len();
        for (ocu, w) in ocus.iter_mut().zip(&lt.weights) {
            ocu.load_bank(w.clone());
        }
        lt.cycles.exposed_load = match prev_execute {
            None => lt.cycles.load,
            Some(e) => lt.cycles.load.saturating_sub(e),
        };
        for _ in 0..lt.cycles.exposed_load {
            run.idle(&mut lt, Phase::Load);
        }
        fm = execute_layer(&mut run, prog, li, &mut lt, &mut ocus, &fm)?;
        prev_execute = Some(lt.cycles.execute());
        if opts.record {
            lt.records = r0..run.records.len();
        }
        trace.layers.push(lt);
    }

    let output = if prog.instrs.is_empty() {
        input.clone()
    } else {
        fm.to_tensor()
    };
    trace.output_trits = output.len() as u64;
    trace.total_cycles = run.cycle;
    trace.records = run.records;
    Ok((output, trace))
}

/// Simulate consecutive program segments, chaining feature maps on chip.
pub fn run_segments(
    progs: &[CompiledProgram],
    input: &Tensor<Trit>,
    opts: SimOptions,
) -> Result<(Tensor<Trit>, SimTrace)> {
    let arch = progs
        .first()
        .map(|p| p.arch)
        .ok_or_else(|| Error::Shape("no programs to run".into()))?;
    let mut trace = SimTrace::empty(arch);
    let mut cur = input.clone();
    for p in progs {
        let (out, t) = run_program(p, &cur, opts)?;
        trace.append(t);
        cur = out;
    }
    Ok((cur, trace))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleReport {
    pub layer: usize,
    /// Exposed load plus execute cycles.
    pub cycles: u64,
    pub execute_cycles: u64,
    pub ops: u64,
    /// Operations per execute cycle.
    pub ops_per_cycle: f64,
    /// `ops_per_cycle` over the array's peak.
    pub utilization: f64,
}

pub fn cycle_report(trace: &SimTrace, layer: usize) -> CycleReport {
    let l = &trace.layers[layer];
    let execute = l.cycles.execute();
    let ops = l.ops();
    let opc = ops as f64 / execute as f64;
    CycleReport {
        layer,
        cycles: l.cycles.total(),
        execute_cycles: execute,
        ops,
        ops_per_cycle: opc,
        utilization: opc / trace.arch.peak_ops_per_cycle() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::emit_program;
    use crate::golden;
    use crate::network::{Encoder, LayerDesc, NetworkDesc, Padding, Weights};
    use crate::network::zoo::{random_input, random_trits};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_conv(h: usize, w: usize, ci: usize, co: usize, stride: usize) -> NetworkDesc<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let wt = random_trits(&mut rng, &[co, 3, 3, ci], 0.5);
        let conv = LayerDesc::conv(ci, co, (3, 3), (stride, stride), Padding::Full, Weights::Ternary(wt));
        NetworkDesc {
            input_dims: (h, w, ci),
            encoder: Encoder::RawTrits,
            layers: vec![conv],
        }
    }

    #[test]
    fn identity_on_one_pixel() {
        let w = Weights::Ternary(Tensor::filled(&[1, 1, 1, 1], Trit::Pos).unwrap());
        let conv = LayerDesc::<f64>::conv(1, 1, (1, 1), (1, 1), Padding::Full, w);
        let net = NetworkDesc {
            input_dims: (1, 1, 1),
            encoder: Encoder::RawTrits,
            layers: vec![conv],
        };
        let prog = emit_program(&net, &ArchConfig::default()).unwrap();
        assert_eq!(prog.thresholds(0)[0], ThresholdPair::new(0, 1));
        for t in [Trit::Neg, Trit::Zero, Trit::Pos] {
            let x = Tensor::filled(&[1, 1, 1], t).unwrap();
            let (y, tr) = run_program(&prog, &x, SimOptions::default()).unwrap();
            assert_eq!(y.data(), &[t]);
            assert_eq!(tr.layers[0].cycles.compute, 1);
        }
    }

    #[test]
    fn full_layer_cycle_model() {
        let net = single_conv(32, 32, 128, 128, 1);
        let prog = emit_program(&net, &ArchConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_input(&mut rng, (32, 32, 128), 0.6);
        let (y, tr) = run_program(&prog, &x, SimOptions::default()).unwrap();
        assert_eq!(y, golden::run_program(&prog, &x).unwrap());
        let c = tr.layers[0].cycles;
        assert_eq!((c.issue, c.prime, c.stall, c.compute, c.drain), (1, 22, 30, 1024, 4));
        assert_eq!(c.execute(), 1081);
        assert_eq!(c.exposed_load, 36);
        assert_eq!(tr.records.len() as u64, tr.total_cycles);
        let rep = cycle_report(&tr, 0);
        assert!(rep.ops_per_cycle >= 0.8 * 294_912.0);
        // every line is read exactly once, K pixels per read at most
        assert_eq!(tr.layers[0].words_read, 32 * 32 * 4);
        assert!(tr.records.iter().all(|r| r.words_read <= 3 * 4));
        assert_eq!(tr.layers[0].words_written, 1024 * 4);

        let (_, hide) = run_program(
            &prog,
            &x,
            SimOptions {
                row_advance: RowAdvance::Hide,
                record: false,
            },
        )
        .unwrap();
        assert_eq!(hide.layers[0].cycles.stall, 0);
        assert_eq!(hide.layers[0].words_read, 32 * 32 * 4);
    }

    #[test]
    fn strided_layer() {
        let net = single_conv(32, 32, 8, 8, 2);
        let prog = emit_program(&net, &ArchConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_input(&mut rng, (32, 32, 8), 0.3);
        let (y, _) = run_program(&prog, &x, SimOptions::default()).unwrap();
        assert_eq!(y.dims(), &[16, 16, 8]);
        assert_eq!(y, golden::run_program(&prog, &x).unwrap());
    }

    #[test]
    fn silenced_stages() {
        let net = single_conv(8, 8, 16, 64, 1);
        let prog = emit_program(&net, &ArchConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_input(&mut rng, (8, 8, 16), 0.3);
        let (_, tr) = run_program(&prog, &x, SimOptions::default()).unwrap();
        assert_eq!(tr.layers[0].active_stages, 2);
        for r in tr.layer_records(0).iter().filter(|r| r.phase == Phase::Compute) {
            assert!(r.acc[64..].iter().all(|&a| a == 0));
            assert!(!r.out_valid[64..].iter().any(|&v| v));
            assert_eq!(r.words_written, 2);
        }
    }

    #[test]
    fn second_layer_load_is_hidden() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut net = single_conv(8, 8, 4, 4, 1);
        let w2 = Weights::Ternary(random_trits(&mut rng, &[4, 3, 3, 4], 0.5));
        let c2 = LayerDesc::conv(4, 4, (3, 3), (1, 1), Padding::Full, w2);
        net.layers.push(c2);
        let prog = emit_program(&net, &ArchConfig::default()).unwrap();
        let x = random_input(&mut rng, (8, 8, 4), 0.3);
        let (y, tr) = run_program(&prog, &x, SimOptions::default()).unwrap();
        assert_eq!(y, golden::run_program(&prog, &x).unwrap());
        assert_eq!(tr.layers[0].cycles.exposed_load, 36);
        assert!(tr.layers[0].cycles.execute() >= 36);
        assert_eq!(tr.layers[1].cycles.exposed_load, 0);
        let sum: u64 = tr.layers.iter().map(|l| l.cycles.total()).sum();
        assert_eq!(sum, tr.total_cycles);
    }

    #[test]
    fn rebuild_matches_live_trace() {
        let net = single_conv(6, 5, 3, 5, 1);
        let prog = emit_program(&net, &ArchConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = random_input(&mut rng, (6, 5, 3), 0.3);
        let (_, tr) = run_program(&prog, &x, SimOptions::default()).unwrap();
        let rebuilt = SimTrace::rebuild(std::slice::from_ref(&prog), tr.records.clone()).unwrap();
        assert_eq!(rebuilt, tr);
    }
}
