use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use cutie::activity::report::{write_cycle_csv, write_energy_csv, write_tiling_csv, write_toggle_csv};
use cutie::activity::{
    binary_discount, count_toggles, energy_from_toggles, tiling_transfer, TilingPlan, TilingStrategy, ToggleMode,
};
use cutie::compiler::program_io::{load_program, save_program};
use cutie::compiler::{emit_program, emit_segments, layer_table, CompiledProgram, Pooling};
use cutie::network::io::{load_tensor, save_tensor, TensorData};
use cutie::network::manifest::{load_network, save_network};
use cutie::network::zoo::{
    encode_reference_input, random_input, random_network, reference_cnn, smooth_image, RandomNetOptions,
    ZooOptions,
};
use cutie::network::{encode_image, Encoder};
use cutie::quantizer::{quantize_incremental, Identity, QuantSchedule, QuantStrategy};
use cutie::sim::trace_io::{load_trace, save_trace};
use cutie::sim::{SimOptions, SimTrace};
use cutie::{golden, sim, PackedTritTensor, Tensor, Trit};

use crate::config::RunConfig;
use crate::{numbered, Mismatch, Usage};

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn csv_writer(w: impl Write) -> csv::Writer<impl Write> {
    csv::Writer::from_writer(w)
}

fn pack(t: &Tensor<Trit>) -> Result<PackedTritTensor> {
    Ok(PackedTritTensor::from_trits(t.dims(), t.data())?)
}

fn load_programs(paths: &[PathBuf]) -> Result<Vec<CompiledProgram>> {
    paths
        .iter()
        .map(|p| load_program(p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

/// `64`, `64x48` or `64,48`.
fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(['x', 'X', ',']).collect();
    let num = |p: &str| p.trim().parse::<usize>().map_err(|_| format!("bad size `{s}`"));
    match parts[..] {
        [a] => {
            let n = num(a)?;
            Ok((n, n))
        }
        [a, b] => Ok((num(a)?, num(b)?)),
        _ => Err(format!("expected N or HxW, got `{s}`")),
    }
}

fn pooling_name(p: Pooling) -> String {
    match p {
        Pooling::None => "none".into(),
        Pooling::Max { ph, pw } => format!("max{ph}x{pw}"),
        Pooling::Avg { ph, pw } => format!("avg{ph}x{pw}"),
    }
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    /// Network manifest.
    pub net: PathBuf,
    /// Program file; numbered `name.N.ctprog` when the network needs several programs.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Write per-channel thresholds as CSV.
    #[arg(long)]
    pub dump_thresholds: Option<PathBuf>,
    /// Fail instead of splitting a network deeper than the layer queue.
    #[arg(long)]
    pub no_split: bool,
}

pub fn compile(cfg: &RunConfig, a: CompileArgs) -> Result<()> {
    let net = load_network::<f64>(&a.net).with_context(|| format!("loading {}", a.net.display()))?;
    let progs = if a.no_split {
        vec![emit_program(&net, &cfg.arch)?]
    } else {
        emit_segments(&net, &cfg.arch)?
    };
    let paths: Vec<PathBuf> = if progs.len() == 1 {
        vec![a.out.clone()]
    } else {
        (0..progs.len()).map(|i| numbered(&a.out, i)).collect()
    };
    for (p, path) in progs.iter().zip(&paths) {
        save_program(path, p)?;
        eprintln!("wrote {}", path.display());
    }

    let mut c = csv_writer(io::stdout().lock());
    c.write_record([
        "program", "layer", "kind", "in_h", "in_w", "in_c", "out_h", "out_w", "out_c", "kernel", "stride", "pooling",
        "ops", "t_min", "t_max",
    ])?;
    for (s, p) in progs.iter().enumerate() {
        for r in layer_table(p) {
            c.write_record([
                s.to_string(),
                r.index.to_string(),
                r.kind.to_string(),
                r.in_dims.0.to_string(),
                r.in_dims.1.to_string(),
                r.in_dims.2.to_string(),
                r.out_dims.0.to_string(),
                r.out_dims.1.to_string(),
                r.out_dims.2.to_string(),
                format!("{}x{}", r.kernel.0, r.kernel.1),
                format!("{}x{}", r.stride.0, r.stride.1),
                pooling_name(r.pooling),
                r.ops.to_string(),
                r.t_min.to_string(),
                r.t_max.to_string(),
            ])?;
        }
    }
    c.flush()?;

    if let Some(path) = &a.dump_thresholds {
        let mut c = csv_writer(BufWriter::new(File::create(path)?));
        c.write_record(["program", "layer", "channel", "t_lo", "t_hi"])?;
        for (s, p) in progs.iter().enumerate() {
            for l in 0..p.instrs.len() {
                for (ch, t) in p.thresholds(l).iter().enumerate() {
                    c.write_record([
                        s.to_string(),
                        l.to_string(),
                        ch.to_string(),
                        t.t_lo.to_string(),
                        t.t_hi.to_string(),
                    ])?;
                }
            }
        }
        c.flush()?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Programs, run in order.
    #[arg(required = true)]
    pub programs: Vec<PathBuf>,
    /// Trit input tensor; a seeded random input when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Zero fraction of the random input.
    #[arg(long, default_value_t = 0.5)]
    pub input_zero_fraction: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the per-cycle trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Run the golden model instead of the simulator.
    #[arg(long, conflicts_with_all = ["check", "trace"])]
    pub reference: bool,
    /// Run both and compare.
    #[arg(long)]
    pub check: bool,
}

fn first_difference(a: &Tensor<Trit>, b: &Tensor<Trit>) -> Option<usize> {
    if a.dims() != b.dims() {
        return Some(0);
    }
    a.data().iter().zip(b.data()).position(|(x, y)| x != y)
}

pub fn run(cfg: &RunConfig, a: RunArgs) -> Result<()> {
    let progs = load_programs(&a.programs)?;
    let dims = progs[0].input_dims().ok_or_else(|| Usage("program has no layers".into()))?;
    let input: Tensor<Trit> = match &a.input {
        Some(p) => {
            let t = match load_tensor(p).with_context(|| format!("loading {}", p.display()))? {
                TensorData::Trits(t) => Tensor::from(&t),
                other => bail!(Usage(format!("{} holds a non-trit tensor {:?}", p.display(), other.dims()))),
            };
            if t.dims() != [dims.0, dims.1, dims.2] {
                bail!(Usage(format!("input {:?} does not match program input {dims:?}", t.dims())));
            }
            t
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            random_input(&mut rng, dims, a.input_zero_fraction)
        }
    };

    let mut out = io::stdout().lock();
    let output = if a.reference {
        golden::run_segments(&progs, &input)?
    } else {
        let opts = SimOptions {
            row_advance: cfg.row_advance,
            record: a.trace.is_some(),
        };
        let (output, trace) = sim::run_segments(&progs, &input, opts)?;
        writeln!(out, "cycles = {}", trace.total_cycles)?;
        writeln!(out, "ops = {}", trace.total_ops())?;
        if let Some(path) = &a.trace {
            save_trace(path, &trace.arch, &trace.records)?;
            eprintln!("wrote {}", path.display());
        }
        if a.check {
            let golden = golden::run_segments(&progs, &input)?;
            if let Some(i) = first_difference(&output, &golden) {
                let get = |t: &Tensor<Trit>| t.data().get(i).map_or(0, |x| x.value());
                bail!(Mismatch {
                    index: i,
                    simulator: get(&output),
                    golden: get(&golden),
                });
            }
            writeln!(out, "MATCH")?;
        }
        output
    };
    let (h, w, c) = output.hwc()?;
    writeln!(out, "output_dims = {h},{w},{c}")?;
    match &a.output {
        Some(p) => save_tensor(p, &TensorData::Trits(pack(&output)?))?,
        None => {
            let vals: Vec<String> = output.data().iter().map(|t| t.value().to_string()).collect();
            writeln!(out, "output = {}", vals.join(","))?;
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    /// ternary or binary thermometer.
    #[arg(long, default_value = "ternary")]
    pub encoder: String,
    /// Channels per value.
    #[arg(short, long)]
    pub m: usize,
    /// Comma-separated pixel values, encoded as a 1 x n x 1 image.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "image")]
    pub values: Vec<i64>,
    /// int32 `(H, W, colors)` image tensor.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Trit tensor output; CSV rows of trits per pixel on stdout otherwise.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

pub fn encode(a: EncodeArgs) -> Result<()> {
    let encoder = match Encoder::parse(&a.encoder) {
        Some(e @ (Encoder::BinaryThermometer | Encoder::TernaryThermometer)) => e,
        _ => bail!(Usage(format!("unknown encoder `{}` (ternary or binary)", a.encoder))),
    };
    let pixels: Tensor<i64> = match &a.image {
        Some(p) => match load_tensor(p).with_context(|| format!("loading {}", p.display()))? {
            TensorData::Int(t) if t.dims().len() == 3 => t.map(i64::from),
            other => bail!(Usage(format!("{} is not an int32 (H, W, C) tensor: {:?}", p.display(), other.dims()))),
        },
        None if !a.values.is_empty() => Tensor::new(&[1, a.values.len(), 1], a.values.clone())?,
        None => bail!(Usage("give --values or --image".into())),
    };
    let trits = encode_image(&pixels, encoder, a.m)?;
    match &a.out {
        Some(p) => save_tensor(p, &TensorData::Trits(pack(&trits)?))?,
        None => {
            let mut out = io::stdout().lock();
            for px in trits.data().chunks(a.m * pixels.hwc()?.2) {
                let vals: Vec<String> = px.iter().map(|t| t.value().to_string()).collect();
                writeln!(out, "{}", vals.join(","))?;
            }
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Trace written by `run --trace`.
    #[arg(long)]
    pub trace: PathBuf,
    /// The programs the trace was recorded on, in order.
    #[arg(required = true)]
    pub programs: Vec<PathBuf>,
    #[arg(long)]
    pub cycles: bool,
    #[arg(long)]
    pub activity: bool,
    #[arg(long)]
    pub energy: bool,
    /// Add an iterative datapath with this many input-channel tiles to the activity report.
    #[arg(long)]
    pub iterative: Option<usize>,
    /// Add the binary-equivalent estimate to the energy report.
    #[arg(long)]
    pub binary_discount: bool,
    /// Per-layer rows in the activity report.
    #[arg(long)]
    pub per_layer: bool,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

pub fn report(cfg: &RunConfig, a: ReportArgs) -> Result<()> {
    let progs = load_programs(&a.programs)?;
    let records = load_trace(&a.trace, &progs[0].arch).with_context(|| format!("loading {}", a.trace.display()))?;
    let trace = SimTrace::rebuild(&progs, records)?;
    let activity = a.activity || a.iterative.is_some();
    let energy = a.energy || a.binary_discount || !(activity || a.cycles);
    if a.iterative == Some(0) {
        bail!(Usage("--iterative needs at least one tile".into()));
    }

    let mut out = sink(&a.out)?;
    let mut sections = 0;
    let mut gap = |out: &mut dyn Write| -> Result<()> {
        if sections > 0 {
            writeln!(out)?;
        }
        sections += 1;
        Ok(())
    };
    if a.cycles {
        gap(&mut out)?;
        write_cycle_csv(&mut out, &trace)?;
    }
    let unrolled = count_toggles(&trace, ToggleMode::Unrolled)?;
    if activity {
        gap(&mut out)?;
        let mut stats = vec![unrolled.clone()];
        if let Some(f) = a.iterative {
            stats.push(count_toggles(&trace, ToggleMode::Iterative(f))?);
        }
        write_toggle_csv(&mut out, &stats, a.per_layer)?;
    }
    if energy {
        gap(&mut out)?;
        let cost = cfg.cost()?;
        let e = energy_from_toggles(&trace, &unrolled, &cost)?;
        let d = binary_discount(&e);
        let mut reports = vec![("measured", &e)];
        if a.binary_discount {
            reports.push(("binary_discount", &d));
        }
        write_energy_csv(&mut out, &reports)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct TilingArgs {
    /// Feature map, `N` or `HxW`.
    #[arg(long, value_parser = parse_dims)]
    pub fm: (usize, usize),
    #[arg(long, default_value_t = 8)]
    pub layers: usize,
    /// layer_first, depth_first or both.
    #[arg(long, default_value = "both")]
    pub strategy: String,
    /// Tile size; the on-chip feature map by default.
    #[arg(long, value_parser = parse_dims)]
    pub tile: Option<(usize, usize)>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

pub fn tiling(cfg: &RunConfig, a: TilingArgs) -> Result<()> {
    let strategies = match a.strategy.as_str() {
        "both" => vec![TilingStrategy::LayerFirst, TilingStrategy::DepthFirst],
        s => vec![TilingStrategy::parse(s).ok_or_else(|| Usage(format!("unknown strategy `{s}`")))?],
    };
    let arch = &cfg.arch;
    if let Some((th, tw)) = a.tile {
        if th > arch.i_h || tw > arch.i_w {
            bail!(Usage(format!(
                "tile {th}x{tw} exceeds the {}x{} feature-map memory",
                arch.i_h, arch.i_w
            )));
        }
    }
    let cost = cfg.cost()?;
    let reports = strategies
        .into_iter()
        .map(|s| {
            let mut plan = TilingPlan::new(a.fm, a.layers, s, arch);
            if let Some(t) = a.tile {
                plan.tile = t;
            }
            tiling_transfer(&plan, arch, &cost)
        })
        .collect::<cutie::Result<Vec<_>>>()?;
    let mut out = sink(&a.out)?;
    write_tiling_csv(&mut out, &reports)?;
    out.flush()?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct QuantizeArgs {
    /// Real-valued weight tensor; seeded Gaussian weights when omitted.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Number of Gaussian weights.
    #[arg(long, default_value_t = 1152)]
    pub random: usize,
    /// magnitude, magnitude-inverse, zigzag or all.
    #[arg(long, default_value = "magnitude-inverse")]
    pub strategy: String,
    /// Cumulative fractions, e.g. 0.2,0.4,0.6,0.8,1.0.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Projection threshold as a fraction of max |w|.
    #[arg(long, default_value_t = cutie::quantizer::DEFAULT_DELTA)]
    pub delta: f64,
    /// Ternary tensor output (single strategy only).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Sparsity CSV; stdout when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn quantize(cfg: &RunConfig, a: QuantizeArgs) -> Result<()> {
    let strategies = if a.strategy == "all" {
        QuantStrategy::ALL.to_vec()
    } else {
        vec![QuantStrategy::parse(&a.strategy).ok_or_else(|| Usage(format!("unknown strategy `{}`", a.strategy)))?]
    };
    if a.out.is_some() && strategies.len() > 1 {
        bail!(Usage("--out needs a single strategy".into()));
    }
    let schedule = match &a.schedule {
        Some(s) => QuantSchedule::parse(s)?,
        None => QuantSchedule::default(),
    };
    let weights: Tensor<f64> = match &a.weights {
        Some(p) => match load_tensor(p).with_context(|| format!("loading {}", p.display()))? {
            TensorData::Real(t) => t,
            TensorData::Int(t) => t.map(f64::from),
            TensorData::Trits(_) => bail!(Usage(format!("{} is already ternary", p.display()))),
        },
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let w: Vec<f64> = (0..a.random).map(|_| StandardNormal.sample(&mut rng)).collect();
            Tensor::new(&[a.random], w)?
        }
    };

    let mut c = csv_writer(sink(&a.csv)?);
    c.write_record(["strategy", "step", "fraction", "quantized", "step_sparsity", "cumulative_sparsity"])?;
    for s in strategies {
        let r = quantize_incremental(&weights, s, &schedule, a.delta, &mut Identity)?;
        for st in &r.steps {
            c.write_record([
                s.name().to_string(),
                st.step.to_string(),
                st.fraction.to_string(),
                st.quantized.to_string(),
                st.step_sparsity.to_string(),
                st.cumulative_sparsity.to_string(),
            ])?;
        }
        if let Some(p) = &a.out {
            save_tensor(p, &TensorData::Trits(pack(&r.trits)?))?;
        }
    }
    c.flush()?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct ZooArgs {
    /// Output directory.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Binary weights, activations and input code.
    #[arg(long)]
    pub binary: bool,
    /// Zero fraction of ternary weights.
    #[arg(long, default_value_t = 0.5)]
    pub weight_sparsity: f64,
    /// A small random network with raw-trit input instead of the reference network.
    #[arg(long, conflicts_with = "binary")]
    pub random: bool,
}

fn write_file(path: &Path, t: &TensorData) -> Result<()> {
    save_tensor(path, t)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn zoo(cfg: &RunConfig, a: ZooArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if a.random {
        let net = random_network::<f64>(&mut rng, &cfg.arch, &RandomNetOptions::default());
        let path = save_network(&net, &a.out, "random")?;
        eprintln!("wrote {}", path.display());
        let input = random_input(&mut rng, net.input_dims, 0.5);
        return write_file(&a.out.join("input.cttensor"), &TensorData::Trits(pack(&input)?));
    }
    let opts = ZooOptions {
        weight_zero_fraction: a.weight_sparsity,
        binary: a.binary,
        ..Default::default()
    };
    let net = reference_cnn::<f64>(&opts, cfg.seed);
    let path = save_network(&net, &a.out, "reference")?;
    eprintln!("wrote {}", path.display());
    let image = smooth_image(&mut rng, (net.input_dims.0, net.input_dims.1), 3);
    write_file(
        &a.out.join("image.cttensor"),
        &TensorData::Int(image.map(|p| p as i32)),
    )?;
    let input = encode_reference_input(&image, a.binary)?;
    write_file(&a.out.join("input.cttensor"), &TensorData::Trits(pack(&input)?))
}
