use cutie::compiler::{emit_program, CompiledProgram};
use cutie::golden;
use cutie::network::zoo::{random_input, random_network, RandomNetOptions};
use cutie::network::ArchConfig;
use cutie::sim::trace_io::{read_trace, write_trace};
use cutie::sim::{run_program, Phase, RowAdvance, SimOptions, SimTrace};
use cutie::{Tensor, Trit};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random architecture and a network that maps onto it.
fn case(seed: u64) -> (CompiledProgram, Tensor<Trit>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = [1usize, 2, 4][rng.random_range(0..3)];
    let n_i: usize = rng.random_range(4..=24);
    let n_o = 4 * rng.random_range(1..=4);
    // W_S words of N_O / P trits must hold a whole pixel
    let w_s = rng.random_range(1..=4).max(n_i.div_ceil(n_o / p));
    let arch = ArchConfig {
        n_i,
        n_o,
        k: [3usize, 5][rng.random_range(0..2)],
        i_w: rng.random_range(4..=12),
        i_h: rng.random_range(4..=12),
        l: 4,
        p,
        w_s,
    };
    let opts = RandomNetOptions {
        max_side: 12,
        max_channels: 16,
        ..Default::default()
    };
    let net = random_network::<f64>(&mut rng, &arch, &opts);
    let input = random_input(&mut rng, net.input_dims, 0.4);
    (emit_program(&net, &arch).unwrap(), input)
}

fn run(prog: &CompiledProgram, input: &Tensor<Trit>, row_advance: RowAdvance) -> (Tensor<Trit>, SimTrace) {
    let opts = SimOptions {
        row_advance,
        record: true,
    };
    run_program(prog, input, opts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn simulator_matches_golden_model(seed in any::<u64>()) {
        let (prog, input) = case(seed);
        let want = golden::run_program(&prog, &input).unwrap();
        for mode in [RowAdvance::Stall, RowAdvance::Hide] {
            let (got, _) = run(&prog, &input, mode);
            prop_assert_eq!(&got, &want);
        }
    }

    #[test]
    fn traces_are_deterministic(seed in any::<u64>()) {
        let (prog, input) = case(seed);
        let bytes = |t: &SimTrace| {
            let mut v = Vec::new();
            write_trace(&mut v, &t.arch, &t.records).unwrap();
            v
        };
        let (_, a) = run(&prog, &input, RowAdvance::Stall);
        let (_, b) = run(&prog, &input, RowAdvance::Stall);
        let (ba, bb) = (bytes(&a), bytes(&b));
        prop_assert_eq!(&ba, &bb);
        let back = read_trace(&ba[..], &prog.arch).unwrap();
        prop_assert_eq!(SimTrace::rebuild(std::slice::from_ref(&prog), back).unwrap(), a);
    }

    #[test]
    fn memory_words_are_accounted(seed in any::<u64>()) {
        let (prog, input) = case(seed);
        let arch = prog.arch;
        let (_, trace) = run(&prog, &input, RowAdvance::Stall);
        for l in &trace.layers {
            let recs = &trace.records[l.records.clone()];
            let mut pixels = 0u64;
            for r in recs {
                // a read moves at most K pixels of W_S words
                prop_assert!(r.words_read <= r.read_ops * arch.k * arch.w_s);
                if r.outputs_valid() {
                    prop_assert_eq!(r.words_written, l.active_stages);
                    pixels += 1;
                } else {
                    prop_assert_eq!(r.words_written, 0);
                }
            }
            let (h, w, _) = l.instr.out_dims();
            prop_assert_eq!(pixels, (h * w) as u64);
            prop_assert_eq!(l.words_written, pixels * l.active_stages as u64);
            prop_assert!(l.active_stages <= arch.p);
        }
    }

    #[test]
    fn loads_overlap_previous_layer(seed in any::<u64>()) {
        let (prog, input) = case(seed);
        let (_, trace) = run(&prog, &input, RowAdvance::Stall);
        for (i, l) in trace.layers.iter().enumerate() {
            let c = l.cycles;
            let want = if i == 0 {
                c.load
            } else {
                c.load.saturating_sub(trace.layers[i - 1].cycles.execute())
            };
            prop_assert_eq!(c.exposed_load, want);
        }
        prop_assert_eq!(trace.total_cycles, trace.records.len() as u64);
        let sum: u64 = trace.layers.iter().map(|l| l.cycles.total()).sum();
        prop_assert_eq!(trace.total_cycles, sum);
    }

    #[test]
    fn hiding_row_reads_never_costs_cycles(seed in any::<u64>()) {
        let (prog, input) = case(seed);
        let (_, stall) = run(&prog, &input, RowAdvance::Stall);
        let (_, hide) = run(&prog, &input, RowAdvance::Hide);
        prop_assert!(hide.total_cycles <= stall.total_cycles);
        prop_assert_eq!(hide.words_read(), stall.words_read());
    }

    /// Only thresholded trits reach feature-map memory: every emitted
    /// value is a decision of the accumulators of the same record or of
    /// the pooled value.
    #[test]
    fn only_trits_are_written(seed in any::<u64>()) {
        let (prog, input) = case(seed);
        let (_, trace) = run(&prog, &input, RowAdvance::Stall);
        for l in &trace.layers {
            for r in &trace.records[l.records.clone()] {
                if r.phase == Phase::Compute {
                    prop_assert!(r.window.is_some());
                    prop_assert_eq!(r.acc.len(), prog.arch.n_o);
                }
                if r.outputs_valid() && l.instr.pooling.is_none() {
                    for (o, t) in r.out.iter().enumerate().take(l.instr.out_ch) {
                        prop_assert_eq!(*t, l.thresholds[o].decide(r.acc[o]));
                    }
                }
            }
        }
    }
}
