use cutie::activity::{
    binary_discount, energy_estimate, tiling_transfer, unrolled_toggles, CostModel, EnergyItems, EnergyReport,
    TilingPlan, TilingStrategy,
};
use cutie::activity::energy::LayerEnergy;
use cutie::compiler::emit_program;
use cutie::network::zoo::{random_input, random_network, RandomNetOptions};
use cutie::network::ArchConfig;
use cutie::sim::{run_program, RowAdvance, SimOptions};
use cutie::{Trit, TritPlanes};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn trit() -> impl Strategy<Value = Trit> {
    prop_oneof![Just(Trit::Neg), Just(Trit::Zero), Just(Trit::Pos)]
}

fn masked(v: &[Trit], keep: &[bool]) -> TritPlanes {
    let t: Vec<Trit> = v.iter().zip(keep).map(|(&t, &k)| if k { t } else { Trit::Zero }).collect();
    TritPlanes::from_trits(&t)
}

/// Windows, weights and two nested keep masks (`inner` keeps a subset of
/// what `outer` keeps).
fn stream() -> impl Strategy<Value = (Vec<Vec<Trit>>, Vec<Vec<Trit>>, Vec<bool>, Vec<bool>)> {
    (1usize..150, 1usize..12, 1usize..4).prop_flat_map(|(n, windows, ocus)| {
        (
            prop::collection::vec(prop::collection::vec(trit(), n), windows),
            prop::collection::vec(prop::collection::vec(trit(), n), ocus),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(x, w, outer, extra)| {
                let inner = outer.iter().zip(&extra).map(|(&a, &b)| a && b).collect();
                (x, w, outer, inner)
            })
    })
}

fn toggles(x: &[Vec<Trit>], w: &[Vec<Trit>], xkeep: &[bool], wkeep: &[bool]) -> (u64, u64) {
    let xs: Vec<TritPlanes> = x.iter().map(|v| masked(v, xkeep)).collect();
    let ws: Vec<TritPlanes> = w.iter().map(|v| masked(v, wkeep)).collect();
    let refs: Vec<&TritPlanes> = xs.iter().collect();
    let t = unrolled_toggles(&refs, &ws, ws.len());
    (t.adder_toggles, t.multiplier_toggles)
}

fn small_trace(seed: u64) -> cutie::sim::SimTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arch = ArchConfig::default();
    let opts = RandomNetOptions {
        max_side: 8,
        max_channels: 24,
        ..Default::default()
    };
    let net = random_network::<f64>(&mut rng, &arch, &opts);
    let input = random_input(&mut rng, net.input_dims, 0.5);
    let prog = emit_program(&net, &arch).unwrap();
    let opts = SimOptions {
        row_advance: RowAdvance::Stall,
        record: true,
    };
    run_program(&prog, &input, opts).unwrap().1
}

proptest! {
    /// Zeroing more activation channels or more weights never adds toggles.
    #[test]
    fn nested_sparsity_never_adds_toggles((x, w, outer, inner) in stream()) {
        let all = vec![true; outer.len()];
        let (a_all, m_all) = toggles(&x, &w, &all, &all);
        let (a_out, m_out) = toggles(&x, &w, &outer, &all);
        let (a_in, m_in) = toggles(&x, &w, &inner, &all);
        prop_assert!(a_in <= a_out && a_out <= a_all);
        prop_assert!(m_in <= m_out && m_out <= m_all);
        let (aw_out, mw_out) = toggles(&x, &w, &all, &outer);
        let (aw_in, mw_in) = toggles(&x, &w, &all, &inner);
        prop_assert!(aw_in <= aw_out && aw_out <= a_all);
        // multiplier inputs see activations only
        prop_assert!(mw_in == m_all && mw_out == m_all);
    }

    /// Depth-first fusion moves no more feature-map bits than layer-first
    /// once the map spans several default-size tiles.
    #[test]
    fn depth_first_moves_fewer_bits(h in 33usize..200, w in 33usize..200, layers in 2usize..=8) {
        let arch = ArchConfig::default();
        let cost = CostModel::<f64>::gf22_scm();
        let bits = |s| {
            let plan = TilingPlan::new((h, w), layers, s, &arch);
            tiling_transfer(&plan, &arch, &cost).unwrap().external_bits
        };
        prop_assert!(bits(TilingStrategy::DepthFirst) <= bits(TilingStrategy::LayerFirst));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_items_are_consistent(seed in any::<u64>()) {
        let trace = small_trace(seed);
        let rep = energy_estimate(&trace, &CostModel::<f64>::gf22_scm()).unwrap();
        let mut sum = EnergyItems::<f64>::zero();
        for l in &rep.layers {
            prop_assert!(l.items.values().iter().all(|&v| v >= 0.0));
            sum.add(&l.items);
        }
        for (a, b) in sum.values().iter().zip(rep.total.values()) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
        let total: f64 = rep.total.values().iter().sum();
        prop_assert!((rep.total_pj() - total).abs() <= 1e-9 * total);
        prop_assert!((rep.total_pj() - rep.core_pj() - rep.total.io).abs() <= 1e-9 * total);

        let disc = binary_discount(&rep);
        prop_assert_eq!(disc.total.codec, 0.0);
        prop_assert_eq!(disc.total.io, rep.total.io);
        prop_assert_eq!(disc.total.static_, rep.total.static_);
        prop_assert!(disc.total_pj() <= rep.total_pj());
    }
}

#[test]
fn discount_keeps_zero_items() {
    let rep = EnergyReport {
        layers: vec![LayerEnergy {
            layer: 0,
            cycles: 10,
            ops: 4,
            adder_toggles: 0,
            multiplier_toggles: 0,
            items: EnergyItems::<f64>::zero(),
        }],
        total: EnergyItems::zero(),
    };
    assert_eq!(binary_discount(&rep), rep);
}
