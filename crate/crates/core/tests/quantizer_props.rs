use cutie::quantizer::{
    first_step_sparsity, order_weights, partition_steps, project_ternary, quantize_incremental, Identity,
    QuantSchedule, QuantStrategy, DEFAULT_DELTA,
};
use cutie::Tensor;
use proptest::prelude::*;

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..400)
}

fn schedule() -> impl Strategy<Value = QuantSchedule> {
    prop::collection::btree_set(1u32..100, 0..6).prop_map(|s| {
        let mut f: Vec<f64> = s.into_iter().map(|x| x as f64 / 100.0).collect();
        f.push(1.0);
        QuantSchedule::new(f).unwrap()
    })
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n && order.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

proptest! {
    #[test]
    fn orders_are_permutations(w in weights()) {
        for s in QuantStrategy::ALL {
            prop_assert!(is_permutation(&order_weights(&w, s), w.len()));
        }
    }

    #[test]
    fn magnitude_orders_are_sorted(w in weights()) {
        let abs = |i: usize| w[i].abs();
        let asc = order_weights(&w, QuantStrategy::MagnitudeInverse);
        let desc = order_weights(&w, QuantStrategy::Magnitude);
        prop_assert!(asc.windows(2).all(|p| abs(p[0]) <= abs(p[1])));
        prop_assert!(desc.windows(2).all(|p| abs(p[0]) >= abs(p[1])));
    }

    #[test]
    fn steps_partition_the_weights(w in weights(), sched in schedule()) {
        for s in QuantStrategy::ALL {
            let steps = partition_steps(&w, s, &sched);
            prop_assert_eq!(steps.len(), sched.fractions().len());
            let flat: Vec<usize> = steps.iter().flatten().copied().collect();
            prop_assert!(is_permutation(&flat, w.len()));
            let mut done = 0;
            for (set, &f) in steps.iter().zip(sched.fractions()) {
                done += set.len();
                prop_assert!(done as f64 >= f * w.len() as f64 - 1e-6);
            }
        }
    }

    /// Quantizing small weights first yields a sparser first step.
    #[test]
    fn inverse_first_step_is_sparser(w in weights(), sched in schedule()) {
        let sp = |s| first_step_sparsity(&w, s, &sched, DEFAULT_DELTA).unwrap();
        prop_assert!(sp(QuantStrategy::MagnitudeInverse) >= sp(QuantStrategy::Magnitude));
    }

    /// Without retraining, the incremental result is the one-shot projection.
    #[test]
    fn identity_hook_matches_one_shot(w in weights(), sched in schedule(), delta in 0.05f64..0.9) {
        let t = Tensor::new(&[w.len()], w.clone()).unwrap();
        let want = project_ternary(&t, delta).unwrap().to_trits();
        for s in QuantStrategy::ALL {
            let r = quantize_incremental(&t, s, &sched, delta, &mut Identity).unwrap();
            prop_assert_eq!(r.trits.data(), &want[..]);
            let last = r.steps.last().unwrap();
            let zeros = want.iter().filter(|x| x.is_zero()).count() as f64;
            prop_assert!((last.cumulative_sparsity - zeros / w.len() as f64).abs() < 1e-12);
            prop_assert_eq!(r.steps.iter().map(|s| s.quantized).sum::<usize>(), w.len());
        }
    }
}

#[test]
fn decaying_schedule_steps() {
    let counts = QuantSchedule::decaying().cumulative_counts(100);
    assert_eq!(counts, [20, 40, 60, 70, 80, 90, 95, 100]);
    assert!(QuantSchedule::parse("0.5,0.4,1.0").is_err());
    assert!(QuantSchedule::parse("0.5,0.9").is_err());
}
