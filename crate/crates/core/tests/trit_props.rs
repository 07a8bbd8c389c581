use cutie::trit::{
    binary_thermometer, pack5, popcount_accumulate, ternary_thermometer, trit_mul, unpack5, PackedTritTensor,
};
use cutie::{Trit, TritPlanes};
use proptest::prelude::*;

fn trit() -> impl Strategy<Value = Trit> {
    prop_oneof![Just(Trit::Neg), Just(Trit::Zero), Just(Trit::Pos)]
}

#[test]
fn codec_roundtrips_every_byte() {
    for b in 0..243u8 {
        assert_eq!(pack5(unpack5(b).unwrap()), b);
    }
    for b in 243..=255u8 {
        assert!(unpack5(b).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn popcount_equals_dot_product(pairs in prop::collection::vec((trit(), trit()), 0..300)) {
        let dot: i64 = pairs.iter().map(|&(a, w)| a.value() as i64 * w.value() as i64).sum();
        let acc = popcount_accumulate(pairs.iter().map(|&(a, w)| trit_mul(a, w)));
        prop_assert_eq!(acc, dot);
    }
}

proptest! {
    #[test]
    fn planes_dot_matches_scalar(pairs in prop::collection::vec((trit(), trit()), 0..500)) {
        let (a, w): (Vec<Trit>, Vec<Trit>) = pairs.iter().copied().unzip();
        let dot: i64 = pairs.iter().map(|&(a, w)| a.value() as i64 * w.value() as i64).sum();
        prop_assert_eq!(TritPlanes::from_trits(&a).dot(&TritPlanes::from_trits(&w)), dot);
    }

    #[test]
    fn packed_tensor_roundtrip(t in prop::collection::vec(trit(), 0..200)) {
        let p = PackedTritTensor::from_trits(&[t.len()], &t).unwrap();
        prop_assert_eq!(p.payload().len(), t.len().div_ceil(5));
        prop_assert_eq!(p.to_trits(), t);
    }

    #[test]
    fn ternary_thermometer_counts(m in 1usize..200, frac in 0.0f64..=1.0) {
        let x = (frac * 2.0 * m as f64).round() as i64;
        let code = ternary_thermometer(x, m).unwrap();
        let d = x - m as i64;
        let nz: Vec<&Trit> = code.iter().filter(|t| !t.is_zero()).collect();
        prop_assert_eq!(nz.len() as i64, d.abs());
        prop_assert!(nz.iter().all(|&&t| t == Trit::signum(d)));
    }

    #[test]
    fn binary_thermometer_is_monotone(m in 1usize..200, frac in 0.0f64..1.0) {
        let x = (frac * m as f64) as i64;
        let a = binary_thermometer(x, m).unwrap();
        let b = binary_thermometer(x + 1, m).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!(u == v || (*u == Trit::Neg && *v == Trit::Pos));
        }
        prop_assert!(a.iter().all(|t| !t.is_zero()));
    }

    #[test]
    fn thermometer_range_is_checked(m in 1usize..64, over in 1i64..10) {
        prop_assert!(ternary_thermometer(2 * m as i64 + over, m).is_err());
        prop_assert!(ternary_thermometer(-over, m).is_err());
        prop_assert!(binary_thermometer(m as i64 + over, m).is_err());
    }
}
