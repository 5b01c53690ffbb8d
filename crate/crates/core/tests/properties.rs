use std::sync::OnceLock;

use proptest::prelude::*;
use thinset_core::czd::{cz_decompose, refine, weaktype_scan};
use thinset_core::operators::{apply, lambda_weights, maximal, maximal_brute_force, variation2_exact, Op, ScalePlan};
use thinset_core::signal::Signal;
use thinset_core::thinset::{enumerate, registry_get, ThinSet};

const HORIZON: u64 = 4096;

fn set() -> &'static ThinSet {
    static TS: OnceLock<ThinSet> = OnceLock::new();
    TS.get_or_init(|| enumerate(&registry_get("pow1.05").unwrap(), HORIZON).unwrap())
}

fn signal(max_len: usize) -> impl Strategy<Value = Signal> {
    (-64i64..64, prop::collection::vec(-8i32..=8, 1..max_len))
        .prop_map(|(off, v)| Signal::new(off, v.into_iter().map(f64::from).collect()))
}

fn chains_brute(seq: &[f64]) -> f64 {
    let n = seq.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let s: f64 = idx.windows(2).map(|w| (seq[w[1]] - seq[w[0]]).powi(2)).sum();
        best = best.max(s);
    }
    best.sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn averages_preserve_mass_and_sup(f in signal(40), t in 1u64..300, which in 0usize..3) {
        let op = [Op::M, Op::D, Op::H][which];
        let g = apply(set(), &f, t, op).unwrap();
        prop_assert!((g.sum() - f.sum()).abs() <= 1e-9 * (1.0 + f.l1()));
        let sup = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(g.values.iter().all(|v| v.abs() <= sup + 1e-12));
    }

    #[test]
    fn averages_of_nonnegative_inputs_are_nonnegative(f in signal(40), t in 1u64..300) {
        let g = apply(set(), &f.abs(), t, Op::M).unwrap();
        prop_assert!(g.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn maximal_all_t_matches_brute_force(f in signal(12), which in 0usize..4) {
        let op = [Op::M, Op::A, Op::D, Op::H][which];
        let short = enumerate(&registry_get("pow1.05").unwrap(), 128).unwrap();
        let fast = maximal(&short, &f, &ScalePlan::AllT, op).unwrap();
        let slow = maximal_brute_force(&short, &f, &ScalePlan::AllT, op).unwrap();
        let lo = fast.offset.min(slow.offset);
        let hi = fast.end().max(slow.end());
        for x in lo..hi {
            prop_assert!((fast.get(x) - slow.get(x)).abs() <= 1e-12, "x = {}", x);
        }
    }

    #[test]
    fn lambda_weights_are_a_probability_vector(k in 1u64..2000) {
        let w = lambda_weights(set(), k).unwrap();
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn variation_dp_matches_chain_enumeration(seq in prop::collection::vec(-5.0f64..5.0, 1..11)) {
        prop_assert!((variation2_exact(&seq) - chains_brute(&seq)).abs() <= 1e-9);
    }

    #[test]
    fn cz_decomposition_invariants(f in signal(60), alpha in 0.3f64..6.0) {
        let f = f.abs();
        prop_assume!(f.l1() > 0.0);
        let dec = cz_decompose(&f, alpha).unwrap();
        dec.check_invariants().unwrap();
        for x in f.offset..f.end() {
            prop_assert!((dec.g.get(x) + dec.b.get(x) - f.get(x)).abs() <= 1e-12 * (1.0 + f.get(x)));
            prop_assert!(dec.g.get(x) <= 2.0 * alpha + 1e-12);
        }
        for q in &dec.cubes {
            let sum: f64 = (q.start()..=q.last()).map(|x| f.get(x)).sum();
            let avg = sum / q.side() as f64;
            prop_assert!(avg > alpha && avg <= 2.0 * alpha + 1e-12);
            let b_sum: f64 = (q.start()..=q.last()).map(|x| dec.b.get(x)).sum();
            prop_assert!(b_sum.abs() <= 1e-9 * (1.0 + sum));
        }
        let r = refine(&dec, 1.0, 4.0).unwrap();
        let back = r.reconstruct();
        for x in f.offset..f.end() {
            prop_assert!((back.get(x) - f.get(x)).abs() <= 1e-9);
        }
    }

    #[test]
    fn weak_type_statistic_is_translation_and_scale_invariant(f in signal(20), tau in -500i64..500) {
        prop_assume!(f.l1() > 0.0);
        let base = weaktype_scan(set(), &f, &[], &ScalePlan::AllT).unwrap().statistic;
        let moved = weaktype_scan(set(), &f.translated(tau), &[], &ScalePlan::AllT).unwrap().statistic;
        let scaled = weaktype_scan(set(), &f.scaled(2.0), &[], &ScalePlan::AllT).unwrap().statistic;
        prop_assert!((base - moved).abs() <= 1e-12 * base);
        prop_assert_eq!(base, scaled);
    }
}
