//! Invariants over randomly generated stationary sources.

use proptest::prelude::*;
use smbparse::martingale::{truncated_decomposition, z_trace};
use smbparse::measures::{
    beta_sequence, block_entropies, entropy_rate, log_cylinder_prob, sample_trajectory, stationary_distribution,
    walk_cylinders, ProcessModel,
};
use smbparse::parsing::{validate_parsing, Budget, GrowthSchedule, ParseInput, ParserSpec};

fn row(size: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, size).prop_map(|w| {
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(row(cols), rows)
}

fn iid() -> impl Strategy<Value = ProcessModel> {
    (2usize..4).prop_flat_map(row).prop_map(|p| ProcessModel::iid(p).unwrap())
}

fn markov() -> impl Strategy<Value = ProcessModel> {
    (2usize..4).prop_flat_map(|k| matrix(k, k)).prop_map(|t| {
        let pi = stationary_distribution(&t).unwrap();
        ProcessModel::markov(t, pi).unwrap()
    })
}

fn hidden() -> impl Strategy<Value = ProcessModel> {
    (2usize..4, 2usize..4)
        .prop_flat_map(|(s, a)| (matrix(s, s), matrix(s, a)))
        .prop_map(|(t, e)| {
            let pi = stationary_distribution(&t).unwrap();
            ProcessModel::hidden_markov(t, pi, e).unwrap()
        })
}

fn ergodic() -> impl Strategy<Value = ProcessModel> {
    prop_oneof![iid(), markov(), hidden()]
}

fn any_model() -> impl Strategy<Value = ProcessModel> {
    prop_oneof![
        3 => ergodic(),
        1 => (0.1f64..0.9, markov(), markov())
            .prop_filter("same alphabet", |(_, a, b)| a.alphabet() == b.alphabet())
            .prop_map(|(w, a, b)| ProcessModel::mixture(w, a, b).unwrap()),
    ]
}

fn lp(model: &ProcessModel, w: &[u8]) -> f64 {
    log_cylinder_prob(model, w).unwrap().value()
}

fn word(model: &ProcessModel, raw: &[u8]) -> Vec<u8> {
    let size = model.alphabet().size() as u8;
    raw.iter().map(|x| x % size).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validated_and_normalized(model in any_model(), n in 1usize..7) {
        prop_assert!(model.validate().passed(), "{}", model.validate());
        let mut total = 0.0;
        walk_cylinders(&model, n, |w, l| if w.len() == n { total += l.exp() }).unwrap();
        prop_assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn consistency_and_stationarity(model in any_model(), raw in prop::collection::vec(any::<u8>(), 1..10)) {
        let w = word(&model, &raw);
        let p = lp(&model, &w).exp();
        let size = model.alphabet().size() as u8;
        let mut right = 0.0;
        let mut left = 0.0;
        for a in 0..size {
            let mut wa = w.clone();
            wa.push(a);
            right += lp(&model, &wa).exp();
            let mut aw = vec![a];
            aw.extend(&w);
            left += lp(&model, &aw).exp();
            prop_assert!(lp(&model, &wa) <= lp(&model, &w) + 1e-12);
            prop_assert!(lp(&model, &aw) <= lp(&model, &w) + 1e-12);
        }
        prop_assert!((right - p).abs() <= 1e-12);
        prop_assert!((left - p).abs() <= 1e-12);
    }

    #[test]
    fn entropy_monotonicity(model in ergodic()) {
        let beta = beta_sequence(&model, 8).unwrap();
        prop_assert!(beta.windows(2).all(|b| b[1] <= b[0] + 1e-9));
        let rate = entropy_rate(&model, 1e-4, 12).unwrap();
        prop_assert!(beta[7] >= rate.lower - 1e-9);
        let h = block_entropies(&model, 8).unwrap();
        let per_symbol: Vec<f64> = h.iter().enumerate().map(|(i, x)| x / (i + 1) as f64).collect();
        prop_assert!(per_symbol.windows(2).all(|p| p[1] <= p[0] + 1e-9));
    }

    #[test]
    fn sampling_is_deterministic_and_prefix_consistent(model in any_model(), seed in any::<u64>(), n in 1usize..500) {
        let a = sample_trajectory(&model, n, seed).unwrap();
        let b = sample_trajectory(&model, n + 37, seed).unwrap();
        prop_assert_eq!(a.symbols(), &b.symbols()[..n]);
        prop_assert_eq!(a, sample_trajectory(&model, n, seed).unwrap());
    }

    #[test]
    fn log_z_nonnegative(model in any_model(), seed in any::<u64>(), base in 0usize..50) {
        let t = sample_trajectory(&model, 70, seed).unwrap();
        let trace = z_trace(&model, &t, 12, base).unwrap();
        prop_assert!(trace.z_log.iter().all(|z| *z >= -1e-12));
        prop_assert!(trace.running_max_log.windows(2).all(|m| m[1] >= m[0]));
    }

    #[test]
    fn markov_log_z_constant_after_two(model in markov(), seed in any::<u64>(), base in 0usize..50) {
        let t = sample_trajectory(&model, 70, seed).unwrap();
        let trace = z_trace(&model, &t, 12, base).unwrap();
        prop_assert!(trace.z_log[1..].iter().all(|z| (z - trace.z_log[1]).abs() <= 1e-12));
    }

    #[test]
    fn truncated_identity(model in any_model(), seed in any::<u64>(), n in 1usize..300, m in 1usize..10) {
        let t = sample_trajectory(&model, n + m, seed).unwrap();
        let d = truncated_decomposition(&model, &t, n, m).unwrap();
        prop_assert!((d.i_term + d.j_term - d.neg_log_prob).abs() <= 1e-9);
        prop_assert!(d.identity_residual <= 1e-9);
    }

    #[test]
    fn every_parser_yields_a_valid_parsing(model in any_model(), seed in any::<u64>(), n in 8usize..2000) {
        let t = sample_trajectory(&model, n, seed).unwrap();
        let input = ParseInput { model: &model, symbols: t.symbols(), seed, h_ref: 0.5 };
        let specs = [
            ParserSpec::Fixed { k: 3 },
            ParserSpec::Growing { schedule: GrowthSchedule::Sqrt },
            ParserSpec::Growing { schedule: GrowthSchedule::Log2 },
            ParserSpec::Lz78 {},
            ParserSpec::RandomSublinear { budget: Budget::Sqrt },
            ParserSpec::Adversarial { budget: Budget::Sqrt },
            ParserSpec::CounterexampleU { k: 2 },
            ParserSpec::CounterexampleV { k: 2, epsilon: 0.1 },
            ParserSpec::CounterexampleW { k: 4, epsilon: 0.2 },
            ParserSpec::Intermittent { k: 2 },
        ];
        for spec in specs {
            let p = spec.parse(&input, n).unwrap();
            let report = validate_parsing(p.boundaries(), n);
            prop_assert!(report.pass(), "{} {:?}", spec.label(), report.issues);
        }
    }
}
