use crowdsignal::oracle;
use crowdsignal::voting::{self, poisson_binomial_pmf, Tally, VoterMix};
use crowdsignal::{SneKind, WorkerPopulation};
use proptest::prelude::*;

fn mix_strategy(max_total: usize) -> impl Strategy<Value = VoterMix> {
    (
        0.5f64..1.0,
        0.0f64..1.0,
        0..=max_total,
        0..=max_total,
        0..=max_total,
    )
        .prop_filter("nonempty and bounded", move |(_, _, a, b, c)| {
            let t = a + b + c;
            t >= 1 && t <= max_total
        })
        .prop_map(|(ph, frac, a, b, c)| {
            let pl = 0.5 + frac * (ph - 0.5);
            VoterMix::new(a, b, c, ph, pl)
        })
}

fn population_strategy(max_n: usize) -> impl Strategy<Value = WorkerPopulation> {
    (
        2..=max_n,
        0.0f64..1.0,
        0.0f64..1.0,
        0.5001f64..=1.0,
        0.01f64..0.99,
    )
        .prop_map(|(n, a, b, ph, frac)| {
            let k_high = 2 + ((n - 1) as f64 * a) as usize % (n - 1);
            let k_low = 1 + ((k_high - 1) as f64 * b) as usize % (k_high - 1);
            let pl = 0.5 + frac * (ph - 0.5);
            WorkerPopulation::new(n, k_high, k_low, ph, pl.max(0.5001).min(ph - 1e-4), 1.0).unwrap()
        })
}

proptest! {
    #[test]
    fn pmf_is_a_distribution(probs in prop::collection::vec(0.0f64..=1.0, 1..=200)) {
        let pmf = poisson_binomial_pmf(&probs).unwrap();
        prop_assert_eq!(pmf.len(), probs.len() + 1);
        let sum: f64 = pmf.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(pmf.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn majority_is_monotone_in_each_voter(
        probs in prop::collection::vec(0.0f64..=1.0, 1..40),
        idx in any::<prop::sample::Index>(),
        bump in 0.0f64..=1.0,
    ) {
        let i = idx.index(probs.len());
        let mut raised = probs.clone();
        raised[i] = probs[i] + bump * (1.0 - probs[i]);
        let before = Tally::from_pmf(&poisson_binomial_pmf(&probs).unwrap()).unwrap();
        let after = Tally::from_pmf(&poisson_binomial_pmf(&raised).unwrap()).unwrap();
        prop_assert!(after.majority_correct() >= before.majority_correct() - 1e-12);
    }

    #[test]
    fn match_prob_is_affine_with_doubled_tie_mass(mix in mix_strategy(60), q in 0.0f64..=1.0) {
        let t = mix.tally().unwrap();
        let at = |x: f64| voting::match_prob(x, &mix).unwrap();
        let interpolated = (1.0 - q) * at(0.0) + q * at(1.0);
        prop_assert!((at(q) - interpolated).abs() <= 1e-12);
        let at_least = t.above + t.tie;
        let at_most = t.below + t.tie;
        prop_assert!((at(0.5) - 0.5 * (at_least + at_most)).abs() <= 1e-12);
        prop_assert!(at(0.5) >= 0.5 - 1e-12);
    }

    #[test]
    fn dp_matches_enumeration(mix in mix_strategy(9), q in 0.0f64..=1.0) {
        let probs = mix.success_probs();
        let dp = voting::majority_correct_prob(&mix).unwrap();
        let en = oracle::majority_correct(&probs).unwrap();
        prop_assert!((dp - en).abs() <= 1e-10, "majority {} vs {}", dp, en);
        if mix.total() <= 8 {
            let dp = voting::match_prob(q, &mix).unwrap();
            let en = oracle::match_prob(q, &probs).unwrap();
            prop_assert!((dp - en).abs() <= 1e-10, "match {} vs {}", dp, en);
        }
    }

    #[test]
    fn informed_profiles_are_at_least_as_accurate(pop in population_strategy(120), high in any::<bool>()) {
        let k = if high { pop.k_high } else { pop.k_low };
        let f = voting::aggregated_accuracy(SneKind::Full, k, &pop).unwrap();
        let p = voting::aggregated_accuracy(SneKind::Partial, k, &pop).unwrap();
        let n = voting::aggregated_accuracy(SneKind::NoEffort, k, &pop).unwrap();
        prop_assert_eq!(n, 0.5);
        prop_assert!(f >= p - 1e-12);
        prop_assert!(p >= n - 1e-12);
    }
}

#[test]
fn reference_values() {
    let two = VoterMix::new(2, 0, 0, 0.6, 0.55);
    assert!((voting::match_prob(0.6, &two).unwrap() - 0.76).abs() < 1e-12);
    assert!((oracle::match_prob(0.6, &[0.6, 0.6]).unwrap() - 0.76).abs() < 1e-12);
    let random = VoterMix::all_random(2);
    assert!((voting::match_prob(0.5, &random).unwrap() - 0.75).abs() < 1e-12);
    let sure = VoterMix::new(4, 0, 0, 1.0, 0.6);
    assert!((voting::match_prob(1.0, &sure).unwrap() - 1.0).abs() < 1e-12);

    let pop = WorkerPopulation::new(3, 3, 1, 0.6, 0.55, 1.0).unwrap();
    let f = voting::aggregated_accuracy(SneKind::Full, 3, &pop).unwrap();
    assert!((f - 0.648).abs() < 1e-12);
    assert!((f - oracle::aggregated_accuracy(SneKind::Full, 3, &pop).unwrap()).abs() < 1e-12);
}
