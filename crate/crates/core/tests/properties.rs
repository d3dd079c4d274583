use bellsim_core::jp::{
    fine_inequalities, jp_feasible, pr_mixture, random_local_system, JpVerdict, PairwiseSystem,
};
use bellsim_core::models::generators::{
    random_contextual_correlated, random_contextual_product, random_deterministic_local,
    random_stochastic_local, random_timetag, GenSizes,
};
use bellsim_core::models::{build_gl_coupling, demo_model};
use bellsim_core::prob::{int, to_f64, ProbTable};
use bellsim_core::processing::exact_windowed;
use bellsim_core::stats::{chsh_exact, chsh_s, larsson_gill_audit};
use bellsim_core::{
    coupling_equalities, estimate_correlations, exact_correlations, run_context_protocol,
    run_spreadsheet_protocol, run_timeseries_protocol, window_scan, Context, Model, Schedule,
    Setting,
};
use num_traits::Zero;
use proptest::prelude::*;

fn local_model(seed: u64, stochastic: bool) -> Model {
    let sizes = GenSizes {
        source: 4,
        instrument: 3,
    };
    let recipe = if stochastic {
        random_stochastic_local(seed, sizes)
    } else {
        random_deterministic_local(seed, sizes)
    };
    recipe.build().unwrap()
}

fn product_model(seed: u64) -> Model {
    random_contextual_product(seed, GenSizes::default())
        .build()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn local_raw_statistics_never_signal(seed: u64, stochastic: bool) {
        let ex = exact_correlations(&local_model(seed, stochastic)).unwrap();
        for d in ex.signaling_deltas(false).unwrap() {
            prop_assert!(d.is_zero());
        }
    }

    #[test]
    fn product_raw_statistics_never_signal(seed: u64) {
        let ex = exact_correlations(&product_model(seed)).unwrap();
        for d in ex.signaling_deltas(false).unwrap() {
            prop_assert!(d.is_zero());
        }
    }

    #[test]
    fn local_chsh_is_at_most_two(seed: u64, stochastic: bool) {
        let ex = exact_correlations(&local_model(seed, stochastic)).unwrap();
        prop_assert!(chsh_exact(&ex.raw_correlations()).max <= int(2));
    }

    #[test]
    fn product_chsh_is_at_most_four(seed: u64) {
        let ex = exact_correlations(&product_model(seed)).unwrap();
        prop_assert!(chsh_exact(&ex.raw_correlations()).max <= int(4));
        if let Some(post) = ex.post_correlations() {
            prop_assert!(chsh_exact(&post).max <= int(4));
        }
    }

    #[test]
    fn local_models_admit_a_joint_distribution(seed: u64, stochastic: bool) {
        let ex = exact_correlations(&local_model(seed, stochastic)).unwrap();
        let sys = PairwiseSystem::from_exact(&ex).unwrap();
        let r = jp_feasible(&sys).unwrap();
        prop_assert_ne!(r.verdict, JpVerdict::Infeasible);
        prop_assert!(r.witness.unwrap().residual(&sys) < 1e-9);
    }

    #[test]
    fn local_audit_uses_full_overlap(seed: u64, stochastic: bool) {
        let a = larsson_gill_audit(&local_model(seed, stochastic), None).unwrap();
        prop_assert_eq!(a.delta_f64, 1.0);
        prop_assert_eq!(a.bound_f64, 2.0);
        prop_assert!(a.holds);
    }

    #[test]
    fn coupling_reproduces_product_statistics(seed: u64) {
        let m = product_model(seed);
        let r = coupling_equalities(&m, &build_gl_coupling(&m).unwrap()).unwrap();
        prop_assert!(r.all_zero());
    }

    #[test]
    fn coupling_context_distributions_match(seed: u64) {
        let m = product_model(seed);
        let c = build_gl_coupling(&m).unwrap();
        for ctx in Context::ALL {
            prop_assert_eq!(m.enumerate_context(ctx).unwrap(), c.enumerate_context(ctx).unwrap());
        }
    }

    #[test]
    fn fine_inequalities_agree_with_lp(seed: u64, t in 0.0f64..=1.0) {
        // Mixtures of a random local system with the PR box cross the
        // boundary of the local polytope.
        let local = random_local_system(seed);
        let pr = pr_mixture(1.0);
        let cells = std::array::from_fn(|c| std::array::from_fn(|k| t * pr.cells[c][k] + (1.0 - t) * local.cells[c][k]));
        let sys = PairwiseSystem { cells };
        let r = jp_feasible(&sys).unwrap();
        let fine_ok = fine_inequalities(&sys.correlations()).iter().all(|&f| f <= 1e-7);
        prop_assert_eq!(fine_ok, r.verdict != JpVerdict::Infeasible);
        match r.verdict {
            JpVerdict::Infeasible => prop_assert!(r.certificate.unwrap().verify(&sys)),
            _ => prop_assert!(r.witness.unwrap().residual(&sys) < 1e-9),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn retained_fraction_grows_with_window(seed: u64) {
        let m = random_timetag(seed, GenSizes::default()).build().unwrap();
        let streams = run_timeseries_protocol(&m, 2_000, Schedule::Random, 1.0, seed).unwrap();
        let windows = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 5.0];
        let rows = window_scan(&streams, &windows).unwrap();
        for pair in rows.windows(2) {
            prop_assert!(pair[0].retained_fraction <= pair[1].retained_fraction);
        }
        // Delays are below 0.5, so a window of 5 pairs every slot.
        prop_assert_eq!(rows.last().unwrap().retained_fraction, 1.0);
    }

    #[test]
    fn wide_window_recovers_the_local_base(seed: u64) {
        let m = random_timetag(seed, GenSizes::default()).build().unwrap();
        let wide = exact_windowed(&m, 1.0).unwrap();
        let base = exact_correlations(&m.without_delays().unwrap()).unwrap();
        prop_assert_eq!(wide.raw_correlations(), base.raw_correlations());
    }

    #[test]
    fn sampled_correlations_track_enumeration(seed: u64) {
        let m = product_model(seed);
        let ex = exact_correlations(&m).unwrap();
        let ds = run_context_protocol(&m, [20_000; 4], seed).unwrap();
        let table = estimate_correlations(&ds).unwrap();
        for ctx in Context::ALL {
            let est = table.get(ctx).unwrap();
            let want = to_f64(&ex.context(ctx).correlation);
            prop_assert!((est.correlation - want).abs() <= 5.0 * est.se_correlation + 1e-12,
                "{ctx}: {} vs {want} (se {})", est.correlation, est.se_correlation);
        }
    }

    #[test]
    fn spreadsheet_samples_stay_within_two(seed: u64, stochastic: bool) {
        let m = local_model(seed, stochastic);
        let ds = run_spreadsheet_protocol(&m, 500, seed).unwrap();
        let s = chsh_s(&estimate_correlations(&ds).unwrap()).unwrap();
        prop_assert!(s.max <= 2.0 + 1e-12);
    }
}

#[test]
fn context_protocol_is_independent_of_thread_count() {
    let m = product_model(99);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_context_protocol(&m, [3_000, 2_000, 1_000, 500], 5).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn fixed_schedule_reproduces_context_protocol_outcomes() {
    let m = demo_model("demo_timetag").unwrap();
    let n = 1_000;
    let pairs = run_context_protocol(&m, [n; 4], 17).unwrap();
    for ctx in Context::ALL {
        let streams = run_timeseries_protocol(&m, n, Schedule::Fixed(ctx), 2.0, 17).unwrap();
        let (alice, bob) = streams.streams().unwrap();
        let block: Vec<_> = pairs
            .pairs()
            .unwrap()
            .iter()
            .filter(|r| r.context == ctx)
            .collect();
        assert_eq!(block.len(), alice.events.len());
        for ((r, a), b) in block.iter().zip(&alice.events).zip(&bob.events) {
            assert_eq!((r.a, r.b), (a.sign, b.sign), "{ctx}");
        }
    }
}

#[test]
fn perturbed_coupling_is_detected() {
    let m = demo_model("demo_eq3").unwrap();
    let skewed = m
        .with_instrument(
            Setting::X,
            ProbTable::exact("x", vec![2], vec![int(1), int(0)]).unwrap(),
        )
        .unwrap();
    let r = coupling_equalities(&m, &build_gl_coupling(&skewed).unwrap()).unwrap();
    assert!(!r.all_zero());
    assert!(
        !r.residuals[4].is_zero(),
        "A_x mean should move: {:?}",
        r.to_json()
    );
}

#[test]
fn correlated_models_are_rejected_by_the_audit() {
    let m = random_contextual_correlated(3, GenSizes::default())
        .build()
        .unwrap();
    assert!(larsson_gill_audit(&m, None).is_err());
}
