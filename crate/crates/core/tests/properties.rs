use proptest::prelude::*;
use qsts_core::table::op_order;
use qsts_core::*;

fn secret_from(seed: u64) -> TwoQubitSecret {
    TwoQubitSecret::haar_random(&mut SeededRng::new(seed))
}

fn outcome() -> impl Strategy<Value = BellOutcome> {
    (0usize..4).prop_map(|i| BellOutcome::ALL[i])
}

fn config() -> impl Strategy<Value = SchemeConfig> {
    prop_oneof![
        Just(SchemeConfig::four_epr(Receiver::Charlie)),
        Just(SchemeConfig::four_epr(Receiver::Bob)),
        (2usize..=5).prop_map(|n| SchemeConfig::circular(n).unwrap()),
    ]
}

fn config_and_outcomes() -> impl Strategy<Value = (SchemeConfig, Vec<BellOutcome>)> {
    config().prop_flat_map(|c| {
        let m = c.layout().unwrap().schedule.len();
        (Just(c), proptest::collection::vec(outcome(), m))
    })
}

fn random_state(n: usize) -> impl Strategy<Value = PureState> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(move |v| {
            let amps = v.into_iter().map(|(a, b)| Amplitude::new(a, b)).collect();
            let names: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
            PureState::new(labels(names), amps).unwrap().normalized().unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_branch_is_corrected_exactly((cfg, outs) in config_and_outcomes(), seed in any::<u64>()) {
        let s = secret_from(seed);
        let t = Protocol::new(cfg).unwrap().run_forced(&s, &outs).unwrap();
        prop_assert!(t.fidelity >= 1.0 - 1e-10, "{} {:?}: {}", cfg, outs, t.fidelity);
    }

    #[test]
    fn forced_branches_are_uniform((cfg, outs) in config_and_outcomes(), seed in any::<u64>()) {
        let s = secret_from(seed);
        let layout = cfg.layout().unwrap();
        let mut st = build_setup(&s, &cfg).unwrap();
        let mut prob = 1.0;
        for (m, o) in layout.schedule.iter().zip(&outs) {
            let (p, next) = bell_project(&st, &m.pair.0, &m.pair.1, *o).unwrap();
            prop_assert!((next.norm() - 1.0).abs() < 1e-12);
            prob *= p;
            st = next;
        }
        let want = 0.25f64.powi(outs.len() as i32);
        prop_assert!((prob / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn controller_order_does_not_change_the_key(
        n in 3usize..=5,
        seed in any::<u64>(),
        outs in proptest::collection::vec(outcome(), 6),
        rot in 0usize..4,
    ) {
        // Permuting which Bob reported which result leaves the key, and hence
        // the correction, unchanged; the actual branch still gets fixed.
        let cfg = SchemeConfig::circular(n).unwrap();
        let layout = cfg.layout().unwrap();
        let m = layout.schedule.len();
        let outs = &outs[..m];
        let mut permuted = outs.to_vec();
        permuted[2..].rotate_left(rot % (m - 2));
        prop_assert_eq!(layout.key_for_outcomes(outs), layout.key_for_outcomes(&permuted));
        let s = secret_from(seed);
        let p = Protocol::new(cfg).unwrap();
        let a = p.run_forced(&s, outs).unwrap();
        let b = p.run_forced(&s, &permuted).unwrap();
        prop_assert_eq!(a.corrections, b.corrections);
        prop_assert!(b.fidelity >= 1.0 - 1e-10);
    }

    #[test]
    fn sampled_runs_replay_from_seed(cfg in config(), seed in any::<u64>()) {
        let s = secret_from(seed ^ 0x5555);
        let a = run_protocol(&s, &cfg, &mut SeededRng::new(seed)).unwrap();
        let b = run_protocol(&s, &cfg, &mut SeededRng::new(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        let replay = Protocol::new(cfg).unwrap().run_forced(&s, &a.outcomes()).unwrap();
        prop_assert_eq!(replay.corrections, a.corrections);
        prop_assert_eq!(replay.final_state, a.final_state);
        let bits: u32 = a.classical_bits_sent.values().sum();
        prop_assert_eq!(bits, 4 + 2 * cfg.layout().unwrap().controllers.len() as u32);
    }

    #[test]
    fn transcripts_round_trip_through_json(cfg in config(), seed in any::<u64>()) {
        let t = run_protocol(&secret_from(seed), &cfg, &mut SeededRng::new(seed)).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        let back: ProtocolTranscript = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn reorder_round_trips(st in random_state(4), perm in Just((0..4).collect::<Vec<usize>>()).prop_shuffle()) {
        let order: Vec<QubitLabel> = perm.iter().map(|&i| st.labels()[i].clone()).collect();
        let moved = st.reorder(&order).unwrap();
        let back = moved.reorder(st.labels()).unwrap();
        for (a, b) in back.amplitudes().iter().zip(st.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-15);
        }
        prop_assert!((moved.fidelity(&st.reorder(&order).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_traces_are_density_matrices(st in random_state(4), k in 1usize..4) {
        let keep: Vec<QubitLabel> = st.labels()[..k].to_vec();
        let rho = st.partial_trace(&keep).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.is_valid(1e-10));
    }

    #[test]
    fn bell_probabilities_sum_to_one(st in random_state(3)) {
        let p = bell_probabilities(&st, &"q0".into(), &"q2".into()).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn pauli_pairs_are_involutions_up_to_phase(st in random_state(2), k in 0usize..16) {
        let (i, j) = op_order()[k];
        let (a, b) = (st.labels()[0].clone(), st.labels()[1].clone());
        let once = apply_pauli_pair(&st, i, &a, j, &b).unwrap();
        let twice = apply_pauli_pair(&once, i, &a, j, &b).unwrap();
        prop_assert!((twice.fidelity(&st).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((once.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_secrets_are_normalized(seed in any::<u64>()) {
        let s = secret_from(seed);
        let n: f64 = s.coefficients().iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((n - 1.0).abs() < 1e-12);
    }
}

#[test]
fn alice_measurement_order_is_irrelevant() {
    let s = secret_from(77);
    let cfg = SchemeConfig::four_epr(Receiver::Charlie);
    let pairs = [("a", "3"), ("b", "5"), ("1", "7")];
    let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for outs in [
        [BellOutcome::PsiMinus, BellOutcome::PhiMinus, BellOutcome::PsiPlus],
        [BellOutcome::PhiPlus, BellOutcome::PsiPlus, BellOutcome::PhiMinus],
    ] {
        let mut finals = Vec::new();
        for ord in orders {
            let mut st = build_setup(&s, &cfg).unwrap();
            for k in ord {
                st = bell_project(&st, &pairs[k].0.into(), &pairs[k].1.into(), outs[k])
                    .unwrap()
                    .1;
            }
            finals.push(st);
        }
        for f in &finals[1..] {
            assert!((f.fidelity(&finals[0]).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn derived_tables_do_not_depend_on_the_secret() {
    for cfg in [
        SchemeConfig::four_epr(Receiver::Charlie),
        SchemeConfig::four_epr(Receiver::Bob),
        SchemeConfig::circular(2).unwrap(),
    ] {
        let base = derive_correction_table(&cfg).unwrap();
        for seed in [1u64, 2, 3] {
            let t = derive_correction_table_with(&cfg, &secret_from(seed)).unwrap();
            let keyed = |t: &CorrectionTable| t.rules.iter().map(|r| (r.key, r.ops())).collect::<Vec<_>>();
            assert_eq!(keyed(&t), keyed(&base), "{cfg} seed {seed}");
        }
    }
}
