use num_traits::{One, Zero};
use proptest::prelude::*;

use pitman_core::numeric::{int, pow, q_bracket, rat, tail_sum_ratio, tail_sum_ratio_truncated, Mode, Prob, Rat};
use pitman_core::path::Path;
use pitman_core::pitman::{apply_t, preimage, preimage_stats, running_max_identity_check, s_r, tropical_compose_check};
use pitman_core::processes::{chain_transition, walk_path_prob, InitialLaw, Params};
use pitman_core::representation::{
    g_law_from_initial, rhs_law_formula, verify_thm1, verify_two_sided, Level, LevelLaw, Part,
};
use pitman_core::scaling::{LimitLevelLaw, Mu};

fn path_strategy(max_len: usize) -> impl Strategy<Value = Path> {
    prop::collection::vec(-1i8..=1, 0..=max_len).prop_map(|s| Path::from_steps(s).unwrap())
}

fn rho_strategy() -> impl Strategy<Value = Rat> {
    prop::sample::select(vec![rat(1, 3), rat(1, 2), rat(2, 3), int(1), rat(3, 2), int(2), int(3)])
}

fn params_strategy() -> impl Strategy<Value = Params> {
    (rho_strategy(), 0i64..=2).prop_map(|(rho, sigma)| Params::new(rho, int(sigma)).unwrap())
}

/// Finite-support law with up to four atoms in `0..=6` and random rational masses.
fn finite_law_strategy() -> impl Strategy<Value = InitialLaw> {
    prop::collection::btree_map(0u64..=6, 1i64..=9, 1..=4).prop_map(|atoms| {
        let total: i64 = atoms.values().sum();
        InitialLaw::finite(atoms.into_iter().map(|(n, w)| (n, rat(w, total))).collect()).unwrap()
    })
}

fn mu_strategy() -> impl Strategy<Value = Mu> {
    let leaf = prop_oneof![
        (0.0f64..4.0).prop_map(Mu::Point),
        (0.2f64..3.0).prop_map(Mu::Exp),
        (0.2f64..3.0, 0.2f64..3.0).prop_filter("distinct rates", |(a, b)| (a - b).abs() > 0.05).prop_map(|(a, b)| Mu::Hypoexp(a, b)),
    ];
    prop_oneof![
        leaf.clone(),
        (leaf.clone(), leaf, 0.1f64..0.9).prop_map(|(a, b, w)| Mu::Mixture(vec![(w, a), (1.0 - w, b)])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn stats_invariants(x in path_strategy(40)) {
        let st = x.stats();
        let v = x.values();
        prop_assert_eq!(v[0], 0);
        prop_assert_eq!(st.up + st.down + st.flat, x.horizon());
        prop_assert_eq!(st.up as i64 - st.down as i64, x.end());
        prop_assert_eq!(st.global_min(), *v.iter().min().unwrap());
        prop_assert_eq!(st.global_max(), *v.iter().max().unwrap());
        prop_assert!(st.backward_min.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(st.forward_max.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn image_lies_in_its_preimage(s in path_strategy(14), g in 0i64..16) {
        let x = apply_t(g, &s).unwrap();
        prop_assert!(preimage(&x).contains(g, &s));
    }

    #[test]
    fn preimage_members_map_back(x in path_strategy(14)) {
        let set = preimage(&x);
        prop_assert_eq!(&set.ray.s, &x.negate());
        for g in set.ray.g_min..set.ray.g_min + 3 {
            prop_assert_eq!(&apply_t(g, &set.ray.s).unwrap(), &x);
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &set.sporadic {
            prop_assert_eq!(&apply_t(m.g, &m.s).unwrap(), &x);
            prop_assert!(seen.insert(m.s.clone()));
            prop_assert!(m.s != set.ray.s);
        }
        for r in set.k..=set.x_t {
            let s = s_r(&x, r).unwrap();
            let direct = s.stats();
            let counts = preimage_stats(&x, r).unwrap();
            prop_assert_eq!((counts.up, counts.down, counts.flat), (direct.up, direct.down, direct.flat));
            prop_assert!(running_max_identity_check(&x, r).unwrap());
        }
    }

    #[test]
    fn tropical_identities(x in path_strategy(60), g1 in 0i64..20, g2 in 0i64..20) {
        prop_assert_eq!(tropical_compose_check(&x, g1, g2).unwrap().violations(), 0);
    }

    #[test]
    fn q_bracket_identity(num in 1i64..12, den in 1i64..12, n in 0i64..=64) {
        let q = rat(num, den);
        let b = q_bracket(n, &q).unwrap();
        if q == Rat::one() {
            prop_assert_eq!(b, int(n));
        } else {
            prop_assert_eq!(b * (&q - Rat::one()), pow(&q, n) - Rat::one());
        }
    }

    #[test]
    fn chain_rows_sum_to_one(p in params_strategy(), k in 0i64..=20) {
        let total: Rat = (-1i8..=1).map(|d| chain_transition(k, d, &p).unwrap()).sum();
        prop_assert_eq!(total, Rat::one());
        prop_assert!(chain_transition(k, -1, &p).unwrap() >= Rat::zero());
    }

    #[test]
    fn tail_ratio_bounded_and_decreasing(law in finite_law_strategy(), rho in rho_strategy()) {
        let q = &rho * &rho;
        let mut prev = tail_sum_ratio(&law, 0, &q, Mode::Exact).unwrap().into_exact().unwrap();
        prop_assert!(prev <= Rat::one());
        for n in 1..=8 {
            let cur = tail_sum_ratio(&law, n, &q, Mode::Exact).unwrap().into_exact().unwrap();
            prop_assert!(cur <= prev);
            prev = cur;
        }
    }

    #[test]
    fn truncated_tail_ratio_within_own_bound(lambda in 0.1f64..6.0, n in 0u64..10, q in 0.3f64..3.0) {
        let law = InitialLaw::ShiftedPoisson(lambda);
        let cut = law.truncation_point(1e-15).unwrap();
        let short = tail_sum_ratio_truncated(&law, n, q, cut);
        let long = tail_sum_ratio_truncated(&law, n, q, 10 * cut);
        prop_assert!((short.value() - long.value()).abs() <= short.err() + long.err());
    }

    #[test]
    fn level_tail_consistent_with_pmf(law in finite_law_strategy(), p in params_strategy()) {
        for which in [Level::G, Level::GTilde] {
            let g = g_law_from_initial(&law, &p, which).unwrap();
            let mut total = Rat::zero();
            for n in 0..=8 {
                let pmf = g.pmf(n).into_exact().unwrap();
                prop_assert!(pmf >= Rat::zero());
                let tail = g.tail(n).into_exact().unwrap() - g.tail(n + 1).into_exact().unwrap();
                prop_assert_eq!(&tail, &pmf);
                total += pmf;
            }
            prop_assert_eq!(total, Rat::one());
        }
    }

    /// Summing walk probability times level probability over the preimage
    /// of `x` gives the law of `2(M - G)+ - S` at `x`.
    #[test]
    fn preimage_mass_is_pushforward(x in path_strategy(7), p in params_strategy(), law in finite_law_strategy()) {
        let glaw = g_law_from_initial(&law, &p, Level::G).unwrap();
        let set = preimage(&x);
        let mut mass = walk_path_prob(&set.ray.s, &p) * glaw.tail(set.ray.g_min as u64).into_exact().unwrap();
        for m in &set.sporadic {
            mass += walk_path_prob(&m.s, &p) * glaw.pmf(m.g as u64).into_exact().unwrap();
        }
        prop_assert_eq!(Prob::Exact(mass), rhs_law_formula(&x, &glaw, &p).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn representation_on_random_finite_laws(law in finite_law_strategy(), p in params_strategy(), t in 0usize..=4) {
        for part in [Part::I, Part::II] {
            let rep = verify_thm1(t, &law, &p, part).unwrap();
            prop_assert!(rep.passed() && rep.mode == Mode::Exact, "{:?}", rep.witness);
        }
        prop_assert!(verify_two_sided(t, &law, &p).unwrap().passed());
    }

    #[test]
    fn limit_law_is_a_distribution(mu in mu_strategy(), v in -1.0f64..1.0) {
        let law = LimitLevelLaw::new(v, mu).unwrap();
        let props = law.properties(300, 80.0).unwrap();
        prop_assert!(props.monotone && props.min_value >= 0.0);
        prop_assert!(props.total_mass_error <= 1e-8, "mass error {}", props.total_mass_error);
    }

    #[test]
    fn geometric_level_law_has_geometric_tail(num in 1i64..9) {
        let p = rat(num, 10);
        let g = LevelLaw::geometric(p.clone()).unwrap();
        for n in 0..10 {
            prop_assert_eq!(g.tail(n).into_exact().unwrap(), pow(&p, n as i64));
        }
    }
}
