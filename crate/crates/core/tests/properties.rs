//! Randomized invariants over small atomic instances.

mod common;

use common::{brute_cyclically_monotone, naive_cdf, naive_w1, probe_points};
use otline::couplings::{
    check_optimal_crossings, is_strongly_multiplicative_on, is_weakly_multiplicative,
    kellerer_plan, kellerer_plan_exact, monotone_coupling, w1_oracle, HalfPlane, IpfOptions,
};
use otline::decomposition::{line_components, marginal_components_of, reassemble, split_plan};
use otline::entropic::{
    check_cycle_invariance, sinkhorn_solve, tv_distance, verify_eps_invariance, SinkhornOptions,
};
use otline::measure::IntervalSpec;
use otline::orders::{leq_f, leq_g, leq_st};
use otline::plan::TransportPlan;
use otline::{q, Bound, Measure, Scalar, Side};
use proptest::prelude::*;

fn measure_strategy() -> impl Strategy<Value = Measure> {
    prop::collection::btree_map(-4i64..=6, 1i64..=4, 1..=6).prop_map(|pts| {
        Measure::atomic(pts.into_iter().map(|(x, w)| (q(x, 1), q(w, 1))).collect()).unwrap()
    })
}

/// Two atomic measures rescaled to probability measures.
fn pair_strategy() -> impl Strategy<Value = (Measure, Measure)> {
    (measure_strategy(), measure_strategy()).prop_map(|(a, b)| {
        let (ma, mb) = (a.mass(), b.mass());
        (
            a.scale(&(Scalar::one() / ma)),
            b.scale(&(Scalar::one() / mb)),
        )
    })
}

fn rational_strategy() -> impl Strategy<Value = Scalar> {
    (-20i64..=20, 1i64..=6).prop_map(|(p, d)| q(p, d))
}

fn plan_strategy() -> impl Strategy<Value = TransportPlan> {
    prop::collection::vec((-3i64..=5, -3i64..=5, 1i64..=5), 1..=7).prop_map(|cells| {
        TransportPlan::new(
            cells
                .into_iter()
                .map(|(x, y, w)| (q(x, 1), q(y, 1), q(w, 3)))
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn json_round_trip(m in measure_strategy()) {
        let text = serde_json::to_string(&m.to_json()).unwrap();
        prop_assert_eq!(Measure::parse_json(&text).unwrap(), m);
    }

    #[test]
    fn csv_round_trip(p in plan_strategy()) {
        let text = p.to_csv_string();
        prop_assert_eq!(TransportPlan::read_csv(text.as_bytes()).unwrap(), p);
    }

    #[test]
    fn scalar_display_parses_back(s in rational_strategy()) {
        prop_assert_eq!(s.to_string().parse::<Scalar>().unwrap(), s);
    }

    #[test]
    fn cdf_matches_direct_sums(m in measure_strategy(), t in rational_strategy()) {
        let (minus, plus) = naive_cdf(&m, &t);
        prop_assert_eq!(m.cdf_at(&t, Side::Minus), minus);
        prop_assert_eq!(m.cdf_at(&t, Side::Plus), plus);
    }

    #[test]
    fn restriction_is_additive(m in measure_strategy(), t in rational_strategy()) {
        let left = m.restrict(&IntervalSpec::new(Bound::NegInf, Bound::Finite(t.clone()), false, true).unwrap());
        let right = m.restrict(&IntervalSpec::new(Bound::Finite(t), Bound::PosInf, false, false).unwrap());
        prop_assert_eq!(left.add(&right), m.clone());
        prop_assert_eq!(m.restrict(&IntervalSpec::real_line()), m);
    }

    #[test]
    fn quantile_inverts_cdf(m in measure_strategy(), k in 1i64..=60) {
        let u = m.mass() * q(k, 60);
        let x = m.quantile(&u).unwrap();
        prop_assert!(m.cdf_at(&x, Side::Minus) < u);
        prop_assert!(m.cdf_at(&x, Side::Plus) >= u);
    }

    #[test]
    fn strict_order_implies_large_implies_stochastic((g1, g2) in pair_strategy()) {
        if leq_g(&g1, &g2).holds {
            prop_assert!(leq_f(&g1, &g2).holds);
        }
        if leq_f(&g1, &g2).holds {
            prop_assert!(leq_st(&g1, &g2).holds);
        }
    }

    #[test]
    fn order_witnesses_fail_pointwise((g1, g2) in pair_strategy()) {
        let v = leq_st(&g1, &g2);
        if let Some(t) = v.witness_t {
            prop_assert!(g1.cdf_at(&t, Side::Plus) < g2.cdf_at(&t, Side::Plus));
        }
    }

    #[test]
    fn decomposition_sums_back((mu, nu) in pair_strategy()) {
        let (_, mc) = marginal_components_of(&mu, &nu).unwrap();
        prop_assert_eq!(mc.mu_total(), mu);
        prop_assert_eq!(mc.nu_total(), nu);
        prop_assert_eq!(mc.mu_eq(), mc.nu_eq());
        for (a, b) in &mc.pos {
            prop_assert!(leq_f(a, b).holds);
        }
        for (a, b) in &mc.neg {
            prop_assert!(leq_f(b, a).holds);
        }
    }

    #[test]
    fn decomposition_is_symmetric((mu, nu) in pair_strategy()) {
        let d = line_components(&mu, &nu).unwrap();
        let r = line_components(&nu, &mu).unwrap();
        prop_assert_eq!(&d.pos, &r.neg);
        prop_assert_eq!(&d.neg, &r.pos);
        prop_assert_eq!(d.e_eq(), r.e_eq());
        prop_assert_eq!(d.boundary(), r.boundary());
    }

    #[test]
    fn equal_marginals_have_no_components(m in measure_strategy()) {
        let d = line_components(&m, &m).unwrap();
        prop_assert!(d.pos.is_empty() && d.neg.is_empty());
    }

    #[test]
    fn boundary_lies_in_e_eq((mu, nu) in pair_strategy()) {
        let d = line_components(&mu, &nu).unwrap();
        for b in d.boundary() {
            prop_assert!(d.e_eq().contains(&b));
        }
        for t in probe_points(&mu, &nu) {
            let n_in = [d.e_plus().contains(&t), d.e_minus().contains(&t), d.e_eq().contains(&t)];
            prop_assert_eq!(n_in.iter().filter(|b| **b).count(), 1);
        }
    }

    #[test]
    fn w1_oracles_agree((mu, nu) in pair_strategy()) {
        prop_assert_eq!(w1_oracle(&mu, &nu).unwrap(), naive_w1(&mu, &nu));
    }

    #[test]
    fn monotone_and_kellerer_plans_are_optimal((mu, nu) in pair_strategy()) {
        let w1 = w1_oracle(&mu, &nu).unwrap();
        for pi in [monotone_coupling(&mu, &nu).unwrap(), kellerer_plan_exact(&mu, &nu).unwrap()] {
            prop_assert!(pi.couples(&mu, &nu, 0.0));
            prop_assert_eq!(pi.cost(), w1.clone());
            prop_assert!(check_optimal_crossings(&pi).holds);
        }
        prop_assert!(is_weakly_multiplicative(&kellerer_plan_exact(&mu, &nu).unwrap(), 0.0).holds);
    }

    #[test]
    fn crossing_check_matches_short_cycles(pi in plan_strategy()) {
        prop_assert_eq!(check_optimal_crossings(&pi).holds, brute_cyclically_monotone(&pi, 3));
    }

    #[test]
    fn split_then_reassemble_is_identity((mu, nu) in pair_strategy()) {
        let dec = line_components(&mu, &nu).unwrap();
        for pi in [monotone_coupling(&mu, &nu).unwrap(), kellerer_plan_exact(&mu, &nu).unwrap()] {
            let pc = split_plan(&pi, &dec, 0.0).unwrap();
            prop_assert!(pc.remainder.is_empty());
            prop_assert_eq!(reassemble(&pc), pi);
        }
    }

    #[test]
    fn exact_components_are_strongly_multiplicative((mu, nu) in pair_strategy()) {
        let dec = line_components(&mu, &nu).unwrap();
        let k = kellerer_plan_exact(&mu, &nu).unwrap();
        let pc = split_plan(&k, &dec, 0.0).unwrap();
        for p in &pc.pos {
            prop_assert!(is_strongly_multiplicative_on(p, HalfPlane::F, 0.0).holds);
        }
        for p in &pc.neg {
            prop_assert!(is_strongly_multiplicative_on(p, HalfPlane::FTilde, 0.0).holds);
        }
    }

    #[test]
    fn ipf_agrees_with_exact_sweep((mu, nu) in pair_strategy()) {
        let exact = kellerer_plan_exact(&mu, &nu).unwrap().to_float();
        let fitted = kellerer_plan(&mu, &nu, IpfOptions::default()).unwrap();
        prop_assert!(tv_distance(&exact, &fitted.plan) < 1e-9);
    }

    #[test]
    fn tv_is_a_metric(p in plan_strategy(), r in plan_strategy(), s in plan_strategy()) {
        let (p, r, s) = (p.to_float(), r.to_float(), s.to_float());
        prop_assert_eq!(tv_distance(&p, &p), 0.0);
        prop_assert_eq!(tv_distance(&p, &r), tv_distance(&r, &p));
        prop_assert!(tv_distance(&p, &s) <= tv_distance(&p, &r) + tv_distance(&r, &s) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn converged_sinkhorn_satisfies_invariants((mu, nu) in pair_strategy(), k in 0usize..3) {
        let eps = [1.0, 0.5, 0.2][k];
        let res = sinkhorn_solve(&mu, &nu, eps, SinkhornOptions::default()).unwrap();
        prop_assume!(res.converged);
        prop_assert!(res.plan.couples(&mu, &nu, 1e-8));
        prop_assert!(verify_eps_invariance(&res, &mu, &nu, 1e-8).holds);
        prop_assert!(check_cycle_invariance(&res.plan, &mu, &nu, eps, 1e-8).holds);
        prop_assert!(is_weakly_multiplicative(&res.plan, 1e-8).holds);
    }
}
