mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use vulnscope::flat::ode::SocialParams;
use vulnscope::flat::{
    bnf_quotient, bnf_slice_partition, difference_flat_quotient, recover_social, simulate_ode, BnfChain,
    FlatAlphabetSpec, OdeModel, Sign, Trajectory,
};
use vulnscope::ts::{check_quotient_condition, coarsest_bisimulation, quotient};

use common::{delay_chain, simulate_bnf_crossings};

fn window_spec(y: usize, k: usize) -> FlatAlphabetSpec {
    FlatAlphabetSpec::new((0..y).map(|i| format!("y{i}")).collect(), k).unwrap()
}

#[test]
fn slice_partition_examples() {
    let c1 = BnfChain::new(1, 1.0, (0.0, 3.0), 10.0).unwrap();
    let s = bnf_slice_partition(&c1, &[0.5]).unwrap();
    assert_eq!((s.slice, s.signs.len()), (0, 0));
    let c2 = BnfChain::new(2, 1.0, (0.0, 3.0), 10.0).unwrap();
    let s = bnf_slice_partition(&c2, &[1.2, -0.3]).unwrap();
    assert_eq!((s.slice, s.signs), (1, vec![Sign::Minus]));
    let c3 = BnfChain::new(3, 1.0, (0.0, 3.0), 10.0).unwrap();
    let s = bnf_slice_partition(&c3, &[0.1, 0.0, -5.0]).unwrap();
    assert_eq!((s.slice, s.signs), (0, vec![Sign::Plus, Sign::Minus]));
    assert!(bnf_slice_partition(&c3, &[3.0, 0.0, 0.0]).is_err());
}

#[test]
fn bnf_edges_match_bang_bang_simulation() {
    for n in 1..=3 {
        let chain = BnfChain::new(n, 1.0, (0.0, 3.0), 1.0).unwrap();
        let ts = bnf_quotient(&chain);
        let emitted: BTreeSet<(usize, usize)> = ts.edges().filter(|(s, t)| s != t).collect();
        let seen: BTreeSet<(usize, usize)> = simulate_bnf_crossings(&chain, 400, n as u64).into_iter().collect();
        assert!(seen.is_subset(&emitted), "n = {n}: unexplained crossings {:?}", seen.difference(&emitted));
        assert_eq!(seen, emitted, "n = {n}: edges without a witness");
    }
}

#[test]
fn window_quotient_of_delay_chain_is_de_bruijn() {
    for y in 1..=3 {
        for k in 1..=3 {
            let (chain, part) = delay_chain(y, k);
            assert!(check_quotient_condition(&chain, &part).unwrap());
            let q = quotient(&chain, &part).unwrap();
            let db = difference_flat_quotient(&window_spec(y, k), 1_000).unwrap();
            assert_eq!(q.edges().collect::<Vec<_>>(), db.edges().collect::<Vec<_>>());
            assert_eq!(q.output_map(), db.output_map());
            let coarse = coarsest_bisimulation(&db);
            if y >= 2 {
                assert!(coarse.is_singleton());
            } else {
                assert_eq!(coarse.block_count(), 1);
            }
            assert_eq!(coarsest_bisimulation(&chain).blocks(), part.blocks());
        }
    }
}

#[test]
fn window_budget_is_enforced() {
    assert!(difference_flat_quotient(&window_spec(3, 5), 100).is_err());
}

#[test]
fn trajectory_csv_round_trip() {
    let mut model = OdeModel::default_social();
    model.horizon = 1.0;
    let traj = simulate_ode(&model).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("time,P,M,E\n"));
    assert!(!text.contains('\r'));
    let back = Trajectory::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.names, traj.names);
    assert_eq!(back.len(), traj.len());
    for (a, b) in back.states.iter().flatten().zip(traj.states.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn social_conservation(lambda in 0.01f64..0.2, beta in 0.5f64..3.0, d1 in 0.1f64..0.6, d2 in 0.1f64..0.8, d3 in 0.05f64..0.4) {
        let mut model = OdeModel::default_social();
        for (k, v) in [("Lambda", lambda), ("beta", beta), ("delta1", d1), ("delta2", d2), ("delta3", d3)] {
            model.parameters.insert(k.into(), v);
        }
        model.horizon = 5.0;
        let traj = simulate_ode(&model).unwrap();
        let h = model.step;
        for w in traj.states.windows(2) {
            let (s0, s1): (f64, f64) = (w[0].iter().sum(), w[1].iter().sum());
            prop_assert!(((s1 - s0) / h - lambda).abs() < 1e-9);
        }
    }

    #[test]
    fn social_recovery_round_trip(lambda in 0.01f64..0.2, beta in 0.5f64..3.0, d1 in 0.1f64..0.6, d2 in 0.1f64..0.8, d3 in 0.05f64..0.4) {
        let mut model = OdeModel::default_social();
        for (k, v) in [("Lambda", lambda), ("beta", beta), ("delta1", d1), ("delta2", d2), ("delta3", d3)] {
            model.parameters.insert(k.into(), v);
        }
        model.horizon = 5.0;
        let traj = simulate_ode(&model).unwrap();
        let params = SocialParams::from_map(&model.parameters).unwrap();
        let rec = recover_social(&traj.column("E").unwrap(), model.step, 0.0, &params).unwrap();
        let (p, m) = (traj.column("P").unwrap(), traj.column("M").unwrap());
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
        for i in rec.valid.clone() {
            prop_assert!(rel(rec.p[i], p[i]) < 1e-6);
            prop_assert!(rel(rec.m[i], m[i]) < 1e-6);
            prop_assert!(rel(rec.lambda[i], lambda) < 1e-6);
        }
    }
}
