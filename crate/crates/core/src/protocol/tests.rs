use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::field::FieldElement;
use crate::fixtures::{self, f5};
use crate::{nodes, NodeId};

fn encode_instances(
    scheme: &LinearScheme,
    instances: usize,
    seed: u64,
) -> Vec<Vec<Vec<FieldElement>>> {
    let field = scheme.field();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..instances)
        .map(|_| {
            let m: Vec<_> = (0..scheme.message_len())
                .map(|_| field.uniform_element(&mut rng))
                .collect();
            scheme.encode_random(&m, &mut rng).unwrap().0
        })
        .collect()
}

fn failed_network(
    scheme: &LinearScheme,
    codewords: &[Vec<Vec<FieldElement>>],
    failed: &[usize],
) -> Network {
    let mut net = Network::from_codewords(scheme.clone(), codewords).unwrap();
    for &e in failed {
        net.fail(NodeId(e)).unwrap();
    }
    net
}

fn truth(codewords: &[Vec<Vec<FieldElement>>], e: usize) -> Vec<Vec<FieldElement>> {
    codewords.iter().map(|c| c[e - 1].clone()).collect()
}

fn fig1_config() -> ProtocolConfig {
    ProtocolConfig {
        c2_subscheme: Some(fixtures::fig1_subscheme()),
        ..Default::default()
    }
}

#[test]
fn fig1_run_matches_the_worked_example() {
    let f = f5();
    let scheme = fixtures::fig1_scheme();
    for m in 0..5 {
        for u in 0..5 {
            let c = scheme.encode(&f.elems(&[m]), &f.elems(&[u])).unwrap();
            let net = failed_network(&scheme, std::slice::from_ref(&c), &[1]);
            let out = run_construction2(
                &net,
                &fixtures::fig1_plan(),
                &nodes(&[2, 3]),
                &fig1_config(),
                &mut SeededCoins::new(m * 5 + u),
            )
            .unwrap();
            let tr = &out.transcript;
            let u2 = tr.coins[&NodeId(2)][0];
            let u3 = tr.coins[&NodeId(3)][0];
            let (c1, c2, c3) = (c[0][0], c[1][0], c[2][0]);
            let two = f.elem(2);
            let four = f.elem(4);
            assert_eq!(tr.received[&NodeId(3)], vec![u2 + c2]);
            assert_eq!(tr.received[&NodeId(2)], vec![u3]);
            assert_eq!(
                tr.received[&NodeId(1)],
                vec![
                    two * u2 + four * u3,
                    two * u2 + four * u3 + two * c2 + four * c3
                ]
            );
            assert_eq!(out.repaired, vec![vec![c1]]);
            assert_eq!(out.bandwidth.total_symbols, 4);
            assert_eq!(
                (out.bandwidth.round1_symbols, out.bandwidth.round2_symbols),
                (2, 2)
            );
        }
    }
}

#[test]
fn fig1_adversary_views() {
    let f = f5();
    let scheme = fixtures::fig1_scheme();
    let c = scheme.encode(&f.elems(&[3]), &f.elems(&[4])).unwrap();
    let net = failed_network(&scheme, std::slice::from_ref(&c), &[1]);
    let out = run_construction2(
        &net,
        &fixtures::fig1_plan(),
        &nodes(&[2, 3]),
        &fig1_config(),
        &mut SeededCoins::new(1),
    )
    .unwrap();
    let tr = &out.transcript;
    let (u2, u3) = (tr.coins[&NodeId(2)][0], tr.coins[&NodeId(3)][0]);
    let v2 = adversary_view(tr, &net, &nodes(&[2])).unwrap();
    assert_eq!(
        (v2.shares, v2.coins, v2.received),
        (c[1].clone(), vec![u2], vec![u3])
    );
    let v3 = adversary_view(tr, &net, &nodes(&[3])).unwrap();
    assert_eq!(
        (v3.shares, v3.coins, v3.received),
        (c[2].clone(), vec![u3], vec![u2 + c[1][0]])
    );
    let v1 = adversary_view(tr, &net, &nodes(&[1])).unwrap();
    assert!(v1.shares.is_empty() && v1.coins.is_empty());
    assert_eq!(v1.received.len(), 2);
    let none = adversary_view(tr, &net, &[]).unwrap();
    assert!(none.symbols().is_empty());
    assert!(adversary_view(tr, &net, &nodes(&[4])).is_err());
}

#[test]
fn zero_data_and_zero_coins_give_zero_payloads() {
    let f = f5();
    let scheme = fixtures::fig1_scheme();
    let c = scheme.encode(&f.elems(&[0]), &f.elems(&[0])).unwrap();
    let net = failed_network(&scheme, &[c], &[1]);
    let out = run_construction2(
        &net,
        &fixtures::fig1_plan(),
        &nodes(&[2, 3]),
        &ProtocolConfig::default(),
        &mut ZeroCoins,
    )
    .unwrap();
    assert!(out
        .transcript
        .messages
        .iter()
        .all(|m| m.payload.iter().all(FieldElement::is_zero)));
    assert_eq!(out.repaired, vec![vec![f.zero()]]);
}

#[test]
fn construction2_default_shamir_subscheme_and_any_receivers() {
    let scheme = fixtures::fig1_scheme();
    let cw = encode_instances(&scheme, 2, 9);
    let net = failed_network(&scheme, &cw, &[1]);
    let plan = fixtures::fig1_plan();
    // receivers inside I, or including the failed node itself
    for recv in [nodes(&[2, 3]), nodes(&[1, 2]), nodes(&[3, 1])] {
        for seed in 0..10 {
            let out = run_construction2(
                &net,
                &plan,
                &recv,
                &ProtocolConfig::default(),
                &mut SeededCoins::new(seed),
            )
            .unwrap();
            assert_eq!(out.repaired, truth(&cw, 1));
            assert!(out.bandwidth.total_symbols <= 2 * ((2 + 1) * (1 + 1)));
            let session = RepairSession::new(
                ProtocolKind::C2,
                &scheme,
                &plan,
                &recv,
                &ProtocolConfig::default(),
            )
            .unwrap();
            assert_eq!(
                session.reconstruct(&out.transcript.received[&NodeId(1)], 2),
                out.repaired
            );
        }
    }
}

#[test]
fn construction2_distilled_values_encode_the_lost_share() {
    let scheme = fixtures::ramp(5, 2, 2, 7);
    let cw = encode_instances(&scheme, 1, 3);
    let net = failed_network(&scheme, &cw, &[5]);
    let plan = scheme
        .find_repair_plan(NodeId(5), &nodes(&[1, 2, 3, 4]))
        .unwrap();
    let recv = nodes(&[1, 2, 4]);
    let config = ProtocolConfig::default();
    let out = run_construction2(&net, &plan, &recv, &config, &mut SeededCoins::new(77)).unwrap();
    let sub = config.c2_subscheme_for(&scheme).unwrap();
    let distilled = recv
        .iter()
        .enumerate()
        .map(|(k, v)| (NodeId(k + 1), out.transcript.distilled[v].clone()))
        .collect();
    assert_eq!(sub.decode(&distilled).unwrap(), cw[0][4]);
    assert!(out.bandwidth.total_symbols <= ((plan.helpers().len() + 1) * 3) as u64);
}

#[test]
fn construction4_recovers_all_instances() {
    let scheme = fixtures::ramp4_scheme();
    for seed in 0..20 {
        let cw = encode_instances(&scheme, 3, seed);
        for e in 1..=4 {
            let net = failed_network(&scheme, &cw, &[e]);
            let others: Vec<NodeId> = (1..=4).filter(|&i| i != e).map(NodeId).collect();
            let plan = scheme
                .derive_repair_function(NodeId(e), &others, &[0])
                .unwrap();
            let out = run_construction4(
                &net,
                &plan,
                &ProtocolConfig::default(),
                &mut SeededCoins::new(seed),
            )
            .unwrap();
            assert_eq!(out.repaired, truth(&cw, e));
            let bw = &out.bandwidth;
            assert_eq!(bw.symbols_repaired, 3);
            assert!(bw.total_symbols <= 4 * 4);
            assert!(bw.normalized <= num_rational::Ratio::new(16, 3));
        }
    }
}

#[test]
fn construction4_batches_extra_instances() {
    let scheme = fixtures::ramp4_scheme();
    let cw = encode_instances(&scheme, 7, 4);
    let net = failed_network(&scheme, &cw, &[2]);
    let plan = scheme
        .find_repair_plan(NodeId(2), &nodes(&[1, 3, 4]))
        .unwrap();
    let out = run_construction4(
        &net,
        &plan,
        &ProtocolConfig::default(),
        &mut SeededCoins::new(1),
    )
    .unwrap();
    assert_eq!(out.repaired, truth(&cw, 2));
    // three batches of (|I| + 1)(n - 1) symbols
    assert_eq!(out.bandwidth.total_symbols, 3 * 4 * 3);
}

#[test]
fn construction4_rejects_too_few_instances_and_vector_schemes() {
    let scheme = fixtures::ramp4_scheme();
    let cw = encode_instances(&scheme, 2, 4);
    let net = failed_network(&scheme, &cw, &[2]);
    let plan = scheme
        .find_repair_plan(NodeId(2), &nodes(&[1, 3, 4]))
        .unwrap();
    assert_eq!(
        run_construction4(&net, &plan, &ProtocolConfig::default(), &mut ZeroCoins).unwrap_err(),
        ProtocolError::InsufficientInstances { needed: 3, got: 2 }
    );

    let vs = fixtures::vector_fig1x2_scheme();
    let vnet = failed_network(&vs, &encode_instances(&vs, 2, 1), &[1]);
    assert!(matches!(
        run_construction4(
            &vnet,
            &fixtures::vector_plan(1),
            &ProtocolConfig::default(),
            &mut ZeroCoins
        ),
        Err(ProtocolError::Unsupported(_))
    ));
    assert!(matches!(
        run_construction2(
            &vnet,
            &fixtures::vector_plan(1),
            &nodes(&[2, 3]),
            &ProtocolConfig::default(),
            &mut ZeroCoins
        ),
        Err(ProtocolError::Unsupported(_))
    ));
}

#[test]
fn construction5_repairs_vector_fixture() {
    let scheme = fixtures::vector_fig1x2_scheme();
    for seed in 0..20 {
        let cw = encode_instances(&scheme, 2, seed);
        for e in 1..=3 {
            let net = failed_network(&scheme, &cw, &[e]);
            let plan = fixtures::vector_plan(e);
            let out = run_construction5(
                &net,
                &plan,
                &ProtocolConfig::default(),
                &mut SeededCoins::new(seed),
            )
            .unwrap();
            assert_eq!(out.repaired, truth(&cw, e));
            assert_eq!(out.bandwidth.symbols_repaired, 4);
            assert!(out.bandwidth.total_symbols <= (2 * 2 + 2) * 3);
        }
    }
}

#[test]
fn construction5_with_scalar_scheme_is_construction4() {
    let scheme = fixtures::ramp4_scheme();
    let cw = encode_instances(&scheme, 3, 8);
    let net = failed_network(&scheme, &cw, &[3]);
    let plan = scheme
        .find_repair_plan(NodeId(3), &nodes(&[1, 2, 4]))
        .unwrap();
    let c4 = run_construction4(
        &net,
        &plan,
        &ProtocolConfig::default(),
        &mut SeededCoins::new(5),
    )
    .unwrap();
    let c5 = run_construction5(
        &net,
        &plan,
        &ProtocolConfig::default(),
        &mut SeededCoins::new(5),
    )
    .unwrap();
    assert_eq!(c4.transcript, c5.transcript);
    assert_eq!(c4.bandwidth, c5.bandwidth);
}

#[test]
fn self_pieces_are_never_messages() {
    let scheme = fixtures::ramp4_scheme();
    let cw = encode_instances(&scheme, 3, 2);
    let net = failed_network(&scheme, &cw, &[1]);
    let plan = scheme
        .find_repair_plan(NodeId(1), &nodes(&[2, 3, 4]))
        .unwrap();
    let out = run_construction4(
        &net,
        &plan,
        &ProtocolConfig::default(),
        &mut SeededCoins::new(0),
    )
    .unwrap();
    let tr = &out.transcript;
    assert!(tr.messages.iter().all(|m| m.from != m.to));
    let sum: u64 = tr.messages.iter().map(|m| m.payload.len() as u64).sum();
    assert_eq!(sum, out.bandwidth.total_symbols);
    // |I| (n - 1) pieces in round one, n - 1 values in round two
    assert_eq!(
        (out.bandwidth.round1_symbols, out.bandwidth.round2_symbols),
        (9, 3)
    );
    for (v, d) in &tr.received {
        let concat: Vec<_> = tr
            .messages
            .iter()
            .filter(|m| m.to == *v)
            .flat_map(|m| m.payload.clone())
            .collect();
        assert_eq!(&concat, d);
    }
}

#[test]
fn same_seed_same_transcript() {
    let scheme = fixtures::ramp4_scheme();
    let cw = encode_instances(&scheme, 3, 2);
    let net = failed_network(&scheme, &cw, &[4]);
    let plan = scheme
        .find_repair_plan(NodeId(4), &nodes(&[1, 2, 3]))
        .unwrap();
    let run = |seed| {
        run_construction4(
            &net,
            &plan,
            &ProtocolConfig::default(),
            &mut SeededCoins::new(seed),
        )
        .unwrap()
    };
    assert_eq!(run(42).transcript.to_json(), run(42).transcript.to_json());
    assert_ne!(run(42).transcript.coins, run(43).transcript.coins);
}

#[test]
fn dead_helpers_and_receivers_are_rejected() {
    let scheme = fixtures::ramp(5, 2, 1, 7);
    let cw = encode_instances(&scheme, 1, 2);
    let net = failed_network(&scheme, &cw, &[1, 2]);
    let plan = scheme
        .derive_repair_function(NodeId(1), &nodes(&[2, 3, 4]), &[0])
        .unwrap();
    assert_eq!(
        run_construction2(
            &net,
            &plan,
            &nodes(&[3, 4]),
            &ProtocolConfig::default(),
            &mut ZeroCoins
        )
        .unwrap_err(),
        ProtocolError::DeadNode(NodeId(2))
    );
    let plan = scheme
        .derive_repair_function(NodeId(1), &nodes(&[3, 4, 5]), &[0])
        .unwrap();
    assert_eq!(
        run_construction2(
            &net,
            &plan,
            &nodes(&[2, 4]),
            &ProtocolConfig::default(),
            &mut ZeroCoins
        )
        .unwrap_err(),
        ProtocolError::DeadNode(NodeId(2))
    );
    assert_eq!(
        run_construction2(
            &net,
            &plan,
            &nodes(&[3]),
            &ProtocolConfig::default(),
            &mut ZeroCoins
        )
        .unwrap_err(),
        ProtocolError::ReceiverCount {
            expected: 2,
            got: 1
        }
    );
}

#[test]
fn repair_all_failures_restores_the_network() {
    let scheme = fixtures::ramp(5, 2, 1, 7);
    let cw = encode_instances(&scheme, 2, 6);
    let mut net = failed_network(&scheme, &cw, &[2, 4]);
    let reports = repair_all_failures(
        &mut net,
        &ProtocolConfig::default(),
        &mut SeededCoins::new(3),
    )
    .unwrap();
    assert_eq!(reports.len(), 2);
    assert!(net.is_consistent().unwrap());
    for e in [2, 4] {
        assert_eq!(net.stack(NodeId(e)).unwrap().shares, truth(&cw, e));
    }

    let mut intact = Network::from_codewords(scheme.clone(), &cw).unwrap();
    assert!(
        repair_all_failures(&mut intact, &ProtocolConfig::default(), &mut ZeroCoins)
            .unwrap()
            .is_empty()
    );

    let mut too_many = failed_network(&scheme, &cw, &[1, 3, 5]);
    assert_eq!(
        repair_all_failures(&mut too_many, &ProtocolConfig::default(), &mut ZeroCoins).unwrap_err(),
        ProtocolError::Unrepairable(NodeId(1))
    );
}

#[test]
fn network_rejects_inconsistent_stacks() {
    let f = f5();
    let scheme = fixtures::ramp4_scheme();
    let mut cw = encode_instances(&scheme, 1, 0);
    cw[0][2][0] += f.one();
    assert_eq!(
        Network::from_codewords(scheme.clone(), &cw).unwrap_err(),
        ProtocolError::Inconsistent { instance: 1 }
    );
}

#[test]
fn bandwidth_json_has_exact_ratio() {
    let bw = BandwidthReport::new(9, 3, 3);
    let v = serde_json::to_value(&bw).unwrap();
    assert_eq!(v["normalized"], serde_json::json!({"num": 4, "den": 1}));
    assert_eq!(v["total_symbols"], 12);
    assert_eq!(
        BandwidthReport::new(0, 0, 0).normalized,
        num_rational::Ratio::from_integer(0)
    );
}

#[test]
fn subscheme_overrides_are_checked() {
    let scheme = fixtures::fig1_scheme();
    let bad = ProtocolConfig {
        c2_subscheme: Some(fixtures::ramp4_scheme()),
        ..Default::default()
    };
    assert!(matches!(
        bad.c2_subscheme_for(&scheme),
        Err(ProtocolError::SubScheme(_))
    ));
    let def = crate::schemes::ProtocolDef {
        c2_generator: Some(vec![vec![0, 1], vec![1, 1]]),
        ..Default::default()
    };
    let cfg = ProtocolConfig::from_def(&def, f5(), 1).unwrap();
    assert_eq!(
        cfg.c2_subscheme_for(&scheme).unwrap(),
        fixtures::fig1_subscheme()
    );
    // key row of zeros leaks the share through the second piece
    let leaky = crate::schemes::ProtocolDef {
        c2_generator: Some(vec![vec![1, 1], vec![0, 0]]),
        ..Default::default()
    };
    let cfg = ProtocolConfig::from_def(&leaky, f5(), 1).unwrap();
    assert!(cfg.c2_subscheme_for(&scheme).is_err());
}
