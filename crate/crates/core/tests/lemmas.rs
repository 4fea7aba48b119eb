use std::collections::BTreeSet;

use ijpred::belief::{belief_step, compile_predictor, initial_belief, predict_sequence};
use ijpred::oracle::{
    check_interval_coverage, check_predictor_soundness, oracle_beliefs, random_model, OracleConfig,
};
use ijpred::{analyze, fixtures, DesModel, DistanceTable, EventId, Exec, ExtNat, StateId, TimeInterval};

fn all_fixtures() -> Vec<(&'static str, DesModel)> {
    vec![
        ("fig1", fixtures::fig1()),
        ("fig2a", fixtures::fig2a()),
        ("fig2b", fixtures::fig2b()),
        ("fig3a(3)", fixtures::fig3a(3)),
    ]
}

fn random_models(count: u64) -> Vec<DesModel> {
    let cfg = OracleConfig::default();
    (0..count).map(|k| random_model(&cfg, k)).collect()
}

#[test]
fn query_answers_are_monotone() {
    let models = all_fixtures().into_iter().map(|(_, m)| m).chain(random_models(200));
    for m in models {
        let (_, _, f) = analyze(&m);
        let bound = m.state_count() as u32 + 2;
        let ok = |i: u32, j: ExtNat| f.is_ij_predictable(i, j).unwrap().predictable;
        for (i, j, yes) in f.query_grid(bound, bound, Exec::default()) {
            if !yes {
                continue;
            }
            if let ExtNat::Fin(jv) = j {
                assert!(ok(i, ExtNat::Fin(jv + 1)), "({i},{j}) but not ({i},{})", jv + 1);
            }
            if i >= 2 {
                assert!(ok(i - 1, j.dec()), "({i},{j}) but not ({},{})", i - 1, j.dec());
            }
        }
    }
}

#[test]
fn one_more_observation_shrinks_prediction() {
    let models = all_fixtures().into_iter().map(|(_, m)| m).chain(random_models(100));
    for m in models {
        let d = DistanceTable::compute(&m);
        let a = compile_predictor(&m, &d, 1 << 12).unwrap();
        for (i, node) in a.nodes().iter().enumerate() {
            let shrunk = node.interval().decrement();
            for &(_, j) in a.edges(i) {
                let next = a.nodes()[j].interval();
                assert!(next.is_subset(&shrunk), "{next} not within {shrunk}");
            }
        }
    }
}

#[test]
fn two_members_attain_the_hull() {
    let models = all_fixtures().into_iter().map(|(_, m)| m).chain(random_models(100));
    for m in models {
        let d = DistanceTable::compute(&m);
        let a = compile_predictor(&m, &d, 1 << 12).unwrap();
        for b in a.nodes() {
            let (lo, hi) = b.witnesses();
            assert!(b.members().contains(&lo) && b.members().contains(&hi));
            let pair = d.state_interval(lo).hull(&d.state_interval(hi));
            assert_eq!(pair, b.interval());
            let full = b
                .members()
                .iter()
                .map(|&q| d.state_interval(q))
                .reduce(|x, y| x.hull(&y))
                .unwrap();
            assert_eq!(full, b.interval());
        }
    }
}

#[test]
fn closure_step_matches_single_observation_search() {
    let models = all_fixtures().into_iter().map(|(_, m)| m).chain(random_models(100));
    for m in models {
        let d = DistanceTable::compute(&m);
        let a = compile_predictor(&m, &d, 1 << 12).unwrap();
        let mine: BTreeSet<Vec<StateId>> = a.nodes().iter().map(|b| b.members().to_vec()).collect();
        let reference: BTreeSet<Vec<StateId>> = oracle_beliefs(&m, 1 << 12)
            .unwrap()
            .into_iter()
            .map(|b| b.into_iter().collect())
            .collect();
        assert_eq!(mine, reference);
    }
}

#[test]
fn predictions_are_sound_on_sampled_runs() {
    let cfg = OracleConfig {
        runs: 1000,
        run_length: 20,
        ..OracleConfig::default()
    };
    for (name, m) in all_fixtures() {
        let d = DistanceTable::compute(&m);
        let r = check_predictor_soundness(&m, &d, &cfg, Exec::default());
        assert_eq!(r.runs, 1000);
        assert!(r.checks >= 1000 * 21);
        assert_eq!(r.violations, 0, "{name}: {r:?}");
    }
    for m in random_models(50) {
        let d = DistanceTable::compute(&m);
        let small = OracleConfig { runs: 100, ..cfg.clone() };
        assert_eq!(check_predictor_soundness(&m, &d, &small, Exec::default()).violations, 0);
    }
}

#[test]
fn fig1_faulty_runs_get_a_one_two_warning() {
    let m = fixtures::fig1();
    let d = DistanceTable::compute(&m);
    let cfg = OracleConfig {
        runs: 2000,
        run_length: 30,
        ..OracleConfig::default()
    };
    let target = TimeInterval::new(1, 2).unwrap();
    let r = check_interval_coverage(&m, &d, target, &cfg, Exec::default());
    assert!(r.faulty_runs > 100, "{r:?}");
    assert_eq!(r.uncovered, 0);
}

/// Hand-written predictor for fig1: `(2,inf)` until `d`, then `(1,2)`,
/// `(0,1)` one observation later and `(0,0)` afterwards.
fn reference_predictor(m: &DesModel, o: &[EventId]) -> TimeInterval {
    let d = m.event_by_name("d").unwrap();
    match o.iter().position(|&e| e == d) {
        None => TimeInterval::new(2, ExtNat::Inf).unwrap(),
        Some(k) => match o.len() - k - 1 {
            0 => TimeInterval::new(1, 2).unwrap(),
            1 => TimeInterval::new(0, 1).unwrap(),
            _ => TimeInterval::new(0, 0).unwrap(),
        },
    }
}

#[test]
fn optimal_prediction_refines_hand_written_predictor() {
    let m = fixtures::fig1();
    let d = DistanceTable::compute(&m);
    let observable: Vec<EventId> = m.observable_events().collect();
    // Every feasible observation sequence up to length 8.
    let mut frontier = vec![(Vec::<EventId>::new(), initial_belief(&m, &d))];
    let mut checked = 0;
    for _ in 0..=8 {
        let mut next = Vec::new();
        for (o, b) in frontier {
            let ours = b.interval();
            let theirs = reference_predictor(&m, &o);
            assert!(ours.is_subset(&theirs), "{o:?}: {ours} not within {theirs}");
            assert_eq!(predict_sequence(&m, &d, &o).unwrap(), ours);
            checked += 1;
            for &e in &observable {
                if let Ok(b2) = belief_step(&m, &d, &b, e) {
                    let mut o2 = o.clone();
                    o2.push(e);
                    next.push((o2, b2));
                }
            }
        }
        frontier = next;
    }
    assert!(checked > 50);
}
