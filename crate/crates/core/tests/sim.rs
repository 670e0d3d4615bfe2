mod common;

use common::*;
use std::sync::Arc;
use tabver::protocol::wire::Direct;
use tabver::simharness::{
    metadata_distinguisher, metadata_shape, normalized_answers, run_experiment, AdversaryScript, Experiment,
    OracleDeveloper,
};

#[test]
fn oracles_reproduce_the_developer_byte_for_byte() {
    let g = demo_graph();
    for seed in 0..8 {
        let mut dev = developer(DEMO, 40 + seed);
        let params = dev.params();
        let script = AdversaryScript::new(seed);
        let real = script.run(&params, &mut Direct(&mut dev)).unwrap();
        let mut o = OracleDeveloper::new(Arc::clone(&params), &g, dev.seed(), Some(script.se_key(&params))).unwrap();
        let ideal = script.run(&params, &mut Direct(&mut o)).unwrap();
        assert!(!real.exchanges.is_empty());
        assert_eq!(real, ideal, "seed {seed}");
    }
}

#[test]
fn oracle_path_agrees_with_developer() {
    let g = demo_graph();
    let dev = developer(DEMO, 5);
    let params = dev.params();
    let o = OracleDeveloper::new(Arc::clone(&params), &g, dev.seed(), None).unwrap();
    let n = params.structure.len();
    for a in 0..n {
        assert_eq!(o.oracle_o2(&[a]), dev.vs_path(&[a]), "[{a}]");
        for b in 0..n {
            assert_eq!(o.oracle_o2(&[a, b]), dev.vs_path(&[a, b]), "[{a},{b}]");
        }
    }
}

#[test]
fn simulated_graph_matches_plaintext_answers() {
    let g = demo_graph();
    for seed in 0..3 {
        let script = AdversaryScript::new(100 + seed);
        let real = run_experiment(Experiment::Real, &g, 16, &script, seed).unwrap();
        let ideal = run_experiment(Experiment::Ideal, &g, 16, &script, seed).unwrap();
        assert_ne!(real.params.programs, ideal.params.programs);
        assert_eq!(normalized_answers(&real.transcript), normalized_answers(&ideal.transcript));
    }
}

#[test]
fn metadata_distinguisher_has_no_edge() {
    let g = demo_graph();
    let n = 64;
    let (mut real_hits, mut ideal_hits) = (0i32, 0i32);
    for seed in 0..n {
        let script = AdversaryScript::new(seed);
        let real = run_experiment(Experiment::Real, &g, 16, &script, seed).unwrap();
        let ideal = run_experiment(Experiment::Ideal, &g, 16, &script, seed).unwrap();
        real_hits += metadata_distinguisher(&metadata_shape(&real.params, &real.transcript)) as i32;
        ideal_hits += metadata_distinguisher(&metadata_shape(&ideal.params, &ideal.transcript)) as i32;
    }
    let adv = (real_hits - ideal_hits).abs() as f64 / n as f64;
    assert!(adv < 0.3, "advantage {adv}");
}
