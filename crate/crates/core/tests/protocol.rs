mod common;

use common::*;
use tabver::audit::{vs_eval_general, vs_eval_honest, Certificate};
use tabver::he::HeError;
use tabver::protocol::wire::{queue_pair, serve, Client, Direct};
use tabver::protocol::{
    eval_encrypted, verify_session, EncodeAnswer, EncodeQuery, MaliciousDeveloper, Mode, ProtocolError,
    QueryKind, Strategy, Verifier, VerifierOptions,
};
use tabver::table::{OutputValue, Value};

fn opts(mode: Mode, seed: u64) -> VerifierOptions {
    VerifierOptions {
        mode,
        seed,
        budget: 16,
        session: seed + 1,
        extra_inputs: demo_inputs(),
        ..Default::default()
    }
}

#[test]
fn honest_session_accepts_and_audits() {
    let mut dev = developer(DEMO, 1);
    let v = Verifier::new(dev.params(), DEMO_SPEC, opts(Mode::Honest, 3)).unwrap();
    let cert = verify_session(&v, &mut Direct(&mut dev)).unwrap();
    assert!(cert.accepted(), "{:?}", cert.verdict);
    assert_eq!(cert.results.len(), 10 + 5);
    assert!(vs_eval_honest(&cert).pass);
    let back = Certificate::from_json(&cert.to_json()).unwrap();
    assert!(vs_eval_honest(&back).pass);
    assert!(!vs_eval_general(&cert).pass);
}

#[test]
fn general_session_accepts_and_audits() {
    let mut dev = developer(DEMO, 2);
    let v = Verifier::new(dev.params(), DEMO_SPEC, opts(Mode::General, 4)).unwrap();
    let cert = verify_session(&v, &mut Direct(&mut dev)).unwrap();
    assert!(cert.accepted(), "{:?}", cert.verdict);
    assert!(cert.records.iter().all(|r| r.checker.is_some()));
    let report = vs_eval_general(&cert);
    assert!(report.pass, "{:?}", report.reason);
}

#[test]
fn encrypted_evaluation_matches_original_graph() {
    let mut dev = developer(DEMO, 3);
    let g = demo_graph();
    for a in (0..=100).step_by(7) {
        for b in [false, true] {
            let x = inputs(&[("a", Value::Int(a)), ("b", Value::Bool(b))]);
            let got = eval_encrypted(dev.params(), DEMO_SPEC, &x, 100 + a as u64, &mut Direct(&mut dev)).unwrap();
            let want = g.evaluate(&x, 8).unwrap();
            for (k, v) in want {
                assert_eq!(got[&k], OutputValue::Value(v), "a={a} b={b} {k}");
            }
        }
    }
}

#[test]
fn queue_transport_session() {
    let dev = developer(DEMO, 4);
    let params = dev.params();
    let (a, mut b) = queue_pair();
    let h = std::thread::spawn(move || {
        let mut dev = dev;
        serve(&mut dev, &mut b).unwrap()
    });
    let v = Verifier::new(params, DEMO_SPEC, opts(Mode::Honest, 5)).unwrap();
    let cert = verify_session(&v, &mut Client(a)).unwrap();
    assert!(cert.accepted());
    assert!(h.join().unwrap() > 0);
}

#[test]
fn malicious_strategies_are_rejected() {
    for (i, s) in [Strategy::FlipPayload, Strategy::FlipTag, Strategy::SwapAnswers].into_iter().enumerate() {
        for mode in [Mode::Honest, Mode::General] {
            let mut dev = MaliciousDeveloper::new(developer(DEMO, 10 + i as u64), s);
            let v = Verifier::new(dev.inner.params(), DEMO_SPEC, opts(mode, 20 + i as u64)).unwrap();
            let cert = verify_session(&v, &mut Direct(&mut dev)).unwrap();
            assert!(dev.deviations > 0);
            assert!(!cert.accepted(), "{s:?} {mode} accepted");
        }
    }
}

#[test]
fn developer_refuses_unrecorded_or_forged_queries() {
    let mut dev = developer(DEMO, 5);
    dev.start_session(1);
    let p = dev.params();
    let m = p.width();
    let word = tabver::TaggedValue::top(Value::Int(46), 16).unwrap().to_bits(16);
    // table 0 reads `a` on port 0
    let w = match dev.vs_encode(&EncodeQuery { table: 0, kind: QueryKind::Q1 { port: 0, word } }) {
        EncodeAnswer::Word(w) => w,
        other => panic!("{other:?}"),
    };
    assert_eq!(w.len(), m);
    let v = p.eval_table(0, &w).unwrap();
    let mut forged = v.clone();
    forged.swap(0, m - 1);
    let q = |v| EncodeQuery { table: 0, kind: QueryKind::Q2 { u: w.clone(), v } };
    assert_eq!(dev.vs_encode(&q(forged)), EncodeAnswer::Null);
    assert_eq!(dev.vs_encode(&q(v.clone())), EncodeAnswer::Top);
    // a fresh encryption of the same word was never issued
    let other = p.hpk.enc_word(&[true; 16], &mut rand::thread_rng());
    let q2 = EncodeQuery { table: 0, kind: QueryKind::Q2 { v: p.eval_table(0, &other).unwrap(), u: other } };
    assert_eq!(dev.vs_encode(&q2), EncodeAnswer::Null);
    // bottom-tagged q1 words are refused
    let bad = vec![false; 16];
    assert_eq!(dev.vs_encode(&EncodeQuery { table: 0, kind: QueryKind::Q1 { port: 0, word: bad } }), EncodeAnswer::Null);
    // new session wipes memory
    dev.start_session(2);
    assert_eq!(dev.vs_encode(&q(v)), EncodeAnswer::Null);
}

#[test]
fn path_requests_fire_the_whole_path() {
    let mut dev = developer(DEMO, 6);
    let x = dev.vs_path(&[1, 4]).unwrap();
    let a = x["a"].as_int();
    assert!((35..=45).contains(&a) && a - 5 > 30);
    assert!(dev.vs_path(&[4, 1]).is_none());
    let mut o = opts(Mode::Honest, 7);
    o.path_requests = true;
    let v = Verifier::new(dev.params(), DEMO_SPEC, o).unwrap();
    let cert = verify_session(&v, &mut Direct(&mut dev)).unwrap();
    assert!(cert.accepted());
    assert_eq!(cert.paths.len(), 10);
    assert!(vs_eval_honest(&cert).pass);
}

#[test]
fn depth_limited_backend_aborts() {
    use rand::SeedableRng;
    use tabver::he::{BackendConfig, IntegerParams};
    use tabver::protocol::{vs_encrypt, EncryptOptions};
    let g = demo_graph();
    let o = EncryptOptions {
        backend: BackendConfig::IntegerShe(IntegerParams::default()),
        ..Default::default()
    };
    let mut dev = vs_encrypt(16, &g, &o, &mut rand_chacha::ChaCha20Rng::seed_from_u64(0)).unwrap();
    let v = Verifier::new(dev.params(), DEMO_SPEC, opts(Mode::Honest, 1)).unwrap();
    match verify_session(&v, &mut Direct(&mut dev)) {
        Err(ProtocolError::He(HeError::DepthBudgetExceeded { budget: 8, .. })) => {}
        other => panic!("expected a depth abort, got {:?}", other.map(|c| c.verdict)),
    }
}

#[test]
fn encodings_shadow_the_plaintext_trace() {
    let mut dev = developer(DEMO, 8);
    let mut checks = 0;
    for (i, x) in demo_inputs().iter().enumerate() {
        checks += shadow_check(&mut dev, x, 50 + i as u64).unwrap();
    }
    // 5 inputs × (4 PT_a + 2 PT_b encodings, 4 PT_a + 2 PT_b + 2 PT_z outputs)
    assert_eq!(checks, 5 * (6 + 8));
}
