use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::hint::black_box;

use tabver::audit::audit;
use tabver::circuit::{compile, encode_program, tt, Circuit, Gate};
use tabver::commitment::{choose_challenge, commit_many, gen_code, verify_reveal, DEFAULT_EPSILON, DEFAULT_MESSAGE_BITS};
use tabver::he::{keygen, BackendConfig, BackendKind};
use tabver::protocol::wire::Direct;
use tabver::protocol::{verify_session, vs_encrypt, EncryptOptions, Mode, Verifier, VerifierOptions};
use tabver::table::parse_graph;

/// AND chain of the given depth over fresh inputs.
fn and_chain(depth: usize) -> Circuit {
    let n = depth + 1;
    let mut gates = vec![Gate { a: 0, b: 1, tt: tt::AND }];
    for i in 2..n as u32 {
        gates.push(Gate {
            a: n as u32 + i - 2,
            b: i,
            tt: tt::AND,
        });
    }
    let out = (n + depth - 1) as u32;
    Circuit::new(n, gates, vec![out]).unwrap()
}

fn he(c: &mut Criterion) {
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let kp = keygen(&BackendConfig::default_for(BackendKind::IntegerShe), 16, &mut rng).unwrap();
    let circuit = and_chain(8);
    let x = kp.pk.enc_word(&vec![true; circuit.inputs()], &mut rng);
    c.bench_function("integer_she_enc_bit", |b| b.iter(|| kp.pk.enc(black_box(true), &mut rng)));
    c.bench_function("integer_she_and_depth_8", |b| b.iter(|| kp.pk.eval(&circuit, black_box(&x)).unwrap()));
}

fn universal(c: &mut Criterion) {
    let dev = vs_encrypt(
        16,
        &parse_graph(tabver::demo::GRAPH).unwrap(),
        &EncryptOptions::default(),
        &mut ChaCha20Rng::seed_from_u64(1),
    )
    .unwrap();
    let u = dev.params().universal().unwrap();
    let p = dev.programs()[0].clone();
    let x = vec![true; u.n_in()];
    c.bench_function("universal_eval_plain_demo", |b| b.iter(|| u.eval_plain(&p, black_box(&x)).unwrap()));
    let circuit = compile(&dev.transformed().tables[0], 16).unwrap();
    c.bench_function("encode_program_demo", |b| b.iter(|| encode_program(black_box(&circuit), &u).unwrap()));
}

fn protocol(c: &mut Criterion) {
    let g = parse_graph(tabver::demo::GRAPH).unwrap();
    c.bench_function("vs_encrypt_demo", |b| {
        b.iter(|| vs_encrypt(16, &g, &EncryptOptions::default(), &mut ChaCha20Rng::seed_from_u64(2)).unwrap())
    });
    let mut dev = vs_encrypt(16, &g, &EncryptOptions::default(), &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
    let mut group = c.benchmark_group("session_demo");
    group.sample_size(10);
    let mut cert = None;
    for mode in [Mode::Honest, Mode::General] {
        let v = Verifier::new(
            dev.params(),
            tabver::demo::SPEC,
            VerifierOptions {
                mode,
                budget: 8,
                ..Default::default()
            },
        )
        .unwrap();
        group.bench_function(format!("{mode:?}").to_lowercase(), |b| {
            b.iter(|| verify_session(&v, &mut Direct(&mut dev)).unwrap())
        });
        cert = Some(verify_session(&v, &mut Direct(&mut dev)).unwrap());
    }
    let cert = cert.unwrap();
    group.bench_function("audit_general", |b| b.iter(|| audit(black_box(&cert))));
    group.finish();
}

fn commitment(c: &mut Criterion) {
    let code = gen_code(DEFAULT_MESSAGE_BITS, DEFAULT_EPSILON, 16, 0).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let r = choose_challenge(code.length, &mut rng);
    let d: Vec<bool> = (0..code.message_bits).map(|_| rng.gen()).collect();
    let (cm, op) = commit_many(&d, std::slice::from_ref(&r), &code, &mut rng).unwrap();
    c.bench_function("commit_block", |b| {
        b.iter(|| commit_many(black_box(&d), std::slice::from_ref(&r), &code, &mut rng).unwrap())
    });
    c.bench_function("verify_reveal_block", |b| b.iter(|| verify_reveal(&cm[0], &op[0], &r, &code)));
}

criterion_group!(benches, he, universal, protocol, commitment);
criterion_main!(benches);
