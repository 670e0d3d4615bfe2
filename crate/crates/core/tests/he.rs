mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use tabver::he::{
    keygen, read_ciphertexts, write_ciphertexts, BackendConfig, BackendKind, HeError, HeKeyPair, IntegerParams,
};

fn keys(kind: BackendKind, seed: u64) -> HeKeyPair {
    keygen(&BackendConfig::default_for(kind), 16, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_circuits_decrypt_correctly(seed in any::<u64>(), x in any::<u64>(), integer in any::<bool>()) {
        let kind = if integer { BackendKind::IntegerShe } else { BackendKind::Transparent };
        let kp = keys(kind, seed);
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 1);
        let c = random_circuit(&mut rng, 6, 20, 3);
        prop_assume!(c.and_depth() <= 8);
        let x = bits_of(x, 6);
        let cts = kp.pk.enc_word(&x, &mut rng);
        let out = kp.pk.eval_many(&c, &cts).unwrap();
        prop_assert_eq!(kp.sk.dec_word(&out).unwrap(), c.simulate(&x).unwrap());
    }
}

#[test]
fn depth_budget_is_enforced() {
    use tabver::circuit::{tt, Circuit, Gate};
    let kp = keys(BackendKind::IntegerShe, 2);
    let budget = IntegerParams::default().depth_budget();
    assert_eq!(kp.pk.depth_budget(), Some(budget));
    // AND chain of length budget + 1
    let gates: Vec<Gate> = (0..=budget)
        .map(|k| Gate { a: if k == 0 { 0 } else { (k + 1) as u32 }, b: 1, tt: tt::AND })
        .collect();
    let c = Circuit::new(2, gates, vec![(budget + 2) as u32]).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let cts = kp.pk.enc_word(&[true, true], &mut rng);
    assert_eq!(
        kp.pk.eval(&c, &cts).unwrap_err(),
        HeError::DepthBudgetExceeded { needed: budget + 1, budget }
    );
    let within = Circuit::new(2, c.gates().to_vec(), vec![(budget + 1) as u32]).unwrap();
    assert!(kp.sk.dec(&kp.pk.eval(&within, &cts).unwrap()).unwrap());
    assert_eq!(keys(BackendKind::Transparent, 2).pk.depth_budget(), None);
}

#[test]
fn cross_backend_ciphertexts_rejected() {
    let t = keys(BackendKind::Transparent, 4);
    let i = keys(BackendKind::IntegerShe, 4);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let ct = t.pk.enc(true, &mut rng);
    assert!(i.pk.check(&ct).is_err());
    assert!(i.sk.dec(&ct).is_err());
}

#[test]
fn container_round_trip() {
    let kp = keys(BackendKind::IntegerShe, 6);
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let cts = kp.pk.enc_word(&[true, false, true], &mut rng);
    let blob = write_ciphertexts(BackendKind::IntegerShe, &cts);
    assert_eq!(read_ciphertexts(&blob).unwrap(), (BackendKind::IntegerShe, cts));
    assert!(read_ciphertexts(&blob[..blob.len() - 1]).is_err());
}

/// Linear tests on public ciphertext bits: single bits and the XOR of all
/// bits. None may separate encryptions of 0 from encryptions of 1.
fn linear_advantages(kp: &HeKeyPair, samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let probes = [0usize, 1, 2, 7, 8, 100, 1000];
    let mut ones = vec![[0usize; 2]; probes.len() + 1];
    let mut totals = [0usize; 2];
    for _ in 0..samples {
        let b: bool = rng.gen();
        let ct = kp.pk.enc(b, &mut rng);
        let bytes = ct.as_bytes();
        let bit = |i: usize| (bytes[bytes.len() - 1 - i / 8] >> (i % 8)) & 1 == 1;
        totals[b as usize] += 1;
        for (j, &i) in probes.iter().enumerate() {
            ones[j][b as usize] += bit(i) as usize;
        }
        let parity = bytes.iter().fold(0u8, |a, x| a ^ x).count_ones() % 2 == 1;
        ones[probes.len()][b as usize] += parity as usize;
    }
    ones.iter()
        .map(|o| (o[1] as f64 / totals[1] as f64 - o[0] as f64 / totals[0] as f64).abs())
        .collect()
}

#[test]
fn integer_backend_resists_linear_distinguishers() {
    let kp = keys(BackendKind::IntegerShe, 8);
    for adv in linear_advantages(&kp, 4000, 9) {
        assert!(adv < 0.1, "advantage {adv}");
    }
}

#[test]
fn transparent_backend_is_not_hiding() {
    // the functional oracle carries the bit in the clear
    let kp = keys(BackendKind::Transparent, 10);
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let a = kp.pk.enc(false, &mut rng);
    let b = kp.pk.enc(true, &mut rng);
    assert_ne!(a.as_bytes()[0] ^ b.as_bytes()[0], 0);
}
