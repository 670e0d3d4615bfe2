use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use tabver::he::IntegerParams;
use tabver::symcrypto::{bit_at, prg, se_dec, se_enc, se_enc_circuit, se_keygen, SeKey};

fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.gen()).collect()
}

#[test]
fn round_trip_1000_blocks() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let sk = se_keygen(16, &mut rng).unwrap();
    for _ in 0..1000 {
        let m = random_bits(&mut rng, 16);
        let c = se_enc(&sk, &m).unwrap();
        assert_eq!(se_enc(&sk, &m).unwrap(), c);
        assert_eq!(se_dec(&sk, &c).unwrap(), m);
    }
}

#[test]
fn circuit_matches_500_cases_and_zero_case() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for b in [8usize, 16] {
        let c = se_enc_circuit(16, b).unwrap();
        for _ in 0..250 {
            let sk = se_keygen(16, &mut rng).unwrap();
            let m = random_bits(&mut rng, b);
            let mut x = sk.bits().to_vec();
            x.extend(&m);
            assert_eq!(c.simulate(&x).unwrap(), se_enc(&sk, &m).unwrap());
        }
        let zero = SeKey(vec![false; 16]);
        let out = c.simulate(&vec![false; 16 + b]).unwrap();
        assert_eq!(out, se_enc(&zero, &vec![false; b]).unwrap());
    }
}

#[test]
fn circuit_within_integer_depth_budget() {
    let d = IntegerParams::default().depth_budget();
    for b in [8usize, 16] {
        assert!(se_enc_circuit(16, b).unwrap().and_depth() <= d);
    }
}

#[test]
fn avalanche_at_least_30_percent() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let sk = se_keygen(16, &mut rng).unwrap();
    let mut flipped = 0usize;
    let trials = 1000;
    for _ in 0..trials {
        let m = random_bits(&mut rng, 16);
        let mut m2 = m.clone();
        let i = rng.gen_range(0..16);
        m2[i] = !m2[i];
        let (a, b) = (se_enc(&sk, &m).unwrap(), se_enc(&sk, &m2).unwrap());
        flipped += a.iter().zip(&b).filter(|(x, y)| x != y).count();
    }
    let ratio = flipped as f64 / (trials * 16) as f64;
    assert!(ratio >= 0.30, "avalanche {ratio}");
}

#[test]
fn prg_monobit() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    let s = random_bits(&mut rng, 16);
    let bits = prg(&s, 10_000);
    let ones = bits.iter().filter(|&&b| b).count() as f64;
    assert!((ones / 10_000.0 - 0.5).abs() < 0.05);
}

#[test]
fn prg_bit_at_agrees() {
    let mut rng = ChaCha20Rng::seed_from_u64(14);
    for _ in 0..100 {
        let s = random_bits(&mut rng, 16);
        let i = rng.gen_range(0..512);
        assert_eq!(bit_at(&s, i), prg(&s, i + 1)[i]);
    }
}

proptest! {
    #[test]
    fn se_is_a_bijection(key in prop::collection::vec(any::<bool>(), 8..=64),
                         m in prop::collection::vec(any::<bool>(), 16),
                         flip in 0usize..16) {
        let sk = SeKey::from_bits(key).unwrap();
        let mut m2 = m.clone();
        m2[flip] = !m2[flip];
        prop_assert_ne!(se_enc(&sk, &m).unwrap(), se_enc(&sk, &m2).unwrap());
        prop_assert_eq!(se_dec(&sk, &se_enc(&sk, &m).unwrap()).unwrap(), m);
    }

    #[test]
    fn prg_prefix_consistent(seed in prop::collection::vec(any::<bool>(), 16), a in 1usize..200, b in 1usize..200) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert_eq!(&prg(&seed, hi)[..lo], &prg(&seed, lo)[..]);
    }
}
