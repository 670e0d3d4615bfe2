mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use tabver::commitment::{
    choose_challenge, commit_many, commit_respond, gen_code, verify_reveal, BlockTranscript, CodeSpec,
    Transcript, DEFAULT_EPSILON, DEFAULT_MESSAGE_BITS,
};

fn code() -> CodeSpec {
    gen_code(DEFAULT_MESSAGE_BITS, DEFAULT_EPSILON, 16, 7).unwrap()
}

#[test]
fn binding_adversary_fails() {
    let code = code();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let wins = (0..16).filter(|_| binding_attack(&code, 10, &choose_challenge(code.length, &mut rng))).count();
    assert_eq!(wins, 0);
}

#[test]
fn double_opening_is_rejected() {
    let code = code();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let r = choose_challenge(code.length, &mut rng);
    let d: Vec<bool> = (0..code.message_bits).map(|_| rng.gen()).collect();
    let (commits, reveals) = commit_many(&d, std::slice::from_ref(&r), &code, &mut rng).unwrap();
    assert!(verify_reveal(&commits[0], &reveals[0], &r, &code));
    for i in 0..code.message_bits {
        let mut other = reveals[0].clone();
        other.data[i] = !other.data[i];
        assert!(!verify_reveal(&commits[0], &other, &r, &code));
    }
    for i in 0..reveals[0].seed.len() {
        let mut other = reveals[0].clone();
        other.seed[i] = !other.seed[i];
        assert!(!verify_reveal(&commits[0], &other, &r, &code));
    }
}

#[test]
fn commitments_hide_the_data() {
    // the committed codeword parity and single positions of `e` look alike
    // for all-zero and all-one data
    let code = code();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let n = 2000;
    let mut hits = [[0usize; 3]; 2];
    for _ in 0..n {
        for (k, fill) in [false, true].into_iter().enumerate() {
            let r = choose_challenge(code.length, &mut rng);
            let seed: Vec<bool> = (0..16).map(|_| rng.gen()).collect();
            let c = commit_respond(&vec![fill; code.message_bits], &r, &seed, &code).unwrap();
            hits[k][0] += c.e[0] as usize;
            hits[k][1] += c.e[code.length - 1] as usize;
            hits[k][2] += (c.e.iter().filter(|&&b| b).count() % 2) as usize;
        }
    }
    for j in 0..3 {
        let adv = (hits[0][j] as f64 - hits[1][j] as f64).abs() / n as f64;
        assert!(adv < 0.1, "probe {j}: advantage {adv}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn honest_transcripts_open(seed in any::<u64>(), len in 1usize..40) {
        let code = code();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let data: Vec<bool> = (0..len).map(|_| rng.gen()).collect();
        let blocks = len.div_ceil(code.message_bits);
        let challenges: Vec<Vec<bool>> = (0..blocks).map(|_| choose_challenge(code.length, &mut rng)).collect();
        let (commits, reveals) = commit_many(&data, &challenges, &code, &mut rng).unwrap();
        let t = Transcript {
            len,
            blocks: challenges
                .into_iter()
                .zip(commits)
                .zip(reveals)
                .map(|((challenge, commit), reveal)| BlockTranscript { challenge, commit, reveal })
                .collect(),
        };
        prop_assert_eq!(t.open(&code), Some(data));
        let mut bad = t.clone();
        let last = bad.blocks.len() - 1;
        bad.blocks[last].reveal.data[0] ^= true;
        prop_assert!(bad.open(&code).is_none());
        let mut padded = t.clone();
        padded.len -= 1;
        prop_assert!(padded.open(&code).is_none() || !data_last_bit(&t));
    }

    #[test]
    fn code_is_reproducible(seed in any::<u64>()) {
        let c = gen_code(DEFAULT_MESSAGE_BITS, DEFAULT_EPSILON, 16, seed).unwrap();
        prop_assert!(c.is_reproducible());
        prop_assert!(c.min_distance as f64 >= DEFAULT_EPSILON * c.length as f64);
        prop_assert_eq!(c.compute_min_distance(), c.min_distance);
    }
}

fn data_last_bit(t: &Transcript) -> bool {
    let per = t.blocks[0].reveal.data.len();
    t.blocks[(t.len - 1) / per].reveal.data[(t.len - 1) % per]
}
