mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tabver::circuit::{build_universal, encode_program, Circuit, CircuitError};

fn padded(x: &[bool], n: usize) -> Vec<bool> {
    let mut p = x.to_vec();
    p.resize(n, false);
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn universal_agrees_with_circuit(seed in any::<u64>(), n in 1usize..10, g in 0usize..24, m in 1usize..5, x in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, n, g, m);
        let u = build_universal(n + 1, g + 2, m).unwrap();
        let p = encode_program(&c, &u).unwrap();
        prop_assert_eq!(p.len(), u.program_len());
        let x = bits_of(x, n);
        prop_assert_eq!(u.eval_plain(&p, &padded(&x, n + 1)).unwrap(), c.simulate(&x).unwrap());
    }

    #[test]
    fn packed_simulation_matches_lanes(seed in any::<u64>(), lanes in proptest::collection::vec(any::<u64>(), 6)) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, 6, 30, 3);
        let packed = c.simulate_packed(&lanes).unwrap();
        for j in [0usize, 17, 63] {
            let x: Vec<bool> = lanes.iter().map(|w| (w >> j) & 1 == 1).collect();
            let want = c.simulate(&x).unwrap();
            let got: Vec<bool> = packed.iter().map(|w| (w >> j) & 1 == 1).collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn projection_and_composition(seed in any::<u64>(), x in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let f = random_circuit(&mut rng, 5, 12, 4);
        let g = random_circuit(&mut rng, 4, 12, 2);
        let x = bits_of(x, 5);
        let fx = f.simulate(&x).unwrap();
        prop_assert_eq!(f.then(&g).unwrap().simulate(&x).unwrap(), g.simulate(&fx).unwrap());
        for k in 0..4 {
            prop_assert_eq!(f.project(k).simulate(&x).unwrap(), vec![fx[k]]);
        }
    }
}

#[test]
fn universal_exhaustive_up_to_ten_inputs() {
    let mut rng = ChaCha20Rng::seed_from_u64(20);
    for n in [1usize, 4, 7, 10] {
        let u = build_universal(n, 16, 3).unwrap();
        for _ in 0..4 {
            let c = random_circuit(&mut rng, n, 16, 3);
            let p = encode_program(&c, &u).unwrap();
            for v in 0..1u64 << n {
                let x = bits_of(v, n);
                assert_eq!(u.eval_plain(&p, &x).unwrap(), c.simulate(&x).unwrap(), "n={n} x={v}");
            }
        }
    }
}

#[test]
fn oversized_circuits_do_not_fit() {
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let u = build_universal(4, 8, 2).unwrap();
    let wide = random_circuit(&mut rng, 5, 4, 2);
    let long = random_circuit(&mut rng, 4, 9, 2);
    let outs = random_circuit(&mut rng, 4, 4, 3);
    for c in [wide, long, outs] {
        assert!(matches!(encode_program(&c, &u), Err(CircuitError::Budget { .. })));
    }
    assert!(Circuit::new(2, vec![], vec![2]).is_err());
}
