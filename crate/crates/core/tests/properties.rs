//! Property tests over the field, the cipher, the logs and the protocols.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use epimpc_core::analytics::{
    aggregate_suggestion1, timeline_aggregate, InfectionUpload, TimeBuckets,
};
use epimpc_core::density::{
    make_shares, server1_aggregate, server2_finalize, IndexVector, SessionId,
};
use epimpc_core::group::{hash_to_group, CommutativeKey, GroupParams};
use epimpc_core::psi::{run_local, PsiMode, PsiOutput};
use epimpc_core::token::{EpochClock, SentLog, Token};
use epimpc_core::{CellIndex, FieldElement, FieldParams, LocationHistogram};

fn field_17() -> FieldParams {
    FieldParams::new(BigUint::from(17u32)).unwrap()
}

fn token_of(id: u16) -> Token {
    let mut bytes = [0u8; 16];
    bytes[..2].copy_from_slice(&id.to_le_bytes());
    Token::from_bytes(bytes)
}

proptest! {
    #[test]
    fn field_add_sub_are_inverse(a in 0u64..17, b in 0u64..17) {
        let p = field_17();
        let x = FieldElement::from_u64(a, &p);
        let y = FieldElement::from_u64(b, &p);
        let sum = x.add(&y).unwrap();
        prop_assert!(sum.value() < p.modulus());
        prop_assert_eq!(sum.sub(&y).unwrap(), x.clone());
        let diff = x.sub(&y).unwrap();
        prop_assert!(diff.value() < p.modulus());
        prop_assert_eq!(diff.add(&y).unwrap(), x);
    }

    #[test]
    fn cipher_round_trip_and_commutativity(seed in 0u64..1000) {
        let g = GroupParams::test_64();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m = hash_to_group(&Token::random(&mut rng), &g);
        let k1 = CommutativeKey::generate(&g, &mut rng);
        let k2 = CommutativeKey::generate(&g, &mut rng);
        prop_assert_eq!(k1.decrypt(&k1.encrypt(&m).unwrap()).unwrap(), m.clone());
        let ab = k2.encrypt(&k1.encrypt(&m).unwrap()).unwrap();
        let ba = k1.encrypt(&k2.encrypt(&m).unwrap()).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn encryption_is_injective(seed in 0u64..500) {
        let g = GroupParams::test_64();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m1 = hash_to_group(&Token::random(&mut rng), &g);
        let m2 = hash_to_group(&Token::random(&mut rng), &g);
        let k = CommutativeKey::generate(&g, &mut rng);
        if m1 != m2 {
            prop_assert_ne!(k.encrypt(&m1).unwrap(), k.encrypt(&m2).unwrap());
        }
    }

    #[test]
    fn hash_to_group_lands_in_subgroup(id in 0u16..2000) {
        let g = GroupParams::test_q23();
        let e = hash_to_group(&token_of(id), &g);
        prop_assert!(num_traits::One::is_one(
            &e.value().modpow(g.subgroup_order(), g.modulus())
        ));
    }

    #[test]
    fn prune_respects_window(retention in 1u64..30, total in 1u64..60) {
        let mut clock = EpochClock::new(60, retention, 1).unwrap();
        let mut log = SentLog::new();
        let mut rng = ChaCha20Rng::seed_from_u64(retention * 1000 + total);
        let cell = CellIndex::new(1, 4).unwrap();
        for _ in 0..total {
            log.advance_epoch(&mut clock, cell, &mut rng);
        }
        log.prune_expired(&clock);
        let start = clock.window_start();
        prop_assert!(log.iter().all(|(_, e)| e.epoch >= start));
        // Nothing younger than the window was removed.
        let expected = total.min(retention + 1).min(total);
        prop_assert_eq!(log.len() as u64, expected);
    }

    #[test]
    fn psi_matches_plaintext_on_random_sets(
        seed in 0u64..200,
        x_ids in proptest::collection::btree_set(0u16..60, 0..25),
        y_ids in proptest::collection::btree_set(0u16..60, 0..25),
    ) {
        let g = GroupParams::test_64();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let x: BTreeSet<Token> = x_ids.iter().map(|&i| token_of(i)).collect();
        let y: BTreeSet<Token> = y_ids.iter().map(|&i| token_of(i)).collect();
        let expected: BTreeSet<Token> = x.intersection(&y).copied().collect();

        match run_local(&x, &y, PsiMode::Cardinality, &g, None, &mut rng).unwrap() {
            PsiOutput::Cardinality(n) => prop_assert_eq!(n, expected.len()),
            _ => prop_assert!(false),
        }
        match run_local(&x, &y, PsiMode::Intersection, &g, None, &mut rng).unwrap() {
            PsiOutput::Intersection(set) => prop_assert_eq!(set, expected),
            _ => prop_assert!(false),
        }
    }

    #[test]
    fn density_round_equals_census(
        seed in 0u64..200,
        cells in proptest::collection::vec(1u32..=6, 0..20),
    ) {
        let m = 6u32;
        let p = FieldParams::smallest_prime_above(cells.len() as u64);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut masks = Vec::new();
        let mut masked = Vec::new();
        let mut census = LocationHistogram::zeros(m);
        for (i, &raw) in cells.iter().enumerate() {
            let cell = CellIndex::new(raw, m).unwrap();
            census.add_cell(cell).unwrap();
            let m_bar = 1 + (seed as u32 + i as u32) % m;
            let j = IndexVector::build(cell, m, m_bar, None, &mut rng).unwrap();
            let (a, b) = make_shares(SessionId::new(i as u64), &j, &p, &mut rng).unwrap();
            masks.push(a);
            masked.push(b);
        }
        let sum = server1_aggregate(&masks, m, &p).unwrap();
        let d = server2_finalize(&masked, &sum, m, &p).unwrap();
        prop_assert_eq!(d, census);
    }

    #[test]
    fn timeline_buckets_partition_the_histogram(
        epochs in proptest::collection::vec(1u64..100, 0..12),
        step in 5u64..40,
    ) {
        let uploads: Vec<InfectionUpload> = epochs
            .iter()
            .enumerate()
            .map(|(i, &epoch)| InfectionUpload {
                session: SessionId::new(i as u64),
                sent: [token_of(i as u16)].into_iter().collect(),
                received_pairs: epochs
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(j, _)| (token_of(j as u16), CellIndex::new(1 + (j as u32 % 4), 4).unwrap()))
                    .collect(),
                epoch,
            })
            .collect();
        let buckets = TimeBuckets::evenly_spaced(0, step, 100).unwrap();
        let y = aggregate_suggestion1(&uploads, 4).unwrap();
        let timeline = timeline_aggregate(&uploads, &buckets, 4).unwrap();
        prop_assert_eq!(timeline.total().unwrap(), y.clone());
        // Bounds: every cell count is at most the number of contributors.
        for &c in y.counts() {
            prop_assert!(c <= uploads.len() as u64);
        }
    }
}
