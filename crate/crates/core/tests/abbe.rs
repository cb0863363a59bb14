use std::collections::BTreeSet;

use abbe_core::pairing::instrument;
use abbe_core::{
    decapsulate, encapsulate, keygen, policy_satisfies, setup, AbbeError, AccessPolicy, AttributeUniverse,
    CurveParams, UserRecord,
};
use proptest::prelude::*;
use proptest::sample::subsequence;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone)]
struct Instance {
    pool: Vec<String>,
    users: Vec<UserRecord>,
    required: Vec<String>,
    revoked: Vec<String>,
    seed: u64,
}

// Half the policies are drawn from some user's attribute set so that
// positives are common; the rest are arbitrary pool subsets.
fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=50, 1usize..=20)
        .prop_flat_map(|(pool_len, n_users)| {
            let pool: Vec<String> = (0..pool_len).map(|i| format!("attr-{i}")).collect();
            let max_attrs = pool_len.min(10);
            let users = proptest::collection::vec(subsequence(pool.clone(), 1..=max_attrs), n_users);
            (Just(pool), users)
        })
        .prop_flat_map(|(pool, user_attrs)| {
            let ids: Vec<String> = (0..user_attrs.len()).map(|i| format!("user-{i}")).collect();
            let n = user_attrs.len();
            (
                Just(pool.clone()),
                Just(user_attrs),
                Just(ids.clone()),
                any::<bool>(),
                0..n,
                subsequence(pool.clone(), 1..=pool.len().min(4)),
                subsequence(ids, 0..=n),
                any::<u64>(),
            )
        })
        .prop_flat_map(|(pool, user_attrs, ids, from_user, who, arbitrary, revoked, seed)| {
            let base = user_attrs[who].clone();
            let required = if from_user {
                subsequence(base.clone(), 1..=base.len()).boxed()
            } else {
                Just(arbitrary).boxed()
            };
            (Just(pool), Just(user_attrs), Just(ids), required, Just(revoked), Just(seed))
        })
        .prop_map(|(pool, user_attrs, ids, required, revoked, seed)| Instance {
            pool,
            users: ids.into_iter().zip(user_attrs).map(|(id, attrs)| UserRecord::new(id, attrs)).collect(),
            required,
            revoked,
            seed,
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn decapsulation_agrees_with_the_policy_oracle(inst in instance()) {
        let curve = CurveParams::default_curve();
        let mut rng = ChaCha20Rng::seed_from_u64(inst.seed);
        let universe = AttributeUniverse::new(inst.pool.iter()).unwrap();
        let (mpk, msk) = setup(&curve, &universe, &inst.users, &mut rng).unwrap();
        let policy = AccessPolicy::new(inst.required.iter(), inst.revoked.iter());
        let (session, header) = encapsulate(&mpk, &policy, &mut rng).unwrap();
        prop_assert_eq!(header.elements.len(), inst.revoked.len() + 3);

        for user in &inst.users {
            let key = keygen(&msk, user).unwrap();
            prop_assert_eq!(key.elements.len(), 2 + user.attributes.len());
            let before = instrument::thread_counts();
            let result = decapsulate(&mpk, &key, &header);
            let pairings = instrument::thread_counts().since(&before).pairings;
            // Independent restatement of the AND-gate-with-revocation rule.
            let held: BTreeSet<&String> = user.attributes.iter().collect();
            let expected = inst.required.iter().all(|a| held.contains(a)) && !inst.revoked.contains(&user.user_id);
            prop_assert_eq!(expected, policy_satisfies(&policy, user));
            match result {
                Ok(k) => {
                    prop_assert!(expected, "{} decrypted without satisfying the policy", user.user_id);
                    prop_assert_eq!(k, session);
                    prop_assert_eq!(pairings, 3);
                }
                Err(e) => {
                    prop_assert!(!expected, "{} was refused: {}", user.user_id, e);
                    prop_assert_eq!(e, AbbeError::NotAuthorized);
                }
            }
        }
    }
}
