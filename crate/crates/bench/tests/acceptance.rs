//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use abbe_bench::network::{concurrent_decrypt, fetch_and_decrypt, prepare_encrypted, random_file, Testbed, MIB};
use abbe_bench::keygen::Pick;
use abbe_bench::{experiment1, experiment2, linear_fit, BenchError};
use abbe_core::formats::{
    load_config, load_header, load_keys, save_config, save_header, save_keys, ConfigFile, FormatError, HeaderFile,
    KeysFile,
};
use abbe_core::ndn::{Consumer, Ed25519Signer, Forwarder, Producer, TrustStore, DEFAULT_CHUNK_SIZE};
use abbe_core::pairing::instrument;
use abbe_core::rooms::{post_message, receive_message, room_id, Received};
use abbe_core::{
    decapsulate, encapsulate, keygen, policy_satisfies, setup, AbbeError, AccessPolicy, AttributeUniverse,
    CurveParams, Name, UserRecord,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---- 1: KEM correctness --------------------------------------------------

fn random_instance(rng: &mut ChaCha20Rng) -> (Vec<String>, Vec<UserRecord>, AccessPolicy) {
    let pool_len = rng.gen_range(1..=50);
    let pool: Vec<String> = (0..pool_len).map(|i| format!("p{i}")).collect();
    let n_users = rng.gen_range(1..=20);
    let users: Vec<UserRecord> = (0..n_users)
        .map(|u| {
            let k = rng.gen_range(1..=pool_len.min(10));
            let attrs: Vec<&String> = sample(rng, pool_len, k).into_iter().map(|i| &pool[i]).collect();
            UserRecord::new(format!("u{u}"), attrs)
        })
        .collect();
    // Half the policies come from a user's own attributes so positives are common.
    let required: Vec<String> = if rng.gen_bool(0.5) {
        let base: Vec<&String> = users[rng.gen_range(0..n_users)].attributes.iter().collect();
        let k = rng.gen_range(1..=base.len());
        sample(rng, base.len(), k).into_iter().map(|i| base[i].clone()).collect()
    } else {
        let k = rng.gen_range(1..=pool_len.min(4));
        sample(rng, pool_len, k).into_iter().map(|i| pool[i].clone()).collect()
    };
    let revoked: Vec<String> =
        users.iter().filter(|_| rng.gen_bool(0.25)).map(|u| u.user_id.clone()).collect();
    (pool, users, AccessPolicy::new(required, revoked))
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let curve = CurveParams::default_curve();
    let mut rng = ChaCha20Rng::seed_from_u64(0xacce97);
    let (mut checks, mut positives) = (0usize, 0usize);
    for instance in 0..200 {
        let (pool, users, policy) = random_instance(&mut rng);
        let (mpk, msk) = setup(&curve, &AttributeUniverse::new(pool.iter()).map_err(err)?, &users, &mut rng).map_err(err)?;
        let (session, header) = encapsulate(&mpk, &policy, &mut rng).map_err(err)?;
        for user in &users {
            let key = keygen(&msk, user).map_err(err)?;
            let expected = policy.required_attributes.is_subset(&user.attributes)
                && !policy.revoked_users.contains(&user.user_id);
            ensure!(expected == policy_satisfies(&policy, user), "oracle disagreement in instance {instance}");
            let got = decapsulate(&mpk, &key, &header);
            let agrees = match &got {
                Ok(k) => expected && *k == session,
                Err(AbbeError::NotAuthorized) => !expected,
                Err(_) => false,
            };
            ensure!(agrees, "instance {instance}, {}: expected access {expected}, got {got:?}", user.user_id);
            checks += 1;
            positives += expected as usize;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!("200 instances, {checks} user checks ({positives} authorized), 100% agreement in {:.1}s", elapsed.as_secs_f64()))
}

// ---- 2: size and pairing counts -----------------------------------------

fn criterion2() -> Outcome {
    let curve = CurveParams::default_curve();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut decaps = 0;
    for _ in 0..40 {
        let (pool, users, policy) = random_instance(&mut rng);
        let (mpk, msk) = setup(&curve, &AttributeUniverse::new(pool.iter()).map_err(err)?, &users, &mut rng).map_err(err)?;
        let (_, header) = encapsulate(&mpk, &policy, &mut rng).map_err(err)?;
        let k = policy.revoked_users.len();
        ensure!(header.elements.len() == k + 3, "header has {} elements for k = {k}", header.elements.len());
        for user in &users {
            let key = keygen(&msk, user).map_err(err)?;
            let n = user.attributes.len();
            ensure!(key.elements.len() == 2 + n, "key has {} elements for n = {n}", key.elements.len());
            let before = instrument::thread_counts();
            if decapsulate(&mpk, &key, &header).is_ok() {
                let pairings = instrument::thread_counts().since(&before).pairings;
                ensure!(pairings == 3, "{pairings} pairings in a successful decapsulation");
                decaps += 1;
            }
        }
    }
    ensure!(decaps > 0, "no successful decapsulation was exercised");
    Ok(format!("|key| = 2+n, |header| = k+3, 3 pairings in each of {decaps} successful decapsulations"))
}

// ---- 3: scaling shape -----------------------------------------------------

// Fastest of 5: the gate runs on shared single-core hosts where
// preemption inflates arbitrary repetitions. Reports still use the median.
const SCALING_REPS: usize = 5;

fn criterion3() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let counts: Vec<usize> = (100..=1000).step_by(100).collect();
    let exp2 = experiment2(&counts, SCALING_REPS, Pick::Fastest, &mut rng).map_err(err)?;
    let xs: Vec<f64> = exp2.iter().map(|r| r.attributes as f64).collect();
    let ys: Vec<f64> = exp2.iter().map(|r| r.total_seconds).collect();
    let fit = linear_fit(&xs, &ys).ok_or("degenerate fit")?;
    let ratio2 = ys[ys.len() - 1] / ys[0];

    let exp1 = experiment1(&[100, 1000], 3, 50, SCALING_REPS, Pick::Fastest, &mut rng).map_err(err)?;
    let ratio1 = exp1[1].total_seconds / exp1[0].total_seconds;

    let detail = format!(
        "exp2 R^2 = {:.4}, t(1000)/t(100) = {ratio2:.2}; exp1 t(1000)/t(100) = {ratio1:.2}; exp2 seconds {:?}",
        fit.r_squared,
        ys.iter().map(|y| (y * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );
    ensure!(fit.r_squared >= 0.95, "{detail}: R^2 below 0.95");
    ensure!((7.0..=14.0).contains(&ratio2), "{detail}: exp2 ratio outside [7, 14]");
    ensure!((3.0..=9.0).contains(&ratio1), "{detail}: exp1 ratio outside [3, 9]");
    Ok(detail)
}

// ---- 4: forwarding plane --------------------------------------------------

fn criterion4() -> Outcome {
    let forwarder = Forwarder::spawn(1 << 16);
    let signer = Arc::new(Ed25519Signer::from_seed("acceptance", [4; 32]));
    let mut trust = TrustStore::new();
    trust.trust("/data".parse().unwrap(), "acceptance", signer.verifying_key());
    let trust = Arc::new(trust);
    let mut producer = Producer::attach(&forwarder, signer);
    producer.register_prefix("/data".parse().unwrap());

    let shared: Name = "/data/shared5M.bin".parse().unwrap();
    let payload = random_file(5 * MIB, 40);
    let digest = Sha256::digest(&payload);
    let segments = producer.publish(&shared, payload, DEFAULT_CHUNK_SIZE).map_err(err)?;
    let results: Vec<Result<bool, String>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..10)
            .map(|_| {
                let mut c = Consumer::new(forwarder.connect(), trust.clone());
                let shared = &shared;
                s.spawn(move || c.fetch(shared).map(|b| Sha256::digest(&b) == digest).map_err(err))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for r in results {
        ensure!(r?, "a concurrent consumer received different bytes");
    }
    let counts = producer.interest_counts();
    let repeated = counts.values().filter(|c| **c != 1).count();
    ensure!(
        counts.len() as u64 == segments && repeated == 0,
        "{} distinct segment interests for {segments} segments, {repeated} requested more than once",
        counts.len()
    );

    let sizes = [0, 1, 4095, 4096, 4097, 5 * MIB, 50 * MIB];
    for (i, len) in sizes.into_iter().enumerate() {
        let name: Name = format!("/data/size{i}").parse().unwrap();
        let payload = random_file(len, 400 + i as u64);
        let digest = Sha256::digest(&payload);
        producer.publish(&name, payload, DEFAULT_CHUNK_SIZE).map_err(err)?;
        let mut hasher = Sha256::new();
        Consumer::new(forwarder.connect(), trust.clone()).fetch_into(&name, &mut hasher).map_err(err)?;
        ensure!(hasher.finalize() == digest, "object of {len} bytes came back different");
    }
    Ok(format!(
        "10 consumers x {segments} segments: each segment interest reached the producer once; sizes {sizes:?} hash-equal"
    ))
}

// ---- 5: end-to-end encrypted pipeline --------------------------------------

fn criterion5() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let bed = Testbed::new(1 << 16);
    let fx = prepare_encrypted(&bed, 6, 1, 50, &mut rng).map_err(err)?;
    let revoked = &fx.keys[5];
    ensure!(fx.policy.revoked_users.contains(&revoked.user_id), "fixture did not revoke the sixth user");

    // Alone on a cold cache first: the revoked user may fetch the header only.
    let before = bed.upstream_interests();
    match fetch_and_decrypt(&bed, &fx, revoked) {
        Err(BenchError::Abbe(AbbeError::NotAuthorized)) => {}
        other => return Err(format!("revoked user got {other:?}")),
    }
    let requested = bed.upstream_interests() - before;
    ensure!(requested == 1, "revoked user caused {requested} upstream interests, expected the header segment only");

    let results = concurrent_decrypt(&bed, &fx, &fx.keys[..5]);
    let mut worst: f64 = 0.0;
    for (key, r) in fx.keys.iter().zip(results) {
        worst = worst.max(r.map_err(|e| format!("{}: {e}", key.user_id))?);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(180), "took {elapsed:?}");
    Ok(format!(
        "5 users fetched, decapsulated, decrypted and hash-verified 50 MiB (worst {worst:.2}s); revoked user refused at the header; total {:.1}s",
        elapsed.as_secs_f64()
    ))
}

// ---- 6: rooms --------------------------------------------------------------

fn criterion6() -> Outcome {
    let users = vec![
        UserRecord::new("ana", ["ops", "dev"]),
        UserRecord::new("ben", ["dev"]),
        UserRecord::new("cai", ["ops"]),
        UserRecord::new("dee", ["ops", "dev", "lead"]),
        UserRecord::new("eli", ["lead"]),
    ];
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let universe = AttributeUniverse::new(["ops", "dev", "lead"]).map_err(err)?;
    let (mpk, msk) = setup(&CurveParams::default_curve(), &universe, &users, &mut rng).map_err(err)?;
    let keys: Vec<_> = users.iter().map(|u| keygen(&msk, u)).collect::<Result<_, _>>().map_err(err)?;
    let policies: [(&[&str], &[&str]); 3] = [(&["dev"], &[]), (&["ops"], &["dee"]), (&["ops", "dev"], &["ana"])];
    for (required, revoked) in policies {
        let policy = AccessPolicy::new(required.iter().copied(), revoked.iter().copied());
        let env = post_message(&mpk, &policy, "ana", b"hello room", &mut rng).map_err(err)?;
        let oracle: BTreeSet<&str> = users
            .iter()
            .filter(|u| required.iter().all(|a| u.attributes.contains(*a)) && !revoked.contains(&u.user_id.as_str()))
            .map(|u| u.user_id.as_str())
            .collect();
        let mut got = BTreeSet::new();
        for key in &keys {
            match receive_message(&env, key, &mpk).map_err(err)? {
                Received::Delivered { room, plaintext } => {
                    ensure!(room == room_id(&policy) && plaintext == b"hello room", "wrong delivery");
                    got.insert(key.user_id.as_str());
                }
                Received::NotRecipient => {}
            }
        }
        ensure!(got == oracle, "policy {required:?} minus {revoked:?}: recipients {got:?}, oracle {oracle:?}");
    }

    let mut seen = HashSet::new();
    let mut ids = HashSet::new();
    while seen.len() < 1000 {
        let req: BTreeSet<String> = (0..40).filter(|_| rng.gen_bool(0.15)).map(|i| format!("a{i}")).collect();
        let rev: BTreeSet<String> = (0..40).filter(|_| rng.gen_bool(0.1)).map(|i| format!("u{i}")).collect();
        if req.is_empty() || !seen.insert((req.clone(), rev.clone())) {
            continue;
        }
        let forward = room_id(&AccessPolicy::new(req.iter().cloned(), rev.iter().cloned()));
        let backward = room_id(&AccessPolicy::new(req.iter().rev().cloned(), rev.iter().rev().cloned()));
        ensure!(forward == backward, "normalization changed the room id");
        ids.insert(forward);
    }
    ensure!(ids.len() == 1000, "{} distinct room ids for 1000 policies", ids.len());
    Ok("3 policies match brute-force recipients on 5 users; 1000 random policies give 1000 distinct room ids".into())
}

// ---- 7: format stability ----------------------------------------------------

fn format_run(seed: u64) -> Result<[Vec<u8>; 3], String> {
    let config = ConfigFile {
        curve: CurveParams::default_curve(),
        users: vec![
            UserRecord::new("u1", ["x", "y"]),
            UserRecord::new("u2", ["y", "z"]),
            UserRecord::new("u3", ["x", "y", "z"]),
        ],
        policy: AccessPolicy::new(["y"], ["u2"]),
        attribute_pool: vec!["z".into(), "y".into(), "x".into()],
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let universe = AttributeUniverse::new(config.attribute_pool.iter()).map_err(err)?;
    let (mpk, msk) = setup(&config.curve, &universe, &config.users, &mut rng).map_err(err)?;
    let user_keys = config.users.iter().map(|u| keygen(&msk, u)).collect::<Result<_, _>>().map_err(err)?;
    let (_, header) = encapsulate(&mpk, &config.policy, &mut rng).map_err(err)?;
    Ok([
        save_config(&config),
        save_keys(&KeysFile { mpk, msk: Some(msk), user_keys }),
        save_header(&HeaderFile::new(header)),
    ])
}

fn criterion7() -> Outcome {
    let a = format_run(77)?;
    let b = format_run(77)?;
    ensure!(a == b, "two runs with the same seed serialized differently");
    ensure!(
        save_config(&load_config(&a[0]).map_err(err)?) == a[0]
            && save_keys(&load_keys(&a[1]).map_err(err)?) == a[1]
            && save_header(&load_header(&a[2]).map_err(err)?) == a[2],
        "load then save is not byte-identical"
    );
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden");
    let mut checked = 0;
    type Roundtrip = fn(&[u8]) -> Result<Vec<u8>, FormatError>;
    let cases: [(&str, Roundtrip); 3] = [
        ("config.json", |b| load_config(b).map(|c| save_config(&c))),
        ("keys.json", |b| load_keys(b).map(|k| save_keys(&k))),
        ("header.json", |b| load_header(b).map(|h| save_header(&h))),
    ];
    for (file, roundtrip) in cases {
        let bytes = std::fs::read(golden.join(file)).map_err(|e| format!("{file}: {e}"))?;
        ensure!(roundtrip(&bytes).map_err(err)? == bytes, "golden {file} does not roundtrip byte for byte");
        checked += 1;
    }
    Ok(format!("seeded runs byte-identical; {checked} golden files roundtrip exactly"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 KEM correctness", criterion1),
        ("2 size/count contract", criterion2),
        ("3 scaling shape", criterion3),
        ("4 forwarding-plane invariants", criterion4),
        ("5 end-to-end pipeline", criterion5),
        ("6 rooms", criterion6),
        ("7 format stability", criterion7),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (label, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| label.contains(o.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {label}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {label}: {reason}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
