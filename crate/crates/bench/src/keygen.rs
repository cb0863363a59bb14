//! Experiments 1 and 2: master key setup plus per-user key generation.

use std::time::Instant;

use abbe_core::{keygen, setup, AttributeUniverse, CurveParams, UserRecord};
use rand::seq::index::sample;
use rand::{CryptoRng, RngCore};

use crate::stats::median_index;
use crate::{BenchError, BenchmarkRecord};

pub const DEFAULT_ATTRS_PER_USER: usize = 3;
pub const DEFAULT_POOL_SIZE: usize = 50;

pub fn attribute_pool(size: usize) -> Vec<String> {
    (0..size).map(|i| format!("attr-{i:04}")).collect()
}

/// `count` users, each with `attrs_per_user` distinct attributes drawn
/// uniformly from `pool`.
pub fn random_users<R: RngCore>(count: usize, attrs_per_user: usize, pool: &[String], rng: &mut R) -> Vec<UserRecord> {
    (0..count)
        .map(|i| {
            let picked = sample(rng, pool.len(), attrs_per_user).into_iter().map(|j| pool[j].clone());
            UserRecord::new(format!("user-{i:04}"), picked.collect::<Vec<_>>())
        })
        .collect()
}

/// Times setup plus keygen for every user. Returns the total and each
/// user's keygen time.
pub fn time_keygen_run<R: RngCore + CryptoRng>(
    curve: &CurveParams,
    universe: &AttributeUniverse,
    users: &[UserRecord],
    rng: &mut R,
) -> Result<(f64, Vec<f64>), BenchError> {
    let start = Instant::now();
    let (_, msk) = setup(curve, universe, users, rng)?;
    let mut per_user = Vec::with_capacity(users.len());
    for user in users {
        let t = Instant::now();
        std::hint::black_box(keygen(&msk, user)?);
        per_user.push(t.elapsed().as_secs_f64());
    }
    Ok((start.elapsed().as_secs_f64(), per_user))
}

/// Which of the repeated runs a record reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pick {
    /// The run with the median total. Used for reports.
    Median,
    /// The run with the smallest total. Host interference only ever adds
    /// time, so this isolates the algorithmic cost on a shared machine.
    Fastest,
}

/// Sweeps every configuration `reps` times, repetition-major so that a slow
/// spell on the host spreads over different configurations instead of
/// hitting all repetitions of one.
fn sweep<R: RngCore + CryptoRng>(
    reps: usize,
    pick: Pick,
    configs: &[(AttributeUniverse, Vec<UserRecord>)],
    rng: &mut R,
) -> Result<Vec<(f64, Vec<f64>)>, BenchError> {
    let curve = CurveParams::default_curve();
    let mut runs: Vec<Vec<(f64, Vec<f64>)>> = vec![Vec::new(); configs.len()];
    for _ in 0..reps.max(1) {
        for (slot, (universe, users)) in runs.iter_mut().zip(configs) {
            slot.push(time_keygen_run(&curve, universe, users, rng)?);
        }
    }
    Ok(runs
        .into_iter()
        .map(|mut r| {
            let totals: Vec<f64> = r.iter().map(|x| x.0).collect();
            let i = match pick {
                Pick::Median => median_index(&totals).expect("at least one run"),
                Pick::Fastest => totals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("at least one run").0,
            };
            r.swap_remove(i)
        })
        .collect())
}

/// Fixed attributes per user, varying user count.
pub fn experiment1<R: RngCore + CryptoRng>(
    user_counts: &[usize],
    attrs_per_user: usize,
    pool_size: usize,
    reps: usize,
    pick: Pick,
    rng: &mut R,
) -> Result<Vec<BenchmarkRecord>, BenchError> {
    if user_counts.is_empty() || user_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::Plan("user counts must be non-empty and ascending".into()));
    }
    if attrs_per_user == 0 || attrs_per_user > pool_size {
        return Err(BenchError::Plan(format!("cannot draw {attrs_per_user} attributes from a pool of {pool_size}")));
    }
    let pool = attribute_pool(pool_size);
    let universe = AttributeUniverse::new(pool.iter())?;
    let configs: Vec<_> =
        user_counts.iter().map(|&n| (universe.clone(), random_users(n, attrs_per_user, &pool, rng))).collect();
    Ok(sweep(reps, pick, &configs, rng)?
        .into_iter()
        .zip(user_counts)
        .map(|((total, per_user), &n)| BenchmarkRecord::new(1, n, attrs_per_user, 0, total, per_user))
        .collect())
}

/// One user, varying attribute count. The universe is exactly that user's
/// attributes, so setup grows with the count as well.
pub fn experiment2<R: RngCore + CryptoRng>(
    attr_counts: &[usize],
    reps: usize,
    pick: Pick,
    rng: &mut R,
) -> Result<Vec<BenchmarkRecord>, BenchError> {
    if attr_counts.is_empty() || attr_counts.windows(2).any(|w| w[0] >= w[1]) || attr_counts[0] == 0 {
        return Err(BenchError::Plan("attribute counts must be positive and ascending".into()));
    }
    let configs = attr_counts
        .iter()
        .map(|&n| {
            let pool = attribute_pool(n);
            Ok((AttributeUniverse::new(pool.iter())?, vec![UserRecord::new("user-0000", pool.iter())]))
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    Ok(sweep(reps, pick, &configs, rng)?
        .into_iter()
        .zip(attr_counts)
        .map(|((total, per_user), &n)| BenchmarkRecord::new(2, 1, n, 0, total, per_user))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn random_users_draw_distinct_pool_attributes() {
        let pool = attribute_pool(50);
        let users = random_users(20, 3, &pool, &mut ChaCha20Rng::seed_from_u64(1));
        assert_eq!(users.len(), 20);
        for u in &users {
            assert_eq!(u.attributes.len(), 3);
            assert!(u.attributes.iter().all(|a| pool.contains(a)));
        }
    }

    #[test]
    fn experiment1_small_counts() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let records = experiment1(&[1, 2, 5, 10], 3, 50, 1, Pick::Median, &mut rng).unwrap();
        assert_eq!(records.len(), 4);
        for (r, n) in records.iter().zip([1, 2, 5, 10]) {
            assert_eq!((r.experiment, r.users, r.attributes), (1, n, 3));
            assert!(r.is_consistent());
            assert!(r.total_seconds >= r.per_user_seconds.iter().sum::<f64>());
        }
        assert_eq!(experiment1(&[1], 3, 50, 1, Pick::Median, &mut rng).unwrap().len(), 1);
    }

    #[test]
    fn experiment2_small_counts() {
        let records = experiment2(&[2, 5, 10], 1, Pick::Fastest, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        assert_eq!(records.iter().map(|r| r.attributes).collect::<Vec<_>>(), [2, 5, 10]);
        assert!(records.iter().all(|r| r.users == 1 && r.is_consistent()));
    }

    #[test]
    fn bad_plans_are_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        assert!(experiment1(&[], 3, 50, 1, Pick::Median, &mut rng).is_err());
        assert!(experiment1(&[5, 2], 3, 50, 1, Pick::Median, &mut rng).is_err());
        assert!(experiment1(&[1], 51, 50, 1, Pick::Median, &mut rng).is_err());
        assert!(experiment2(&[0, 1], 1, Pick::Median, &mut rng).is_err());
    }
}
