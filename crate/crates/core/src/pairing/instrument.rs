//! Operation counters for pairings and scalar multiplications.
//!
//! Every counted operation bumps a process-wide atomic and a thread-local
//! mirror. Tests should read [`thread_counts`]: the global totals also see
//! whatever other test threads are doing.

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub pairings: u64,
    pub g1_muls: u64,
    pub g2_muls: u64,
    pub gt_exps: u64,
}

impl OpCounts {
    /// Scalar multiplications in the elliptic groups (G1 and G2).
    pub fn elliptic_muls(&self) -> u64 {
        self.g1_muls + self.g2_muls
    }

    pub fn since(&self, earlier: &OpCounts) -> OpCounts {
        OpCounts {
            pairings: self.pairings - earlier.pairings,
            g1_muls: self.g1_muls - earlier.g1_muls,
            g2_muls: self.g2_muls - earlier.g2_muls,
            gt_exps: self.gt_exps - earlier.gt_exps,
        }
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Op {
    Pairing,
    G1Mul,
    G2Mul,
    GtExp,
}

static PAIRINGS: AtomicU64 = AtomicU64::new(0);
static G1_MULS: AtomicU64 = AtomicU64::new(0);
static G2_MULS: AtomicU64 = AtomicU64::new(0);
static GT_EXPS: AtomicU64 = AtomicU64::new(0);

thread_local! {
    static LOCAL: Cell<OpCounts> = Cell::new(OpCounts::default());
}

pub(crate) fn record(op: Op) {
    let global = match op {
        Op::Pairing => &PAIRINGS,
        Op::G1Mul => &G1_MULS,
        Op::G2Mul => &G2_MULS,
        Op::GtExp => &GT_EXPS,
    };
    global.fetch_add(1, Ordering::Relaxed);
    LOCAL.with(|c| {
        let mut v = c.get();
        match op {
            Op::Pairing => v.pairings += 1,
            Op::G1Mul => v.g1_muls += 1,
            Op::G2Mul => v.g2_muls += 1,
            Op::GtExp => v.gt_exps += 1,
        }
        c.set(v);
    });
}

/// Counts performed by the calling thread since it started (or since [`reset`]).
pub fn thread_counts() -> OpCounts {
    LOCAL.with(|c| c.get())
}

/// Process-wide totals.
pub fn global_counts() -> OpCounts {
    OpCounts {
        pairings: PAIRINGS.load(Ordering::Relaxed),
        g1_muls: G1_MULS.load(Ordering::Relaxed),
        g2_muls: G2_MULS.load(Ordering::Relaxed),
        gt_exps: GT_EXPS.load(Ordering::Relaxed),
    }
}

/// Zeroes the global totals and the calling thread's counts.
pub fn reset() {
    for c in [&PAIRINGS, &G1_MULS, &G2_MULS, &GT_EXPS] {
        c.store(0, Ordering::Relaxed);
    }
    LOCAL.with(|c| c.set(OpCounts::default()));
}
