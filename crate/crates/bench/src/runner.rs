//! Experiment plans and report files for the `bench` subcommand.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::host::{HostInfo, RunInfo};
use crate::keygen::{experiment1, experiment2, Pick, DEFAULT_ATTRS_PER_USER, DEFAULT_POOL_SIZE};
use crate::network::{experiment3, experiment4};
use crate::record::{to_csv, to_markdown};
use crate::{BenchError, BenchmarkRecord};

pub const DEFAULT_REPS: usize = 3;

/// Parameter lists for one experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub user_counts: Vec<usize>,
    pub attr_counts: Vec<usize>,
    pub file_sizes_mib: Vec<u64>,
}

fn steps(from: usize, to: usize, step: usize) -> impl Iterator<Item = usize> {
    (from..=to).step_by(step)
}

impl Plan {
    /// The desk plan thins the key generation sweeps and uses {5, 10, 50} MiB
    /// files; the full-scale plan restores every published data point.
    pub fn for_experiment(experiment: u8, paper_scale: bool) -> Result<Plan, BenchError> {
        let step = if paper_scale { 50 } else { 100 };
        let head = [1, 2, 5, 10, 20, 30, 40, 50];
        let download_users = vec![1, 2, 5, 10];
        let sizes = if paper_scale { vec![50, 100, 500] } else { vec![5, 10, 50] };
        Ok(match experiment {
            1 => Plan {
                user_counts: head.into_iter().chain(steps(100, 1000, step)).collect(),
                attr_counts: vec![DEFAULT_ATTRS_PER_USER],
                file_sizes_mib: vec![],
            },
            2 => Plan {
                user_counts: vec![1],
                attr_counts: [2, 5, 10, 20, 30, 40, 50].into_iter().chain(steps(100, 1000, step)).collect(),
                file_sizes_mib: vec![],
            },
            3 | 4 => Plan { user_counts: download_users, attr_counts: vec![], file_sizes_mib: sizes },
            n => return Err(BenchError::Plan(format!("no experiment {n}; expected 1 to 4"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchOptions {
    pub experiment: u8,
    pub out: PathBuf,
    pub paper_scale: bool,
    pub reps: usize,
    pub seed: Vec<u8>,
}

/// Deterministic harness randomness from arbitrary seed bytes.
pub fn seeded_rng(seed: &[u8]) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(Sha256::new_with_prefix(b"abbe-bench-seed\0").chain_update(seed).finalize().into())
}

pub fn run_plan(experiment: u8, plan: &Plan, reps: usize, seed: &[u8]) -> Result<Vec<BenchmarkRecord>, BenchError> {
    let mut rng = seeded_rng(seed);
    match experiment {
        1 => experiment1(&plan.user_counts, plan.attr_counts[0], DEFAULT_POOL_SIZE, reps, Pick::Median, &mut rng),
        2 => experiment2(&plan.attr_counts, reps, Pick::Median, &mut rng),
        3 => experiment3(&plan.user_counts, &plan.file_sizes_mib, reps, rand::RngCore::next_u64(&mut rng)),
        4 => experiment4(&plan.user_counts, &plan.file_sizes_mib, reps, &mut rng),
        n => Err(BenchError::Plan(format!("no experiment {n}; expected 1 to 4"))),
    }
}

/// Sidecar paths next to the CSV: `<out>.md` and `<out>.host.json`.
pub fn sidecar_paths(out: &Path) -> (PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = out.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".md"), with(".host.json"))
}

/// Runs the experiment and writes the CSV, Markdown and host sidecar.
pub fn run(opts: &BenchOptions) -> Result<Vec<BenchmarkRecord>, BenchError> {
    let plan = Plan::for_experiment(opts.experiment, opts.paper_scale)?;
    let info = RunInfo::now(opts.experiment, &hex_string(&opts.seed), opts.paper_scale, opts.reps);
    let records = run_plan(opts.experiment, &plan, opts.reps, &opts.seed)?;
    write_report(&opts.out, &records, &HostInfo::detect(), &info)?;
    Ok(records)
}

pub fn write_report(out: &Path, records: &[BenchmarkRecord], host: &HostInfo, info: &RunInfo) -> std::io::Result<()> {
    let (md, host_path) = sidecar_paths(out);
    std::fs::write(out, to_csv(records))?;
    std::fs::write(md, to_markdown(records))?;
    let mut meta = serde_json::to_vec_pretty(&host.to_json(info)).expect("json value serializes");
    meta.push(b'\n');
    std::fs::write(host_path, meta)
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
