//! Host metadata written next to every report. Absolute timings are only
//! comparable on the same hardware.

use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HostInfo {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
    pub cpu_model: Option<String>,
    pub hostname: Option<String>,
    pub debug_build: bool,
}

impl HostInfo {
    pub fn detect() -> Self {
        HostInfo {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            cpu_model: cpu_model(),
            hostname: std::fs::read_to_string("/etc/hostname").ok().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()),
            debug_build: cfg!(debug_assertions),
        }
    }

    pub fn to_json(&self, run: &RunInfo) -> Value {
        json!({
            "os": self.os,
            "arch": self.arch,
            "cpus": self.cpus,
            "cpu_model": self.cpu_model,
            "hostname": self.hostname,
            "debug_build": self.debug_build,
            "harness_version": env!("CARGO_PKG_VERSION"),
            "experiment": run.experiment,
            "seed": run.seed_hex,
            "paper_scale": run.paper_scale,
            "repetitions": run.reps,
            "started_unix": run.started_unix,
        })
    }
}

/// Parameters of one harness invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunInfo {
    pub experiment: u8,
    pub seed_hex: String,
    pub paper_scale: bool,
    pub reps: usize,
    pub started_unix: u64,
}

impl RunInfo {
    pub fn now(experiment: u8, seed_hex: &str, paper_scale: bool, reps: usize) -> Self {
        RunInfo {
            experiment,
            seed_hex: seed_hex.to_string(),
            paper_scale,
            reps,
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }
}

fn cpu_model() -> Option<String> {
    let info = std::fs::read_to_string("/proc/cpuinfo").ok()?;
    info.lines()
        .find(|l| l.starts_with("model name"))
        .and_then(|l| l.split_once(':'))
        .map(|(_, v)| v.trim().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_carries_run_parameters() {
        let host = HostInfo::detect();
        assert!(host.cpus >= 1);
        let v = host.to_json(&RunInfo::now(3, "00ff", true, 3));
        assert_eq!(v["experiment"], 3);
        assert_eq!(v["seed"], "00ff");
        assert_eq!(v["paper_scale"], true);
        assert_eq!(v["repetitions"], 3);
        assert_eq!(v["os"], std::env::consts::OS);
    }
}
