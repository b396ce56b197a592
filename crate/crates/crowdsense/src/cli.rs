//! Command implementations behind the `crowdsense` binary: synthetic data
//! generation, single runs, sweeps, and the hindsight-oracle comparison.
//! Every report is written next to a manifest from which the run can be
//! replayed exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::ground_truth_graph;
use crate::ingest::{
    generate_synthetic, parse_contacts, parse_profiles, serialize_contacts, serialize_devices,
    serialize_profiles, SynthParams,
};
use crate::model::{BudgetSpec, ContactTrace, SimConfig, SocialProfiles};
use crate::select::select_optimal_bruteforce;
use crate::sim::{run_resolved, run_sweep, RunOutput, SweepGrid};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Manifest: `key=value` lines, sorted by key, LF endings.
fn write_manifest(out_dir: &Path, entries: &BTreeMap<String, String>) -> Result<PathBuf> {
    let mut text = String::new();
    for (k, v) in entries {
        let _ = writeln!(text, "{k}={v}");
    }
    let path = out_dir.join("manifest.txt");
    fs::write(&path, text)?;
    Ok(path)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Inputs of a run or oracle command, as file paths. Friends/interests are
/// optional; absent files mean empty profiles.
#[derive(Debug, Clone)]
pub struct InputFiles {
    pub contacts: PathBuf,
    pub devices: PathBuf,
    pub friends: Option<PathBuf>,
    pub interests: Option<PathBuf>,
    pub tau_s: i64,
}

pub struct LoadedInputs {
    pub trace: ContactTrace,
    pub profiles: SocialProfiles,
    pub dropped_profile_rows: u32,
    pub digests: BTreeMap<String, String>,
}

pub fn load_inputs(files: &InputFiles) -> Result<LoadedInputs> {
    let contacts_text = fs::read_to_string(&files.contacts)?;
    let devices_text = fs::read_to_string(&files.devices)?;
    let friends_text = match &files.friends {
        Some(p) => fs::read_to_string(p)?,
        None => "device_id,friend_id\n".to_string(),
    };
    let interests_text = match &files.interests {
        Some(p) => fs::read_to_string(p)?,
        None => "device_id,interest\n".to_string(),
    };
    let trace = parse_contacts(&contacts_text, &devices_text, files.tau_s)?;
    let load = parse_profiles(&friends_text, &interests_text, trace.registry())?;
    let mut digests = BTreeMap::new();
    digests.insert("digest_contacts".into(), sha256_hex(contacts_text.as_bytes()));
    digests.insert("digest_devices".into(), sha256_hex(devices_text.as_bytes()));
    digests.insert("digest_friends".into(), sha256_hex(friends_text.as_bytes()));
    digests.insert("digest_interests".into(), sha256_hex(interests_text.as_bytes()));
    Ok(LoadedInputs {
        trace,
        profiles: load.profiles,
        dropped_profile_rows: load.dropped_rows,
        digests,
    })
}

/// `generate`: write the four canonical CSVs plus a manifest.
pub fn cmd_generate(params: &SynthParams, seed: u64, out_dir: &Path) -> Result<()> {
    let (trace, profiles) = generate_synthetic(params, seed)?;
    fs::create_dir_all(out_dir)?;
    let contacts = serialize_contacts(&trace);
    let devices = serialize_devices(trace.registry());
    let (friends, interests) = serialize_profiles(&profiles);
    write_file(&out_dir.join("contacts.csv"), &contacts)?;
    write_file(&out_dir.join("devices.csv"), &devices)?;
    write_file(&out_dir.join("friends.csv"), &friends)?;
    write_file(&out_dir.join("interests.csv"), &interests)?;

    let mut m = BTreeMap::new();
    m.insert("artifact_version".into(), ARTIFACT_VERSION.into());
    m.insert("command".into(), "generate".into());
    m.insert("seed".into(), seed.to_string());
    m.insert("n_internal".into(), params.n_internal.to_string());
    m.insert("n_external".into(), params.n_external.to_string());
    m.insert("n_groups".into(), params.n_groups.to_string());
    m.insert("steps".into(), params.steps.to_string());
    m.insert("tau_s".into(), params.tau_s.to_string());
    m.insert("p_detect".into(), format!("{}", params.p_detect));
    m.insert("p_move".into(), format!("{}", params.p_move));
    m.insert("n_locations".into(), params.n_locations.to_string());
    m.insert("friendship_within_group".into(), format!("{}", params.friendship_within_group));
    m.insert("interests_per_device".into(), params.interests_per_device.to_string());
    m.insert("digest_contacts".into(), sha256_hex(contacts.as_bytes()));
    m.insert("digest_devices".into(), sha256_hex(devices.as_bytes()));
    m.insert("digest_friends".into(), sha256_hex(friends.as_bytes()));
    m.insert("digest_interests".into(), sha256_hex(interests.as_bytes()));
    write_manifest(out_dir, &m)?;
    Ok(())
}

pub const REPORT_HEADER: &str =
    "round,start_s,end_s,algorithm,bootstrap,n,k,seed,observed_edges,truth_edges,coverage_ratio";

fn report_csv(out: &RunOutput) -> String {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for r in &out.reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{:.6}",
            r.round_index,
            r.start_s,
            r.end_s,
            r.algorithm,
            r.bootstrap,
            out.config.n,
            out.config.k,
            r.seed,
            r.observed_edges,
            r.truth_edges,
            r.coverage_ratio
        );
    }
    s
}

fn config_manifest_entries(out: &RunOutput, m: &mut BTreeMap<String, String>) {
    let c = &out.config;
    m.insert("algorithm".into(), c.algorithm.clone());
    m.insert("bootstrap".into(), c.bootstrap.clone());
    m.insert("n".into(), c.n.to_string());
    m.insert("k".into(), c.k.to_string());
    m.insert("ts_seconds".into(), c.ts_seconds.to_string());
    m.insert("td_seconds".into(), c.td_seconds.to_string());
    m.insert("rounds".into(), c.rounds.to_string());
    m.insert("seed".into(), c.seed.to_string());
    m.insert("start_time_s".into(), c.start_time_s.to_string());
    m.insert("truncated_rounds".into(), out.truncated_rounds.to_string());
}

/// `run`: one simulation, written as report.csv plus a manifest.
pub fn cmd_run(files: &InputFiles, config: &SimConfig, out_dir: &Path) -> Result<RunOutput> {
    let inputs = load_inputs(files)?;
    let cfg = config.resolve(inputs.trace.registry(), inputs.trace.tau_s())?;
    let out = run_resolved(&inputs.trace, &inputs.profiles, &cfg)?;
    fs::create_dir_all(out_dir)?;
    write_file(&out_dir.join("report.csv"), &report_csv(&out))?;

    let mut m = inputs.digests.clone();
    m.insert("artifact_version".into(), ARTIFACT_VERSION.into());
    m.insert("command".into(), "run".into());
    m.insert("tau_s".into(), files.tau_s.to_string());
    m.insert("dropped_profile_rows".into(), inputs.dropped_profile_rows.to_string());
    config_manifest_entries(&out, &mut m);
    write_manifest(out_dir, &m)?;
    Ok(out)
}

pub const SWEEP_HEADER: &str = "ts_seconds,algorithm,bootstrap,grid_seed,round,start_s,end_s,n,k,run_seed,observed_edges,truth_edges,coverage_ratio";

/// `sweep`: one run per grid point, written as a single flat CSV.
pub fn cmd_sweep(
    files: &InputFiles,
    base: &SimConfig,
    grid: &SweepGrid,
    out_dir: &Path,
) -> Result<()> {
    let inputs = load_inputs(files)?;
    let results = run_sweep(&inputs.trace, &inputs.profiles, base, grid)?;
    fs::create_dir_all(out_dir)?;

    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for (point, out) in &results {
        for r in &out.reports {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{:.6}",
                point.ts_seconds,
                point.algorithm,
                point.bootstrap,
                point.seed,
                r.round_index,
                r.start_s,
                r.end_s,
                out.config.n,
                out.config.k,
                r.seed,
                r.observed_edges,
                r.truth_edges,
                r.coverage_ratio
            );
        }
    }
    write_file(&out_dir.join("sweep_report.csv"), &s)?;

    let mut m = inputs.digests.clone();
    m.insert("artifact_version".into(), ARTIFACT_VERSION.into());
    m.insert("command".into(), "sweep".into());
    m.insert("tau_s".into(), files.tau_s.to_string());
    m.insert("base_seed".into(), base.seed.to_string());
    m.insert("grid_points".into(), results.len().to_string());
    write_manifest(out_dir, &m)?;
    Ok(())
}

pub const ORACLE_HEADER: &str = "round,n,oracle_edges,random_edges,greedy_edges,hcontext_edges";

/// `oracle`: per round, the enumerated optimal covered-edge count on the
/// truth graph next to each selector's observed count.
pub fn cmd_oracle(files: &InputFiles, config: &SimConfig, out_dir: &Path) -> Result<()> {
    let inputs = load_inputs(files)?;
    let cfg = config.resolve(inputs.trace.registry(), inputs.trace.tau_s())?;

    let mut per_algo = BTreeMap::new();
    for algo in crate::select::COVER_STRATEGIES {
        let algo_cfg =
            crate::model::ResolvedConfig { algorithm: algo.to_string(), ..cfg.clone() };
        per_algo.insert(*algo, run_resolved(&inputs.trace, &inputs.profiles, &algo_cfg)?);
    }
    let rounds = per_algo.values().map(|o| o.reports.len()).min().unwrap_or(0);
    let v_in = inputs.trace.registry().internal();

    let mut s = String::from(ORACLE_HEADER);
    s.push('\n');
    for round in 0..rounds {
        let start_s = cfg.start_time_s + round as i64 * cfg.ts_seconds;
        let truth = ground_truth_graph(&inputs.trace, start_s, cfg.ts_seconds);
        let (_, oracle_edges) = select_optimal_bruteforce(&truth, v_in, cfg.n as usize)?;
        let _ = writeln!(
            s,
            "{round},{},{oracle_edges},{},{},{}",
            cfg.n,
            per_algo["random"].reports[round].observed_edges,
            per_algo["greedy"].reports[round].observed_edges,
            per_algo["hcontext"].reports[round].observed_edges,
        );
    }
    fs::create_dir_all(out_dir)?;
    write_file(&out_dir.join("oracle_report.csv"), &s)?;

    let mut m = inputs.digests.clone();
    m.insert("artifact_version".into(), ARTIFACT_VERSION.into());
    m.insert("command".into(), "oracle".into());
    m.insert("tau_s".into(), files.tau_s.to_string());
    m.insert("rounds_compared".into(), rounds.to_string());
    let tmp = RunOutput {
        reports: Vec::new(),
        truncated_rounds: 0,
        config: cfg,
    };
    config_manifest_entries(&tmp, &mut m);
    write_manifest(out_dir, &m)?;
    Ok(())
}

/// Flat `key=value` config file. Unknown keys are an error; flags override
/// these values at the binary layer.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    const KEYS: &[&str] = &[
        "algorithm", "bootstrap", "n", "n_percent", "k_fraction", "ts", "td", "rounds", "seed",
        "start", "tau",
    ];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected key=value, got {line:?}"),
        })?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(Error::Parse { line: i + 1, msg: format!("unknown config key {k:?}") });
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Resolve a count/percent pair into a budget. Exactly one may be present.
pub fn budget_from(n: Option<u32>, n_percent: Option<f64>) -> Result<BudgetSpec> {
    match (n, n_percent) {
        (Some(_), Some(_)) => {
            Err(Error::InvalidConfig("--n and --n-percent are mutually exclusive".into()))
        }
        (Some(c), None) => Ok(BudgetSpec::Count(c)),
        (None, Some(p)) => Ok(BudgetSpec::Fraction(p / 100.0)),
        (None, None) => Err(Error::InvalidConfig("one of --n or --n-percent is required".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_round_trip() {
        let text = "# comment\nalgorithm=greedy\nn_percent=40\nseed=9\n";
        let m = parse_config_file(text).unwrap();
        assert_eq!(m["algorithm"], "greedy");
        assert_eq!(m["n_percent"], "40");
        assert_eq!(m["seed"], "9");
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        assert!(parse_config_file("fizz=1\n").is_err());
    }

    #[test]
    fn budget_flags_are_exclusive() {
        assert!(budget_from(Some(3), Some(40.0)).is_err());
        assert!(budget_from(None, None).is_err());
        assert_eq!(budget_from(Some(3), None).unwrap(), BudgetSpec::Count(3));
        assert_eq!(budget_from(None, Some(40.0)).unwrap(), BudgetSpec::Fraction(0.4));
    }
}
