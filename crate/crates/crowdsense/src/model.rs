//! Core domain types: devices, contact events, traces, social profiles, and
//! run configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Device identifier. Total order is used for deterministic tie-breaking
/// throughout the selection algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeviceId(pub u32);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Partition of the device population into experiment participants
/// (internal, eligible to sense) and bystander devices (external, visible
/// only through others' scans).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceRegistry {
    internal: BTreeSet<DeviceId>,
    external: BTreeSet<DeviceId>,
}

impl DeviceRegistry {
    pub fn new(internal: BTreeSet<DeviceId>, external: BTreeSet<DeviceId>) -> Result<Self> {
        if internal.is_empty() {
            return Err(Error::InvalidConfig("registry has no internal devices".into()));
        }
        if let Some(d) = internal.intersection(&external).next() {
            return Err(Error::InvalidConfig(format!(
                "device {d} is both internal and external"
            )));
        }
        Ok(Self { internal, external })
    }

    pub fn internal(&self) -> &BTreeSet<DeviceId> {
        &self.internal
    }

    pub fn external(&self) -> &BTreeSet<DeviceId> {
        &self.external
    }

    pub fn is_internal(&self, d: DeviceId) -> bool {
        self.internal.contains(&d)
    }

    /// Register a device discovered through a scan. No-op for known devices.
    pub fn add_external(&mut self, d: DeviceId) {
        if !self.internal.contains(&d) {
            self.external.insert(d);
        }
    }
}

/// One scan record: `scanner` saw `seen` at `time_s` seconds from the trace
/// epoch. Only internal devices run the scanning app, so `scanner` is always
/// internal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContactEvent {
    pub time_s: i64,
    pub scanner: DeviceId,
    pub seen: DeviceId,
}

/// A replayable sequence of scan records plus the device registry and the
/// scan cadence they were collected under.
#[derive(Debug, Clone)]
pub struct ContactTrace {
    events: Vec<ContactEvent>,
    registry: DeviceRegistry,
    tau_s: i64,
    epoch_s: i64,
}

impl ContactTrace {
    /// Events are sorted by time on construction; scanner/seen invariants are
    /// checked.
    pub fn new(
        mut events: Vec<ContactEvent>,
        registry: DeviceRegistry,
        tau_s: i64,
        epoch_s: i64,
    ) -> Result<Self> {
        for e in &events {
            if e.time_s < 0 {
                return Err(Error::InvalidConfig(format!(
                    "event at t={} precedes trace epoch",
                    e.time_s
                )));
            }
            if e.scanner == e.seen {
                return Err(Error::InvalidConfig(format!(
                    "device {} scanned itself",
                    e.scanner
                )));
            }
            if !registry.is_internal(e.scanner) {
                return Err(Error::InvalidConfig(format!(
                    "scanner {} is not an internal device",
                    e.scanner
                )));
            }
        }
        events.sort_by_key(|e| e.time_s);
        Ok(Self { events, registry, tau_s, epoch_s })
    }

    pub fn events(&self) -> &[ContactEvent] {
        &self.events
    }

    pub fn registry(&self) -> &DeviceRegistry {
        &self.registry
    }

    pub fn tau_s(&self) -> i64 {
        self.tau_s
    }

    pub fn epoch_s(&self) -> i64 {
        self.epoch_s
    }

    /// Events with start_s <= time < start_s + len_s, in time order.
    pub fn slice(&self, start_s: i64, len_s: i64) -> &[ContactEvent] {
        let lo = self.events.partition_point(|e| e.time_s < start_s);
        let hi = self.events.partition_point(|e| e.time_s < start_s + len_s);
        &self.events[lo..hi]
    }

    pub fn last_event_time(&self) -> Option<i64> {
        self.events.last().map(|e| e.time_s)
    }
}

/// Out-of-band social metadata about the internal participants. Friendship
/// pairs are stored with the smaller id first.
#[derive(Debug, Clone, Default)]
pub struct SocialProfiles {
    pub friendships: BTreeSet<(DeviceId, DeviceId)>,
    pub interests: BTreeMap<DeviceId, BTreeSet<String>>,
}

impl SocialProfiles {
    pub fn add_friendship(&mut self, a: DeviceId, b: DeviceId) {
        debug_assert_ne!(a, b);
        let pair = if a < b { (a, b) } else { (b, a) };
        self.friendships.insert(pair);
    }
}

/// Sensing budget, either an absolute device count or a fraction of the
/// internal population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetSpec {
    Count(u32),
    Fraction(f64),
}

/// Resolve the budget against the internal population size. Fractions round
/// up; the result always lands in [1, v_in_size].
pub fn resolve_budget(spec: BudgetSpec, v_in_size: u32) -> Result<u32> {
    match spec {
        BudgetSpec::Count(0) => Err(Error::InvalidConfig("budget count must be >= 1".into())),
        BudgetSpec::Count(c) if c > v_in_size => Err(Error::InvalidConfig(format!(
            "budget {c} exceeds internal population {v_in_size}"
        ))),
        BudgetSpec::Count(c) => Ok(c),
        BudgetSpec::Fraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "budget fraction {f} outside (0, 1]"
                )));
            }
            let n = (f * v_in_size as f64).ceil() as u32;
            Ok(n.clamp(1, v_in_size))
        }
    }
}

/// Full configuration of one simulation run, before budget resolution.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub ts_seconds: i64,
    /// Decision window length. Recorded for bookkeeping; rounds are
    /// back-to-back windows of ts_seconds and t_d consumes no simulated time.
    pub td_seconds: i64,
    pub budget: BudgetSpec,
    pub k_fraction: f64,
    pub rounds: u32,
    pub algorithm: String,
    pub bootstrap: String,
    pub seed: u64,
    pub start_time_s: i64,
}

/// SimConfig with the budget and keep count resolved against a registry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedConfig {
    pub ts_seconds: i64,
    pub td_seconds: i64,
    pub n: u32,
    pub k: u32,
    pub rounds: u32,
    pub algorithm: String,
    pub bootstrap: String,
    pub seed: u64,
    pub start_time_s: i64,
}

impl SimConfig {
    pub fn resolve(&self, registry: &DeviceRegistry, tau_s: i64) -> Result<ResolvedConfig> {
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be >= 1".into()));
        }
        if self.ts_seconds < tau_s {
            return Err(Error::InvalidConfig(format!(
                "ts_seconds {} shorter than inquiry interval {tau_s}",
                self.ts_seconds
            )));
        }
        if !(self.k_fraction > 0.0 && self.k_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "k_fraction {} outside (0, 1]",
                self.k_fraction
            )));
        }
        let n = resolve_budget(self.budget, registry.internal().len() as u32)?;
        let k = ((self.k_fraction * n as f64).floor() as u32).clamp(1, n);
        Ok(ResolvedConfig {
            ts_seconds: self.ts_seconds,
            td_seconds: self.td_seconds,
            n,
            k,
            rounds: self.rounds,
            algorithm: self.algorithm.clone(),
            bootstrap: self.bootstrap.clone(),
            seed: self.seed,
            start_time_s: self.start_time_s,
        })
    }
}
