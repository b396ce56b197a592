//! Trace and profile ingestion: the canonical CSV formats, their writers,
//! and a seeded synthetic trace generator for desk-scale experiments.
//!
//! Formats (UTF-8, LF endings):
//!   contacts.csv  `time_s,scanner_id,seen_id`
//!   devices.csv   `device_id,class` with class in {internal, external}
//!   friends.csv   `device_id,friend_id`
//!   interests.csv `device_id,interest`

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    ContactEvent, ContactTrace, DeviceId, DeviceRegistry, SocialProfiles,
};
use crate::rng::{derive_rng, Stream};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line: line + 1, msg: msg.into() }
}

fn parse_id(field: &str, line: usize) -> Result<DeviceId> {
    field
        .trim()
        .parse::<u32>()
        .map(DeviceId)
        .map_err(|_| parse_err(line, format!("bad device id {field:?}")))
}

/// Split a CSV body into rows, checking the header and skipping blank lines.
/// Yields (line_index, fields).
fn rows<'a>(
    text: &'a str,
    header: &str,
    arity: usize,
) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((i, h)) => return Err(parse_err(i, format!("expected header {header:?}, got {h:?}"))),
        None => return Err(parse_err(0, format!("empty file, expected header {header:?}"))),
    }
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != arity {
            return Err(parse_err(i, format!("expected {arity} fields, got {}", fields.len())));
        }
        out.push((i, fields));
    }
    Ok(out)
}

pub fn parse_devices(devices_text: &str) -> Result<DeviceRegistry> {
    let mut internal = BTreeSet::new();
    let mut external = BTreeSet::new();
    for (i, f) in rows(devices_text, "device_id,class", 2)? {
        let id = parse_id(f[0], i)?;
        match f[1].trim() {
            "internal" => internal.insert(id),
            "external" => external.insert(id),
            other => return Err(parse_err(i, format!("unknown device class {other:?}"))),
        };
    }
    DeviceRegistry::new(internal, external)
}

/// Parse a contact trace from the canonical CSV pair. Unknown ids in the
/// `seen` column are auto-registered as external devices; an undeclared
/// scanner is a schema error.
pub fn parse_contacts(contacts_text: &str, devices_text: &str, tau_s: i64) -> Result<ContactTrace> {
    let mut registry = parse_devices(devices_text)?;
    let mut events = Vec::new();
    for (i, f) in rows(contacts_text, "time_s,scanner_id,seen_id", 3)? {
        let time_s: i64 = f[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(i, format!("bad timestamp {:?}", f[0])))?;
        if time_s < 0 {
            return Err(parse_err(i, "negative timestamp"));
        }
        let scanner = parse_id(f[1], i)?;
        let seen = parse_id(f[2], i)?;
        if !registry.is_internal(scanner) {
            return Err(Error::Schema {
                line: i + 1,
                msg: format!("scanner {scanner} is not declared internal"),
            });
        }
        if scanner == seen {
            return Err(Error::Schema { line: i + 1, msg: format!("self-scan by {scanner}") });
        }
        registry.add_external(seen);
        events.push(ContactEvent { time_s, scanner, seen });
    }
    ContactTrace::new(events, registry, tau_s, 0)
}

/// Parsed profiles plus the number of rows dropped for referencing
/// non-internal devices.
pub struct ProfileLoad {
    pub profiles: SocialProfiles,
    pub dropped_rows: u32,
}

pub fn parse_profiles(
    friends_text: &str,
    interests_text: &str,
    registry: &DeviceRegistry,
) -> Result<ProfileLoad> {
    let mut profiles = SocialProfiles::default();
    let mut dropped_rows = 0u32;
    for (i, f) in rows(friends_text, "device_id,friend_id", 2)? {
        let a = parse_id(f[0], i)?;
        let b = parse_id(f[1], i)?;
        if a == b {
            return Err(parse_err(i, format!("device {a} befriending itself")));
        }
        if !registry.is_internal(a) || !registry.is_internal(b) {
            dropped_rows += 1;
            continue;
        }
        profiles.add_friendship(a, b);
    }
    for (i, f) in rows(interests_text, "device_id,interest", 2)? {
        let d = parse_id(f[0], i)?;
        let tag = f[1].trim();
        if tag.is_empty() {
            return Err(parse_err(i, "empty interest tag"));
        }
        if !registry.is_internal(d) {
            dropped_rows += 1;
            continue;
        }
        profiles.interests.entry(d).or_default().insert(tag.to_string());
    }
    Ok(ProfileLoad { profiles, dropped_rows })
}

pub fn serialize_contacts(trace: &ContactTrace) -> String {
    let mut s = String::from("time_s,scanner_id,seen_id\n");
    for e in trace.events() {
        let _ = writeln!(s, "{},{},{}", e.time_s, e.scanner, e.seen);
    }
    s
}

pub fn serialize_devices(registry: &DeviceRegistry) -> String {
    let mut s = String::from("device_id,class\n");
    for d in registry.internal() {
        let _ = writeln!(s, "{d},internal");
    }
    for d in registry.external() {
        let _ = writeln!(s, "{d},external");
    }
    s
}

pub fn serialize_profiles(profiles: &SocialProfiles) -> (String, String) {
    let mut friends = String::from("device_id,friend_id\n");
    for (a, b) in &profiles.friendships {
        let _ = writeln!(friends, "{a},{b}");
    }
    let mut interests = String::from("device_id,interest\n");
    for (d, tags) in &profiles.interests {
        for t in tags {
            let _ = writeln!(interests, "{d},{t}");
        }
    }
    (friends, interests)
}

/// Parameters of the synthetic mobility/scan model.
#[derive(Debug, Clone)]
pub struct SynthParams {
    pub n_internal: u32,
    pub n_external: u32,
    pub n_groups: u32,
    pub steps: u32,
    pub tau_s: i64,
    pub p_detect: f64,
    pub p_move: f64,
    pub n_locations: u32,
    pub friendship_within_group: f64,
    pub interests_per_device: u32,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_internal: 30,
            n_external: 50,
            n_groups: 5,
            steps: 200,
            tau_s: 60,
            p_detect: 0.8,
            p_move: 0.2,
            n_locations: 12,
            friendship_within_group: 0.5,
            interests_per_device: 2,
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        if self.n_internal == 0 || self.n_groups == 0 || self.steps == 0 || self.n_locations == 0 {
            return Err(Error::InvalidConfig("synthetic counts must be positive".into()));
        }
        if self.n_groups > self.n_internal {
            return Err(Error::InvalidConfig(format!(
                "n_groups {} exceeds n_internal {}",
                self.n_groups, self.n_internal
            )));
        }
        if self.interests_per_device == 0 {
            return Err(Error::InvalidConfig("interests_per_device must be >= 1".into()));
        }
        for (name, p) in [
            ("p_detect", self.p_detect),
            ("p_move", self.p_move),
            ("friendship_within_group", self.friendship_within_group),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} {p} outside [0, 1]")));
            }
        }
        if self.tau_s <= 0 {
            return Err(Error::InvalidConfig("tau_s must be positive".into()));
        }
        Ok(())
    }
}

/// Generate a deterministic synthetic trace and matching profiles.
///
/// Devices (internal first, then external) are assigned to groups
/// round-robin. Every device sits in one of `n_locations`, starting at its
/// group's home location. Per tick each device moves with `p_move` (biased
/// back to the group home with probability 0.7, otherwise uniform), then
/// every internal device scans each co-located device with `p_detect`.
pub fn generate_synthetic(
    params: &SynthParams,
    seed: u64,
) -> Result<(ContactTrace, SocialProfiles)> {
    params.validate()?;
    let mut rng = derive_rng(seed, Stream::Ingest);

    let n_total = params.n_internal + params.n_external;
    let internal: BTreeSet<DeviceId> = (0..params.n_internal).map(DeviceId).collect();
    let external: BTreeSet<DeviceId> =
        (params.n_internal..n_total).map(DeviceId).collect();
    let registry = DeviceRegistry::new(internal.clone(), external)?;

    // internal devices join groups round-robin; external devices skew toward
    // low-index groups (halving weights) so location densities differ
    let n_groups = params.n_groups;
    let external_group = |i: u32| -> u32 {
        let total = (1u64 << n_groups) - 1;
        let ticket = (i as u64 * total) / params.n_external.max(1) as u64;
        let mut acc = 0u64;
        for g in 0..n_groups {
            acc += 1u64 << (n_groups - 1 - g);
            if ticket < acc {
                return g;
            }
        }
        n_groups - 1
    };
    let group_of = move |d: u32| {
        if d < params.n_internal {
            d % n_groups
        } else {
            external_group(d - params.n_internal)
        }
    };
    let home_of = |g: u32| g % params.n_locations;
    let mut location: Vec<u32> = (0..n_total).map(|d| home_of(group_of(d))).collect();

    let mut events = Vec::new();
    for step in 0..params.steps {
        let t = step as i64 * params.tau_s;
        for d in 0..n_total {
            if rng.gen_bool(params.p_move) {
                location[d as usize] = if rng.gen_bool(0.7) {
                    home_of(group_of(d))
                } else {
                    rng.gen_range(0..params.n_locations)
                };
            }
        }
        for scanner in 0..params.n_internal {
            for other in 0..n_total {
                if other == scanner || location[other as usize] != location[scanner as usize] {
                    continue;
                }
                if rng.gen_bool(params.p_detect) {
                    events.push(ContactEvent {
                        time_s: t,
                        scanner: DeviceId(scanner),
                        seen: DeviceId(other),
                    });
                }
            }
        }
    }
    let trace = ContactTrace::new(events, registry, params.tau_s, 0)?;

    let mut profiles = SocialProfiles::default();
    let members: Vec<u32> = (0..params.n_internal).collect();
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            if group_of(a) == group_of(b) && rng.gen_bool(params.friendship_within_group) {
                profiles.add_friendship(DeviceId(a), DeviceId(b));
            }
        }
    }
    // tag universe: one tag per group plus an equal pool of hobby tags
    let hobby_pool = params.n_groups.max(2);
    let want = (params.interests_per_device as usize).min(1 + hobby_pool as usize);
    for &d in &members {
        let mut tags = BTreeSet::new();
        tags.insert(format!("group{}", group_of(d)));
        while tags.len() < want {
            tags.insert(format!("hobby{}", rng.gen_range(0..hobby_pool)));
        }
        profiles.interests.insert(DeviceId(d), tags);
    }
    Ok((trace, profiles))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_contacts_sorts_and_registers_externals() {
        let devices = "device_id,class\n1,internal\n2,internal\n";
        let contacts = "time_s,scanner_id,seen_id\n30,2,9\n10,1,9\n20,1,2\n";
        let trace = parse_contacts(contacts, devices, 10).unwrap();
        assert_eq!(trace.events().len(), 3);
        assert!(trace.events().windows(2).all(|w| w[0].time_s <= w[1].time_s));
        assert!(trace.registry().external().contains(&DeviceId(9)));
    }

    #[test]
    fn parse_contacts_rejects_external_scanner_with_line() {
        let devices = "device_id,class\n1,internal\n9,external\n";
        let contacts = "time_s,scanner_id,seen_id\n10,1,9\n20,9,1\n";
        match parse_contacts(contacts, devices, 10) {
            Err(Error::Schema { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn parse_contacts_reports_malformed_line() {
        let devices = "device_id,class\n1,internal\n";
        let contacts = "time_s,scanner_id,seen_id\n10,1,9\nnonsense\n";
        match parse_contacts(contacts, devices, 10) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_contacts_sigcomm_shaped_population() {
        let mut devices = String::from("device_id,class\n");
        for i in 0..76 {
            devices.push_str(&format!("{i},internal\n"));
        }
        let contacts = "time_s,scanner_id,seen_id\n0,0,75\n";
        let trace = parse_contacts(contacts, &devices, 120).unwrap();
        assert_eq!(trace.registry().internal().len(), 76);
    }

    #[test]
    fn parse_profiles_dedups_unordered_pairs() {
        let devices = "device_id,class\n1,internal\n2,internal\n";
        let reg = parse_devices(devices).unwrap();
        let friends = "device_id,friend_id\n1,2\n2,1\n";
        let load = parse_profiles(friends, "device_id,interest\n", &reg).unwrap();
        assert_eq!(load.profiles.friendships.len(), 1);
        assert_eq!(load.dropped_rows, 0);
    }

    #[test]
    fn parse_profiles_collects_interests() {
        let devices = "device_id,class\n1,internal\n";
        let reg = parse_devices(devices).unwrap();
        let interests = "device_id,interest\n1,networking\n1,systems\n";
        let load = parse_profiles("device_id,friend_id\n", interests, &reg).unwrap();
        assert_eq!(load.profiles.interests[&DeviceId(1)].len(), 2);
    }

    #[test]
    fn parse_profiles_drops_non_internal_rows() {
        let devices = "device_id,class\n1,internal\n2,internal\n9,external\n";
        let reg = parse_devices(devices).unwrap();
        let friends = "device_id,friend_id\n1,2\n1,9\n";
        let load = parse_profiles(friends, "device_id,interest\n", &reg).unwrap();
        assert_eq!(load.profiles.friendships.len(), 1);
        assert_eq!(load.dropped_rows, 1);
    }

    #[test]
    fn contacts_round_trip() {
        let (trace, _) = generate_synthetic(
            &SynthParams { n_internal: 5, n_external: 3, n_groups: 2, steps: 10, ..Default::default() },
            3,
        )
        .unwrap();
        let contacts = serialize_contacts(&trace);
        let devices = serialize_devices(trace.registry());
        let back = parse_contacts(&contacts, &devices, trace.tau_s()).unwrap();
        assert_eq!(back.events(), trace.events());
        assert_eq!(serialize_contacts(&back), contacts);
    }

    #[test]
    fn synthetic_complete_detection_single_location() {
        let params = SynthParams {
            n_internal: 3,
            n_external: 1,
            n_groups: 1,
            steps: 1,
            p_detect: 1.0,
            p_move: 0.0,
            n_locations: 1,
            ..Default::default()
        };
        let (trace, _) = generate_synthetic(&params, 1).unwrap();
        // each internal scanner sees the 3 other devices
        assert_eq!(trace.events().len(), 9);
    }

    #[test]
    fn synthetic_zero_detection_is_empty() {
        let params = SynthParams { p_detect: 0.0, ..Default::default() };
        let (trace, _) = generate_synthetic(&params, 1).unwrap();
        assert!(trace.events().is_empty());
    }

    #[test]
    fn synthetic_deterministic_per_seed() {
        let params = SynthParams::default();
        let (t1, p1) = generate_synthetic(&params, 7).unwrap();
        let (t2, p2) = generate_synthetic(&params, 7).unwrap();
        assert_eq!(serialize_contacts(&t1), serialize_contacts(&t2));
        assert_eq!(serialize_profiles(&p1), serialize_profiles(&p2));
    }

    #[test]
    fn synthetic_rejects_bad_params() {
        assert!(generate_synthetic(
            &SynthParams { n_groups: 40, n_internal: 30, ..Default::default() },
            1
        )
        .is_err());
        assert!(generate_synthetic(&SynthParams { p_detect: 1.5, ..Default::default() }, 1).is_err());
    }

    #[test]
    fn synthetic_interests_start_with_group_tag() {
        let (_, profiles) = generate_synthetic(&SynthParams::default(), 5).unwrap();
        for (d, tags) in &profiles.interests {
            assert!(tags.contains(&format!("group{}", d.0 % 5)));
            assert_eq!(tags.len(), 2);
        }
    }
}
