//! Round-0 assignment of the sensing task, before any contact graph exists:
//! uniform random, friendship degree, or interest-group walk. Strategies are
//! looked up by name like the cover strategies.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{DeviceId, SocialProfiles};

fn check_n(n: usize, v_in: &BTreeSet<DeviceId>) -> Result<()> {
    if n == 0 || n > v_in.len() {
        return Err(Error::InvalidConfig(format!(
            "bootstrap budget {n} outside [1, {}]",
            v_in.len()
        )));
    }
    Ok(())
}

fn random_fill(
    selected: &mut BTreeSet<DeviceId>,
    v_in: &BTreeSet<DeviceId>,
    n: usize,
    rng: &mut ChaCha8Rng,
) {
    let mut pool: Vec<DeviceId> = v_in.iter().filter(|d| !selected.contains(d)).copied().collect();
    while selected.len() < n && !pool.is_empty() {
        let i = rng.gen_range(0..pool.len());
        selected.insert(pool.swap_remove(i));
    }
}

/// Uniform sample of n internal devices, without replacement.
pub fn bootstrap_random(
    v_in: &BTreeSet<DeviceId>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeSet<DeviceId>> {
    check_n(n, v_in)?;
    let mut selected = BTreeSet::new();
    random_fill(&mut selected, v_in, n, rng);
    Ok(selected)
}

/// Top-n internal devices by degree in the friendship graph, ties to the
/// smallest id. Devices without friendship edges rank with degree 0.
pub fn bootstrap_friendship(
    profiles: &SocialProfiles,
    v_in: &BTreeSet<DeviceId>,
    n: usize,
) -> Result<BTreeSet<DeviceId>> {
    check_n(n, v_in)?;
    let mut degree: BTreeMap<DeviceId, usize> = v_in.iter().map(|&d| (d, 0)).collect();
    for &(a, b) in &profiles.friendships {
        if v_in.contains(&a) && v_in.contains(&b) {
            *degree.get_mut(&a).unwrap() += 1;
            *degree.get_mut(&b).unwrap() += 1;
        }
    }
    let mut ranked: Vec<(usize, DeviceId)> = degree.into_iter().map(|(d, c)| (c, d)).collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(ranked.into_iter().take(n).map(|(_, d)| d).collect())
}

/// Walk interest groups by descending size (ties by tag order), taking from
/// each the unselected member with the most tags (ties to the smallest id).
/// A second pass over the group order covers small group counts; any slots
/// still open are filled uniformly at random.
pub fn bootstrap_interest(
    profiles: &SocialProfiles,
    v_in: &BTreeSet<DeviceId>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeSet<DeviceId>> {
    check_n(n, v_in)?;
    let mut groups: BTreeMap<&str, BTreeSet<DeviceId>> = BTreeMap::new();
    for (&d, tags) in &profiles.interests {
        if !v_in.contains(&d) {
            continue;
        }
        for t in tags {
            groups.entry(t).or_default().insert(d);
        }
    }
    let mut order: Vec<(&str, &BTreeSet<DeviceId>)> =
        groups.iter().map(|(&t, m)| (t, m)).collect();
    order.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));

    let tag_count =
        |d: DeviceId| profiles.interests.get(&d).map_or(0, |t| t.len());

    let mut selected = BTreeSet::new();
    for _pass in 0..2 {
        for (_, members) in &order {
            if selected.len() >= n {
                break;
            }
            let pick = members
                .iter()
                .filter(|d| !selected.contains(*d))
                .map(|&d| (tag_count(d), d))
                .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
            if let Some((_, d)) = pick {
                selected.insert(d);
            }
        }
    }
    random_fill(&mut selected, v_in, n, rng);
    Ok(selected)
}

/// A bootstrap policy, selected by name at runtime.
pub trait BootstrapStrategy {
    fn name(&self) -> &'static str;
    fn select(
        &self,
        profiles: &SocialProfiles,
        v_in: &BTreeSet<DeviceId>,
        n: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<BTreeSet<DeviceId>>;
}

struct RandomBootstrap;
struct FriendshipBootstrap;
struct InterestBootstrap;

impl BootstrapStrategy for RandomBootstrap {
    fn name(&self) -> &'static str {
        "random"
    }
    fn select(
        &self,
        _profiles: &SocialProfiles,
        v_in: &BTreeSet<DeviceId>,
        n: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<BTreeSet<DeviceId>> {
        bootstrap_random(v_in, n, rng)
    }
}

impl BootstrapStrategy for FriendshipBootstrap {
    fn name(&self) -> &'static str {
        "friendship"
    }
    fn select(
        &self,
        profiles: &SocialProfiles,
        v_in: &BTreeSet<DeviceId>,
        n: usize,
        _rng: &mut ChaCha8Rng,
    ) -> Result<BTreeSet<DeviceId>> {
        bootstrap_friendship(profiles, v_in, n)
    }
}

impl BootstrapStrategy for InterestBootstrap {
    fn name(&self) -> &'static str {
        "interest"
    }
    fn select(
        &self,
        profiles: &SocialProfiles,
        v_in: &BTreeSet<DeviceId>,
        n: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<BTreeSet<DeviceId>> {
        bootstrap_interest(profiles, v_in, n, rng)
    }
}

pub fn bootstrap_strategy(name: &str) -> Option<Box<dyn BootstrapStrategy>> {
    match name {
        "random" => Some(Box::new(RandomBootstrap)),
        "friendship" => Some(Box::new(FriendshipBootstrap)),
        "interest" => Some(Box::new(InterestBootstrap)),
        _ => None,
    }
}

pub const BOOTSTRAP_STRATEGIES: &[&str] = &["random", "friendship", "interest"];
