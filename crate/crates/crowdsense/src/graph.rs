//! Per-interval contact graphs and the sensing coverage ratio.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{ContactTrace, DeviceId};

/// Undirected contact graph of one sensing interval [start_s, end_s).
/// An unordered device pair appears at most once regardless of how many
/// scans connected it during the interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalGraph {
    pub start_s: i64,
    pub end_s: i64,
    pub nodes: BTreeSet<DeviceId>,
    pub edges: BTreeSet<(DeviceId, DeviceId)>,
    pub adjacency: BTreeMap<DeviceId, BTreeSet<DeviceId>>,
}

impl IntervalGraph {
    fn from_edges(
        start_s: i64,
        end_s: i64,
        mut nodes: BTreeSet<DeviceId>,
        edges: BTreeSet<(DeviceId, DeviceId)>,
    ) -> Self {
        let mut adjacency: BTreeMap<DeviceId, BTreeSet<DeviceId>> = BTreeMap::new();
        for &(a, b) in &edges {
            nodes.insert(a);
            nodes.insert(b);
            adjacency.entry(a).or_default().insert(b);
            adjacency.entry(b).or_default().insert(a);
        }
        Self { start_s, end_s, nodes, edges, adjacency }
    }

    pub fn neighbors(&self, d: DeviceId) -> Option<&BTreeSet<DeviceId>> {
        self.adjacency.get(&d)
    }

    pub fn degree(&self, d: DeviceId) -> usize {
        self.adjacency.get(&d).map_or(0, |s| s.len())
    }
}

fn edge_key(a: DeviceId, b: DeviceId) -> (DeviceId, DeviceId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Contact graph visible to the server: only scans performed by members of
/// `sensing_set` count. Sensing nodes are part of the graph even when
/// isolated.
pub fn observed_graph(
    trace: &ContactTrace,
    start_s: i64,
    ts_seconds: i64,
    sensing_set: &BTreeSet<DeviceId>,
) -> IntervalGraph {
    let mut edges = BTreeSet::new();
    for e in trace.slice(start_s, ts_seconds) {
        if sensing_set.contains(&e.scanner) {
            edges.insert(edge_key(e.scanner, e.seen));
        }
    }
    IntervalGraph::from_edges(start_s, start_s + ts_seconds, sensing_set.clone(), edges)
}

/// The graph that would be observed if every internal device sensed.
pub fn ground_truth_graph(trace: &ContactTrace, start_s: i64, ts_seconds: i64) -> IntervalGraph {
    observed_graph(trace, start_s, ts_seconds, trace.registry().internal())
}

/// |observed edges| / |truth edges|, defined as 1.0 for an empty-truth
/// interval. Errors when the observed edges are not a subset of truth.
pub fn coverage_ratio(observed: &IntervalGraph, truth: &IntervalGraph) -> Result<f64> {
    if !observed.edges.is_subset(&truth.edges) {
        return Err(Error::Internal(
            "observed edges not a subset of ground truth".into(),
        ));
    }
    if truth.edges.is_empty() {
        return Ok(1.0);
    }
    Ok(observed.edges.len() as f64 / truth.edges.len() as f64)
}
