use std::collections::{BTreeMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::net::{census, ElementCensus, NetError, PetriNet, WorkflowNet};
use crate::state_space::{
    reachability_graph, scc_decompose, soundness_of_graph, ReachabilityGraph, SccDecomposition, StateSpaceError,
};
use crate::structure::{fold_to_completion, ComponentKind, StructureError};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("density needs at least one place and one transition")]
    DegenerateNet,
    #[error("SCC decomposition covers {scc} vertices but the graph has {graph}")]
    MismatchedInputs { scc: usize, graph: usize },
    #[error("no transition labeled {0:?}")]
    UnknownLabel(String),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// `|A| / (2 |P| |T|)`, exact.
pub fn density(net: &PetriNet) -> Result<Rational, MetricsError> {
    density_of_counts(net.places().len(), net.transitions().len(), net.arcs().len())
}

pub fn density_of_counts(places: usize, transitions: usize, arcs: usize) -> Result<Rational, MetricsError> {
    if places == 0 || transitions == 0 {
        return Err(MetricsError::DegenerateNet);
    }
    Ok(Rational::new(arcs as i128, 2 * places as i128 * transitions as i128))
}

/// Rounds to thousandths, halves away from zero.
pub fn round3_thousandths(r: &Rational) -> i128 {
    let (n, d) = (*r.numer(), *r.denom());
    let q = (n.abs() * 2000 + d) / (2 * d);
    if n < 0 {
        -q
    } else {
        q
    }
}

/// Three-decimal presentation, e.g. `0.208`.
pub fn round3(r: &Rational) -> String {
    let q = round3_thousandths(r);
    let sign = if q < 0 { "-" } else { "" };
    format!("{sign}{}.{:03}", q.abs() / 1000, q.abs() % 1000)
}

/// `|E| - |V| + |SCC|` of a reachability graph.
pub fn extended_cyclomatic(rg: &ReachabilityGraph, scc: &SccDecomposition) -> Result<i64, MetricsError> {
    if scc.vertex_count() != rg.vertex_count() {
        return Err(MetricsError::MismatchedInputs {
            scc: scc.vertex_count(),
            graph: rg.vertex_count(),
        });
    }
    Ok(rg.edge_count() as i64 - rg.vertex_count() as i64 + scc.component_count() as i64)
}

/// Splits the arcs around the transition labeled `label`: an arc is after the
/// fire if its source node can be reached from that transition (the
/// transition itself included), before otherwise.
pub fn arcs_around(net: &PetriNet, label: &str) -> Result<(usize, usize), MetricsError> {
    let t = net
        .transition_by_label(label)
        .ok_or_else(|| MetricsError::UnknownLabel(label.to_string()))?;
    let succ = net.node_successors();
    let start = net.places().len() + t;
    let mut seen = HashSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &v in &succ[u] {
            if seen.insert(v) {
                stack.push(v);
            }
        }
    }
    let after = net
        .arcs()
        .iter()
        .filter(|a| seen.contains(&net.joint(a.source)))
        .count();
    Ok((net.arcs().len() - after, after))
}

/// Reachable states that do not require firing the transition labeled `label`.
pub fn states_before(net: &PetriNet, rg: &ReachabilityGraph, label: &str) -> Result<usize, MetricsError> {
    let t = net
        .transition_by_label(label)
        .ok_or_else(|| MetricsError::UnknownLabel(label.to_string()))?;
    let mut adj = vec![Vec::new(); rg.vertex_count()];
    for e in rg.edges().iter().filter(|e| e.transition != t) {
        adj[e.from].push(e.to);
    }
    let mut seen = HashSet::from([rg.initial()]);
    let mut stack = vec![rg.initial()];
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if seen.insert(v) {
                stack.push(v);
            }
        }
    }
    Ok(seen.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StateSpaceSummary {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub scc_count: usize,
    pub largest_scc: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricsReport {
    pub census: ElementCensus,
    #[serde(serialize_with = "crate::serialize_rational")]
    pub density: Rational,
    pub density_rounded: String,
    pub extended_cyclomatic: i64,
    /// Absent for unsound nets, which cannot be folded.
    #[serde(serialize_with = "serialize_opt_rational")]
    pub structuredness: Option<Rational>,
    pub component_census: BTreeMap<ComponentKind, usize>,
    pub state_space: StateSpaceSummary,
}

fn serialize_opt_rational<S: serde::Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => crate::serialize_rational(r, s),
        None => s.serialize_none(),
    }
}

/// Every metric for one net. Unsound nets get a report without a
/// structuredness value; use [`full_report_strict`] to reject them.
pub fn full_report(wf: &WorkflowNet, cap: usize) -> Result<MetricsReport, MetricsError> {
    let net = wf.net();
    let density = density(net)?;
    let rg = reachability_graph(net, cap)?;
    let scc = scc_decompose(&rg);
    let sound = soundness_of_graph(wf, &rg).sound;
    let (structuredness, component_census) = if sound {
        let trace = fold_to_completion(wf)?;
        (Some(trace.weight), trace.kind_counts())
    } else {
        (None, ComponentKind::ALL.iter().map(|&k| (k, 0)).collect())
    };
    Ok(MetricsReport {
        census: census(net)?,
        density_rounded: round3(&density),
        density,
        extended_cyclomatic: extended_cyclomatic(&rg, &scc)?,
        structuredness,
        component_census,
        state_space: StateSpaceSummary {
            vertex_count: rg.vertex_count(),
            edge_count: rg.edge_count(),
            scc_count: scc.component_count(),
            largest_scc: scc.largest(),
        },
    })
}

pub fn full_report_strict(wf: &WorkflowNet, cap: usize) -> Result<MetricsReport, MetricsError> {
    let report = full_report(wf, cap)?;
    if report.structuredness.is_none() {
        return Err(StructureError::NotSound.into());
    }
    Ok(report)
}
