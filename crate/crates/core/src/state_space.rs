//! Explicit reachability graphs, strongly connected components and
//! workflow-net soundness.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::marking::Marking;
use crate::net::{PetriNet, TransitionId, WorkflowNet};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateSpaceError {
    #[error("state space exceeds the cap of {0} markings")]
    CapExceeded(usize),
    #[error("brute-force enumeration supports at most 20 places, net has {0}")]
    TooManyPlaces(usize),
}

/// A firing `from --transition--> to` between vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: usize,
    pub transition: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityGraph {
    vertices: Vec<Marking>,
    edges: Vec<Edge>,
    finals: Vec<usize>,
}

impl ReachabilityGraph {
    pub fn vertices(&self) -> &[Marking] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Index of the initial marking; always 0.
    pub fn initial(&self) -> usize {
        0
    }

    /// Vertices with no enabled transition.
    pub fn finals(&self) -> &[usize] {
        &self.finals
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn index_of(&self, m: &Marking) -> Option<usize> {
        self.vertices.iter().position(|v| v == m)
    }

    /// Successor lists, duplicates and self-edges included.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            adj[e.from].push(e.to);
        }
        adj
    }

    /// Copy of the graph with one extra edge appended. Used to probe how
    /// metrics respond to structural changes of the state space.
    pub fn with_extra_edge(&self, edge: Edge) -> Self {
        let mut g = self.clone();
        assert!(edge.from < g.vertices.len() && edge.to < g.vertices.len());
        g.edges.push(edge);
        g.finals.retain(|&v| v != edge.from);
        g
    }

    /// Builds a graph directly from parts; vertex 0 is the initial marking.
    pub fn from_parts(vertices: Vec<Marking>, edges: Vec<Edge>) -> Self {
        let mut has_out = vec![false; vertices.len()];
        for e in &edges {
            has_out[e.from] = true;
        }
        let finals = (0..vertices.len()).filter(|&v| !has_out[v]).collect();
        Self {
            vertices,
            edges,
            finals,
        }
    }
}

/// Breadth-first exploration from the initial marking under the safe rule.
///
/// Vertices are numbered in discovery order, successors of a vertex in
/// canonical transition order, so raising `cap` only ever appends.
pub fn reachability_graph(net: &PetriNet, cap: usize) -> Result<ReachabilityGraph, StateSpaceError> {
    let cap = cap.max(1);
    let mut index: HashMap<Marking, usize> = HashMap::new();
    let mut vertices = vec![net.initial_marking().clone()];
    index.insert(net.initial_marking().clone(), 0);
    let mut edges = Vec::new();
    let mut finals = Vec::new();
    let mut queue = VecDeque::from([0usize]);

    while let Some(u) = queue.pop_front() {
        let m = vertices[u].clone();
        let enabled = net.enabled(&m);
        if enabled.is_empty() {
            finals.push(u);
        }
        for t in enabled {
            let next = net.fire(&m, t).expect("enabled transition fires");
            let v = match index.get(&next) {
                Some(&v) => v,
                None => {
                    if vertices.len() >= cap {
                        return Err(StateSpaceError::CapExceeded(cap));
                    }
                    let v = vertices.len();
                    index.insert(next.clone(), v);
                    vertices.push(next);
                    queue.push_back(v);
                    v
                }
            };
            edges.push(Edge {
                from: u,
                transition: t,
                to: v,
            });
        }
    }
    finals.sort_unstable();
    Ok(ReachabilityGraph {
        vertices,
        edges,
        finals,
    })
}

/// Reachable markings by naive fixpoint iteration, independent of the BFS
/// explorer. Each round fires every enabled transition of every known marking
/// until no new marking appears.
pub fn brute_force_reachable(net: &PetriNet) -> Result<HashSet<Marking>, StateSpaceError> {
    let n = net.places().len();
    if n > 20 {
        return Err(StateSpaceError::TooManyPlaces(n));
    }
    let mut known: HashSet<Marking> = HashSet::from([net.initial_marking().clone()]);
    loop {
        let mut grown = known.clone();
        for m in &known {
            for t in 0..net.transitions().len() {
                if net.is_enabled(m, t) {
                    grown.insert(net.fire(m, t).expect("enabled"));
                }
            }
        }
        if grown.len() == known.len() {
            return Ok(known);
        }
        known = grown;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccDecomposition {
    component_of: Vec<usize>,
    sizes: Vec<usize>,
}

impl SccDecomposition {
    pub fn component_of(&self, v: usize) -> usize {
        self.component_of[v]
    }

    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    /// Sizes indexed by component id.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn largest(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn vertex_count(&self) -> usize {
        self.component_of.len()
    }

    /// Members of each component, ascending.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.sizes.len()];
        for (v, &c) in self.component_of.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

pub fn scc_decompose(rg: &ReachabilityGraph) -> SccDecomposition {
    scc_of_adjacency(&rg.adjacency())
}

/// Iterative Tarjan. Components are renumbered so that ids increase with the
/// smallest vertex index they contain.
pub fn scc_of_adjacency(adj: &[Vec<usize>]) -> SccDecomposition {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut raw = vec![UNSEEN; n];
    let mut raw_count = 0;
    let mut next = 0;
    // (vertex, position in its successor list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    raw[w] = raw_count;
                    if w == v {
                        break;
                    }
                }
                raw_count += 1;
            }
        }
    }

    let mut renumber = vec![UNSEEN; raw_count];
    let mut sizes = Vec::with_capacity(raw_count);
    let mut component_of = vec![0; n];
    for v in 0..n {
        let r = raw[v];
        if renumber[r] == UNSEEN {
            renumber[r] = sizes.len();
            sizes.push(0);
        }
        component_of[v] = renumber[r];
        sizes[renumber[r]] += 1;
    }
    SccDecomposition { component_of, sizes }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoundnessReport {
    pub sound: bool,
    pub dead_transitions: Vec<TransitionId>,
    /// Vertices from which the final marking is unreachable.
    pub nonterminating_states: Vec<usize>,
    /// Vertices marking the sink together with some other place.
    pub improper_completions: Vec<usize>,
}

pub fn soundness_check(wf: &WorkflowNet, cap: usize) -> Result<SoundnessReport, StateSpaceError> {
    let rg = reachability_graph(wf.net(), cap)?;
    Ok(soundness_of_graph(wf, &rg))
}

pub fn soundness_of_graph(wf: &WorkflowNet, rg: &ReachabilityGraph) -> SoundnessReport {
    let net = wf.net();
    let fin = wf.final_marking();
    let n = rg.vertex_count();

    let mut can_finish = vec![false; n];
    if let Some(f) = rg.index_of(&fin) {
        let mut pred = vec![Vec::new(); n];
        for e in rg.edges() {
            pred[e.to].push(e.from);
        }
        can_finish[f] = true;
        let mut stack = vec![f];
        while let Some(v) = stack.pop() {
            for &u in &pred[v] {
                if !can_finish[u] {
                    can_finish[u] = true;
                    stack.push(u);
                }
            }
        }
    }
    let nonterminating_states: Vec<usize> = (0..n).filter(|&v| !can_finish[v]).collect();

    let improper_completions: Vec<usize> = rg
        .vertices()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.get(wf.sink()) && m.count() > 1)
        .map(|(v, _)| v)
        .collect();

    let mut fired = vec![false; net.transitions().len()];
    for e in rg.edges() {
        fired[e.transition] = true;
    }
    let dead_transitions: Vec<TransitionId> = fired
        .iter()
        .enumerate()
        .filter(|(_, &f)| !f)
        .map(|(t, _)| net.transitions()[t].id.clone())
        .collect();

    SoundnessReport {
        sound: dead_transitions.is_empty() && nonterminating_states.is_empty() && improper_completions.is_empty(),
        dead_transitions,
        nonterminating_states,
        improper_completions,
    }
}

/// Largest number of transitions enabled at one reachable marking that can
/// fire together: pairwise disjoint input sets, and no output place produced
/// twice or already held by a token not consumed in the step.
pub fn max_concurrency(net: &PetriNet, rg: &ReachabilityGraph) -> usize {
    rg.vertices()
        .iter()
        .map(|m| largest_concurrent_step(net, m, &net.enabled(m)))
        .max()
        .unwrap_or(0)
}

/// Transitions of `t`'s step that are independent of each other.
fn compatible(net: &PetriNet, m: &Marking, step: &[usize]) -> bool {
    let mut consumed = HashSet::new();
    for &t in step {
        for &p in net.preset(t) {
            if !consumed.insert(p) {
                return false;
            }
        }
    }
    let mut produced = HashSet::new();
    for &t in step {
        for &p in net.postset(t) {
            if net.preset(t).contains(&p) {
                continue;
            }
            if !produced.insert(p) || (m.get(p) && !consumed.contains(&p)) {
                return false;
            }
        }
    }
    true
}

fn largest_concurrent_step(net: &PetriNet, m: &Marking, enabled: &[usize]) -> usize {
    fn grow(net: &PetriNet, m: &Marking, enabled: &[usize], from: usize, step: &mut Vec<usize>) -> usize {
        let mut best = step.len();
        for i in from..enabled.len() {
            step.push(enabled[i]);
            if compatible(net, m, step) {
                best = best.max(grow(net, m, enabled, i + 1, step));
            }
            step.pop();
        }
        best
    }
    grow(net, m, enabled, 0, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::figure1_net;
    use crate::net::{validate_workflow, NetBuilder};

    #[test]
    fn figure1_graph() {
        let wf = figure1_net();
        let rg = reachability_graph(wf.net(), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(rg.vertex_count(), 6);
        assert_eq!(rg.edge_count(), 6);
        assert_eq!(rg.finals(), &[5]);
        let scc = scc_decompose(&rg);
        assert_eq!(scc.component_count(), 6);
        assert_eq!(scc.largest(), 1);
        assert_eq!(max_concurrency(wf.net(), &rg), 2);
    }

    #[test]
    fn single_place_graph() {
        let net = NetBuilder::new().place("p").mark("p").build().unwrap();
        let rg = reachability_graph(&net, 10).unwrap();
        assert_eq!((rg.vertex_count(), rg.edge_count()), (1, 0));
        assert_eq!(brute_force_reachable(&net).unwrap().len(), 1);
    }

    #[test]
    fn cap_exceeded() {
        let wf = figure1_net();
        assert_eq!(reachability_graph(wf.net(), 5), Err(StateSpaceError::CapExceeded(5)));
        assert_eq!(reachability_graph(wf.net(), 6).unwrap().vertex_count(), 6);
    }

    #[test]
    fn self_edge_component() {
        let scc = scc_of_adjacency(&[vec![0]]);
        assert_eq!(scc.sizes(), &[1]);
    }

    #[test]
    fn component_numbering_follows_smallest_vertex() {
        // 0 -> 1 <-> 2, 3 isolated, 4 -> 0
        let adj = vec![vec![1], vec![2], vec![1], vec![], vec![0]];
        let scc = scc_of_adjacency(&adj);
        assert_eq!(
            (0..5).map(|v| scc.component_of(v)).collect::<Vec<_>>(),
            vec![0, 1, 1, 2, 3]
        );
    }

    #[test]
    fn long_chain_has_no_recursion_limit() {
        let n = 200_000;
        let adj: Vec<Vec<usize>> = (0..n).map(|v| vec![(v + 1) % n]).collect();
        let scc = scc_of_adjacency(&adj);
        assert_eq!(scc.component_count(), 1);
    }

    fn wf(b: NetBuilder) -> WorkflowNet {
        validate_workflow(b.build().unwrap()).unwrap()
    }

    #[test]
    fn dead_transition_reported() {
        // t3 needs i and a together, but a only appears once i is consumed.
        let net = wf(NetBuilder::new()
            .place("i")
            .place("a")
            .place("o")
            .transition("t1")
            .transition("t2")
            .transition("t3")
            .arc("i", "t1")
            .arc("t1", "a")
            .arc("a", "t2")
            .arc("t2", "o")
            .arc("i", "t3")
            .arc("a", "t3")
            .arc("t3", "o")
            .mark("i"));
        let r = soundness_check(&net, 100).unwrap();
        assert!(!r.sound);
        assert_eq!(r.dead_transitions, vec![TransitionId("t3".into())]);
        assert!(r.nonterminating_states.is_empty());
    }

    #[test]
    fn improper_completion_reported() {
        let net = wf(NetBuilder::new()
            .place("i")
            .place("side")
            .place("o")
            .transition("split")
            .transition("drain")
            .arc("i", "split")
            .arc("split", "o")
            .arc("split", "side")
            .arc("side", "drain")
            .arc("drain", "o")
            .mark("i"));
        let r = soundness_check(&net, 100).unwrap();
        assert!(!r.sound);
        assert!(!r.improper_completions.is_empty());
    }
}
