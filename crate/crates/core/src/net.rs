//! Net data model, 1-safe firing semantics and workflow-net validation.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::marking::Marking;

/// Identifier of a place. Places and transitions share one namespace per net.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PlaceId(pub String);

/// Identifier of a transition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TransitionId(pub String);

impl From<&str> for PlaceId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl From<&str> for TransitionId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl fmt::Display for PlaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Either endpoint kind of an arc, by canonical index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Place(usize),
    Transition(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub id: PlaceId,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: TransitionId,
    pub label: Option<String>,
}

/// Arc between nodes of different kinds. Weight is always 1 once validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Arc {
    pub source: NodeRef,
    pub target: NodeRef,
    pub weight: u32,
}

/// Arc as supplied by callers, endpoints named by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcSpec {
    pub source: String,
    pub target: String,
    pub weight: u32,
}

impl ArcSpec {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            weight: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("arc {0} -> {1} references an undeclared node")]
    DanglingArc(String, String),
    #[error("arc {0} -> {1} connects two nodes of the same kind")]
    NonBipartiteArc(String, String),
    #[error("arc {0} -> {1} has weight {2}; only unit weights are supported")]
    NonUnitWeight(String, String, u32),
    #[error("arc {0} -> {1} is declared twice")]
    DuplicateArc(String, String),
    #[error("initial marking names `{0}`, which is not a place of the net")]
    MarkingDomainMismatch(String),
    #[error("initial marking puts {1} tokens on `{0}`; places hold at most one")]
    UnsafeMarking(String, u32),
    #[error("transition `{0}` is not enabled")]
    NotEnabled(TransitionId),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("net has no elements")]
    EmptyNet,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkflowError {
    #[error("no place without incoming arcs")]
    NoSource,
    #[error("several places without incoming arcs: {0:?}")]
    MultipleSources(Vec<PlaceId>),
    #[error("no place without outgoing arcs")]
    NoSink,
    #[error("several places without outgoing arcs: {0:?}")]
    MultipleSinks(Vec<PlaceId>),
    #[error("node `{0}` is not on any path from source to sink")]
    NodeOffPath(String),
    #[error("initial marking must hold exactly one token, on the source place")]
    BadInitialMarking,
}

/// Immutable, validated Petri net with unit arcs.
///
/// Places, transitions and arcs keep insertion order, which is the canonical
/// order used by every analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    arcs: Vec<Arc>,
    initial: Marking,
    pre: Vec<Vec<usize>>,
    post: Vec<Vec<usize>>,
}

impl PetriNet {
    /// Validates and builds a net. `initial` lists `(place id, tokens)`;
    /// unlisted places are empty.
    pub fn new(
        places: Vec<Place>,
        transitions: Vec<Transition>,
        arcs: Vec<ArcSpec>,
        initial: &[(String, u32)],
    ) -> Result<Self, NetError> {
        let mut index: HashMap<&str, NodeRef> = HashMap::new();
        for (i, p) in places.iter().enumerate() {
            if index.insert(p.id.0.as_str(), NodeRef::Place(i)).is_some() {
                return Err(NetError::DuplicateId(p.id.0.clone()));
            }
        }
        for (i, t) in transitions.iter().enumerate() {
            if index.insert(t.id.0.as_str(), NodeRef::Transition(i)).is_some() {
                return Err(NetError::DuplicateId(t.id.0.clone()));
            }
        }

        let mut seen = HashSet::new();
        let mut resolved = Vec::with_capacity(arcs.len());
        let mut pre = vec![Vec::new(); transitions.len()];
        let mut post = vec![Vec::new(); transitions.len()];
        for a in &arcs {
            let dangling = || NetError::DanglingArc(a.source.clone(), a.target.clone());
            let s = *index.get(a.source.as_str()).ok_or_else(dangling)?;
            let t = *index.get(a.target.as_str()).ok_or_else(dangling)?;
            match (s, t) {
                (NodeRef::Place(p), NodeRef::Transition(tr)) => pre[tr].push(p),
                (NodeRef::Transition(tr), NodeRef::Place(p)) => post[tr].push(p),
                _ => return Err(NetError::NonBipartiteArc(a.source.clone(), a.target.clone())),
            }
            if a.weight != 1 {
                return Err(NetError::NonUnitWeight(a.source.clone(), a.target.clone(), a.weight));
            }
            if !seen.insert((s, t)) {
                return Err(NetError::DuplicateArc(a.source.clone(), a.target.clone()));
            }
            resolved.push(Arc {
                source: s,
                target: t,
                weight: 1,
            });
        }

        let mut m = Marking::empty(places.len());
        for (id, count) in initial {
            let p = match index.get(id.as_str()) {
                Some(NodeRef::Place(p)) => *p,
                _ => return Err(NetError::MarkingDomainMismatch(id.clone())),
            };
            match count {
                0 => {}
                1 => m.set(p, true),
                n => return Err(NetError::UnsafeMarking(id.clone(), *n)),
            }
        }

        let places = places
            .into_iter()
            .map(|p| Place {
                label: p.label.filter(|l| !l.is_empty()),
                ..p
            })
            .collect();
        let transitions = transitions
            .into_iter()
            .map(|t| Transition {
                label: t.label.filter(|l| !l.is_empty()),
                ..t
            })
            .collect();

        Ok(Self {
            places,
            transitions,
            arcs: resolved,
            initial: m,
            pre,
            post,
        })
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    /// Input places of transition `t`, in arc order.
    pub fn preset(&self, t: usize) -> &[usize] {
        &self.pre[t]
    }

    /// Output places of transition `t`, in arc order.
    pub fn postset(&self, t: usize) -> &[usize] {
        &self.post[t]
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p.id.0 == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id.0 == id)
    }

    /// First transition named `label`; unlabeled transitions go by id.
    pub fn transition_by_label(&self, label: &str) -> Option<usize> {
        self.transitions
            .iter()
            .position(|t| t.label.as_deref().unwrap_or(&t.id.0) == label)
    }

    /// Label if present, id otherwise.
    pub fn transition_name(&self, t: usize) -> &str {
        let tr = &self.transitions[t];
        tr.label.as_deref().unwrap_or(&tr.id.0)
    }

    pub fn node_id(&self, n: NodeRef) -> &str {
        match n {
            NodeRef::Place(p) => &self.places[p].id.0,
            NodeRef::Transition(t) => &self.transitions[t].id.0,
        }
    }

    /// Whether `t` may fire at `m` under the safe rule: every input place is
    /// marked and every output place that is not also an input is empty.
    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        self.pre[t].iter().all(|&p| m.get(p)) && self.post[t].iter().all(|&p| !m.get(p) || self.pre[t].contains(&p))
    }

    /// Enabled transitions at `m` in canonical order.
    pub fn enabled(&self, m: &Marking) -> Vec<usize> {
        (0..self.transitions.len()).filter(|&t| self.is_enabled(m, t)).collect()
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking, NetError> {
        if !self.is_enabled(m, t) {
            return Err(NetError::NotEnabled(self.transitions[t].id.clone()));
        }
        let mut next = m.clone();
        for &p in &self.pre[t] {
            next.set(p, false);
        }
        for &p in &self.post[t] {
            next.set(p, true);
        }
        Ok(next)
    }

    pub fn fire_id(&self, m: &Marking, id: &str) -> Result<Marking, NetError> {
        let t = self
            .transition_index(id)
            .ok_or_else(|| NetError::UnknownTransition(id.to_string()))?;
        self.fire(m, t)
    }

    /// Marking with one token on each listed place.
    pub fn marking_of(&self, ids: &[&str]) -> Option<Marking> {
        let mut m = Marking::empty(self.places.len());
        for id in ids {
            m.set(self.place_index(id)?, true);
        }
        Some(m)
    }

    /// Transitions whose input and output place sets coincide.
    pub fn self_loops(&self) -> Vec<usize> {
        (0..self.transitions.len())
            .filter(|&t| {
                let a: HashSet<_> = self.pre[t].iter().collect();
                let b: HashSet<_> = self.post[t].iter().collect();
                !a.is_empty() && a == b
            })
            .collect()
    }

    pub(crate) fn place_in_degree(&self) -> Vec<usize> {
        let mut d = vec![0; self.places.len()];
        for post in &self.post {
            for &p in post {
                d[p] += 1;
            }
        }
        d
    }

    pub(crate) fn place_out_degree(&self) -> Vec<usize> {
        let mut d = vec![0; self.places.len()];
        for pre in &self.pre {
            for &p in pre {
                d[p] += 1;
            }
        }
        d
    }

    /// Successor lists over a joint node numbering: places `0..P`, then
    /// transitions `P..P+T`.
    pub(crate) fn node_successors(&self) -> Vec<Vec<usize>> {
        let np = self.places.len();
        let mut succ = vec![Vec::new(); np + self.transitions.len()];
        for a in &self.arcs {
            let (s, t) = (self.joint(a.source), self.joint(a.target));
            succ[s].push(t);
        }
        succ
    }

    pub(crate) fn joint(&self, n: NodeRef) -> usize {
        match n {
            NodeRef::Place(p) => p,
            NodeRef::Transition(t) => self.places.len() + t,
        }
    }

    pub(crate) fn joint_id(&self, j: usize) -> &str {
        let np = self.places.len();
        if j < np {
            &self.places[j].id.0
        } else {
            &self.transitions[j - np].id.0
        }
    }
}

/// Element counts of a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ElementCensus {
    pub places: usize,
    pub transitions: usize,
    pub arcs: usize,
}

impl ElementCensus {
    pub fn total(&self) -> usize {
        self.places + self.transitions + self.arcs
    }

    /// Shares of places, transitions and arcs among all elements.
    pub fn proportions(&self) -> (f64, f64, f64) {
        let n = self.total() as f64;
        (
            self.places as f64 / n,
            self.transitions as f64 / n,
            self.arcs as f64 / n,
        )
    }
}

pub fn census(net: &PetriNet) -> Result<ElementCensus, NetError> {
    let c = ElementCensus {
        places: net.places().len(),
        transitions: net.transitions().len(),
        arcs: net.arcs().len(),
    };
    if c.total() == 0 {
        return Err(NetError::EmptyNet);
    }
    Ok(c)
}

/// A net known to be a workflow net: unique source and sink, every node on a
/// source-to-sink path, one token on the source initially.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowNet {
    net: PetriNet,
    source: usize,
    sink: usize,
}

impl WorkflowNet {
    pub fn net(&self) -> &PetriNet {
        &self.net
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn source_id(&self) -> &PlaceId {
        &self.net.places()[self.source].id
    }

    pub fn sink_id(&self) -> &PlaceId {
        &self.net.places()[self.sink].id
    }

    /// The marking with a single token on the sink.
    pub fn final_marking(&self) -> Marking {
        let mut m = Marking::empty(self.net.places().len());
        m.set(self.sink, true);
        m
    }

    pub fn into_net(self) -> PetriNet {
        self.net
    }
}

pub fn validate_workflow(net: PetriNet) -> Result<WorkflowNet, WorkflowError> {
    let indeg = net.place_in_degree();
    let outdeg = net.place_out_degree();
    let ids = |v: Vec<usize>| -> Vec<PlaceId> { v.into_iter().map(|p| net.places()[p].id.clone()).collect() };

    let sources: Vec<usize> = (0..net.places().len()).filter(|&p| indeg[p] == 0).collect();
    let source = match sources.len() {
        0 => return Err(WorkflowError::NoSource),
        1 => sources[0],
        _ => return Err(WorkflowError::MultipleSources(ids(sources))),
    };
    let sinks: Vec<usize> = (0..net.places().len()).filter(|&p| outdeg[p] == 0).collect();
    let sink = match sinks.len() {
        0 => return Err(WorkflowError::NoSink),
        1 => sinks[0],
        _ => return Err(WorkflowError::MultipleSinks(ids(sinks))),
    };

    // Short-circuit sink -> source and require strong connectivity, which is
    // equivalent to every node lying on a source-to-sink path.
    let n = net.places().len() + net.transitions().len();
    let mut succ = net.node_successors();
    let mut pred = vec![Vec::new(); n];
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            pred[v].push(u);
        }
    }
    succ[sink].push(source);
    pred[source].push(sink);
    let fwd = reach(&succ, source);
    let bwd = reach(&pred, source);
    if let Some(j) = (0..n).find(|&j| !fwd[j] || !bwd[j]) {
        return Err(WorkflowError::NodeOffPath(net.joint_id(j).to_string()));
    }

    let m = net.initial_marking();
    if m.count() != 1 || !m.get(source) {
        return Err(WorkflowError::BadInitialMarking);
    }
    Ok(WorkflowNet { net, source, sink })
}

fn reach(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Incremental construction by id, for fixtures and tests.
#[derive(Debug, Default, Clone)]
pub struct NetBuilder {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    arcs: Vec<ArcSpec>,
    marked: Vec<(String, u32)>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(mut self, id: &str) -> Self {
        self.places.push(Place {
            id: PlaceId(id.into()),
            label: None,
        });
        self
    }

    pub fn labeled_place(mut self, id: &str, label: &str) -> Self {
        self.places.push(Place {
            id: PlaceId(id.into()),
            label: Some(label.into()),
        });
        self
    }

    pub fn transition(mut self, id: &str) -> Self {
        self.transitions.push(Transition {
            id: TransitionId(id.into()),
            label: None,
        });
        self
    }

    pub fn labeled_transition(mut self, id: &str, label: &str) -> Self {
        self.transitions.push(Transition {
            id: TransitionId(id.into()),
            label: Some(label.into()),
        });
        self
    }

    pub fn arc(mut self, source: &str, target: &str) -> Self {
        self.arcs.push(ArcSpec::new(source, target));
        self
    }

    pub fn weighted_arc(mut self, source: &str, target: &str, weight: u32) -> Self {
        self.arcs.push(ArcSpec {
            weight,
            ..ArcSpec::new(source, target)
        });
        self
    }

    pub fn mark(mut self, place: &str) -> Self {
        self.marked.push((place.into(), 1));
        self
    }

    pub fn build(self) -> Result<PetriNet, NetError> {
        PetriNet::new(self.places, self.transitions, self.arcs, &self.marked)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::figure1_net;

    fn fig1() -> PetriNet {
        figure1_net().into_net()
    }

    #[test]
    fn figure1_enabling_and_firing() {
        let net = fig1();
        let m0 = net.initial_marking().clone();
        let t = |id: &str| net.transition_index(id).unwrap();
        assert_eq!(net.enabled(&m0), vec![t("t1")]);

        let m1 = net.fire(&m0, t("t1")).unwrap();
        assert_eq!(m1, net.marking_of(&["p2", "p3"]).unwrap());
        assert_eq!(net.enabled(&m1), vec![t("t2"), t("t3")]);

        let m45 = net.marking_of(&["p4", "p5"]).unwrap();
        assert_eq!(net.fire(&m45, t("t4")).unwrap(), net.marking_of(&["p6"]).unwrap());
        assert!(matches!(net.fire(&m0, t("t4")), Err(NetError::NotEnabled(_))));
        assert!(net.enabled(&Marking::empty(6)).is_empty());
    }

    #[test]
    fn concurrent_transitions_commute() {
        let net = fig1();
        let m1 = net.fire_id(net.initial_marking(), "t1").unwrap();
        let a = net.fire_id(&net.fire_id(&m1, "t2").unwrap(), "t3").unwrap();
        let b = net.fire_id(&net.fire_id(&m1, "t3").unwrap(), "t2").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, net.marking_of(&["p4", "p5"]).unwrap());
    }

    #[test]
    fn safe_rule_disables_second_token() {
        let net = NetBuilder::new()
            .place("a")
            .place("b")
            .transition("t")
            .arc("a", "t")
            .arc("t", "b")
            .build()
            .unwrap();
        let both = net.marking_of(&["a", "b"]).unwrap();
        assert!(net.enabled(&both).is_empty());
    }

    #[test]
    fn self_loop_keeps_token() {
        let net = NetBuilder::new()
            .place("p")
            .transition("t")
            .arc("p", "t")
            .arc("t", "p")
            .mark("p")
            .build()
            .unwrap();
        let m = net.initial_marking();
        assert_eq!(net.enabled(m), vec![0]);
        assert_eq!(&net.fire(m, 0).unwrap(), m);
        assert_eq!(net.self_loops(), vec![0]);
    }

    #[test]
    fn construction_errors() {
        let base = || NetBuilder::new().place("p1").place("p2").transition("t");
        assert_eq!(
            base().arc("p1", "p2").build(),
            Err(NetError::NonBipartiteArc("p1".into(), "p2".into()))
        );
        assert_eq!(
            base().weighted_arc("p1", "t", 2).build(),
            Err(NetError::NonUnitWeight("p1".into(), "t".into(), 2))
        );
        assert_eq!(
            base().arc("p1", "x").build(),
            Err(NetError::DanglingArc("p1".into(), "x".into()))
        );
        assert_eq!(base().transition("p1").build(), Err(NetError::DuplicateId("p1".into())));
        assert_eq!(
            base().arc("p1", "t").arc("p1", "t").build(),
            Err(NetError::DuplicateArc("p1".into(), "t".into()))
        );
        assert_eq!(
            base().mark("q").build(),
            Err(NetError::MarkingDomainMismatch("q".into()))
        );
        let two = PetriNet::new(
            vec![Place {
                id: PlaceId("p".into()),
                label: None,
            }],
            vec![],
            vec![],
            &[("p".into(), 2)],
        );
        assert_eq!(two, Err(NetError::UnsafeMarking("p".into(), 2)));
    }

    #[test]
    fn census_counts() {
        let c = census(&fig1()).unwrap();
        assert_eq!((c.places, c.transitions, c.arcs), (6, 4, 10));
        let (p, t, a) = c.proportions();
        assert!((p - 0.30).abs() < 1e-12 && (t - 0.20).abs() < 1e-12 && (a - 0.50).abs() < 1e-12);

        let single = NetBuilder::new().place("p").build().unwrap();
        let c = census(&single).unwrap();
        assert_eq!((c.places, c.transitions, c.arcs), (1, 0, 0));
        assert_eq!(census(&NetBuilder::new().build().unwrap()), Err(NetError::EmptyNet));
    }

    #[test]
    fn workflow_validation() {
        let wf = figure1_net();
        assert_eq!(wf.source_id().0, "p1");
        assert_eq!(wf.sink_id().0, "p6");

        let two_isolated = NetBuilder::new().place("a").place("b").build().unwrap();
        assert!(matches!(
            validate_workflow(two_isolated),
            Err(WorkflowError::MultipleSources(_))
        ));

        let isolated_t = NetBuilder::new()
            .place("i")
            .place("o")
            .transition("t")
            .transition("lonely")
            .arc("i", "t")
            .arc("t", "o")
            .mark("i")
            .build()
            .unwrap();
        assert_eq!(
            validate_workflow(isolated_t),
            Err(WorkflowError::NodeOffPath("lonely".into()))
        );

        let two_sinks = NetBuilder::new()
            .place("i")
            .place("o1")
            .place("o2")
            .transition("t")
            .arc("i", "t")
            .arc("t", "o1")
            .arc("t", "o2")
            .mark("i")
            .build()
            .unwrap();
        assert!(matches!(
            validate_workflow(two_sinks),
            Err(WorkflowError::MultipleSinks(_))
        ));

        let unmarked = NetBuilder::new()
            .place("i")
            .place("o")
            .transition("t")
            .arc("i", "t")
            .arc("t", "o")
            .build()
            .unwrap();
        assert_eq!(validate_workflow(unmarked), Err(WorkflowError::BadInitialMarking));
    }
}
