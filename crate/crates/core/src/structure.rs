//! Structuredness: repeatedly match a component, fold it into one weighted
//! macro transition, and stop once a single transition joins source and sink.
//!
//! Components are single-entry/single-exit fragments bounded by places. The
//! kinds are tried in priority order:
//!
//! | kind            | shape                                                   | weight                   |
//! |-----------------|---------------------------------------------------------|--------------------------|
//! | Sequence        | maximal chain `p -> t -> p -> t ..`, two or more steps  | `1 * sum`                |
//! | Choice          | two or more transitions from one place to one place     | `2 * sum`                |
//! | While           | self-loops on one place, or a forward/backward pair     | `2 * sum`                |
//! | MarkedGraph     | region whose inner places have one producer/consumer    | `2 * diff * sum`         |
//! | StateMachine    | region whose transitions have one input and one output  | `2 * diff * sum`         |
//! | WellStructured  | acyclic region, every split closed by a matching join   | `3 * sum`                |
//! | Unstructured    | any other region                                        | `4 * sum`                |
//!
//! `sum` is the total weight of the folded transitions (original transitions
//! weigh 1). `diff` compares the number of split nodes `S` and join nodes `J`
//! inside the component: 1 when both are zero, `max/min` when both are
//! positive, `1 + max` otherwise.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::net::WorkflowNet;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ComponentKind {
    Sequence,
    Choice,
    While,
    MarkedGraph,
    StateMachine,
    WellStructured,
    Unstructured,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 7] = [
        ComponentKind::Sequence,
        ComponentKind::Choice,
        ComponentKind::While,
        ComponentKind::MarkedGraph,
        ComponentKind::StateMachine,
        ComponentKind::WellStructured,
        ComponentKind::Unstructured,
    ];

    /// Multiplier applied to `diff * sum`.
    pub fn factor(self) -> i128 {
        match self {
            ComponentKind::Sequence => 1,
            ComponentKind::Choice | ComponentKind::While => 2,
            ComponentKind::MarkedGraph | ComponentKind::StateMachine => 2,
            ComponentKind::WellStructured => 3,
            ComponentKind::Unstructured => 4,
        }
    }

    fn uses_diff(self) -> bool {
        matches!(self, ComponentKind::MarkedGraph | ComponentKind::StateMachine)
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("component no longer matches the net it is applied to")]
    StaleMatch,
    #[error("net is not sound; structuredness is undefined")]
    NotSound,
    #[error("no component matches a net with {0} transitions")]
    NoProgress(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct FoldPlace {
    id: String,
    key: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct FoldTransition {
    id: String,
    key: usize,
    label: Option<String>,
    weight: Rational,
    tier: u32,
    pre: Vec<String>,
    post: Vec<String>,
}

/// Workflow net under folding: unit-weight transitions become weighted macro
/// transitions as components are collapsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldNet {
    places: Vec<FoldPlace>,
    transitions: Vec<FoldTransition>,
    source: String,
    sink: String,
    next_key: usize,
    macros: usize,
}

impl FoldNet {
    pub fn from_workflow(wf: &WorkflowNet) -> Self {
        let net = wf.net();
        let places: Vec<FoldPlace> = net
            .places()
            .iter()
            .enumerate()
            .map(|(k, p)| FoldPlace {
                id: p.id.0.clone(),
                key: k,
            })
            .collect();
        let np = places.len();
        let transitions = net
            .transitions()
            .iter()
            .enumerate()
            .map(|(t, tr)| FoldTransition {
                id: tr.id.0.clone(),
                key: np + t,
                label: tr.label.clone(),
                weight: Rational::one(),
                tier: 0,
                pre: net.preset(t).iter().map(|&p| places[p].id.clone()).collect(),
                post: net.postset(t).iter().map(|&p| places[p].id.clone()).collect(),
            })
            .collect();
        Self {
            next_key: np + net.transitions().len(),
            places,
            transitions,
            source: wf.source_id().0.clone(),
            sink: wf.sink_id().0.clone(),
            macros: 0,
        }
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn transition_ids(&self) -> Vec<&str> {
        self.transitions.iter().map(|t| t.id.as_str()).collect()
    }

    pub fn weight_of(&self, transition: &str) -> Option<Rational> {
        self.transition(transition).map(|t| t.weight)
    }

    pub fn tier_of(&self, transition: &str) -> Option<u32> {
        self.transition(transition).map(|t| t.tier)
    }

    /// The lone transition left between source and sink, once fully folded.
    pub fn terminal(&self) -> Option<(&str, Rational)> {
        match self.transitions.as_slice() {
            [t] if t.pre == [self.source.clone()] && t.post == [self.sink.clone()] => Some((t.id.as_str(), t.weight)),
            _ => None,
        }
    }

    fn transition(&self, id: &str) -> Option<&FoldTransition> {
        self.transitions.iter().find(|t| t.id == id)
    }

    /// Structural hash used to detect matches applied to a different net.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for p in &self.places {
            p.id.hash(&mut h);
        }
        for t in &self.transitions {
            t.id.hash(&mut h);
            t.pre.hash(&mut h);
            t.post.hash(&mut h);
            t.weight.numer().hash(&mut h);
            t.weight.denom().hash(&mut h);
        }
        h.finish()
    }

    fn fresh_id(&self, base: &str) -> String {
        let taken: HashSet<&str> = self
            .places
            .iter()
            .map(|p| p.id.as_str())
            .chain(self.transitions.iter().map(|t| t.id.as_str()))
            .collect();
        let mut id = base.to_string();
        while taken.contains(id.as_str()) {
            id.push('\'');
        }
        id
    }

    fn next_macro_id(&self) -> String {
        self.fresh_id(&format!("macro{}", self.macros + 1))
    }
}

/// One matched component and the macro transition it folds into.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentMatch {
    pub kind: ComponentKind,
    pub entry: String,
    pub exit: String,
    /// Places removed by the fold.
    pub places: Vec<String>,
    /// Transitions replaced by the macro.
    pub transitions: Vec<String>,
    pub split_count: usize,
    pub join_count: usize,
    #[serde(serialize_with = "crate::serialize_rational")]
    pub diff: Rational,
    #[serde(serialize_with = "crate::serialize_rational")]
    pub weight: Rational,
    pub tier: u32,
    pub folded_into: String,
    #[serde(skip)]
    net_fingerprint: u64,
    #[serde(skip)]
    order_key: usize,
}

impl ComponentMatch {
    /// Nodes of the component including entry and exit.
    pub fn size(&self) -> usize {
        self.places.len() + self.transitions.len() + if self.entry == self.exit { 1 } else { 2 }
    }
}

/// Joint index over the current fold net: places first, then transitions.
struct View<'a> {
    net: &'a FoldNet,
    np: usize,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl<'a> View<'a> {
    fn new(net: &'a FoldNet) -> Self {
        let np = net.places.len();
        let n = np + net.transitions.len();
        let place_ix: HashMap<&str, usize> = net.places.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for (t, tr) in net.transitions.iter().enumerate() {
            let tj = np + t;
            for p in &tr.pre {
                let pj = place_ix[p.as_str()];
                succ[pj].push(tj);
                pred[tj].push(pj);
            }
            for p in &tr.post {
                let pj = place_ix[p.as_str()];
                succ[tj].push(pj);
                pred[pj].push(tj);
            }
        }
        Self { net, np, succ, pred }
    }

    fn is_place(&self, j: usize) -> bool {
        j < self.np
    }

    fn trans(&self, j: usize) -> &FoldTransition {
        &self.net.transitions[j - self.np]
    }

    fn id(&self, j: usize) -> &str {
        if self.is_place(j) {
            &self.net.places[j].id
        } else {
            &self.trans(j).id
        }
    }

    fn key(&self, j: usize) -> usize {
        if self.is_place(j) {
            self.net.places[j].key
        } else {
            self.trans(j).key
        }
    }

    /// Transition with one input, one distinct output.
    fn is_step(&self, j: usize) -> bool {
        !self.is_place(j) && self.pred[j].len() == 1 && self.succ[j].len() == 1 && self.pred[j] != self.succ[j]
    }
}

/// A candidate before weights and ids are attached.
struct Raw {
    kind: ComponentKind,
    entry: usize,
    exit: usize,
    interior: BTreeSet<usize>,
}

pub fn match_components(net: &FoldNet) -> Vec<ComponentMatch> {
    let view = View::new(net);
    let mut raws = Vec::new();
    raws.extend(sequences(&view));
    raws.extend(choices(&view));
    raws.extend(whiles(&view));
    raws.extend(regions(&view));

    let fp = net.fingerprint();
    let macro_id = net.next_macro_id();
    let mut out: Vec<ComponentMatch> = raws.into_iter().map(|r| finish(&view, r, fp, &macro_id)).collect();
    out.sort_by_key(|m| (m.kind, m.size(), m.order_key));
    out
}

fn finish(view: &View, raw: Raw, fingerprint: u64, macro_id: &str) -> ComponentMatch {
    let mut nodes: BTreeSet<usize> = raw.interior.clone();
    nodes.insert(raw.entry);
    nodes.insert(raw.exit);
    let out_deg = |j: usize| view.succ[j].iter().filter(|s| nodes.contains(s)).count();
    let in_deg = |j: usize| view.pred[j].iter().filter(|s| nodes.contains(s)).count();
    // Entry and exit only count their arcs into and out of the component.
    let split_count = nodes
        .iter()
        .filter(|&&j| j != raw.exit || raw.entry == raw.exit)
        .filter(|&&j| out_deg(j) > 1)
        .count();
    let join_count = nodes
        .iter()
        .filter(|&&j| j != raw.entry || raw.entry == raw.exit)
        .filter(|&&j| in_deg(j) > 1)
        .count();
    let diff = if raw.kind.uses_diff() {
        diff_of(split_count, join_count)
    } else {
        Rational::one()
    };

    let folded: Vec<&FoldTransition> = raw
        .interior
        .iter()
        .filter(|&&j| !view.is_place(j))
        .map(|&j| view.trans(j))
        .collect();
    let sum = folded.iter().fold(Rational::zero(), |acc, t| acc + t.weight);
    let weight = Rational::from_integer(raw.kind.factor()) * diff * sum;
    let tier = 1 + folded.iter().map(|t| t.tier).max().unwrap_or(0);
    let order_key = nodes.iter().map(|&j| view.key(j)).min().unwrap_or(0);

    ComponentMatch {
        kind: raw.kind,
        entry: view.id(raw.entry).to_string(),
        exit: view.id(raw.exit).to_string(),
        places: raw
            .interior
            .iter()
            .filter(|&&j| view.is_place(j))
            .map(|&j| view.id(j).to_string())
            .collect(),
        transitions: folded.iter().map(|t| t.id.clone()).collect(),
        split_count,
        join_count,
        diff,
        weight,
        tier,
        folded_into: macro_id.to_string(),
        net_fingerprint: fingerprint,
        order_key,
    }
}

pub fn diff_of(splits: usize, joins: usize) -> Rational {
    let (s, j) = (splits as i128, joins as i128);
    match (s, j) {
        (0, 0) => Rational::one(),
        (s, j) if s > 0 && j > 0 => Rational::new(s.max(j), s.min(j)),
        (s, j) => Rational::from_integer(1 + s.max(j)),
    }
}

/// Maximal chains `entry -> t1 -> q1 -> .. -> tk -> exit` with `k >= 2`,
/// every inner place having exactly one producer and one consumer.
fn sequences(view: &View) -> Vec<Raw> {
    let inner = |q: usize| {
        view.is_place(q)
            && view.pred[q].len() == 1
            && view.succ[q].len() == 1
            && view.is_step(view.pred[q][0])
            && view.is_step(view.succ[q][0])
    };
    let mut out = Vec::new();
    let mut used = HashSet::new();
    for start in view.np..view.succ.len() {
        if !view.is_step(start) || used.contains(&start) {
            continue;
        }
        // Only start where the chain cannot be extended backwards.
        let entry = view.pred[start][0];
        if inner(entry) {
            continue;
        }
        let mut interior = BTreeSet::from([start]);
        let mut t = start;
        let mut exit = view.succ[t][0];
        while inner(exit) && !interior.contains(&exit) {
            interior.insert(exit);
            t = view.succ[exit][0];
            interior.insert(t);
            exit = view.succ[t][0];
        }
        used.extend(interior.iter().copied());
        let steps = interior.iter().filter(|&&j| !view.is_place(j)).count();
        if steps >= 2 {
            out.push(Raw {
                kind: ComponentKind::Sequence,
                entry,
                exit,
                interior,
            });
        }
    }
    out
}

fn choices(view: &View) -> Vec<Raw> {
    let mut groups: BTreeMap<(usize, usize), BTreeSet<usize>> = BTreeMap::new();
    for t in view.np..view.succ.len() {
        if view.is_step(t) {
            groups.entry((view.pred[t][0], view.succ[t][0])).or_default().insert(t);
        }
    }
    groups
        .into_iter()
        .filter(|(_, ts)| ts.len() >= 2)
        .map(|((entry, exit), interior)| Raw {
            kind: ComponentKind::Choice,
            entry,
            exit,
            interior,
        })
        .collect()
}

/// Self-loops grouped by place, and forward/backward transition pairs
/// between two places.
fn whiles(view: &View) -> Vec<Raw> {
    let mut out = Vec::new();
    let mut loops: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for t in view.np..view.succ.len() {
        if view.pred[t].len() == 1 && view.succ[t] == view.pred[t] {
            loops.entry(view.pred[t][0]).or_default().insert(t);
        }
    }
    for (p, ts) in loops {
        out.push(Raw {
            kind: ComponentKind::While,
            entry: p,
            exit: p,
            interior: ts,
        });
    }

    let mut steps: BTreeMap<(usize, usize), BTreeSet<usize>> = BTreeMap::new();
    for t in view.np..view.succ.len() {
        if view.is_step(t) {
            steps.entry((view.pred[t][0], view.succ[t][0])).or_default().insert(t);
        }
    }
    for (&(e, x), fwd) in &steps {
        if let Some(back) = steps.get(&(x, e)) {
            // The loop is entered only through `e` and left only through `x`.
            let closed = view.succ[e].iter().all(|t| fwd.contains(t)) && view.pred[x].iter().all(|t| fwd.contains(t));
            if !closed {
                continue;
            }
            let mut interior = fwd.clone();
            interior.extend(back.iter().copied());
            out.push(Raw {
                kind: ComponentKind::While,
                entry: e,
                exit: x,
                interior,
            });
        }
    }
    out
}

fn closure(adj: &[Vec<usize>], start: usize, stop: usize) -> HashSet<usize> {
    let mut seen = HashSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        if u == stop && u != start {
            continue;
        }
        for &v in &adj[u] {
            if seen.insert(v) {
                stack.push(v);
            }
        }
    }
    seen
}

/// Single-entry/single-exit regions between two places, classified as
/// marked graph, state machine, well-structured or unstructured. Regions that
/// are plain chains are left to the sequence matcher; only the smallest
/// regions of each kind are kept.
fn regions(view: &View) -> Vec<Raw> {
    let mut found: Vec<Raw> = Vec::new();
    for e in 0..view.np {
        let fwd = closure(&view.succ, e, usize::MAX);
        for x in 0..view.np {
            if x == e || !fwd.contains(&x) {
                continue;
            }
            if let Some(interior) = region(view, e, x) {
                if let Some(kind) = classify(view, e, x, &interior) {
                    found.push(Raw {
                        kind,
                        entry: e,
                        exit: x,
                        interior,
                    });
                }
            }
        }
    }
    let minimal: Vec<bool> = found
        .iter()
        .map(|r| {
            !found
                .iter()
                .any(|o| o.kind == r.kind && o.interior.len() < r.interior.len() && o.interior.is_subset(&r.interior))
        })
        .collect();
    found
        .into_iter()
        .zip(minimal)
        .filter(|(_, keep)| *keep)
        .map(|(r, _)| r)
        .collect()
}

fn region(view: &View, e: usize, x: usize) -> Option<BTreeSet<usize>> {
    let fwd = closure(&view.succ, e, x);
    let bwd = closure(&view.pred, x, e);
    let interior: BTreeSet<usize> = fwd.intersection(&bwd).copied().filter(|&j| j != e && j != x).collect();
    if interior.is_empty() {
        return None;
    }
    for &j in &interior {
        if view.succ[j].iter().any(|s| *s != x && !interior.contains(s)) {
            return None;
        }
        if view.pred[j].iter().any(|p| *p != e && !interior.contains(p)) {
            return None;
        }
    }
    if view.succ[x].iter().any(|s| interior.contains(s)) || view.pred[e].iter().any(|p| interior.contains(p)) {
        return None;
    }
    let places = interior.iter().filter(|&&j| view.is_place(j)).count();
    let transitions = interior.len() - places;
    if places == 0 || transitions < 2 {
        return None;
    }
    Some(interior)
}

fn classify(view: &View, e: usize, x: usize, interior: &BTreeSet<usize>) -> Option<ComponentKind> {
    let inside = |j: &usize| interior.contains(j) || *j == e || *j == x;
    let outs = |j: usize| view.succ[j].iter().filter(|s| inside(s)).count();
    let ins = |j: usize| view.pred[j].iter().filter(|s| inside(s)).count();

    let places = || interior.iter().copied().filter(|&j| view.is_place(j));
    let transitions = || interior.iter().copied().filter(|&j| !view.is_place(j));

    let chain = transitions().all(|t| ins(t) == 1 && outs(t) == 1)
        && places().all(|p| ins(p) == 1 && outs(p) == 1)
        && outs(e) == 1
        && ins(x) == 1;
    if chain {
        return None;
    }
    if places().all(|p| ins(p) == 1 && outs(p) == 1) && outs(e) == 1 && ins(x) == 1 {
        return Some(ComponentKind::MarkedGraph);
    }
    if transitions().all(|t| ins(t) == 1 && outs(t) == 1) {
        return Some(ComponentKind::StateMachine);
    }
    if well_structured(view, e, x, interior) {
        return Some(ComponentKind::WellStructured);
    }
    Some(ComponentKind::Unstructured)
}

/// Acyclic, and every split is closed by a join of the same node kind that
/// it dominates and that post-dominates it.
fn well_structured(view: &View, e: usize, x: usize, interior: &BTreeSet<usize>) -> bool {
    let mut nodes: Vec<usize> = interior.iter().copied().collect();
    nodes.push(e);
    nodes.push(x);
    let inside: HashSet<usize> = nodes.iter().copied().collect();
    let succ = |j: usize| -> Vec<usize> {
        if j == x {
            return Vec::new();
        }
        view.succ[j].iter().copied().filter(|s| inside.contains(s)).collect()
    };
    let pred = |j: usize| -> Vec<usize> {
        if j == e {
            return Vec::new();
        }
        view.pred[j].iter().copied().filter(|s| inside.contains(s)).collect()
    };

    // Kahn's algorithm; a leftover node means a cycle.
    let mut indeg: HashMap<usize, usize> = nodes.iter().map(|&j| (j, pred(j).len())).collect();
    let mut order = Vec::new();
    let mut ready: Vec<usize> = nodes.iter().copied().filter(|j| indeg[j] == 0).collect();
    while let Some(j) = ready.pop() {
        order.push(j);
        for s in succ(j) {
            let d = indeg.get_mut(&s).expect("inside");
            *d -= 1;
            if *d == 0 {
                ready.push(s);
            }
        }
    }
    if order.len() != nodes.len() {
        return false;
    }

    let dominators = |order: &[usize], pred: &dyn Fn(usize) -> Vec<usize>| {
        let mut dom: HashMap<usize, HashSet<usize>> = HashMap::new();
        for &j in order {
            let ps = pred(j);
            let mut d: HashSet<usize> = match ps.split_first() {
                None => HashSet::new(),
                Some((first, rest)) => {
                    let mut acc = dom[first].clone();
                    for p in rest {
                        acc.retain(|n| dom[p].contains(n));
                    }
                    acc
                }
            };
            d.insert(j);
            dom.insert(j, d);
        }
        dom
    };
    let dom = dominators(&order, &pred);
    let rev: Vec<usize> = order.iter().rev().copied().collect();
    let pdom = dominators(&rev, &succ);
    // Immediate (post-)dominator: the strict dominator with the largest set.
    let immediate = |sets: &HashMap<usize, HashSet<usize>>, j: usize| {
        sets[&j]
            .iter()
            .filter(|&&d| d != j)
            .max_by_key(|&&d| sets[&d].len())
            .copied()
    };

    for &j in &nodes {
        if succ(j).len() > 1 {
            let Some(join) = immediate(&pdom, j) else { return false };
            if pred(join).len() < 2 || view.is_place(join) != view.is_place(j) || immediate(&dom, join) != Some(j) {
                return false;
            }
        }
        if pred(j).len() > 1 {
            let Some(split) = immediate(&dom, j) else { return false };
            if succ(split).len() < 2 || view.is_place(split) != view.is_place(j) || immediate(&pdom, split) != Some(j) {
                return false;
            }
        }
    }
    true
}

/// Collapses `m` into its macro transition. Self-loop whiles split their
/// place in two so the macro sits between the halves.
pub fn fold_component(net: &FoldNet, m: &ComponentMatch) -> Result<(FoldNet, String), StructureError> {
    if net.fingerprint() != m.net_fingerprint || net.next_macro_id() != m.folded_into {
        return Err(StructureError::StaleMatch);
    }
    let mut out = net.clone();
    let gone_t: HashSet<&str> = m.transitions.iter().map(String::as_str).collect();
    let gone_p: HashSet<&str> = m.places.iter().map(String::as_str).collect();
    out.transitions.retain(|t| !gone_t.contains(t.id.as_str()));
    out.places.retain(|p| !gone_p.contains(p.id.as_str()));

    let exit = if m.kind == ComponentKind::While && m.entry == m.exit {
        let half = out.fresh_id(&format!("{}'", m.entry));
        for t in &mut out.transitions {
            for p in &mut t.pre {
                if *p == m.entry {
                    *p = half.clone();
                }
            }
        }
        let key = out.next_key;
        out.next_key += 1;
        out.places.push(FoldPlace { id: half.clone(), key });
        half
    } else {
        m.exit.clone()
    };

    let key = out.next_key;
    out.next_key += 1;
    out.macros += 1;
    out.transitions.push(FoldTransition {
        id: m.folded_into.clone(),
        key,
        label: None,
        weight: m.weight,
        tier: m.tier,
        pre: vec![m.entry.clone()],
        post: vec![exit],
    });
    Ok((out, m.folded_into.clone()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldTrace {
    pub weight: Rational,
    pub steps: Vec<ComponentMatch>,
}

impl FoldTrace {
    pub fn kind_counts(&self) -> BTreeMap<ComponentKind, usize> {
        let mut counts: BTreeMap<ComponentKind, usize> = ComponentKind::ALL.iter().map(|&k| (k, 0)).collect();
        for s in &self.steps {
            *counts.entry(s.kind).or_default() += 1;
        }
        counts
    }

    /// Weights of macro transitions folded inside each step.
    pub fn nested_weights(&self) -> Vec<(Rational, Vec<Rational>)> {
        let mut weights: HashMap<&str, Rational> = HashMap::new();
        let mut out = Vec::new();
        for s in &self.steps {
            let inner = s
                .transitions
                .iter()
                .filter_map(|t| weights.get(t.as_str()).copied())
                .collect();
            out.push((s.weight, inner));
            weights.insert(s.folded_into.as_str(), s.weight);
        }
        out
    }
}

/// Folds until one transition joins source and sink. Soundness is the
/// caller's responsibility; see [`structuredness`].
pub fn fold_to_completion(wf: &WorkflowNet) -> Result<FoldTrace, StructureError> {
    let mut net = FoldNet::from_workflow(wf);
    let mut steps = Vec::new();
    loop {
        if let Some((_, w)) = net.terminal() {
            return Ok(FoldTrace { weight: w, steps });
        }
        let candidates = match_components(&net);
        let Some(best) = candidates.into_iter().next() else {
            return Err(StructureError::NoProgress(net.transition_count()));
        };
        let (next, _) = fold_component(&net, &best)?;
        net = next;
        steps.push(best);
    }
}

pub fn structuredness(wf: &WorkflowNet, cap: usize) -> Result<FoldTrace, crate::MetricsError> {
    let report = crate::state_space::soundness_check(wf, cap)?;
    if !report.sound {
        return Err(StructureError::NotSound.into());
    }
    Ok(fold_to_completion(wf)?)
}

/// Re-applies a recorded trace from the original net.
pub fn replay(wf: &WorkflowNet, steps: &[ComponentMatch]) -> Result<FoldNet, StructureError> {
    let mut net = FoldNet::from_workflow(wf);
    for s in steps {
        net = fold_component(&net, s)?.0;
    }
    Ok(net)
}
