//! Reference nets: the four-transition diamond and three tar-production
//! models (condensation, pit roll, raised structure), each paired with a
//! manifest of structural facts it must satisfy.
//!
//! The tar models follow the documented production steps; topology beyond those
//! lists is modeling judgment. Each production step is a transition between
//! "in progress" places, "Start" included. Repeatable actions are self-loops.

use serde::Serialize;

use crate::metrics::{arcs_around, density_of_counts, extended_cyclomatic, round3, states_before};
use crate::net::{validate_workflow, ArcSpec, PetriNet, Place, Transition, WorkflowNet};
use crate::state_space::{max_concurrency, reachability_graph, scc_decompose, soundness_of_graph, DEFAULT_STATE_CAP};

type Step<'a> = (&'a str, &'a [&'a str], &'a [&'a str]);

/// Transitions get ids `t1, t2, ..` in step order and the step name as label.
fn build(places: &[&str], steps: &[Step], marked: &str) -> WorkflowNet {
    let places = places
        .iter()
        .map(|p| Place {
            id: (*p).into(),
            label: None,
        })
        .collect();
    let mut transitions = Vec::new();
    let mut arcs = Vec::new();
    for (k, (label, pre, post)) in steps.iter().enumerate() {
        let id = format!("t{}", k + 1);
        for p in pre.iter() {
            arcs.push(ArcSpec::new(*p, id.as_str()));
        }
        for p in post.iter() {
            arcs.push(ArcSpec::new(id.as_str(), *p));
        }
        transitions.push(Transition {
            id: id.as_str().into(),
            label: Some((*label).to_string()),
        });
    }
    let net = PetriNet::new(places, transitions, arcs, &[(marked.to_string(), 1)]).expect("fixture net is well formed");
    validate_workflow(net).expect("fixture is a workflow net")
}

pub fn figure1_net() -> WorkflowNet {
    let places = ["p1", "p2", "p3", "p4", "p5", "p6"]
        .iter()
        .map(|p| Place {
            id: (*p).into(),
            label: None,
        })
        .collect();
    let transitions = ["t1", "t2", "t3", "t4"]
        .iter()
        .map(|t| Transition {
            id: (*t).into(),
            label: None,
        })
        .collect();
    let arcs = [
        ("p1", "t1"),
        ("t1", "p2"),
        ("t1", "p3"),
        ("p2", "t2"),
        ("p3", "t3"),
        ("t2", "p4"),
        ("t3", "p5"),
        ("p4", "t4"),
        ("p5", "t4"),
        ("t4", "p6"),
    ]
    .iter()
    .map(|(s, t)| ArcSpec::new(*s, *t))
    .collect();
    let net = PetriNet::new(places, transitions, arcs, &[("p1".to_string(), 1)]).expect("well formed");
    validate_workflow(net).expect("workflow net")
}

/// Bark and rock are prepared in parallel; once lit, the bark cycles through
/// grab, reignite and placement until condensation starts.
pub fn condensation_net() -> WorkflowNet {
    build(
        &["i", "a", "b", "c", "d", "L", "G", "R", "P", "C", "S", "T", "o"],
        &[
            ("Start", &["i"], &["a", "b"]),
            ("Tear bark", &["a"], &["c"]),
            ("Place rock", &["b"], &["d"]),
            ("Light bark", &["c", "d"], &["L"]),
            ("Grab", &["L"], &["G"]),
            ("Reignite", &["G"], &["R"]),
            ("Place lit bark", &["R"], &["P"]),
            ("Bark moves", &["P"], &["L"]),
            ("Bark extinguishes", &["P"], &["L"]),
            ("Start condense", &["P"], &["C"]),
            ("Hold bark", &["C"], &["C"]),
            ("Stop condense", &["C"], &["S"]),
            ("Scrape", &["S"], &["T"]),
            ("Store", &["T"], &["o"]),
        ],
        "i",
    )
}

/// Soil, cup and roll are prepared concurrently; the embers may be fanned
/// and the roll reheated before the tar is collected.
pub fn pit_roll_net() -> WorkflowNet {
    build(
        &[
            "i", "a", "b", "c", "a1", "a2", "b1", "c1", "pc", "pr", "E", "K", "D", "T", "o",
        ],
        &[
            ("Start", &["i"], &["a", "b", "c"]),
            ("Clean soil", &["a"], &["a1"]),
            ("Dig", &["a1"], &["a2"]),
            ("Make cup", &["b"], &["b1"]),
            ("Make roll", &["c"], &["c1"]),
            ("Place cup", &["a2", "b1"], &["pc"]),
            ("Place roll", &["pc", "c1"], &["pr"]),
            ("Place embers", &["pr"], &["E"]),
            ("Fan embers", &["E"], &["E"]),
            ("Cool pit", &["E"], &["K"]),
            ("Dig roll & cup", &["K"], &["D"]),
            ("Reheat roll", &["D"], &["K"]),
            ("Collect tar", &["D"], &["T"]),
            ("Store", &["T"], &["o"]),
        ],
        "i",
    )
}

/// Roll, pit and cup are prepared concurrently, the dome is built and fired,
/// and the cool/open/fume cycle repeats until fuming stops.
pub fn raised_structure_net() -> WorkflowNet {
    build(
        &[
            "i", "a", "b", "c", "a1", "b1", "c1", "pc", "pn", "pp", "pr", "d", "w", "B", "Z", "C0", "O", "U", "E",
            "R1", "R2", "R3", "R4", "R5", "o",
        ],
        &[
            ("Start", &["i"], &["a", "b", "c"]),
            ("Make roll", &["a"], &["a1"]),
            ("Dig pit", &["b"], &["b1"]),
            ("Make cup", &["c"], &["c1"]),
            ("Place cup", &["b1", "c1"], &["pc"]),
            ("Place net", &["pc"], &["pn"]),
            ("Place pebbles", &["pn"], &["pp"]),
            ("Place roll", &["pp", "a1"], &["pr"]),
            ("Make dome", &["pr"], &["d"]),
            ("Fix dome", &["d"], &["d"]),
            ("Place firewood", &["d"], &["w"]),
            ("Light dome", &["w"], &["B"]),
            ("Add firewood", &["B"], &["B"]),
            ("Fire stops", &["B"], &["Z"]),
            ("Fix dome2", &["Z"], &["Z"]),
            ("Cool dome", &["Z"], &["C0"]),
            ("Open dome", &["C0"], &["O"]),
            ("Dome fumes", &["O"], &["U"]),
            ("Close dome", &["U"], &["Z"]),
            ("Fuming stops", &["U"], &["E"]),
            ("Remove dome", &["E"], &["R1"]),
            ("Remove roll", &["R1"], &["R2"]),
            ("Remove net & pebbles", &["R2"], &["R3"]),
            ("Remove cup", &["R3"], &["R4"]),
            ("Collect tar", &["R4"], &["R5"]),
            ("Store", &["R5"], &["o"]),
        ],
        "i",
    )
}

/// Structural facts a fixture must reproduce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixtureManifest {
    pub name: String,
    pub place_count: usize,
    pub transition_count: usize,
    pub arc_count: usize,
    pub arcs_before_fire: usize,
    pub arcs_after_fire: usize,
    pub fire_transition_label: String,
    pub expected_density_rounded: String,
    pub expected_ecym: Option<i64>,
    pub expected_state_count: Option<usize>,
    /// States reachable without firing the fire transition.
    pub states_before_fire: Option<usize>,
    pub largest_scc_size: Option<usize>,
    pub max_concurrent_enabled: Option<usize>,
    pub self_loop_labels: Vec<String>,
    pub transition_labels: Vec<String>,
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

pub fn figure1_manifest() -> FixtureManifest {
    FixtureManifest {
        name: "figure1".into(),
        place_count: 6,
        transition_count: 4,
        arc_count: 10,
        arcs_before_fire: 1,
        arcs_after_fire: 9,
        fire_transition_label: "t1".into(),
        expected_density_rounded: "0.208".into(),
        expected_ecym: Some(6),
        expected_state_count: Some(6),
        states_before_fire: Some(1),
        largest_scc_size: Some(1),
        max_concurrent_enabled: Some(2),
        self_loop_labels: vec![],
        transition_labels: strings(&["t1", "t2", "t3", "t4"]),
    }
}

pub fn condensation_manifest() -> FixtureManifest {
    FixtureManifest {
        name: "condensation".into(),
        place_count: 13,
        transition_count: 14,
        arc_count: 30,
        arcs_before_fire: 9,
        arcs_after_fire: 21,
        fire_transition_label: "Light bark".into(),
        expected_density_rounded: "0.082".into(),
        expected_ecym: Some(13),
        expected_state_count: Some(13),
        states_before_fire: Some(5),
        largest_scc_size: Some(4),
        max_concurrent_enabled: Some(2),
        self_loop_labels: strings(&["Hold bark"]),
        transition_labels: strings(&[
            "Start",
            "Tear bark",
            "Place rock",
            "Light bark",
            "Grab",
            "Reignite",
            "Place lit bark",
            "Bark moves",
            "Bark extinguishes",
            "Start condense",
            "Hold bark",
            "Stop condense",
            "Scrape",
            "Store",
        ]),
    }
}

pub fn pit_roll_manifest() -> FixtureManifest {
    FixtureManifest {
        name: "pit_roll".into(),
        place_count: 15,
        transition_count: 14,
        arc_count: 32,
        arcs_before_fire: 19,
        arcs_after_fire: 13,
        fire_transition_label: "Place embers".into(),
        expected_density_rounded: "0.076".into(),
        expected_ecym: Some(31),
        expected_state_count: Some(21),
        states_before_fire: Some(16),
        largest_scc_size: Some(2),
        max_concurrent_enabled: Some(3),
        self_loop_labels: strings(&["Fan embers"]),
        transition_labels: strings(&[
            "Start",
            "Clean soil",
            "Dig",
            "Make cup",
            "Make roll",
            "Place cup",
            "Place roll",
            "Place embers",
            "Fan embers",
            "Cool pit",
            "Dig roll & cup",
            "Reheat roll",
            "Collect tar",
            "Store",
        ]),
    }
}

pub fn raised_structure_manifest() -> FixtureManifest {
    FixtureManifest {
        name: "raised_structure".into(),
        place_count: 25,
        transition_count: 26,
        arc_count: 56,
        arcs_before_fire: 27,
        arcs_after_fire: 29,
        fire_transition_label: "Light dome".into(),
        expected_density_rounded: "0.043".into(),
        expected_ecym: Some(38),
        expected_state_count: Some(34),
        states_before_fire: Some(18),
        largest_scc_size: Some(4),
        max_concurrent_enabled: Some(3),
        self_loop_labels: strings(&["Add firewood", "Fix dome", "Fix dome2"]),
        transition_labels: strings(&[
            "Start",
            "Make roll",
            "Dig pit",
            "Make cup",
            "Place cup",
            "Place net",
            "Place pebbles",
            "Place roll",
            "Make dome",
            "Fix dome",
            "Place firewood",
            "Light dome",
            "Add firewood",
            "Fire stops",
            "Fix dome2",
            "Cool dome",
            "Open dome",
            "Dome fumes",
            "Close dome",
            "Fuming stops",
            "Remove dome",
            "Remove roll",
            "Remove net & pebbles",
            "Remove cup",
            "Collect tar",
            "Store",
        ]),
    }
}

/// A named fixture: file stem, constructor output and manifest.
pub struct Fixture {
    pub name: &'static str,
    pub net: WorkflowNet,
    pub manifest: FixtureManifest,
}

pub fn all() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "figure1",
            net: figure1_net(),
            manifest: figure1_manifest(),
        },
        Fixture {
            name: "condensation",
            net: condensation_net(),
            manifest: condensation_manifest(),
        },
        Fixture {
            name: "pit_roll",
            net: pit_roll_net(),
            manifest: pit_roll_manifest(),
        },
        Fixture {
            name: "raised_structure",
            net: raised_structure_net(),
            manifest: raised_structure_manifest(),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub field: String,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConformanceReport {
    pub fixture: String,
    pub checks: Vec<Check>,
}

impl ConformanceReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    fn push(&mut self, field: &str, expected: impl ToString, computed: impl ToString) {
        let (expected, computed) = (expected.to_string(), computed.to_string());
        self.checks.push(Check {
            field: field.to_string(),
            pass: expected == computed,
            expected,
            computed,
        });
    }
}

fn show<T: std::fmt::Debug>(x: T) -> String {
    format!("{x:?}")
}

/// Evaluates every manifest field against the net.
pub fn check_manifest(wf: &WorkflowNet, m: &FixtureManifest) -> ConformanceReport {
    let net = wf.net();
    let mut r = ConformanceReport {
        fixture: m.name.clone(),
        checks: Vec::new(),
    };
    let counts = (net.places().len(), net.transitions().len(), net.arcs().len());
    r.push(
        "census",
        show((m.place_count, m.transition_count, m.arc_count)),
        show(counts),
    );
    r.push(
        "arcs_split",
        show((m.arcs_before_fire, m.arcs_after_fire)),
        match arcs_around(net, &m.fire_transition_label) {
            Ok(split) => show(split),
            Err(e) => e.to_string(),
        },
    );
    r.push(
        "density",
        &m.expected_density_rounded,
        match density_of_counts(counts.0, counts.1, counts.2) {
            Ok(d) => round3(&d),
            Err(e) => e.to_string(),
        },
    );
    let names: Vec<String> = (0..net.transitions().len())
        .map(|t| net.transition_name(t).to_string())
        .collect();
    r.push("transition_labels", show(&m.transition_labels), show(&names));
    let mut loops: Vec<String> = net
        .self_loops()
        .iter()
        .map(|&t| net.transition_name(t).to_string())
        .collect();
    loops.sort();
    let mut expected_loops = m.self_loop_labels.clone();
    expected_loops.sort();
    r.push("self_loops", show(expected_loops), show(loops));

    let rg = match reachability_graph(net, DEFAULT_STATE_CAP) {
        Ok(rg) => rg,
        Err(e) => {
            r.push("state_space", "explored", e);
            return r;
        }
    };
    let scc = scc_decompose(&rg);
    r.push("sound", true, soundness_of_graph(wf, &rg).sound);
    if let Some(v) = m.expected_state_count {
        r.push("state_count", v, rg.vertex_count());
    }
    if let Some(v) = m.expected_ecym {
        r.push(
            "ecym",
            v,
            extended_cyclomatic(&rg, &scc).map_or_else(|e| e.to_string(), |x| x.to_string()),
        );
    }
    if let Some(v) = m.states_before_fire {
        r.push(
            "states_before_fire",
            v,
            states_before(net, &rg, &m.fire_transition_label).map_or_else(|e| e.to_string(), |x| x.to_string()),
        );
    }
    if let Some(v) = m.largest_scc_size {
        r.push("largest_scc", v, scc.largest());
    }
    if let Some(v) = m.max_concurrent_enabled {
        r.push("max_concurrent", v, max_concurrency(net, &rg));
    }
    r
}
