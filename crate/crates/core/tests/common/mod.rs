#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wfnet::net::{ArcSpec, Place, Transition};
use wfnet::{validate_workflow, PetriNet, WorkflowNet};

/// Net under construction: transitions as (preset, postset) place indices.
struct Draft {
    places: usize,
    transitions: Vec<(Vec<usize>, Vec<usize>)>,
}

impl Draft {
    fn build(&self) -> PetriNet {
        let places = (0..self.places)
            .map(|p| Place {
                id: format!("p{p}").as_str().into(),
                label: None,
            })
            .collect();
        let transitions = (0..self.transitions.len())
            .map(|t| Transition {
                id: format!("t{t}").as_str().into(),
                label: Some(format!("step {t}")),
            })
            .collect();
        let mut arcs = Vec::new();
        for (t, (pre, post)) in self.transitions.iter().enumerate() {
            for p in pre {
                arcs.push(ArcSpec::new(format!("p{p}"), format!("t{t}")));
            }
            for p in post {
                arcs.push(ArcSpec::new(format!("t{t}"), format!("p{p}")));
            }
        }
        PetriNet::new(places, transitions, arcs, &[("p0".to_string(), 1)]).expect("generated net is well formed")
    }

    fn add_place(&mut self) -> usize {
        self.places += 1;
        self.places - 1
    }
}

/// Sound, 1-safe workflow net grown from `i -> t -> o` by refinements that
/// preserve soundness: place splits, transition splits, parallel branches,
/// alternatives, back loops and self-loops.
pub fn structured_net(seed: u64, max_places: usize) -> WorkflowNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // place 0 is the source; the sink moves when it gains a successor step
    let mut sink = 1;
    let mut d = Draft {
        places: 2,
        transitions: vec![(vec![0], vec![1])],
    };
    let steps = rng.gen_range(0..12);
    for _ in 0..steps {
        let t = rng.gen_range(0..d.transitions.len());
        match rng.gen_range(0..6) {
            0 if d.places < max_places => {
                // t: P -> Q becomes t: P -> p, u: p -> Q
                let p = d.add_place();
                let post = std::mem::replace(&mut d.transitions[t].1, vec![p]);
                d.transitions.push((vec![p], post));
            }
            1 if d.places < max_places => {
                // place q gains a successor step: consumers of q now read q'
                let q = rng.gen_range(0..d.places);
                let q2 = d.add_place();
                for (pre, _) in d.transitions.iter_mut() {
                    for p in pre.iter_mut() {
                        if *p == q {
                            *p = q2;
                        }
                    }
                }
                d.transitions.push((vec![q], vec![q2]));
                if q == sink {
                    sink = q2;
                }
            }
            2 if d.places + 2 <= max_places => {
                // t: P -> Q becomes t: P -> {a, b}, j: {a, b} -> Q
                let (a, b) = (d.add_place(), d.add_place());
                let post = std::mem::replace(&mut d.transitions[t].1, vec![a, b]);
                d.transitions.push((vec![a, b], post));
            }
            3 => {
                let copy = d.transitions[t].clone();
                d.transitions.push(copy);
            }
            4 => {
                let (pre, post) = d.transitions[t].clone();
                if pre.len() == 1 && post.len() == 1 && pre != post && pre[0] != 0 && post[0] != sink {
                    d.transitions.push((post, pre));
                }
            }
            5 => {
                let p = rng.gen_range(0..d.places);
                if p != 0 && p != sink {
                    d.transitions.push((vec![p], vec![p]));
                }
            }
            _ => {}
        }
    }
    validate_workflow(d.build()).expect("refinements keep a workflow net")
}

/// Arbitrary net with a token on `p0`; not necessarily a workflow net.
pub fn random_net(seed: u64, max_places: usize) -> PetriNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let places = rng.gen_range(1..=max_places);
    let count = rng.gen_range(1..=10);
    let mut transitions = Vec::new();
    for _ in 0..count {
        let pick = |rng: &mut ChaCha8Rng| -> Vec<usize> {
            let mut v: Vec<usize> = (0..places).filter(|_| rng.gen_bool(0.25)).collect();
            if v.is_empty() {
                v.push(rng.gen_range(0..places));
            }
            v
        };
        let pre = pick(&mut rng);
        let post = pick(&mut rng);
        transitions.push((pre, post));
    }
    Draft { places, transitions }.build()
}

/// Random directed graph as adjacency lists.
pub fn random_graph(seed: u64, max_vertices: usize) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_vertices);
    let p = rng.gen_range(0.0..0.15);
    (0..n).map(|_| (0..n).filter(|_| rng.gen_bool(p)).collect()).collect()
}

/// Component numbering from pairwise mutual reachability.
pub fn naive_scc(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut reach = vec![vec![false; n]; n];
    for (u, row) in reach.iter_mut().enumerate() {
        row[u] = true;
        let mut stack = vec![u];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !row[y] {
                    row[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for u in 0..n {
        if comp[u] == usize::MAX {
            for v in u..n {
                if reach[u][v] && reach[v][u] {
                    comp[v] = next;
                }
            }
            next += 1;
        }
    }
    comp
}

/// Place ids, (transition id, label), arc endpoints, initial marking.
pub type Shape = (
    Vec<String>,
    Vec<(String, Option<String>)>,
    Vec<(String, String)>,
    String,
);

/// Id-level view of a net for isomorphism checks.
pub fn shape(net: &PetriNet) -> Shape {
    let places = net.places().iter().map(|p| p.id.0.clone()).collect();
    let transitions = net
        .transitions()
        .iter()
        .map(|t| (t.id.0.clone(), t.label.clone()))
        .collect();
    let arcs = net
        .arcs()
        .iter()
        .map(|a| (net.node_id(a.source).to_string(), net.node_id(a.target).to_string()))
        .collect();
    (places, transitions, arcs, net.initial_marking().bit_string())
}
