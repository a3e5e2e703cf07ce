//! Reading and writing the PNML core-model subset used for unit-weight,
//! 1-safe nets.
//!
//! Tool-specific and graphics children are kept as raw XML and written back
//! unchanged; they are never interpreted.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::net::{ArcSpec, NetError, PetriNet, Place, PlaceId, Transition, TransitionId};

pub const PNML_NAMESPACE: &str = "http://www.pnml.org/version-2009/grammar/pnml";
pub const PT_NET_TYPE: &str = "http://www.pnml.org/version-2009/grammar/ptnet";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PnmlError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("unsupported feature at {location}: {what}")]
    UnsupportedFeature { location: String, what: String },
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Place,
    Transition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmlNode {
    pub kind: NodeKind,
    pub id: String,
    pub name: Option<String>,
    /// Tokens from `initialMarking`; always 0 for transitions.
    pub marking: u32,
    /// Raw XML of uninterpreted children, in document order.
    pub extras: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmlArc {
    pub id: String,
    pub source: String,
    pub target: String,
    pub extras: Vec<String>,
}

/// One `<net>` of a PNML file, flattened across pages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmlDocument {
    pub net_id: String,
    pub net_type: String,
    pub page_id: Option<String>,
    pub nodes: Vec<PnmlNode>,
    pub arcs: Vec<PnmlArc>,
    /// Raw XML of uninterpreted `<net>`-level children (besides pages).
    pub extras: Vec<String>,
}

fn location(doc: &Document, node: Node) -> String {
    let pos = doc.text_pos_at(node.range().start);
    format!("line {}, column {}", pos.row, pos.col)
}

fn unsupported(doc: &Document, node: Node, what: impl Into<String>) -> PnmlError {
    PnmlError::UnsupportedFeature {
        location: location(doc, node),
        what: what.into(),
    }
}

fn malformed(doc: &Document, node: Node, what: &str) -> PnmlError {
    PnmlError::MalformedDocument(format!("{} ({})", what, location(doc, node)))
}

/// Text of a `<x><text>..</text></x>` label, trimmed.
fn label_text(node: Node) -> Option<String> {
    node.children()
        .find(|c| c.has_tag_name("text") || c.tag_name().name() == "text")
        .map(|t| t.text().unwrap_or("").trim().to_string())
}

fn raw<'a>(text: &'a str, node: Node) -> &'a str {
    &text[node.range()]
}

impl PnmlDocument {
    pub fn parse(text: &str) -> Result<Self, PnmlError> {
        let doc = Document::parse(text).map_err(|e| PnmlError::MalformedDocument(e.to_string()))?;
        let root = doc.root_element();
        if root.tag_name().name() != "pnml" {
            return Err(malformed(&doc, root, "root element is not <pnml>"));
        }
        let nets: Vec<Node> = root
            .children()
            .filter(|c| c.is_element() && c.tag_name().name() == "net")
            .collect();
        let net = match nets.as_slice() {
            [] => return Err(malformed(&doc, root, "no <net> element")),
            [n] => *n,
            [_, second, ..] => return Err(unsupported(&doc, *second, "multiple nets in one document")),
        };
        let net_id = net
            .attribute("id")
            .ok_or_else(|| malformed(&doc, net, "<net> without id"))?
            .to_string();
        let net_type = net.attribute("type").unwrap_or("").to_string();

        let mut out = PnmlDocument {
            net_id,
            net_type,
            page_id: None,
            nodes: Vec::new(),
            arcs: Vec::new(),
            extras: Vec::new(),
        };
        let pages: Vec<Node> = net
            .children()
            .filter(|c| c.is_element() && c.tag_name().name() == "page")
            .collect();
        if pages.len() == 1 {
            out.page_id = pages[0].attribute("id").map(str::to_string);
        }

        // Node id -> page it was declared on (None = directly under <net>).
        let mut page_of: HashMap<String, Option<usize>> = HashMap::new();
        let mut arcs_with_page: Vec<(PnmlArc, Option<usize>, Node)> = Vec::new();
        let mut page_count = 0usize;
        out.collect(
            &doc,
            text,
            net,
            None,
            &mut page_count,
            &mut page_of,
            &mut arcs_with_page,
            true,
        )?;

        for (arc, page, node) in arcs_with_page {
            for end in [&arc.source, &arc.target] {
                if let Some(declared) = page_of.get(end) {
                    if *declared != page {
                        return Err(unsupported(&doc, node, format!("arc `{}` crosses pages", arc.id)));
                    }
                }
            }
            out.arcs.push(arc);
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn collect<'a>(
        &mut self,
        doc: &Document<'a>,
        text: &str,
        container: Node<'a, 'a>,
        page: Option<usize>,
        page_count: &mut usize,
        page_of: &mut HashMap<String, Option<usize>>,
        arcs: &mut Vec<(PnmlArc, Option<usize>, Node<'a, 'a>)>,
        top: bool,
    ) -> Result<(), PnmlError> {
        for child in container.children().filter(|c| c.is_element()) {
            match child.tag_name().name() {
                "page" => {
                    let this = *page_count;
                    *page_count += 1;
                    self.collect(doc, text, child, Some(this), page_count, page_of, arcs, false)?;
                }
                "place" | "transition" => {
                    let kind = if child.tag_name().name() == "place" {
                        NodeKind::Place
                    } else {
                        NodeKind::Transition
                    };
                    let node = parse_node(doc, text, child, kind)?;
                    page_of.insert(node.id.clone(), page);
                    self.nodes.push(node);
                }
                "arc" => arcs.push((parse_arc(doc, text, child)?, page, child)),
                "referencePlace" | "referenceTransition" => {
                    return Err(unsupported(doc, child, "reference nodes"));
                }
                "name" if top => {}
                _ if top => self.extras.push(raw(text, child).to_string()),
                _ => {}
            }
        }
        Ok(())
    }

    /// Builds the validated net; canonical order is document order.
    pub fn to_net(&self) -> Result<PetriNet, PnmlError> {
        let mut places = Vec::new();
        let mut transitions = Vec::new();
        let mut marking = Vec::new();
        for n in &self.nodes {
            match n.kind {
                NodeKind::Place => {
                    places.push(Place {
                        id: PlaceId(n.id.clone()),
                        label: n.name.clone(),
                    });
                    if n.marking > 0 {
                        marking.push((n.id.clone(), n.marking));
                    }
                }
                NodeKind::Transition => transitions.push(Transition {
                    id: TransitionId(n.id.clone()),
                    label: n.name.clone(),
                }),
            }
        }
        let node_ids: HashSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        for a in &self.arcs {
            if node_ids.contains(a.id.as_str()) {
                return Err(NetError::DuplicateId(a.id.clone()).into());
            }
        }
        let arcs = self
            .arcs
            .iter()
            .map(|a| ArcSpec::new(a.source.clone(), a.target.clone()))
            .collect();
        Ok(PetriNet::new(places, transitions, arcs, &marking)?)
    }

    pub fn from_net(net: &PetriNet, net_id: &str) -> Self {
        let m = net.initial_marking();
        let mut nodes = Vec::new();
        for (i, p) in net.places().iter().enumerate() {
            nodes.push(PnmlNode {
                kind: NodeKind::Place,
                id: p.id.0.clone(),
                name: p.label.clone(),
                marking: u32::from(m.get(i)),
                extras: Vec::new(),
            });
        }
        for t in net.transitions() {
            nodes.push(PnmlNode {
                kind: NodeKind::Transition,
                id: t.id.0.clone(),
                name: t.label.clone(),
                marking: 0,
                extras: Vec::new(),
            });
        }
        let mut taken: HashSet<String> = nodes.iter().map(|n| n.id.clone()).collect();
        taken.insert(format!("{net_id}-page"));
        let arcs = net
            .arcs()
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let mut id = format!("arc{}", k + 1);
                while taken.contains(&id) {
                    id.push('_');
                }
                taken.insert(id.clone());
                PnmlArc {
                    id,
                    source: net.node_id(a.source).to_string(),
                    target: net.node_id(a.target).to_string(),
                    extras: Vec::new(),
                }
            })
            .collect();
        Self {
            net_id: net_id.to_string(),
            net_type: PT_NET_TYPE.to_string(),
            page_id: Some(format!("{net_id}-page")),
            nodes,
            arcs,
            extras: Vec::new(),
        }
    }

    /// Serializes with fixed attribute order, two-space indentation and LF
    /// line endings. Places are written before transitions, then arcs.
    pub fn write(&self) -> String {
        let mut s = String::new();
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(s, "<pnml xmlns=\"{PNML_NAMESPACE}\">");
        let _ = writeln!(
            s,
            "  <net id=\"{}\" type=\"{}\">",
            escape(&self.net_id),
            escape(&self.net_type)
        );
        let page_id = self.page_id.clone().unwrap_or_else(|| format!("{}-page", self.net_id));
        let _ = writeln!(s, "    <page id=\"{}\">", escape(&page_id));
        let ordered = self
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Place)
            .chain(self.nodes.iter().filter(|n| n.kind == NodeKind::Transition));
        for n in ordered {
            let tag = match n.kind {
                NodeKind::Place => "place",
                NodeKind::Transition => "transition",
            };
            let mut body = String::new();
            if let Some(name) = &n.name {
                let _ = writeln!(
                    body,
                    "        <name>\n          <text>{}</text>\n        </name>",
                    escape(name)
                );
            }
            if n.marking > 0 {
                let _ = writeln!(
                    body,
                    "        <initialMarking>\n          <text>{}</text>\n        </initialMarking>",
                    n.marking
                );
            }
            for e in &n.extras {
                let _ = writeln!(body, "        {e}");
            }
            element(&mut s, tag, &format!("id=\"{}\"", escape(&n.id)), &body);
        }
        for a in &self.arcs {
            let mut body = String::new();
            for e in &a.extras {
                let _ = writeln!(body, "        {e}");
            }
            let attrs = format!(
                "id=\"{}\" source=\"{}\" target=\"{}\"",
                escape(&a.id),
                escape(&a.source),
                escape(&a.target)
            );
            element(&mut s, "arc", &attrs, &body);
        }
        s.push_str("    </page>\n");
        for e in &self.extras {
            let _ = writeln!(s, "    {e}");
        }
        s.push_str("  </net>\n</pnml>\n");
        s
    }
}

fn element(s: &mut String, tag: &str, attrs: &str, body: &str) {
    if body.is_empty() {
        let _ = writeln!(s, "      <{tag} {attrs}/>");
    } else {
        let _ = write!(s, "      <{tag} {attrs}>\n{body}      </{tag}>\n");
    }
}

fn parse_node(doc: &Document, text: &str, node: Node, kind: NodeKind) -> Result<PnmlNode, PnmlError> {
    let id = node
        .attribute("id")
        .ok_or_else(|| malformed(doc, node, "node without id"))?
        .to_string();
    let mut out = PnmlNode {
        kind,
        id,
        name: None,
        marking: 0,
        extras: Vec::new(),
    };
    for c in node.children().filter(|c| c.is_element()) {
        match (kind, c.tag_name().name()) {
            (_, "name") => out.name = label_text(c).filter(|l| !l.is_empty()),
            (NodeKind::Place, "initialMarking") => {
                out.marking = match label_text(c).as_deref() {
                    Some("0") | Some("") | None => 0,
                    Some("1") => 1,
                    Some(other) => {
                        return Err(unsupported(
                            doc,
                            c,
                            format!("initial marking `{other}` on place `{}`", out.id),
                        ))
                    }
                };
            }
            _ => out.extras.push(raw(text, c).to_string()),
        }
    }
    Ok(out)
}

fn parse_arc(doc: &Document, text: &str, node: Node) -> Result<PnmlArc, PnmlError> {
    let attr = |name: &str| {
        node.attribute(name)
            .map(str::to_string)
            .ok_or_else(|| malformed(doc, node, &format!("arc without {name}")))
    };
    let mut arc = PnmlArc {
        id: attr("id")?,
        source: attr("source")?,
        target: attr("target")?,
        extras: Vec::new(),
    };
    for c in node.children().filter(|c| c.is_element()) {
        if c.tag_name().name() == "inscription" {
            match label_text(c).as_deref() {
                Some("1") | None => {}
                Some(other) => {
                    return Err(unsupported(
                        doc,
                        c,
                        format!("arc `{}` has inscription `{other}`", arc.id),
                    ))
                }
            }
        } else {
            arc.extras.push(raw(text, c).to_string());
        }
    }
    Ok(arc)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
    out
}

pub fn parse_pnml(bytes: &[u8]) -> Result<PetriNet, PnmlError> {
    let text = std::str::from_utf8(bytes).map_err(|e| PnmlError::MalformedDocument(e.to_string()))?;
    PnmlDocument::parse(text)?.to_net()
}

pub fn write_pnml(net: &PetriNet) -> Vec<u8> {
    write_pnml_named(net, "net")
}

pub fn write_pnml_named(net: &PetriNet, net_id: &str) -> Vec<u8> {
    PnmlDocument::from_net(net, net_id).write().into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::figure1_net;

    const MINIMAL: &str = r#"<?xml version="1.0"?>
<pnml xmlns="http://www.pnml.org/version-2009/grammar/pnml">
  <net id="n" type="http://www.pnml.org/version-2009/grammar/ptnet">
    <page id="pg">
      <place id="p"><initialMarking><text>1</text></initialMarking></place>
      <place id="q"/>
      <transition id="t"><name><text>go</text></name></transition>
      <arc id="a1" source="p" target="t"/>
      <arc id="a2" source="t" target="q"><inscription><text>1</text></inscription></arc>
    </page>
  </net>
</pnml>"#;

    #[test]
    fn minimal_document() {
        let net = parse_pnml(MINIMAL.as_bytes()).unwrap();
        assert_eq!(net.places().len(), 2);
        assert_eq!(net.transitions()[0].label.as_deref(), Some("go"));
        assert_eq!(net.initial_marking().bit_string(), "10");
        assert_eq!(net.arcs().len(), 2);
    }

    #[test]
    fn figure1_round_trip() {
        let net = figure1_net().into_net();
        let bytes = write_pnml(&net);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text.matches("<place ").count(), 6);
        assert_eq!(text.matches("<transition ").count(), 4);
        assert_eq!(text.matches("<arc ").count(), 10);
        assert!(!text.contains('\r'));
        let back = parse_pnml(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(write_pnml(&back), bytes);
    }

    #[test]
    fn unlabeled_node_has_no_name() {
        let net = crate::net::NetBuilder::new().labeled_place("p", "").build().unwrap();
        let text = String::from_utf8(write_pnml(&net)).unwrap();
        assert!(!text.contains("<name>"));
    }

    #[test]
    fn rejects_weighted_arc() {
        let doc = MINIMAL.replace(
            "<arc id=\"a1\" source=\"p\" target=\"t\"/>",
            "<arc id=\"a1\" source=\"p\" target=\"t\"><inscription><text>2</text></inscription></arc>",
        );
        assert!(matches!(
            parse_pnml(doc.as_bytes()),
            Err(PnmlError::UnsupportedFeature { .. })
        ));
    }

    #[test]
    fn rejects_large_marking() {
        let doc = MINIMAL.replace("<text>1</text></initialMarking>", "<text>3</text></initialMarking>");
        assert!(matches!(
            parse_pnml(doc.as_bytes()),
            Err(PnmlError::UnsupportedFeature { .. })
        ));
    }

    #[test]
    fn rejects_two_nets() {
        let doc = MINIMAL.replace("</pnml>", "<net id=\"m\" type=\"x\"/></pnml>");
        assert!(matches!(
            parse_pnml(doc.as_bytes()),
            Err(PnmlError::UnsupportedFeature { .. })
        ));
    }

    #[test]
    fn rejects_cross_page_arc() {
        let doc = MINIMAL.replace("<arc id=\"a2\"", "</page><page id=\"pg2\"><arc id=\"a2\"");
        assert!(matches!(
            parse_pnml(doc.as_bytes()),
            Err(PnmlError::UnsupportedFeature { .. })
        ));
    }

    #[test]
    fn dangling_and_duplicate() {
        let doc = MINIMAL.replace("target=\"q\"", "target=\"zz\"");
        assert!(matches!(
            parse_pnml(doc.as_bytes()),
            Err(PnmlError::Net(NetError::DanglingArc(..)))
        ));
        let doc = MINIMAL.replace("<place id=\"q\"/>", "<place id=\"p\"/>");
        assert!(matches!(
            parse_pnml(doc.as_bytes()),
            Err(PnmlError::Net(NetError::DuplicateId(_)))
        ));
        assert!(matches!(
            parse_pnml(b"<pnml><net"),
            Err(PnmlError::MalformedDocument(_))
        ));
    }

    #[test]
    fn tool_specific_blobs_survive() {
        let blob = r#"<toolspecific tool="Snoopy" version="2"><pos x="10" y="20"/></toolspecific>"#;
        let graphics = r#"<graphics><position x="1" y="2"/></graphics>"#;
        let doc = MINIMAL
            .replace("<place id=\"q\"/>", &format!("<place id=\"q\">{graphics}</place>"))
            .replace("</page>", &format!("</page>{blob}"));
        let parsed = PnmlDocument::parse(&doc).unwrap();
        assert_eq!(parsed.extras, vec![blob.to_string()]);
        let written = parsed.write();
        assert!(written.contains(blob) && written.contains(graphics));
        let again = PnmlDocument::parse(&written).unwrap();
        assert_eq!(again.write(), written);
        assert_eq!(again.to_net().unwrap(), parsed.to_net().unwrap());
    }
}
