//! Three-level body-part ontology backing the WHERE element.
//!
//! A code is three decimal digits `d1 d2 d3`: `d100` is a body part,
//! `d1d20` a small part inside it, and `d1d2d3` a mini part inside that.
//! A zero digit means "unspecified at this granularity", so `120` is the
//! eye as a whole and `123` the iris.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One node as stored in `ontology.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyNode {
    #[serde(with = "crate::codes::padded3")]
    pub code: u32,
    pub label: String,
    #[serde(default, with = "crate::codes::padded3_opt")]
    pub parent: Option<u32>,
}

/// Nested view used by `/v1/ontology`.
#[derive(Debug, Clone, Serialize)]
pub struct OntologyTree {
    #[serde(serialize_with = "crate::codes::padded3::serialize")]
    pub code: u32,
    pub label: String,
    pub children: Vec<OntologyTree>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BodyOntology {
    nodes: BTreeMap<u32, OntologyNode>,
}

/// Level of a well-formed code: 1 (part), 2 (small part) or 3 (mini part).
pub fn level(code: u32) -> Option<u8> {
    if !(100..1000).contains(&code) {
        return None;
    }
    let (d2, d3) = ((code / 10) % 10, code % 10);
    match (d2, d3) {
        (0, 0) => Some(1),
        (_, 0) => Some(2),
        (0, _) => None,
        _ => Some(3),
    }
}

/// Parent code obtained by zeroing the lowest nonzero digit.
pub fn parent_code(code: u32) -> Option<u32> {
    match level(code)? {
        1 => None,
        2 => Some(code - code % 100),
        _ => Some(code - code % 10),
    }
}

impl BodyOntology {
    pub fn new(nodes: Vec<OntologyNode>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for node in nodes {
            let ctx = format!("ontology node {:03}", node.code);
            if level(node.code).is_none() {
                return Err(Error::validation(ctx, "malformed three-level code"));
            }
            if node.parent != parent_code(node.code) {
                return Err(Error::validation(
                    ctx,
                    format!(
                        "declared parent {:?} differs from derived parent {:?}",
                        node.parent,
                        parent_code(node.code)
                    ),
                ));
            }
            if node.label.trim().is_empty() {
                return Err(Error::validation(ctx, "empty label"));
            }
            if map.insert(node.code, node).is_some() {
                return Err(Error::validation(ctx, "duplicate code"));
            }
        }
        if map.is_empty() {
            return Err(Error::validation("ontology", "no nodes"));
        }
        let mut sibling_labels = HashSet::new();
        for node in map.values() {
            if let Some(parent) = node.parent {
                if !map.contains_key(&parent) {
                    return Err(Error::validation(
                        format!("ontology node {:03}", node.code),
                        format!("parent {parent:03} does not exist"),
                    ));
                }
            }
            if !sibling_labels.insert((node.parent, node.label.as_str())) {
                return Err(Error::validation(
                    format!("ontology node {:03}", node.code),
                    format!("label {:?} repeated among siblings", node.label),
                ));
            }
        }
        Ok(BodyOntology { nodes: map })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let nodes: Vec<OntologyNode> =
            serde_json::from_str(text).map_err(|e| Error::format("ontology.json", e))?;
        Self::new(nodes)
    }

    pub fn contains(&self, code: u32) -> bool {
        self.nodes.contains_key(&code)
    }

    pub fn node(&self, code: u32) -> Option<&OntologyNode> {
        self.nodes.get(&code)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// All codes in ascending order.
    pub fn codes(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &OntologyNode> {
        self.nodes.values()
    }

    pub fn children(&self, code: Option<u32>) -> impl Iterator<Item = &OntologyNode> {
        self.nodes.values().filter(move |n| n.parent == code)
    }

    /// Resolve a root-to-node label chain such as `["head", "eye", "iris"]`.
    pub fn body_code<S: AsRef<str>>(&self, path: &[S]) -> Result<u32> {
        if path.is_empty() || path.len() > 3 {
            return Err(Error::validation(
                "body path",
                format!("expected 1 to 3 labels, got {}", path.len()),
            ));
        }
        let mut current = None;
        for (depth, label) in path.iter().enumerate() {
            let label = label.as_ref();
            let found = self
                .children(current)
                .find(|n| n.label == label)
                .ok_or_else(|| Error::NotFound {
                    what: "body part",
                    detail: format!("no {label:?} at level {}", depth + 1),
                })?;
            current = Some(found.code);
        }
        Ok(current.expect("path is non-empty"))
    }

    /// Labels from the root part down to `code`.
    pub fn path(&self, code: u32) -> Option<Vec<&str>> {
        let mut labels = Vec::new();
        let mut cursor = Some(code);
        while let Some(c) = cursor {
            let node = self.nodes.get(&c)?;
            labels.push(node.label.as_str());
            cursor = node.parent;
        }
        labels.reverse();
        Some(labels)
    }

    /// Number of edges on the tree path between two codes, `None` when they
    /// sit under different top-level parts (the tree has no common root).
    pub fn tree_hops(&self, a: u32, b: u32) -> Option<u32> {
        if !self.contains(a) || !self.contains(b) || a / 100 != b / 100 {
            return None;
        }
        let ancestors = |c: u32| {
            let mut chain = vec![c];
            let mut cursor = c;
            while let Some(p) = parent_code(cursor) {
                chain.push(p);
                cursor = p;
            }
            chain
        };
        let (up_a, up_b) = (ancestors(a), ancestors(b));
        for (i, x) in up_a.iter().enumerate() {
            if let Some(j) = up_b.iter().position(|y| y == x) {
                return Some((i + j) as u32);
            }
        }
        None
    }

    pub fn tree(&self) -> Vec<OntologyTree> {
        fn build(ontology: &BodyOntology, parent: Option<u32>) -> Vec<OntologyTree> {
            ontology
                .children(parent)
                .map(|n| OntologyTree {
                    code: n.code,
                    label: n.label.clone(),
                    children: build(ontology, Some(n.code)),
                })
                .collect()
        }
        build(self, None)
    }

    pub fn to_nodes(&self) -> Vec<OntologyNode> {
        self.nodes.values().cloned().collect()
    }
}
