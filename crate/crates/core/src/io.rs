//! JSON network and query files.
//!
//! Numbers are written as strings holding a decimal or an exact fraction
//! `"a/b"`; plain JSON numbers are accepted on input. Serialisation is
//! canonical: a parsed file written back out is byte-identical to any other
//! canonical rendering of the same content.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{input, Error, Result};
use crate::graph::NodeId;
use crate::local::LinearConstraint;
use crate::network::{joint_size, Assignment, CredalNetwork, Event, Factor, LocalBody, LocalSpec, NetworkSpec, NodeSpec};

/// A number as written in a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Num(String);

impl Num {
    pub fn from_f64(x: f64) -> Num {
        Num(format!("{x}"))
    }

    pub fn text(&self) -> &str {
        &self.0
    }

    pub fn value(&self) -> Result<f64> {
        parse_number(&self.0)
    }
}

/// Parses a decimal or an `a/b` fraction of integers.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Input(format!("'{s}' is not a number"));
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: i64 = a.trim().parse().map_err(|_| bad())?;
            let b: i64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0 {
                return input(format!("'{s}' divides by zero"));
            }
            a as f64 / b as f64
        }
        None => s.parse::<f64>().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Num, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string holding a decimal or a fraction")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
                parse_number(v).map_err(E::custom)?;
                Ok(Num(v.trim().to_string()))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
                Ok(Num::from_f64(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
                Ok(Num(v.to_string()))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
                Ok(Num(v.to_string()))
            }
        }
        d.deserialize_any(V)
    }
}

fn values(v: &[Num]) -> Result<Vec<f64>> {
    v.iter().map(Num::value).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub name: String,
    pub states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintFile {
    pub alpha: Vec<Num>,
    pub beta: Num,
}

/// The local set of one node for one parent configuration, given by
/// exactly one of `vertices` and `constraints`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalFile {
    pub node: String,
    #[serde(default)]
    pub parents: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<Num>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<ConstraintFile>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub nodes: Vec<NodeFile>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    pub locals: Vec<LocalFile>,
}

impl NetworkFile {
    pub fn parse(text: &str) -> Result<NetworkFile> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("network file: {e}")))
    }

    /// Canonical rendering, ending in a newline.
    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serialises");
        s.push('\n');
        s
    }

    pub fn to_spec(&self) -> Result<NetworkSpec> {
        let nodes = self.nodes.iter().map(|n| NodeSpec { name: n.name.clone(), states: n.states.clone() }).collect();
        let mut locals = Vec::with_capacity(self.locals.len());
        for l in &self.locals {
            let body = match (&l.vertices, &l.constraints) {
                (Some(v), None) => LocalBody::Vertices(v.iter().map(|p| values(p)).collect::<Result<_>>()?),
                (None, Some(c)) => LocalBody::Constraints(
                    c.iter()
                        .map(|c| Ok(LinearConstraint { alpha: values(&c.alpha)?, beta: c.beta.value()? }))
                        .collect::<Result<_>>()?,
                ),
                _ => return input(format!("local set for '{}' needs exactly one of vertices and constraints", l.node)),
            };
            let parents = l.parents.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
            locals.push(LocalSpec { node: l.node.clone(), parents, body });
        }
        Ok(NetworkSpec { nodes, edges: self.edges.clone(), locals })
    }

    pub fn to_network(&self) -> Result<CredalNetwork> {
        CredalNetwork::from_spec(&self.to_spec()?)
    }

    pub fn from_network(net: &CredalNetwork) -> NetworkFile {
        let spec = net.to_spec();
        let nums = |v: &[f64]| v.iter().map(|&x| Num::from_f64(x)).collect::<Vec<_>>();
        NetworkFile {
            nodes: spec.nodes.iter().map(|n| NodeFile { name: n.name.clone(), states: n.states.clone() }).collect(),
            edges: spec.edges.clone(),
            locals: spec
                .locals
                .iter()
                .map(|l| {
                    let (vertices, constraints) = match &l.body {
                        LocalBody::Vertices(v) => (Some(v.iter().map(|p| nums(p)).collect()), None),
                        LocalBody::Constraints(c) => (
                            None,
                            Some(c.iter().map(|c| ConstraintFile { alpha: nums(&c.alpha), beta: Num::from_f64(c.beta) }).collect()),
                        ),
                    };
                    LocalFile { node: l.node.clone(), parents: l.parents.iter().cloned().collect(), vertices, constraints }
                })
                .collect(),
        }
    }
}

/// An event: either a cylinder fixing some nodes, or an explicit list of
/// joint states of `scope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventFile {
    Assignment { assignment: BTreeMap<String, String> },
    States { scope: Vec<String>, states: Vec<Vec<String>> },
}

impl EventFile {
    pub fn to_event(&self, net: &CredalNetwork) -> Result<Event> {
        match self {
            EventFile::Assignment { assignment } => {
                let pairs: Vec<(&str, &str)> = assignment.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                Event::cylinder(net, &net.assignment(&pairs)?)
            }
            EventFile::States { scope, states } => {
                let (ids, cards) = resolve_scope(net, scope)?;
                let mut members = vec![false; joint_size(&cards)?];
                for st in states {
                    members[joint_index(net, &ids, scope, st)?] = true;
                }
                Event::new(ids, cards, members)
            }
        }
    }
}

/// Node ids of `scope` in network order, with their cardinalities.
fn resolve_scope(net: &CredalNetwork, scope: &[String]) -> Result<(Vec<NodeId>, Vec<usize>)> {
    let mut ids = Vec::with_capacity(scope.len());
    for name in scope {
        let s = net.dag().id(name)?;
        if ids.contains(&s) {
            return input(format!("node '{name}' repeated in a scope"));
        }
        ids.push(s);
    }
    ids.sort_unstable();
    let cards = net.cards(&ids);
    Ok((ids, cards))
}

/// Index, in the joint order of `ids`, of the states `st` listed in the
/// order of `names`.
fn joint_index(net: &CredalNetwork, ids: &[NodeId], names: &[String], st: &[String]) -> Result<usize> {
    if st.len() != names.len() {
        return input("a joint state must give one state per scope node");
    }
    let mut x = Assignment::new();
    for (name, v) in names.iter().zip(st) {
        let s = net.dag().id(name)?;
        x.insert(s, net.state_index(s, v)?);
    }
    Ok(ids.iter().fold(0, |acc, s| acc * net.card(*s) + x[s]))
}

/// A function given as a table over `scope`, or the indicator of an event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetFile {
    Table { scope: Vec<String>, table: Vec<Num> },
    Indicator { indicator: EventFile },
}

impl TargetFile {
    /// The table lists values in the joint order of `scope` as written,
    /// first node most significant.
    pub fn to_factor(&self, net: &CredalNetwork) -> Result<Factor> {
        match self {
            TargetFile::Indicator { indicator } => Ok(indicator.to_event(net)?.indicator()),
            TargetFile::Table { scope, table } => {
                let (ids, cards) = resolve_scope(net, scope)?;
                let written: Vec<usize> = scope.iter().map(|n| net.card(net.dag().id(n).expect("resolved"))).collect();
                let n = joint_size(&cards)?;
                if table.len() != n {
                    return input(format!("table has {} entries, scope has {n} joint states", table.len()));
                }
                let vals = values(table)?;
                let pos: Vec<usize> = scope.iter().map(|name| ids.iter().position(|&s| net.dag().name(s) == name).expect("resolved")).collect();
                Factor::from_fn(ids.clone(), cards, |x| {
                    let digits: Vec<usize> = pos.iter().map(|&p| x[p]).collect();
                    vals[crate::network::encode(&digits, &written)]
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleFile {
    Natural,
    Regular,
    Unconditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Auto,
    Lp,
    Decompose,
    Chain,
    Hmm,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Lp => "lp",
            Method::Decompose => "decompose",
            Method::Chain => "chain",
            Method::Hmm => "hmm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryFile {
    pub target: TargetFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<EventFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleFile>,
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Num>,
}

impl QueryFile {
    pub fn parse(text: &str) -> Result<QueryFile> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("query file: {e}")))
    }

    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serialises");
        s.push('\n');
        s
    }
}
