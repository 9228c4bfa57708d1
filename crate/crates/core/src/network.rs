//! Credal networks, functions on their state spaces, and events.
//!
//! Joint states of a set of nodes are ordered lexicographically: nodes in
//! declaration order, the first node most significant, and each node's
//! states in declaration order.

use std::collections::BTreeMap;

use crate::error::{capability, input, Error, Result};
use crate::graph::{Dag, NodeId, NodeSet};
use crate::local::{CredalSet, LinearConstraint};

/// Largest joint state space any table may cover.
pub const MAX_JOINT_STATES: usize = 1 << 24;

/// Values for some of the nodes, keyed by node index.
pub type Assignment = BTreeMap<NodeId, usize>;

/// Number of joint states of `cards`, refusing anything above
/// [`MAX_JOINT_STATES`].
pub fn joint_size(cards: &[usize]) -> Result<usize> {
    let mut n: usize = 1;
    for &c in cards {
        n = n.checked_mul(c).filter(|&n| n <= MAX_JOINT_STATES).ok_or_else(|| {
            Error::Capability(format!("joint state space exceeds {MAX_JOINT_STATES} states"))
        })?;
    }
    Ok(n)
}

/// Mixed-radix index of `digits` (first digit most significant).
pub fn encode(digits: &[usize], cards: &[usize]) -> usize {
    digits.iter().zip(cards).fold(0, |acc, (d, c)| acc * c + d)
}

pub fn decode(mut index: usize, cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for i in (0..cards.len()).rev() {
        out[i] = index % cards[i];
        index /= cards[i];
    }
    out
}

/// Every joint state of `cards` in lexicographic order.
pub fn joint_states(cards: &[usize]) -> Result<Vec<Vec<usize>>> {
    let n = joint_size(cards)?;
    Ok((0..n).map(|i| decode(i, cards)).collect())
}

/// A real function on the joint states of `scope`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<NodeId>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    /// `scope` must be strictly increasing; `values` follows the joint order.
    pub fn new(scope: Vec<NodeId>, cards: Vec<usize>, values: Vec<f64>) -> Result<Factor> {
        if scope.len() != cards.len() || scope.windows(2).any(|w| w[0] >= w[1]) {
            return input("factor scope must be strictly increasing and match its cardinalities");
        }
        if values.len() != joint_size(&cards)? {
            return input(format!("factor has {} values, expected {}", values.len(), joint_size(&cards)?));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return input("factor values must be finite");
        }
        Ok(Factor { scope, cards, values })
    }

    pub fn constant(c: f64) -> Factor {
        Factor { scope: Vec::new(), cards: Vec::new(), values: vec![c] }
    }

    pub fn from_fn(scope: Vec<NodeId>, cards: Vec<usize>, f: impl Fn(&[usize]) -> f64) -> Result<Factor> {
        let values = joint_states(&cards)?.iter().map(|x| f(x)).collect();
        Factor::new(scope, cards, values)
    }

    /// Indicator of one joint state of `scope`.
    pub fn indicator(scope: Vec<NodeId>, cards: Vec<usize>, state: &[usize]) -> Result<Factor> {
        Factor::from_fn(scope, cards, |x| if x == state { 1.0 } else { 0.0 })
    }

    pub fn scope(&self) -> &[NodeId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scope_set(&self) -> NodeSet {
        self.scope.iter().copied().collect()
    }

    /// Value at a full assignment indexed by node.
    pub fn eval(&self, full: &[usize]) -> f64 {
        let mut idx = 0;
        for (s, c) in self.scope.iter().zip(&self.cards) {
            idx = idx * c + full[*s];
        }
        self.values[idx]
    }

    pub fn eval_assignment(&self, x: &Assignment) -> Result<f64> {
        let mut idx = 0;
        for (s, c) in self.scope.iter().zip(&self.cards) {
            let v = *x.get(s).ok_or_else(|| Error::Input(format!("assignment misses node {s}")))?;
            idx = idx * c + v;
        }
        Ok(self.values[idx])
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Factor {
        Factor { scope: self.scope.clone(), cards: self.cards.clone(), values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn neg(&self) -> Factor {
        self.map(|v| -v)
    }

    /// Plugs in the values of `x` for the scope nodes it assigns.
    pub fn restrict(&self, x: &Assignment) -> Factor {
        let keep: Vec<usize> = (0..self.scope.len()).filter(|&i| !x.contains_key(&self.scope[i])).collect();
        let scope: Vec<NodeId> = keep.iter().map(|&i| self.scope[i]).collect();
        let cards: Vec<usize> = keep.iter().map(|&i| self.cards[i]).collect();
        let n: usize = cards.iter().product();
        let mut full = vec![0; self.scope.len()];
        for (i, s) in self.scope.iter().enumerate() {
            if let Some(v) = x.get(s) {
                full[i] = *v;
            }
        }
        let values = (0..n)
            .map(|j| {
                let d = decode(j, &cards);
                for (k, &i) in keep.iter().enumerate() {
                    full[i] = d[k];
                }
                self.values[encode(&full, &self.cards)]
            })
            .collect();
        Factor { scope, cards, values }
    }

    /// Re-expresses the factor on a larger scope, ignoring the new nodes.
    pub fn extend(&self, scope: &[NodeId], cards: &[usize]) -> Result<Factor> {
        let pos: Vec<usize> = self
            .scope
            .iter()
            .map(|s| scope.iter().position(|t| t == s).ok_or_else(|| Error::Input(format!("node {s} missing from scope"))))
            .collect::<Result<_>>()?;
        Factor::from_fn(scope.to_vec(), cards.to_vec(), |x| {
            let idx = pos.iter().zip(&self.cards).fold(0, |acc, (&p, c)| acc * c + x[p]);
            self.values[idx]
        })
    }

    /// Pointwise combination on the union of scopes.
    pub fn combine(&self, other: &Factor, op: impl Fn(f64, f64) -> f64) -> Result<Factor> {
        let mut pairs: BTreeMap<NodeId, usize> = BTreeMap::new();
        for (s, c) in self.scope.iter().zip(&self.cards).chain(other.scope.iter().zip(&other.cards)) {
            if let Some(old) = pairs.insert(*s, *c) {
                if old != *c {
                    return input(format!("node {s} has conflicting cardinalities"));
                }
            }
        }
        let scope: Vec<NodeId> = pairs.keys().copied().collect();
        let cards: Vec<usize> = pairs.values().copied().collect();
        let a = self.extend(&scope, &cards)?;
        let b = other.extend(&scope, &cards)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| op(*x, *y)).collect();
        Ok(Factor { scope, cards, values })
    }

    pub fn product(&self, other: &Factor) -> Result<Factor> {
        self.combine(other, |a, b| a * b)
    }

    pub fn sum(&self, other: &Factor) -> Result<Factor> {
        self.combine(other, |a, b| a + b)
    }

    /// Renames scope nodes through `map` (old index to new index); the new
    /// indices must preserve order.
    pub fn relabel(&self, map: impl Fn(NodeId) -> Option<NodeId>) -> Result<Factor> {
        let scope: Vec<NodeId> = self
            .scope
            .iter()
            .map(|s| map(*s).ok_or_else(|| Error::Input(format!("node {s} has no image"))))
            .collect::<Result<_>>()?;
        Factor::new(scope, self.cards.clone(), self.values.clone())
    }
}

/// A set of joint states of `scope`.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    scope: Vec<NodeId>,
    cards: Vec<usize>,
    members: Vec<bool>,
}

impl Event {
    pub fn new(scope: Vec<NodeId>, cards: Vec<usize>, members: Vec<bool>) -> Result<Event> {
        let f = Factor::new(scope, cards, members.iter().map(|&b| b as u8 as f64).collect())?;
        Ok(Event { scope: f.scope, cards: f.cards, members })
    }

    /// The cylinder event fixing every node of `x`.
    pub fn cylinder(net: &CredalNetwork, x: &Assignment) -> Result<Event> {
        let scope: Vec<NodeId> = x.keys().copied().collect();
        let cards: Vec<usize> = scope.iter().map(|&s| net.card(s)).collect();
        for (s, v) in x {
            if *v >= net.card(*s) {
                return input(format!("state {v} out of range for node {}", net.dag().name(*s)));
            }
        }
        let target: Vec<usize> = x.values().copied().collect();
        let members = joint_states(&cards)?.iter().map(|y| *y == target).collect();
        Ok(Event { scope, cards, members })
    }

    pub fn certain() -> Event {
        Event { scope: Vec::new(), cards: Vec::new(), members: vec![true] }
    }

    pub fn scope(&self) -> &[NodeId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn indicator(&self) -> Factor {
        Factor {
            scope: self.scope.clone(),
            cards: self.cards.clone(),
            values: self.members.iter().map(|&b| b as u8 as f64).collect(),
        }
    }

    pub fn contains(&self, full: &[usize]) -> bool {
        let idx = self.scope.iter().zip(&self.cards).fold(0, |acc, (s, c)| acc * c + full[*s]);
        self.members[idx]
    }

    /// The assignment this event fixes, if it is a single joint state.
    pub fn as_cylinder(&self) -> Option<Assignment> {
        let mut hits = self.members.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i);
        let first = hits.next()?;
        if hits.next().is_some() {
            return None;
        }
        Some(self.scope.iter().copied().zip(decode(first, &self.cards)).collect())
    }

    pub fn relabel(&self, map: impl Fn(NodeId) -> Option<NodeId>) -> Result<Event> {
        let f = self.indicator().relabel(map)?;
        Ok(Event { scope: f.scope, cards: f.cards, members: self.members.clone() })
    }
}

/// A DAG with a state space and a family of local credal sets per node, one
/// for every configuration of the node's parents.
#[derive(Debug, Clone)]
pub struct CredalNetwork {
    dag: Dag,
    states: Vec<Vec<String>>,
    locals: Vec<Vec<CredalSet>>,
    packed: PackedVertices,
}

/// The extreme points of every vertex-given local set in one contiguous
/// array, so recursions along long networks read memory in order.
#[derive(Debug, Clone, Default)]
struct PackedVertices {
    /// First slot of each node.
    start: Vec<usize>,
    /// Offset into `data` and vertex count of each local set; a count of
    /// zero means the set has no vertex list.
    slots: Vec<(usize, usize)>,
    data: Vec<f64>,
}

impl PackedVertices {
    fn new(locals: &[Vec<CredalSet>]) -> PackedVertices {
        let mut p = PackedVertices::default();
        for sets in locals {
            p.start.push(p.slots.len());
            for l in sets {
                let v = l.vertices().unwrap_or_default();
                p.slots.push((p.data.len(), v.len()));
                for x in v {
                    p.data.extend_from_slice(x);
                }
            }
        }
        p
    }
}

impl CredalNetwork {
    /// `locals[s]` lists the local sets of node `s` in the joint order of its
    /// parent configurations.
    pub fn new(dag: Dag, states: Vec<Vec<String>>, locals: Vec<Vec<CredalSet>>) -> Result<CredalNetwork> {
        if states.len() != dag.len() || locals.len() != dag.len() {
            return input("states and locals must cover every node");
        }
        for (s, st) in states.iter().enumerate() {
            if st.is_empty() {
                return input(format!("node {} has no states", dag.name(s)));
            }
            for (i, a) in st.iter().enumerate() {
                if st[..i].contains(a) {
                    return input(format!("node {} repeats state '{a}'", dag.name(s)));
                }
            }
        }
        for s in 0..dag.len() {
            let pc: Vec<usize> = dag.parents(s).iter().map(|&p| states[p].len()).collect();
            let n = joint_size(&pc)?;
            if locals[s].len() != n {
                return input(format!("node {} needs {n} local sets, found {}", dag.name(s), locals[s].len()));
            }
            for l in &locals[s] {
                if l.states() != states[s].len() {
                    return input(format!("local set of node {} has the wrong number of states", dag.name(s)));
                }
            }
        }
        let packed = PackedVertices::new(&locals);
        Ok(CredalNetwork { dag, states, locals, packed })
    }

    /// Builds a network from a plain description, failing with every
    /// validation issue at once.
    pub fn from_spec(spec: &NetworkSpec) -> Result<CredalNetwork> {
        let report = validate(spec);
        if !report.is_valid() {
            return Err(Error::Input(report.to_string()));
        }
        let names: Vec<&str> = spec.nodes.iter().map(|n| n.name.as_str()).collect();
        let edges: Vec<(&str, &str)> = spec.edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let dag = Dag::new(&names, &edges)?;
        let states: Vec<Vec<String>> = spec.nodes.iter().map(|n| n.states.clone()).collect();
        let mut slots: Vec<Vec<Option<CredalSet>>> = (0..dag.len())
            .map(|s| vec![None; dag.parents(s).iter().map(|&p| states[p].len()).product()])
            .collect();
        for l in &spec.locals {
            let s = dag.id(&l.node)?;
            let idx = parent_config_index(&dag, &states, s, &l.parents)?;
            slots[s][idx] = Some(l.build(states[s].len())?);
        }
        let locals = slots.into_iter().map(|v| v.into_iter().map(Option::unwrap).collect()).collect();
        CredalNetwork::new(dag, states, locals)
    }

    pub fn to_spec(&self) -> NetworkSpec {
        let nodes = (0..self.len())
            .map(|s| NodeSpec { name: self.dag.name(s).to_string(), states: self.states[s].clone() })
            .collect();
        let edges = self.dag.edges().iter().map(|&(a, b)| (self.dag.name(a).to_string(), self.dag.name(b).to_string())).collect();
        let mut locals = Vec::new();
        for s in 0..self.len() {
            let pc = self.parent_cards(s);
            for (i, l) in self.locals[s].iter().enumerate() {
                let d = decode(i, &pc);
                let parents = self
                    .dag
                    .parents(s)
                    .iter()
                    .zip(&d)
                    .map(|(&p, &v)| (self.dag.name(p).to_string(), self.states[p][v].clone()))
                    .collect();
                let body = match (l.given_constraints(), l.vertices()) {
                    (Some(c), _) => LocalBody::Constraints(c.to_vec()),
                    (None, Some(v)) => LocalBody::Vertices(v.to_vec()),
                    (None, None) => unreachable!("a local set has vertices or constraints"),
                };
                locals.push(LocalSpec { node: self.dag.name(s).to_string(), parents, body });
            }
        }
        NetworkSpec { nodes, edges, locals }
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn len(&self) -> usize {
        self.dag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dag.is_empty()
    }

    pub fn card(&self, s: NodeId) -> usize {
        self.states[s].len()
    }

    pub fn cards(&self, scope: &[NodeId]) -> Vec<usize> {
        scope.iter().map(|&s| self.card(s)).collect()
    }

    pub fn all_cards(&self) -> Vec<usize> {
        (0..self.len()).map(|s| self.card(s)).collect()
    }

    pub fn states(&self, s: NodeId) -> &[String] {
        &self.states[s]
    }

    pub fn state_index(&self, s: NodeId, state: &str) -> Result<usize> {
        self.states[s]
            .iter()
            .position(|x| x == state)
            .ok_or_else(|| Error::Input(format!("node {} has no state '{state}'", self.dag.name(s))))
    }

    pub fn parent_cards(&self, s: NodeId) -> Vec<usize> {
        self.cards(self.dag.parents(s))
    }

    /// Every local set of `s`, in parent-configuration order.
    pub fn locals(&self, s: NodeId) -> &[CredalSet] {
        &self.locals[s]
    }

    /// Lower expectation of `g` under the local set of `s` for the parent
    /// configuration with joint index `ctx`.
    pub fn local_lower(&self, s: NodeId, ctx: usize, g: &[f64]) -> f64 {
        let (offset, count) = self.packed.slots[self.packed.start[s] + ctx];
        if count == 0 {
            return self.locals[s][ctx].lower(g);
        }
        let k = g.len();
        self.packed.data[offset..offset + count * k]
            .chunks_exact(k)
            .map(|p| p.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// The local set selected by the parent values in `full`, a value for
    /// every node indexed by node.
    pub fn local_at(&self, s: NodeId, full: &[usize]) -> &CredalSet {
        let mut idx = 0;
        for &p in self.dag.parents(s) {
            idx = idx * self.card(p) + full[p];
        }
        &self.locals[s][idx]
    }

    pub fn local_given(&self, s: NodeId, x: &Assignment) -> Result<&CredalSet> {
        let mut idx = 0;
        for &p in self.dag.parents(s) {
            let v = x.get(&p).ok_or_else(|| Error::Input(format!("parent {} of {} is not fixed", self.dag.name(p), self.dag.name(s))))?;
            idx = idx * self.card(p) + v;
        }
        Ok(&self.locals[s][idx])
    }

    /// Parses `name=state` pairs into an assignment.
    pub fn assignment<S: AsRef<str>>(&self, pairs: &[(S, S)]) -> Result<Assignment> {
        let mut out = Assignment::new();
        for (n, v) in pairs {
            let s = self.dag.id(n.as_ref())?;
            let i = self.state_index(s, v.as_ref())?;
            if out.insert(s, i).is_some() {
                return input(format!("node {} assigned twice", n.as_ref()));
            }
        }
        Ok(out)
    }

    pub fn joint_size(&self) -> Result<usize> {
        joint_size(&self.all_cards())
    }

    /// The network on `k`, with every parent outside `k` fixed by `fixed`.
    /// Nodes keep their names and relative order; the second value maps each
    /// new index to the old one.
    pub fn sub_network(&self, k: &NodeSet, fixed: &Assignment) -> Result<(CredalNetwork, Vec<NodeId>)> {
        let old: Vec<NodeId> = k.iter().copied().collect();
        if old.iter().any(|&s| s >= self.len()) {
            return input("sub-network node out of range");
        }
        let mut new_of = vec![usize::MAX; self.len()];
        for (i, &s) in old.iter().enumerate() {
            new_of[s] = i;
        }
        let names: Vec<String> = old.iter().map(|&s| self.dag.name(s).to_string()).collect();
        let mut edges = Vec::new();
        for (i, &s) in old.iter().enumerate() {
            for &p in self.dag.parents(s) {
                if k.contains(&p) {
                    edges.push((new_of[p], i));
                } else if !fixed.contains_key(&p) {
                    return input(format!("parent {} of {} is neither in the sub-network nor fixed", self.dag.name(p), self.dag.name(s)));
                }
            }
        }
        let dag = Dag::from_indices(names, &edges)?;
        let states: Vec<Vec<String>> = old.iter().map(|&s| self.states[s].clone()).collect();
        let mut locals = Vec::with_capacity(old.len());
        for &s in &old {
            let inner: Vec<NodeId> = self.dag.parents(s).iter().copied().filter(|p| k.contains(p)).collect();
            let inner_cards = self.cards(&inner);
            let mut sets = Vec::new();
            let mut x = fixed.clone();
            for d in joint_states(&inner_cards)? {
                for (p, v) in inner.iter().zip(&d) {
                    x.insert(*p, *v);
                }
                sets.push(self.local_given(s, &x)?.clone());
            }
            locals.push(sets);
        }
        Ok((CredalNetwork::new(dag, states, locals)?, old))
    }
}

/// Index of a parent configuration given by name.
fn parent_config_index(dag: &Dag, states: &[Vec<String>], s: NodeId, parents: &[(String, String)]) -> Result<usize> {
    let ps = dag.parents(s);
    if parents.len() != ps.len() {
        return input(format!("local set for {} must fix its {} parents", dag.name(s), ps.len()));
    }
    let mut idx = 0;
    for &p in ps {
        let name = dag.name(p);
        let Some((_, v)) = parents.iter().find(|(n, _)| n == name) else {
            return input(format!("local set for {} does not fix parent {name}", dag.name(s)));
        };
        let vi = states[p].iter().position(|x| x == v).ok_or_else(|| Error::Input(format!("node {name} has no state '{v}'")))?;
        idx = idx * states[p].len() + vi;
    }
    Ok(idx)
}

/// A plain, unchecked description of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<(String, String)>,
    pub locals: Vec<LocalSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSpec {
    pub node: String,
    /// Parent name and state for every parent of `node`.
    pub parents: Vec<(String, String)>,
    pub body: LocalBody,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalBody {
    Vertices(Vec<Vec<f64>>),
    Constraints(Vec<LinearConstraint>),
}

impl LocalSpec {
    fn build(&self, k: usize) -> Result<CredalSet> {
        match &self.body {
            LocalBody::Vertices(v) => CredalSet::from_vertices(v.clone()),
            LocalBody::Constraints(c) => CredalSet::from_constraints(k, c.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    Acyclicity,
    UnknownNode,
    DuplicateNode,
    StateSpace,
    MissingLocal,
    DuplicateLocal,
    LocalSet,
}

impl IssueKind {
    pub fn label(self) -> &'static str {
        match self {
            IssueKind::Acyclicity => "acyclicity",
            IssueKind::UnknownNode => "unknown-node",
            IssueKind::DuplicateNode => "duplicate-node",
            IssueKind::StateSpace => "state-space",
            IssueKind::MissingLocal => "missing-local",
            IssueKind::DuplicateLocal => "duplicate-local",
            IssueKind::LocalSet => "local-set",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub kind: IssueKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, kind: IssueKind, message: impl Into<String>) {
        self.issues.push(Issue { kind, message: message.into() });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let lines: Vec<String> = self.issues.iter().map(|i| format!("{}: {}", i.kind.label(), i.message)).collect();
        write!(f, "{}", lines.join("; "))
    }
}

/// Checks every invariant a network must satisfy and lists each violation.
pub fn validate(spec: &NetworkSpec) -> ValidationReport {
    let mut r = ValidationReport::default();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, n) in spec.nodes.iter().enumerate() {
        if index.insert(n.name.as_str(), i).is_some() {
            r.push(IssueKind::DuplicateNode, format!("node '{}' declared twice", n.name));
        }
        if n.states.is_empty() {
            r.push(IssueKind::StateSpace, format!("node '{}' has no states", n.name));
        }
        for (j, a) in n.states.iter().enumerate() {
            if n.states[..j].contains(a) {
                r.push(IssueKind::StateSpace, format!("node '{}' repeats state '{a}'", n.name));
            }
        }
    }
    let n = spec.nodes.len();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in &spec.edges {
        match (index.get(a.as_str()), index.get(b.as_str())) {
            (Some(&ia), Some(&ib)) => {
                if !parents[ib].contains(&ia) {
                    parents[ib].push(ia);
                    children[ia].push(ib);
                }
            }
            _ => {
                for x in [a, b] {
                    if !index.contains_key(x.as_str()) {
                        r.push(IssueKind::UnknownNode, format!("edge mentions unknown node '{x}'"));
                    }
                }
            }
        }
    }
    let cycle = crate::graph::find_cycle(&children);
    if !cycle.is_empty() {
        let names: Vec<&str> = cycle.iter().map(|&i| spec.nodes[i].name.as_str()).collect();
        r.push(IssueKind::Acyclicity, format!("cycle {}", names.join(" -> ")));
    }
    for p in parents.iter_mut() {
        p.sort_unstable();
    }
    let mut seen: BTreeMap<(usize, usize), ()> = BTreeMap::new();
    for l in &spec.locals {
        let Some(&s) = index.get(l.node.as_str()) else {
            r.push(IssueKind::UnknownNode, format!("local set for unknown node '{}'", l.node));
            continue;
        };
        let k = spec.nodes[s].states.len();
        let mut idx = 0;
        let mut ok = l.parents.len() == parents[s].len();
        for &p in &parents[s] {
            let pn = &spec.nodes[p];
            match l.parents.iter().find(|(name, _)| *name == pn.name) {
                Some((_, v)) => match pn.states.iter().position(|x| x == v) {
                    Some(vi) => idx = idx * pn.states.len() + vi,
                    None => ok = false,
                },
                None => ok = false,
            }
        }
        if !ok {
            r.push(IssueKind::UnknownNode, format!("local set for '{}' has a bad parent configuration", l.node));
            continue;
        }
        if seen.insert((s, idx), ()).is_some() {
            r.push(IssueKind::DuplicateLocal, format!("local set for '{}' given twice for one parent configuration", l.node));
            continue;
        }
        if let Err(e) = l.build(k) {
            r.push(IssueKind::LocalSet, format!("local set for '{}': {e}", l.node));
        }
    }
    for s in 0..n {
        let configs: usize = parents[s].iter().map(|&p| spec.nodes[p].states.len().max(1)).product();
        let have = seen.keys().filter(|(t, _)| *t == s).count();
        if have < configs {
            r.push(IssueKind::MissingLocal, format!("node '{}' has {have} of {configs} local sets", spec.nodes[s].name));
        }
    }
    r
}

/// Refuses problems whose joint space exceeds `limit` states.
pub fn require_joint_at_most(net: &CredalNetwork, limit: usize, what: &str) -> Result<usize> {
    let n = net.joint_size()?;
    if n > limit {
        return capability(format!("{what} needs at most {limit} joint states, network has {n}"));
    }
    Ok(n)
}
