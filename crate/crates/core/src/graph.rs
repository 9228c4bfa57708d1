//! Directed acyclic graphs, their node relations, closed sets and the two
//! separation criteria (asymmetric AD-separation and classical d-separation).
//!
//! Nodes are addressed by their declaration index. Every set of nodes is a
//! [`NodeSet`], which iterates in declaration order.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::error::{capability, input, Result};

pub type NodeId = usize;
pub type NodeSet = BTreeSet<NodeId>;

/// Which blocking rules a path test applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Separation {
    /// Blocking by a conditioned node only when the path leaves it forwards.
    Asymmetric,
    /// Classical d-separation: any conditioned non-collider blocks.
    Classical,
}

/// The relations of a single node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relations {
    pub parents: NodeSet,
    pub children: NodeSet,
    pub descendants: NodeSet,
    pub non_descendants: NodeSet,
    pub non_parent_non_descendants: NodeSet,
}

/// The relations of a set of nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetRelations {
    pub parents: NodeSet,
    pub descendants: NodeSet,
    pub non_descendants: NodeSet,
    pub non_parent_non_descendants: NodeSet,
}

#[derive(Debug, Clone)]
pub struct Dag {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
}

impl Dag {
    /// Builds a DAG, rejecting duplicate names, unknown endpoints, repeated
    /// edges and cycles.
    pub fn new<S: AsRef<str>>(names: &[S], edges: &[(S, S)]) -> Result<Dag> {
        let mut index = HashMap::new();
        let names: Vec<String> = names.iter().map(|n| n.as_ref().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return input("empty node name");
            }
            if index.insert(n.clone(), i).is_some() {
                return input(format!("duplicate node '{n}'"));
            }
        }
        let mut ids = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let (a, b) = (a.as_ref(), b.as_ref());
            let ia = *index.get(a).ok_or_else(|| unknown(a))?;
            let ib = *index.get(b).ok_or_else(|| unknown(b))?;
            ids.push((ia, ib));
        }
        Dag::from_indices(names, &ids)
    }

    /// Builds a DAG from index pairs; `names` fixes the declaration order.
    pub fn from_indices(names: Vec<String>, edges: &[(NodeId, NodeId)]) -> Result<Dag> {
        let n = names.len();
        let index = names.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return input(format!("edge ({a}, {b}) out of range"));
            }
            if parents[b].contains(&a) {
                return input(format!("repeated edge {} -> {}", names[a], names[b]));
            }
            parents[b].push(a);
            children[a].push(b);
        }
        for v in parents.iter_mut().chain(children.iter_mut()) {
            v.sort_unstable();
        }
        let topo = match topological_order(&parents, &children) {
            Some(t) => t,
            None => return input(format!("graph has a cycle through {}", names[find_cycle(&children)[0]])),
        };
        Ok(Dag { names, index, parents, children, topo })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, s: NodeId) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, name: &str) -> Result<NodeId> {
        self.index.get(name).copied().ok_or_else(|| unknown(name))
    }

    pub fn ids<S: AsRef<str>>(&self, names: &[S]) -> Result<NodeSet> {
        names.iter().map(|n| self.id(n.as_ref())).collect()
    }

    pub fn all(&self) -> NodeSet {
        (0..self.len()).collect()
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (b, ps) in self.parents.iter().enumerate() {
            for &a in ps {
                out.push((a, b));
            }
        }
        out.sort_unstable();
        out
    }

    /// A topological order that breaks ties by declaration index.
    pub fn topological(&self) -> &[NodeId] {
        &self.topo
    }

    pub fn parents(&self, s: NodeId) -> &[NodeId] {
        &self.parents[s]
    }

    pub fn children(&self, s: NodeId) -> &[NodeId] {
        &self.children[s]
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.parents[b].binary_search(&a).is_ok()
    }

    fn reach(&self, start: impl IntoIterator<Item = NodeId>, up: bool) -> NodeSet {
        let mut seen = NodeSet::new();
        let mut queue: VecDeque<NodeId> = start.into_iter().collect();
        while let Some(v) = queue.pop_front() {
            let next = if up { &self.parents[v] } else { &self.children[v] };
            for &w in next {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Strict descendants of `s`.
    pub fn descendants(&self, s: NodeId) -> NodeSet {
        self.reach([s], false)
    }

    /// Strict ancestors of `s`.
    pub fn ancestors(&self, s: NodeId) -> NodeSet {
        self.reach([s], true)
    }

    /// `K` together with all its ancestors.
    pub fn ancestral_closure(&self, k: &NodeSet) -> NodeSet {
        let mut out = self.reach(k.iter().copied(), true);
        out.extend(k.iter().copied());
        out
    }

    /// `s ⊑ t`: `s` equals `t` or is an ancestor of it.
    pub fn precedes_eq(&self, s: NodeId, t: NodeId) -> bool {
        s == t || self.strictly_precedes(s, t)
    }

    pub fn strictly_precedes(&self, s: NodeId, t: NodeId) -> bool {
        self.descendants(s).contains(&t)
    }

    pub fn relations(&self, s: NodeId) -> Relations {
        let parents: NodeSet = self.parents[s].iter().copied().collect();
        let children: NodeSet = self.children[s].iter().copied().collect();
        let descendants = self.descendants(s);
        let non_descendants: NodeSet =
            (0..self.len()).filter(|v| *v != s && !descendants.contains(v)).collect();
        let non_parent_non_descendants = non_descendants.difference(&parents).copied().collect();
        Relations { parents, children, descendants, non_descendants, non_parent_non_descendants }
    }

    pub fn set_parents(&self, k: &NodeSet) -> NodeSet {
        k.iter()
            .flat_map(|&s| self.parents[s].iter().copied())
            .filter(|p| !k.contains(p))
            .collect()
    }

    pub fn set_descendants(&self, k: &NodeSet) -> NodeSet {
        self.reach(k.iter().copied(), false).into_iter().filter(|v| !k.contains(v)).collect()
    }

    pub fn set_relations(&self, k: &NodeSet) -> SetRelations {
        let parents = self.set_parents(k);
        let descendants = self.set_descendants(k);
        let non_descendants: NodeSet =
            (0..self.len()).filter(|v| !k.contains(v) && !descendants.contains(v)).collect();
        let non_parent_non_descendants = non_descendants.difference(&parents).copied().collect();
        SetRelations { parents, descendants, non_descendants, non_parent_non_descendants }
    }

    /// A set is closed when every node lying on a directed path between two
    /// of its members is itself a member.
    pub fn is_closed(&self, k: &NodeSet) -> bool {
        let below = self.reach(k.iter().copied(), false);
        let above = self.reach(k.iter().copied(), true);
        below.iter().all(|v| k.contains(v) || !above.contains(v))
    }

    /// The smallest closed superset of `k`.
    pub fn closure(&self, k: &NodeSet) -> NodeSet {
        let below = self.reach(k.iter().copied(), false);
        let above = self.reach(k.iter().copied(), true);
        let mut out = k.clone();
        out.extend(below.intersection(&above).copied());
        out
    }

    /// Whether `path` is blocked by `c`. The path must be a sequence of
    /// distinct nodes, consecutive ones adjacent in either direction.
    pub fn path_blocked(&self, path: &[NodeId], c: &NodeSet, mode: Separation) -> Result<bool> {
        if path.is_empty() {
            return input("empty path");
        }
        let mut seen = NodeSet::new();
        for w in path.windows(2) {
            if !self.has_edge(w[0], w[1]) && !self.has_edge(w[1], w[0]) {
                return input(format!("{} and {} are not adjacent", self.names[w[0]], self.names[w[1]]));
            }
        }
        for &v in path {
            if v >= self.len() || !seen.insert(v) {
                return input("path repeats a node or leaves the graph");
            }
        }
        Ok(self.blocked_unchecked(path, c, mode, &self.conditioned_ancestry(c)))
    }

    /// Nodes that are in `c` or have a descendant in `c`.
    fn conditioned_ancestry(&self, c: &NodeSet) -> Vec<bool> {
        let mut out = vec![false; self.len()];
        for v in self.ancestral_closure(c) {
            out[v] = true;
        }
        out
    }

    fn blocked_unchecked(&self, path: &[NodeId], c: &NodeSet, mode: Separation, anc_c: &[bool]) -> bool {
        let n = path.len();
        if c.contains(&path[0]) || c.contains(&path[n - 1]) {
            return true;
        }
        for i in 1..n.saturating_sub(1) {
            let (prev, v, next) = (path[i - 1], path[i], path[i + 1]);
            let forward = self.has_edge(v, next);
            let from_prev = self.has_edge(prev, v);
            let collider = from_prev && !forward;
            if collider {
                if !anc_c[v] {
                    return true;
                }
            } else if c.contains(&v) {
                let backwards_chain = !from_prev && !forward;
                if mode == Separation::Classical || !backwards_chain {
                    return true;
                }
            }
        }
        false
    }

    /// Every simple path from a node of `from` to a node of `to`.
    /// Exponential; meant for small graphs and cross-checks.
    pub fn simple_paths(&self, from: &NodeSet, to: &NodeSet) -> Vec<Vec<NodeId>> {
        let mut out = Vec::new();
        let mut on_path = vec![false; self.len()];
        for &s in from {
            let mut path = vec![s];
            on_path[s] = true;
            self.extend_paths(&mut path, &mut on_path, to, &mut out);
            on_path[s] = false;
        }
        out
    }

    fn extend_paths(&self, path: &mut Vec<NodeId>, on_path: &mut [bool], to: &NodeSet, out: &mut Vec<Vec<NodeId>>) {
        let v = *path.last().unwrap();
        if to.contains(&v) {
            out.push(path.clone());
        }
        for &w in self.parents[v].iter().chain(self.children[v].iter()) {
            if !on_path[w] {
                on_path[w] = true;
                path.push(w);
                self.extend_paths(path, on_path, to, out);
                path.pop();
                on_path[w] = false;
            }
        }
    }

    /// Separation decided by enumerating every simple path.
    pub fn separated_by_paths(&self, i: &NodeSet, s: &NodeSet, c: &NodeSet, mode: Separation) -> bool {
        let anc_c = self.conditioned_ancestry(c);
        self.simple_paths(i, s).iter().all(|p| self.blocked_unchecked(p, c, mode, &anc_c))
    }

    /// `AD(I, S | C)`: every path from `I` to `S` is blocked by `C`.
    pub fn ad_separated(&self, i: &NodeSet, s: &NodeSet, c: &NodeSet) -> bool {
        self.separated(i, s, c, Separation::Asymmetric)
    }

    pub fn d_separated(&self, i: &NodeSet, s: &NodeSet, c: &NodeSet) -> bool {
        self.separated(i, s, c, Separation::Classical)
    }

    /// Reachability over (node, direction of arrival) states. A state is
    /// `down` when the walk entered the node along an edge into it.
    pub fn separated(&self, i: &NodeSet, s: &NodeSet, c: &NodeSet, mode: Separation) -> bool {
        let anc_c = self.conditioned_ancestry(c);
        let n = self.len();
        let mut visited = vec![[false; 2]; n];
        let mut queue = VecDeque::new();
        for &v in i {
            if c.contains(&v) {
                continue;
            }
            if s.contains(&v) {
                return false;
            }
            for &w in &self.children[v] {
                queue.push_back((w, true));
            }
            for &w in &self.parents[v] {
                queue.push_back((w, false));
            }
        }
        while let Some((v, down)) = queue.pop_front() {
            if visited[v][down as usize] {
                continue;
            }
            visited[v][down as usize] = true;
            let in_c = c.contains(&v);
            if s.contains(&v) && !in_c {
                return false;
            }
            let (go_down, go_up) = if down {
                (!in_c, anc_c[v])
            } else {
                (!in_c, mode == Separation::Asymmetric || !in_c)
            };
            if go_down {
                for &w in &self.children[v] {
                    queue.push_back((w, true));
                }
            }
            if go_up {
                for &w in &self.parents[v] {
                    queue.push_back((w, false));
                }
            }
        }
        true
    }

    /// Searches for a closed `K` with `S ⊆ K`, `P(K) ⊆ C`, `I ⊆ NN(K)` and
    /// `D(K) ∩ C = ∅`. Requires pairwise disjoint sets and at most 24 nodes.
    pub fn ad_separated_closed(&self, i: &NodeSet, s: &NodeSet, c: &NodeSet) -> Result<Option<NodeSet>> {
        let n = self.len();
        if n > 24 {
            return capability(format!("closed-set search limited to 24 nodes, graph has {n}"));
        }
        if !i.is_disjoint(s) || !i.is_disjoint(c) || !s.is_disjoint(c) {
            return input("I, S and C must be pairwise disjoint");
        }
        let masks = BitRelations::new(self);
        let (im, sm, cm) = (mask(i), mask(s), mask(c));
        let free: Vec<NodeId> = (0..n).filter(|v| (im | sm) >> v & 1 == 0).collect();
        for bits in 0u64..(1u64 << free.len()) {
            let mut k = sm;
            for (j, &v) in free.iter().enumerate() {
                if bits >> j & 1 == 1 {
                    k |= 1 << v;
                }
            }
            if masks.witness(k, im, cm) {
                return Ok(Some((0..n).filter(|v| k >> v & 1 == 1).collect()));
            }
        }
        Ok(None)
    }
}

/// Bitmask views of parents, descendants and ancestors, used by exhaustive
/// searches over node subsets.
struct BitRelations {
    parents: Vec<u64>,
    desc: Vec<u64>,
    anc: Vec<u64>,
    full: u64,
}

impl BitRelations {
    fn new(g: &Dag) -> BitRelations {
        let n = g.len();
        BitRelations {
            parents: (0..n).map(|v| mask_iter(g.parents(v).iter().copied())).collect(),
            desc: (0..n).map(|v| mask(&g.descendants(v))).collect(),
            anc: (0..n).map(|v| mask(&g.ancestors(v))).collect(),
            full: if n == 64 { u64::MAX } else { (1u64 << n) - 1 },
        }
    }

    fn witness(&self, k: u64, i: u64, c: u64) -> bool {
        let (mut below, mut above, mut pa) = (0u64, 0u64, 0u64);
        let mut rest = k;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            below |= self.desc[v];
            above |= self.anc[v];
            pa |= self.parents[v];
        }
        if below & above & !k != 0 {
            return false;
        }
        let pk = pa & !k;
        let dk = below & !k;
        let nk = self.full & !(k | dk);
        let nnk = nk & !pk;
        pk & !c == 0 && dk & c == 0 && i & !nnk == 0
    }
}

fn mask(s: &NodeSet) -> u64 {
    mask_iter(s.iter().copied())
}

fn mask_iter(s: impl Iterator<Item = NodeId>) -> u64 {
    s.fold(0u64, |m, v| m | 1 << v)
}

fn unknown(name: &str) -> crate::error::Error {
    crate::error::Error::Input(format!("unknown node '{name}'"))
}

fn topological_order(parents: &[Vec<NodeId>], children: &[Vec<NodeId>]) -> Option<Vec<NodeId>> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<NodeId> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &w in &children[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.insert(w);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Returns the nodes of some directed cycle. Only called on cyclic graphs.
pub(crate) fn find_cycle(children: &[Vec<NodeId>]) -> Vec<NodeId> {
    let n = children.len();
    let mut state = vec![0u8; n];
    let mut stack = Vec::new();
    fn dfs(v: NodeId, ch: &[Vec<NodeId>], state: &mut [u8], stack: &mut Vec<NodeId>) -> Option<Vec<NodeId>> {
        state[v] = 1;
        stack.push(v);
        for &w in &ch[v] {
            if state[w] == 1 {
                let at = stack.iter().position(|&x| x == w).unwrap();
                return Some(stack[at..].to_vec());
            }
            if state[w] == 0 {
                if let Some(c) = dfs(w, ch, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[v] = 2;
        None
    }
    for v in 0..n {
        if state[v] == 0 {
            if let Some(c) = dfs(v, children, &mut state, &mut stack) {
                return c;
            }
        }
    }
    Vec::new()
}
