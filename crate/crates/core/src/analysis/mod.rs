//! Structural analysis of conjunctive queries.

pub mod ghd;
pub mod gyo;
pub mod order;

pub use ghd::{compute_fc1ghd, FcGhd};
pub use order::{variable_order, VariableOrder};

use crate::model::{Atom, ConjunctiveQuery, Schema, Var};

/// Simple undirected graph on the variables of a query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaifmanGraph {
    adj: Vec<Vec<Var>>,
}

impl GaifmanGraph {
    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: Var) -> &[Var] {
        &self.adj[v]
    }

    /// Edges `(x, y)` with `x < y`, sorted.
    pub fn edges(&self) -> Vec<(Var, Var)> {
        let mut out = Vec::new();
        for (x, ns) in self.adj.iter().enumerate() {
            for &y in ns {
                if x < y {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Component id per vertex, numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.adj.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &w in &self.adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// True if the graph has no cycle.
    pub fn is_forest(&self) -> bool {
        let comps = self.components();
        let k = comps.iter().copied().max().map_or(0, |c| c + 1);
        self.num_edges() + k == self.num_vertices()
    }

    /// True if `mask ∩ C` induces a connected subgraph (or is empty) for
    /// every component `C`.
    pub fn induced_connected_per_component(&self, mask: &[bool]) -> bool {
        let comps = self.components();
        let k = comps.iter().copied().max().map_or(0, |c| c + 1);
        let mut seen_comp = vec![false; k];
        let mut visited = vec![false; self.adj.len()];
        for s in 0..self.adj.len() {
            if !mask[s] || visited[s] {
                continue;
            }
            if std::mem::replace(&mut seen_comp[comps[s]], true) {
                return false;
            }
            visited[s] = true;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &w in &self.adj[v] {
                    if mask[w] && !visited[w] {
                        visited[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        true
    }
}

pub fn gaifman(q: &ConjunctiveQuery) -> GaifmanGraph {
    let mut adj = vec![Vec::new(); q.num_vars()];
    for atom in q.atoms() {
        let vs = atom.vars();
        for (i, &x) in vs.iter().enumerate() {
            for &y in &vs[i + 1..] {
                adj[x].push(y);
                adj[y].push(x);
            }
        }
    }
    for ns in &mut adj {
        ns.sort_unstable();
        ns.dedup();
    }
    GaifmanGraph { adj }
}

/// Hyperedges `vars(α)`, deduplicated and sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    pub num_vertices: usize,
    pub edges: Vec<Vec<Var>>,
}

pub fn hypergraph(q: &ConjunctiveQuery) -> Hypergraph {
    let mut edges: Vec<Vec<Var>> = q.atoms().iter().map(Atom::vars).collect();
    edges.sort();
    edges.dedup();
    Hypergraph {
        num_vertices: q.num_vars(),
        edges,
    }
}

pub fn is_acyclic(q: &ConjunctiveQuery) -> bool {
    gyo::join_forest(&hypergraph(q).edges).is_some()
}

pub fn is_free_connex_acyclic(q: &ConjunctiveQuery) -> bool {
    let mut edges = hypergraph(q).edges;
    if gyo::join_forest(&edges).is_none() {
        return false;
    }
    edges.push(q.free_vars());
    gyo::join_forest(&edges).is_some()
}

/// The characterization for queries whose atoms have arity at most two:
/// acyclic iff the Gaifman graph is a forest.
pub fn is_acyclic_binary(q: &ConjunctiveQuery) -> bool {
    gaifman(q).is_forest()
}

/// Free-connex test for arity-at-most-two queries: a forest whose free
/// variables induce a connected subgraph in each component that has any.
pub fn is_free_connex_acyclic_binary(q: &ConjunctiveQuery) -> bool {
    let g = gaifman(q);
    g.is_forest() && g.induced_connected_per_component(&q.free_mask())
}

/// Dispatches to the Gaifman-graph test when every atom has arity ≤ 2.
pub fn is_fc_acyclic_for(schema: &Schema, q: &ConjunctiveQuery) -> bool {
    if schema.is_binary() {
        is_free_connex_acyclic_binary(q)
    } else {
        is_free_connex_acyclic(q)
    }
}

/// One connected component of a query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub query: ConjunctiveQuery,
    /// Local variable id to variable id of the original query.
    pub var_map: Vec<Var>,
    /// For each head position of `query`, its position in the original head.
    pub head_positions: Vec<usize>,
}

/// Splits `q` along the connected components of its Gaifman graph, ordered
/// by smallest variable id.
pub fn connected_components(schema: &Schema, q: &ConjunctiveQuery) -> Vec<Component> {
    let comp = gaifman(q).components();
    let k = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let var_map: Vec<Var> = (0..q.num_vars()).filter(|&v| comp[v] == c).collect();
        let mut local = vec![usize::MAX; q.num_vars()];
        for (i, &v) in var_map.iter().enumerate() {
            local[v] = i;
        }
        let atoms: Vec<Atom> = q
            .atoms()
            .iter()
            .filter(|a| comp[a.args[0]] == c)
            .map(|a| Atom::new(a.symbol, a.args.iter().map(|&v| local[v]).collect()))
            .collect();
        let mut head = Vec::new();
        let mut head_positions = Vec::new();
        for (pos, &v) in q.head().iter().enumerate() {
            if comp[v] == c {
                head.push(local[v]);
                head_positions.push(pos);
            }
        }
        let names = var_map.iter().map(|&v| q.var_name(v).to_string()).collect();
        let query = ConjunctiveQuery::new(schema, head, atoms, names)
            .expect("component of a valid query is valid");
        out.push(Component {
            query,
            var_map,
            head_positions,
        });
    }
    out
}
