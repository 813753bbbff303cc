//! Rooted variable orders for connected queries over graph schemas.

use std::collections::VecDeque;

use super::gaifman;
use crate::error::{Error, Result};
use crate::model::{ConjunctiveQuery, Schema, SymbolId, Var};

/// A breadth-first order of `vars(Q)` that visits free variables first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableOrder {
    /// `order[0]` is the root.
    pub order: Vec<Var>,
    pub parent: Vec<Option<Var>>,
    pub children: Vec<Vec<Var>>,
    /// Sorted unary symbols `U` with an atom `U(x)`, per variable.
    pub labels: Vec<Vec<SymbolId>>,
}

impl VariableOrder {
    pub fn root(&self) -> Var {
        self.order[0]
    }
}

/// Roots the Gaifman tree of `q` at its lowest free variable (or its lowest
/// variable if Boolean) and runs a BFS with separate queues for free and
/// quantified variables.
pub fn variable_order(schema: &Schema, q: &ConjunctiveQuery) -> Result<VariableOrder> {
    let g = gaifman(q);
    let n = q.num_vars();
    if g.num_edges() + 1 != n || g.components().iter().any(|&c| c != 0) {
        return Err(Error::NotTree);
    }
    let free = q.free_mask();
    if !g.induced_connected_per_component(&free) {
        return Err(Error::FreeNotConnected);
    }
    let root = (0..n).find(|&v| free[v]).unwrap_or(0);
    let mut parent = vec![None; n];
    let mut children = vec![Vec::new(); n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut qf = VecDeque::from([root]);
    let mut qq = VecDeque::new();
    seen[root] = true;
    while let Some(x) = qf.pop_front().or_else(|| qq.pop_front()) {
        order.push(x);
        for &y in g.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some(x);
                children[x].push(y);
                if free[y] {
                    qf.push_back(y);
                } else {
                    qq.push_back(y);
                }
            }
        }
    }
    let mut labels = vec![Vec::new(); n];
    for atom in q.atoms() {
        if schema.arity(atom.symbol) == 1 {
            labels[atom.args[0]].push(atom.symbol);
        }
    }
    for l in &mut labels {
        l.sort_unstable();
        l.dedup();
    }
    Ok(VariableOrder {
        order,
        parent,
        children,
        labels,
    })
}
