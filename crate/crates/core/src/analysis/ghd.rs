//! Complete free-connex decompositions of width one.

use std::collections::VecDeque;
use std::fmt::Write as _;

use super::gyo::{intersect, is_subset, join_forest};
use super::is_free_connex_acyclic;
use crate::error::{Error, Result};
use crate::model::{Atom, ConjunctiveQuery, Var};

/// A rooted tree with `Bag`, `Cover` and witness set `W`.
///
/// Node `i < |atoms|` is the designated node of atom `i` in every
/// decomposition produced by [`compute_fc1ghd`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FcGhd {
    bags: Vec<Vec<Var>>,
    cover: Vec<usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    witness: Vec<bool>,
    atom_node: Vec<usize>,
    root: usize,
}

impl FcGhd {
    /// Assembles a decomposition without checking it; see
    /// [`FcGhd::check_invariants`].
    pub fn from_parts(
        bags: Vec<Vec<Var>>,
        cover: Vec<usize>,
        parent: Vec<Option<usize>>,
        witness: Vec<bool>,
        atom_node: Vec<usize>,
        root: usize,
    ) -> Self {
        let mut children = vec![Vec::new(); bags.len()];
        for (t, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(t);
            }
        }
        FcGhd {
            bags,
            cover,
            parent,
            children,
            witness,
            atom_node,
            root,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.bags.len()
    }

    pub fn bag(&self, t: usize) -> &[Var] {
        &self.bags[t]
    }

    pub fn cover(&self, t: usize) -> usize {
        self.cover[t]
    }

    pub fn parent(&self, t: usize) -> Option<usize> {
        self.parent[t]
    }

    pub fn children(&self, t: usize) -> &[usize] {
        &self.children[t]
    }

    pub fn in_witness(&self, t: usize) -> bool {
        self.witness[t]
    }

    pub fn atom_node(&self, atom: usize) -> usize {
        self.atom_node[atom]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn witness_size(&self) -> usize {
        self.witness.iter().filter(|&&w| w).count()
    }

    /// All nodes, parents before children.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_nodes());
        let mut stack = vec![self.root];
        while let Some(t) = stack.pop() {
            out.push(t);
            stack.extend(self.children[t].iter().rev());
        }
        out
    }

    /// Witness nodes in preorder; the first one is the root.
    pub fn witness_preorder(&self) -> Vec<usize> {
        self.preorder().into_iter().filter(|&t| self.witness[t]).collect()
    }

    /// Checks every structural requirement against `q`.
    pub fn check_invariants(&self, q: &ConjunctiveQuery) -> Result<()> {
        let bad = |m: String| Err(Error::BadGhd(m));
        let n = self.num_nodes();
        if n == 0 || self.cover.len() != n || self.parent.len() != n || self.witness.len() != n {
            return bad("inconsistent table sizes".into());
        }
        if self.root >= n || self.parent[self.root].is_some() {
            return bad("root has a parent".into());
        }
        if self.preorder().len() != n || (0..n).any(|t| t != self.root && self.parent[t].is_none()) {
            return bad("not a tree".into());
        }
        for t in 0..n {
            if !self.bags[t].windows(2).all(|w| w[0] < w[1]) {
                return bad(format!("bag of node {t} not sorted"));
            }
            let Some(atom) = q.atoms().get(self.cover[t]) else {
                return bad(format!("cover of node {t} out of range"));
            };
            if !is_subset(&self.bags[t], &atom.vars()) {
                return bad(format!("bag of node {t} not covered"));
            }
            if let Some(p) = self.parent[t] {
                let (a, b) = (&self.bags[t], &self.bags[p]);
                if !is_subset(a, b) && !is_subset(b, a) {
                    return bad(format!("edge {t}-{p} violates containment"));
                }
            }
        }
        // path condition: exactly one topmost node per variable
        for y in 0..q.num_vars() {
            let tops = (0..n)
                .filter(|&t| {
                    self.bags[t].contains(&y)
                        && self.parent[t].is_none_or(|p| !self.bags[p].contains(&y))
                })
                .count();
            if tops != 1 {
                return bad(format!("path condition fails for `{}`", q.var_name(y)));
            }
        }
        if self.atom_node.len() != q.size() {
            return bad("atom node table size".into());
        }
        for (i, atom) in q.atoms().iter().enumerate() {
            let t = self.atom_node[i];
            if t >= n || self.cover[t] != i || self.bags[t] != atom.vars() {
                return bad(format!("atom {i} has no complete node"));
            }
        }
        let free = q.free_vars();
        let w_tops = (0..n)
            .filter(|&t| self.witness[t] && self.parent[t].is_none_or(|p| !self.witness[p]))
            .count();
        if free.is_empty() {
            if w_tops != 0 {
                return bad("witness nonempty for Boolean query".into());
            }
            return Ok(());
        }
        if w_tops != 1 || !self.witness[self.root] {
            return bad("witness not a connected subtree containing the root".into());
        }
        let mut covered: Vec<Var> = (0..n)
            .filter(|&t| self.witness[t])
            .flat_map(|t| self.bags[t].iter().copied())
            .collect();
        covered.sort_unstable();
        covered.dedup();
        if covered != free {
            return bad("witness bags do not cover exactly the free variables".into());
        }
        if self.witness_size() >= 2 * free.len() {
            return bad(format!("witness too large: {}", self.witness_size()));
        }
        Ok(())
    }

    /// DOT rendering for debugging.
    pub fn to_dot(&self, q: &ConjunctiveQuery) -> String {
        let mut out = String::from("graph ghd {\n");
        for t in 0..self.num_nodes() {
            let bag: Vec<&str> = self.bags[t].iter().map(|&v| q.var_name(v)).collect();
            let shape = if self.witness[t] { "box" } else { "ellipse" };
            let _ = writeln!(
                out,
                "  n{t} [label=\"{{{}}} / atom {}\", shape={shape}];",
                bag.join(","),
                self.cover[t]
            );
        }
        for t in 0..self.num_nodes() {
            if let Some(p) = self.parent[t] {
                let _ = writeln!(out, "  n{p} -- n{t};");
            }
        }
        out.push_str("}\n");
        out
    }
}

struct Builder {
    bags: Vec<Vec<Var>>,
    cover: Vec<usize>,
    witness: Vec<bool>,
    edges: Vec<(usize, usize)>,
}

impl Builder {
    fn add(&mut self, bag: Vec<Var>, cover: usize, witness: bool) -> usize {
        self.bags.push(bag);
        self.cover.push(cover);
        self.witness.push(witness);
        self.bags.len() - 1
    }

    fn chain(&mut self, nodes: &[usize]) {
        for w in nodes.windows(2) {
            self.edges.push((w[0], w[1]));
        }
    }

    /// Splits every edge whose bags are incomparable.
    fn subdivide(&mut self) {
        let edges = std::mem::take(&mut self.edges);
        for (a, b) in edges {
            let (ba, bb) = (&self.bags[a], &self.bags[b]);
            if is_subset(ba, bb) || is_subset(bb, ba) {
                self.edges.push((a, b));
                continue;
            }
            let bag = intersect(ba, bb);
            let w = self.witness[a] && self.witness[b];
            let n = self.add(bag, self.cover[a], w);
            self.edges.push((a, n));
            self.edges.push((n, b));
        }
    }

    fn finish(self, root: usize, m: usize) -> FcGhd {
        let n = self.bags.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(t) = queue.pop_front() {
            for &s in &adj[t] {
                if !seen[s] {
                    seen[s] = true;
                    parent[s] = Some(t);
                    queue.push_back(s);
                }
            }
        }
        FcGhd::from_parts(self.bags, self.cover, parent, self.witness, (0..m).collect(), root)
    }
}

/// Computes a complete decomposition with bag containment along every edge
/// and `|W| < 2·|free(Q)|`.
///
/// A join tree of `H(Q)` plus the hyperedge `free(Q)` is rooted at that
/// hyperedge, which is then replaced by a connected set of witness nodes
/// whose bags are the maximal sets `vars(α) ∩ free(Q)`.
pub fn compute_fc1ghd(q: &ConjunctiveQuery) -> Result<FcGhd> {
    if !is_free_connex_acyclic(q) {
        return Err(Error::NotFreeConnex);
    }
    let atom_vars: Vec<Vec<Var>> = q.atoms().iter().map(Atom::vars).collect();
    let m = atom_vars.len();
    let mut b = Builder {
        bags: Vec::new(),
        cover: Vec::new(),
        witness: Vec::new(),
        edges: Vec::new(),
    };
    for (i, vars) in atom_vars.iter().enumerate() {
        b.add(vars.clone(), i, false);
    }
    let free = q.free_vars();

    if free.is_empty() {
        let parent = join_forest(&atom_vars).ok_or(Error::NotFreeConnex)?;
        let mut roots = Vec::new();
        for (e, p) in parent.iter().enumerate() {
            match p {
                Some(p) => b.edges.push((e, *p)),
                None => roots.push(e),
            }
        }
        b.chain(&roots);
        b.subdivide();
        return Ok(b.finish(0, m));
    }

    let mut hedges = atom_vars.clone();
    hedges.push(free.clone());
    let fnode = m;
    let parent = join_forest(&hedges).ok_or(Error::NotFreeConnex)?;

    let mut adj = vec![Vec::new(); m + 1];
    for (e, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            adj[e].push(p);
            adj[p].push(e);
        }
    }
    // component of the free hyperedge, and its neighbors
    let mut in_fcomp = vec![false; m + 1];
    in_fcomp[fnode] = true;
    let mut stack = vec![fnode];
    while let Some(t) = stack.pop() {
        for &s in &adj[t] {
            if !in_fcomp[s] {
                in_fcomp[s] = true;
                stack.push(s);
            }
        }
    }
    let mut fchildren = adj[fnode].clone();
    fchildren.sort_unstable();

    let inter: Vec<Vec<Var>> = fchildren.iter().map(|&e| intersect(&atom_vars[e], &free)).collect();
    let mut ubags: Vec<(Vec<Var>, usize)> = Vec::new();
    for (k, bag) in inter.iter().enumerate() {
        let dominated = inter
            .iter()
            .any(|o| o.len() > bag.len() && is_subset(bag, o));
        if !bag.is_empty() && !dominated && !ubags.iter().any(|(u, _)| u == bag) {
            ubags.push((bag.clone(), fchildren[k]));
        }
    }
    let unodes: Vec<usize> = ubags
        .iter()
        .map(|(bag, cover)| b.add(bag.clone(), *cover, true))
        .collect();
    let bag_list: Vec<Vec<Var>> = ubags.iter().map(|(bag, _)| bag.clone()).collect();
    let uparent = join_forest(&bag_list)
        .ok_or_else(|| Error::BadGhd("free intersections are cyclic".into()))?;
    let mut uroots = Vec::new();
    for (i, p) in uparent.iter().enumerate() {
        match p {
            Some(p) => b.edges.push((unodes[i], unodes[*p])),
            None => uroots.push(unodes[i]),
        }
    }
    b.chain(&uroots);
    let u0 = unodes[0];

    for (k, &e) in fchildren.iter().enumerate() {
        let target = ubags
            .iter()
            .position(|(bag, _)| *bag == inter[k])
            .or_else(|| ubags.iter().position(|(bag, _)| is_subset(&inter[k], bag)))
            .map_or(u0, |i| unodes[i]);
        b.edges.push((e, target));
    }
    for (e, p) in parent.iter().enumerate() {
        match *p {
            Some(p) if e != fnode && p != fnode => b.edges.push((e, p)),
            // roots of components without free variables hang below u0
            None if !in_fcomp[e] => b.edges.push((e, u0)),
            _ => {}
        }
    }
    b.subdivide();
    Ok(b.finish(u0, m))
}
