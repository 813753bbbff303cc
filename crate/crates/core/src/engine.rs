//! Evaluation of free-connex acyclic queries on an arbitrary database.
//!
//! Preprocessing materializes one relation per decomposition node, applies
//! a full semijoin reducer, and indexes each witness node by the variables
//! it shares with its parent. Enumeration is an odometer over the witness
//! nodes in preorder.

use std::cell::Cell;
use std::collections::{HashMap, HashSet};

use crate::analysis::{compute_fc1ghd, is_acyclic, FcGhd};
use crate::error::{Error, Result};
use crate::model::{ConjunctiveQuery, Database, Value, Var};

/// Counts elementary operations (tuple visits, probes, cursor moves).
#[derive(Debug, Default)]
pub struct OpCounter(Cell<u64>);

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, n: u64) {
        self.0.set(self.0.get() + n);
    }

    pub fn get(&self) -> u64 {
        self.0.get()
    }

    pub fn reset(&self) {
        self.0.set(0);
    }
}

/// Positions of `sub` inside the sorted `bag`.
fn positions(bag: &[Var], sub: &[Var]) -> Vec<usize> {
    sub.iter()
        .map(|v| bag.binary_search(v).expect("shared variable in bag"))
        .collect()
}

fn key(t: &[Value], pos: &[usize]) -> Vec<Value> {
    pos.iter().map(|&i| t[i]).collect()
}

#[derive(Clone, Debug)]
struct WitnessNode {
    /// Index of the parent in the witness preorder (none for the root).
    parent: Option<usize>,
    /// Positions in the parent's tuple forming the lookup key.
    parent_key: Vec<usize>,
    /// Relation grouped by key; the root uses the empty key.
    groups: HashMap<Vec<Value>, Vec<Vec<Value>>>,
}

/// A preprocessed query, ready for enumeration.
#[derive(Clone, Debug)]
pub struct JoinPlan {
    ghd: FcGhd,
    node_rel: Vec<Vec<Vec<Value>>>,
    witness: Vec<WitnessNode>,
    /// Per head position: witness index and position in its bag.
    head_src: Vec<(usize, usize)>,
    satisfiable: bool,
}

impl JoinPlan {
    /// Builds the plan for a free-connex acyclic query.
    pub fn preprocess(q: &ConjunctiveQuery, db: &Database, ops: &OpCounter) -> Result<Self> {
        let ghd = compute_fc1ghd(q)?;
        Self::with_decomposition(q, db, ghd, ops)
    }

    pub fn with_decomposition(
        q: &ConjunctiveQuery,
        db: &Database,
        ghd: FcGhd,
        ops: &OpCounter,
    ) -> Result<Self> {
        let n = ghd.num_nodes();
        let mut node_rel: Vec<Vec<Vec<Value>>> = Vec::with_capacity(n);
        // atoms with the same symbol and equality pattern select the same
        // tuples, keyed by the rank of each argument among the atom's vars
        let mut matches: HashMap<(usize, Vec<usize>), Vec<Vec<Value>>> = HashMap::new();
        for t in 0..n {
            let atom = &q.atoms()[ghd.cover(t)];
            let vars = atom.vars();
            let pattern = atom.args.iter().map(|v| vars.binary_search(v).unwrap()).collect();
            let full = matches.entry((atom.symbol, pattern)).or_insert_with(|| {
                let rel = db.relation(atom.symbol);
                ops.add(rel.len() as u64);
                let first: Vec<usize> = vars
                    .iter()
                    .map(|v| atom.args.iter().position(|x| x == v).unwrap())
                    .collect();
                rel.iter()
                    .filter(|tup| {
                        atom.args
                            .iter()
                            .enumerate()
                            .all(|(i, v)| tup[i] == tup[first[vars.binary_search(v).unwrap()]])
                    })
                    .map(|tup| first.iter().map(|&i| tup[i]).collect())
                    .collect()
            });
            let pos = positions(&vars, ghd.bag(t));
            ops.add(full.len() as u64);
            let mut seen = HashSet::with_capacity(full.len());
            let rel: Vec<Vec<Value>> = full
                .iter()
                .map(|tup| key(tup, &pos))
                .filter(|k| seen.insert(k.clone()))
                .collect();
            node_rel.push(rel);
        }

        let pre = ghd.preorder();
        let semijoin = |target: &mut Vec<Vec<Value>>, tbag: &[Var], source: &[Vec<Value>], sbag: &[Var]| {
            let shared: Vec<Var> = tbag.iter().copied().filter(|v| sbag.binary_search(v).is_ok()).collect();
            let tp = positions(tbag, &shared);
            let sp = positions(sbag, &shared);
            ops.add((source.len() + target.len()) as u64);
            let keys: HashSet<Vec<Value>> = source.iter().map(|t| key(t, &sp)).collect();
            target.retain(|t| keys.contains(&key(t, &tp)));
        };
        for &t in pre.iter().rev() {
            if let Some(p) = ghd.parent(t) {
                let src = std::mem::take(&mut node_rel[t]);
                semijoin(&mut node_rel[p], ghd.bag(p), &src, ghd.bag(t));
                node_rel[t] = src;
            }
        }
        let satisfiable = !node_rel[ghd.root()].is_empty();
        for &t in &pre {
            if let Some(p) = ghd.parent(t) {
                let src = std::mem::take(&mut node_rel[p]);
                semijoin(&mut node_rel[t], ghd.bag(t), &src, ghd.bag(p));
                node_rel[p] = src;
            }
        }

        let wpre = ghd.witness_preorder();
        let widx: HashMap<usize, usize> = wpre.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut witness = Vec::with_capacity(wpre.len());
        for &t in &wpre {
            let (parent, parent_key, own_key) = match ghd.parent(t) {
                Some(p) if widx.contains_key(&p) => {
                    let shared: Vec<Var> = ghd
                        .bag(t)
                        .iter()
                        .copied()
                        .filter(|v| ghd.bag(p).binary_search(v).is_ok())
                        .collect();
                    (Some(widx[&p]), positions(ghd.bag(p), &shared), positions(ghd.bag(t), &shared))
                }
                _ => (None, Vec::new(), Vec::new()),
            };
            let mut groups: HashMap<Vec<Value>, Vec<Vec<Value>>> = HashMap::new();
            ops.add(node_rel[t].len() as u64);
            for tup in &node_rel[t] {
                groups.entry(key(tup, &own_key)).or_default().push(tup.clone());
            }
            witness.push(WitnessNode {
                parent,
                parent_key,
                groups,
            });
        }
        let mut head_src = Vec::with_capacity(q.head().len());
        for &y in q.head() {
            let (i, j) = wpre
                .iter()
                .enumerate()
                .find_map(|(i, &t)| ghd.bag(t).binary_search(&y).ok().map(|j| (i, j)))
                .ok_or_else(|| Error::BadGhd(format!("head variable `{}` not in witness", q.var_name(y))))?;
            head_src.push((i, j));
        }
        Ok(JoinPlan {
            ghd,
            node_rel,
            witness,
            head_src,
            satisfiable,
        })
    }

    pub fn ghd(&self) -> &FcGhd {
        &self.ghd
    }

    /// True if the query has at least one homomorphism.
    pub fn is_satisfiable(&self) -> bool {
        self.satisfiable
    }

    /// Semijoin-reduced relation of a decomposition node.
    pub fn node_relation(&self, t: usize) -> &[Vec<Value>] {
        &self.node_rel[t]
    }

    pub fn witness_len(&self) -> usize {
        self.witness.len()
    }

    /// Starts an enumeration cursor; steps are charged to `steps`.
    pub fn cursor<'a>(&'a self, steps: &'a OpCounter) -> Cursor<'a> {
        Cursor {
            plan: self,
            steps,
            choice: Vec::with_capacity(self.witness.len()),
            state: State::Fresh,
        }
    }

    /// Collects all answers.
    pub fn answers(&self) -> Vec<Vec<Value>> {
        let steps = OpCounter::new();
        self.cursor(&steps).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Fresh,
    Running,
    Done,
}

/// Odometer over the witness nodes. Every candidate list is nonempty after
/// full reduction, so each move reaches an answer within `O(|W|)` steps.
pub struct Cursor<'a> {
    plan: &'a JoinPlan,
    steps: &'a OpCounter,
    /// Per witness node: the candidate list and the chosen index.
    choice: Vec<(&'a [Vec<Value>], usize)>,
    state: State,
}

impl<'a> Cursor<'a> {
    fn candidates(&self, i: usize) -> &'a [Vec<Value>] {
        let w = &self.plan.witness[i];
        let k = match w.parent {
            None => Vec::new(),
            Some(p) => {
                let (list, at) = self.choice[p];
                key(&list[at], &w.parent_key)
            }
        };
        self.plan.witness[i]
            .groups
            .get(&k)
            .map_or(&[][..], Vec::as_slice)
    }

    /// Fills positions `from..` with their first candidates.
    fn fill(&mut self, from: usize) {
        self.choice.truncate(from);
        for i in from..self.plan.witness.len() {
            self.steps.add(1);
            let list = self.candidates(i);
            assert!(!list.is_empty(), "reduced witness relation has no candidate");
            self.choice.push((list, 0));
        }
    }

    fn emit(&self) -> Vec<Value> {
        self.steps.add(1);
        self.plan
            .head_src
            .iter()
            .map(|&(i, j)| {
                let (list, at) = self.choice[i];
                list[at][j]
            })
            .collect()
    }
}

impl Iterator for Cursor<'_> {
    type Item = Vec<Value>;

    fn next(&mut self) -> Option<Vec<Value>> {
        match self.state {
            State::Done => None,
            State::Fresh => {
                self.steps.add(1);
                if !self.plan.satisfiable {
                    self.state = State::Done;
                    return None;
                }
                self.state = State::Running;
                self.fill(0);
                Some(self.emit())
            }
            State::Running => {
                let mut i = self.choice.len();
                loop {
                    self.steps.add(1);
                    if i == 0 {
                        self.state = State::Done;
                        return None;
                    }
                    i -= 1;
                    let (list, at) = self.choice[i];
                    if at + 1 < list.len() {
                        self.choice[i].1 = at + 1;
                        self.fill(i + 1);
                        return Some(self.emit());
                    }
                }
            }
        }
    }
}

/// Boolean evaluation of an acyclic query (head ignored).
pub fn bool_eval(q: &ConjunctiveQuery, db: &Database, ops: &OpCounter) -> Result<bool> {
    if !is_acyclic(q) {
        return Err(Error::NotAcyclic);
    }
    Ok(JoinPlan::preprocess(&q.boolean_closure(), db, ops)?.is_satisfiable())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_database, Schema};
    use std::collections::BTreeSet;

    fn movie() -> Database {
        let schema = Schema::new([("P", 2), ("A", 2), ("M", 2), ("S", 2)]).unwrap();
        let raw = vec![
            ("P", vec![vec!["PS", "LM"], vec!["PS", "MM"]]),
            ("A", vec![vec!["LM", "PS"], vec!["MM", "PS"]]),
            ("M", vec![vec!["LM", "Dr.S"], vec!["MM", "Dr.S"]]),
            ("S", vec![vec!["LM", "18m"], vec!["MM", "34m"]]),
        ];
        validate_database(&schema, &raw).unwrap().0
    }

    fn cycle4() -> Database {
        let schema = Schema::new([("E", 2)]).unwrap();
        let names = ["a", "b", "c", "d"];
        let mut rows = Vec::new();
        for i in 0..4 {
            rows.push(vec![names[i], names[(i + 1) % 4]]);
            rows.push(vec![names[(i + 1) % 4], names[i]]);
        }
        validate_database(&schema, &[("E", rows)]).unwrap().0
    }

    #[test]
    fn movie_answers() {
        let db = movie();
        let q = ConjunctiveQuery::build(
            db.schema(),
            &["x", "y1"],
            &[("A", &["x", "y1"]), ("A", &["x", "y2"]), ("P", &["y2", "x"])],
        )
        .unwrap();
        let plan = JoinPlan::preprocess(&q, &db, &OpCounter::new()).unwrap();
        let got: BTreeSet<String> = plan.answers().iter().map(|t| db.render_tuple(t)).collect();
        let want: BTreeSet<String> = ["(LM,PS)", "(MM,PS)"].iter().map(|s| s.to_string()).collect();
        assert_eq!(got, want);
        assert_eq!(plan.answers().len(), 2);
    }

    #[test]
    fn full_edge_query_on_four_cycle() {
        let db = cycle4();
        let q = ConjunctiveQuery::build(db.schema(), &["x", "y"], &[("E", &["x", "y"])]).unwrap();
        let plan = JoinPlan::preprocess(&q, &db, &OpCounter::new()).unwrap();
        assert_eq!(plan.answers().len(), 8);
    }

    #[test]
    fn empty_answer_ends_immediately() {
        let db = cycle4();
        let q = ConjunctiveQuery::build(db.schema(), &["x"], &[("E", &["x", "x"])]).unwrap();
        let plan = JoinPlan::preprocess(&q, &db, &OpCounter::new()).unwrap();
        let steps = OpCounter::new();
        let mut c = plan.cursor(&steps);
        assert_eq!(c.next(), None);
        assert_eq!(c.next(), None);
    }

    #[test]
    fn not_free_connex_is_rejected() {
        let db = cycle4();
        let q = ConjunctiveQuery::build(db.schema(), &["x", "z"], &[("E", &["x", "y"]), ("E", &["y", "z"])])
            .unwrap();
        assert_eq!(
            JoinPlan::preprocess(&q, &db, &OpCounter::new()).unwrap_err(),
            Error::NotFreeConnex
        );
        // the Boolean closure is fine
        assert!(bool_eval(&q, &db, &OpCounter::new()).unwrap());
    }

    #[test]
    fn boolean_cases() {
        let db = cycle4();
        let s = db.schema();
        let loop_q = ConjunctiveQuery::build(s, &[], &[("E", &["x", "x"])]).unwrap();
        assert!(!bool_eval(&loop_q, &db, &OpCounter::new()).unwrap());
        let tri = ConjunctiveQuery::build(s, &[], &[("E", &["x", "y"]), ("E", &["y", "z"]), ("E", &["z", "x"])])
            .unwrap();
        assert_eq!(bool_eval(&tri, &db, &OpCounter::new()).unwrap_err(), Error::NotAcyclic);
        let m = movie();
        let ap = ConjunctiveQuery::build(m.schema(), &[], &[("A", &["x", "y"]), ("P", &["y", "x"])]).unwrap();
        assert!(bool_eval(&ap, &m, &OpCounter::new()).unwrap());
        let empty = Database::empty(m.schema().clone());
        assert!(!bool_eval(&ap, &empty, &OpCounter::new()).unwrap());
    }

    #[test]
    fn repeated_variables_in_atoms() {
        let schema = Schema::new([("T", 3)]).unwrap();
        let raw = vec![("T", vec![vec!["a", "a", "b"], vec!["a", "b", "c"], vec!["c", "c", "c"]])];
        let db = validate_database(&schema, &raw).unwrap().0;
        let q = ConjunctiveQuery::build(&schema, &["x", "y"], &[("T", &["x", "x", "y"])]).unwrap();
        let plan = JoinPlan::preprocess(&q, &db, &OpCounter::new()).unwrap();
        let got: BTreeSet<String> = plan.answers().iter().map(|t| db.render_tuple(t)).collect();
        assert_eq!(got, ["(a,b)", "(c,c)"].iter().map(|s| s.to_string()).collect());
    }
}
