//! Reference implementations used to validate the indexed evaluation.
//!
//! Everything here is deliberately naive and independent of the engine, the
//! reductions and the refinement code.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::model::{AnswerSet, ConjunctiveQuery, Database, Value};
use crate::refine::LabeledGraph;

/// Candidate checks allowed before giving up.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    /// Distinct projections onto the head.
    pub answers: AnswerSet,
    /// Number of homomorphisms from the body into the database, when every
    /// homomorphism was visited.
    pub hom_count: Option<u64>,
}

pub fn brute_answers(q: &ConjunctiveQuery, db: &Database) -> Result<OracleResult> {
    brute_answers_with_budget(q, db, DEFAULT_BUDGET)
}

/// Number of homomorphisms from the body of `q` into `db`.
pub fn brute_hom_count(q: &ConjunctiveQuery, db: &Database) -> Result<u64> {
    Ok(search(q, db, DEFAULT_BUDGET, true)?.hom_count.expect("all homomorphisms visited"))
}

/// Backtracking search over the head variables first; a variable ranges over
/// the values allowed by one atom linking it to already bound variables, or
/// over the active domain. Once the head is bound, the search only looks for
/// one extension.
pub fn brute_answers_with_budget(q: &ConjunctiveQuery, db: &Database, budget: u64) -> Result<OracleResult> {
    search(q, db, budget, q.is_full())
}

fn search(q: &ConjunctiveQuery, db: &Database, budget: u64, all_homs: bool) -> Result<OracleResult> {
    let n = q.num_vars();
    // visit head variables first; prefer variables sharing an atom with an
    // earlier one
    let mut adj = vec![HashSet::new(); n];
    for a in q.atoms() {
        for &x in &a.args {
            for &y in &a.args {
                if x != y {
                    adj[x].insert(y);
                }
            }
        }
    }
    let mut free = vec![all_homs; n];
    for &x in q.head() {
        free[x] = true;
    }
    let head_len = free.iter().filter(|&&f| f).count();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut linked = vec![false; n];
    for tier in [true, false] {
        loop {
            let pick = (0..n)
                .filter(|&x| !seen[x] && free[x] == tier)
                .min_by_key(|&x| (!linked[x], x));
            let Some(x) = pick else { break };
            seen[x] = true;
            order.push(x);
            for &y in &adj[x] {
                linked[y] = true;
            }
        }
    }
    let mut step = vec![0; n];
    for (i, &x) in order.iter().enumerate() {
        step[x] = i;
    }
    // atoms to check once the variable at each step is bound
    let mut due: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, a) in q.atoms().iter().enumerate() {
        let last = a.args.iter().map(|&x| step[x]).max().expect("atom has arguments");
        due[last].push(i);
    }
    let adom = db.active_domain();
    // an atom linking each variable to earlier ones, if any
    let anchor: Vec<Option<usize>> = order
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            q.atoms()
                .iter()
                .position(|a| a.args.contains(&x) && a.args.iter().any(|&y| step[y] < i))
        })
        .collect();

    struct Search<'a> {
        q: &'a ConjunctiveQuery,
        db: &'a Database,
        order: Vec<usize>,
        step: Vec<usize>,
        due: Vec<Vec<usize>>,
        anchor: Vec<Option<usize>>,
        adom: Vec<Value>,
        /// Tuple positions per (symbol, argument position, value).
        lookup: HashMap<(usize, usize), HashMap<Value, Vec<usize>>>,
        assign: Vec<Value>,
        checks: u64,
        budget: u64,
        answers: AnswerSet,
        homs: u64,
        head_len: usize,
    }

    impl Search<'_> {
        fn charge(&mut self) -> Result<()> {
            self.checks += 1;
            if self.checks > self.budget {
                return Err(Error::BudgetExceeded { budget: self.budget });
            }
            Ok(())
        }

        fn candidates(&mut self, i: usize) -> Result<Vec<Value>> {
            let Some(ai) = self.anchor[i] else {
                return Ok(self.adom.clone());
            };
            let x = self.order[i];
            let a = &self.q.atoms()[ai];
            let (p, y) = a
                .args
                .iter()
                .copied()
                .enumerate()
                .find(|&(_, y)| self.step[y] < i)
                .expect("anchor has a bound variable");
            let rel = self.db.relation(a.symbol);
            let table = self.lookup.entry((a.symbol, p)).or_insert_with(|| {
                let mut m: HashMap<Value, Vec<usize>> = HashMap::new();
                for (k, t) in rel.iter().enumerate() {
                    m.entry(t[p]).or_default().push(k);
                }
                m
            });
            let mut out = Vec::new();
            let xp = a.args.iter().position(|&z| z == x).expect("anchor contains x");
            for &k in table.get(&self.assign[y]).map_or(&[][..], Vec::as_slice) {
                self.checks += 1;
                let t = &rel.tuples()[k];
                let fits = a
                    .args
                    .iter()
                    .zip(t)
                    .all(|(&z, &v)| self.step[z] >= i || self.assign[z] == v);
                if fits {
                    out.push(t[xp]);
                }
            }
            if self.checks > self.budget {
                return Err(Error::BudgetExceeded { budget: self.budget });
            }
            out.sort_unstable();
            out.dedup();
            Ok(out)
        }

        /// Returns whether an extension was found below a bound head.
        fn run(&mut self, i: usize) -> Result<bool> {
            if i == self.order.len() {
                self.homs += 1;
                let t = self.q.head().iter().map(|&x| self.assign[x]).collect();
                self.answers.insert(t);
                return Ok(true);
            }
            let x = self.order[i];
            for v in self.candidates(i)? {
                self.charge()?;
                self.assign[x] = v;
                let ok = self.due[i].iter().all(|&ai| {
                    let a = &self.q.atoms()[ai];
                    let t: Vec<Value> = a.args.iter().map(|&y| self.assign[y]).collect();
                    self.db.relation(a.symbol).contains(&t)
                });
                if ok && self.run(i + 1)? && i >= self.head_len {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }

    let mut s = Search {
        q,
        db,
        order,
        step,
        due,
        anchor,
        adom,
        lookup: HashMap::new(),
        assign: vec![0; n],
        checks: 0,
        budget,
        answers: AnswerSet::new(q.head().len()),
        homs: 0,
        head_len,
    };
    s.run(0)?;
    Ok(OracleResult {
        answers: s.answers,
        hom_count: (head_len == n).then_some(s.homs),
    })
}

/// Renumbers a partition by first occurrence.
fn renumber(raw: &[Vec<u64>]) -> Vec<u32> {
    let mut ids: BTreeMap<&Vec<u64>, u32> = BTreeMap::new();
    raw.iter()
        .map(|sig| {
            let next = ids.len() as u32;
            *ids.entry(sig).or_insert(next)
        })
        .collect()
}

/// Round-based color refinement: a vertex's new color is its old color
/// plus the sorted multiset of its neighbors' colors. Colors are numbered
/// by smallest vertex.
pub fn naive_refine(g: &LabeledGraph) -> Vec<u32> {
    let n = g.num_vertices();
    let init: Vec<Vec<u64>> = (0..n as u32)
        .map(|v| g.labels(v).iter().map(|&l| l as u64).collect())
        .collect();
    // label sets of different lengths must not collide once flattened
    let init: Vec<Vec<u64>> = init
        .into_iter()
        .map(|mut l| {
            l.insert(0, l.len() as u64);
            l
        })
        .collect();
    let mut col = renumber(&init);
    loop {
        let sigs: Vec<Vec<u64>> = (0..n as u32)
            .map(|v| {
                let mut ns: Vec<u64> = g.neighbors(v).iter().map(|&u| col[u as usize] as u64).collect();
                ns.sort_unstable();
                ns.insert(0, col[v as usize] as u64);
                ns
            })
            .collect();
        let next = renumber(&sigs);
        let before = col.iter().collect::<HashSet<_>>().len();
        let after = next.iter().collect::<HashSet<_>>().len();
        col = next;
        if before == after {
            return col;
        }
    }
}

/// True if equally colored vertices have the same labels and the same
/// number of neighbors of every color.
pub fn is_stable_partition(g: &LabeledGraph, col: &[u32]) -> bool {
    let n = g.num_vertices();
    let profile = |v: u32| {
        let mut m: BTreeMap<u32, usize> = BTreeMap::new();
        for &u in g.neighbors(v) {
            *m.entry(col[u as usize]).or_default() += 1;
        }
        (g.labels(v).to_vec(), m)
    };
    let mut rep: BTreeMap<u32, u32> = BTreeMap::new();
    for v in 0..n as u32 {
        let c = col[v as usize];
        match rep.get(&c) {
            Some(&w) => {
                if profile(v) != profile(w) {
                    return false;
                }
            }
            None => {
                rep.insert(c, v);
            }
        }
    }
    true
}

/// True if `a` and `b` induce the same partition.
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut ab: BTreeMap<u32, u32> = BTreeMap::new();
    let mut ba: BTreeMap<u32, u32> = BTreeMap::new();
    a.iter().zip(b).all(|(&x, &y)| *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_database, Schema};

    #[test]
    fn counts_homomorphisms_and_answers() {
        let schema = Schema::new([("E", 2)]).unwrap();
        let rows = vec![vec!["a", "b"], vec!["b", "a"], vec!["b", "c"], vec!["c", "b"]];
        let db = validate_database(&schema, &[("E", rows)]).unwrap().0;
        let q = ConjunctiveQuery::build(&schema, &["x"], &[("E", &["x", "y"]), ("E", &["y", "z"])]).unwrap();
        let r = brute_answers(&q, &db).unwrap();
        assert_eq!(r.hom_count, None);
        assert_eq!(r.answers.len(), 3);
        // walks of length two in a three-vertex path
        assert_eq!(brute_hom_count(&q, &db).unwrap(), 6);
        let err = brute_answers_with_budget(&q, &db, 3).unwrap_err();
        assert_eq!(err, Error::BudgetExceeded { budget: 3 });
    }

    #[test]
    fn boolean_query_yields_empty_tuple() {
        let schema = Schema::new([("E", 2)]).unwrap();
        let db = validate_database(&schema, &[("E", vec![vec!["a", "a"]])]).unwrap().0;
        let q = ConjunctiveQuery::build(&schema, &[], &[("E", &["x", "x"])]).unwrap();
        let r = brute_answers(&q, &db).unwrap();
        assert_eq!(r.answers.len(), 1);
        assert!(r.answers.contains(&[]));
    }

    #[test]
    fn naive_refinement_of_a_path() {
        let g = LabeledGraph::new(vec![Vec::new(); 5], [(0, 1), (1, 2), (2, 3), (3, 4)]);
        let col = naive_refine(&g);
        assert_eq!(col, vec![0, 1, 2, 1, 0]);
        assert!(is_stable_partition(&g, &col));
        assert!(!is_stable_partition(&g, &[0, 1, 1, 1, 0]));
        assert!(same_partition(&col, &[3, 2, 0, 2, 3]));
        assert!(!same_partition(&col, &[0, 0, 1, 1, 0]));
    }
}
