//! Differential checking of the indexed evaluation against the direct
//! engine and the brute-force oracle.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::Rng;

use crate::engine::{bool_eval, JoinPlan, OpCounter};
use crate::error::{Error, Result};
use crate::eval::pipeline::IndexedDatabase;
use crate::generate::{random_arities, random_database, random_fc_query, random_graph, rng};
use crate::model::{ConjunctiveQuery, Database, Value};
use crate::oracle::brute_answers;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Bool,
    Count,
    Enum,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bool" => Ok(Task::Bool),
            "count" => Ok(Task::Count),
            "enum" => Ok(Task::Enum),
            _ => Err(Error::TaskMismatch(format!("unknown task `{s}`"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Bool => "bool",
            Task::Count => "count",
            Task::Enum => "enum",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemaClass {
    /// One symmetric edge relation with loops, plus unary labels.
    Graph,
    /// Unary and binary relations.
    Binary,
    /// Relations of arity at most three.
    Ternary,
}

impl SchemaClass {
    pub const ALL: [SchemaClass; 3] = [SchemaClass::Graph, SchemaClass::Binary, SchemaClass::Ternary];
}

impl FromStr for SchemaClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "graph" => Ok(SchemaClass::Graph),
            "binary" => Ok(SchemaClass::Binary),
            "ternary" => Ok(SchemaClass::Ternary),
            _ => Err(format!("unknown schema class `{s}`")),
        }
    }
}

/// A fault injected into the indexed results, for testing the checker.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mutation {
    #[default]
    None,
    DropAnswer,
    CountPlusOne,
    NegateBool,
}

/// A failing instance after minimization.
#[derive(Clone, Debug)]
pub struct Failure {
    pub query: ConjunctiveQuery,
    pub db: Database,
    pub task: Task,
    pub detail: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "task: {}", self.task)?;
        writeln!(f, "query: {}", self.query.display(self.db.schema()))?;
        writeln!(f, "mismatch: {}", self.detail)?;
        writeln!(f, "database ({} facts):", self.db.size())?;
        f.write_str(&crate::text::render_database(&self.db))
    }
}

fn render_set(db: &Database, t: &[Value]) -> String {
    db.render_tuple(t)
}

/// Compares the three evaluations; returns a description of the first
/// disagreement.
pub fn check_instance(db: &Database, q: &ConjunctiveQuery, task: Task, mutation: Mutation) -> Result<Option<String>> {
    let idx = IndexedDatabase::build(db)?;
    let oracle = brute_answers(q, db)?;
    let ops = OpCounter::new();
    match task {
        Task::Bool => {
            let mut ib = idx.eval_bool(q, &ops)?;
            if mutation == Mutation::NegateBool {
                ib = !ib;
            }
            let bb = bool_eval(q, db, &ops)?;
            let ob = !oracle.answers.is_empty();
            if ib != ob || bb != ob {
                return Ok(Some(format!("bool: indexed {ib}, baseline {bb}, oracle {ob}")));
            }
        }
        Task::Count => {
            let mut ic: BigUint = idx.eval_count(q, &ops)?;
            if mutation == Mutation::CountPlusOne {
                ic += 1u32;
            }
            let bc = JoinPlan::preprocess(q, db, &ops)?.answers().len();
            let oc = oracle.answers.len();
            if ic != BigUint::from(oc) || bc != oc {
                return Ok(Some(format!("count: indexed {ic}, baseline {bc}, oracle {oc}")));
            }
        }
        Task::Enum => {
            let mut ie = idx.eval_enum(q)?;
            if mutation == Mutation::DropAnswer && !ie.is_empty() {
                ie.remove(0);
            }
            let mut iset = BTreeSet::new();
            for t in &ie {
                if !iset.insert(t.clone()) {
                    return Ok(Some(format!("indexed enumeration repeats {}", render_set(db, t))));
                }
            }
            let oset: BTreeSet<Vec<Value>> = oracle.answers.into_tuples();
            if let Some(t) = iset.symmetric_difference(&oset).next() {
                let side = if iset.contains(t) { "indexed only" } else { "oracle only" };
                return Ok(Some(format!("tuple {} is {side}", render_set(db, t))));
            }
            let bset: BTreeSet<Vec<Value>> = JoinPlan::preprocess(q, db, &ops)?.answers().into_iter().collect();
            if let Some(t) = bset.symmetric_difference(&oset).next() {
                let side = if bset.contains(t) { "baseline only" } else { "oracle only" };
                return Ok(Some(format!("tuple {} is {side}", render_set(db, t))));
            }
        }
    }
    Ok(None)
}

/// Drops facts one at a time while the instance keeps failing.
pub fn minimize(db: &Database, q: &ConjunctiveQuery, task: Task, mutation: Mutation, detail: String) -> Failure {
    let mut rels: Vec<Vec<Vec<Value>>> = db.relations().iter().map(|r| r.tuples().to_vec()).collect();
    let mut detail = detail;
    let mut changed = true;
    while changed {
        changed = false;
        for s in 0..rels.len() {
            let mut i = 0;
            while i < rels[s].len() {
                let t = rels[s].remove(i);
                let smaller = Database::from_tuples(db.schema().clone(), db.dict().clone(), rels.clone());
                match check_instance(&smaller, q, task, mutation) {
                    Ok(Some(d)) => {
                        detail = d;
                        changed = true;
                    }
                    _ => {
                        rels[s].insert(i, t);
                        i += 1;
                    }
                }
            }
        }
    }
    Failure {
        query: q.clone(),
        db: Database::from_tuples(db.schema().clone(), db.dict().clone(), rels),
        task,
        detail,
    }
}

/// Checks one instance, minimizing it on failure.
pub fn check(db: &Database, q: &ConjunctiveQuery, task: Task, mutation: Mutation) -> Result<Option<Failure>> {
    Ok(check_instance(db, q, task, mutation)?.map(|d| minimize(db, q, task, mutation, d)))
}

/// A random database of the given class.
pub fn random_instance_db(class: SchemaClass, r: &mut impl Rng) -> Database {
    let seed = r.gen();
    match class {
        SchemaClass::Graph => {
            let n = r.gen_range(1..=7);
            let p = r.gen_range(0.15..0.7);
            let labels = r.gen_range(0..=2);
            random_graph(n, p, 0.3, labels, seed)
        }
        SchemaClass::Binary | SchemaClass::Ternary => {
            let max = if class == SchemaClass::Binary { 2 } else { 3 };
            let symbols = r.gen_range(1..=3);
            let arities = random_arities(symbols, max, r);
            let n = r.gen_range(1..=5);
            random_database(&arities, n, 8, seed)
        }
    }
}

/// A random database and a random free-connex acyclic query over it,
/// with at most five atoms and six variables.
pub fn random_instance(class: SchemaClass, r: &mut impl Rng) -> (Database, ConjunctiveQuery) {
    let db = random_instance_db(class, r);
    let q = random_fc_query(db.schema(), 5, 6, r);
    (db, q)
}

#[derive(Debug)]
pub struct RandomReport {
    pub instances: usize,
    pub failure: Option<Failure>,
}

/// Checks `n` seeded random instances per class; `Task::Bool` runs on the
/// Boolean closure of each query.
pub fn check_random(
    classes: &[SchemaClass],
    task: Task,
    seed: u64,
    n: usize,
    mutation: Mutation,
) -> Result<RandomReport> {
    let mut r = rng(seed);
    let mut instances = 0;
    for _ in 0..n {
        for &class in classes {
            let (db, mut q) = random_instance(class, &mut r);
            if task == Task::Bool {
                q = q.boolean_closure();
            }
            instances += 1;
            if let Some(f) = check(&db, &q, task, mutation)? {
                return Ok(RandomReport {
                    instances,
                    failure: Some(f),
                });
            }
        }
    }
    Ok(RandomReport {
        instances,
        failure: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_instances_pass() {
        for task in [Task::Bool, Task::Count, Task::Enum] {
            let rep = check_random(&SchemaClass::ALL, task, 5, 20, Mutation::None).unwrap();
            assert!(rep.failure.is_none(), "{}", rep.failure.unwrap());
            assert_eq!(rep.instances, 60);
        }
    }

    #[test]
    fn mutations_are_caught_and_minimized() {
        let rep = check_random(&[SchemaClass::Graph], Task::Enum, 1, 50, Mutation::DropAnswer).unwrap();
        let f = rep.failure.expect("dropped answer must be detected");
        assert!(f.detail.contains("oracle only"));
        let rep = check_random(&[SchemaClass::Binary], Task::Count, 2, 5, Mutation::CountPlusOne).unwrap();
        let f = rep.failure.expect("wrong count must be detected");
        // removing every fact keeps the count off by one
        assert_eq!(f.db.size(), 0);
        let rep = check_random(&[SchemaClass::Ternary], Task::Bool, 3, 5, Mutation::NegateBool).unwrap();
        assert!(rep.failure.is_some());
    }

    #[test]
    fn task_names_parse() {
        assert_eq!("enum".parse::<Task>().unwrap(), Task::Enum);
        assert!("sum".parse::<Task>().is_err());
    }
}
