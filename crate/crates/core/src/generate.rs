//! Seeded generators for databases and queries.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::is_fc_acyclic_for;
use crate::model::{Atom, ConjunctiveQuery, Database, Dictionary, Schema, Value};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn graph(n: usize, schema: Schema, edges: &[(Value, Value)], labels: Vec<Vec<Vec<Value>>>) -> Database {
    let edge = schema.graph_edge().expect("graph schema");
    let mut rels = labels;
    rels.insert(edge, edges.iter().flat_map(|&(a, b)| [vec![a, b], vec![b, a]]).collect());
    Database::from_tuples(schema, Dictionary::anonymous("v", n), rels)
}

fn edge_schema() -> Schema {
    Schema::new([("E", 2)]).expect("valid schema")
}

/// The cycle `C_n` on vertices `v0..v{n-1}`.
pub fn cycle(n: usize) -> Database {
    let edges: Vec<(Value, Value)> = (0..n).map(|i| (i as Value, ((i + 1) % n) as Value)).collect();
    graph(n, edge_schema(), &edges, Vec::new())
}

pub fn path(n: usize) -> Database {
    let edges: Vec<(Value, Value)> = (1..n).map(|i| ((i - 1) as Value, i as Value)).collect();
    graph(n, edge_schema(), &edges, Vec::new())
}

/// Complete binary tree of height `h` (a single vertex has height 0), in
/// heap order.
pub fn binary_tree(h: u32) -> Database {
    let n = (1usize << (h + 1)) - 1;
    let edges: Vec<(Value, Value)> = (1..n).map(|i| (((i - 1) / 2) as Value, i as Value)).collect();
    graph(n, edge_schema(), &edges, Vec::new())
}

/// A center `v0` joined to `n` leaves.
pub fn star(n: usize) -> Database {
    let edges: Vec<(Value, Value)> = (1..=n).map(|i| (0, i as Value)).collect();
    graph(n + 1, edge_schema(), &edges, Vec::new())
}

/// Random node-labeled graph: each unordered pair is an edge with
/// probability `p`, each vertex carries a loop with probability `p_loop`
/// and each of the `labels` unary symbols `U0, U1, ..` with probability 1/2.
pub fn random_graph(n: usize, p: f64, p_loop: f64, labels: usize, seed: u64) -> Database {
    let mut r = rng(seed);
    let mut symbols = vec![("E".to_string(), 2)];
    symbols.extend((0..labels).map(|i| (format!("U{i}"), 1)));
    let schema = Schema::new(symbols).expect("valid schema");
    let mut edges = Vec::new();
    for a in 0..n as Value {
        if r.gen_bool(p_loop) {
            edges.push((a, a));
        }
        for b in a + 1..n as Value {
            if r.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    let unary = (0..labels)
        .map(|_| (0..n as Value).filter(|_| r.gen_bool(0.5)).map(|v| vec![v]).collect())
        .collect();
    graph(n, schema, &edges, unary)
}

/// Random database over `R0..` with the given arities; each relation gets
/// up to `tuples` uniformly drawn tuples over `n` constants.
pub fn random_database(arities: &[usize], n: usize, tuples: usize, seed: u64) -> Database {
    let mut r = rng(seed);
    let schema = Schema::new(arities.iter().enumerate().map(|(i, &a)| (format!("R{i}"), a))).expect("valid schema");
    let rels = arities
        .iter()
        .map(|&a| {
            let m = r.gen_range(0..=tuples);
            (0..m)
                .map(|_| (0..a).map(|_| r.gen_range(0..n) as Value).collect())
                .collect()
        })
        .collect();
    Database::from_tuples(schema, Dictionary::anonymous("c", n), rels)
}

/// Random schema of `symbols` relations with arities in `1..=max_arity`,
/// always including one relation of arity `max_arity`.
pub fn random_arities(symbols: usize, max_arity: usize, r: &mut impl Rng) -> Vec<usize> {
    let mut a: Vec<usize> = (0..symbols).map(|_| r.gen_range(1..=max_arity)).collect();
    a[0] = max_arity;
    a.shuffle(r);
    a
}

/// Random free-connex acyclic query with at most `max_atoms` atoms and
/// `max_vars` variables, by rejection sampling.
pub fn random_fc_query(schema: &Schema, max_atoms: usize, max_vars: usize, r: &mut impl Rng) -> ConjunctiveQuery {
    loop {
        let m = r.gen_range(1..=max_atoms);
        let k = r.gen_range(1..=max_vars);
        let mut atoms = Vec::with_capacity(m);
        for _ in 0..m {
            let s = r.gen_range(0..schema.len());
            let args = (0..schema.arity(s)).map(|_| r.gen_range(0..k)).collect();
            atoms.push(Atom::new(s, args));
        }
        // keep only the variables that occur, in first-occurrence order
        let mut map = vec![usize::MAX; k];
        let mut used = 0;
        for a in &mut atoms {
            for x in &mut a.args {
                if map[*x] == usize::MAX {
                    map[*x] = used;
                    used += 1;
                }
                *x = map[*x];
            }
        }
        let mut head: Vec<usize> = (0..used).filter(|_| r.gen_bool(0.5)).collect();
        head.shuffle(r);
        let names = (0..used).map(|i| format!("x{i}")).collect();
        let q = ConjunctiveQuery::new(schema, head, atoms, names).expect("generated query is valid");
        if is_fc_acyclic_for(schema, &q) {
            return q;
        }
    }
}
