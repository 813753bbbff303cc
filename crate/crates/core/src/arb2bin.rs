//! Encoding databases of arbitrary arity as binary databases.
//!
//! Every tuple `t` becomes a node `w_t` and every projection `p` of a tuple
//! becomes a node `v_p`. Unary relations `U_R` and `A_i` mark tuple nodes of
//! relation `R` and projection nodes of arity `i`; binary relations
//! `E_i_j` link `w_t` to `v_p` when `t_i = p_j`, and `F_i_j` link projection
//! nodes whose entry sets are comparable and agree at positions `i`, `j`.

use std::collections::{BTreeSet, HashMap};

use crate::analysis::FcGhd;
use crate::error::{Error, Result};
use crate::model::{Atom, ConjunctiveQuery, Database, Dictionary, Schema, SymbolId, Value, Var};
use crate::text::render_constant;

/// All projections of `t` (selections of pairwise distinct positions),
/// deduplicated as value tuples and sorted.
pub fn projections_of(t: &[Value]) -> Vec<Vec<Value>> {
    fn rec(t: &[Value], used: &mut Vec<bool>, cur: &mut Vec<Value>, out: &mut BTreeSet<Vec<Value>>) {
        out.insert(cur.clone());
        for i in 0..t.len() {
            if !used[i] {
                used[i] = true;
                cur.push(t[i]);
                rec(t, used, cur, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = BTreeSet::new();
    rec(t, &mut vec![false; t.len()], &mut Vec::new(), &mut out);
    out.into_iter().collect()
}

/// The binary schema derived from a schema of maximum arity `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinarySchema {
    pub schema: Schema,
    pub k: usize,
    /// `U_R` per symbol of the source schema.
    pub u: Vec<SymbolId>,
    /// `A_0 ..= A_k`.
    pub a: Vec<SymbolId>,
    /// `E_i_j` at `[i-1][j-1]`.
    pub e: Vec<Vec<SymbolId>>,
    /// `F_i_j` at `[i-1][j-1]`.
    pub f: Vec<Vec<SymbolId>>,
}

pub fn binary_schema(source: &Schema) -> BinarySchema {
    let k = source.max_arity();
    let mut names: Vec<(String, usize)> = Vec::new();
    for s in source.symbols() {
        names.push((format!("U_{}", s.name), 1));
    }
    for i in 0..=k {
        names.push((format!("A_{i}"), 1));
    }
    for prefix in ["E", "F"] {
        for i in 1..=k {
            for j in 1..=k {
                names.push((format!("{prefix}_{i}_{j}"), 2));
            }
        }
    }
    let schema = Schema::new(names).expect("derived names are distinct");
    let n = source.len();
    let u = (0..n).collect();
    let a = (n..=n + k).collect();
    let base_e = n + k + 1;
    let base_f = base_e + k * k;
    let grid = |base: usize| (0..k).map(|i| (0..k).map(|j| base + i * k + j).collect()).collect();
    BinarySchema {
        schema,
        k,
        u,
        a,
        e: grid(base_e),
        f: grid(base_f),
    }
}

/// A binary database together with its node tables.
///
/// Node ids `0..tuples.len()` are tuple nodes; the following ids are
/// projection nodes.
#[derive(Clone, Debug)]
pub struct BinaryEncoding {
    pub sigma: BinarySchema,
    pub db: Database,
    pub tuples: Vec<Vec<Value>>,
    pub projections: Vec<Vec<Value>>,
    proj_index: HashMap<Vec<Value>, usize>,
}

impl BinaryEncoding {
    pub fn tuple_node(&self, t: &[Value]) -> Option<Value> {
        self.tuples
            .binary_search_by(|x| x.as_slice().cmp(t))
            .ok()
            .map(|i| i as Value)
    }

    pub fn proj_node(&self, p: &[Value]) -> Option<Value> {
        self.proj_index.get(p).map(|&i| (self.tuples.len() + i) as Value)
    }

    /// The projection behind node `v`, if it is a projection node.
    pub fn projection(&self, v: Value) -> Option<&[Value]> {
        let i = (v as usize).checked_sub(self.tuples.len())?;
        self.projections.get(i).map(Vec::as_slice)
    }

    /// Assembles an encoding from its node tables, recomputing `db`.
    pub fn rebuild(source: &Database, tuples: Vec<Vec<Value>>, projections: Vec<Vec<Value>>) -> Self {
        let sigma = binary_schema(source.schema());
        let k = sigma.k;
        let proj_index: HashMap<Vec<Value>, usize> =
            projections.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let nt = tuples.len();
        let vnode = |p: &[Value]| (nt + proj_index[p]) as Value;

        let mut dict = Dictionary::new();
        let tup_name = |prefix: &str, t: &[Value]| {
            let parts: Vec<String> = t.iter().map(|&v| render_constant(source.name(v))).collect();
            format!("{prefix}({})", parts.join(","))
        };
        for t in &tuples {
            dict.intern(&tup_name("w", t));
        }
        for p in &projections {
            dict.intern(&tup_name("v", p));
        }
        debug_assert_eq!(dict.len(), nt + projections.len());

        let mut rels: Vec<Vec<Vec<Value>>> = vec![Vec::new(); sigma.schema.len()];
        for (r, rel) in source.relations().iter().enumerate() {
            for t in rel.iter() {
                let w = tuples.binary_search_by(|x| x.as_slice().cmp(t)).expect("tuple node");
                rels[sigma.u[r]].push(vec![w as Value]);
            }
        }
        for p in &projections {
            rels[sigma.a[p.len()]].push(vec![vnode(p)]);
        }
        for (w, t) in tuples.iter().enumerate() {
            for p in projections_of(t) {
                let v = vnode(&p);
                for (i, &ti) in t.iter().enumerate() {
                    for (j, &pj) in p.iter().enumerate() {
                        if ti == pj {
                            rels[sigma.e[i][j]].push(vec![w as Value, v]);
                        }
                    }
                }
            }
        }
        // For each p, enumerate candidates q over tset(p); comparable pairs
        // with the larger entry set first are all found this way.
        for p in &projections {
            let mut tset: Vec<Value> = p.clone();
            tset.sort_unstable();
            tset.dedup();
            if tset.is_empty() {
                continue;
            }
            let vp = vnode(p);
            let mut q = Vec::with_capacity(k);
            let mut stack: Vec<usize> = Vec::new();
            // odometer over sequences of length 1..=k with entries from tset
            loop {
                if q.len() < k {
                    q.push(tset[0]);
                    stack.push(0);
                } else {
                    loop {
                        match stack.last_mut() {
                            None => break,
                            Some(d) if *d + 1 < tset.len() => {
                                *d += 1;
                                *q.last_mut().unwrap() = tset[*d];
                                break;
                            }
                            Some(_) => {
                                stack.pop();
                                q.pop();
                            }
                        }
                    }
                    if stack.is_empty() {
                        break;
                    }
                }
                if let Some(&qi) = proj_index.get(&q) {
                    let vq = (nt + qi) as Value;
                    for (i, &pi) in p.iter().enumerate() {
                        for (j, &qj) in q.iter().enumerate() {
                            if pi == qj {
                                rels[sigma.f[i][j]].push(vec![vp, vq]);
                                rels[sigma.f[j][i]].push(vec![vq, vp]);
                            }
                        }
                    }
                }
            }
        }
        let db = Database::from_tuples(sigma.schema.clone(), dict, rels);
        BinaryEncoding {
            sigma,
            db,
            tuples,
            projections,
            proj_index,
        }
    }
}

/// Builds the binary encoding of `db`.
pub fn encode_db(db: &Database) -> BinaryEncoding {
    let tuples: BTreeSet<Vec<Value>> = db
        .relations()
        .iter()
        .flat_map(|r| r.tuples().iter().cloned())
        .collect();
    let projections: BTreeSet<Vec<Value>> = tuples.iter().flat_map(|t| projections_of(t)).collect();
    BinaryEncoding::rebuild(
        db,
        tuples.into_iter().collect(),
        projections.into_iter().collect(),
    )
}

/// The translated query and the data needed to decode its answers.
#[derive(Clone, Debug)]
pub struct QueryEncoding2 {
    pub query: ConjunctiveQuery,
    /// Variable `v_t` per decomposition node.
    pub v_var: Vec<Var>,
    /// Variable `w_t` per designated atom node.
    pub w_var: Vec<Option<Var>>,
    /// Witness nodes in head order.
    pub head_nodes: Vec<usize>,
    /// Bag size of each head node.
    pub head_bag_sizes: Vec<usize>,
    /// Per head position of the source query: head position in `query` of
    /// `v_{t_y}` and the position `j_y` of `y` in the bag tuple.
    pub decode: Vec<(usize, usize)>,
}

/// Translates `q` along a complete decomposition `h` with containment on
/// every edge.
pub fn encode_query(
    sigma: &BinarySchema,
    q: &ConjunctiveQuery,
    h: &FcGhd,
) -> Result<QueryEncoding2> {
    h.check_invariants(q)?;
    let n = h.num_nodes();
    let mut names: Vec<String> = Vec::new();
    let v_var: Vec<Var> = (0..n)
        .map(|t| {
            names.push(format!("v{t}"));
            names.len() - 1
        })
        .collect();
    let mut w_var = vec![None; n];
    for i in 0..q.size() {
        let t = h.atom_node(i);
        if w_var[t].is_none() {
            names.push(format!("w{t}"));
            w_var[t] = Some(names.len() - 1);
        }
    }
    let mut atoms = Vec::new();
    for t in 0..n {
        let bag = h.bag(t);
        atoms.push(Atom::new(sigma.a[bag.len()], vec![v_var[t]]));
        if let Some(w) = w_var[t] {
            let atom = &q.atoms()[h.cover(t)];
            atoms.push(Atom::new(sigma.u[atom.symbol], vec![w]));
            for (i, z) in atom.args.iter().enumerate() {
                for (j, y) in bag.iter().enumerate() {
                    if z == y {
                        atoms.push(Atom::new(sigma.e[i][j], vec![w, v_var[t]]));
                    }
                }
            }
        }
        if let Some(p) = h.parent(t) {
            for (i, x) in bag.iter().enumerate() {
                for (j, y) in h.bag(p).iter().enumerate() {
                    if x == y {
                        atoms.push(Atom::new(sigma.f[i][j], vec![v_var[t], v_var[p]]));
                    }
                }
            }
        }
    }
    let head_nodes = h.witness_preorder();
    let head: Vec<Var> = head_nodes.iter().map(|&t| v_var[t]).collect();
    let mut decode = Vec::with_capacity(q.head().len());
    for &y in q.head() {
        let t_y = (0..n)
            .find(|&t| h.in_witness(t) && h.bag(t).contains(&y))
            .ok_or_else(|| Error::BadGhd(format!("free variable `{}` not in witness", q.var_name(y))))?;
        let j_y = h.bag(t_y).iter().position(|&v| v == y).expect("bag contains y");
        let pos = head_nodes.iter().position(|&t| t == t_y).expect("witness node in head");
        decode.push((pos, j_y));
    }
    let head_bag_sizes = head_nodes.iter().map(|&t| h.bag(t).len()).collect();
    let query = ConjunctiveQuery::new(&sigma.schema, head, atoms, names)?;
    Ok(QueryEncoding2 {
        query,
        v_var,
        w_var,
        head_nodes,
        head_bag_sizes,
        decode,
    })
}

/// Maps an answer of the translated query back to an answer of the source
/// query.
pub fn decode_answer(
    answer: &[Value],
    enc_q: &QueryEncoding2,
    enc_db: &BinaryEncoding,
) -> Result<Vec<Value>> {
    decode_with(answer, enc_q, |v| enc_db.projection(v))
}

/// Like [`decode_answer`], with projection nodes resolved by `projection`.
pub fn decode_with<'p>(
    answer: &[Value],
    enc_q: &QueryEncoding2,
    projection: impl Fn(Value) -> Option<&'p [Value]>,
) -> Result<Vec<Value>> {
    if answer.len() != enc_q.head_nodes.len() {
        return Err(Error::MalformedAnswer(format!(
            "expected {} components, found {}",
            enc_q.head_nodes.len(),
            answer.len()
        )));
    }
    enc_q
        .decode
        .iter()
        .map(|&(pos, j)| {
            let node = answer[pos];
            let p = projection(node)
                .ok_or_else(|| Error::MalformedAnswer(format!("node {node} is not a projection node")))?;
            if p.len() != enc_q.head_bag_sizes[pos] {
                return Err(Error::MalformedAnswer(format!(
                    "projection of arity {} where {} was expected",
                    p.len(),
                    enc_q.head_bag_sizes[pos]
                )));
            }
            Ok(p[j])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{compute_fc1ghd, is_free_connex_acyclic_binary};
    use crate::model::validate_database;

    fn db(schema: &Schema, raw: &[(&str, Vec<Vec<&str>>)]) -> Database {
        validate_database(schema, raw).unwrap().0
    }

    #[test]
    fn projections_of_pairs_and_triples() {
        assert_eq!(projections_of(&[0, 1]).len(), 5);
        assert_eq!(projections_of(&[0, 0]), vec![vec![], vec![0], vec![0, 0]]);
        assert_eq!(projections_of(&[0, 1, 2]).len(), 16);
    }

    #[test]
    fn schema_size() {
        let s = Schema::new([("R", 3), ("S", 1)]).unwrap();
        let b = binary_schema(&s);
        assert_eq!(b.schema.len(), 2 + 2 * 9 + 3 + 1);
        assert_eq!(b.schema.name(b.e[0][2]), "E_1_3");
        assert_eq!(b.schema.name(b.f[2][1]), "F_3_2");
        assert_eq!(b.schema.name(b.a[3]), "A_3");
    }

    #[test]
    fn single_unary_tuple() {
        let s = Schema::new([("R", 1)]).unwrap();
        let enc = encode_db(&db(&s, &[("R", vec![vec!["a"]])]));
        let d = &enc.db;
        let w = enc.tuple_node(&[0]).unwrap();
        let v0 = enc.proj_node(&[]).unwrap();
        let v1 = enc.proj_node(&[0]).unwrap();
        assert_eq!(d.universe(), 3);
        assert_eq!(d.relation(enc.sigma.u[0]).tuples(), &[vec![w]]);
        assert_eq!(d.relation(enc.sigma.a[0]).tuples(), &[vec![v0]]);
        assert_eq!(d.relation(enc.sigma.a[1]).tuples(), &[vec![v1]]);
        assert_eq!(d.relation(enc.sigma.e[0][0]).tuples(), &[vec![w, v1]]);
        assert_eq!(d.relation(enc.sigma.f[0][0]).tuples(), &[vec![v1, v1]]);
    }

    #[test]
    fn single_binary_tuple() {
        let s = Schema::new([("R", 2)]).unwrap();
        let enc = encode_db(&db(&s, &[("R", vec![vec!["a", "b"]])]));
        assert_eq!(enc.tuples.len(), 1);
        assert_eq!(enc.projections.len(), 5);
        let w = enc.tuple_node(&[0, 1]).unwrap();
        let e11 = enc.db.relation(enc.sigma.e[0][0]);
        assert!(e11.contains(&[w, enc.proj_node(&[0]).unwrap()]));
        assert!(e11.contains(&[w, enc.proj_node(&[0, 1]).unwrap()]));
        assert!(!e11.contains(&[w, enc.proj_node(&[1, 0]).unwrap()]));
    }

    #[test]
    fn f_relations_respect_entry_set_containment() {
        let s = Schema::new([("R", 3)]).unwrap();
        let d = db(&s, &[("R", vec![vec!["a", "b", "c"], vec!["c", "d", "a"]])]);
        let enc = encode_db(&d);
        for i in 0..3 {
            for j in 0..3 {
                for t in enc.db.relation(enc.sigma.f[i][j]).iter() {
                    let p = enc.projection(t[0]).unwrap();
                    let q = enc.projection(t[1]).unwrap();
                    assert_eq!(p[i], q[j]);
                    let ps: BTreeSet<_> = p.iter().collect();
                    let qs: BTreeSet<_> = q.iter().collect();
                    assert!(ps.is_subset(&qs) || qs.is_subset(&ps));
                }
            }
        }
        // (a,b) and (c,a) share a but neither entry set contains the other
        let ab = enc.proj_node(&[0, 1]).unwrap();
        let ca = enc.proj_node(&[2, 0]).unwrap();
        assert!(!enc.db.relation(enc.sigma.f[0][1]).contains(&[ab, ca]));
        // (a) and (c,a) are comparable
        let a = enc.proj_node(&[0]).unwrap();
        assert!(enc.db.relation(enc.sigma.f[0][1]).contains(&[a, ca]));
        assert!(enc.db.relation(enc.sigma.f[1][0]).contains(&[ca, a]));
    }

    #[test]
    fn empty_database_gives_empty_encoding() {
        let s = Schema::new([("R", 2)]).unwrap();
        let enc = encode_db(&Database::empty(s));
        assert_eq!(enc.db.size(), 0);
        assert_eq!(enc.db.schema().len(), 1 + 8 + 2 + 1);
    }

    #[test]
    fn boolean_unary_query() {
        let s = Schema::new([("R", 1)]).unwrap();
        let sigma = binary_schema(&s);
        let q = ConjunctiveQuery::build(&s, &[], &[("R", &["x"])]).unwrap();
        let h = compute_fc1ghd(&q).unwrap();
        let enc = encode_query(&sigma, &q, &h).unwrap();
        assert!(enc.query.is_boolean());
        let rendered = enc.query.display(&sigma.schema).to_string();
        assert_eq!(rendered, "Ans() :- A_1(v0), U_R(w0), E_1_1(w0,v0).");
    }

    #[test]
    fn ternary_query_translation_is_free_connex() {
        let s = Schema::new([("R", 3)]).unwrap();
        let sigma = binary_schema(&s);
        let q = ConjunctiveQuery::build(
            &s,
            &["x", "y", "z"],
            &[
                ("R", &["x", "y", "z"]),
                ("R", &["x", "x", "y"]),
                ("R", &["y", "y", "z"]),
                ("R", &["z", "z", "x"]),
            ],
        )
        .unwrap();
        let h = compute_fc1ghd(&q).unwrap();
        let enc = encode_query(&sigma, &q, &h).unwrap();
        assert_eq!(enc.query.head().len(), 1);
        assert!(is_free_connex_acyclic_binary(&enc.query));
    }
}
