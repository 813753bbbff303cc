//! Encoding binary databases as node-labeled graphs.
//!
//! Each ordered pair `(a,b)` of the symmetric closure of all binary tuples
//! becomes a gadget node `w_ab`, joined to `a` and to `w_ba` by symmetric
//! edges. Unary labels `U_F` record which binary relation a pair came from.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::analysis::{gaifman, is_free_connex_acyclic_binary};
use crate::error::{Error, Result};
use crate::model::{Atom, ConjunctiveQuery, Database, Schema, SymbolId, Value, Var};
use crate::text::render_constant;

/// The graph schema derived from a binary schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphSchema {
    pub schema: Schema,
    pub edge: SymbolId,
    /// Source symbol id to its id here: identity for unary symbols, `U_F`
    /// for binary ones.
    pub map: Vec<SymbolId>,
    pub v: SymbolId,
    pub w: SymbolId,
}

fn fresh(taken: &mut HashSet<String>, base: &str) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('\'');
    }
    taken.insert(name.clone());
    name
}

pub fn graph_schema(source: &Schema) -> Result<GraphSchema> {
    if !source.is_binary() {
        return Err(Error::NotBinarySchema);
    }
    let mut taken: HashSet<String> = source
        .symbols()
        .iter()
        .filter(|s| s.arity == 1)
        .map(|s| s.name.clone())
        .collect();
    let mut names = vec![(fresh(&mut taken, "E"), 2)];
    let mut map = Vec::with_capacity(source.len());
    for s in source.symbols() {
        map.push(names.len());
        if s.arity == 1 {
            names.push((s.name.clone(), 1));
        } else {
            names.push((fresh(&mut taken, &format!("U_{}", s.name)), 1));
        }
    }
    let v = names.len();
    names.push((fresh(&mut taken, "V"), 1));
    let w = names.len();
    names.push((fresh(&mut taken, "W"), 1));
    Ok(GraphSchema {
        schema: Schema::new(names)?,
        edge: 0,
        map,
        v,
        w,
    })
}

/// A graph database plus its gadget table; gadget node `i` has id
/// `base + i` where `base` is the universe size of the source database.
#[derive(Clone, Debug)]
pub struct GraphEncoding {
    pub sigma: GraphSchema,
    pub db: Database,
    pub base: usize,
    pub gadgets: Vec<(Value, Value)>,
}

impl GraphEncoding {
    pub fn gadget_node(&self, a: Value, b: Value) -> Option<Value> {
        self.gadgets
            .binary_search(&(a, b))
            .ok()
            .map(|i| (self.base + i) as Value)
    }

    pub fn gadget_pair(&self, v: Value) -> Option<(Value, Value)> {
        let i = (v as usize).checked_sub(self.base)?;
        self.gadgets.get(i).copied()
    }

    /// DOT rendering of the encoded graph.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph dhat {\n");
        for v in 0..self.db.universe() as Value {
            let shape = if (v as usize) < self.base { "circle" } else { "box" };
            out.push_str(&format!("  n{v} [label={:?}, shape={shape}];\n", self.db.name(v)));
        }
        for t in self.db.relation(self.sigma.edge).iter() {
            if t[0] <= t[1] {
                out.push_str(&format!("  n{} -- n{};\n", t[0], t[1]));
            }
        }
        out.push_str("}\n");
        out
    }
}

pub fn encode_db(db: &Database) -> Result<GraphEncoding> {
    let source = db.schema();
    let sigma = graph_schema(source)?;
    let mut pairs = BTreeSet::new();
    for (id, rel) in db.relations().iter().enumerate() {
        if source.arity(id) == 2 {
            for t in rel.iter() {
                pairs.insert((t[0], t[1]));
                pairs.insert((t[1], t[0]));
            }
        }
    }
    let gadgets: Vec<(Value, Value)> = pairs.into_iter().collect();
    let base = db.universe();
    let node = |a: Value, b: Value| -> Value {
        (base + gadgets.binary_search(&(a, b)).expect("gadget exists")) as Value
    };

    let mut dict = db.dict().clone();
    for &(a, b) in &gadgets {
        let mut name = format!(
            "w({},{})",
            render_constant(db.name(a)),
            render_constant(db.name(b))
        );
        while dict.get(&name).is_some() {
            name.push('\'');
        }
        dict.intern(&name);
    }

    let mut rels: Vec<Vec<Vec<Value>>> = vec![Vec::new(); sigma.schema.len()];
    for &(a, b) in &gadgets {
        let wab = node(a, b);
        let wba = node(b, a);
        rels[sigma.edge].push(vec![a, wab]);
        rels[sigma.edge].push(vec![wab, a]);
        rels[sigma.edge].push(vec![wab, wba]);
        rels[sigma.w].push(vec![wab]);
    }
    for v in db.active_domain() {
        rels[sigma.v].push(vec![v]);
    }
    for (id, rel) in db.relations().iter().enumerate() {
        let target = sigma.map[id];
        for t in rel.iter() {
            match t {
                [a] => rels[target].push(vec![*a]),
                [c, d] => rels[target].push(vec![node(*c, *d)]),
                _ => unreachable!("binary schema"),
            }
        }
    }
    let db = Database::from_tuples(sigma.schema.clone(), dict, rels);
    Ok(GraphEncoding {
        sigma,
        db,
        base,
        gadgets,
    })
}

/// The translated query; its first `head_len` head entries are the source
/// head.
#[derive(Clone, Debug)]
pub struct QueryEncodingHat {
    pub query: ConjunctiveQuery,
    /// Directed edges `(x,y)` of the rooted Gaifman forest, in BFS order.
    pub orientation: Vec<(Var, Var)>,
    /// Edges whose gadget variables were appended to the head.
    pub appended: Vec<(Var, Var)>,
    pub head_len: usize,
}

impl QueryEncodingHat {
    /// Projects a translated answer onto the source head.
    pub fn decode(&self, t: &[Value]) -> Vec<Value> {
        t[..self.head_len].to_vec()
    }
}

/// Roots every component of the Gaifman forest at its lowest free variable
/// (lowest variable if it has none) and lists edges away from the roots.
pub fn orient(q: &ConjunctiveQuery) -> Vec<(Var, Var)> {
    let g = gaifman(q);
    let free = q.free_mask();
    let comp = g.components();
    let n = q.num_vars();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let k = comp.iter().copied().max().map_or(0, |c| c + 1);
    for c in 0..k {
        let root = (0..n)
            .find(|&v| comp[v] == c && free[v])
            .or_else(|| (0..n).find(|&v| comp[v] == c))
            .expect("component is nonempty");
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &y in g.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    out.push((x, y));
                    queue.push_back(y);
                }
            }
        }
    }
    out
}

pub fn encode_query(
    sigma: &GraphSchema,
    source: &Schema,
    q: &ConjunctiveQuery,
) -> Result<QueryEncodingHat> {
    if !source.is_binary() {
        return Err(Error::NotBinarySchema);
    }
    if !is_free_connex_acyclic_binary(q) {
        return Err(Error::NotFreeConnex);
    }
    let mut names: Vec<String> = q.var_names().to_vec();
    let mut taken: HashSet<String> = names.iter().cloned().collect();
    let mut new_var = |base: String, names: &mut Vec<String>| -> Var {
        names.push(fresh(&mut taken, &base));
        names.len() - 1
    };

    let mut atoms = Vec::new();
    for a in q.atoms() {
        if a.args.len() == 1 {
            atoms.push(Atom::new(sigma.map[a.symbol], a.args.clone()));
        }
    }
    for x in 0..q.num_vars() {
        atoms.push(Atom::new(sigma.v, vec![x]));
    }
    let mut zloop: HashMap<Var, Var> = HashMap::new();
    for a in q.atoms() {
        if let [x, y] = a.args[..] {
            if x == y && !zloop.contains_key(&x) {
                let z = new_var(format!("z_{}_{}", q.var_name(x), q.var_name(x)), &mut names);
                zloop.insert(x, z);
                atoms.push(Atom::new(sigma.w, vec![z]));
                atoms.push(Atom::new(sigma.edge, vec![x, z]));
                atoms.push(Atom::new(sigma.edge, vec![z, z]));
            }
        }
    }
    let orientation = orient(q);
    let mut zedge: HashMap<(Var, Var), Var> = HashMap::new();
    for &(x, y) in &orientation {
        let zxy = new_var(format!("z_{}_{}", q.var_name(x), q.var_name(y)), &mut names);
        let zyx = new_var(format!("z_{}_{}", q.var_name(y), q.var_name(x)), &mut names);
        zedge.insert((x, y), zxy);
        zedge.insert((y, x), zyx);
        atoms.push(Atom::new(sigma.w, vec![zxy]));
        atoms.push(Atom::new(sigma.w, vec![zyx]));
        atoms.push(Atom::new(sigma.edge, vec![x, zxy]));
        atoms.push(Atom::new(sigma.edge, vec![zxy, zyx]));
        atoms.push(Atom::new(sigma.edge, vec![zyx, y]));
    }
    for a in q.atoms() {
        if let [u, v] = a.args[..] {
            let z = if u == v { zloop[&u] } else { zedge[&(u, v)] };
            atoms.push(Atom::new(sigma.map[a.symbol], vec![z]));
        }
    }
    let free = q.free_mask();
    let mut head = q.head().to_vec();
    let mut appended = Vec::new();
    for &(x, y) in &orientation {
        if free[x] && free[y] {
            head.push(zedge[&(x, y)]);
            head.push(zedge[&(y, x)]);
            appended.push((x, y));
        }
    }
    let query = ConjunctiveQuery::new(&sigma.schema, head, atoms, names)?;
    Ok(QueryEncodingHat {
        query,
        orientation,
        appended,
        head_len: q.head().len(),
    })
}
