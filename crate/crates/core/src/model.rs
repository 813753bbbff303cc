//! Schemas, databases and conjunctive queries.
//!
//! Constants are interned into dense `u32` ids by a [`Dictionary`]; variables
//! are interned per query into dense `usize` ids. Relations are stored as
//! sorted, duplicate-free tuple lists.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Index of a relation symbol inside its [`Schema`].
pub type SymbolId = usize;
/// Interned query variable.
pub type Var = usize;
/// Interned database constant.
pub type Value = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

/// A finite, non-empty list of relation symbols with pairwise distinct names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    symbols: Vec<Symbol>,
    by_name: HashMap<String, SymbolId>,
}

impl Schema {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut schema = Schema {
            symbols: Vec::new(),
            by_name: HashMap::new(),
        };
        for (name, arity) in symbols {
            schema.push(name.into(), arity)?;
        }
        if schema.symbols.is_empty() {
            return Err(Error::InvalidSchema("schema has no relation symbols".into()));
        }
        Ok(schema)
    }

    fn push(&mut self, name: String, arity: usize) -> Result<SymbolId> {
        if arity == 0 {
            return Err(Error::InvalidSchema(format!("`{name}` has arity 0")));
        }
        if self.by_name.contains_key(&name) {
            return Err(Error::InvalidSchema(format!("duplicate symbol `{name}`")));
        }
        let id = self.symbols.len();
        self.by_name.insert(name.clone(), id);
        self.symbols.push(Symbol { name, arity });
        Ok(id)
    }

    /// Returns a copy of the schema extended by one symbol whose name is
    /// `base`, primed as often as needed to avoid a clash.
    pub fn extended(&self, base: &str, arity: usize) -> (Schema, SymbolId) {
        let mut out = self.clone();
        let name = self.fresh_name(base);
        let id = out.push(name, arity).expect("fresh name with positive arity");
        (out, id)
    }

    pub fn fresh_name(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.by_name.contains_key(&name) {
            name.push('\'');
        }
        name
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.symbols[id].name
    }

    pub fn arity(&self, id: SymbolId) -> usize {
        self.symbols[id].arity
    }

    /// Maximum arity over all symbols.
    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }

    pub fn is_binary(&self) -> bool {
        self.max_arity() <= 2
    }

    /// For a schema with exactly one binary symbol and otherwise only unary
    /// symbols, returns the binary symbol.
    pub fn graph_edge(&self) -> Option<SymbolId> {
        let mut edge = None;
        for (id, s) in self.symbols.iter().enumerate() {
            match s.arity {
                1 => {}
                2 if edge.is_none() => edge = Some(id),
                _ => return None,
            }
        }
        edge
    }

    pub fn is_graph_schema(&self) -> bool {
        self.graph_edge().is_some()
    }

    pub fn unary_symbols(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.len()).filter(|&id| self.arity(id) == 1)
    }
}

/// Bijective interning of constant strings to dense ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dictionary {
    names: Vec<String>,
    ids: HashMap<String, Value>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// A dictionary of `n` synthetic constants named `{prefix}{i}`.
    pub fn anonymous(prefix: &str, n: usize) -> Self {
        let mut dict = Dictionary::new();
        for i in 0..n {
            dict.intern(&format!("{prefix}{i}"));
        }
        dict
    }

    pub fn intern(&mut self, name: &str) -> Value {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = Value::try_from(self.names.len()).expect("more than u32::MAX constants");
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<Value> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: Value) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Sorted, duplicate-free set of tuples of one arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    arity: usize,
    tuples: Vec<Vec<Value>>,
}

impl Relation {
    pub fn empty(arity: usize) -> Self {
        Relation {
            arity,
            tuples: Vec::new(),
        }
    }

    /// Sorts and deduplicates; returns the relation and the number of
    /// dropped duplicates. Panics on a tuple of the wrong arity.
    pub fn from_tuples(arity: usize, mut tuples: Vec<Vec<Value>>) -> (Self, usize) {
        assert!(tuples.iter().all(|t| t.len() == arity), "tuple arity mismatch");
        let before = tuples.len();
        tuples.sort_unstable();
        tuples.dedup();
        let dropped = before - tuples.len();
        (Relation { arity, tuples }, dropped)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[Vec<Value>] {
        &self.tuples
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Value]> {
        self.tuples.iter().map(|t| t.as_slice())
    }

    pub fn contains(&self, tuple: &[Value]) -> bool {
        self.tuples
            .binary_search_by(|t| t.as_slice().cmp(tuple))
            .is_ok()
    }
}

/// A finite database over a schema. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Database {
    schema: Schema,
    dict: Dictionary,
    relations: Vec<Relation>,
}

impl Database {
    /// Assembles a database from per-symbol tuple lists (deduplicated here).
    pub fn from_tuples(schema: Schema, dict: Dictionary, tuples: Vec<Vec<Vec<Value>>>) -> Self {
        assert_eq!(schema.len(), tuples.len(), "one tuple list per symbol");
        let relations = tuples
            .into_iter()
            .enumerate()
            .map(|(id, ts)| {
                debug_assert!(ts.iter().flatten().all(|&v| (v as usize) < dict.len()));
                Relation::from_tuples(schema.arity(id), ts).0
            })
            .collect();
        Database {
            schema,
            dict,
            relations,
        }
    }

    pub fn empty(schema: Schema) -> Self {
        let relations = schema.symbols().iter().map(|s| Relation::empty(s.arity)).collect();
        Database {
            schema,
            dict: Dictionary::new(),
            relations,
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn dict(&self) -> &Dictionary {
        &self.dict
    }

    pub fn relation(&self, id: SymbolId) -> &Relation {
        &self.relations[id]
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    /// Number of element ids (`0..universe()`).
    pub fn universe(&self) -> usize {
        self.dict.len()
    }

    /// Total number of tuples over all relations.
    pub fn size(&self) -> usize {
        self.relations.iter().map(Relation::len).sum()
    }

    /// Sorted list of the constants occurring in some tuple.
    pub fn active_domain(&self) -> Vec<Value> {
        let mut seen = vec![false; self.universe()];
        for rel in &self.relations {
            for t in rel.iter() {
                for &v in t {
                    seen[v as usize] = true;
                }
            }
        }
        (0..self.universe() as Value).filter(|&v| seen[v as usize]).collect()
    }

    pub fn name(&self, v: Value) -> &str {
        self.dict.name(v)
    }

    /// Renders a tuple of this database's constants as `(a,b,...)`.
    pub fn render_tuple(&self, tuple: &[Value]) -> String {
        let parts: Vec<&str> = tuple.iter().map(|&v| self.name(v)).collect();
        format!("({})", parts.join(","))
    }
}

/// Outcome of [`validate_database`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadReport {
    pub duplicates_dropped: usize,
}

/// Interns raw string tuples into a [`Database`] over `schema`.
///
/// Constants receive ids in first-encounter order.
pub fn validate_database<S: AsRef<str>>(
    schema: &Schema,
    raw: &[(S, Vec<Vec<S>>)],
) -> Result<(Database, LoadReport)> {
    let mut dict = Dictionary::new();
    let mut tuples: Vec<Vec<Vec<Value>>> = vec![Vec::new(); schema.len()];
    for (name, rows) in raw {
        let name = name.as_ref();
        let id = schema
            .lookup(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
        for row in rows {
            if row.len() != schema.arity(id) {
                return Err(Error::ArityMismatch {
                    symbol: name.to_string(),
                    expected: schema.arity(id),
                    found: row.len(),
                });
            }
            tuples[id].push(row.iter().map(|c| dict.intern(c.as_ref())).collect());
        }
    }
    let before: usize = tuples.iter().map(Vec::len).sum();
    let db = Database::from_tuples(schema.clone(), dict, tuples);
    let report = LoadReport {
        duplicates_dropped: before - db.size(),
    };
    Ok((db, report))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub symbol: SymbolId,
    pub args: Vec<Var>,
}

impl Atom {
    pub fn new(symbol: SymbolId, args: Vec<Var>) -> Self {
        Atom { symbol, args }
    }

    /// Distinct variables of the atom in increasing id order.
    pub fn vars(&self) -> Vec<Var> {
        let mut vs = self.args.clone();
        vs.sort_unstable();
        vs.dedup();
        vs
    }
}

/// `Ans(head) <- atoms`, with variables interned to `0..num_vars()`.
///
/// Every interned variable occurs in some atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    head: Vec<Var>,
    atoms: Vec<Atom>,
    var_names: Vec<String>,
}

impl ConjunctiveQuery {
    pub fn new(
        schema: &Schema,
        head: Vec<Var>,
        atoms: Vec<Atom>,
        var_names: Vec<String>,
    ) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidQuery("query has no atoms".into()));
        }
        let n = var_names.len();
        let mut occurs = vec![false; n];
        for atom in &atoms {
            if atom.symbol >= schema.len() {
                return Err(Error::UnknownSymbol(format!("#{}", atom.symbol)));
            }
            let expected = schema.arity(atom.symbol);
            if atom.args.len() != expected {
                return Err(Error::ArityMismatch {
                    symbol: schema.name(atom.symbol).to_string(),
                    expected,
                    found: atom.args.len(),
                });
            }
            for &v in &atom.args {
                if v >= n {
                    return Err(Error::InvalidQuery(format!("variable id {v} out of range")));
                }
                occurs[v] = true;
            }
        }
        if let Some(v) = occurs.iter().position(|&o| !o) {
            return Err(Error::InvalidQuery(format!(
                "variable `{}` occurs in no atom",
                var_names[v]
            )));
        }
        let mut seen = vec![false; n];
        for &v in &head {
            if v >= n {
                return Err(Error::InvalidQuery(format!("head variable id {v} out of range")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidQuery(format!(
                    "head variable `{}` repeated",
                    var_names[v]
                )));
            }
        }
        Ok(ConjunctiveQuery {
            head,
            atoms,
            var_names,
        })
    }

    /// Builds a query from variable and symbol names.
    pub fn build(schema: &Schema, head: &[&str], atoms: &[(&str, &[&str])]) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut ids: HashMap<String, Var> = HashMap::new();
        let mut intern = |s: &str, names: &mut Vec<String>| -> Var {
            *ids.entry(s.to_string()).or_insert_with(|| {
                names.push(s.to_string());
                names.len() - 1
            })
        };
        let mut built = Vec::with_capacity(atoms.len());
        for (sym, args) in atoms {
            let id = schema
                .lookup(sym)
                .ok_or_else(|| Error::UnknownSymbol(sym.to_string()))?;
            let args = args.iter().map(|a| intern(*a, &mut names)).collect();
            built.push(Atom::new(id, args));
        }
        let mut head_ids = Vec::with_capacity(head.len());
        for h in head {
            let before = names.len();
            let v = intern(*h, &mut names);
            if names.len() != before {
                return Err(Error::InvalidQuery(format!("head variable `{h}` occurs in no atom")));
            }
            head_ids.push(v);
        }
        ConjunctiveQuery::new(schema, head_ids, built, names)
    }

    pub fn head(&self) -> &[Var] {
        &self.head
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.var_names[v]
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    /// Membership mask of `free(Q)`.
    pub fn free_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_vars()];
        for &v in &self.head {
            mask[v] = true;
        }
        mask
    }

    pub fn free_vars(&self) -> Vec<Var> {
        let mut vs = self.head.clone();
        vs.sort_unstable();
        vs
    }

    pub fn quantified_vars(&self) -> Vec<Var> {
        let mask = self.free_mask();
        (0..self.num_vars()).filter(|&v| !mask[v]).collect()
    }

    pub fn is_boolean(&self) -> bool {
        self.head.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.head.len() == self.num_vars()
    }

    /// Number of atoms.
    pub fn size(&self) -> usize {
        self.atoms.len()
    }

    /// Head arity plus the sum of atom arities.
    pub fn weight(&self) -> usize {
        self.head.len() + self.atoms.iter().map(|a| a.args.len()).sum::<usize>()
    }

    /// The same body with an empty head.
    pub fn boolean_closure(&self) -> ConjunctiveQuery {
        ConjunctiveQuery {
            head: Vec::new(),
            atoms: self.atoms.clone(),
            var_names: self.var_names.clone(),
        }
    }

    /// Renders the query in rule syntax.
    pub fn display<'a>(&'a self, schema: &'a Schema) -> impl fmt::Display + 'a {
        QueryDisplay { q: self, schema }
    }
}

struct QueryDisplay<'a> {
    q: &'a ConjunctiveQuery,
    schema: &'a Schema,
}

impl fmt::Display for QueryDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |vs: &[Var]| -> String {
            vs.iter()
                .map(|&v| self.q.var_name(v))
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "Ans({}) :- ", names(&self.q.head))?;
        for (i, atom) in self.q.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}({})", self.schema.name(atom.symbol), names(&atom.args))?;
        }
        write!(f, ".")
    }
}

/// The variable sets and size measures of a query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryStats {
    pub vars: Vec<Var>,
    pub free: Vec<Var>,
    pub quantified: Vec<Var>,
    pub atoms: usize,
    pub weight: usize,
}

pub fn query_stats(q: &ConjunctiveQuery) -> QueryStats {
    QueryStats {
        vars: (0..q.num_vars()).collect(),
        free: q.free_vars(),
        quantified: q.quantified_vars(),
        atoms: q.size(),
        weight: q.weight(),
    }
}

/// A duplicate-free set of answer tuples of uniform arity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnswerSet {
    arity: usize,
    tuples: BTreeSet<Vec<Value>>,
}

impl AnswerSet {
    pub fn new(arity: usize) -> Self {
        AnswerSet {
            arity,
            tuples: BTreeSet::new(),
        }
    }

    /// Inserts a tuple; returns `false` if it was already present.
    pub fn insert(&mut self, tuple: Vec<Value>) -> bool {
        assert_eq!(tuple.len(), self.arity, "answer arity mismatch");
        self.tuples.insert(tuple)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[Value]) -> bool {
        self.tuples.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<Value>> {
        self.tuples.iter()
    }

    pub fn into_tuples(self) -> BTreeSet<Vec<Value>> {
        self.tuples
    }
}

impl FromIterator<Vec<Value>> for AnswerSet {
    /// Panics on an empty iterator of unknown arity mismatch; arity is taken
    /// from the first tuple (0 when empty).
    fn from_iter<T: IntoIterator<Item = Vec<Value>>>(iter: T) -> Self {
        let tuples: BTreeSet<Vec<Value>> = iter.into_iter().collect();
        let arity = tuples.iter().next().map_or(0, Vec::len);
        assert!(tuples.iter().all(|t| t.len() == arity), "answer arity mismatch");
        AnswerSet { arity, tuples }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn movie_raw() -> Vec<(&'static str, Vec<Vec<&'static str>>)> {
        vec![
            ("P", vec![vec!["PS", "LM"], vec!["PS", "MM"]]),
            ("A", vec![vec!["LM", "PS"], vec!["MM", "PS"]]),
            ("M", vec![vec!["LM", "Dr.S"], vec!["MM", "Dr.S"]]),
            ("S", vec![vec!["LM", "18m"], vec!["MM", "34m"]]),
        ]
    }

    fn movie_schema() -> Schema {
        Schema::new([("P", 2), ("A", 2), ("M", 2), ("S", 2)]).unwrap()
    }

    #[test]
    fn duplicates_are_dropped() {
        let schema = Schema::new([("R", 2)]).unwrap();
        let raw = vec![("R", vec![vec!["a", "b"], vec!["a", "b"]])];
        let (db, report) = validate_database(&schema, &raw).unwrap();
        assert_eq!(db.relation(0).len(), 1);
        assert_eq!(report.duplicates_dropped, 1);
    }

    #[test]
    fn arity_violation_is_rejected() {
        let schema = Schema::new([("R", 2)]).unwrap();
        let raw = vec![("R", vec![vec!["a", "b", "c"]])];
        assert!(matches!(
            validate_database(&schema, &raw),
            Err(Error::ArityMismatch { expected: 2, found: 3, .. })
        ));
    }

    #[test]
    fn unknown_symbol_is_rejected() {
        let schema = Schema::new([("R", 2)]).unwrap();
        let raw = vec![("S", vec![vec!["a", "b"]])];
        assert_eq!(
            validate_database(&schema, &raw).unwrap_err(),
            Error::UnknownSymbol("S".into())
        );
    }

    #[test]
    fn movie_database_size_and_domain() {
        let (db, _) = validate_database(&movie_schema(), &movie_raw()).unwrap();
        assert_eq!(db.size(), 8);
        let adom: BTreeSet<&str> = db.active_domain().into_iter().map(|v| db.name(v)).collect();
        let expected: BTreeSet<&str> = ["PS", "LM", "MM", "Dr.S", "18m", "34m"].into();
        assert_eq!(adom, expected);
    }

    #[test]
    fn empty_relations_have_size_zero() {
        let db = Database::empty(movie_schema());
        assert_eq!(db.size(), 0);
        assert!(db.active_domain().is_empty());
    }

    #[test]
    fn zero_arity_and_duplicate_symbols_rejected() {
        assert!(Schema::new([("R", 0)]).is_err());
        assert!(Schema::new([("R", 1), ("R", 2)]).is_err());
    }

    #[test]
    fn schema_classification() {
        let g = Schema::new([("E", 2), ("U", 1)]).unwrap();
        assert!(g.is_binary() && g.is_graph_schema());
        assert!(!movie_schema().is_graph_schema());
        assert!(movie_schema().is_binary());
        assert!(!Schema::new([("R", 3)]).unwrap().is_binary());
        let (ext, id) = g.extended("U", 1);
        assert_eq!(ext.name(id), "U'");
    }

    #[test]
    fn stats_of_boolean_query() {
        let schema = Schema::new([("R", 2)]).unwrap();
        let q = ConjunctiveQuery::build(&schema, &[], &[("R", &["x", "y"])]).unwrap();
        let s = query_stats(&q);
        assert!(s.free.is_empty());
        assert_eq!(s.quantified, vec![0, 1]);
        assert_eq!(s.atoms, 1);
    }

    #[test]
    fn stats_of_movie_query() {
        let q = ConjunctiveQuery::build(
            &movie_schema(),
            &["x", "y1"],
            &[("A", &["x", "y1"]), ("A", &["x", "y2"]), ("P", &["y2", "x"])],
        )
        .unwrap();
        let s = query_stats(&q);
        assert_eq!(s.free, vec![0, 1]);
        assert_eq!(s.quantified, vec![2]);
        assert_eq!(s.atoms, 3);
        assert_eq!(s.weight, 8);
    }

    #[test]
    fn stats_of_two_path() {
        let schema = Schema::new([("R", 2)]).unwrap();
        let q = ConjunctiveQuery::build(&schema, &["x", "z"], &[("R", &["x", "y"]), ("R", &["y", "z"])])
            .unwrap();
        let s = query_stats(&q);
        assert_eq!(s.free, vec![0, 2]);
        assert_eq!(s.quantified, vec![1]);
    }

    #[test]
    fn head_variable_must_occur() {
        let schema = Schema::new([("R", 2)]).unwrap();
        assert!(ConjunctiveQuery::build(&schema, &["z"], &[("R", &["x", "y"])]).is_err());
        assert!(ConjunctiveQuery::build(&schema, &["x", "x"], &[("R", &["x", "y"])]).is_err());
    }

    #[test]
    fn display_round_trip_shape() {
        let schema = Schema::new([("R", 2)]).unwrap();
        let q = ConjunctiveQuery::build(&schema, &["x"], &[("R", &["x", "y"])]).unwrap();
        assert_eq!(q.display(&schema).to_string(), "Ans(x) :- R(x,y).");
    }
}
