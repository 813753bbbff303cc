//! End-to-end indexing of databases over arbitrary schemas.
//!
//! Graph databases with a symmetric edge relation are indexed directly.
//! Other binary databases go through the gadget encoding first; databases
//! of higher arity are first encoded as binary ones.

use std::fmt;

use crate::analysis::{compute_fc1ghd, is_fc_acyclic_for};
use crate::arb2bin::{self, QueryEncoding2};
use crate::bin2graph::{self, QueryEncodingHat};
use crate::engine::OpCounter;
use crate::error::{Error, Result};
use crate::eval::{prepare, Answers, CountScalar, Prepared};
use crate::index::serial::{push_section, read_sections, write_sections, Sections, HEADER};
use crate::index::{ColorIndex, IndexStats};
use crate::model::{ConjunctiveQuery, Database, Schema, Value};
use crate::text::{parse_constant, parse_schema, render_constant, render_schema, render_tuple};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Graph schema with a symmetric edge relation.
    Direct,
    /// Binary schema, through the gadget graph.
    Binary,
    /// Any schema, through the binary encoding and then the gadget graph.
    Arbitrary,
}

impl Route {
    pub fn for_database(db: &Database) -> Route {
        let s = db.schema();
        match s.graph_edge() {
            Some(e) => {
                let r = db.relation(e);
                if r.iter().all(|t| r.contains(&[t[1], t[0]])) {
                    Route::Direct
                } else {
                    Route::Binary
                }
            }
            None if s.is_binary() => Route::Binary,
            None => Route::Arbitrary,
        }
    }

    fn keyword(self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::Binary => "binary",
            Route::Arbitrary => "arbitrary",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A color index plus what is needed to translate source queries and
/// decode their answers.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexedDatabase {
    route: Route,
    source_schema: Schema,
    constants: Vec<String>,
    source_size: usize,
    /// Binary encoding node tables (arbitrary route only).
    tuple_count: usize,
    projections: Vec<Vec<Value>>,
    index: ColorIndex,
}

/// A source query translated to the graph schema of the index.
#[derive(Clone, Debug)]
pub struct Translated {
    pub graph_query: ConjunctiveQuery,
    pub hat: Option<QueryEncodingHat>,
    pub binary: Option<QueryEncoding2>,
}

impl IndexedDatabase {
    pub fn build(db: &Database) -> Result<Self> {
        Self::build_with(db, Route::for_database(db))
    }

    pub fn build_with(db: &Database, route: Route) -> Result<Self> {
        let mut tuple_count = 0;
        let mut projections = Vec::new();
        let index = match route {
            Route::Direct => ColorIndex::build(db)?,
            Route::Binary => ColorIndex::build(&bin2graph::encode_db(db)?.db)?,
            Route::Arbitrary => {
                let enc = arb2bin::encode_db(db);
                tuple_count = enc.tuples.len();
                projections = enc.projections.clone();
                ColorIndex::build(&bin2graph::encode_db(&enc.db)?.db)?
            }
        };
        Ok(IndexedDatabase {
            route,
            source_schema: db.schema().clone(),
            constants: db.dict().names().to_vec(),
            source_size: db.size(),
            tuple_count,
            projections,
            index,
        })
    }

    pub fn route(&self) -> Route {
        self.route
    }

    pub fn source_schema(&self) -> &Schema {
        &self.source_schema
    }

    pub fn index(&self) -> &ColorIndex {
        &self.index
    }

    pub fn stats(&self) -> IndexStats {
        self.index.stats(self.source_size)
    }

    /// Renders an answer in source constants, e.g. `(LM,PS)`.
    pub fn render_tuple(&self, t: &[Value]) -> String {
        render_tuple(&self.constants, t)
    }

    pub fn translate(&self, q: &ConjunctiveQuery) -> Result<Translated> {
        if !is_fc_acyclic_for(&self.source_schema, q) {
            return Err(if q.is_boolean() {
                Error::NotAcyclic
            } else {
                Error::NotFreeConnex
            });
        }
        match self.route {
            Route::Direct => Ok(Translated {
                graph_query: q.clone(),
                hat: None,
                binary: None,
            }),
            Route::Binary => {
                let sigma = bin2graph::graph_schema(&self.source_schema)?;
                let hat = bin2graph::encode_query(&sigma, &self.source_schema, q)?;
                Ok(Translated {
                    graph_query: hat.query.clone(),
                    hat: Some(hat),
                    binary: None,
                })
            }
            Route::Arbitrary => {
                let sigma2 = arb2bin::binary_schema(&self.source_schema);
                let ghd = compute_fc1ghd(q)?;
                let enc2 = arb2bin::encode_query(&sigma2, q, &ghd)?;
                let sigma_hat = bin2graph::graph_schema(&sigma2.schema)?;
                let hat = bin2graph::encode_query(&sigma_hat, &sigma2.schema, &enc2.query)?;
                Ok(Translated {
                    graph_query: hat.query.clone(),
                    hat: Some(hat),
                    binary: Some(enc2),
                })
            }
        }
    }

    fn projection(&self, v: Value) -> Option<&[Value]> {
        let i = (v as usize).checked_sub(self.tuple_count)?;
        self.projections.get(i).map(Vec::as_slice)
    }

    /// Maps an answer of the translated query back to the source.
    pub fn decode(&self, tr: &Translated, t: &[Value]) -> Result<Vec<Value>> {
        let t = match &tr.hat {
            Some(h) => h.decode(t),
            None => t.to_vec(),
        };
        match &tr.binary {
            Some(enc2) => arb2bin::decode_with(&t, enc2, |v| self.projection(v)),
            None => Ok(t),
        }
    }

    pub fn prepare(&self, q: &ConjunctiveQuery, ops: &OpCounter) -> Result<PreparedQuery<'_>> {
        let tr = self.translate(q)?;
        let prep = prepare(&self.index, &tr.graph_query, ops)?;
        Ok(PreparedQuery { db: self, tr, prep })
    }

    pub fn eval_bool(&self, q: &ConjunctiveQuery, ops: &OpCounter) -> Result<bool> {
        Ok(self.prepare(&q.boolean_closure(), ops)?.is_nonempty())
    }

    pub fn eval_count<N: CountScalar>(&self, q: &ConjunctiveQuery, ops: &OpCounter) -> Result<N> {
        Ok(self.prepare(q, ops)?.count(ops))
    }

    pub fn eval_enum(&self, q: &ConjunctiveQuery) -> Result<Vec<Vec<Value>>> {
        let ops = OpCounter::new();
        let p = self.prepare(q, &ops)?;
        let out = p.enumerate(&ops).collect();
        Ok(out)
    }

    pub fn write(&self) -> String {
        let mut out = format!("{HEADER}\n");
        push_section(
            &mut out,
            "SOURCE",
            &[
                format!("route {}", self.route),
                format!("size {}", self.source_size),
                format!("tuples {}", self.tuple_count),
            ],
        );
        let schema: Vec<String> = render_schema(&self.source_schema).lines().map(String::from).collect();
        push_section(&mut out, "SOURCE_SCHEMA", &schema);
        let constants: Vec<String> = self.constants.iter().map(|c| render_constant(c)).collect();
        push_section(&mut out, "CONSTANTS", &constants);
        let projections: Vec<String> = self
            .projections
            .iter()
            .map(|p| p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))
            .collect();
        push_section(&mut out, "PROJECTIONS", &projections);
        write_sections(&self.index, &mut out);
        out.push_str("[END]\n");
        out
    }

    pub fn read(src: &str) -> Result<Self> {
        let bad = |m: String| Error::Format(m);
        let s = Sections::parse(src)?;
        let mut route = None;
        let mut source_size = None;
        let mut tuple_count = None;
        for l in s.get("SOURCE")? {
            match l.split_once(' ') {
                Some(("route", r)) => {
                    route = Some(match r {
                        "direct" => Route::Direct,
                        "binary" => Route::Binary,
                        "arbitrary" => Route::Arbitrary,
                        _ => return Err(bad(format!("unknown route `{r}`"))),
                    })
                }
                Some(("size", n)) => source_size = n.parse().ok(),
                Some(("tuples", n)) => tuple_count = n.parse().ok(),
                _ => return Err(bad(format!("bad source line `{l}`"))),
            }
        }
        let route = route.ok_or_else(|| bad("missing route".into()))?;
        let source_size = source_size.ok_or_else(|| bad("missing or bad size".into()))?;
        let tuple_count: usize = tuple_count.ok_or_else(|| bad("missing or bad tuple count".into()))?;
        let source_schema =
            parse_schema(&s.get("SOURCE_SCHEMA")?.join("\n")).map_err(|e| bad(format!("source schema: {e}")))?;
        let constants = s
            .get("CONSTANTS")?
            .iter()
            .map(|c| parse_constant(c).map_err(|e| bad(format!("constant: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let projections = s
            .get("PROJECTIONS")?
            .iter()
            .map(|l| {
                l.split_whitespace()
                    .map(|t| t.parse::<Value>().map_err(|_| bad(format!("bad projection entry `{t}`"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let index = read_sections(&s)?;
        let n = index.graph().num_vertices();
        let consistent = match route {
            Route::Direct => index.dict().names() == constants.as_slice(),
            Route::Binary => index.dict().names().starts_with(&constants),
            Route::Arbitrary => {
                tuple_count + projections.len() <= n
                    && projections.iter().flatten().all(|&v| (v as usize) < constants.len())
            }
        };
        if !consistent || (route != Route::Arbitrary && (tuple_count != 0 || !projections.is_empty())) {
            return Err(bad("source tables do not match the index".into()));
        }
        Ok(IndexedDatabase {
            route,
            source_schema,
            constants,
            source_size,
            tuple_count,
            projections,
            index,
        })
    }
}

/// A source query prepared on an indexed database.
pub struct PreparedQuery<'a> {
    db: &'a IndexedDatabase,
    tr: Translated,
    prep: Prepared<'a>,
}

impl<'a> PreparedQuery<'a> {
    pub fn translated(&self) -> &Translated {
        &self.tr
    }

    pub fn is_nonempty(&self) -> bool {
        self.prep.is_nonempty()
    }

    pub fn count<N: CountScalar>(&self, ops: &OpCounter) -> N {
        self.prep.count(ops)
    }

    /// Source answers, decoded on the fly.
    pub fn enumerate<'b>(&'b self, steps: &'b OpCounter) -> impl Iterator<Item = Vec<Value>> + 'b {
        let inner: Answers<'b> = self.prep.enumerate(steps);
        inner.map(move |t| self.db.decode(&self.tr, &t).expect("indexed answer decodes"))
    }
}
