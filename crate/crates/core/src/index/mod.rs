//! The color index: coarsest stable coloring of the loop-labeled graph, the
//! lookup tables that expand colors back into vertices, and the color
//! database.

pub mod serial;

use std::collections::HashMap;

use crate::error::Result;
use crate::model::{Database, Dictionary, Schema, SymbolId};
use crate::refine::{encode_loops, is_stable, refine, Coloring, LabeledGraph, LoopEncoded};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorIndex {
    loops: LoopEncoded,
    coloring: Coloring,
    /// Neighbors of each vertex, grouped by color; shares offsets with the
    /// graph adjacency.
    nbr: Vec<u32>,
    segment: HashMap<(u32, u32), (u32, u32)>,
    /// Per color `c`, the pairs `(c', numN(c,c'))` with a positive count.
    deg_rows: Vec<Vec<(u32, u32)>>,
    dcol: Database,
}

/// Size measures of an index.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexStats {
    pub db_size: usize,
    pub dl_size: usize,
    pub vertices: usize,
    pub colors: usize,
    pub dcol_size: usize,
    pub ratio: f64,
}

impl IndexStats {
    pub fn line(&self) -> String {
        format!(
            "|D|={} |D_L|={} |V|={} |C|={} |D_col|={} ratio={:.4}",
            self.db_size, self.dl_size, self.vertices, self.colors, self.dcol_size, self.ratio
        )
    }
}

impl ColorIndex {
    /// Builds the index of a database over a graph schema with a symmetric
    /// edge relation.
    pub fn build(db: &Database) -> Result<Self> {
        let loops = encode_loops(db)?;
        let coloring = refine(&loops.graph);
        Ok(Self::from_parts(loops, coloring))
    }

    /// Derives all tables from the loop-labeled graph and a stable coloring.
    pub fn from_parts(loops: LoopEncoded, coloring: Coloring) -> Self {
        let g = &loops.graph;
        let n = g.num_vertices();
        let mut nbr = Vec::new();
        let mut segment = HashMap::new();
        for v in 0..n as u32 {
            let start = nbr.len();
            let mut ns: Vec<u32> = g.neighbors(v).to_vec();
            ns.sort_by_key(|&u| (coloring.color(u), u));
            nbr.extend_from_slice(&ns);
            let mut i = start;
            while i < nbr.len() {
                let c = coloring.color(nbr[i]);
                let mut j = i;
                while j < nbr.len() && coloring.color(nbr[j]) == c {
                    j += 1;
                }
                segment.insert((v, c), (i as u32, j as u32));
                i = j;
            }
        }
        let k = coloring.num_colors();
        let mut deg_rows = Vec::with_capacity(k);
        for c in 0..k as u32 {
            let rep = coloring.class(c)[0];
            let mut row: Vec<(u32, u32)> = Vec::new();
            for &u in g.neighbors(rep) {
                let cu = coloring.color(u);
                match row.iter_mut().find(|(d, _)| *d == cu) {
                    Some(e) => e.1 += 1,
                    None => row.push((cu, 1)),
                }
            }
            row.sort_unstable();
            deg_rows.push(row);
        }
        let dcol = color_database(&loops, &coloring, &deg_rows);
        ColorIndex {
            loops,
            coloring,
            nbr,
            segment,
            deg_rows,
            dcol,
        }
    }

    pub fn loops(&self) -> &LoopEncoded {
        &self.loops
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.loops.graph
    }

    /// Schema of the loop-labeled graph and of the color database.
    pub fn schema(&self) -> &Schema {
        &self.loops.schema
    }

    pub fn edge_symbol(&self) -> SymbolId {
        self.loops.edge
    }

    pub fn loop_symbol(&self) -> SymbolId {
        self.loops.loop_label
    }

    pub fn dict(&self) -> &Dictionary {
        &self.loops.dict
    }

    pub fn coloring(&self) -> &Coloring {
        &self.coloring
    }

    pub fn num_colors(&self) -> usize {
        self.coloring.num_colors()
    }

    pub fn color(&self, v: u32) -> u32 {
        self.coloring.color(v)
    }

    pub fn class(&self, c: u32) -> &[u32] {
        self.coloring.class(c)
    }

    pub fn class_size(&self, c: u32) -> usize {
        self.coloring.class_size(c)
    }

    /// Neighbors of `v` that have color `c` (including `v` for a loop).
    pub fn neighbors_by_color(&self, v: u32, c: u32) -> &[u32] {
        match self.segment.get(&(v, c)) {
            Some(&(s, e)) => &self.nbr[s as usize..e as usize],
            None => &[],
        }
    }

    /// Number of `c'`-colored neighbors of any vertex of color `c`.
    pub fn num_n(&self, c: u32, c2: u32) -> u32 {
        let row = &self.deg_rows[c as usize];
        row.binary_search_by_key(&c2, |&(d, _)| d)
            .map_or(0, |i| row[i].1)
    }

    /// Nonzero `(c', numN(c,c'))` pairs, ordered by `c'`.
    pub fn deg_row(&self, c: u32) -> &[(u32, u32)] {
        &self.deg_rows[c as usize]
    }

    pub fn dcol(&self) -> &Database {
        &self.dcol
    }

    /// Labels shared by all vertices of color `c`.
    pub fn color_labels(&self, c: u32) -> &[SymbolId] {
        self.loops.graph.labels(self.class(c)[0])
    }

    pub fn stats(&self, db_size: usize) -> IndexStats {
        let vertices = self.graph().num_vertices();
        IndexStats {
            db_size,
            dl_size: self.loops.size(),
            vertices,
            colors: self.num_colors(),
            dcol_size: self.dcol.size(),
            ratio: if vertices == 0 {
                0.0
            } else {
                self.num_colors() as f64 / vertices as f64
            },
        }
    }

    /// Checks the table invariants against the underlying graph; returns a
    /// description of the first violation.
    pub fn verify(&self) -> std::result::Result<(), String> {
        let g = self.graph();
        let col = self.coloring.colors();
        if !is_stable(g, col) {
            return Err("coloring is not stable".into());
        }
        let total: usize = (0..self.num_colors() as u32).map(|c| self.class_size(c)).sum();
        if total != g.num_vertices() {
            return Err("class sizes do not sum to the vertex count".into());
        }
        for v in 0..g.num_vertices() as u32 {
            let c = self.color(v);
            if g.labels(v) != self.color_labels(c) {
                return Err(format!("vertex {v} labels differ from its class"));
            }
            // the segments of v are disjoint, so covering deg(v) means no
            // neighbor color is missing from the row
            let mut sum = 0;
            for &(c2, m) in self.deg_row(c) {
                let ns = self.neighbors_by_color(v, c2);
                if ns.len() as u32 != m {
                    return Err(format!("|N({v},{c2})| differs from numN({c},{c2})"));
                }
                if ns.iter().any(|&u| self.color(u) != c2 || g.neighbors(v).binary_search(&u).is_err()) {
                    return Err(format!("N({v},{c2}) holds a wrong vertex"));
                }
                sum += ns.len();
            }
            if sum != g.neighbors(v).len() {
                return Err(format!("numN row of color {c} does not sum to deg({v})"));
            }
        }
        let d = &self.dcol;
        for u in self.schema().unary_symbols() {
            let rel = d.relation(u);
            let mut expected = 0;
            for c in 0..self.num_colors() as u32 {
                let has = self.class(c).iter().any(|&v| g.labels(v).contains(&u));
                expected += has as usize;
                if rel.contains(&[c]) != has {
                    return Err(format!("color database wrong for unary symbol {u}, color {c}"));
                }
            }
            if rel.len() != expected {
                return Err(format!("color database has stray tuples for unary symbol {u}"));
            }
        }
        let e = d.relation(self.edge_symbol());
        let pairs: usize = (0..self.num_colors() as u32).map(|c| self.deg_row(c).len()).sum();
        if e.len() != pairs {
            return Err("color edges differ from the positive numN entries".into());
        }
        for t in e.iter() {
            if self.num_n(t[0], t[1]) == 0 {
                return Err(format!("color edge ({},{}) inconsistent", t[0], t[1]));
            }
            if !e.contains(&[t[1], t[0]]) {
                return Err("color edges not symmetric".into());
            }
        }
        Ok(())
    }
}

fn color_database(loops: &LoopEncoded, coloring: &Coloring, deg_rows: &[Vec<(u32, u32)>]) -> Database {
    let k = coloring.num_colors();
    let dict = Dictionary::anonymous("c", k);
    let mut rels: Vec<Vec<Vec<u32>>> = vec![Vec::new(); loops.schema.len()];
    for c in 0..k as u32 {
        for &l in loops.graph.labels(coloring.class(c)[0]) {
            rels[l].push(vec![c]);
        }
        for &(c2, _) in &deg_rows[c as usize] {
            rels[loops.edge].push(vec![c, c2]);
        }
    }
    Database::from_tuples(loops.schema.clone(), dict, rels)
}
