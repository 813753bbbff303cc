//! Node-labeled graphs and their coarsest stable colorings.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Database, Dictionary, Schema, SymbolId};

/// Undirected graph with self-loops and a label set per vertex.
///
/// Adjacency is stored in CSR form; a self-loop makes a vertex its own
/// neighbor (listed once).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    labels: Vec<Vec<SymbolId>>,
}

impl LabeledGraph {
    /// Builds the graph on `labels.len()` vertices from undirected edges.
    pub fn new<I>(labels: Vec<Vec<SymbolId>>, edges: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let n = labels.len();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (a, b) in edges {
            adj[a as usize].push(b);
            if a != b {
                adj[b as usize].push(a);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for mut ns in adj {
            ns.sort_unstable();
            ns.dedup();
            targets.extend(ns);
            offsets.push(targets.len());
        }
        let labels = labels
            .into_iter()
            .map(|mut l| {
                l.sort_unstable();
                l.dedup();
                l
            })
            .collect();
        LabeledGraph {
            offsets,
            targets,
            labels,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    /// Number of undirected edges, loops included.
    pub fn num_edges(&self) -> usize {
        let loops = (0..self.num_vertices() as u32).filter(|&v| self.has_loop(v)).count();
        (self.targets.len() - loops) / 2 + loops
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.targets[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn has_loop(&self, v: u32) -> bool {
        self.neighbors(v).binary_search(&v).is_ok()
    }

    pub fn labels(&self, v: u32) -> &[SymbolId] {
        &self.labels[v as usize]
    }
}

/// A database over a graph schema with loops also recorded as label `L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopEncoded {
    /// Source schema extended by the loop label.
    pub schema: Schema,
    pub edge: SymbolId,
    pub loop_label: SymbolId,
    pub graph: LabeledGraph,
    pub dict: Dictionary,
}

impl LoopEncoded {
    /// The same data as a database over the extended schema.
    pub fn to_database(&self) -> Database {
        let g = &self.graph;
        let mut rels: Vec<Vec<Vec<u32>>> = vec![Vec::new(); self.schema.len()];
        for v in 0..g.num_vertices() as u32 {
            for &w in g.neighbors(v) {
                rels[self.edge].push(vec![v, w]);
            }
            for &l in g.labels(v) {
                rels[l].push(vec![v]);
            }
        }
        Database::from_tuples(self.schema.clone(), self.dict.clone(), rels)
    }

    /// Total number of tuples of the loop-labeled database.
    pub fn size(&self) -> usize {
        let g = &self.graph;
        (0..g.num_vertices() as u32)
            .map(|v| g.neighbors(v).len() + g.labels(v).len())
            .sum()
    }
}

/// Checks that `db` is a node-labeled graph with a symmetric edge relation
/// and records self-loops under a fresh unary symbol.
pub fn encode_loops(db: &Database) -> Result<LoopEncoded> {
    let edge = db.schema().graph_edge().ok_or(Error::NotGraphSchema)?;
    let e = db.relation(edge);
    for t in e.iter() {
        if !e.contains(&[t[1], t[0]]) {
            return Err(Error::AsymmetricEdgeRelation(
                db.name(t[0]).to_string(),
                db.name(t[1]).to_string(),
            ));
        }
    }
    let (schema, loop_label) = db.schema().extended("L", 1);
    let mut labels = vec![Vec::new(); db.universe()];
    for (id, rel) in db.relations().iter().enumerate() {
        if id != edge {
            for t in rel.iter() {
                labels[t[0] as usize].push(id);
            }
        }
    }
    for t in e.iter() {
        if t[0] == t[1] {
            labels[t[0] as usize].push(loop_label);
        }
    }
    let edges = e.iter().filter(|t| t[0] <= t[1]).map(|t| (t[0], t[1]));
    Ok(LoopEncoded {
        schema,
        edge,
        loop_label,
        graph: LabeledGraph::new(labels, edges),
        dict: db.dict().clone(),
    })
}

/// A surjective vertex coloring onto `0..num_colors()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    col: Vec<u32>,
    classes: Vec<Vec<u32>>,
}

impl Coloring {
    /// Renumbers an arbitrary partition so that classes are ordered by their
    /// smallest vertex.
    pub fn canonical(raw: &[u32]) -> Self {
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let mut classes: Vec<Vec<u32>> = Vec::new();
        let col = raw
            .iter()
            .enumerate()
            .map(|(v, c)| {
                let next = remap.len() as u32;
                let id = *remap.entry(*c).or_insert(next);
                if id as usize == classes.len() {
                    classes.push(Vec::new());
                }
                classes[id as usize].push(v as u32);
                id
            })
            .collect();
        Coloring { col, classes }
    }

    pub fn color(&self, v: u32) -> u32 {
        self.col[v as usize]
    }

    pub fn colors(&self) -> &[u32] {
        &self.col
    }

    pub fn num_colors(&self) -> usize {
        self.classes.len()
    }

    /// Vertices of color `c` in increasing order.
    pub fn class(&self, c: u32) -> &[u32] {
        &self.classes[c as usize]
    }

    pub fn class_size(&self, c: u32) -> usize {
        self.classes[c as usize].len()
    }

    /// `vertex<TAB>color` lines.
    pub fn dump(&self, dict: &Dictionary) -> String {
        let mut out = String::new();
        for (v, c) in self.col.iter().enumerate() {
            out.push_str(&format!("{}\t{}\n", dict.name(v as u32), c));
        }
        out
    }
}

/// Coarsest stable coloring refining the vertex labels.
///
/// Partition refinement with a worklist of splitter classes; when a class
/// is split outside the worklist, all parts but the largest are enqueued.
pub fn refine(g: &LabeledGraph) -> Coloring {
    let n = g.num_vertices();
    let mut class_of = vec![0usize; n];
    let mut members: Vec<Vec<u32>> = Vec::new();
    let mut by_label: HashMap<&[SymbolId], usize> = HashMap::new();
    for v in 0..n {
        let next = members.len();
        let c = *by_label.entry(g.labels(v as u32)).or_insert(next);
        if c == members.len() {
            members.push(Vec::new());
        }
        class_of[v] = c;
        members[c].push(v as u32);
    }
    let mut pos = vec![0usize; n];
    for ms in &members {
        for (i, &v) in ms.iter().enumerate() {
            pos[v as usize] = i;
        }
    }
    let mut in_work = vec![true; members.len()];
    let mut work: Vec<usize> = (0..members.len()).rev().collect();
    let mut cnt = vec![0u32; n];
    let mut marked: Vec<Vec<u32>> = vec![Vec::new(); members.len()];
    let mut touched = Vec::new();
    let mut touched_classes = Vec::new();

    while let Some(s) = work.pop() {
        in_work[s] = false;
        let splitter = members[s].clone();
        for &v in &splitter {
            for &u in g.neighbors(v) {
                if cnt[u as usize] == 0 {
                    touched.push(u);
                }
                cnt[u as usize] += 1;
            }
        }
        for &u in &touched {
            let c = class_of[u as usize];
            if marked[c].is_empty() {
                touched_classes.push(c);
            }
            marked[c].push(u);
        }
        for &c in &touched_classes {
            let mut group = std::mem::take(&mut marked[c]);
            let untouched = members[c].len() - group.len();
            group.sort_unstable_by_key(|&u| cnt[u as usize]);
            let mut runs: Vec<&[u32]> = group
                .chunk_by(|a, b| cnt[*a as usize] == cnt[*b as usize])
                .collect();
            if untouched == 0 && runs.len() == 1 {
                continue;
            }
            // the untouched part (if any) keeps id c, otherwise the largest run
            if untouched == 0 {
                let largest = (0..runs.len()).max_by_key(|&i| (runs[i].len(), usize::MAX - i)).unwrap();
                runs.remove(largest);
            }
            let mut parts = vec![(c, members[c].len() - runs.iter().map(|r| r.len()).sum::<usize>())];
            for run in runs {
                let nc = members.len();
                members.push(Vec::with_capacity(run.len()));
                in_work.push(false);
                marked.push(Vec::new());
                for &u in run {
                    let i = pos[u as usize];
                    let last = *members[c].last().unwrap();
                    members[c].swap_remove(i);
                    if last != u {
                        pos[last as usize] = i;
                    }
                    class_of[u as usize] = nc;
                    pos[u as usize] = members[nc].len();
                    members[nc].push(u);
                }
                parts.push((nc, run.len()));
            }
            if in_work[c] {
                for &(p, _) in &parts[1..] {
                    in_work[p] = true;
                    work.push(p);
                }
            } else {
                let largest = (0..parts.len()).max_by_key(|&i| (parts[i].1, usize::MAX - i)).unwrap();
                for (i, &(p, _)) in parts.iter().enumerate() {
                    if i != largest {
                        in_work[p] = true;
                        work.push(p);
                    }
                }
            }
        }
        for &u in &touched {
            cnt[u as usize] = 0;
        }
        touched.clear();
        touched_classes.clear();
    }
    let raw: Vec<u32> = class_of.iter().map(|&c| c as u32).collect();
    Coloring::canonical(&raw)
}

/// Returns `(v, w, c)` with `col(v) = col(w)` but different numbers of
/// neighbors of color `c`, or `None` if `col` is stable.
pub fn stability_witness(g: &LabeledGraph, col: &[u32]) -> Option<(u32, u32, u32)> {
    let profile = |v: u32| {
        let mut p: Vec<u32> = g.neighbors(v).iter().map(|&u| col[u as usize]).collect();
        p.sort_unstable();
        p
    };
    let mut rep: HashMap<u32, (u32, Vec<u32>)> = HashMap::new();
    for v in 0..g.num_vertices() as u32 {
        let p = profile(v);
        match rep.get(&col[v as usize]) {
            None => {
                rep.insert(col[v as usize], (v, p));
            }
            Some((w, q)) if *q != p => {
                let count = |xs: &[u32], c: u32| xs.iter().filter(|&&x| x == c).count();
                let c = p
                    .iter()
                    .chain(q.iter())
                    .copied()
                    .find(|&c| count(&p, c) != count(q, c))
                    .expect("profiles differ in some color");
                return Some((*w, v, c));
            }
            Some(_) => {}
        }
    }
    None
}

pub fn is_stable(g: &LabeledGraph, col: &[u32]) -> bool {
    stability_witness(g, col).is_none()
}

/// True if `col` assigns equal colors only to vertices with equal labels.
pub fn refines_labels(g: &LabeledGraph, col: &[u32]) -> bool {
    let mut seen: HashMap<u32, &[SymbolId]> = HashMap::new();
    (0..g.num_vertices() as u32).all(|v| *seen.entry(col[v as usize]).or_insert(g.labels(v)) == g.labels(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_database;

    fn unlabeled(n: usize, edges: &[(u32, u32)]) -> LabeledGraph {
        LabeledGraph::new(vec![Vec::new(); n], edges.iter().copied())
    }

    fn cycle(n: u32) -> LabeledGraph {
        unlabeled(n as usize, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    #[test]
    fn path_has_two_colors() {
        let c = refine(&unlabeled(3, &[(0, 1), (1, 2)]));
        assert_eq!(c.colors(), &[0, 1, 0]);
    }

    #[test]
    fn cycles_are_monochrome() {
        for n in [3, 6, 17] {
            assert_eq!(refine(&cycle(n)).num_colors(), 1);
        }
    }

    #[test]
    fn binary_tree_colors_by_depth() {
        let h = 5u32;
        let n = (1u32 << (h + 1)) - 1;
        let edges: Vec<(u32, u32)> = (1..n).map(|v| ((v - 1) / 2, v)).collect();
        assert_eq!(refine(&unlabeled(n as usize, &edges)).num_colors(), h as usize + 1);
    }

    #[test]
    fn degree_only_difference_is_detected() {
        // star center vs leaves, plus an isolated vertex: all differ by degree
        let c = refine(&unlabeled(5, &[(0, 1), (0, 2), (0, 3)]));
        assert_eq!(c.num_colors(), 3);
    }

    #[test]
    fn loops_count_as_own_neighbor() {
        // two isolated vertices, one with a loop; no labels
        let g = unlabeled(2, &[(1, 1)]);
        assert!(g.has_loop(1));
        assert_eq!(refine(&g).num_colors(), 2);
        assert_eq!(g.neighbors(1), &[1]);
    }

    #[test]
    fn stability_checks() {
        let g = unlabeled(3, &[(0, 1), (1, 2)]);
        assert!(is_stable(&g, &[0, 1, 2]));
        assert_eq!(stability_witness(&g, &[0, 0, 0]), Some((0, 1, 0)));
        assert!(is_stable(&g, refine(&g).colors()));
    }

    #[test]
    fn canonical_numbering_by_smallest_vertex() {
        let c = Coloring::canonical(&[7, 3, 7, 9]);
        assert_eq!(c.colors(), &[0, 1, 0, 2]);
        assert_eq!(c.class(0), &[0, 2]);
    }

    #[test]
    fn loop_encoding_labels_loops() {
        let schema = Schema::new([("E", 2), ("U", 1)]).unwrap();
        let raw = vec![("E", vec![vec!["a", "a"], vec!["a", "b"], vec!["b", "a"]]), ("U", vec![vec!["b"]])];
        let db = validate_database(&schema, &raw).unwrap().0;
        let enc = encode_loops(&db).unwrap();
        assert_eq!(enc.schema.name(enc.loop_label), "L");
        assert_eq!(enc.graph.labels(0), &[enc.loop_label]);
        assert_eq!(enc.graph.labels(1), &[1]);
        assert_eq!(enc.graph.neighbors(0), &[0, 1]);
        assert_eq!(enc.to_database().size(), enc.size());
        assert_eq!(enc.size(), db.size() + 1);
    }

    #[test]
    fn asymmetric_edges_are_rejected() {
        let schema = Schema::new([("E", 2)]).unwrap();
        let db = validate_database(&schema, &[("E", vec![vec!["a", "b"]])]).unwrap().0;
        assert_eq!(
            encode_loops(&db).unwrap_err(),
            Error::AsymmetricEdgeRelation("a".into(), "b".into())
        );
    }
}
