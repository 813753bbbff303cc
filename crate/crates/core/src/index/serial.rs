//! Text serialization of a color index.
//!
//! The file is a header line followed by sections `[NAME] <count>`, each
//! holding exactly `count` lines. Derived tables are written out for
//! inspection and checked against the recomputed ones on load.

use crate::error::{Error, Result};
use crate::index::ColorIndex;
use crate::model::Dictionary;
use crate::refine::{Coloring, LabeledGraph, LoopEncoded};
use crate::text::{parse_constant, parse_schema, render_constant, render_schema};

pub const HEADER: &str = "colorindex v1";

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Parsed sections of an index file, in file order.
#[derive(Debug)]
pub struct Sections {
    list: Vec<(String, Vec<String>)>,
}

impl Sections {
    pub fn parse(src: &str) -> Result<Self> {
        let mut lines = src.split('\n');
        match lines.next() {
            Some(h) if h == HEADER => {}
            Some(h) => return Err(format_err(format!("bad header `{h}`"))),
            None => return Err(format_err("empty file")),
        }
        let mut list = Vec::new();
        loop {
            let head = lines.next().ok_or_else(|| format_err("missing [END]"))?;
            if head == "[END]" {
                break;
            }
            let (name, count) = head
                .strip_prefix('[')
                .and_then(|r| r.split_once("] "))
                .ok_or_else(|| format_err(format!("bad section header `{head}`")))?;
            let count: usize = count
                .parse()
                .map_err(|_| format_err(format!("bad line count in `{head}`")))?;
            let mut body = Vec::with_capacity(count);
            for _ in 0..count {
                let l = lines
                    .next()
                    .ok_or_else(|| format_err(format!("section [{name}] is truncated")))?;
                body.push(l.to_string());
            }
            list.push((name.to_string(), body));
        }
        if lines.any(|l| !l.is_empty()) {
            return Err(format_err("data after [END]"));
        }
        Ok(Sections { list })
    }

    pub fn get(&self, name: &str) -> Result<&[String]> {
        self.list
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
            .ok_or_else(|| format_err(format!("missing section [{name}]")))
    }
}

pub fn push_section(out: &mut String, name: &str, lines: &[String]) {
    out.push_str(&format!("[{name}] {}\n", lines.len()));
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_ids(line: &str, what: &str) -> Result<Vec<u32>> {
    line.split_whitespace()
        .map(|t| t.parse().map_err(|_| format_err(format!("bad {what} `{t}`"))))
        .collect()
}

fn derived(idx: &ColorIndex) -> [(&'static str, Vec<String>); 4] {
    let k = idx.num_colors() as u32;
    let n = idx.graph().num_vertices() as u32;
    let classes = (0..k).map(|c| join(idx.class(c))).collect();
    let nbr = (0..n)
        .map(|v| join((0..k).flat_map(|c| idx.neighbors_by_color(v, c).iter().copied())))
        .collect();
    let deg = (0..k)
        .map(|c| join(idx.deg_row(c).iter().map(|(d, m)| format!("{d}:{m}"))))
        .collect();
    let d = idx.dcol();
    let mut dcol = Vec::new();
    for (id, rel) in d.relations().iter().enumerate() {
        for t in rel.iter() {
            dcol.push(format!("{} {}", d.schema().name(id), join(t)));
        }
    }
    [("CLASSES", classes), ("NBR", nbr), ("DEG", deg), ("DCOL", dcol)]
}

/// Appends the index sections to `out`.
pub fn write_sections(idx: &ColorIndex, out: &mut String) {
    let g = idx.graph();
    let n = g.num_vertices() as u32;
    let schema: Vec<String> = render_schema(idx.schema()).lines().map(String::from).collect();
    push_section(out, "SCHEMA", &schema);
    push_section(
        out,
        "INDEX",
        &[format!("edge {}", idx.edge_symbol()), format!("loop {}", idx.loop_symbol())],
    );
    let vertices: Vec<String> = (0..n)
        .map(|v| {
            let labels = g.labels(v);
            let l = if labels.is_empty() {
                "-".to_string()
            } else {
                labels.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            };
            format!("{l} {}", render_constant(idx.dict().name(v)))
        })
        .collect();
    push_section(out, "VERTICES", &vertices);
    push_section(out, "COLORS", &[join(idx.coloring().colors())]);
    for (name, lines) in derived(idx) {
        push_section(out, name, &lines);
    }
}

/// Rebuilds an index from its sections and checks every derived table.
pub fn read_sections(s: &Sections) -> Result<ColorIndex> {
    let schema = parse_schema(&s.get("SCHEMA")?.join("\n")).map_err(|e| format_err(format!("schema: {e}")))?;
    let mut edge = None;
    let mut loop_label = None;
    for l in s.get("INDEX")? {
        let (k, v) = l.split_once(' ').ok_or_else(|| format_err(format!("bad index line `{l}`")))?;
        let v: usize = v.parse().map_err(|_| format_err(format!("bad index line `{l}`")))?;
        match k {
            "edge" => edge = Some(v),
            "loop" => loop_label = Some(v),
            _ => return Err(format_err(format!("unknown index key `{k}`"))),
        }
    }
    let edge = edge.ok_or_else(|| format_err("missing edge symbol"))?;
    let loop_label = loop_label.ok_or_else(|| format_err("missing loop symbol"))?;
    if schema.graph_edge() != Some(edge) || loop_label + 1 != schema.len() || schema.arity(loop_label) != 1 {
        return Err(format_err("edge or loop symbol does not match the schema"));
    }

    let mut dict = Dictionary::new();
    let mut labels = Vec::new();
    for l in s.get("VERTICES")? {
        let (ls, name) = l.split_once(' ').ok_or_else(|| format_err(format!("bad vertex line `{l}`")))?;
        let name = parse_constant(name).map_err(|e| format_err(format!("vertex name: {e}")))?;
        if dict.intern(&name) as usize != labels.len() {
            return Err(format_err(format!("duplicate vertex `{name}`")));
        }
        let mut ids = Vec::new();
        if ls != "-" {
            for t in ls.split(',') {
                let id: usize = t.parse().map_err(|_| format_err(format!("bad label `{t}`")))?;
                if id >= schema.len() || schema.arity(id) != 1 {
                    return Err(format_err(format!("label {id} is not a unary symbol")));
                }
                ids.push(id);
            }
        }
        labels.push(ids);
    }
    let n = labels.len();

    let nbr = s.get("NBR")?;
    if nbr.len() != n {
        return Err(format_err("neighbor table size differs from vertex count"));
    }
    let mut edges = Vec::new();
    for (v, l) in nbr.iter().enumerate() {
        for w in parse_ids(l, "neighbor")? {
            if w as usize >= n {
                return Err(format_err(format!("neighbor {w} out of range")));
            }
            edges.push((v as u32, w));
        }
    }
    let colors = s.get("COLORS")?;
    let raw = match colors {
        [line] => parse_ids(line, "color")?,
        _ => return Err(format_err("colors must be one line")),
    };
    if raw.len() != n {
        return Err(format_err("color count differs from vertex count"));
    }
    let coloring = Coloring::canonical(&raw);
    if coloring.colors() != raw.as_slice() {
        return Err(format_err("coloring is not in canonical numbering"));
    }
    let graph = LabeledGraph::new(labels, edges);
    let loops = LoopEncoded {
        schema,
        edge,
        loop_label,
        graph,
        dict,
    };
    let idx = ColorIndex::from_parts(loops, coloring);
    for (name, lines) in derived(&idx) {
        if s.get(name)? != lines.as_slice() {
            return Err(format_err(format!("section [{name}] does not match the recomputed table")));
        }
    }
    idx.verify().map_err(format_err)?;
    Ok(idx)
}

/// Serializes a standalone index.
pub fn write(idx: &ColorIndex) -> String {
    let mut out = format!("{HEADER}\n");
    write_sections(idx, &mut out);
    out.push_str("[END]\n");
    out
}

pub fn read(src: &str) -> Result<ColorIndex> {
    read_sections(&Sections::parse(src)?)
}
