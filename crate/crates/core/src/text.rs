//! Line-oriented text formats for schemas, databases and queries.
//!
//! * schema: one `R/2` per line;
//! * database: facts `R(a,b).`, constants are bare tokens or `"quoted"`;
//! * query: `Ans(x,y) :- R(x,y), S(y,z).` (`<-` is accepted as well).
//!
//! `#` starts a comment that runs to the end of the line.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{validate_database, Atom, ConjunctiveQuery, Database, LoadReport, Schema, Var};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn is_bare_const_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | ',' | '"' | '#'))
}

/// Character scanner with line tracking.
struct Scanner {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Scanner {
    fn new(src: &str) -> Self {
        Scanner {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    /// Skips whitespace and comments; stops at a newline if `stop_at_newline`.
    fn skip_blank(&mut self, stop_at_newline: bool) {
        while let Some(c) = self.peek() {
            if c == '\n' && stop_at_newline {
                return;
            }
            if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                return;
            }
        }
    }

    fn expect(&mut self, want: char, stop_at_newline: bool) -> Result<()> {
        self.skip_blank(stop_at_newline);
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(parse_err(self.line, format!("expected `{want}`, found `{c}`"))),
            None => Err(parse_err(self.line, format!("expected `{want}`, found end of input"))),
        }
    }

    fn eat(&mut self, want: char, stop_at_newline: bool) -> bool {
        self.skip_blank(stop_at_newline);
        if self.peek() == Some(want) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, stop_at_newline: bool, what: &str) -> Result<String> {
        self.skip_blank(stop_at_newline);
        match self.peek() {
            Some(c) if is_ident_start(c) => {}
            Some(c) => return Err(parse_err(self.line, format!("expected {what}, found `{c}`"))),
            None => return Err(parse_err(self.line, format!("expected {what}, found end of input"))),
        }
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !is_ident_char(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        Ok(s)
    }

    fn constant(&mut self) -> Result<String> {
        self.skip_blank(true);
        match self.peek() {
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some('"') => return Ok(s),
                        Some('\\') => match self.bump() {
                            Some(c @ ('"' | '\\')) => s.push(c),
                            Some('n') => s.push('\n'),
                            _ => return Err(parse_err(self.line, "bad escape in quoted constant")),
                        },
                        Some('\n') | None => {
                            return Err(parse_err(self.line, "unterminated quoted constant"))
                        }
                        Some(c) => s.push(c),
                    }
                }
            }
            Some(c) if is_bare_const_char(c) => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if !is_bare_const_char(c) {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(s)
            }
            Some(c) => Err(parse_err(self.line, format!("expected constant, found `{c}`"))),
            None => Err(parse_err(self.line, "expected constant, found end of input")),
        }
    }

    fn at_line_end(&mut self) -> bool {
        self.skip_blank(true);
        matches!(self.peek(), None | Some('\n'))
    }
}

/// Parses a schema file of `R/2` lines.
pub fn parse_schema(src: &str) -> Result<Schema> {
    let mut sc = Scanner::new(src);
    let mut symbols = Vec::new();
    loop {
        sc.skip_blank(false);
        if sc.peek().is_none() {
            break;
        }
        let line = sc.line;
        let name = sc.ident(true, "relation name")?;
        sc.expect('/', true)?;
        sc.skip_blank(true);
        let mut digits = String::new();
        while let Some(c) = sc.peek().filter(char::is_ascii_digit) {
            digits.push(c);
            sc.bump();
        }
        let arity: usize = digits
            .parse()
            .map_err(|_| parse_err(line, format!("bad arity for `{name}`")))?;
        if !sc.at_line_end() {
            return Err(parse_err(line, "trailing characters after arity"));
        }
        symbols.push((line, name, arity));
    }
    let mut seen = HashMap::new();
    for (line, name, arity) in &symbols {
        if *arity == 0 {
            return Err(parse_err(*line, format!("`{name}` has arity 0")));
        }
        if seen.insert(name.clone(), *line).is_some() {
            return Err(parse_err(*line, format!("duplicate symbol `{name}`")));
        }
    }
    Schema::new(symbols.into_iter().map(|(_, n, a)| (n, a)))
}

/// A parsed fact together with its source line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fact {
    pub line: usize,
    pub symbol: String,
    pub args: Vec<String>,
}

/// Parses facts `R(a,b).`; the trailing dot is optional.
pub fn parse_facts(src: &str) -> Result<Vec<Fact>> {
    let mut sc = Scanner::new(src);
    let mut facts = Vec::new();
    loop {
        sc.skip_blank(false);
        if sc.peek().is_none() {
            break;
        }
        let line = sc.line;
        let symbol = sc.ident(true, "relation name")?;
        sc.expect('(', true)?;
        let mut args = Vec::new();
        if !sc.eat(')', true) {
            loop {
                args.push(sc.constant()?);
                if sc.eat(',', true) {
                    continue;
                }
                sc.expect(')', true)?;
                break;
            }
        }
        sc.eat('.', true);
        facts.push(Fact { line, symbol, args });
    }
    Ok(facts)
}

/// Parses and validates a database file against `schema`.
pub fn parse_database(src: &str, schema: &Schema) -> Result<(Database, LoadReport)> {
    let facts = parse_facts(src)?;
    for f in &facts {
        let id = schema
            .lookup(&f.symbol)
            .ok_or_else(|| parse_err(f.line, Error::UnknownSymbol(f.symbol.clone()).to_string()))?;
        if schema.arity(id) != f.args.len() {
            let e = Error::ArityMismatch {
                symbol: f.symbol.clone(),
                expected: schema.arity(id),
                found: f.args.len(),
            };
            return Err(parse_err(f.line, e.to_string()));
        }
    }
    let raw: Vec<(&str, Vec<Vec<&str>>)> = facts
        .iter()
        .map(|f| {
            let row = f.args.iter().map(String::as_str).collect();
            (f.symbol.as_str(), vec![row])
        })
        .collect();
    validate_database(schema, &raw)
}

/// Parses a rule `Ans(x,y) :- R(x,y), S(y,z).`
pub fn parse_query(src: &str, schema: &Schema) -> Result<ConjunctiveQuery> {
    let mut sc = Scanner::new(src);
    let mut names: Vec<String> = Vec::new();
    let mut ids: HashMap<String, Var> = HashMap::new();
    let mut intern = |s: String, names: &mut Vec<String>| -> Var {
        *ids.entry(s.clone()).or_insert_with(|| {
            names.push(s);
            names.len() - 1
        })
    };

    sc.ident(false, "head name")?;
    let head_line = sc.line;
    sc.expect('(', false)?;
    let mut head_names = Vec::new();
    if !sc.eat(')', false) {
        loop {
            head_names.push(sc.ident(false, "variable")?);
            if sc.eat(',', false) {
                continue;
            }
            sc.expect(')', false)?;
            break;
        }
    }
    sc.skip_blank(false);
    let line = sc.line;
    match (sc.bump(), sc.bump()) {
        (Some(':'), Some('-')) | (Some('<'), Some('-')) => {}
        _ => return Err(parse_err(line, "expected `:-` after head")),
    }

    let mut atoms = Vec::new();
    loop {
        let line = sc.line;
        let name = sc.ident(false, "relation name")?;
        let symbol = schema
            .lookup(&name)
            .ok_or_else(|| parse_err(line, Error::UnknownSymbol(name.clone()).to_string()))?;
        sc.expect('(', false)?;
        let mut args = Vec::new();
        if !sc.eat(')', false) {
            loop {
                let v = sc.ident(false, "variable")?;
                args.push(intern(v, &mut names));
                if sc.eat(',', false) {
                    continue;
                }
                sc.expect(')', false)?;
                break;
            }
        }
        if args.len() != schema.arity(symbol) {
            let e = Error::ArityMismatch {
                symbol: name,
                expected: schema.arity(symbol),
                found: args.len(),
            };
            return Err(parse_err(line, e.to_string()));
        }
        atoms.push(Atom::new(symbol, args));
        if sc.eat(',', false) {
            continue;
        }
        sc.eat('.', false);
        sc.skip_blank(false);
        if let Some(c) = sc.peek() {
            return Err(parse_err(sc.line, format!("unexpected `{c}` after query")));
        }
        break;
    }

    let mut head = Vec::with_capacity(head_names.len());
    for h in head_names {
        match ids.get(&h) {
            Some(&v) => head.push(v),
            None => {
                return Err(parse_err(
                    head_line,
                    format!("head variable `{h}` occurs in no atom"),
                ))
            }
        }
    }
    ConjunctiveQuery::new(schema, head, atoms, names)
}

/// Parses a single constant token (bare or quoted) spanning all of `src`.
pub fn parse_constant(src: &str) -> Result<String> {
    let mut sc = Scanner::new(src);
    let c = sc.constant()?;
    if !sc.at_line_end() {
        return Err(parse_err(sc.line, "trailing input after constant"));
    }
    Ok(c)
}

pub fn render_constant(s: &str) -> String {
    if !s.is_empty() && s.chars().all(is_bare_const_char) && !s.ends_with('.') {
        s.to_string()
    } else {
        let mut out = String::from("\"");
        for c in s.chars() {
            match c {
                '"' => out.push_str("\\\""),
                '\\' => out.push_str("\\\\"),
                '\n' => out.push_str("\\n"),
                c => out.push(c),
            }
        }
        out.push('"');
        out
    }
}

pub fn render_schema(schema: &Schema) -> String {
    let mut out = String::new();
    for s in schema.symbols() {
        out.push_str(&format!("{}/{}\n", s.name, s.arity));
    }
    out
}

pub fn render_database(db: &Database) -> String {
    let mut out = String::new();
    for (id, rel) in db.relations().iter().enumerate() {
        for t in rel.iter() {
            let args: Vec<String> = t.iter().map(|&v| render_constant(db.name(v))).collect();
            out.push_str(&format!("{}({}).\n", db.schema().name(id), args.join(",")));
        }
    }
    out
}

/// Renders an answer tuple using display strings, e.g. `(LM,PS)`.
pub fn render_tuple(db_names: &[String], tuple: &[u32]) -> String {
    let parts: Vec<String> = tuple
        .iter()
        .map(|&v| render_constant(&db_names[v as usize]))
        .collect();
    format!("({})", parts.join(","))
}
