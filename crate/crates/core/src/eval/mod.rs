//! Query evaluation on a color index.
//!
//! A query over the graph schema is first rewritten so that loop atoms
//! `E(x,x)` become `L(x)`, then split into connected components. Each
//! component is a tree query: it is evaluated on the color database and its
//! colored answers are expanded through the per-color neighbor lists.

pub mod count;
pub mod pipeline;

use crate::analysis::{connected_components, is_acyclic_binary, is_free_connex_acyclic_binary, variable_order, VariableOrder};
use crate::engine::{Cursor, JoinPlan, OpCounter};
use crate::error::Result;
use crate::index::ColorIndex;
use crate::model::{Atom, ConjunctiveQuery, Value, Var};

pub use count::{count_component, CountScalar};

/// Replaces each `E(x,x)` by `L(x)`; the result is over the loop-labeled
/// schema of `idx`.
pub fn rewrite_loops(idx: &ColorIndex, q: &ConjunctiveQuery) -> Result<ConjunctiveQuery> {
    let e = idx.edge_symbol();
    let atoms = q
        .atoms()
        .iter()
        .map(|a| {
            if a.symbol == e && a.args[0] == a.args[1] {
                Atom::new(idx.loop_symbol(), vec![a.args[0]])
            } else {
                a.clone()
            }
        })
        .collect();
    ConjunctiveQuery::new(idx.schema(), q.head().to_vec(), atoms, q.var_names().to_vec())
}

#[derive(Debug)]
struct ComponentPlan {
    order: VariableOrder,
    free: Vec<bool>,
    num_free: usize,
    plan: JoinPlan,
    /// Parent position in `order` of each of the first `num_free` entries.
    parent_pos: Vec<usize>,
    /// Per head position of the component: (position in `order`, position
    /// in the full head).
    head: Vec<(usize, usize)>,
}

/// A query prepared for evaluation on one index.
#[derive(Debug)]
pub struct Prepared<'i> {
    idx: &'i ColorIndex,
    comps: Vec<ComponentPlan>,
    head_len: usize,
}

/// Analyses `q` (over the graph schema of `idx`) and preprocesses each
/// component on the color database.
pub fn prepare<'i>(idx: &'i ColorIndex, q: &ConjunctiveQuery, ops: &OpCounter) -> Result<Prepared<'i>> {
    let ql = rewrite_loops(idx, q)?;
    if q.is_boolean() {
        if !is_acyclic_binary(&ql) {
            return Err(crate::Error::NotAcyclic);
        }
    } else if !is_free_connex_acyclic_binary(&ql) {
        return Err(crate::Error::NotFreeConnex);
    }
    let mut comps = Vec::new();
    for comp in connected_components(idx.schema(), &ql) {
        let cq = &comp.query;
        let order = variable_order(idx.schema(), cq)?;
        let free = cq.free_mask();
        let num_free = free.iter().filter(|&&f| f).count();
        let head: Vec<Var> = order.order[..num_free].to_vec();
        let engine_q = ConjunctiveQuery::new(idx.schema(), head, cq.atoms().to_vec(), cq.var_names().to_vec())?;
        let plan = JoinPlan::preprocess(&engine_q, idx.dcol(), ops)?;
        let mut pos = vec![usize::MAX; order.order.len()];
        for (i, &x) in order.order.iter().enumerate() {
            pos[x] = i;
        }
        let parent_pos = order.order[..num_free]
            .iter()
            .map(|&x| order.parent[x].map_or(usize::MAX, |p| pos[p]))
            .collect();
        let head = cq
            .head()
            .iter()
            .zip(&comp.head_positions)
            .map(|(&x, &p)| (pos[x], p))
            .collect();
        comps.push(ComponentPlan {
            order,
            free,
            num_free,
            plan,
            parent_pos,
            head,
        });
    }
    Ok(Prepared {
        idx,
        comps,
        head_len: q.head().len(),
    })
}

impl<'i> Prepared<'i> {
    pub fn head_len(&self) -> usize {
        self.head_len
    }

    pub fn num_components(&self) -> usize {
        self.comps.len()
    }

    pub fn is_nonempty(&self) -> bool {
        self.comps.iter().all(|c| c.plan.is_satisfiable())
    }

    pub fn count<N: CountScalar>(&self, ops: &OpCounter) -> N {
        let mut total = N::one();
        for c in &self.comps {
            let n: N = count_component(self.idx, &c.order, &c.free, ops);
            if n.is_zero() {
                return N::zero();
            }
            total = total * n;
        }
        total
    }

    /// Enumerates the answers; each step of work is charged to `steps`.
    pub fn enumerate<'a>(&'a self, steps: &'a OpCounter) -> Answers<'a> {
        Answers {
            prep: self,
            steps,
            locals: Vec::new(),
            started: false,
            done: false,
        }
    }
}

/// Expansion of one component's colored answers into vertex tuples.
struct Local<'a> {
    idx: &'a ColorIndex,
    comp: &'a ComponentPlan,
    steps: &'a OpCounter,
    colored: Cursor<'a>,
    colors: Vec<Value>,
    choice: Vec<(&'a [u32], usize)>,
    started: bool,
}

impl<'a> Local<'a> {
    fn new(idx: &'a ColorIndex, comp: &'a ComponentPlan, steps: &'a OpCounter) -> Self {
        Local {
            idx,
            comp,
            steps,
            colored: comp.plan.cursor(steps),
            colors: Vec::new(),
            choice: Vec::with_capacity(comp.num_free),
            started: false,
        }
    }

    fn value(&self, i: usize) -> u32 {
        let (list, at) = self.choice[i];
        list[at]
    }

    fn fill(&mut self, from: usize) {
        self.choice.truncate(from);
        for i in from..self.comp.num_free {
            self.steps.add(1);
            let list = if i == 0 {
                self.idx.class(self.colors[0])
            } else {
                self.idx
                    .neighbors_by_color(self.value(self.comp.parent_pos[i]), self.colors[i])
            };
            assert!(!list.is_empty(), "colored answer does not expand");
            self.choice.push((list, 0));
        }
    }

    fn next_colored(&mut self) -> bool {
        match self.colored.next() {
            Some(c) => {
                self.colors = c;
                self.fill(0);
                true
            }
            None => false,
        }
    }

    fn advance(&mut self) -> bool {
        if !self.started {
            self.started = true;
            return self.next_colored();
        }
        let mut i = self.choice.len();
        while i > 0 {
            self.steps.add(1);
            i -= 1;
            let (list, at) = self.choice[i];
            if at + 1 < list.len() {
                self.choice[i].1 = at + 1;
                self.fill(i + 1);
                return true;
            }
        }
        self.next_colored()
    }
}

/// Constant-delay answer cursor: a nested odometer over the components.
pub struct Answers<'a> {
    prep: &'a Prepared<'a>,
    steps: &'a OpCounter,
    locals: Vec<Local<'a>>,
    started: bool,
    done: bool,
}

impl Answers<'_> {
    fn emit(&self) -> Vec<Value> {
        self.steps.add(1);
        let mut out = vec![0; self.prep.head_len];
        for (l, c) in self.locals.iter().zip(&self.prep.comps) {
            for &(i, p) in &c.head {
                out[p] = l.value(i);
            }
        }
        out
    }
}

impl Iterator for Answers<'_> {
    type Item = Vec<Value>;

    fn next(&mut self) -> Option<Vec<Value>> {
        if self.done {
            return None;
        }
        let (idx, steps) = (self.prep.idx, self.steps);
        if !self.started {
            self.started = true;
            for c in &self.prep.comps {
                let mut l = Local::new(idx, c, steps);
                if !l.advance() {
                    self.done = true;
                    return None;
                }
                self.locals.push(l);
            }
            return Some(self.emit());
        }
        let mut i = self.locals.len();
        while i > 0 {
            i -= 1;
            if self.locals[i].advance() {
                for j in i + 1..self.locals.len() {
                    let mut l = Local::new(idx, &self.prep.comps[j], steps);
                    l.advance();
                    self.locals[j] = l;
                }
                return Some(self.emit());
            }
        }
        self.done = true;
        None
    }
}

/// True iff `q` has an answer, i.e. its Boolean closure holds.
pub fn eval_bool(idx: &ColorIndex, q: &ConjunctiveQuery, ops: &OpCounter) -> Result<bool> {
    Ok(prepare(idx, &q.boolean_closure(), ops)?.is_nonempty())
}

pub fn eval_count<N: CountScalar>(idx: &ColorIndex, q: &ConjunctiveQuery, ops: &OpCounter) -> Result<N> {
    Ok(prepare(idx, q, ops)?.count(ops))
}

pub fn eval_enum(idx: &ColorIndex, q: &ConjunctiveQuery) -> Result<Vec<Vec<Value>>> {
    let ops = OpCounter::new();
    let prep = prepare(idx, q, &ops)?;
    let answers = prep.enumerate(&ops).collect();
    Ok(answers)
}
