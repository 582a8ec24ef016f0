//! Structural operational semantics: enabled steps of a configuration,
//! guardedness of recursive specifications, and bounded state-space generation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{apply_effect, eval_guard, mailbox_receive, mailbox_send, DataState};
use crate::error::{Error, Result};
use crate::model::{MailRole, Model};
use crate::term::{self, Action, ActionKind, Name, RecursiveSpec, Term, T};

pub const DEFAULT_BOUND: usize = 1_000_000;

/// A term paired with a data state; `term == None` is the terminated configuration √.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub term: Option<T>,
    pub state: DataState,
}

impl Config {
    pub fn new(term: T, state: DataState) -> Config {
        Config { term: Some(term), state }
    }

    pub fn is_done(&self) -> bool {
        self.term.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepLabel {
    Tau,
    Visible(Vec<Action>),
    /// A move that executes no event (guard test, ε, shadow, process creation).
    Eps { guard: bool },
}

impl StepLabel {
    pub fn is_silent(&self) -> bool {
        !matches!(self, StepLabel::Visible(_))
    }

    pub fn render(&self) -> String {
        match self {
            StepLabel::Tau => "tau".into(),
            StepLabel::Eps { .. } => "eps".into(),
            StepLabel::Visible(v) => {
                let mut parts: Vec<String> = v.iter().map(|a| a.to_string()).collect();
                parts.sort();
                format!("{{{}}}", parts.join(","))
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            StepLabel::Visible(v) => v.len(),
            StepLabel::Tau => 1,
            StepLabel::Eps { .. } => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Step {
    pub label: StepLabel,
    /// Events fired, before abstraction (used for effects and mailboxes).
    pub events: Vec<Action>,
    pub target: Config,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Mv {
    label: Vec<Action>,
    events: Vec<Action>,
    tokens: Vec<Action>,
    guard: Option<BTreeSet<Name>>,
    target: Option<T>,
}

impl Mv {
    fn plain_eps(&self) -> bool {
        self.label.is_empty() && self.tokens.is_empty()
    }
}

fn norm_label(mut l: Vec<Action>) -> Vec<Action> {
    if l.iter().any(|a| a.is_visible()) {
        l.retain(|a| a.is_visible());
    } else if !l.is_empty() {
        l = vec![Action::tau()];
    }
    l.sort();
    l
}

fn merge_of(l: Option<T>, r: Option<T>) -> Option<T> {
    match (l, r) {
        (None, None) => None,
        (Some(x), None) | (None, Some(x)) => Some(x),
        (Some(x), Some(y)) => Some(term::merge(x, y)),
    }
}

pub struct Engine<'m> {
    pub m: &'m Model,
    procs: HashMap<Name, T>,
}

impl<'m> Engine<'m> {
    pub fn new(m: &'m Model) -> Engine<'m> {
        let mut procs = HashMap::new();
        for s in &m.specs {
            for (n, t) in &s.equations {
                procs.entry(n.clone()).or_insert_with(|| t.clone());
            }
        }
        Engine { m, procs }
    }

    fn rhs(&self, x: &Name) -> Result<&T> {
        self.procs.get(x).ok_or_else(|| Error::UndeclaredName(x.to_string()))
    }

    fn race(&self, a: &[Action], b: &[Action]) -> bool {
        if self.m.effects.is_empty() {
            return false;
        }
        let w = |evs: &[Action]| -> BTreeSet<Name> {
            let mut out = BTreeSet::new();
            for e in evs {
                out.extend(self.m.writes(e));
            }
            out
        };
        !w(a).is_disjoint(&w(b))
    }

    fn leaf_enabled(&self, a: &Action, s: &DataState) -> bool {
        match self.m.mail_binding(a) {
            Some((MailRole::Receive, mb)) => s.count(&mb, &a.args) > 0,
            Some((MailRole::Send, mb)) => {
                s.mailbox_size(&mb) < self.m.mailbox_capacity(&mb).unwrap_or(crate::model::DEFAULT_MAILBOX_CAPACITY)
            }
            None => true,
        }
    }

    /// All steps of a configuration, including event-free moves.
    pub fn enabled_steps(&self, c: &Config) -> Result<Vec<Step>> {
        let t = match &c.term {
            Some(t) => t,
            None => return Ok(Vec::new()),
        };
        let mut stack = Vec::new();
        let mvs = self.moves(t, &c.state, &mut stack)?;
        let mut out = BTreeSet::new();
        for mv in mvs {
            if mv.label.is_empty() {
                out.insert(Step {
                    label: StepLabel::Eps { guard: mv.guard.is_some() },
                    events: Vec::new(),
                    target: Config { term: mv.target.clone(), state: c.state.clone() },
                });
                continue;
            }
            let label = if mv.label.len() == 1 && mv.label[0].is_tau() {
                StepLabel::Tau
            } else {
                StepLabel::Visible(mv.label.clone())
            };
            for s2 in self.fire(&mv.events, &c.state) {
                out.insert(Step { label: label.clone(), events: mv.events.clone(), target: Config { term: mv.target.clone(), state: s2 } });
            }
        }
        Ok(out.into_iter().collect())
    }

    /// Successor data states of firing a multiset of events: receives, then sends, then effects.
    fn fire(&self, events: &[Action], s: &DataState) -> Vec<DataState> {
        let mut cur = s.clone();
        for e in events {
            if let Some((MailRole::Receive, mb)) = self.m.mail_binding(e) {
                match mailbox_receive(&mb, &e.args, &cur) {
                    Some(n) => cur = n,
                    None => return Vec::new(),
                }
            }
        }
        for e in events {
            if let Some((MailRole::Send, mb)) = self.m.mail_binding(e) {
                match mailbox_send(self.m, &mb, &e.args, &cur) {
                    Ok(n) => cur = n,
                    Err(_) => return Vec::new(),
                }
            }
        }
        let mut states = vec![cur];
        for e in events {
            let mut next = BTreeSet::new();
            for st in &states {
                next.extend(apply_effect(self.m, e, st));
            }
            states = next.into_iter().collect();
        }
        states
    }

    fn moves(&self, t: &T, s: &DataState, stack: &mut Vec<Name>) -> Result<Vec<Mv>> {
        let mut out = match t.as_ref() {
            Term::Atom(a) => match a.kind {
                ActionKind::Delta => vec![],
                ActionKind::Eps => vec![Mv { label: vec![], events: vec![], tokens: vec![], guard: None, target: None }],
                _ => {
                    if a.is_visible() && !self.leaf_enabled(a, s) {
                        vec![]
                    } else {
                        vec![Mv { label: vec![a.clone()], events: vec![a.clone()], tokens: vec![], guard: None, target: None }]
                    }
                }
            },
            Term::Shadow(a, _) => vec![Mv { label: vec![], events: vec![], tokens: vec![a.clone()], guard: None, target: None }],
            Term::Guard(g) => {
                if eval_guard(self.m, g, s)? {
                    let mut names = BTreeSet::new();
                    g.pred_names(&mut names);
                    vec![Mv { label: vec![], events: vec![], tokens: vec![], guard: Some(names), target: None }]
                } else {
                    vec![]
                }
            }
            Term::Alt(l, r) => {
                let mut v = self.moves(l, s, stack)?;
                v.extend(self.moves(r, s, stack)?);
                v
            }
            Term::Seq(l, r) => {
                if let Some(spawned) = respawn(l, r) {
                    return self.moves(&spawned, s, stack);
                }
                self.moves(l, s, stack)?
                    .into_iter()
                    .map(|mut mv| {
                        mv.target = Some(match mv.target.take() {
                            None => r.clone(),
                            Some(l2) => term::seq(l2, r.clone()),
                        });
                        mv
                    })
                    .collect()
            }
            Term::Par(l, r) => {
                if let (Some(p), Some(q)) = (new_body(l), new_body(r)) {
                    return self.moves(&term::new_(term::merge(p, q)), s, stack);
                }
                let lm = self.moves(l, s, stack)?;
                let rm = self.moves(r, s, stack)?;
                let mut v = Vec::new();
                self.alone(&lm, r, false, true, term::par, &mut v);
                self.alone(&rm, l, true, true, term::par, &mut v);
                self.pairs(&lm, &rm, l, r, &mut v);
                v
            }
            Term::Merge(l, r) => {
                let lm = self.moves(l, s, stack)?;
                let rm = self.moves(r, s, stack)?;
                let mut v = Vec::new();
                self.alone(&lm, r, false, false, term::merge, &mut v);
                self.alone(&rm, l, true, false, term::merge, &mut v);
                self.pairs(&lm, &rm, l, r, &mut v);
                self.comms(&lm, &rm, &mut v);
                v
            }
            Term::Comm(l, r) => {
                let lm = self.moves(l, s, stack)?;
                let rm = self.moves(r, s, stack)?;
                let mut v = Vec::new();
                for mv in lm.iter().filter(|m| m.plain_eps()) {
                    if let Some(l2) = &mv.target {
                        v.push(Mv { target: Some(term::comm(l2.clone(), r.clone())), ..mv.clone() });
                    }
                }
                for mv in rm.iter().filter(|m| m.plain_eps()) {
                    if let Some(r2) = &mv.target {
                        v.push(Mv { target: Some(term::comm(l.clone(), r2.clone())), ..mv.clone() });
                    }
                }
                self.comms(&lm, &rm, &mut v);
                v
            }
            Term::Theta(x) => {
                self.need_conflicts()?;
                match theta_unfold(x) {
                    Some(u) => self.moves(&u, s, stack)?,
                    None => match x.as_ref() {
                        Term::Var(n) | Term::Call(n, _) => {
                            let rhs = self.enter(n, stack)?;
                            let v = self.moves(&term::theta(rhs), s, stack);
                            stack.pop();
                            v?
                        }
                        _ => self
                            .moves(x, s, stack)?
                            .into_iter()
                            .map(|mut mv| {
                                mv.target = mv.target.map(term::theta);
                                mv
                            })
                            .collect(),
                    },
                }
            }
            Term::Unless(x, z) => {
                self.need_conflicts()?;
                match self.unless_unfold(x, z) {
                    Some(u) => self.moves(&u, s, stack)?,
                    None => match x.as_ref() {
                        Term::Var(n) | Term::Call(n, _) => {
                            let rhs = self.enter(n, stack)?;
                            let v = self.moves(&term::unless(rhs, z.clone()), s, stack);
                            stack.pop();
                            v?
                        }
                        _ => {
                            let alph = alph_actions(z);
                            self.moves(x, s, stack)?
                                .into_iter()
                                .map(|mut mv| {
                                    mv.label = norm_label(mv.label.iter().map(|e| self.unless_atom(e, &alph)).collect());
                                    mv.target = mv.target.map(|x2| term::unless(x2, z.clone()));
                                    mv
                                })
                                .collect()
                        }
                    },
                }
            }
            Term::Encap(h, x) => self
                .moves(x, s, stack)?
                .into_iter()
                .filter(|mv| !mv.label.iter().any(|a| h.contains(a)))
                .map(|mut mv| {
                    mv.target = mv.target.map(|x2| term::encap(h.clone(), x2));
                    mv
                })
                .collect(),
            Term::Hide(i, x) => self
                .moves(x, s, stack)?
                .into_iter()
                .map(|mut mv| {
                    if mv.label.is_empty() {
                        if let Some(g) = &mv.guard {
                            if !g.is_empty() && g.iter().all(|p| i.contains_name(p)) {
                                mv.guard = None;
                                mv.label = vec![Action::tau()];
                            }
                        }
                    } else {
                        mv.label = norm_label(
                            mv.label.into_iter().map(|a| if i.contains(&a) { Action::tau() } else { a }).collect(),
                        );
                    }
                    mv.target = mv.target.map(|x2| term::hide(i.clone(), x2));
                    mv
                })
                .collect(),
            Term::Var(n) | Term::Call(n, _) => {
                let rhs = self.enter(n, stack)?;
                let v = self.moves(&rhs, s, stack);
                stack.pop();
                v?
            }
            Term::New(x) => vec![Mv { label: vec![], events: vec![], tokens: vec![], guard: None, target: Some(x.clone()) }],
        };
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn enter(&self, n: &Name, stack: &mut Vec<Name>) -> Result<T> {
        if stack.contains(n) {
            return Err(Error::UnguardedRecursion { spec: self.m.main_spec().name.to_string(), var: n.to_string() });
        }
        let rhs = self.rhs(n)?.clone();
        stack.push(n.clone());
        Ok(rhs)
    }

    fn need_conflicts(&self) -> Result<()> {
        if self.m.conflicts.is_empty() {
            return Err(Error::UndeclaredConflictPair("no conflict pairs declared".into()));
        }
        Ok(())
    }

    /// One side moving while the other is carried. In `∥` only event-free, shadow-free moves may go alone.
    fn alone(&self, mvs: &[Mv], other: &T, flip: bool, par: bool, ctor: fn(T, T) -> T, out: &mut Vec<Mv>) {
        for mv in mvs {
            if par && !mv.plain_eps() {
                continue;
            }
            let target = match &mv.target {
                None => other.clone(),
                Some(x) if flip => ctor(other.clone(), x.clone()),
                Some(x) => ctor(x.clone(), other.clone()),
            };
            out.push(Mv { target: Some(target), ..mv.clone() });
        }
    }

    fn pairs(&self, lm: &[Mv], rm: &[Mv], l: &T, r: &T, out: &mut Vec<Mv>) {
        for a in lm.iter().filter(|m| !m.plain_eps()) {
            for b in rm.iter().filter(|m| !m.plain_eps()) {
                if !tokens_matched(&a.tokens, &b.label) || !tokens_matched(&b.tokens, &a.label) {
                    continue;
                }
                if self.race(&a.events, &b.events) {
                    // conflicting writes: the events cannot be fired together
                    for (mv, other, left) in [(a, r, true), (b, l, false)] {
                        if mv.label.is_empty() {
                            continue;
                        }
                        let target = match &mv.target {
                            None => other.clone(),
                            Some(x) if left => term::merge(x.clone(), other.clone()),
                            Some(x) => term::merge(other.clone(), x.clone()),
                        };
                        out.push(Mv { tokens: vec![], target: Some(target), ..mv.clone() });
                    }
                    continue;
                }
                let mut label = a.label.clone();
                label.extend(b.label.iter().cloned());
                if label.is_empty() {
                    continue;
                }
                let mut events = a.events.clone();
                events.extend(b.events.iter().cloned());
                events.sort();
                out.push(Mv {
                    label: norm_label(label),
                    events,
                    tokens: vec![],
                    guard: None,
                    target: merge_of(a.target.clone(), b.target.clone()),
                });
            }
        }
    }

    fn comms(&self, lm: &[Mv], rm: &[Mv], out: &mut Vec<Mv>) {
        for a in lm {
            if a.label.len() != 1 || !a.tokens.is_empty() || !a.label[0].is_visible() {
                continue;
            }
            for b in rm {
                if b.label.len() != 1 || !b.tokens.is_empty() || !b.label[0].is_visible() {
                    continue;
                }
                if let Some(c) = self.m.gamma(&a.label[0], &b.label[0]) {
                    out.push(Mv {
                        label: vec![c.clone()],
                        events: vec![c.clone()],
                        tokens: vec![],
                        guard: None,
                        target: merge_of(a.target.clone(), b.target.clone()),
                    });
                }
            }
        }
    }

    fn unless_atom(&self, e: &Action, alph: &BTreeSet<Action>) -> Action {
        if !e.is_visible() {
            return e.clone();
        }
        for f in alph {
            if self.m.conflict(e, f) {
                return Action::tau();
            }
            for (g1, g2) in self.m.conflicts.iter() {
                if g1 == f && self.m.order(g2, e) {
                    return Action::tau();
                }
            }
        }
        e.clone()
    }

    fn unless_unfold(&self, x: &T, z: &T) -> Option<T> {
        let u = |y: &T| term::unless(y.clone(), z.clone());
        Some(match x.as_ref() {
            Term::Alt(a, b) => term::alt(u(a), u(b)),
            Term::Seq(a, b) => term::seq(u(a), u(b)),
            Term::Par(a, b) => term::par(u(a), u(b)),
            Term::Comm(a, b) => term::comm(u(a), u(b)),
            Term::Atom(e) => term::act(self.unless_atom(e, &alph_actions(z))),
            Term::Guard(_) | Term::Shadow(..) => x.clone(),
            Term::Theta(y) => term::unless(theta_unfold(y)?, z.clone()),
            Term::Unless(y, w) => term::unless(self.unless_unfold(y, w)?, z.clone()),
            _ => return None,
        })
    }
}

/// Tokens must each consume a distinct equal action of the partner's label.
fn tokens_matched(tokens: &[Action], partner: &[Action]) -> bool {
    let mut avail: Vec<&Action> = partner.iter().collect();
    for t in tokens {
        match avail.iter().position(|a| *a == t) {
            Some(i) => {
                avail.remove(i);
            }
            None => return false,
        }
    }
    true
}

fn alph_actions(z: &Term) -> BTreeSet<Action> {
    let mut out = BTreeSet::new();
    term::actions(z, &mut out);
    out
}

fn theta_unfold(x: &T) -> Option<T> {
    let th = |y: &T| term::theta(y.clone());
    Some(match x.as_ref() {
        Term::Atom(_) | Term::Guard(_) | Term::Shadow(..) => x.clone(),
        Term::Alt(a, b) => term::alt(term::unless(th(a), b.clone()), term::unless(th(b), a.clone())),
        Term::Seq(a, b) => term::seq(th(a), th(b)),
        Term::Par(a, b) => term::alt(
            term::par(term::unless(th(a), b.clone()), b.clone()),
            term::par(term::unless(th(b), a.clone()), a.clone()),
        ),
        Term::Comm(a, b) => term::alt(
            term::comm(term::unless(th(a), b.clone()), b.clone()),
            term::comm(term::unless(th(b), a.clone()), a.clone()),
        ),
        _ => return None,
    })
}

/// The body of a process-creation term, looking through `∥`/`≬` of creations.
fn new_body(t: &T) -> Option<T> {
    match t.as_ref() {
        Term::New(x) => Some(x.clone()),
        Term::Par(a, b) | Term::Merge(a, b) => Some(term::merge(new_body(a)?, new_body(b)?)),
        _ => None,
    }
}

/// `new(x)·y` runs `x` alongside `y`; sums and sequences on the left are opened up to reach the creation.
fn respawn(l: &T, r: &T) -> Option<T> {
    if let Some(body) = new_body(l) {
        // creating an empty process leaves nothing behind (otherwise a loop through
        // `new(ε)` would pile up idle ε components)
        if only_eps(&body) {
            return Some(r.clone());
        }
        return Some(term::merge(body, r.clone()));
    }
    match l.as_ref() {
        Term::Alt(a, b) if has_head_new(a) || has_head_new(b) => {
            Some(term::alt(term::seq(a.clone(), r.clone()), term::seq(b.clone(), r.clone())))
        }
        Term::Seq(a, b) if has_head_new(a) => Some(term::seq(a.clone(), term::seq(b.clone(), r.clone()))),
        _ => None,
    }
}

fn only_eps(t: &T) -> bool {
    match t.as_ref() {
        Term::Merge(a, b) => only_eps(a) && only_eps(b),
        _ => t.is_eps(),
    }
}

fn has_head_new(t: &T) -> bool {
    match t.as_ref() {
        Term::New(_) => true,
        Term::Par(..) | Term::Merge(..) => new_body(t).is_some(),
        Term::Alt(a, b) => has_head_new(a) || has_head_new(b),
        Term::Seq(a, _) => has_head_new(a),
        _ => false,
    }
}

pub fn enabled_steps(c: &Config, m: &Model) -> Result<Vec<Step>> {
    Engine::new(m).enabled_steps(c)
}

// ---------------------------------------------------------------- guardedness

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Guardedness {
    pub guarded: bool,
    /// Variables forming an unguarded cycle, in order.
    pub cycle: Vec<String>,
}

fn unguarded(t: &Term, out: &mut BTreeSet<Name>) -> bool {
    // returns whether every terminating run of t performs a visible action
    match t {
        Term::Atom(a) => matches!(a.kind, ActionKind::Visible | ActionKind::Delta),
        Term::Shadow(..) | Term::Guard(_) => false,
        Term::Var(n) | Term::Call(n, _) => {
            out.insert(n.clone());
            false
        }
        Term::Seq(l, r) => {
            let vl = unguarded(l, out);
            if vl {
                true
            } else {
                unguarded(r, out)
            }
        }
        Term::Alt(l, r) => {
            let a = unguarded(l, out);
            let b = unguarded(r, out);
            a && b
        }
        Term::Par(l, r) | Term::Merge(l, r) | Term::Comm(l, r) => {
            let a = unguarded(l, out);
            let b = unguarded(r, out);
            a || b
        }
        Term::Encap(_, x) | Term::New(x) => unguarded(x, out),
        Term::Hide(_, x) | Term::Theta(x) | Term::Unless(x, _) => {
            unguarded(x, out);
            false
        }
    }
}

pub fn check_guardedness(spec: &RecursiveSpec, _m: &Model) -> Guardedness {
    let mut graph: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
    for (x, rhs) in &spec.equations {
        let mut vs = BTreeSet::new();
        unguarded(rhs, &mut vs);
        graph.insert(x.clone(), vs);
    }
    // iterative DFS with colors to find a cycle
    let mut color: BTreeMap<Name, u8> = BTreeMap::new();
    for start in graph.keys() {
        if color.get(start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut path: Vec<Name> = vec![start.clone()];
        let mut iters: Vec<std::vec::IntoIter<Name>> =
            vec![graph[start].iter().cloned().collect::<Vec<_>>().into_iter()];
        color.insert(start.clone(), 1);
        while let Some(it) = iters.last_mut() {
            match it.next() {
                Some(y) => match color.get(&y).copied().unwrap_or(0) {
                    1 => {
                        let i = path.iter().position(|p| *p == y).unwrap_or(0);
                        let mut cycle: Vec<String> = path[i..].iter().map(|n| n.to_string()).collect();
                        cycle.push(y.to_string());
                        return Guardedness { guarded: false, cycle };
                    }
                    0 if graph.contains_key(&y) => {
                        color.insert(y.clone(), 1);
                        iters.push(graph[&y].iter().cloned().collect::<Vec<_>>().into_iter());
                        path.push(y);
                    }
                    _ => {}
                },
                None => {
                    iters.pop();
                    if let Some(done) = path.pop() {
                        color.insert(done, 2);
                    }
                }
            }
        }
    }
    Guardedness { guarded: true, cycle: Vec::new() }
}

// ---------------------------------------------------------------- state-space generation

/// Which event-free moves are folded into their source state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Silent {
    /// Every event-free move is absorbed (used for strong step equivalence).
    CollapseAll,
    /// Guard tests stay visible as `eps` transitions; other event-free moves are absorbed.
    KeepGuards,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    pub states: Vec<Config>,
    pub initial: usize,
    pub transitions: Vec<(usize, StepLabel, usize)>,
    pub terminating: Vec<bool>,
}

impl Lts {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn successors(&self) -> Vec<Vec<(StepLabel, usize)>> {
        let mut out = vec![Vec::new(); self.states.len()];
        for (s, l, d) in &self.transitions {
            out[*s].push((l.clone(), *d));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct LtsOptions {
    pub bound: usize,
    pub jobs: usize,
    pub silent: Silent,
}

impl Default for LtsOptions {
    fn default() -> Self {
        LtsOptions { bound: DEFAULT_BOUND, jobs: 1, silent: Silent::CollapseAll }
    }
}

type Expansion = (bool, Vec<(StepLabel, Config)>);

impl<'m> Engine<'m> {
    /// Outgoing observable transitions of a state after absorbing event-free moves.
    fn expand(&self, c: &Config, silent: Silent) -> Result<Expansion> {
        let mut seen: BTreeSet<Config> = BTreeSet::new();
        let mut todo = vec![c.clone()];
        let mut term = false;
        let mut out = BTreeSet::new();
        seen.insert(c.clone());
        while let Some(cur) = todo.pop() {
            if cur.is_done() {
                term = true;
                continue;
            }
            for st in self.enabled_steps(&cur)? {
                let absorb = match st.label {
                    StepLabel::Eps { guard } => silent == Silent::CollapseAll || !guard,
                    _ => false,
                };
                if absorb {
                    if seen.insert(st.target.clone()) {
                        todo.push(st.target);
                    }
                } else {
                    let label = match st.label {
                        StepLabel::Eps { .. } => StepLabel::Eps { guard: true },
                        l => l,
                    };
                    out.insert((label, st.target));
                }
            }
        }
        Ok((term, out.into_iter().collect()))
    }
}

pub fn generate_lts(m: &Model, root: &T, opts: &LtsOptions) -> Result<Lts> {
    generate_lts_from(m, Config::new(root.clone(), DataState::initial(m)), opts)
}

pub fn generate_lts_from(m: &Model, init: Config, opts: &LtsOptions) -> Result<Lts> {
    let engine = Engine::new(m);
    let mut ids: HashMap<Config, usize> = HashMap::new();
    let mut states = vec![init.clone()];
    ids.insert(init, 0);
    let mut terminating = vec![false];
    let mut transitions = Vec::new();
    let mut frontier = vec![0usize];
    let pool = if opts.jobs > 1 {
        Some(rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build().map_err(|e| Error::Invalid(e.to_string()))?)
    } else {
        None
    };
    while !frontier.is_empty() {
        let expanded: Vec<Result<Expansion>> = match &pool {
            Some(p) => p.install(|| frontier.par_iter().map(|&i| engine.expand(&states[i], opts.silent)).collect()),
            None => frontier.iter().map(|&i| engine.expand(&states[i], opts.silent)).collect(),
        };
        let mut next = Vec::new();
        for (&src, exp) in frontier.iter().zip(expanded) {
            let (term, succ) = exp?;
            terminating[src] = term;
            let mut seen_tr = BTreeSet::new();
            for (label, target) in succ {
                let dst = match ids.get(&target) {
                    Some(&d) => d,
                    None => {
                        let d = states.len();
                        if d >= opts.bound {
                            return Err(Error::StateBoundExceeded(opts.bound));
                        }
                        ids.insert(target.clone(), d);
                        states.push(target);
                        terminating.push(false);
                        next.push(d);
                        d
                    }
                };
                if seen_tr.insert((label.clone(), dst)) {
                    transitions.push((src, label, dst));
                }
            }
        }
        frontier = next;
    }
    Ok(Lts { states, initial: 0, transitions, terminating })
}

/// Convenience: the state space of a closed term under a model (or an empty model).
pub fn lts_of(m: &Model, t: &T, silent: Silent) -> Result<Lts> {
    generate_lts(m, t, &LtsOptions { silent, ..LtsOptions::default() })
}

pub fn aut(lts: &Lts) -> String {
    let has_term = lts.terminating.iter().any(|&b| b);
    let n = lts.states.len() + usize::from(has_term);
    let sink = lts.states.len();
    let mut lines = Vec::new();
    for (s, l, d) in &lts.transitions {
        lines.push(format!("({},\"{}\",{})", s, l.render(), d));
    }
    for (i, &t) in lts.terminating.iter().enumerate() {
        if t {
            lines.push(format!("({},\"tick\",{})", i, sink));
        }
    }
    let mut out = format!("des ({},{},{})\n", lts.initial, lines.len(), n);
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

pub fn dot(lts: &Lts) -> String {
    let has_term = lts.terminating.iter().any(|&b| b);
    let sink = lts.states.len();
    let mut out = String::from("digraph lts {\n  rankdir=LR;\n");
    for i in 0..lts.states.len() {
        let shape = if i == lts.initial { "doublecircle" } else { "circle" };
        out.push_str(&format!("  s{} [shape={},label=\"{}\"];\n", i, shape, i));
    }
    if has_term {
        out.push_str(&format!("  s{} [shape=point,label=\"\"];\n", sink));
    }
    for (s, l, d) in &lts.transitions {
        out.push_str(&format!("  s{} -> s{} [label=\"{}\"];\n", s, d, l.render().replace('"', "\\\"")));
    }
    for (i, &t) in lts.terminating.iter().enumerate() {
        if t {
            out.push_str(&format!("  s{} -> s{} [label=\"tick\"];\n", i, sink));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model;
    use crate::term::*;

    fn empty() -> Model {
        parse_model("model m; act a, b, c; comm a | b = c;").unwrap()
    }

    fn root_steps(m: &Model, t: &T) -> Vec<(String, Option<T>)> {
        enabled_steps(&Config::new(t.clone(), DataState::initial(m)), m)
            .unwrap()
            .into_iter()
            .map(|s| (s.label.render(), s.target.term))
            .collect()
    }

    #[test]
    fn par_is_lockstep() {
        let m = empty();
        assert_eq!(root_steps(&m, &par(atom("a"), atom("b"))), vec![("{a,b}".to_string(), None)]);
    }

    #[test]
    fn merge_has_four_kinds_of_step() {
        let m = empty();
        let got = root_steps(&m, &merge(atom("a"), atom("b")));
        let want = vec![
            ("{a,b}".to_string(), None),
            ("{a}".to_string(), Some(atom("b"))),
            ("{b}".to_string(), Some(atom("a"))),
            ("{c}".to_string(), None),
        ];
        let mut got_sorted = got.clone();
        got_sorted.sort();
        let mut want_sorted = want;
        want_sorted.sort();
        assert_eq!(got_sorted, want_sorted);
    }

    #[test]
    fn false_guard_blocks() {
        let m = parse_model("model m; domain V = {0,1}; var x : V = 1; act a; proc P = [x = 0] -> a;").unwrap();
        assert!(root_steps(&m, m.proc("P").unwrap()).is_empty());
    }

    #[test]
    fn lts_of_a_dot_b() {
        let m = empty();
        let l = lts_of(&m, &seq(atom("a"), atom("b")), Silent::CollapseAll).unwrap();
        assert_eq!(l.num_states(), 3);
        assert_eq!(l.transitions.len(), 2);
        let d = lts_of(&m, &delta(), Silent::CollapseAll).unwrap();
        assert_eq!(d.transitions.len(), 0);
        assert!(!d.terminating[0]);
    }

    #[test]
    fn guardedness_examples() {
        let m = empty();
        let spec = |eqs: Vec<(&str, T)>| RecursiveSpec {
            name: "E".into(),
            equations: eqs.into_iter().map(|(n, t)| (Name::from(n), t)).collect(),
        };
        assert!(check_guardedness(&spec(vec![("X", seq(atom("a"), var("X")))]), &m).guarded);
        assert!(!check_guardedness(&spec(vec![("X", seq(tau(), var("X")))]), &m).guarded);
        let g = check_guardedness(&spec(vec![("X", var("Y")), ("Y", var("X"))]), &m);
        assert!(!g.guarded);
        assert_eq!(g.cycle.first(), g.cycle.last());
    }

    #[test]
    fn unguarded_unfolding_is_reported() {
        let m = parse_model("model m; act a; proc X = X + a;").unwrap();
        let r = enabled_steps(&Config::new(var("X"), DataState::initial(&m)), &m);
        assert!(matches!(r, Err(Error::UnguardedRecursion { .. })));
    }

    #[test]
    fn shadow_pairs_with_its_action_only() {
        let m = empty();
        let a = Action::new("a", &[]);
        let ok = par(shadow(a.clone(), 1), atom("a"));
        assert_eq!(root_steps(&m, &ok), vec![("{a}".to_string(), None)]);
        let bad = par(shadow(a, 1), atom("b"));
        assert!(root_steps(&m, &bad).is_empty());
    }

    #[test]
    fn aut_format() {
        let m = empty();
        let l = lts_of(&m, &alt(atom("a"), tau()), Silent::CollapseAll).unwrap();
        let s = aut(&l);
        assert!(s.starts_with("des (0,3,3)\n"), "{s}");
        assert!(s.contains("(0,\"tau\",1)"));
        assert!(s.contains("\"tick\""));
    }
}
