//! Equivalence checking: step and rooted branching step bisimulation on transition
//! systems; pomset, history-preserving and hereditary history-preserving bisimulation
//! on prime event structures.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::time::Instant;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::pes::{self, Events, Pes};
use crate::sos::Lts;

pub const TAU: &str = "tau";
pub const EPS: &str = "eps";
pub const TICK: &str = "tick";

/// A transition system with string labels; `tau` and `eps` are silent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ts {
    pub n: usize,
    pub initial: usize,
    pub edges: Vec<(usize, String, usize)>,
    pub term: Vec<bool>,
}

pub fn is_silent(l: &str) -> bool {
    l == TAU || l == EPS
}

impl From<&Lts> for Ts {
    fn from(l: &Lts) -> Ts {
        Ts {
            n: l.num_states(),
            initial: l.initial,
            edges: l.transitions.iter().map(|(s, lab, d)| (*s, lab.render(), *d)).collect(),
            term: l.terminating.clone(),
        }
    }
}

impl Ts {
    pub fn successors(&self) -> Vec<Vec<(&str, usize)>> {
        let mut out = vec![Vec::new(); self.n];
        for (s, l, d) in &self.edges {
            out[*s].push((l.as_str(), *d));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stats {
    pub states: usize,
    pub iterations: usize,
    pub millis: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Related state pairs (left, right).
    Relation(Vec<(usize, usize)>),
    /// Related posetal triples, rendered.
    Triples(Vec<String>),
    /// Steps leading to a point where `last` is possible on `side` (1 or 2) only.
    Trace { side: u8, steps: Vec<String>, last: String },
    Note(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub related: bool,
    pub witness: Witness,
    pub stats: Stats,
}

impl Verdict {
    /// JSON report; timing is omitted unless requested so that reports are reproducible.
    pub fn to_json(&self, timing: bool) -> Value {
        let witness = match &self.witness {
            Witness::Relation(r) => json!({"kind": "relation", "pairs": r.iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>()}),
            Witness::Triples(t) => json!({"kind": "triples", "triples": t}),
            Witness::Trace { side, steps, last } => json!({"kind": "trace", "side": side, "steps": steps, "last": last}),
            Witness::Note(s) => json!({"kind": "note", "text": s}),
        };
        let millis = if timing { json!(self.stats.millis) } else { Value::Null };
        json!({
            "related": self.related,
            "witness": witness,
            "stats": {"states": self.stats.states, "iterations": self.stats.iterations, "millis": millis},
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Step,
    Pomset,
    Hp,
    Hhp,
    Rbs,
}

impl std::str::FromStr for Relation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Relation> {
        Ok(match s {
            "step" => Relation::Step,
            "pomset" => Relation::Pomset,
            "hp" => Relation::Hp,
            "hhp" => Relation::Hhp,
            "rbs" => Relation::Rbs,
            _ => return Err(Error::Invalid(format!("unknown relation `{s}`"))),
        })
    }
}

// ---------------------------------------------------------------- union of two systems

struct Joined {
    n: usize,
    off: usize,
    edges: Vec<(usize, u32, usize)>,
    term: Vec<bool>,
    names: Vec<String>,
}

fn join(a: &Ts, b: &Ts) -> Joined {
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut names = Vec::new();
    let mut intern = |l: &str| -> u32 {
        if let Some(&i) = ids.get(l) {
            return i;
        }
        let i = names.len() as u32;
        names.push(l.to_string());
        ids.insert(l.to_string(), i);
        i
    };
    let off = a.n;
    let mut edges = Vec::with_capacity(a.edges.len() + b.edges.len());
    for (s, l, d) in &a.edges {
        edges.push((*s, intern(l), *d));
    }
    for (s, l, d) in &b.edges {
        edges.push((s + off, intern(l), d + off));
    }
    let mut term = a.term.clone();
    term.extend(b.term.iter().copied());
    Joined { n: a.n + b.n, off, edges, term, names }
}

fn renumber<K: std::hash::Hash + Eq>(keys: Vec<K>) -> (Vec<u32>, usize) {
    let mut ids: HashMap<K, u32> = HashMap::new();
    let mut out = Vec::with_capacity(keys.len());
    for k in keys {
        let next = ids.len() as u32;
        out.push(*ids.entry(k).or_insert(next));
    }
    let n = ids.len();
    (out, n)
}

const TICK_ID: u32 = u32::MAX;
const SILENT_ID: u32 = u32::MAX - 1;

/// Coarsest strong step bisimulation partition.
fn strong_partition(j: &Joined) -> (Vec<u32>, usize) {
    let mut out: Vec<Vec<(u32, usize)>> = vec![Vec::new(); j.n];
    for (s, l, d) in &j.edges {
        out[*s].push((*l, *d));
    }
    let (mut block, mut count) = renumber(j.term.clone());
    let mut iterations = 0;
    loop {
        iterations += 1;
        let keys: Vec<(u32, Vec<(u32, u32)>)> = (0..j.n)
            .map(|s| {
                let mut sig: Vec<(u32, u32)> = out[s].iter().map(|(l, d)| (*l, block[*d])).collect();
                sig.sort_unstable();
                sig.dedup();
                (block[s], sig)
            })
            .collect();
        let (nb, nc) = renumber(keys);
        block = nb;
        if nc == count {
            break;
        }
        count = nc;
    }
    (block, iterations)
}

/// Strongly connected components of the silent-edge graph (iterative Tarjan).
fn silent_sccs(n: usize, silent_out: &[Vec<usize>]) -> Vec<usize> {
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < silent_out[v].len() {
                let w = silent_out[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

/// Coarsest divergence-blind branching step bisimulation; returns the class of each original state.
fn branching_partition(j: &Joined) -> (Vec<u32>, usize) {
    let silent: Vec<bool> = j.names.iter().map(|l| is_silent(l)).collect();
    let mut silent_out = vec![Vec::new(); j.n];
    for (s, l, d) in &j.edges {
        if silent[*l as usize] {
            silent_out[*s].push(*d);
        }
    }
    let comp = silent_sccs(j.n, &silent_out);
    let nc = comp.iter().copied().max().map(|m| m + 1).unwrap_or(0);
    // quotient system over components
    let mut cterm = vec![false; nc];
    for s in 0..j.n {
        if j.term[s] {
            cterm[comp[s]] = true;
        }
    }
    let mut cedges: BTreeSet<(usize, u32, usize)> = BTreeSet::new();
    for (s, l, d) in &j.edges {
        let (cs, cd) = (comp[*s], comp[*d]);
        let l = if silent[*l as usize] { SILENT_ID } else { *l };
        if !(l == SILENT_ID && cs == cd) {
            cedges.insert((cs, l, cd));
        }
    }
    let mut cout: Vec<Vec<(u32, usize)>> = vec![Vec::new(); nc];
    for (s, l, d) in &cedges {
        cout[*s].push((*l, *d));
    }
    // Tarjan numbers components in reverse topological order of the silent DAG:
    // every silent successor of component c has a smaller number.
    // termination enters through the signatures, so a silent step into a
    // terminated state can be inert
    let (mut block, mut count) = renumber(vec![0u8; nc]);
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut sigs: Vec<BTreeSet<(u32, u32)>> = vec![BTreeSet::new(); nc];
        for c in 0..nc {
            let mut sig = BTreeSet::new();
            if cterm[c] {
                sig.insert((TICK_ID, 0));
            }
            for &(l, d) in &cout[c] {
                if l == SILENT_ID && block[d] == block[c] {
                    let inherited: Vec<(u32, u32)> = sigs[d].iter().copied().collect();
                    sig.extend(inherited);
                } else {
                    sig.insert((l, block[d]));
                }
            }
            sigs[c] = sig;
        }
        let keys: Vec<(u32, Vec<(u32, u32)>)> =
            (0..nc).map(|c| (block[c], sigs[c].iter().copied().collect())).collect();
        let (nb, ncount) = renumber(keys);
        block = nb;
        if ncount == count {
            break;
        }
        count = ncount;
    }
    ((0..j.n).map(|s| block[comp[s]]).collect(), iterations)
}

fn relation_of(classes: &[u32], off: usize, n: usize) -> Vec<(usize, usize)> {
    let mut by_class: BTreeMap<u32, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for s in 0..n {
        let e = by_class.entry(classes[s]).or_default();
        if s < off {
            e.0.push(s);
        } else {
            e.1.push(s - off);
        }
    }
    let mut out = Vec::new();
    for (_, (l, r)) in by_class {
        for &a in &l {
            for &b in &r {
                out.push((a, b));
            }
        }
    }
    out.sort_unstable();
    out
}

// ---------------------------------------------------------------- step bisimulation

pub fn check_step_bisimulation(l1: &Lts, l2: &Lts) -> Verdict {
    check_strong(&Ts::from(l1), &Ts::from(l2))
}

pub fn check_strong(a: &Ts, b: &Ts) -> Verdict {
    let start = Instant::now();
    let j = join(a, b);
    let (classes, iterations) = strong_partition(&j);
    let related = classes[a.initial] == classes[j.off + b.initial];
    let witness = if related {
        Witness::Relation(relation_of(&classes, j.off, j.n))
    } else {
        strong_distinguisher(a, b)
    };
    Verdict { related, witness, stats: Stats { states: j.n, iterations, millis: start.elapsed().as_millis() } }
}

/// Shortest step trace accepted by exactly one side. Bisimilarity is finer than trace
/// equivalence, so when the traces agree the difference is reported as a note.
fn strong_distinguisher(a: &Ts, b: &Ts) -> Witness {
    trace_distinguisher(a, b, false)
        .unwrap_or_else(|| Witness::Note("same step traces; the systems differ in their branching structure".into()))
}

// ---------------------------------------------------------------- rooted branching step bisimulation

pub fn check_rooted_branching_step_bisimulation(l1: &Lts, l2: &Lts) -> Verdict {
    check_rbs(&Ts::from(l1), &Ts::from(l2))
}

pub fn check_rbs(a: &Ts, b: &Ts) -> Verdict {
    let start = Instant::now();
    let j = join(a, b);
    let (classes, iterations) = branching_partition(&j);
    let ra = a.initial;
    let rb = j.off + b.initial;
    let related = classes[ra] == classes[rb] && root_ok(a, b, &classes, j.off);
    let witness = if related {
        Witness::Relation(relation_of(&classes, j.off, j.n))
    } else {
        weak_distinguisher(a, b)
    };
    Verdict { related, witness, stats: Stats { states: j.n, iterations, millis: start.elapsed().as_millis() } }
}

/// The first move of each root must be matched by an identical first move into related states.
fn root_ok(a: &Ts, b: &Ts, classes: &[u32], off: usize) -> bool {
    let ea: BTreeSet<(&str, u32)> = a.successors()[a.initial].iter().map(|(l, d)| (*l, classes[*d])).collect();
    let eb: BTreeSet<(&str, u32)> = b.successors()[b.initial].iter().map(|(l, d)| (*l, classes[off + *d])).collect();
    ea == eb && a.term[a.initial] == b.term[b.initial]
}

fn silent_closure(succ: &[Vec<(&str, usize)>], from: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut out = from.clone();
    let mut todo: Vec<usize> = from.iter().copied().collect();
    while let Some(s) = todo.pop() {
        for (l, d) in &succ[s] {
            if is_silent(l) && out.insert(*d) {
                todo.push(*d);
            }
        }
    }
    out
}

fn weak_offers<'a>(ts: &Ts, succ: &[Vec<(&'a str, usize)>], set: &BTreeSet<usize>) -> BTreeSet<&'a str> {
    let mut out = BTreeSet::new();
    for &s in set {
        for (l, _) in &succ[s] {
            if !is_silent(l) {
                out.insert(*l);
            }
        }
        if ts.term[s] {
            out.insert(TICK);
        }
    }
    out
}

const WEAK_SEARCH_LIMIT: usize = 200_000;

/// A root mismatch, or the shortest observable trace accepted by exactly one side.
fn weak_distinguisher(a: &Ts, b: &Ts) -> Witness {
    let sa = a.successors();
    let sb = b.successors();
    let ra: BTreeSet<&str> = sa[a.initial].iter().map(|(l, _)| *l).collect();
    let rb: BTreeSet<&str> = sb[b.initial].iter().map(|(l, _)| *l).collect();
    if let Some(l) = ra.difference(&rb).next() {
        return Witness::Trace { side: 1, steps: vec![], last: l.to_string() };
    }
    if let Some(l) = rb.difference(&ra).next() {
        return Witness::Trace { side: 2, steps: vec![], last: l.to_string() };
    }
    trace_distinguisher(a, b, true).unwrap_or_else(|| {
        Witness::Note("same observable traces; the systems differ in their branching structure".into())
    })
}

/// Breadth-first search over pairs of reachable state sets. With `weak` set, silent moves are
/// closed over and never observed.
fn trace_distinguisher(a: &Ts, b: &Ts, weak: bool) -> Option<Witness> {
    type Key = (BTreeSet<usize>, BTreeSet<usize>);
    let sa = a.successors();
    let sb = b.successors();
    let close = |succ: &[Vec<(&str, usize)>], set: BTreeSet<usize>| if weak { silent_closure(succ, &set) } else { set };
    let offers = |ts: &Ts, succ: &[Vec<(&str, usize)>], set: &BTreeSet<usize>| {
        if weak {
            return weak_offers(ts, succ, set).into_iter().map(str::to_string).collect::<BTreeSet<String>>();
        }
        let mut out: BTreeSet<String> = set.iter().flat_map(|s| succ[*s].iter().map(|(l, _)| l.to_string())).collect();
        if set.iter().any(|s| ts.term[*s]) {
            out.insert(TICK.to_string());
        }
        out
    };
    let start: Key = (close(&sa, [a.initial].into_iter().collect()), close(&sb, [b.initial].into_iter().collect()));
    let mut prev: HashMap<Key, (Key, String)> = HashMap::new();
    let mut seen: HashSet<Key> = HashSet::new();
    seen.insert(start.clone());
    let mut queue = VecDeque::new();
    queue.push_back(start);
    while let Some(k) = queue.pop_front() {
        if seen.len() > WEAK_SEARCH_LIMIT {
            break;
        }
        let oa = offers(a, &sa, &k.0);
        let ob = offers(b, &sb, &k.1);
        let path = |cur: &Key| {
            let mut steps = Vec::new();
            let mut cur = cur.clone();
            while let Some((p, l)) = prev.get(&cur) {
                steps.push(l.clone());
                cur = p.clone();
            }
            steps.reverse();
            steps
        };
        if let Some(l) = oa.difference(&ob).next() {
            return Some(Witness::Trace { side: 1, steps: path(&k), last: l.clone() });
        }
        if let Some(l) = ob.difference(&oa).next() {
            return Some(Witness::Trace { side: 2, steps: path(&k), last: l.clone() });
        }
        for l in oa.iter().filter(|l| *l != TICK) {
            let step = |succ: &[Vec<(&str, usize)>], set: &BTreeSet<usize>| {
                let next: BTreeSet<usize> =
                    set.iter().flat_map(|s| succ[*s].iter().filter(|(x, _)| x == l).map(|(_, d)| *d)).collect();
                close(succ, next)
            };
            let nk = (step(&sa, &k.0), step(&sb, &k.1));
            if seen.insert(nk.clone()) {
                prev.insert(nk.clone(), (k.clone(), l.clone()));
                queue.push_back(nk);
            }
        }
    }
    None
}

/// Whether `steps` followed by `last` can be performed on `ts`, with silent moves
/// interleaved when `weak` is set.
pub fn replay(ts: &Ts, steps: &[String], last: &str, weak: bool) -> bool {
    let succ = ts.successors();
    let close = |set: BTreeSet<usize>| if weak { silent_closure(&succ, &set) } else { set };
    let mut cur = close([ts.initial].into_iter().collect());
    for l in steps.iter().map(|s| s.as_str()).chain(std::iter::once(last)) {
        if l == TICK {
            return cur.iter().any(|s| ts.term[*s]);
        }
        let next: BTreeSet<usize> =
            cur.iter().flat_map(|s| succ[*s].iter().filter(|(x, _)| *x == l).map(|(_, d)| *d)).collect();
        cur = close(next);
        if cur.is_empty() {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------- independent validators

/// Re-check every transfer clause of a claimed strong step bisimulation.
pub fn validate_step_relation(a: &Ts, b: &Ts, rel: &[(usize, usize)]) -> bool {
    let r: HashSet<(usize, usize)> = rel.iter().copied().collect();
    if !r.contains(&(a.initial, b.initial)) {
        return false;
    }
    let sa = a.successors();
    let sb = b.successors();
    for &(p, q) in rel {
        if a.term[p] != b.term[q] {
            return false;
        }
        for (l, p2) in &sa[p] {
            if !sb[q].iter().any(|(l2, q2)| l == l2 && r.contains(&(*p2, *q2))) {
                return false;
            }
        }
        for (l, q2) in &sb[q] {
            if !sa[p].iter().any(|(l2, p2)| l == l2 && r.contains(&(*p2, *q2))) {
                return false;
            }
        }
    }
    true
}

/// Re-check a claimed branching step bisimulation clause by clause, plus the root condition.
pub fn validate_rbs_relation(a: &Ts, b: &Ts, rel: &[(usize, usize)]) -> bool {
    let r: HashSet<(usize, usize)> = rel.iter().copied().collect();
    if !r.contains(&(a.initial, b.initial)) {
        return false;
    }
    let sa = a.successors();
    let sb = b.successors();
    // root: exact first moves
    for (l, p2) in &sa[a.initial] {
        if !sb[b.initial].iter().any(|(l2, q2)| l == l2 && r.contains(&(*p2, *q2))) {
            return false;
        }
    }
    for (l, q2) in &sb[b.initial] {
        if !sa[a.initial].iter().any(|(l2, p2)| l == l2 && r.contains(&(*p2, *q2))) {
            return false;
        }
    }
    if a.term[a.initial] != b.term[b.initial] {
        return false;
    }
    let forward = |x: &Ts, y: &Ts, sx: &[Vec<(&str, usize)>], sy: &[Vec<(&str, usize)>], rel: &dyn Fn(usize, usize) -> bool, p: usize, q: usize| -> bool {
        // states reachable from q by silent moves while staying related to p
        let mut reach = vec![q];
        let mut seen: HashSet<usize> = [q].into_iter().collect();
        let mut i = 0;
        while i < reach.len() {
            let cur = reach[i];
            i += 1;
            for (l, d) in &sy[cur] {
                if is_silent(l) && rel(p, *d) && seen.insert(*d) {
                    reach.push(*d);
                }
            }
        }
        if x.term[p] && !reach.iter().any(|s| y.term[*s]) {
            return false;
        }
        for (l, p2) in &sx[p] {
            if is_silent(l) && rel(*p2, q) {
                continue;
            }
            let ok = reach.iter().any(|&q1| {
                sy[q1].iter().any(|(l2, q2)| {
                    let same = l == l2 || (is_silent(l) && is_silent(l2));
                    same && rel(*p2, *q2)
                })
            });
            if !ok {
                return false;
            }
        }
        true
    };
    let rel_ab = |p: usize, q: usize| r.contains(&(p, q));
    let rel_ba = |q: usize, p: usize| r.contains(&(p, q));
    for &(p, q) in rel {
        if !forward(a, b, &sa, &sb, &rel_ab, p, q) || !forward(b, a, &sb, &sa, &rel_ba, q, p) {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------- event-structure checkers

/// Configurations as states, with step or pomset transitions and the final configurations as ↓.
pub fn pes_ts(p: &Pes, pomsets: bool) -> Result<(Ts, Vec<Events>)> {
    let configs = pes::enumerate_configurations(p)?;
    let index: HashMap<Events, usize> = configs.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut edges = Vec::new();
    for (i, &c) in configs.iter().enumerate() {
        for t in pes::transitions_from(p, &configs, c) {
            if !pomsets && !t.is_step {
                continue;
            }
            let label = if pomsets { pes::canonical_pomset(p, t.events) } else { pes::step_label(p, t.events) };
            edges.push((i, label, index[&t.target]));
        }
    }
    let finals: HashSet<Events> = p.finals.iter().copied().collect();
    let term = configs.iter().map(|c| finals.contains(c)).collect();
    Ok((Ts { n: configs.len(), initial: 0, edges, term }, configs))
}

pub fn check_pes_step_bisimulation(p1: &Pes, p2: &Pes) -> Result<Verdict> {
    Ok(check_strong(&pes_ts(p1, false)?.0, &pes_ts(p2, false)?.0))
}

pub fn check_pomset_bisimulation(p1: &Pes, p2: &Pes) -> Result<Verdict> {
    Ok(check_strong(&pes_ts(p1, true)?.0, &pes_ts(p2, true)?.0))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Triple {
    c1: Events,
    c2: Events,
    f: Vec<(u8, u8)>,
}

enum Why {
    Term,
    Unmatched(u8, usize),
    Restriction(usize),
}

struct TripleGraph {
    triples: Vec<Triple>,
    children: Vec<Vec<(usize, usize, usize)>>,
    enabled: Vec<(Vec<usize>, Vec<usize>)>,
}

const MAX_TRIPLES: usize = 1 << 20;

fn triple_graph(p1: &Pes, p2: &Pes) -> Result<TripleGraph> {
    let root = Triple { c1: 0, c2: 0, f: vec![] };
    let mut index: HashMap<Triple, usize> = HashMap::new();
    index.insert(root.clone(), 0);
    let mut g = TripleGraph { triples: vec![root], children: vec![], enabled: vec![] };
    let mut i = 0;
    while i < g.triples.len() {
        let t = g.triples[i].clone();
        let en1 = pes::members_of(p1.enabled(t.c1));
        let en2 = pes::members_of(p2.enabled(t.c2));
        let mut kids = Vec::new();
        for &e1 in &en1 {
            for &e2 in &en2 {
                if p1.labels[e1] != p2.labels[e2] {
                    continue;
                }
                let iso = t.f.iter().all(|&(x, y)| p1.le(x as usize, e1) == p2.le(y as usize, e2));
                if !iso {
                    continue;
                }
                let mut f = t.f.clone();
                f.push((e1 as u8, e2 as u8));
                f.sort_unstable();
                let child = Triple { c1: t.c1 | (1 << e1), c2: t.c2 | (1 << e2), f };
                let id = match index.get(&child) {
                    Some(&id) => id,
                    None => {
                        let id = g.triples.len();
                        if id >= MAX_TRIPLES {
                            return Err(Error::ExplosionGuard(MAX_TRIPLES));
                        }
                        index.insert(child.clone(), id);
                        g.triples.push(child);
                        id
                    }
                };
                kids.push((e1, e2, id));
            }
        }
        g.children.push(kids);
        g.enabled.push((en1, en2));
        i += 1;
    }
    Ok(g)
}

fn render_triple(p1: &Pes, p2: &Pes, t: &Triple) -> String {
    let f: Vec<String> = t.f.iter().map(|(x, y)| format!("{}:{}->{}", p1.labels[*x as usize], x, y)).collect();
    format!("({}, [{}], {})", pes::event_set(p1, t.c1), f.join(","), pes::event_set(p2, t.c2))
}

fn history_check(p1: &Pes, p2: &Pes, hereditary: bool) -> Result<Verdict> {
    let start = Instant::now();
    let g = triple_graph(p1, p2)?;
    let n = g.triples.len();
    let index: HashMap<&Triple, usize> = g.triples.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let f1: HashSet<Events> = p1.finals.iter().copied().collect();
    let f2: HashSet<Events> = p2.finals.iter().copied().collect();
    let mut alive = vec![true; n];
    let mut why: Vec<Option<Why>> = (0..n).map(|_| None).collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut changed = false;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let t = &g.triples[i];
            let mut reason = None;
            if f1.contains(&t.c1) != f2.contains(&t.c2) {
                reason = Some(Why::Term);
            }
            if reason.is_none() {
                for &e1 in &g.enabled[i].0 {
                    if !g.children[i].iter().any(|&(x, _, c)| x == e1 && alive[c]) {
                        reason = Some(Why::Unmatched(1, e1));
                        break;
                    }
                }
            }
            if reason.is_none() {
                for &e2 in &g.enabled[i].1 {
                    if !g.children[i].iter().any(|&(_, y, c)| y == e2 && alive[c]) {
                        reason = Some(Why::Unmatched(2, e2));
                        break;
                    }
                }
            }
            if reason.is_none() && hereditary {
                for &(x, y) in &t.f {
                    let xb: Events = 1 << x;
                    let maximal = pes::members_of(t.c1).iter().all(|&e| p1.causes[e] & xb == 0);
                    if !maximal {
                        continue;
                    }
                    let sub = Triple {
                        c1: t.c1 & !xb,
                        c2: t.c2 & !(1u128 << y),
                        f: t.f.iter().copied().filter(|&(a, _)| a != x).collect(),
                    };
                    match index.get(&sub) {
                        Some(&s) if alive[s] => {}
                        Some(&s) => {
                            reason = Some(Why::Restriction(s));
                            break;
                        }
                        None => {
                            reason = Some(Why::Restriction(usize::MAX));
                            break;
                        }
                    }
                }
            }
            if let Some(r) = reason {
                alive[i] = false;
                why[i] = Some(r);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let related = alive[0];
    let witness = if related {
        let mut ts: Vec<String> =
            (0..n).filter(|&i| alive[i]).map(|i| render_triple(p1, p2, &g.triples[i])).collect();
        ts.sort();
        Witness::Triples(ts)
    } else {
        // follow removal reasons from the root down to an immediate failure
        let mut steps = Vec::new();
        let mut cur = 0usize;
        let mut guard = 0;
        loop {
            guard += 1;
            if guard > n + 1 {
                break Witness::Note(format!("removal reasons cycle after [{}]", steps.join(" ")));
            }
            match &why[cur] {
                Some(Why::Term) => break Witness::Note(format!("termination differs after [{}]", steps.join(" "))),
                Some(Why::Unmatched(side, e)) => {
                    let (side, e) = (*side, *e);
                    let kids: Vec<usize> = g.children[cur]
                        .iter()
                        .filter(|&&(x, y, _)| if side == 1 { x == e } else { y == e })
                        .map(|&(_, _, c)| c)
                        .collect();
                    let lab = if side == 1 { p1.labels[e].to_string() } else { p2.labels[e].to_string() };
                    match kids.first() {
                        None => break Witness::Trace { side, steps, last: lab },
                        Some(&k) => {
                            steps.push(lab);
                            cur = k;
                        }
                    }
                }
                Some(Why::Restriction(r)) => {
                    // hereditary failure: the extension is fine, the restriction back is not
                    let to = g.triples.get(*r).map(|t| render_triple(p1, p2, t)).unwrap_or_else(|| "outside the product".into());
                    break Witness::Note(format!("after [{}] the restriction to {to} is not related", steps.join(" ")));
                }
                None => break Witness::Note("no removal reason recorded".into()),
            }
        }
    };
    Ok(Verdict { related, witness, stats: Stats { states: n, iterations, millis: start.elapsed().as_millis() } })
}

pub fn check_hp_bisimulation(p1: &Pes, p2: &Pes) -> Result<Verdict> {
    history_check(p1, p2, false)
}

pub fn check_hhp_bisimulation(p1: &Pes, p2: &Pes) -> Result<Verdict> {
    history_check(p1, p2, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_model, parse_term};
    use crate::model::Model;
    use crate::pes::build_pes;
    use crate::sos::{lts_of, Silent};

    fn model() -> Model {
        parse_model("model m; act a, b, c; comm a | b = c;").unwrap()
    }

    fn lts(m: &Model, src: &str, silent: Silent) -> Ts {
        Ts::from(&lts_of(m, &parse_term(m, src).unwrap(), silent).unwrap())
    }

    fn step(l: &str, r: &str) -> Verdict {
        let m = model();
        check_strong(&lts(&m, l, Silent::CollapseAll), &lts(&m, r, Silent::CollapseAll))
    }

    fn rbs(l: &str, r: &str) -> Verdict {
        let m = model();
        check_rbs(&lts(&m, l, Silent::KeepGuards), &lts(&m, r, Silent::KeepGuards))
    }

    fn pes_of(src: &str) -> Pes {
        let m = model();
        build_pes(&parse_term(&m, src).unwrap(), &m).unwrap()
    }

    #[test]
    fn step_examples() {
        assert!(step("a + a", "a").related);
        let v = step("a ||| b", "a . b + b . a");
        assert!(!v.related);
        match v.witness {
            Witness::Trace { side, steps, last } => {
                assert_eq!((side, steps.len(), last.as_str()), (1, 0, "{a,b}"));
            }
            w => panic!("{w:?}"),
        }
        assert!(step("(a + b) . c", "(a + b) . c").related);
    }

    #[test]
    fn rbs_examples() {
        assert!(rbs("a . tau . b", "a . b").related);
        assert!(rbs("a . (tau . (b + c) + b)", "a . (b + c)").related);
        let v = rbs("tau . a", "a");
        assert!(!v.related);
        assert!(matches!(v.witness, Witness::Trace { steps, .. } if steps.is_empty()));
    }

    #[test]
    fn step_witness_validates() {
        let m = model();
        let a = lts(&m, "a . (b + b)", Silent::CollapseAll);
        let b = lts(&m, "a . b + a . b", Silent::CollapseAll);
        let v = check_strong(&a, &b);
        match &v.witness {
            Witness::Relation(r) => assert!(validate_step_relation(&a, &b, r)),
            w => panic!("{w:?}"),
        }
        assert!(!validate_step_relation(&a, &b, &[(0, 0)]));
    }

    #[test]
    fn rbs_witness_validates() {
        let m = model();
        let a = lts(&m, "a . (tau . (b + c) + b)", Silent::KeepGuards);
        let b = lts(&m, "a . (b + c)", Silent::KeepGuards);
        let v = check_rbs(&a, &b);
        match &v.witness {
            Witness::Relation(r) => assert!(validate_rbs_relation(&a, &b, r)),
            w => panic!("{w:?}"),
        }
    }

    #[test]
    fn pes_checkers() {
        let par = pes_of("a ||| b");
        let seq = pes_of("a . b");
        assert!(check_pomset_bisimulation(&par, &par).unwrap().related);
        assert!(!check_pomset_bisimulation(&par, &seq).unwrap().related);
        assert!(check_pomset_bisimulation(&pes_of("a + b"), &pes_of("b + a")).unwrap().related);
        assert!(check_hp_bisimulation(&seq, &seq).unwrap().related);
        assert!(!check_hp_bisimulation(&par, &seq).unwrap().related);
        assert!(check_hp_bisimulation(&pes_of("a + a"), &pes_of("a")).unwrap().related);
        assert!(check_hhp_bisimulation(&par, &par).unwrap().related);
        assert!(!check_hhp_bisimulation(&seq, &pes_of("a . c")).unwrap().related);
    }

    #[test]
    fn weak_trace_replays() {
        let m = model();
        let a = lts(&m, "a . b", Silent::KeepGuards);
        let b = lts(&m, "a . c", Silent::KeepGuards);
        let v = check_rbs(&a, &b);
        match v.witness {
            Witness::Trace { side, steps, last } => {
                let (yes, no) = if side == 1 { (&a, &b) } else { (&b, &a) };
                assert!(replay(yes, &steps, &last, true));
                assert!(!replay(no, &steps, &last, true));
            }
            w => panic!("{w:?}"),
        }
    }
}
