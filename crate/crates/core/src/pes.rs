//! Prime event structures for finite, recursion-free terms.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::term::{Action, ActionKind, Term};

pub type Events = u128;
pub const MAX_EVENTS: usize = 128;
pub const MAX_CONFIGURATIONS: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pes {
    pub labels: Vec<Action>,
    /// Strict causal predecessors of each event, transitively closed.
    pub causes: Vec<Events>,
    /// Symmetric, irreflexive, hereditary conflict.
    pub conflicts: Vec<Events>,
    /// Configurations in which the term has terminated successfully.
    pub finals: Vec<Events>,
}

fn bit(i: usize) -> Events {
    1u128 << i
}

fn members(s: Events) -> impl Iterator<Item = usize> {
    (0..MAX_EVENTS).filter(move |i| s & bit(*i) != 0)
}

fn all(n: usize) -> Events {
    if n == MAX_EVENTS {
        !0
    } else {
        bit(n) - 1
    }
}

impl Pes {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn empty(finals: Vec<Events>) -> Pes {
        Pes { labels: vec![], causes: vec![], conflicts: vec![], finals }
    }

    fn single(a: Action) -> Pes {
        Pes { labels: vec![a], causes: vec![0], conflicts: vec![0], finals: vec![1] }
    }

    pub fn le(&self, a: usize, b: usize) -> bool {
        a == b || self.causes[b] & bit(a) != 0
    }

    pub fn conflict(&self, a: usize, b: usize) -> bool {
        self.conflicts[a] & bit(b) != 0
    }

    pub fn concurrent(&self, a: usize, b: usize) -> bool {
        a != b && !self.le(a, b) && !self.le(b, a) && !self.conflict(a, b)
    }

    pub fn is_configuration(&self, c: Events) -> bool {
        members(c).all(|e| self.causes[e] & !c == 0 && self.conflicts[e] & c == 0)
    }

    /// Events that can be added to `c` one at a time.
    pub fn enabled(&self, c: Events) -> Events {
        let mut out = 0;
        for e in 0..self.len() {
            if c & bit(e) == 0 && self.causes[e] & !c == 0 && self.conflicts[e] & c == 0 {
                out |= bit(e);
            }
        }
        out
    }

    fn append(&mut self, other: &Pes) -> Result<usize> {
        let off = self.len();
        if off + other.len() > MAX_EVENTS {
            return Err(Error::ExplosionGuard(MAX_CONFIGURATIONS));
        }
        for i in 0..other.len() {
            self.labels.push(other.labels[i].clone());
            self.causes.push(other.causes[i] << off);
            self.conflicts.push(other.conflicts[i] << off);
        }
        Ok(off)
    }

    fn add_conflict(&mut self, a: usize, b: usize) {
        self.conflicts[a] |= bit(b);
        self.conflicts[b] |= bit(a);
    }

    /// e ♯ e′ ≤ e″ ⇒ e ♯ e″.
    fn close(&mut self) {
        let n = self.len();
        loop {
            let mut changed = false;
            for a in 0..n {
                for b in 0..n {
                    if self.conflict(a, b) {
                        continue;
                    }
                    let inherited = members(self.causes[b]).any(|c| self.conflict(a, c))
                        || members(self.causes[a]).any(|c| self.conflict(c, b));
                    if inherited {
                        self.add_conflict(a, b);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// The structure remaining after the minimal event `e` has occurred.
    fn residual(&self, e: usize) -> Pes {
        let keep: Vec<usize> = (0..self.len()).filter(|&f| f != e && !self.conflict(e, f)).collect();
        let remap = |s: Events| -> Events {
            keep.iter().enumerate().filter(|(_, &old)| s & bit(old) != 0).fold(0, |acc, (new, _)| acc | bit(new))
        };
        Pes {
            labels: keep.iter().map(|&f| self.labels[f].clone()).collect(),
            causes: keep.iter().map(|&f| remap(self.causes[f])).collect(),
            conflicts: keep.iter().map(|&f| remap(self.conflicts[f])).collect(),
            finals: self.finals.iter().filter(|&&f| f & bit(e) != 0).map(|&f| remap(f)).collect(),
        }
    }

    /// Reflexive-transitive order and conflict hold the structural invariants.
    pub fn check_invariants(&self) -> bool {
        let n = self.len();
        for a in 0..n {
            if self.causes[a] & bit(a) != 0 || self.conflict(a, a) {
                return false;
            }
            for b in 0..n {
                if self.conflict(a, b) != self.conflict(b, a) {
                    return false;
                }
                if self.le(a, b) && self.le(b, a) && a != b {
                    return false;
                }
                if self.le(a, b) {
                    for c in 0..n {
                        if self.le(b, c) && !self.le(a, c) {
                            return false;
                        }
                        if self.conflict(c, a) && !self.conflict(c, b) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

fn alt_pes(p: &Pes, q: &Pes) -> Result<Pes> {
    let mut r = p.clone();
    let off = r.append(q)?;
    for a in 0..p.len() {
        for b in 0..q.len() {
            r.add_conflict(a, off + b);
        }
    }
    r.finals = p.finals.iter().copied().chain(q.finals.iter().map(|f| f << off)).collect();
    dedup(&mut r.finals);
    Ok(r)
}

fn seq_pes(p: &Pes, q: &Pes) -> Result<Pes> {
    let mut r = p.clone();
    r.finals = Vec::new();
    let mut copies: Vec<Events> = Vec::new();
    for &f in &p.finals {
        let off = r.append(q)?;
        let mine = all(q.len()) << off;
        for i in 0..q.len() {
            r.causes[off + i] |= f;
        }
        for e in 0..p.len() {
            if f & bit(e) == 0 {
                for i in 0..q.len() {
                    r.add_conflict(e, off + i);
                }
            }
        }
        for &other in &copies {
            for a in members(other) {
                for b in members(mine) {
                    r.add_conflict(a, b);
                }
            }
        }
        copies.push(mine);
        for &g in &q.finals {
            r.finals.push(f | (g << off));
        }
    }
    r.close();
    dedup(&mut r.finals);
    Ok(r)
}

fn par_pes(p: &Pes, q: &Pes) -> Result<(Pes, usize)> {
    let mut r = p.clone();
    let off = r.append(q)?;
    r.finals = p.finals.iter().flat_map(|&f| q.finals.iter().map(move |&g| f | (g << off))).collect();
    dedup(&mut r.finals);
    Ok((r, off))
}

fn merge_pes(p: &Pes, q: &Pes, m: &Model) -> Result<Pes> {
    let (mut r, off) = par_pes(p, q)?;
    let mut comms: Vec<(usize, usize, usize)> = Vec::new();
    for a in 0..p.len() {
        for b in 0..q.len() {
            let b2 = off + b;
            if let Some(c) = m.gamma(&r.labels[a], &r.labels[b2]).cloned() {
                if r.len() + 1 > MAX_EVENTS {
                    return Err(Error::ExplosionGuard(MAX_CONFIGURATIONS));
                }
                let id = r.len();
                r.labels.push(c);
                r.causes.push(r.causes[a] | r.causes[b2]);
                r.conflicts.push(r.conflicts[a] | r.conflicts[b2] | bit(a) | bit(b2));
                for x in members(r.conflicts[id]) {
                    r.conflicts[x] |= bit(id);
                }
                for &(other, pa, pb) in &comms {
                    if pa == a || pb == b2 {
                        r.add_conflict(id, other);
                    }
                }
                comms.push((id, a, b2));
            }
        }
    }
    r.close();
    // terminating configurations may replace constituent pairs by their communication
    let mut finals: BTreeSet<Events> = r.finals.iter().copied().collect();
    let mut todo: Vec<Events> = finals.iter().copied().collect();
    while let Some(s) = todo.pop() {
        for &(c, a, b) in &comms {
            if s & bit(a) == 0 || s & bit(b) == 0 {
                continue;
            }
            let blocked = members(s).any(|x| r.causes[x] & (bit(a) | bit(b)) != 0);
            if blocked {
                continue;
            }
            let s2 = (s & !bit(a) & !bit(b)) | bit(c);
            if r.is_configuration(s2) && finals.insert(s2) {
                todo.push(s2);
            }
        }
    }
    r.finals = finals.into_iter().collect();
    Ok(r)
}

fn comm_pes(p: &Pes, q: &Pes, m: &Model) -> Result<Pes> {
    let mut out: Option<Pes> = None;
    for a in (0..p.len()).filter(|&a| p.causes[a] == 0) {
        for b in (0..q.len()).filter(|&b| q.causes[b] == 0) {
            if let Some(c) = m.gamma(&p.labels[a], &q.labels[b]) {
                let rest = merge_pes(&p.residual(a), &q.residual(b), m)?;
                let branch = seq_pes(&Pes::single(c.clone()), &rest)?;
                out = Some(match out {
                    None => branch,
                    Some(acc) => alt_pes(&acc, &branch)?,
                });
            }
        }
    }
    Ok(out.unwrap_or_else(|| Pes::empty(vec![])))
}

fn dedup(v: &mut Vec<Events>) {
    v.sort();
    v.dedup();
}

pub fn build_pes(t: &Term, m: &Model) -> Result<Pes> {
    let mut p = build(t, m)?;
    p.close();
    Ok(p)
}

fn build(t: &Term, m: &Model) -> Result<Pes> {
    match t {
        Term::Atom(a) => Ok(match a.kind {
            ActionKind::Delta => Pes::empty(vec![]),
            ActionKind::Eps => Pes::empty(vec![0]),
            _ => Pes::single(a.clone()),
        }),
        Term::Alt(l, r) => alt_pes(&build(l, m)?, &build(r, m)?),
        Term::Seq(l, r) => seq_pes(&build(l, m)?, &build(r, m)?),
        Term::Par(l, r) => Ok(par_pes(&build(l, m)?, &build(r, m)?)?.0),
        Term::Merge(l, r) => merge_pes(&build(l, m)?, &build(r, m)?, m),
        Term::Comm(l, r) => comm_pes(&build(l, m)?, &build(r, m)?, m),
        other => Err(Error::UnsupportedConstruct(other.kind_name().to_string())),
    }
}

/// All configurations, smallest first.
pub fn enumerate_configurations(p: &Pes) -> Result<Vec<Events>> {
    let mut seen: HashSet<Events> = HashSet::new();
    seen.insert(0);
    let mut todo = vec![0u128];
    while let Some(c) = todo.pop() {
        let en = p.enabled(c);
        for e in members(en) {
            let d = c | bit(e);
            if seen.insert(d) {
                if seen.len() > MAX_CONFIGURATIONS {
                    return Err(Error::ExplosionGuard(MAX_CONFIGURATIONS));
                }
                todo.push(d);
            }
        }
    }
    let mut out: Vec<Events> = seen.into_iter().collect();
    out.sort_by_key(|c| (c.count_ones(), *c));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PomsetTransition {
    pub events: Events,
    pub target: Events,
    pub is_step: bool,
}

pub fn pomset_transitions(p: &Pes, c: Events) -> Result<Vec<PomsetTransition>> {
    let configs = enumerate_configurations(p)?;
    Ok(transitions_from(p, &configs, c))
}

pub fn transitions_from(p: &Pes, configs: &[Events], c: Events) -> Vec<PomsetTransition> {
    configs
        .iter()
        .filter(|&&d| d != c && d & c == c)
        .map(|&d| {
            let x = d & !c;
            let evs: Vec<usize> = members(x).collect();
            let is_step = evs.iter().all(|&a| evs.iter().all(|&b| a == b || p.concurrent(a, b)));
            PomsetTransition { events: x, target: d, is_step }
        })
        .collect()
}

/// Canonical form of the labelled poset induced on `x`; equal strings iff isomorphic.
pub fn canonical_pomset(p: &Pes, x: Events) -> String {
    let evs: Vec<usize> = members(x).collect();
    let n = evs.len();
    let sig = |i: usize| {
        let e = evs[i];
        let preds = evs.iter().filter(|&&f| f != e && p.le(f, e)).count();
        let succs = evs.iter().filter(|&&f| f != e && p.le(e, f)).count();
        (p.labels[e].to_string(), preds, succs)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| sig(i));
    // groups of indistinguishable signatures are permuted exhaustively
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if sig(g[0]) == sig(i) => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let labels: Vec<String> = order.iter().map(|&i| p.labels[evs[i]].to_string()).collect();
    let mut best: Option<Vec<(usize, usize)>> = None;
    let mut perms: Vec<Vec<usize>> = vec![Vec::new()];
    for g in &groups {
        let mut next = Vec::new();
        for prefix in &perms {
            for perm in permutations(g) {
                let mut v = prefix.clone();
                v.extend(perm);
                next.push(v);
            }
        }
        perms = next;
    }
    for perm in perms {
        let mut edges = Vec::new();
        for (i, &a) in perm.iter().enumerate() {
            for (j, &b) in perm.iter().enumerate() {
                if a != b && p.le(evs[a], evs[b]) {
                    edges.push((i, j));
                }
            }
        }
        edges.sort();
        if best.as_ref().map(|b| edges < *b).unwrap_or(true) {
            best = Some(edges);
        }
    }
    let edges = best.unwrap_or_default();
    let es: Vec<String> = edges.iter().map(|(i, j)| format!("{i}<{j}")).collect();
    format!("[{}|{}]", labels.join(","), es.join(","))
}

fn permutations(v: &[usize]) -> Vec<Vec<usize>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

pub fn step_label(p: &Pes, x: Events) -> String {
    let mut ls: Vec<String> = members(x).map(|e| p.labels[e].to_string()).collect();
    ls.sort();
    format!("{{{}}}", ls.join(","))
}

pub fn event_set(p: &Pes, x: Events) -> String {
    let ls: Vec<String> = members(x).map(|e| format!("{}:{}", e, p.labels[e])).collect();
    format!("{{{}}}", ls.join(","))
}

pub fn dot(p: &Pes) -> String {
    let mut out = String::from("digraph pes {\n");
    for (i, l) in p.labels.iter().enumerate() {
        out.push_str(&format!("  e{} [label=\"{}\"];\n", i, l));
    }
    // immediate causality only
    for b in 0..p.len() {
        for a in members(p.causes[b]) {
            let between = members(p.causes[b]).any(|c| c != a && p.causes[c] & bit(a) != 0);
            if !between {
                out.push_str(&format!("  e{} -> e{} [style=solid];\n", a, b));
            }
        }
    }
    for a in 0..p.len() {
        for b in (a + 1)..p.len() {
            if p.conflict(a, b) {
                // only conflicts not inherited from a predecessor
                let inherited = members(p.causes[a]).any(|c| p.conflict(c, b))
                    || members(p.causes[b]).any(|c| p.conflict(a, c));
                if !inherited {
                    out.push_str(&format!("  e{} -> e{} [style=dashed,dir=none];\n", a, b));
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

pub fn members_of(s: Events) -> Vec<usize> {
    members(s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_model, parse_term};

    fn pes(src: &str) -> Pes {
        let m = parse_model("model m; act a, b, c; comm a | b = c;").unwrap();
        build_pes(&parse_term(&m, src).unwrap(), &m).unwrap()
    }

    #[test]
    fn seq_alt_par() {
        let p = pes("a . b");
        assert_eq!(p.len(), 2);
        assert!(p.le(0, 1) && !p.conflict(0, 1));
        let p = pes("a + b");
        assert!(p.conflict(0, 1));
        let p = pes("a ||| b");
        assert!(p.concurrent(0, 1));
    }

    #[test]
    fn configurations() {
        assert_eq!(enumerate_configurations(&pes("a . b")).unwrap(), vec![0, 1, 3]);
        assert_eq!(enumerate_configurations(&pes("a + b")).unwrap(), vec![0, 1, 2]);
        assert_eq!(enumerate_configurations(&pes("a ||| b")).unwrap().len(), 4);
    }

    #[test]
    fn transitions_and_steps() {
        let p = pes("a . b");
        let ts = pomset_transitions(&p, 0).unwrap();
        assert_eq!(ts.len(), 2);
        assert!(ts.iter().any(|t| t.events == 1 && t.is_step));
        assert!(ts.iter().any(|t| t.events == 3 && !t.is_step));
        assert!(pomset_transitions(&p, 3).unwrap().is_empty());
        let p = pes("a ||| b");
        assert!(pomset_transitions(&p, 0).unwrap().iter().any(|t| t.events == 3 && t.is_step));
    }

    #[test]
    fn comm_events_conflict_with_constituents() {
        let p = pes("a || b");
        assert_eq!(p.len(), 3);
        assert!(p.conflict(2, 0) && p.conflict(2, 1));
        assert!(p.check_invariants());
        let p = pes("(a + b) . (a | b)");
        assert!(p.check_invariants());
    }

    #[test]
    fn canonical_pomsets() {
        let p = pes("(a . b) + (a . b)");
        // two copies of the same chain
        assert_eq!(canonical_pomset(&p, 0b0011), canonical_pomset(&p, 0b1100));
        let q = pes("a ||| b");
        assert_ne!(canonical_pomset(&p, 0b0011), canonical_pomset(&q, 0b11));
    }

    #[test]
    fn unsupported() {
        let m = parse_model("model m; act a; set H = {a};").unwrap();
        let t = parse_term(&m, "encap(H, a)").unwrap();
        assert!(matches!(build_pes(&t, &m), Err(Error::UnsupportedConstruct(_))));
    }
}
