//! Process terms, guards and recursive specifications.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub type Name = Arc<str>;
pub type T = Arc<Term>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ActionKind {
    Visible,
    Tau,
    Delta,
    Eps,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pub name: Name,
    pub args: Vec<Name>,
    pub kind: ActionKind,
}

impl Action {
    pub fn new(name: &str, args: &[&str]) -> Action {
        Action {
            name: name.into(),
            args: args.iter().map(|a| Name::from(*a)).collect(),
            kind: ActionKind::Visible,
        }
    }

    pub fn with_args(name: Name, args: Vec<Name>) -> Action {
        Action { name, args, kind: ActionKind::Visible }
    }

    pub fn tau() -> Action {
        Action { name: "tau".into(), args: Vec::new(), kind: ActionKind::Tau }
    }

    pub fn delta() -> Action {
        Action { name: "delta".into(), args: Vec::new(), kind: ActionKind::Delta }
    }

    pub fn eps() -> Action {
        Action { name: "eps".into(), args: Vec::new(), kind: ActionKind::Eps }
    }

    pub fn is_visible(&self) -> bool {
        self.kind == ActionKind::Visible
    }

    pub fn is_tau(&self) -> bool {
        self.kind == ActionKind::Tau
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                f.write_str(a)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A set of action or guard names used by encapsulation and abstraction.
/// An entry matches an action either by bare name or by its full rendering
/// (so `r_Mas(DO_MapA1)` can be hidden while `r_Mas(DI_Mas)` stays visible).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NameSet {
    pub label: Option<Name>,
    pub items: BTreeSet<Name>,
}

impl NameSet {
    pub fn new<I, S>(items: I) -> NameSet
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        NameSet { label: None, items: items.into_iter().map(|s| Name::from(s.as_ref())).collect() }
    }

    pub fn named(label: &str, items: BTreeSet<Name>) -> NameSet {
        NameSet { label: Some(label.into()), items }
    }

    pub fn contains(&self, a: &Action) -> bool {
        if !a.is_visible() {
            return false;
        }
        if self.items.contains(&a.name) {
            return true;
        }
        if a.args.is_empty() {
            return false;
        }
        self.items.contains(a.to_string().as_str())
    }

    pub fn contains_name(&self, n: &str) -> bool {
        self.items.contains(n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    True,
    False,
    Pred(Name, Vec<Name>),
    Not(Arc<Guard>),
    Alt(Arc<Guard>, Arc<Guard>),
    Seq(Arc<Guard>, Arc<Guard>),
    Par(Arc<Guard>, Arc<Guard>),
}

impl Guard {
    pub fn pred(name: &str, args: &[&str]) -> Guard {
        Guard::Pred(name.into(), args.iter().map(|a| Name::from(*a)).collect())
    }

    pub fn not(g: Guard) -> Guard {
        Guard::Not(Arc::new(g))
    }

    pub fn pred_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Guard::True | Guard::False => {}
            Guard::Pred(n, _) => {
                out.insert(n.clone());
            }
            Guard::Not(g) => g.pred_names(out),
            Guard::Alt(a, b) | Guard::Seq(a, b) | Guard::Par(a, b) => {
                a.pred_names(out);
                b.pred_names(out);
            }
        }
    }

    fn subst_value(&self, var: &str, val: &Name) -> Guard {
        match self {
            Guard::True | Guard::False => self.clone(),
            Guard::Pred(n, args) => Guard::Pred(n.clone(), subst_args(args, var, val)),
            Guard::Not(g) => Guard::Not(Arc::new(g.subst_value(var, val))),
            Guard::Alt(a, b) => Guard::Alt(Arc::new(a.subst_value(var, val)), Arc::new(b.subst_value(var, val))),
            Guard::Seq(a, b) => Guard::Seq(Arc::new(a.subst_value(var, val)), Arc::new(b.subst_value(var, val))),
            Guard::Par(a, b) => Guard::Par(Arc::new(a.subst_value(var, val)), Arc::new(b.subst_value(var, val))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Atom(Action),
    Shadow(Action, u32),
    Guard(Guard),
    Seq(T, T),
    Alt(T, T),
    /// Synchronous parallel composition.
    Par(T, T),
    /// Communication merge.
    Comm(T, T),
    /// Full merge.
    Merge(T, T),
    Theta(T),
    Unless(T, T),
    Encap(NameSet, T),
    Hide(NameSet, T),
    Var(Name),
    Call(Name, Name),
    New(T),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursiveSpec {
    pub name: Name,
    pub equations: Vec<(Name, T)>,
}

impl RecursiveSpec {
    pub fn lookup(&self, var: &str) -> Option<&T> {
        self.equations.iter().find(|(n, _)| n.as_ref() == var).map(|(_, t)| t)
    }

    /// Every variable used on a right-hand side must be defined.
    pub fn check_closed(&self) -> Result<()> {
        for (_, rhs) in &self.equations {
            let mut vars = BTreeSet::new();
            free_vars(rhs, &mut vars);
            for v in vars {
                if self.lookup(&v).is_none() {
                    return Err(Error::UndeclaredName(v.to_string()));
                }
            }
        }
        Ok(())
    }
}

pub fn atom(name: &str) -> T {
    Arc::new(Term::Atom(Action::new(name, &[])))
}

pub fn act(a: Action) -> T {
    Arc::new(Term::Atom(a))
}

pub fn tau() -> T {
    Arc::new(Term::Atom(Action::tau()))
}

pub fn delta() -> T {
    Arc::new(Term::Atom(Action::delta()))
}

pub fn eps() -> T {
    Arc::new(Term::Atom(Action::eps()))
}

pub fn guard(g: Guard) -> T {
    Arc::new(Term::Guard(g))
}

pub fn shadow(a: Action, i: u32) -> T {
    Arc::new(Term::Shadow(a, i))
}

pub fn seq(l: T, r: T) -> T {
    Arc::new(Term::Seq(l, r))
}

pub fn alt(l: T, r: T) -> T {
    Arc::new(Term::Alt(l, r))
}

pub fn par(l: T, r: T) -> T {
    Arc::new(Term::Par(l, r))
}

pub fn comm(l: T, r: T) -> T {
    Arc::new(Term::Comm(l, r))
}

pub fn merge(l: T, r: T) -> T {
    Arc::new(Term::Merge(l, r))
}

pub fn theta(t: T) -> T {
    Arc::new(Term::Theta(t))
}

pub fn unless(l: T, r: T) -> T {
    Arc::new(Term::Unless(l, r))
}

pub fn encap(h: NameSet, t: T) -> T {
    Arc::new(Term::Encap(h, t))
}

pub fn hide(i: NameSet, t: T) -> T {
    Arc::new(Term::Hide(i, t))
}

pub fn var(n: &str) -> T {
    Arc::new(Term::Var(n.into()))
}

pub fn new_(t: T) -> T {
    Arc::new(Term::New(t))
}

/// Right-nested sum in the given order; `None` for an empty list.
pub fn alt_chain(mut parts: Vec<T>) -> Option<T> {
    let mut acc = parts.pop()?;
    while let Some(p) = parts.pop() {
        acc = alt(p, acc);
    }
    Some(acc)
}

/// Right-nested fold with an arbitrary binary constructor.
pub fn fold_right(mut parts: Vec<T>, f: fn(T, T) -> T) -> Option<T> {
    let mut acc = parts.pop()?;
    while let Some(p) = parts.pop() {
        acc = f(p, acc);
    }
    Some(acc)
}

impl Term {
    pub fn is_delta(&self) -> bool {
        matches!(self, Term::Atom(a) if a.kind == ActionKind::Delta)
    }

    pub fn is_eps(&self) -> bool {
        matches!(self, Term::Atom(a) if a.kind == ActionKind::Eps)
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Term::Atom(a) if a.kind == ActionKind::Tau)
    }

    /// An atom that can label a step (visible or τ).
    pub fn as_event(&self) -> Option<&Action> {
        match self {
            Term::Atom(a) if matches!(a.kind, ActionKind::Visible | ActionKind::Tau) => Some(a),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&T> {
        match self {
            Term::Atom(_) | Term::Shadow(..) | Term::Guard(_) | Term::Var(_) | Term::Call(..) => vec![],
            Term::Seq(l, r)
            | Term::Alt(l, r)
            | Term::Par(l, r)
            | Term::Comm(l, r)
            | Term::Merge(l, r)
            | Term::Unless(l, r) => vec![l, r],
            Term::Theta(t) | Term::Encap(_, t) | Term::Hide(_, t) | Term::New(t) => vec![t],
        }
    }

    /// Rebuild this node with new children (same arity as `children`).
    pub fn with_children(&self, mut ch: Vec<T>) -> Term {
        match self {
            Term::Atom(_) | Term::Shadow(..) | Term::Guard(_) | Term::Var(_) | Term::Call(..) => self.clone(),
            Term::Seq(..) => {
                let r = ch.pop().unwrap();
                Term::Seq(ch.pop().unwrap(), r)
            }
            Term::Alt(..) => {
                let r = ch.pop().unwrap();
                Term::Alt(ch.pop().unwrap(), r)
            }
            Term::Par(..) => {
                let r = ch.pop().unwrap();
                Term::Par(ch.pop().unwrap(), r)
            }
            Term::Comm(..) => {
                let r = ch.pop().unwrap();
                Term::Comm(ch.pop().unwrap(), r)
            }
            Term::Merge(..) => {
                let r = ch.pop().unwrap();
                Term::Merge(ch.pop().unwrap(), r)
            }
            Term::Unless(..) => {
                let r = ch.pop().unwrap();
                Term::Unless(ch.pop().unwrap(), r)
            }
            Term::Theta(_) => Term::Theta(ch.pop().unwrap()),
            Term::Encap(h, _) => Term::Encap(h.clone(), ch.pop().unwrap()),
            Term::Hide(i, _) => Term::Hide(i.clone(), ch.pop().unwrap()),
            Term::New(_) => Term::New(ch.pop().unwrap()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Term::Atom(_) => "atom",
            Term::Shadow(..) => "shadow",
            Term::Guard(_) => "guard",
            Term::Seq(..) => "seq",
            Term::Alt(..) => "alt",
            Term::Par(..) => "par",
            Term::Comm(..) => "comm",
            Term::Merge(..) => "merge",
            Term::Theta(_) => "theta",
            Term::Unless(..) => "unless",
            Term::Encap(..) => "encap",
            Term::Hide(..) => "hide",
            Term::Var(_) => "var",
            Term::Call(..) => "call",
            Term::New(_) => "new",
        }
    }
}

pub fn size(t: &Term) -> usize {
    1 + t.children().iter().map(|c| size(c)).sum::<usize>()
}

pub fn free_vars(t: &Term, out: &mut BTreeSet<Name>) {
    match t {
        Term::Var(n) => {
            out.insert(n.clone());
        }
        _ => {
            for c in t.children() {
                free_vars(c, out);
            }
        }
    }
}

pub fn is_recursion_free(t: &Term) -> bool {
    match t {
        Term::Var(_) | Term::Call(..) => false,
        _ => t.children().iter().all(|c| is_recursion_free(c)),
    }
}

pub fn substitute(t: &T, x: &str, s: &T) -> T {
    match t.as_ref() {
        Term::Var(n) if n.as_ref() == x => s.clone(),
        _ => {
            let ch = t.children();
            if ch.is_empty() {
                return t.clone();
            }
            let new: Vec<T> = ch.iter().map(|c| substitute(c, x, s)).collect();
            if new.iter().zip(ch.iter()).all(|(a, b)| Arc::ptr_eq(a, b)) {
                t.clone()
            } else {
                Arc::new(t.with_children(new))
            }
        }
    }
}

fn subst_args(args: &[Name], var: &str, val: &Name) -> Vec<Name> {
    args.iter().map(|a| if a.as_ref() == var { val.clone() } else { a.clone() }).collect()
}

/// Replace a data binder inside action and guard arguments.
pub fn subst_value(t: &T, var: &str, val: &Name) -> T {
    match t.as_ref() {
        Term::Atom(a) => act(Action { name: a.name.clone(), args: subst_args(&a.args, var, val), kind: a.kind }),
        Term::Shadow(a, i) => shadow(Action { name: a.name.clone(), args: subst_args(&a.args, var, val), kind: a.kind }, *i),
        Term::Guard(g) => guard(g.subst_value(var, val)),
        Term::Var(_) | Term::Call(..) => t.clone(),
        _ => {
            let new: Vec<T> = t.children().iter().map(|c| subst_value(c, var, val)).collect();
            Arc::new(t.with_children(new))
        }
    }
}

pub fn expand_finite_sum(binder: &str, domain: &[Name], body: &T) -> Result<T> {
    if domain.is_empty() {
        return Err(Error::EmptyDomain(binder.to_string()));
    }
    let parts = domain.iter().map(|v| subst_value(body, binder, v)).collect();
    Ok(alt_chain(parts).expect("non-empty"))
}

pub fn is_basic_term(t: &Term) -> bool {
    match t {
        Term::Atom(_) | Term::Guard(_) => true,
        Term::Seq(l, r) => matches!(l.as_ref(), Term::Atom(_) | Term::Guard(_)) && is_basic_term(r),
        Term::Alt(l, r) | Term::Par(l, r) => is_basic_term(l) && is_basic_term(r),
        _ => false,
    }
}

/// Visible action names occurring syntactically; shadows are reported as `name(shadow)`.
pub fn alphabet(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    alphabet_into(t, &mut out);
    out
}

fn alphabet_into(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Atom(a) if a.is_visible() => {
            out.insert(a.name.to_string());
        }
        Term::Shadow(a, _) => {
            out.insert(format!("{}(shadow)", a.name));
        }
        _ => {
            for c in t.children() {
                alphabet_into(c, out);
            }
        }
    }
}

/// Ground actions occurring syntactically (visible only).
pub fn actions(t: &Term, out: &mut BTreeSet<Action>) {
    match t {
        Term::Atom(a) if a.is_visible() => {
            out.insert(a.clone());
        }
        Term::Shadow(a, _) => {
            out.insert(a.clone());
        }
        _ => {
            for c in t.children() {
                actions(c, out);
            }
        }
    }
}

pub fn contains_kind(t: &Term, pred: &dyn Fn(&Term) -> bool) -> bool {
    pred(t) || t.children().iter().any(|c| contains_kind(c, pred))
}

/// Subterm at a dotted position path (root is `0`, children `0.0`, `0.1`, ...).
pub fn subterm_at<'a>(t: &'a T, path: &[usize]) -> Option<&'a T> {
    let mut cur = t;
    for &i in path {
        cur = *cur.children().get(i)?;
    }
    Some(cur)
}

pub fn replace_at(t: &T, path: &[usize], new: T) -> Option<T> {
    if path.is_empty() {
        return Some(new);
    }
    let ch = t.children();
    let idx = path[0];
    let child = ch.get(idx)?;
    let replaced = replace_at(child, &path[1..], new)?;
    let mut v: Vec<T> = ch.into_iter().cloned().collect();
    v[idx] = replaced;
    Some(Arc::new(t.with_children(v)))
}

pub fn path_string(path: &[usize]) -> String {
    let mut s = String::from("0");
    for i in path {
        s.push('.');
        s.push_str(&i.to_string());
    }
    s
}

pub fn parse_path(s: &str) -> Option<Vec<usize>> {
    let mut it = s.split('.');
    if it.next()? != "0" {
        return None;
    }
    it.map(|p| p.parse().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitute_replaces_free_var() {
        let t = seq(atom("a"), var("X"));
        assert_eq!(substitute(&t, "X", &atom("b")), seq(atom("a"), atom("b")));
        assert_eq!(substitute(&atom("a"), "X", &atom("b")), atom("a"));
    }

    #[test]
    fn one_unfolding_of_a_dot_x() {
        let call: T = Arc::new(Term::Call("X".into(), "E".into()));
        let body = seq(atom("a"), var("X"));
        assert_eq!(substitute(&body, "X", &call), seq(atom("a"), call.clone()));
    }

    #[test]
    fn finite_sum_expansion() {
        let body = act(Action::new("r_A", &["d"]));
        let dom: Vec<Name> = vec!["d1".into(), "d2".into()];
        let t = expand_finite_sum("d", &dom, &body).unwrap();
        assert_eq!(t, alt(act(Action::new("r_A", &["d1"])), act(Action::new("r_A", &["d2"]))));
        let t1 = expand_finite_sum("d", &dom[..1], &body).unwrap();
        assert_eq!(t1, act(Action::new("r_A", &["d1"])));
        assert!(matches!(expand_finite_sum("d", &[], &body), Err(Error::EmptyDomain(_))));
    }

    #[test]
    fn basic_terms() {
        assert!(is_basic_term(&alt(seq(atom("a"), atom("b")), atom("c"))));
        assert!(!is_basic_term(&encap(NameSet::new(["a"]), atom("a"))));
        assert!(is_basic_term(&par(atom("a"), atom("b"))));
        assert!(!is_basic_term(&seq(alt(atom("a"), atom("b")), atom("c"))));
    }

    #[test]
    fn alphabet_flags_shadows() {
        let t = seq(atom("a"), alt(atom("b"), delta()));
        assert_eq!(alphabet(&t), ["a", "b"].iter().map(|s| s.to_string()).collect());
        let s = seq(shadow(Action::new("a", &[]), 1), atom("b"));
        assert_eq!(alphabet(&s), ["a(shadow)", "b"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn paths_round_trip() {
        let t = seq(alt(atom("a"), atom("b")), atom("c"));
        let p = parse_path("0.0.1").unwrap();
        assert_eq!(subterm_at(&t, &p).unwrap(), &atom("b"));
        assert_eq!(path_string(&p), "0.0.1");
        let r = replace_at(&t, &p, atom("z")).unwrap();
        assert_eq!(r, seq(alt(atom("a"), atom("z")), atom("c")));
    }

    #[test]
    fn name_set_matches_full_label() {
        let h = NameSet::new(["r_Mas(DO_1)", "s_B"]);
        assert!(h.contains(&Action::new("r_Mas", &["DO_1"])));
        assert!(!h.contains(&Action::new("r_Mas", &["DI"])));
        assert!(h.contains(&Action::new("s_B", &["d1", "0"])));
    }
}
