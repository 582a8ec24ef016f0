//! Data states: variable stores, guard tests, effects and mailboxes.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::term::{Action, Guard, Name};

/// Message payload carried by a mailbox (the argument list of the send action).
pub type Message = Vec<Name>;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataState {
    pub store: BTreeMap<Name, Name>,
    pub mailboxes: BTreeMap<Name, BTreeMap<Message, u32>>,
}

impl DataState {
    pub fn initial(m: &Model) -> DataState {
        DataState {
            store: m.vars.iter().map(|v| (v.name.clone(), v.init.clone())).collect(),
            mailboxes: BTreeMap::new(),
        }
    }

    /// Every store over the declared variable domains, with empty mailboxes.
    pub fn all_stores(m: &Model) -> Vec<DataState> {
        let doms: Vec<&[Name]> = m.vars.iter().map(|v| m.domain(&v.domain).unwrap_or(&[])).collect();
        crate::model::cartesian(&doms)
            .into_iter()
            .map(|vals| DataState {
                store: m.vars.iter().map(|v| v.name.clone()).zip(vals).collect(),
                mailboxes: BTreeMap::new(),
            })
            .collect()
    }

    pub fn mailbox_size(&self, mb: &str) -> u32 {
        self.mailboxes.get(mb).map(|b| b.values().sum()).unwrap_or(0)
    }

    pub fn count(&self, mb: &str, msg: &[Name]) -> u32 {
        self.mailboxes.get(mb).and_then(|b| b.get(msg)).copied().unwrap_or(0)
    }
}

pub fn eval_guard(m: &Model, g: &Guard, s: &DataState) -> Result<bool> {
    Ok(match g {
        Guard::True => true,
        Guard::False => false,
        Guard::Pred(x, args) => {
            if m.var(x).is_none() || args.len() != 1 {
                return Err(Error::UndeclaredPredicate(x.to_string()));
            }
            s.store.get(x) == Some(&args[0])
        }
        Guard::Not(g) => !eval_guard(m, g, s)?,
        Guard::Alt(a, b) => eval_guard(m, a, s)? || eval_guard(m, b, s)?,
        Guard::Seq(a, b) | Guard::Par(a, b) => eval_guard(m, a, s)? && eval_guard(m, b, s)?,
    })
}

/// Successor stores of firing `e` in `s`; the identity for τ and for actions without a declared effect.
pub fn apply_effect(m: &Model, e: &Action, s: &DataState) -> Vec<DataState> {
    let decl = match m.effect(&e.name) {
        Some(d) if e.is_visible() && (d.params.is_empty() || d.params.len() == e.args.len()) => d,
        _ => return vec![s.clone()],
    };
    let env: BTreeMap<Name, Name> = decl.params.iter().cloned().zip(e.args.iter().cloned()).collect();
    let mut out = BTreeSet::new();
    for alt in &decl.alternatives {
        let mut next = s.clone();
        for (x, v) in alt {
            // validated at load time; an undefined function application leaves the value as is
            if let Ok(val) = m.eval_val(v, &env) {
                next.store.insert(x.clone(), val);
            }
        }
        out.insert(next);
    }
    if out.is_empty() {
        out.insert(s.clone());
    }
    out.into_iter().collect()
}

/// Weakest precondition of `g` under `e`: every alternative's assignments substituted into
/// the guard, joined by conjunction.
pub fn wp(m: &Model, e: &Action, g: &Guard) -> Guard {
    let decl = match m.effect(&e.name) {
        Some(d) if e.is_visible() && (d.params.is_empty() || d.params.len() == e.args.len()) => d,
        _ => return g.clone(),
    };
    let env: BTreeMap<Name, Name> = decl.params.iter().cloned().zip(e.args.iter().cloned()).collect();
    let mut out: Option<Guard> = None;
    for alt in &decl.alternatives {
        let assigned: BTreeMap<Name, Name> =
            alt.iter().filter_map(|(x, v)| m.eval_val(v, &env).ok().map(|val| (x.clone(), val))).collect();
        let w = assign(g, &assigned);
        out = Some(match out {
            None => w,
            Some(acc) => Guard::Seq(Arc::new(acc), Arc::new(w)),
        });
    }
    out.unwrap_or_else(|| g.clone())
}

fn assign(g: &Guard, vals: &BTreeMap<Name, Name>) -> Guard {
    let sub = |h: &Arc<Guard>| Arc::new(assign(h, vals));
    match g {
        Guard::Pred(x, args) if args.len() == 1 => match vals.get(x) {
            Some(v) if *v == args[0] => Guard::True,
            Some(_) => Guard::False,
            None => g.clone(),
        },
        Guard::True | Guard::False | Guard::Pred(..) => g.clone(),
        Guard::Not(h) => Guard::Not(sub(h)),
        Guard::Alt(a, b) => Guard::Alt(sub(a), sub(b)),
        Guard::Seq(a, b) => Guard::Seq(sub(a), sub(b)),
        Guard::Par(a, b) => Guard::Par(sub(a), sub(b)),
    }
}

pub fn wp_holds(m: &Model, e: &Action, g: &Guard, s: &DataState) -> Result<bool> {
    eval_guard(m, &wp(m, e, g), s)
}

pub fn mailbox_send(m: &Model, mb: &str, msg: &[Name], s: &DataState) -> Result<DataState> {
    let cap = m.mailbox_capacity(mb).ok_or_else(|| Error::UndeclaredName(mb.to_string()))?;
    if s.mailbox_size(mb) >= cap {
        return Err(Error::MailboxFull(mb.to_string()));
    }
    let mut next = s.clone();
    *next.mailboxes.entry(mb.into()).or_default().entry(msg.to_vec()).or_insert(0) += 1;
    Ok(next)
}

pub fn mailbox_receive(mb: &str, msg: &[Name], s: &DataState) -> Option<DataState> {
    if s.count(mb, msg) == 0 {
        return None;
    }
    let mut next = s.clone();
    let bx = next.mailboxes.get_mut(mb)?;
    let c = bx.get_mut(msg)?;
    *c -= 1;
    if *c == 0 {
        bx.remove(msg);
    }
    if bx.is_empty() {
        next.mailboxes.remove(mb);
    }
    Some(next)
}

/// Load-time check that every assignment lands in the target variable's domain.
pub fn validate_effects(m: &Model) -> Result<()> {
    for e in &m.effects {
        let instances: Vec<Action> = m.ground_actions().into_iter().filter(|a| a.name == e.action).collect();
        for a in &instances {
            if !e.params.is_empty() && e.params.len() != a.args.len() {
                continue;
            }
            let env: BTreeMap<Name, Name> = e.params.iter().cloned().zip(a.args.iter().cloned()).collect();
            for alt in &e.alternatives {
                for (x, v) in alt {
                    let decl = m.var(x).ok_or_else(|| Error::UndeclaredName(x.to_string()))?;
                    let val = m.eval_val(v, &env)?;
                    if !m.domain(&decl.domain).map(|d| d.contains(&val)).unwrap_or(false) {
                        return Err(Error::Invalid(format!("effect of {a} assigns {val} outside {}", decl.domain)));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Actions whose declared effect has more than one alternative.
pub fn nondeterministic_effects(m: &Model) -> Vec<Name> {
    m.effects.iter().filter(|e| e.alternatives.len() > 1).map(|e| e.action.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model;
    use std::sync::Arc;

    fn model() -> Model {
        parse_model(
            "model m; domain V = {0, 1}; var x : V; act a, b, c, s(V) sends M, r(V) receives M;
             mailbox M cap 2; effect a : x := 1; effect b : x := 0 | x := 1;",
        )
        .unwrap()
    }

    #[test]
    fn guard_constants_and_g1() {
        let m = model();
        let s = DataState::initial(&m);
        assert!(eval_guard(&m, &Guard::True, &s).unwrap());
        assert!(!eval_guard(&m, &Guard::False, &s).unwrap());
        let phi = Guard::pred("x", &["0"]);
        let g = Guard::Seq(Arc::new(phi.clone()), Arc::new(Guard::not(phi.clone())));
        for s in DataState::all_stores(&m) {
            assert!(!eval_guard(&m, &g, &s).unwrap());
        }
        assert!(matches!(eval_guard(&m, &Guard::pred("y", &["0"]), &s), Err(Error::UndeclaredPredicate(_))));
    }

    #[test]
    fn effects() {
        let m = model();
        let s = DataState::initial(&m);
        assert_eq!(apply_effect(&m, &Action::new("c", &[]), &s), vec![s.clone()]);
        assert_eq!(apply_effect(&m, &Action::tau(), &s), vec![s.clone()]);
        assert_eq!(apply_effect(&m, &Action::new("b", &[]), &s).len(), 2);
        let one = Guard::pred("x", &["1"]);
        assert!(wp_holds(&m, &Action::new("a", &[]), &one, &s).unwrap());
        assert!(!wp_holds(&m, &Action::new("b", &[]), &one, &s).unwrap());
        assert!(wp_holds(&m, &Action::new("c", &[]), &Guard::True, &s).unwrap());
        assert!(!wp_holds(&m, &Action::new("c", &[]), &Guard::False, &s).unwrap());
        assert_eq!(nondeterministic_effects(&m), vec![Name::from("b")]);
    }

    #[test]
    fn mailboxes() {
        let m = model();
        let s0 = DataState::initial(&m);
        let msg: Vec<Name> = vec!["1".into()];
        let s1 = mailbox_send(&m, "M", &msg, &s0).unwrap();
        assert_eq!(s1.mailbox_size("M"), 1);
        let s2 = mailbox_send(&m, "M", &msg, &s1).unwrap();
        assert_eq!(s2.count("M", &msg), 2);
        assert!(matches!(mailbox_send(&m, "M", &msg, &s2), Err(Error::MailboxFull(_))));
        assert_eq!(mailbox_receive("M", &msg, &s1).unwrap(), s0);
        assert!(mailbox_receive("M", &msg, &s0).is_none());
    }
}
