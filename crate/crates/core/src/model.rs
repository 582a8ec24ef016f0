//! Parsed models: declarations, communication table and recursive specs.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::term::{Action, Name, NameSet, RecursiveSpec, T};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MailRole {
    Send,
    Receive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSig {
    pub name: Name,
    pub params: Vec<Name>,
    pub mail: Option<(MailRole, Name)>,
}

/// Data expression in action arguments and assignments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ValExpr {
    Id(Name),
    App(Name, Box<ValExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatAction {
    pub name: Name,
    pub args: Vec<ValExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommRule {
    pub left: PatAction,
    pub right: PatAction,
    pub result: PatAction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairRule {
    pub left: PatAction,
    pub right: PatAction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDecl {
    pub name: Name,
    pub map: Vec<(Name, Name)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: Name,
    pub domain: Name,
    pub init: Name,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectDecl {
    pub action: Name,
    pub params: Vec<Name>,
    /// Each alternative is one successor; an empty list leaves the store unchanged.
    pub alternatives: Vec<Vec<(Name, ValExpr)>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub name: Name,
    pub domains: Vec<(Name, Vec<Name>)>,
    pub funs: Vec<FunDecl>,
    pub actions: Vec<ActionSig>,
    pub mailboxes: Vec<(Name, u32)>,
    pub vars: Vec<VarDecl>,
    pub effects: Vec<EffectDecl>,
    pub comm_rules: Vec<CommRule>,
    pub conflict_rules: Vec<PairRule>,
    pub order_rules: Vec<PairRule>,
    pub gamma: BTreeMap<(Action, Action), Action>,
    pub conflicts: BTreeSet<(Action, Action)>,
    pub orders: BTreeSet<(Action, Action)>,
    pub sets: Vec<(Name, BTreeSet<Name>)>,
    pub specs: Vec<RecursiveSpec>,
    pub system: Option<T>,
    pub spec_term: Option<T>,
}

pub const DEFAULT_MAILBOX_CAPACITY: u32 = 4;

impl Model {
    pub fn empty(name: &str) -> Model {
        Model {
            name: name.into(),
            domains: Vec::new(),
            funs: Vec::new(),
            actions: Vec::new(),
            mailboxes: Vec::new(),
            vars: Vec::new(),
            effects: Vec::new(),
            comm_rules: Vec::new(),
            conflict_rules: Vec::new(),
            order_rules: Vec::new(),
            gamma: BTreeMap::new(),
            conflicts: BTreeSet::new(),
            orders: BTreeSet::new(),
            sets: Vec::new(),
            specs: vec![RecursiveSpec { name: name.into(), equations: Vec::new() }],
            system: None,
            spec_term: None,
        }
    }

    pub fn domain(&self, name: &str) -> Option<&[Name]> {
        self.domains.iter().find(|(n, _)| n.as_ref() == name).map(|(_, v)| v.as_slice())
    }

    pub fn fun(&self, name: &str) -> Option<&FunDecl> {
        self.funs.iter().find(|f| f.name.as_ref() == name)
    }

    pub fn sigs<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a ActionSig> + 'a {
        self.actions.iter().filter(move |s| s.name.as_ref() == name)
    }

    /// The signature of a ground action: same name and arity, preferring one whose parameter
    /// domains contain the arguments (a name may be declared twice over disjoint domains).
    pub fn sig_for(&self, a: &Action) -> Option<&ActionSig> {
        let mut same = self.actions.iter().filter(|s| s.name == a.name && s.params.len() == a.args.len());
        let first = same.next()?;
        let fits = |s: &ActionSig| {
            s.params.iter().zip(&a.args).all(|(d, v)| self.domain(d).is_some_and(|vs| vs.contains(v)))
        };
        if fits(first) {
            return Some(first);
        }
        same.find(|s| fits(s)).or(Some(first))
    }

    pub fn mailbox_capacity(&self, name: &str) -> Option<u32> {
        self.mailboxes.iter().find(|(n, _)| n.as_ref() == name).map(|(_, c)| *c)
    }

    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|v| v.name.as_ref() == name)
    }

    pub fn effect(&self, action: &str) -> Option<&EffectDecl> {
        self.effects.iter().find(|e| e.action.as_ref() == action)
    }

    /// Store variables written by any alternative of the action's effect.
    pub fn writes(&self, a: &Action) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        if let Some(e) = self.effect(&a.name) {
            for alt in &e.alternatives {
                for (x, _) in alt {
                    out.insert(x.clone());
                }
            }
        }
        out
    }

    pub fn gamma(&self, a: &Action, b: &Action) -> Option<&Action> {
        self.gamma.get(&(a.clone(), b.clone()))
    }

    pub fn conflict(&self, a: &Action, b: &Action) -> bool {
        self.conflicts.contains(&(a.clone(), b.clone()))
    }

    pub fn order(&self, a: &Action, b: &Action) -> bool {
        self.orders.contains(&(a.clone(), b.clone()))
    }

    pub fn set(&self, name: &str) -> Option<NameSet> {
        self.sets
            .iter()
            .find(|(n, _)| n.as_ref() == name)
            .map(|(n, items)| NameSet::named(n, items.clone()))
    }

    pub fn main_spec(&self) -> &RecursiveSpec {
        &self.specs[0]
    }

    pub fn proc(&self, name: &str) -> Option<&T> {
        self.specs.iter().find_map(|s| s.lookup(name))
    }

    pub fn spec_named(&self, name: &str) -> Option<&RecursiveSpec> {
        self.specs.iter().find(|s| s.name.as_ref() == name)
    }

    pub fn mail_binding(&self, a: &Action) -> Option<(MailRole, Name)> {
        self.sig_for(a).and_then(|s| s.mail.clone())
    }

    /// Evaluate a data expression under a binder environment.
    pub fn eval_val(&self, v: &ValExpr, env: &BTreeMap<Name, Name>) -> Result<Name> {
        match v {
            ValExpr::Id(x) => Ok(env.get(x).cloned().unwrap_or_else(|| x.clone())),
            ValExpr::App(f, inner) => {
                let arg = self.eval_val(inner, env)?;
                let fd = self.fun(f).ok_or_else(|| Error::UndeclaredName(f.to_string()))?;
                fd.map
                    .iter()
                    .find(|(k, _)| *k == arg)
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| Error::Invalid(format!("{f} undefined on {arg}")))
            }
        }
    }

    /// Every ground instance of the action signatures.
    pub fn ground_actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        for s in &self.actions {
            let doms: Vec<&[Name]> = s.params.iter().map(|d| self.domain(d).unwrap_or(&[])).collect();
            for args in cartesian(&doms) {
                out.push(Action::with_args(s.name.clone(), args));
            }
        }
        out
    }
}

pub fn cartesian(doms: &[&[Name]]) -> Vec<Vec<Name>> {
    let mut acc: Vec<Vec<Name>> = vec![Vec::new()];
    for d in doms {
        let mut next = Vec::with_capacity(acc.len() * d.len());
        for prefix in &acc {
            for v in d.iter() {
                let mut p = prefix.clone();
                p.push(v.clone());
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}
