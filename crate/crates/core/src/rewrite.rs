//! Axioms as oriented rewrite rules over terms kept modulo associativity and
//! commutativity of `+` and `∥`; normalization to basic terms with proof traces.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde_json::{json, Value};

use crate::data::{eval_guard, wp_holds, DataState};
use crate::dsl::{compact, math};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::term::{self, subterm_at, Action, ActionKind, Guard, NameSet, Term, T};

pub const DEFAULT_FUEL: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Table {
    Batc,
    Aptc,
    Ce,
    U,
    D,
    Tau,
    Ti,
    G,
    Sc,
    Pc,
}

impl Table {
    pub const ALL: [Table; 10] =
        [Table::Batc, Table::Aptc, Table::Ce, Table::U, Table::D, Table::Tau, Table::Ti, Table::G, Table::Sc, Table::Pc];

    pub fn tag(self) -> &'static str {
        match self {
            Table::Batc => "BATC",
            Table::Aptc => "APTC",
            Table::Ce => "CE",
            Table::U => "U",
            Table::D => "D",
            Table::Tau => "TAU",
            Table::Ti => "TI",
            Table::G => "G",
            Table::Sc => "SC",
            Table::Pc => "PC",
        }
    }
}

impl FromStr for Table {
    type Err = Error;
    fn from_str(s: &str) -> Result<Table> {
        Table::ALL
            .into_iter()
            .find(|t| t.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown axiom table `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AxiomId {
    pub table: Table,
    pub row: &'static str,
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table.tag(), self.row)
    }
}

impl AxiomId {
    /// The row label alone, qualified only when another table reuses it.
    pub fn short(&self) -> String {
        if catalog().iter().filter(|a| a.id.row == self.row).count() > 1 {
            self.to_string()
        } else {
            self.row.to_string()
        }
    }
}

impl FromStr for AxiomId {
    type Err = Error;
    fn from_str(s: &str) -> Result<AxiomId> {
        let hits: Vec<AxiomId> = match s.split_once('.') {
            Some((tag, row)) => {
                let t: Table = tag.parse()?;
                catalog().iter().filter(|a| a.id.table == t && a.id.row == row).map(|a| a.id).collect()
            }
            None => catalog().iter().filter(|a| a.id.row == s).map(|a| a.id).collect(),
        };
        match hits.as_slice() {
            [one] => Ok(*one),
            [] => Err(Error::Invalid(format!("unknown axiom `{s}`"))),
            _ => Err(Error::Invalid(format!("ambiguous axiom `{s}`; qualify it with its table"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dir {
    Ltr,
    Rtl,
}

impl FromStr for Dir {
    type Err = Error;
    fn from_str(s: &str) -> Result<Dir> {
        match s {
            "ltr" | "l2r" | "->" => Ok(Dir::Ltr),
            "rtl" | "r2l" | "<-" => Ok(Dir::Rtl),
            _ => Err(Error::Invalid(format!("unknown direction `{s}`"))),
        }
    }
}

/// Equivalence under which a row is expected to hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Step,
    Rbs,
}

// ---------------------------------------------------------------- patterns

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Kind {
    Any,
    Event,
    Guard,
    /// A guard test proper; the empty guard `ε` is excluded.
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Op {
    Seq,
    Alt,
    Par,
    Comm,
    Merge,
    Unless,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Un {
    Theta,
    Encap,
    Hide,
    New,
}

#[derive(Clone, Debug)]
pub(crate) enum P {
    Var(Kind, &'static str),
    Const(ActionKind),
    Bin(Op, Box<P>, Box<P>),
    Un(Un, Box<P>),
    Shadow(&'static str),
    Gamma(&'static str, &'static str),
    Not(&'static str),
}

fn kind_of(name: &str) -> Kind {
    match name.as_bytes()[0] {
        b'e' => Kind::Event,
        b'p' | b'q' => Kind::Guard,
        b'g' => Kind::Test,
        _ => Kind::Any,
    }
}

struct PatParser {
    s: &'static str,
    i: usize,
}

impl PatParser {
    fn eat(&mut self, tok: &str) -> bool {
        if self.s[self.i..].starts_with(tok) {
            self.i += tok.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> &'static str {
        let st = self.i;
        let b = self.s.as_bytes();
        while self.i < b.len() && (b[self.i].is_ascii_alphanumeric() || b[self.i] == b'_') {
            self.i += 1;
        }
        assert!(self.i > st, "pattern `{}`: identifier expected at {}", self.s, st);
        &self.s[st..self.i]
    }

    fn expect(&mut self, tok: &str) {
        assert!(self.eat(tok), "pattern `{}`: `{tok}` expected at {}", self.s, self.i);
    }

    fn sum(&mut self) -> P {
        let l = self.par();
        if self.eat("+") {
            P::Bin(Op::Alt, Box::new(l), Box::new(self.sum()))
        } else {
            l
        }
    }

    fn par(&mut self) -> P {
        let l = self.seq();
        let op = if self.eat("|||") {
            Op::Par
        } else if self.eat("||") {
            Op::Merge
        } else if self.eat("|") {
            Op::Comm
        } else {
            return l;
        };
        P::Bin(op, Box::new(l), Box::new(self.par()))
    }

    fn seq(&mut self) -> P {
        let l = self.prim();
        if self.eat(".") {
            P::Bin(Op::Seq, Box::new(l), Box::new(self.seq()))
        } else {
            l
        }
    }

    fn prim(&mut self) -> P {
        if self.eat("(") {
            let p = self.sum();
            self.expect(")");
            return p;
        }
        let id = self.ident();
        if self.eat("(") {
            let p = match id {
                "theta" | "dh" | "ti" | "new" => {
                    let un = match id {
                        "theta" => Un::Theta,
                        "dh" => Un::Encap,
                        "ti" => Un::Hide,
                        _ => Un::New,
                    };
                    P::Un(un, Box::new(self.sum()))
                }
                "unless" => {
                    let l = self.sum();
                    self.expect(",");
                    P::Bin(Op::Unless, Box::new(l), Box::new(self.sum()))
                }
                "sh" => P::Shadow(self.ident()),
                "not" => P::Not(self.ident()),
                "gamma" => {
                    let a = self.ident();
                    self.expect(",");
                    P::Gamma(a, self.ident())
                }
                _ => panic!("pattern `{}`: unknown function `{id}`", self.s),
            };
            self.expect(")");
            return p;
        }
        match id {
            "delta" => P::Const(ActionKind::Delta),
            "eps" => P::Const(ActionKind::Eps),
            "tau" => P::Const(ActionKind::Tau),
            _ => P::Var(kind_of(id), id),
        }
    }
}

fn parse_pattern(s: &'static str) -> P {
    let mut p = PatParser { s, i: 0 };
    let out = p.sum();
    assert_eq!(p.i, s.len(), "pattern `{s}`: trailing input");
    out
}

impl P {
    pub(crate) fn size(&self) -> usize {
        match self {
            P::Bin(_, l, r) => 1 + l.size() + r.size(),
            P::Un(_, c) => 1 + c.size(),
            _ => 1,
        }
    }

    pub(crate) fn vars(&self, out: &mut Vec<(&'static str, Kind)>) {
        match self {
            P::Var(k, n) => {
                if !out.iter().any(|(m, _)| m == n) {
                    out.push((n, *k));
                }
            }
            P::Shadow(n) | P::Not(n) => {
                let k = if matches!(self, P::Shadow(_)) { Kind::Event } else { Kind::Guard };
                if !out.iter().any(|(m, _)| m == n) {
                    out.push((n, k));
                }
            }
            P::Gamma(a, b) => {
                for n in [a, b] {
                    if !out.iter().any(|(m, _)| m == n) {
                        out.push((n, Kind::Event));
                    }
                }
            }
            P::Bin(_, l, r) => {
                l.vars(out);
                r.vars(out);
            }
            P::Un(_, c) => c.vars(out),
            P::Const(_) => {}
        }
    }

    pub(crate) fn occurrences(&self, name: &str) -> usize {
        match self {
            P::Var(_, n) => usize::from(*n == name),
            P::Bin(_, l, r) => l.occurrences(name) + r.occurrences(name),
            P::Un(_, c) => c.occurrences(name),
            _ => 0,
        }
    }

    fn mentions_conflicts(&self) -> bool {
        match self {
            P::Un(Un::Theta, _) | P::Bin(Op::Unless, ..) => true,
            P::Bin(_, l, r) => l.mentions_conflicts() || r.mentions_conflicts(),
            P::Un(_, c) => c.mentions_conflicts(),
            _ => false,
        }
    }
}

// ---------------------------------------------------------------- catalog

#[derive(Clone, Debug)]
pub(crate) enum Cond {
    Conflict(&'static str, &'static str),
    /// Some `e2` with `♯(e1, e2)` and `e2 ≤ e3`.
    ConflictBelow(&'static str, &'static str),
    InSet(&'static str, bool),
    GuardInSet(&'static str, bool),
    Wp { w: &'static str, e: &'static str, p: &'static str, negated: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Shape {
    Eq,
    /// Merge expansion over the heads of both operands.
    Expand,
    GuardValid,
    GuardSeqFalse,
    GuardParFalse,
}

#[derive(Clone, Debug)]
pub struct Axiom {
    pub id: AxiomId,
    pub lhs: &'static str,
    pub rhs: &'static str,
    pub check: Check,
    pub(crate) products: bool,
    pub(crate) shape: Shape,
    pub(crate) conds: Vec<Cond>,
    pub(crate) lp: P,
    pub(crate) rp: P,
}

impl Axiom {
    fn new(table: Table, row: &'static str, lhs: &'static str, rhs: &'static str) -> Axiom {
        Axiom {
            id: AxiomId { table, row },
            lhs,
            rhs,
            check: Check::Step,
            products: false,
            shape: Shape::Eq,
            conds: Vec::new(),
            lp: parse_pattern(lhs),
            rp: parse_pattern(rhs),
        }
    }

    fn prod(mut self) -> Axiom {
        self.products = true;
        self
    }

    fn rbs(mut self) -> Axiom {
        self.check = Check::Rbs;
        self
    }

    fn when(mut self, c: Cond) -> Axiom {
        self.conds.push(c);
        self
    }

    fn shape(mut self, s: Shape) -> Axiom {
        self.shape = s;
        self
    }

    pub fn equation(&self) -> String {
        let mut s = format!("{} = {}", self.lhs, self.rhs);
        if !self.conds.is_empty() {
            let cs: Vec<String> = self.conds.iter().map(describe).collect();
            s.push_str(&format!("  if {}", cs.join(", ")));
        }
        s
    }

    pub(crate) fn needs_conflicts(&self) -> bool {
        self.lp.mentions_conflicts() || self.rp.mentions_conflicts()
    }
}

fn describe(c: &Cond) -> String {
    match c {
        Cond::Conflict(a, b) => format!("{a} # {b}"),
        Cond::ConflictBelow(a, b) => format!("{a} # e2, e2 <= {b}"),
        Cond::InSet(e, true) => format!("{e} in set"),
        Cond::InSet(e, false) => format!("{e} not in set"),
        Cond::GuardInSet(p, true) => format!("{p} in set"),
        Cond::GuardInSet(p, false) => format!("{p} not in set"),
        Cond::Wp { w, e, p, negated: false } => format!("{w} = wp({e},{p})"),
        Cond::Wp { w, e, p, negated: true } => format!("{w} = not wp({e},{p})"),
    }
}

fn build_catalog() -> Vec<Axiom> {
    use Table::*;
    let r = Axiom::new;
    vec![
        r(Batc, "A1", "x+y", "y+x"),
        r(Batc, "A2", "(x+y)+z", "x+(y+z)"),
        r(Batc, "A3", "x+x", "x"),
        r(Batc, "A4", "(x+y).z", "x.z+y.z"),
        r(Batc, "A5", "(x.y).z", "x.(y.z)"),
        r(Aptc, "A6", "x+delta", "x"),
        r(Aptc, "A7", "delta.x", "delta"),
        r(Aptc, "P1", "x||y", "x|||y+x|y").shape(Shape::Expand),
        r(Aptc, "P2", "x|||y", "y|||x"),
        r(Aptc, "P3", "(x|||y)|||z", "x|||(y|||z)"),
        r(Aptc, "P4", "e1|||(e2.y)", "(e1|||e2).y").prod(),
        r(Aptc, "P5", "(e1.x)|||e2", "(e1|||e2).x").prod(),
        r(Aptc, "P6", "(e1.x)|||(e2.y)", "(e1|||e2).(x||y)").prod(),
        r(Aptc, "P7", "(x+y)|||z", "x|||z+y|||z"),
        r(Aptc, "P8", "x|||(y+z)", "x|||y+x|||z"),
        r(Aptc, "P9", "delta|||x", "delta"),
        r(Aptc, "P10", "x|||delta", "delta"),
        r(Aptc, "C11", "e1|e2", "gamma(e1,e2)").prod(),
        r(Aptc, "C12", "e1|(e2.y)", "gamma(e1,e2).y").prod(),
        r(Aptc, "C13", "(e1.x)|e2", "gamma(e1,e2).x").prod(),
        r(Aptc, "C14", "(e1.x)|(e2.y)", "gamma(e1,e2).(x||y)").prod(),
        r(Aptc, "C15", "(x+y)|z", "x|z+y|z"),
        r(Aptc, "C16", "x|(y+z)", "x|y+x|z"),
        r(Aptc, "C17", "delta|x", "delta"),
        r(Aptc, "C18", "x|delta", "delta"),
        r(Ce, "CE19", "theta(e)", "e"),
        r(Ce, "CE20", "theta(delta)", "delta"),
        r(Ce, "CE21", "theta(x+y)", "unless(theta(x),y)+unless(theta(y),x)"),
        r(Ce, "CE22", "theta(x.y)", "theta(x).theta(y)"),
        r(Ce, "CE23", "theta(x|||y)", "(unless(theta(x),y)|||y)+(unless(theta(y),x)|||x)"),
        r(Ce, "CE24", "theta(x|y)", "(unless(theta(x),y)|y)+(unless(theta(y),x)|x)"),
        r(U, "U25", "unless(e1,e2)", "tau").when(Cond::Conflict("e1", "e2")),
        r(U, "U26", "unless(e1,e3)", "e1").when(Cond::ConflictBelow("e1", "e3")),
        r(U, "U27", "unless(e3,e1)", "tau").when(Cond::ConflictBelow("e1", "e3")),
        r(U, "U28", "unless(e,delta)", "e"),
        r(U, "U29", "unless(delta,e)", "delta"),
        r(U, "U30", "unless(x+y,z)", "unless(x,z)+unless(y,z)"),
        r(U, "U31", "unless(x.y,z)", "unless(x,z).unless(y,z)"),
        r(U, "U32", "unless(x|||y,z)", "unless(x,z)|||unless(y,z)"),
        r(U, "U33", "unless(x|y,z)", "unless(x,z)|unless(y,z)"),
        r(U, "U34", "unless(x,y+z)", "unless(unless(x,y),z)"),
        r(U, "U35", "unless(x,y.z)", "unless(unless(x,y),z)"),
        r(U, "U36", "unless(x,y|||z)", "unless(unless(x,y),z)"),
        r(U, "U37", "unless(x,y|z)", "unless(unless(x,y),z)"),
        r(D, "D1", "dh(e)", "e").when(Cond::InSet("e", false)),
        r(D, "D2", "dh(e)", "delta").when(Cond::InSet("e", true)),
        r(D, "D3", "dh(delta)", "delta"),
        r(D, "D4", "dh(x+y)", "dh(x)+dh(y)"),
        r(D, "D5", "dh(x.y)", "dh(x).dh(y)"),
        r(D, "D6", "dh(x|||y)", "dh(x)|||dh(y)"),
        r(Tau, "B1", "e.tau", "e").rbs(),
        r(Tau, "B2", "e.(tau.(x+y)+x)", "e.(x+y)").rbs(),
        r(Tau, "B3", "x|||tau", "x").rbs(),
        r(Ti, "TI1", "ti(e)", "e").when(Cond::InSet("e", false)).rbs(),
        r(Ti, "TI2", "ti(e)", "tau").when(Cond::InSet("e", true)).rbs(),
        r(Ti, "TI3", "ti(delta)", "delta").rbs(),
        r(Ti, "TI4", "ti(x+y)", "ti(x)+ti(y)").rbs(),
        r(Ti, "TI5", "ti(x.y)", "ti(x).ti(y)").rbs(),
        r(Ti, "TI6", "ti(x|||y)", "ti(x)|||ti(y)").rbs(),
        r(G, "A8", "eps.x", "x"),
        r(G, "A9", "x.eps", "x"),
        r(G, "G1", "p.not(p)", "delta"),
        r(G, "G2", "p+not(p)", "eps"),
        r(G, "G3", "p.delta", "delta"),
        r(G, "G4", "p.(x+y)", "p.x+p.y"),
        r(G, "G5", "p.(x.y)", "(p.x).y"),
        r(G, "G6", "(p+q).x", "p.x+q.x"),
        r(G, "G7", "(p.q).x", "p.(q.x)"),
        r(G, "G8", "p", "eps").shape(Shape::GuardValid),
        r(G, "G9", "p", "delta").shape(Shape::GuardSeqFalse),
        r(G, "G10", "q.(e.p)", "q.e").when(Cond::Wp { w: "q", e: "e", p: "p", negated: false }),
        r(G, "G11", "q.(e.not(p))", "q.e").when(Cond::Wp { w: "q", e: "e", p: "p", negated: true }),
        r(G, "P9", "eps|||x", "x"),
        r(G, "P10", "x|||eps", "x"),
        r(G, "C9", "eps|x", "delta"),
        r(G, "C10", "x|eps", "delta"),
        r(G, "CE3", "theta(eps)", "eps"),
        r(G, "U6", "unless(e,eps)", "e"),
        r(G, "U7", "unless(eps,e)", "eps"),
        r(G, "G12", "p.(x|||y)", "(p.x)|||(p.y)"),
        r(G, "G13", "p.(x|y)", "(p.x)|(p.y)"),
        r(G, "G14", "p|||delta", "delta"),
        r(G, "G15", "delta|||p", "delta"),
        r(G, "G16", "p|delta", "delta"),
        r(G, "G17", "delta|p", "delta"),
        r(G, "G18", "p|||eps", "p"),
        r(G, "G19", "eps|||p", "p"),
        r(G, "G20", "p|eps", "delta"),
        r(G, "G21", "eps|p", "delta"),
        r(G, "G22", "p|||not(p)", "delta"),
        r(G, "G23", "theta(p)", "p"),
        r(G, "G24", "dh(p)", "p"),
        r(G, "G25", "p", "delta").shape(Shape::GuardParFalse),
        r(G, "G26", "g.tau", "g").rbs(),
        r(G, "G27", "g.(tau.(x+y)+x)", "g.(x+y)").rbs(),
        r(G, "G28", "ti(p)", "p").when(Cond::GuardInSet("p", false)),
        r(G, "G29", "ti(p)", "tau").when(Cond::GuardInSet("p", true)),
        r(Sc, "SC1", "sh(e).x", "x"),
        r(Sc, "SC2", "x.sh(e)", "x"),
        r(Sc, "SC3", "sh(e)|||e", "e"),
        r(Sc, "SC4", "e|||(sh(e).y)", "e.y"),
        r(Sc, "SC5", "sh(e)|||(e.y)", "e.y"),
        r(Sc, "SC6", "(e.x)|||sh(e)", "e.x"),
        r(Sc, "SC7", "(sh(e).x)|||e", "e.x"),
        r(Sc, "SC8", "(e.x)|||(sh(e).y)", "e.(x||y)"),
        r(Sc, "SC9", "(sh(e).x)|||(e.y)", "e.(x||y)"),
        r(Pc, "PC1", "new(x).y", "x||y"),
        r(Pc, "PC2", "new(x)||y", "x||y"),
        r(Pc, "PC3", "x||new(y)", "x||y"),
    ]
}

pub fn catalog() -> &'static [Axiom] {
    static CAT: OnceLock<Vec<Axiom>> = OnceLock::new();
    CAT.get_or_init(build_catalog)
}

pub fn axiom(id: AxiomId) -> &'static Axiom {
    catalog().iter().find(|a| a.id == id).expect("catalog ids are closed")
}

pub fn table_rows(t: Table) -> Vec<&'static Axiom> {
    catalog().iter().filter(|a| a.id.table == t).collect()
}

// ---------------------------------------------------------------- AC canonical form

fn op_of(t: &Term) -> Option<(Op, &T, &T)> {
    Some(match t {
        Term::Seq(l, r) => (Op::Seq, l, r),
        Term::Alt(l, r) => (Op::Alt, l, r),
        Term::Par(l, r) => (Op::Par, l, r),
        Term::Comm(l, r) => (Op::Comm, l, r),
        Term::Merge(l, r) => (Op::Merge, l, r),
        Term::Unless(l, r) => (Op::Unless, l, r),
        _ => return None,
    })
}

fn mk(op: Op, l: T, r: T) -> T {
    match op {
        Op::Seq => term::seq(l, r),
        Op::Alt => term::alt(l, r),
        Op::Par => term::par(l, r),
        Op::Comm => term::comm(l, r),
        Op::Merge => term::merge(l, r),
        Op::Unless => term::unless(l, r),
    }
}

fn is_ac(op: Op) -> bool {
    matches!(op, Op::Alt | Op::Par)
}

fn flatten(op: Op, t: &T, out: &mut Vec<T>) {
    match op_of(t) {
        Some((o, l, r)) if o == op => {
            flatten(op, l, out);
            flatten(op, r, out);
        }
        _ => out.push(t.clone()),
    }
}

fn elems(op: Op, t: &T) -> Vec<T> {
    let mut v = Vec::new();
    flatten(op, t, &mut v);
    v
}

fn chain(op: Op, mut v: Vec<T>) -> T {
    let mut acc = v.pop().expect("non-empty chain");
    while let Some(x) = v.pop() {
        acc = mk(op, x, acc);
    }
    acc
}

/// Flattens, sorts and right-nests every `+` and `∥` chain.
pub fn canon(t: &T) -> T {
    match op_of(t) {
        Some((op, ..)) if is_ac(op) => {
            let mut v: Vec<T> = elems(op, t).iter().map(canon).collect();
            let mut flat = Vec::with_capacity(v.len());
            for x in v.drain(..) {
                flatten(op, &x, &mut flat);
            }
            flat.sort();
            chain(op, flat)
        }
        _ => {
            let ch = t.children();
            if ch.is_empty() {
                t.clone()
            } else {
                Arc::new(t.with_children(ch.into_iter().map(canon).collect()))
            }
        }
    }
}

// ---------------------------------------------------------------- matching

#[derive(Clone, Debug, Default)]
pub(crate) struct Bind {
    pub(crate) vars: BTreeMap<&'static str, T>,
    pub(crate) shadows: BTreeMap<&'static str, T>,
    pub(crate) set: Option<NameSet>,
}

fn guard_of(t: &Term) -> Option<Guard> {
    match t {
        Term::Guard(g) => Some(g.clone()),
        _ if t.is_eps() => Some(Guard::True),
        _ => None,
    }
}

/// Event atoms of an event or an event product.
fn product(t: &T) -> Option<Vec<Action>> {
    elems(Op::Par, t).iter().map(|f| f.as_event().cloned()).collect()
}

fn bind_var(mut b: Bind, n: &'static str, k: Kind, t: &T, out: &mut Vec<Bind>) {
    match b.vars.get(n) {
        Some(v) => {
            let same = if k == Kind::Guard { guard_of(v) == guard_of(t) } else { v == t };
            if same {
                out.push(b);
            }
        }
        None => {
            b.vars.insert(n, t.clone());
            out.push(b);
        }
    }
}

fn splits(op: Op, t: &T) -> Vec<(T, T)> {
    let el = elems(op, t);
    let n = el.len();
    if n == 2 {
        return vec![(el[0].clone(), el[1].clone()), (el[1].clone(), el[0].clone())];
    }
    let rest = |i: usize| chain(op, el.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x.clone()).collect());
    let mut out: Vec<(T, T)> = (0..n).map(|i| (el[i].clone(), rest(i))).collect();
    out.extend((0..n).map(|i| (rest(i), el[i].clone())));
    out
}

fn mt(p: &P, t: &T, b: Bind, products: bool, out: &mut Vec<Bind>) {
    match p {
        P::Var(Kind::Any, n) => bind_var(b, n, Kind::Any, t, out),
        P::Var(Kind::Event, n) => {
            let ok = t.as_event().is_some() || (products && matches!(**t, Term::Par(..)) && product(t).is_some());
            if ok {
                bind_var(b, n, Kind::Event, t, out)
            }
        }
        P::Var(Kind::Guard, n) => {
            if guard_of(t).is_some() {
                bind_var(b, n, Kind::Guard, t, out)
            }
        }
        P::Var(Kind::Test, n) => {
            if matches!(**t, Term::Guard(_)) {
                bind_var(b, n, Kind::Test, t, out)
            }
        }
        P::Const(k) => {
            if matches!(&**t, Term::Atom(a) if a.kind == *k) {
                out.push(b)
            }
        }
        P::Shadow(n) => {
            if let Term::Shadow(a, _) = &**t {
                let mut mid = Vec::new();
                bind_var(b, n, Kind::Event, &term::act(a.clone()), &mut mid);
                for mut b in mid {
                    b.shadows.insert(n, t.clone());
                    out.push(b);
                }
            }
        }
        P::Not(n) => {
            if let Term::Guard(Guard::Not(g)) = &**t {
                bind_var(b, n, Kind::Guard, &term::guard((**g).clone()), out)
            }
        }
        P::Gamma(..) => {}
        P::Bin(op, l, r) => match op_of(t) {
            Some((o, tl, tr)) if o == *op => {
                let pieces = if is_ac(o) { splits(o, t) } else { vec![(tl.clone(), tr.clone())] };
                for (x, y) in pieces {
                    let mut mid = Vec::new();
                    mt(l, &x, b.clone(), products, &mut mid);
                    for b1 in mid {
                        mt(r, &y, b1, products, out);
                    }
                }
            }
            _ => {}
        },
        P::Un(un, c) => {
            let (inner, set) = match (un, &**t) {
                (Un::Theta, Term::Theta(x)) | (Un::New, Term::New(x)) => (x, None),
                (Un::Encap, Term::Encap(s, x)) | (Un::Hide, Term::Hide(s, x)) => (x, Some(s)),
                _ => return,
            };
            let mut b = b;
            if let Some(s) = set {
                match &b.set {
                    Some(old) if old != s => return,
                    _ => b.set = Some(s.clone()),
                }
            }
            mt(c, inner, b, products, out)
        }
    }
}

/// Matches at the root; for a `+` or `∥` pattern against a longer chain, a pair of
/// elements may match while the remaining elements ride along unchanged.
fn match_root(p: &P, t: &T, products: bool) -> Vec<(Bind, Option<(Op, Vec<T>)>)> {
    let mut plain = Vec::new();
    mt(p, t, Bind::default(), products, &mut plain);
    let mut out: Vec<_> = plain.into_iter().map(|b| (b, None)).collect();
    if let (P::Bin(op, l, r), Some((o, ..))) = (p, op_of(t)) {
        if *op == o && is_ac(o) {
            let el = elems(o, t);
            if el.len() > 2 {
                for i in 0..el.len() {
                    for j in 0..el.len() {
                        if i == j {
                            continue;
                        }
                        let mut mid = Vec::new();
                        mt(l, &el[i], Bind::default(), products, &mut mid);
                        for b1 in mid {
                            let mut fin = Vec::new();
                            mt(r, &el[j], b1, products, &mut fin);
                            for b2 in fin {
                                let rest: Vec<T> =
                                    el.iter().enumerate().filter(|(k, _)| *k != i && *k != j).map(|(_, x)| x.clone()).collect();
                                out.push((b2, Some((o, rest))));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn label_of(t: &T) -> Option<Vec<Action>> {
    let mut v = product(t)?;
    if v.iter().any(|a| a.is_visible()) {
        v.retain(|a| a.is_visible());
    }
    Some(v)
}

/// Communication of two event products: defined only for two single visible actions.
fn gamma_term(x: &T, y: &T, m: &Model) -> Option<T> {
    let (lx, ly) = (label_of(x)?, label_of(y)?);
    Some(match (lx.as_slice(), ly.as_slice()) {
        ([a], [b]) if a.is_visible() && b.is_visible() => m.gamma(a, b).map(|c| term::act(c.clone())).unwrap_or_else(term::delta),
        _ => term::delta(),
    })
}

pub(crate) fn build(p: &P, b: &Bind, m: &Model) -> Option<T> {
    Some(match p {
        P::Var(_, n) => b.vars.get(n)?.clone(),
        P::Const(ActionKind::Delta) => term::delta(),
        P::Const(ActionKind::Eps) => term::eps(),
        P::Const(_) => term::tau(),
        P::Bin(op, l, r) => mk(*op, build(l, b, m)?, build(r, b, m)?),
        P::Un(un, c) => {
            let x = build(c, b, m)?;
            match un {
                Un::Theta => term::theta(x),
                Un::New => term::new_(x),
                Un::Encap => term::encap(b.set.clone()?, x),
                Un::Hide => term::hide(b.set.clone()?, x),
            }
        }
        P::Shadow(n) => b.shadows.get(n)?.clone(),
        P::Gamma(x, y) => gamma_term(b.vars.get(x)?, b.vars.get(y)?, m)?,
        P::Not(n) => term::guard(Guard::not(guard_of(b.vars.get(n)?)?)),
    })
}

fn event(b: &Bind, n: &str) -> Option<Action> {
    b.vars.get(n)?.as_event().cloned()
}

fn valid_everywhere(m: &Model, f: impl Fn(&DataState) -> Result<bool>) -> bool {
    DataState::all_stores(m).iter().all(|s| f(s).unwrap_or(false))
}

pub(crate) fn cond_holds(c: &Cond, b: &Bind, m: &Model) -> bool {
    match c {
        Cond::Conflict(x, y) => match (event(b, x), event(b, y)) {
            (Some(a1), Some(a2)) => m.conflict(&a1, &a2),
            _ => false,
        },
        Cond::ConflictBelow(x, z) => match (event(b, x), event(b, z)) {
            (Some(a1), Some(a3)) => m.conflicts.iter().any(|(l, r)| *l == a1 && m.order(r, &a3)),
            _ => false,
        },
        Cond::InSet(e, want) => match (event(b, e), &b.set) {
            (Some(a), Some(s)) => s.contains(&a) == *want,
            _ => false,
        },
        Cond::GuardInSet(p, want) => match (b.vars.get(p).and_then(|t| guard_of(t)), &b.set) {
            (Some(g), Some(s)) => {
                let mut names = BTreeSet::new();
                g.pred_names(&mut names);
                let all_in = !names.is_empty() && names.iter().all(|n| s.contains_name(n));
                all_in == *want
            }
            _ => false,
        },
        Cond::Wp { w, e, p, negated } => {
            let (Some(wg), Some(a), Some(pg)) = (b.vars.get(w).and_then(|t| guard_of(t)), event(b, e), b.vars.get(p).and_then(|t| guard_of(t)))
            else {
                return false;
            };
            valid_everywhere(m, |s| Ok(eval_guard(m, &wg, s)? == (wp_holds(m, &a, &pg, s)? != *negated)))
        }
    }
}

// ---------------------------------------------------------------- heads and custom rows

type Head = (Option<T>, Option<T>);

/// First steps of a basic term: the prefix that fires and what remains (`None` for √).
fn heads(t: &T) -> Option<Vec<Head>> {
    match &**t {
        Term::Alt(..) => {
            let mut v = Vec::new();
            for s in elems(Op::Alt, t) {
                v.extend(heads(&s)?);
            }
            Some(v)
        }
        _ if t.is_delta() => Some(Vec::new()),
        _ if t.is_eps() => Some(vec![(None, None)]),
        Term::Atom(_) | Term::Guard(_) if t.as_event().is_some() || guard_of(t).is_some() => Some(vec![(Some(t.clone()), None)]),
        Term::Seq(h, r) if h.as_event().is_some() || matches!(**h, Term::Guard(_)) => Some(vec![(Some(h.clone()), Some(r.clone()))]),
        Term::Par(..) => {
            let mut evs = Vec::new();
            let mut tail = None;
            for f in elems(Op::Par, t) {
                if f.as_event().is_some() {
                    evs.push(f);
                } else if let Term::Seq(h, r) = &*f {
                    if h.as_event().is_none() || tail.is_some() {
                        return None;
                    }
                    evs.push(h.clone());
                    tail = Some(r.clone());
                } else {
                    return None;
                }
            }
            Some(vec![(Some(chain(Op::Par, evs)), tail)])
        }
        _ => None,
    }
}

fn prefix(h: &Option<T>, z: T) -> T {
    match h {
        Some(h) => term::seq(h.clone(), z),
        None => z,
    }
}

fn expand_merge(x: &T, y: &T) -> Option<T> {
    let (hx, hy) = (heads(x)?, heads(y)?);
    let mut parts = vec![term::par(x.clone(), y.clone()), term::comm(x.clone(), y.clone())];
    for (h, r) in &hx {
        let rest = match r {
            Some(r) => term::merge(r.clone(), y.clone()),
            None => y.clone(),
        };
        parts.push(prefix(h, rest));
    }
    for (h, r) in &hy {
        let rest = match r {
            Some(r) => term::merge(x.clone(), r.clone()),
            None => x.clone(),
        };
        parts.push(prefix(h, rest));
    }
    term::alt_chain(parts)
}

fn guard_factors(op: Op, t: &T) -> Option<Vec<Guard>> {
    elems(op, t).iter().map(|f| guard_of(f)).collect()
}

fn unsat(m: &Model, gs: &[Guard]) -> bool {
    valid_everywhere(m, |s| {
        for g in gs {
            if !eval_guard(m, g, s)? {
                return Ok(true);
            }
        }
        Ok(false)
    })
}

enum Miss {
    NoMatch,
    Cond(String),
}

fn rewrite_root(ax: &Axiom, t: &T, dir: Dir, m: &Model) -> std::result::Result<T, Miss> {
    match ax.shape {
        Shape::Eq => {}
        _ if dir == Dir::Rtl => return Err(Miss::NoMatch),
        Shape::Expand => {
            return match &**t {
                Term::Merge(x, y) => expand_merge(x, y).ok_or(Miss::NoMatch),
                _ => Err(Miss::NoMatch),
            }
        }
        Shape::GuardValid => {
            let Term::Guard(g) = &**t else { return Err(Miss::NoMatch) };
            return if valid_everywhere(m, |s| eval_guard(m, g, s)) { Ok(term::eps()) } else { Err(Miss::Cond("guard is not valid".into())) };
        }
        Shape::GuardSeqFalse | Shape::GuardParFalse => {
            let op = if ax.shape == Shape::GuardSeqFalse { Op::Seq } else { Op::Par };
            let gs = match &**t {
                Term::Guard(_) if op == Op::Seq => guard_factors(op, t),
                Term::Seq(..) | Term::Par(..) if op_of(t).map(|o| o.0) == Some(op) => guard_factors(op, t),
                _ => None,
            }
            .ok_or(Miss::NoMatch)?;
            return if unsat(m, &gs) { Ok(term::delta()) } else { Err(Miss::Cond("guards are jointly satisfiable".into())) };
        }
    }
    if ax.needs_conflicts() && m.conflicts.is_empty() {
        return Err(Miss::NoMatch);
    }
    let (from, to) = match dir {
        Dir::Ltr => (&ax.lp, &ax.rp),
        Dir::Rtl => (&ax.rp, &ax.lp),
    };
    let mut failed = None;
    for (b, rem) in match_root(from, t, ax.products) {
        let Some(res) = build(to, &b, m) else { continue };
        if let Some(c) = ax.conds.iter().find(|c| !cond_holds(c, &b, m)) {
            failed = Some(describe(c));
            continue;
        }
        return Ok(match rem {
            Some((op, rest)) if !rest.is_empty() => mk(op, res, chain(op, rest)),
            _ => res,
        });
    }
    Err(failed.map(Miss::Cond).unwrap_or(Miss::NoMatch))
}

/// Rewrites the subterm at `pos` without canonicalizing the surrounding term.
fn rewrite_at(t: &T, id: AxiomId, pos: &[usize], dir: Dir, m: &Model) -> Result<(T, T)> {
    let ax = axiom(id);
    let no = || Error::NoMatch { axiom: id.short(), pos: term::path_string(pos) };
    let sub = subterm_at(t, pos).ok_or_else(no)?;
    let new = match rewrite_root(ax, sub, dir, m) {
        Ok(n) => canon(&n),
        Err(Miss::NoMatch) => return Err(no()),
        Err(Miss::Cond(c)) => return Err(Error::SideConditionFailed(format!("{}: {c}", id.short()))),
    };
    let whole = term::replace_at(t, pos, new.clone()).ok_or_else(no)?;
    Ok((new, whole))
}

/// One application of an axiom at a position; the result is in canonical form.
pub fn apply_axiom_once(t: &T, id: AxiomId, pos: &[usize], dir: Dir, m: &Model) -> Result<T> {
    Ok(canon(&rewrite_at(t, id, pos, dir, m)?.1))
}

/// Right-hand side of an axiom applied at the root of `t`, if it applies.
pub fn rewrite_here(t: &T, id: AxiomId, dir: Dir, m: &Model) -> Result<T> {
    rewrite_at(t, id, &[], dir, m).map(|(n, _)| n)
}

// ---------------------------------------------------------------- proof traces

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub axiom: AxiomId,
    pub dir: Dir,
    pub pos: Vec<usize>,
    pub before: T,
    pub after: T,
    /// Whether the whole term is brought back to canonical form after this step.
    pub settle: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTrace {
    pub input: T,
    pub steps: Vec<TraceStep>,
    pub result: T,
}

impl TraceStep {
    pub fn label(&self) -> String {
        match self.dir {
            Dir::Ltr => self.axiom.short(),
            Dir::Rtl => format!("{}⁻¹", self.axiom.short()),
        }
    }
}

impl ProofTrace {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for st in &self.steps {
            s.push_str(&format!("{} @ {} : {} ⇒ {}\n", st.label(), term::path_string(&st.pos), math(&st.before), math(&st.after)));
        }
        s
    }

    pub fn to_json(&self) -> Value {
        json!({
            "input": compact(&self.input),
            "result": compact(&self.result),
            "steps": self.steps.iter().map(|st| json!({
                "axiom": st.axiom.to_string(),
                "label": st.label(),
                "dir": if st.dir == Dir::Ltr { "ltr" } else { "rtl" },
                "pos": term::path_string(&st.pos),
                "before": compact(&st.before),
                "after": compact(&st.after),
            })).collect::<Vec<_>>(),
        })
    }

    /// Re-applies every step from the input and checks each intermediate subterm.
    pub fn replay(&self, m: &Model) -> Result<T> {
        let mut cur = canon(&self.input);
        for (i, st) in self.steps.iter().enumerate() {
            if subterm_at(&cur, &st.pos) != Some(&st.before) {
                return Err(Error::Invalid(format!("trace step {i} ({}): subterm differs", st.label())));
            }
            let (new, whole) = rewrite_at(&cur, st.axiom, &st.pos, st.dir, m)?;
            if new != st.after {
                return Err(Error::Invalid(format!("trace step {i} ({}): result differs", st.label())));
            }
            cur = if st.settle { canon(&whole) } else { whole };
        }
        if cur != self.result {
            return Err(Error::Invalid("trace does not end in the recorded result".into()));
        }
        Ok(cur)
    }
}

// ---------------------------------------------------------------- normalization

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    LeftmostInnermost,
    RightmostInnermost,
}

#[derive(Clone, Copy)]
enum Cand {
    R(Table, &'static str, Dir),
    /// `(X ∥ e·w)·z`: split the prefix off, then reassociate.
    TailSeq,
    /// `φ·(ψ·x)` with contradictory guards: reassociate, then cut.
    GuardPrefix,
    /// `∣` with an operand that is a product with a tail.
    TailComm,
}

use Cand::R;
use Dir::{Ltr, Rtl};
use Table as Tb;

const ALT_RULES: &[Cand] = &[R(Tb::Aptc, "A6", Ltr), R(Tb::Batc, "A3", Ltr), R(Tb::G, "G2", Ltr)];
const SEQ_RULES: &[Cand] = &[
    R(Tb::Aptc, "A7", Ltr),
    R(Tb::G, "A8", Ltr),
    R(Tb::G, "A9", Ltr),
    R(Tb::G, "G3", Ltr),
    R(Tb::G, "G1", Ltr),
    Cand::GuardPrefix,
    R(Tb::G, "G9", Ltr),
    R(Tb::Batc, "A4", Ltr),
    R(Tb::Batc, "A5", Ltr),
    R(Tb::Aptc, "P4", Rtl),
    Cand::TailSeq,
    R(Tb::Pc, "PC1", Ltr),
];
const PAR_RULES: &[Cand] = &[
    R(Tb::Aptc, "P9", Ltr),
    R(Tb::Aptc, "P10", Ltr),
    R(Tb::G, "P9", Ltr),
    R(Tb::G, "P10", Ltr),
    R(Tb::G, "G22", Ltr),
    R(Tb::G, "G25", Ltr),
    R(Tb::Aptc, "P7", Ltr),
    R(Tb::Aptc, "P8", Ltr),
    R(Tb::Sc, "SC3", Ltr),
    R(Tb::Sc, "SC4", Ltr),
    R(Tb::Sc, "SC5", Ltr),
    R(Tb::Sc, "SC6", Ltr),
    R(Tb::Sc, "SC7", Ltr),
    R(Tb::Sc, "SC8", Ltr),
    R(Tb::Sc, "SC9", Ltr),
    R(Tb::Aptc, "P6", Ltr),
];
const COMM_RULES: &[Cand] = &[
    R(Tb::Aptc, "C17", Ltr),
    R(Tb::Aptc, "C18", Ltr),
    R(Tb::G, "C9", Ltr),
    R(Tb::G, "C10", Ltr),
    R(Tb::Aptc, "C15", Ltr),
    R(Tb::Aptc, "C16", Ltr),
    R(Tb::Aptc, "C11", Ltr),
    R(Tb::Aptc, "C12", Ltr),
    R(Tb::Aptc, "C13", Ltr),
    R(Tb::Aptc, "C14", Ltr),
    Cand::TailComm,
];
const MERGE_RULES: &[Cand] = &[R(Tb::Pc, "PC2", Ltr), R(Tb::Pc, "PC3", Ltr), R(Tb::Aptc, "P1", Ltr)];
const THETA_RULES: &[Cand] = &[
    R(Tb::Ce, "CE20", Ltr),
    R(Tb::G, "CE3", Ltr),
    R(Tb::G, "G23", Ltr),
    R(Tb::Ce, "CE19", Ltr),
    R(Tb::Ce, "CE21", Ltr),
    R(Tb::Ce, "CE22", Ltr),
    R(Tb::Ce, "CE23", Ltr),
    R(Tb::Ce, "CE24", Ltr),
];
const UNLESS_RULES: &[Cand] = &[
    R(Tb::U, "U29", Ltr),
    R(Tb::U, "U28", Ltr),
    R(Tb::G, "U6", Ltr),
    R(Tb::G, "U7", Ltr),
    R(Tb::U, "U30", Ltr),
    R(Tb::U, "U31", Ltr),
    R(Tb::U, "U32", Ltr),
    R(Tb::U, "U33", Ltr),
    R(Tb::U, "U34", Ltr),
    R(Tb::U, "U35", Ltr),
    R(Tb::U, "U36", Ltr),
    R(Tb::U, "U37", Ltr),
    R(Tb::U, "U25", Ltr),
    R(Tb::U, "U26", Ltr),
    R(Tb::U, "U27", Ltr),
];
const ENCAP_RULES: &[Cand] = &[
    R(Tb::D, "D3", Ltr),
    R(Tb::D, "D1", Ltr),
    R(Tb::D, "D2", Ltr),
    R(Tb::G, "G24", Ltr),
    R(Tb::D, "D4", Ltr),
    R(Tb::D, "D5", Ltr),
    R(Tb::D, "D6", Ltr),
];
// G29 is left out: it replaces a guard that may fail by a τ that always fires.
const HIDE_RULES: &[Cand] = &[
    R(Tb::Ti, "TI3", Ltr),
    R(Tb::Ti, "TI1", Ltr),
    R(Tb::Ti, "TI2", Ltr),
    R(Tb::G, "G28", Ltr),
    R(Tb::Ti, "TI4", Ltr),
    R(Tb::Ti, "TI5", Ltr),
    R(Tb::Ti, "TI6", Ltr),
];
const GUARD_RULES: &[Cand] = &[R(Tb::G, "G8", Ltr), R(Tb::G, "G9", Ltr)];

fn candidates(t: &Term) -> &'static [Cand] {
    match t {
        Term::Alt(..) => ALT_RULES,
        Term::Seq(..) => SEQ_RULES,
        Term::Par(..) => PAR_RULES,
        Term::Comm(..) => COMM_RULES,
        Term::Merge(..) => MERGE_RULES,
        Term::Theta(_) => THETA_RULES,
        Term::Unless(..) => UNLESS_RULES,
        Term::Encap(..) => ENCAP_RULES,
        Term::Hide(..) => HIDE_RULES,
        Term::Guard(_) => GUARD_RULES,
        _ => &[],
    }
}

struct Normalizer<'m> {
    m: &'m Model,
    strategy: Strategy,
    stuck: HashSet<T>,
}

fn id(table: Table, row: &'static str) -> AxiomId {
    AxiomId { table, row }
}

fn has_tail(t: &T) -> bool {
    matches!(**t, Term::Par(..)) && elems(Op::Par, t).iter().any(|f| matches!(**f, Term::Seq(..)))
}

impl<'m> Normalizer<'m> {
    /// Runs a sequence of elementary steps; all of them must apply.
    fn run(&self, root: &T, seq: &[(AxiomId, Dir, Vec<usize>)]) -> Option<(T, Vec<TraceStep>)> {
        let mut cur = root.clone();
        let mut steps = Vec::new();
        for (k, (ax, dir, pos)) in seq.iter().enumerate() {
            let before = subterm_at(&cur, pos)?.clone();
            let (after, whole) = rewrite_at(&cur, *ax, pos, *dir, self.m).ok()?;
            let settle = k + 1 == seq.len();
            cur = if settle { canon(&whole) } else { whole };
            steps.push(TraceStep { axiom: *ax, dir: *dir, pos: pos.clone(), before, after, settle });
        }
        Some((cur, steps))
    }

    fn extend(&self, root: &T, mut first: Vec<(AxiomId, Dir, Vec<usize>)>, finals: &[(AxiomId, Vec<usize>)]) -> Option<(T, Vec<TraceStep>)> {
        for (ax, pos) in finals {
            first.push((*ax, Ltr, pos.clone()));
            if let Some(r) = self.run(root, &first) {
                return Some(r);
            }
            first.pop();
        }
        None
    }

    fn attempt(&self, root: &T, node: &T, path: &[usize], c: Cand) -> Option<(T, Vec<TraceStep>)> {
        let at = |extra: &[usize]| -> Vec<usize> { path.iter().chain(extra).copied().collect() };
        match c {
            R(t, row, dir) => self.run(root, &[(id(t, row), dir, path.to_vec())]),
            Cand::TailSeq => {
                let Term::Seq(l, _) = &**node else { return None };
                if !has_tail(l) {
                    return None;
                }
                self.run(root, &[(id(Tb::Aptc, "P4"), Ltr, at(&[0])), (id(Tb::Batc, "A5"), Ltr, path.to_vec())])
            }
            Cand::GuardPrefix => {
                let Term::Seq(l, r) = &**node else { return None };
                let Term::Seq(h, _) = &**r else { return None };
                if guard_of(l).is_none() || guard_of(h).is_none() {
                    return None;
                }
                let first = vec![(id(Tb::Batc, "A5"), Rtl, path.to_vec())];
                self.extend(root, first, &[(id(Tb::G, "G1"), at(&[0])), (id(Tb::G, "G9"), at(&[0]))])
            }
            Cand::TailComm => {
                let Term::Comm(l, r) = &**node else { return None };
                let first: Vec<_> = [(0usize, l), (1, r)]
                    .into_iter()
                    .filter(|(_, x)| has_tail(x))
                    .map(|(i, _)| (id(Tb::Aptc, "P4"), Ltr, at(&[i])))
                    .collect();
                if first.is_empty() {
                    return None;
                }
                let p = path.to_vec();
                let finals = [(id(Tb::Aptc, "C14"), p.clone()), (id(Tb::Aptc, "C12"), p.clone()), (id(Tb::Aptc, "C13"), p)];
                self.extend(root, first, &finals)
            }
        }
    }

    fn find(&mut self, root: &T, node: &T, path: &mut Vec<usize>) -> Option<(T, Vec<TraceStep>)> {
        if self.stuck.contains(node) {
            return None;
        }
        let ch = node.children();
        let order: Vec<usize> = match self.strategy {
            Strategy::LeftmostInnermost => (0..ch.len()).collect(),
            Strategy::RightmostInnermost => (0..ch.len()).rev().collect(),
        };
        for i in order {
            path.push(i);
            let r = self.find(root, ch[i], path);
            path.pop();
            if r.is_some() {
                return r;
            }
        }
        for &c in candidates(node) {
            if let Some(r) = self.attempt(root, node, path, c) {
                return Some(r);
            }
        }
        self.stuck.insert(node.clone());
        None
    }
}

fn locally_basic(t: &Term) -> bool {
    match t {
        Term::Atom(_) | Term::Guard(_) | Term::Alt(..) | Term::Par(..) => true,
        Term::Seq(l, _) => matches!(**l, Term::Atom(_) | Term::Guard(_)),
        _ => false,
    }
}

fn residue(t: &T) -> Option<T> {
    for c in t.children() {
        if let Some(r) = residue(c) {
            return Some(r);
        }
    }
    (!locally_basic(t)).then(|| t.clone())
}

/// Rewrites a closed recursion-free term to a basic term, leftmost-innermost.
pub fn normalize_to_basic(t: &T, m: &Model, fuel: usize) -> Result<(T, ProofTrace)> {
    normalize_with(t, m, fuel, Strategy::LeftmostInnermost)
}

pub fn normalize_with(t: &T, m: &Model, fuel: usize, strategy: Strategy) -> Result<(T, ProofTrace)> {
    if !term::is_recursion_free(t) {
        return Err(Error::NonBasicResidue(format!("{} is not recursion free", math(t))));
    }
    let mut n = Normalizer { m, strategy, stuck: HashSet::new() };
    let mut cur = canon(t);
    let mut steps = Vec::new();
    loop {
        let mut path = Vec::new();
        match n.find(&cur, &cur.clone(), &mut path) {
            Some((next, mut st)) => {
                steps.append(&mut st);
                if steps.len() > fuel {
                    return Err(Error::FuelExhausted(fuel));
                }
                cur = next;
            }
            None => break,
        }
    }
    if let Some(r) = residue(&cur) {
        return Err(Error::NonBasicResidue(math(&r)));
    }
    let trace = ProofTrace { input: t.clone(), steps, result: cur.clone() };
    Ok((cur, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_model, parse_term};
    use crate::equiv::{check_strong, Ts};
    use crate::sos::{lts_of, Silent};

    fn model() -> Model {
        parse_model(
            "model m; domain V = {0, 1}; var x : V; act a, b, c, d; comm a | b = c; conflict a # b; order b <= c;
             set H = {a}; set I = {b};",
        )
        .unwrap()
    }

    fn t(m: &Model, s: &str) -> T {
        parse_term(m, s).unwrap()
    }

    fn ax(s: &str) -> AxiomId {
        s.parse().unwrap()
    }

    fn norm(m: &Model, s: &str) -> String {
        compact(&normalize_to_basic(&t(m, s), m, DEFAULT_FUEL).unwrap().0)
    }

    #[test]
    fn catalog_ids_and_patterns() {
        assert!(catalog().len() > 100);
        assert_eq!(ax("A4").to_string(), "BATC.A4");
        assert_eq!(ax("G.P9").short(), "G.P9");
        assert!("P9".parse::<AxiomId>().is_err());
        assert!("Z9".parse::<AxiomId>().is_err());
        for a in catalog() {
            let _ = a.equation();
        }
    }

    #[test]
    fn single_steps() {
        let m = model();
        assert_eq!(compact(&apply_axiom_once(&t(&m, "a + delta"), ax("A6"), &[], Ltr, &m).unwrap()), "a");
        assert_eq!(compact(&apply_axiom_once(&t(&m, "a | b"), ax("C11"), &[], Ltr, &m).unwrap()), "c");
        assert_eq!(compact(&apply_axiom_once(&t(&m, "(a+b).c"), ax("A4"), &[], Ltr, &m).unwrap()), "a.c+b.c");
        let sc8 = apply_axiom_once(&t(&m, "(a.b) ||| (@a#1 . c)"), ax("SC8"), &[], Ltr, &m).unwrap();
        assert_eq!(compact(&sc8), "a.(b||c)");
        assert!(matches!(apply_axiom_once(&t(&m, "a.b"), ax("A6"), &[], Ltr, &m), Err(Error::NoMatch { .. })));
        assert!(matches!(apply_axiom_once(&t(&m, "unless(a, c)"), ax("U25"), &[], Ltr, &m), Err(Error::SideConditionFailed(_))));
        assert!(matches!(apply_axiom_once(&t(&m, "a"), ax("A6"), &[1], Ltr, &m), Err(Error::NoMatch { .. })));
        let back = apply_axiom_once(&t(&m, "a.c + b.c"), ax("A4"), &[], Rtl, &m).unwrap();
        assert_eq!(compact(&back), "(a+b).c");
    }

    #[test]
    fn conflict_rows_need_declared_conflicts() {
        let m = parse_model("model m; act a, b;").unwrap();
        assert!(matches!(apply_axiom_once(&t(&m, "theta(a)"), ax("CE19"), &[], Ltr, &m), Err(Error::NoMatch { .. })));
    }

    #[test]
    fn normal_forms() {
        let m = model();
        assert_eq!(norm(&m, "(a+b).c"), "a.c+b.c");
        assert_eq!(norm(&m, "[x = 0] -> [!(x = 0)] -> a"), "delta");
        assert_eq!(norm(&m, "a | b"), "c");
        assert_eq!(norm(&m, "encap(H, a ||| b)"), "delta");
        assert_eq!(norm(&m, "a || d"), "a.d+d.a+a|||d");
    }

    #[test]
    fn normal_forms_preserve_behaviour() {
        let m = model();
        for s in ["(a+b).c", "a || b", "(a.b) || (c.d)", "theta(a + b)", "hide(I, a.b ||| c)", "(a ||| b.c) . d", "(a ||| b.c) | (b.d)"] {
            let x = t(&m, s);
            let (n, trace) = normalize_to_basic(&x, &m, DEFAULT_FUEL).unwrap();
            assert!(term::is_basic_term(&n), "{s}");
            assert_eq!(trace.replay(&m).unwrap(), n);
            let l = Ts::from(&lts_of(&m, &x, Silent::CollapseAll).unwrap());
            let r = Ts::from(&lts_of(&m, &n, Silent::CollapseAll).unwrap());
            assert!(check_strong(&l, &r).related, "{s} vs {}", compact(&n));
        }
    }

    #[test]
    fn trace_text() {
        let m = model();
        let (_, tr) = normalize_to_basic(&t(&m, "(a+b).c"), &m, DEFAULT_FUEL).unwrap();
        assert_eq!(tr.render(), "A4 @ 0 : (a+b)·c ⇒ a·c+b·c\n");
    }

    #[test]
    fn residues_and_fuel() {
        let m = model();
        assert!(matches!(normalize_to_basic(&t(&m, "new(a)"), &m, DEFAULT_FUEL), Err(Error::NonBasicResidue(_))));
        assert!(matches!(normalize_to_basic(&t(&m, "(a+b).(c+d).(a+b)"), &m, 1), Err(Error::FuelExhausted(1))));
    }

    #[test]
    fn strategies_agree() {
        let m = model();
        for s in ["(a || b) || c", "(a + b) ||| (c + d)", "theta(a + b)", "(a.b || d) | b"] {
            let x = t(&m, s);
            let l = normalize_with(&x, &m, DEFAULT_FUEL, Strategy::LeftmostInnermost).unwrap().0;
            let r = normalize_with(&x, &m, DEFAULT_FUEL, Strategy::RightmostInnermost).unwrap().0;
            assert_eq!(l, r, "{s}");
        }
    }
}
