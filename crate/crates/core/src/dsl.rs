//! Textual model syntax: lexer, parser, elaboration to ground terms, renderer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{
    cartesian, ActionSig, CommRule, EffectDecl, FunDecl, MailRole, Model, PairRule, PatAction, ValExpr, VarDecl,
    DEFAULT_MAILBOX_CAPACITY,
};
use crate::term::{self, Action, ActionKind, Guard, Name, NameSet, Term, T};

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 22] = [
    "|||", "||", ":=", "->", "<=", "|", "(", ")", "{", "}", "[", "]", ",", ";", ".", "+", "=", "#", "@", "!", ":", "<",
];

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Ident(s), line, col });
            col += i - start;
            continue;
        }
        if c == '>' {
            out.push(Token { tok: Tok::Sym(">"), line, col });
            i += 1;
            col += 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                out.push(Token { tok: Tok::Sym(s), line, col });
                i += s.len();
                col += s.len();
            }
            None => return Err(Error::SyntaxError { line, col, expected: format!("a token, found `{c}`") }),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

// ---------------------------------------------------------------- surface syntax

#[derive(Clone, Debug)]
enum SGuard {
    True,
    False,
    Eq(Name, ValExpr),
    Not(Box<SGuard>),
    Alt(Box<SGuard>, Box<SGuard>),
    Seq(Box<SGuard>, Box<SGuard>),
    Par(Box<SGuard>, Box<SGuard>),
}

#[derive(Clone, Debug)]
enum SSet {
    Ref(Name),
    Lit(Vec<(Name, Vec<ValExpr>)>),
}

#[derive(Clone, Debug)]
enum STerm {
    Id(Name, Vec<ValExpr>),
    Const(ActionKind),
    Shadow(Name, Vec<ValExpr>, Option<u32>),
    Guard(SGuard),
    Bin(char, Box<STerm>, Box<STerm>),
    Theta(Box<STerm>),
    Unless(Box<STerm>, Box<STerm>),
    Encap(SSet, Box<STerm>),
    Hide(SSet, Box<STerm>),
    Call(Name, Name),
    New(Box<STerm>),
    Sum(Vec<(Name, Name)>, Box<STerm>),
}

#[derive(Clone, Debug)]
enum SParam {
    Bind(Name, Name),
    Lit(ValExpr),
}

#[derive(Clone, Debug)]
enum Stmt {
    Model(Name),
    Domain(Name, Vec<Name>),
    Fun(FunDecl),
    Act(Vec<ActionSig>),
    Mailbox(Name, u32),
    Var(Name, Name, Option<Name>),
    Effect(EffectDecl),
    Comm(CommRule),
    Conflict(PairRule),
    Order(PairRule),
    Set(Name, Vec<(Name, Vec<ValExpr>)>),
    Proc(Name, Vec<SParam>, STerm),
    System(STerm),
    Spec(STerm),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn err<X>(&self, expected: &str) -> Result<X> {
        let t = &self.toks[self.pos];
        Err(Error::SyntaxError { line: t.line, col: t.col, expected: expected.to_string() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(&format!("`{s}`"))
        }
    }

    fn kw(&mut self, k: &str) -> Result<()> {
        if self.is_kw(k) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(&format!("`{k}`"))
        }
    }

    fn ident(&mut self) -> Result<Name> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(s.into())
            }
            _ => self.err("identifier"),
        }
    }

    fn number(&mut self) -> Result<u32> {
        let t = self.ident()?;
        match t.parse() {
            Ok(n) => Ok(n),
            Err(_) => {
                self.pos -= 1;
                self.err("number")
            }
        }
    }

    fn statements(&mut self) -> Result<Vec<Stmt>> {
        let mut out = Vec::new();
        while *self.peek() != Tok::Eof {
            out.push(self.statement()?);
        }
        Ok(out)
    }

    fn statement(&mut self) -> Result<Stmt> {
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return self.err("a declaration keyword"),
        };
        self.pos += 1;
        let st = match kw.as_str() {
            "model" => Stmt::Model(self.ident()?),
            "domain" => {
                let n = self.ident()?;
                self.sym("=")?;
                Stmt::Domain(n, self.name_list()?)
            }
            "fun" => {
                let name = self.ident()?;
                self.sym("=")?;
                self.sym("{")?;
                let mut map = Vec::new();
                if !self.is_sym("}") {
                    loop {
                        let k = self.ident()?;
                        self.sym("->")?;
                        map.push((k, self.ident()?));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.sym("}")?;
                Stmt::Fun(FunDecl { name, map })
            }
            "act" => {
                let mut sigs = Vec::new();
                loop {
                    let name = self.ident()?;
                    let mut params = Vec::new();
                    if self.eat_sym("(") {
                        loop {
                            params.push(self.ident()?);
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                        self.sym(")")?;
                    }
                    let mail = if self.is_kw("sends") {
                        self.pos += 1;
                        Some((MailRole::Send, self.ident()?))
                    } else if self.is_kw("receives") {
                        self.pos += 1;
                        Some((MailRole::Receive, self.ident()?))
                    } else {
                        None
                    };
                    sigs.push(ActionSig { name, params, mail });
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                Stmt::Act(sigs)
            }
            "mailbox" => {
                let n = self.ident()?;
                let cap = if self.is_kw("cap") {
                    self.pos += 1;
                    self.number()?
                } else {
                    DEFAULT_MAILBOX_CAPACITY
                };
                Stmt::Mailbox(n, cap)
            }
            "var" => {
                let n = self.ident()?;
                self.sym(":")?;
                let d = self.ident()?;
                let init = if self.eat_sym("=") { Some(self.ident()?) } else { None };
                Stmt::Var(n, d, init)
            }
            "effect" => {
                let action = self.ident()?;
                let mut params = Vec::new();
                if self.eat_sym("(") {
                    loop {
                        params.push(self.ident()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.sym(")")?;
                }
                self.sym(":")?;
                let mut alternatives = Vec::new();
                loop {
                    let mut assigns = Vec::new();
                    if self.is_kw("skip") {
                        self.pos += 1;
                    } else {
                        loop {
                            let x = self.ident()?;
                            self.sym(":=")?;
                            assigns.push((x, self.val()?));
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    alternatives.push(assigns);
                    if !self.eat_sym("|") {
                        break;
                    }
                }
                Stmt::Effect(EffectDecl { action, params, alternatives })
            }
            "comm" => {
                let left = self.pat()?;
                self.sym("|")?;
                let right = self.pat()?;
                self.sym("=")?;
                let result = self.pat()?;
                Stmt::Comm(CommRule { left, right, result })
            }
            "conflict" => {
                let left = self.pat()?;
                self.sym("#")?;
                Stmt::Conflict(PairRule { left, right: self.pat()? })
            }
            "order" => {
                let left = self.pat()?;
                self.sym("<=")?;
                Stmt::Order(PairRule { left, right: self.pat()? })
            }
            "set" => {
                let n = self.ident()?;
                self.sym("=")?;
                Stmt::Set(n, self.set_items()?)
            }
            "proc" => {
                let n = self.ident()?;
                let mut params = Vec::new();
                if self.eat_sym("(") {
                    loop {
                        if matches!(self.peek2(), Tok::Sym(":")) {
                            let x = self.ident()?;
                            self.sym(":")?;
                            params.push(SParam::Bind(x, self.ident()?));
                        } else {
                            params.push(SParam::Lit(self.val()?));
                        }
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.sym(")")?;
                }
                self.sym("=")?;
                Stmt::Proc(n, params, self.term()?)
            }
            "system" => {
                self.sym("=")?;
                Stmt::System(self.term()?)
            }
            "spec" => {
                self.sym("=")?;
                Stmt::Spec(self.term()?)
            }
            _ => {
                self.pos -= 1;
                return self.err("a declaration keyword");
            }
        };
        self.sym(";")?;
        Ok(st)
    }

    fn name_list(&mut self) -> Result<Vec<Name>> {
        self.sym("{")?;
        let mut out = Vec::new();
        if !self.is_sym("}") {
            loop {
                out.push(self.ident()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.sym("}")?;
        Ok(out)
    }

    fn set_items(&mut self) -> Result<Vec<(Name, Vec<ValExpr>)>> {
        self.sym("{")?;
        let mut out = Vec::new();
        if !self.is_sym("}") {
            loop {
                let n = self.ident()?;
                out.push((n, self.args()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.sym("}")?;
        Ok(out)
    }

    fn val(&mut self) -> Result<ValExpr> {
        let n = self.ident()?;
        if self.eat_sym("(") {
            let inner = self.val()?;
            self.sym(")")?;
            Ok(ValExpr::App(n, Box::new(inner)))
        } else {
            Ok(ValExpr::Id(n))
        }
    }

    fn args(&mut self) -> Result<Vec<ValExpr>> {
        let mut out = Vec::new();
        if self.eat_sym("(") {
            loop {
                out.push(self.val()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.sym(")")?;
        }
        Ok(out)
    }

    fn pat(&mut self) -> Result<PatAction> {
        let name = self.ident()?;
        Ok(PatAction { name, args: self.args()? })
    }

    fn term(&mut self) -> Result<STerm> {
        if self.is_kw("sum") {
            return self.sum();
        }
        let l = self.par_level()?;
        if self.eat_sym("+") {
            let r = self.term()?;
            return Ok(STerm::Bin('+', Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    fn sum(&mut self) -> Result<STerm> {
        self.kw("sum")?;
        let mut binders = Vec::new();
        loop {
            let x = self.ident()?;
            self.sym(":")?;
            binders.push((x, self.ident()?));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.sym(".")?;
        Ok(STerm::Sum(binders, Box::new(self.term()?)))
    }

    fn par_level(&mut self) -> Result<STerm> {
        let l = self.seq_level()?;
        let op = if self.eat_sym("|||") {
            'P'
        } else if self.eat_sym("||") {
            'M'
        } else if self.eat_sym("|") {
            'C'
        } else {
            return Ok(l);
        };
        let r = if self.is_kw("sum") { self.sum()? } else { self.par_level()? };
        Ok(STerm::Bin(op, Box::new(l), Box::new(r)))
    }

    fn seq_level(&mut self) -> Result<STerm> {
        if self.is_sym("[") {
            self.pos += 1;
            let g = self.guard()?;
            self.sym("]")?;
            if self.eat_sym("->") {
                let body = self.seq_level()?;
                return Ok(STerm::Bin('.', Box::new(STerm::Guard(g)), Box::new(body)));
            }
            return self.seq_tail(STerm::Guard(g));
        }
        let l = self.primary()?;
        self.seq_tail(l)
    }

    fn seq_tail(&mut self, l: STerm) -> Result<STerm> {
        if self.eat_sym(".") {
            let r = if self.is_kw("sum") { self.sum()? } else { self.seq_level()? };
            return Ok(STerm::Bin('.', Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    fn set_ref(&mut self) -> Result<SSet> {
        if self.is_sym("{") {
            Ok(SSet::Lit(self.set_items()?))
        } else {
            Ok(SSet::Ref(self.ident()?))
        }
    }

    fn primary(&mut self) -> Result<STerm> {
        if self.eat_sym("(") {
            let t = self.term()?;
            self.sym(")")?;
            return Ok(t);
        }
        if self.eat_sym("@") {
            let n = self.ident()?;
            let args = self.args()?;
            let idx = if self.eat_sym("#") { Some(self.number()?) } else { None };
            return Ok(STerm::Shadow(n, args, idx));
        }
        if self.eat_sym("<") {
            let x = self.ident()?;
            self.sym("|")?;
            let e = self.ident()?;
            self.sym(">")?;
            return Ok(STerm::Call(x, e));
        }
        let name = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => return self.err("a term"),
        };
        self.pos += 1;
        match name.as_str() {
            "delta" => Ok(STerm::Const(ActionKind::Delta)),
            "tau" => Ok(STerm::Const(ActionKind::Tau)),
            "eps" => Ok(STerm::Const(ActionKind::Eps)),
            "theta" => {
                self.sym("(")?;
                let t = self.term()?;
                self.sym(")")?;
                Ok(STerm::Theta(Box::new(t)))
            }
            "new" => {
                self.sym("(")?;
                let t = self.term()?;
                self.sym(")")?;
                Ok(STerm::New(Box::new(t)))
            }
            "unless" => {
                self.sym("(")?;
                let l = self.term()?;
                self.sym(",")?;
                let r = self.term()?;
                self.sym(")")?;
                Ok(STerm::Unless(Box::new(l), Box::new(r)))
            }
            "encap" | "hide" => {
                self.sym("(")?;
                let s = self.set_ref()?;
                self.sym(",")?;
                let t = self.term()?;
                self.sym(")")?;
                Ok(if name == "encap" { STerm::Encap(s, Box::new(t)) } else { STerm::Hide(s, Box::new(t)) })
            }
            _ => {
                let args = self.args()?;
                Ok(STerm::Id(name.into(), args))
            }
        }
    }

    fn guard(&mut self) -> Result<SGuard> {
        let l = self.guard_par()?;
        if self.eat_sym("+") {
            return Ok(SGuard::Alt(Box::new(l), Box::new(self.guard()?)));
        }
        Ok(l)
    }

    fn guard_par(&mut self) -> Result<SGuard> {
        let l = self.guard_seq()?;
        if self.eat_sym("|||") {
            return Ok(SGuard::Par(Box::new(l), Box::new(self.guard_par()?)));
        }
        Ok(l)
    }

    fn guard_seq(&mut self) -> Result<SGuard> {
        let l = self.guard_unary()?;
        if self.eat_sym(".") {
            return Ok(SGuard::Seq(Box::new(l), Box::new(self.guard_seq()?)));
        }
        Ok(l)
    }

    fn guard_unary(&mut self) -> Result<SGuard> {
        if self.eat_sym("!") {
            return Ok(SGuard::Not(Box::new(self.guard_unary()?)));
        }
        if self.eat_sym("(") {
            let g = self.guard()?;
            self.sym(")")?;
            return Ok(g);
        }
        if self.is_kw("true") {
            self.pos += 1;
            return Ok(SGuard::True);
        }
        if self.is_kw("false") {
            self.pos += 1;
            return Ok(SGuard::False);
        }
        let x = self.ident()?;
        self.sym("=")?;
        Ok(SGuard::Eq(x, self.val()?))
    }
}

// ---------------------------------------------------------------- elaboration

struct Elab {
    m: Model,
    procs: BTreeMap<(Name, usize), ()>,
    ground_procs: BTreeSet<Name>,
    shadow_ctr: BTreeMap<String, u32>,
}

type Env = BTreeMap<Name, Name>;

impl Elab {
    fn action(&self, name: &Name, args: &[ValExpr], env: &Env) -> Result<Action> {
        let vals: Vec<Name> = args.iter().map(|v| self.m.eval_val(v, env)).collect::<Result<_>>()?;
        let a = Action::with_args(name.clone(), vals);
        self.check_action(&a)?;
        Ok(a)
    }

    fn check_action(&self, a: &Action) -> Result<()> {
        let sig = match self.m.sig_for(a) {
            Some(s) => s,
            None if self.m.sigs(&a.name).next().is_some() => {
                return Err(Error::ArityMismatch(format!("{} with {} argument(s)", a.name, a.args.len())))
            }
            None => return Err(Error::UndeclaredName(a.name.to_string())),
        };
        for (v, d) in a.args.iter().zip(&sig.params) {
            let dom = self.m.domain(d).ok_or_else(|| Error::UndeclaredName(d.to_string()))?;
            if !dom.contains(v) {
                return Err(Error::UndeclaredName(format!("{v} (not in {d})")));
            }
        }
        Ok(())
    }

    /// Binder positions of a pattern: identifiers that are not values of the parameter domain.
    fn pattern_binders(&self, p: &PatAction, out: &mut Vec<(Name, Name)>) -> Result<()> {
        let sig = self
            .m
            .sigs(&p.name)
            .find(|s| s.params.len() == p.args.len())
            .ok_or_else(|| {
                if self.m.sigs(&p.name).next().is_some() {
                    Error::ArityMismatch(p.name.to_string())
                } else {
                    Error::UndeclaredName(p.name.to_string())
                }
            })?;
        for (pos, (arg, d)) in p.args.iter().zip(&sig.params).enumerate() {
            let mut cur = arg;
            let mut dom = d.clone();
            while let ValExpr::App(f, inner) = cur {
                let fd = self.m.fun(f).ok_or_else(|| Error::UndeclaredName(f.to_string()))?;
                if let Some((k, _)) = fd.map.first() {
                    if let Some((dn, _)) = self.m.domains.iter().find(|(_, vs)| vs.contains(k)) {
                        dom = dn.clone();
                    }
                }
                cur = inner;
            }
            if let ValExpr::Id(x) = cur {
                let values = self.m.domain(&dom).ok_or_else(|| Error::UndeclaredName(dom.to_string()))?;
                let literal = values.contains(x)
                    || self.m.sigs(&p.name).any(|s| {
                        s.params.len() == p.args.len() && self.m.domain(&s.params[pos]).is_some_and(|vs| vs.contains(x))
                    });
                if !literal && !out.iter().any(|(b, _)| b == x) {
                    out.push((x.clone(), dom.clone()));
                }
            }
        }
        Ok(())
    }

    fn pattern_envs(&self, pats: &[&PatAction]) -> Result<Vec<Env>> {
        let mut binders = Vec::new();
        for p in pats {
            self.pattern_binders(p, &mut binders)?;
        }
        self.envs(&binders)
    }

    fn envs(&self, binders: &[(Name, Name)]) -> Result<Vec<Env>> {
        let mut doms = Vec::new();
        for (x, d) in binders {
            let values = self.m.domain(d).ok_or_else(|| Error::UndeclaredName(d.to_string()))?;
            if values.is_empty() {
                return Err(Error::EmptyDomain(x.to_string()));
            }
            doms.push(values);
        }
        Ok(cartesian(&doms)
            .into_iter()
            .map(|vals| binders.iter().map(|(x, _)| x.clone()).zip(vals).collect())
            .collect())
    }

    fn guard(&self, g: &SGuard, env: &Env) -> Result<Guard> {
        Ok(match g {
            SGuard::True => Guard::True,
            SGuard::False => Guard::False,
            SGuard::Eq(x, v) => {
                let decl = self.m.var(x).ok_or_else(|| Error::UndeclaredName(x.to_string()))?;
                let val = self.m.eval_val(v, env)?;
                if !self.m.domain(&decl.domain).map(|d| d.contains(&val)).unwrap_or(false) {
                    return Err(Error::UndeclaredName(format!("{val} (not in {})", decl.domain)));
                }
                Guard::Pred(x.clone(), vec![val])
            }
            SGuard::Not(g) => Guard::Not(Arc::new(self.guard(g, env)?)),
            SGuard::Alt(a, b) => Guard::Alt(Arc::new(self.guard(a, env)?), Arc::new(self.guard(b, env)?)),
            SGuard::Seq(a, b) => Guard::Seq(Arc::new(self.guard(a, env)?), Arc::new(self.guard(b, env)?)),
            SGuard::Par(a, b) => Guard::Par(Arc::new(self.guard(a, env)?), Arc::new(self.guard(b, env)?)),
        })
    }

    fn set(&self, s: &SSet, env: &Env) -> Result<NameSet> {
        match s {
            SSet::Ref(n) => self.m.set(n).ok_or_else(|| Error::UndeclaredName(n.to_string())),
            SSet::Lit(items) => Ok(NameSet { label: None, items: self.set_items(items, env)? }),
        }
    }

    fn set_items(&self, items: &[(Name, Vec<ValExpr>)], env: &Env) -> Result<BTreeSet<Name>> {
        let mut out = BTreeSet::new();
        for (n, args) in items {
            if args.is_empty() {
                if self.m.sigs(n).next().is_none() && self.m.var(n).is_none() {
                    return Err(Error::UndeclaredName(n.to_string()));
                }
                out.insert(n.clone());
            } else {
                let a = self.action(n, args, env)?;
                out.insert(a.to_string().into());
            }
        }
        Ok(out)
    }

    fn proc_ground_name(&self, name: &Name, args: &[ValExpr], env: &Env) -> Result<Name> {
        if args.is_empty() {
            return Ok(name.clone());
        }
        let vals: Vec<String> =
            args.iter().map(|v| self.m.eval_val(v, env).map(|n| n.to_string())).collect::<Result<_>>()?;
        Ok(format!("{}({})", name, vals.join(",")).into())
    }

    fn term(&mut self, t: &STerm, env: &Env) -> Result<T> {
        Ok(match t {
            STerm::Const(k) => match k {
                ActionKind::Delta => term::delta(),
                ActionKind::Tau => term::tau(),
                ActionKind::Eps => term::eps(),
                ActionKind::Visible => unreachable!(),
            },
            STerm::Id(name, args) => {
                if self.m.sigs(name).any(|s| s.params.len() == args.len()) {
                    term::act(self.action(name, args, env)?)
                } else if self.procs.contains_key(&(name.clone(), args.len())) {
                    Arc::new(Term::Var(self.proc_ground_name(name, args, env)?))
                } else if self.m.sigs(name).next().is_some() || self.procs.keys().any(|(n, _)| n == name) {
                    return Err(Error::ArityMismatch(format!("{} with {} argument(s)", name, args.len())));
                } else {
                    return Err(Error::UndeclaredName(name.to_string()));
                }
            }
            STerm::Shadow(name, args, idx) => {
                let a = self.action(name, args, env)?;
                let key = a.to_string();
                let ctr = self.shadow_ctr.entry(key).or_insert(0);
                let i = match idx {
                    Some(i) => {
                        *ctr = (*ctr).max(*i);
                        *i
                    }
                    None => {
                        *ctr += 1;
                        *ctr
                    }
                };
                term::shadow(a, i)
            }
            STerm::Guard(g) => term::guard(self.guard(g, env)?),
            STerm::Bin(op, l, r) => {
                let l = self.term(l, env)?;
                let r = self.term(r, env)?;
                match op {
                    '+' => term::alt(l, r),
                    '.' => term::seq(l, r),
                    'P' => term::par(l, r),
                    'M' => term::merge(l, r),
                    'C' => term::comm(l, r),
                    _ => unreachable!(),
                }
            }
            STerm::Theta(x) => term::theta(self.term(x, env)?),
            STerm::Unless(l, r) => {
                let l = self.term(l, env)?;
                term::unless(l, self.term(r, env)?)
            }
            STerm::Encap(s, x) => {
                let s = self.set(s, env)?;
                term::encap(s, self.term(x, env)?)
            }
            STerm::Hide(s, x) => {
                let s = self.set(s, env)?;
                term::hide(s, self.term(x, env)?)
            }
            STerm::Call(x, e) => {
                if self.m.specs.iter().all(|s| s.name != *e) {
                    return Err(Error::UndeclaredName(e.to_string()));
                }
                Arc::new(Term::Call(x.clone(), e.clone()))
            }
            STerm::New(x) => term::new_(self.term(x, env)?),
            STerm::Sum(binders, body) => {
                let mut parts = Vec::new();
                for e in self.envs(binders)? {
                    let mut env2 = env.clone();
                    env2.extend(e);
                    parts.push(self.term(body, &env2)?);
                }
                term::alt_chain(parts).ok_or_else(|| Error::EmptyDomain("sum".into()))?
            }
        })
    }
}

fn check_refs(t: &T, ground: &BTreeSet<Name>) -> Result<()> {
    match t.as_ref() {
        Term::Var(n) | Term::Call(n, _) => {
            if !ground.contains(n) {
                return Err(Error::UndeclaredName(n.to_string()));
            }
            Ok(())
        }
        _ => t.children().iter().try_for_each(|c| check_refs(c, ground)),
    }
}

pub fn parse_model(text: &str) -> Result<Model> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let stmts = p.statements()?;
    let mut name: Name = "model".into();
    for s in &stmts {
        if let Stmt::Model(n) = s {
            name = n.clone();
        }
    }
    let mut el = Elab { m: Model::empty(&name), procs: BTreeMap::new(), ground_procs: BTreeSet::new(), shadow_ctr: BTreeMap::new() };

    // declarations first, bodies after, so that procs may be used before they are defined
    for s in &stmts {
        match s {
            Stmt::Domain(n, vs) => el.m.domains.push((n.clone(), vs.clone())),
            Stmt::Fun(f) => el.m.funs.push(f.clone()),
            Stmt::Mailbox(n, c) => el.m.mailboxes.push((n.clone(), *c)),
            _ => {}
        }
    }
    for s in &stmts {
        match s {
            Stmt::Act(sigs) => {
                for sig in sigs {
                    for d in &sig.params {
                        if el.m.domain(d).is_none() {
                            return Err(Error::UndeclaredName(d.to_string()));
                        }
                    }
                    if let Some((_, mb)) = &sig.mail {
                        if el.m.mailbox_capacity(mb).is_none() {
                            return Err(Error::UndeclaredName(mb.to_string()));
                        }
                    }
                    el.m.actions.push(sig.clone());
                }
            }
            Stmt::Var(n, d, init) => {
                let dom = el.m.domain(d).ok_or_else(|| Error::UndeclaredName(d.to_string()))?;
                let init = match init {
                    Some(v) if dom.contains(v) => v.clone(),
                    Some(v) => return Err(Error::UndeclaredName(v.to_string())),
                    None => dom.first().cloned().ok_or_else(|| Error::EmptyDomain(n.to_string()))?,
                };
                el.m.vars.push(VarDecl { name: n.clone(), domain: d.clone(), init });
            }
            _ => {}
        }
    }
    for s in &stmts {
        match s {
            Stmt::Effect(e) => {
                if el.m.sigs(&e.action).next().is_none() {
                    return Err(Error::UndeclaredName(e.action.to_string()));
                }
                for alt in &e.alternatives {
                    for (x, _) in alt {
                        if el.m.var(x).is_none() {
                            return Err(Error::UndeclaredName(x.to_string()));
                        }
                    }
                }
                el.m.effects.push(e.clone());
            }
            Stmt::Comm(r) => {
                for env in el.pattern_envs(&[&r.left, &r.right, &r.result])? {
                    let l = el.action(&r.left.name, &r.left.args, &env)?;
                    let rr = el.action(&r.right.name, &r.right.args, &env)?;
                    let res = el.action(&r.result.name, &r.result.args, &env)?;
                    for key in [(l.clone(), rr.clone()), (rr.clone(), l.clone())] {
                        if let Some(prev) = el.m.gamma.get(&key) {
                            if *prev != res {
                                return Err(Error::AsymmetricGamma(format!("{}|{} maps to {} and {}", key.0, key.1, prev, res)));
                            }
                        }
                        el.m.gamma.insert(key, res.clone());
                    }
                }
                el.m.comm_rules.push(r.clone());
            }
            Stmt::Conflict(r) => {
                for env in el.pattern_envs(&[&r.left, &r.right])? {
                    let l = el.action(&r.left.name, &r.left.args, &env)?;
                    let rr = el.action(&r.right.name, &r.right.args, &env)?;
                    el.m.conflicts.insert((l.clone(), rr.clone()));
                    el.m.conflicts.insert((rr, l));
                }
                el.m.conflict_rules.push(r.clone());
            }
            Stmt::Order(r) => {
                for env in el.pattern_envs(&[&r.left, &r.right])? {
                    let l = el.action(&r.left.name, &r.left.args, &env)?;
                    let rr = el.action(&r.right.name, &r.right.args, &env)?;
                    el.m.orders.insert((l, rr));
                }
                el.m.order_rules.push(r.clone());
            }
            Stmt::Set(n, items) => {
                let items = el.set_items(items, &Env::new())?;
                el.m.sets.push((n.clone(), items));
            }
            Stmt::Proc(n, params, _) => {
                el.procs.insert((n.clone(), params.len()), ());
            }
            _ => {}
        }
    }
    if let (Some(h), Some(i)) = (el.m.set("H"), el.m.set("I")) {
        if let Some(x) = h.items.intersection(&i.items).next() {
            return Err(Error::Invalid(format!("`{x}` is in both H and I")));
        }
    }
    for s in &stmts {
        if let Stmt::Proc(n, params, body) = s {
            let mut binders = Vec::new();
            let mut lits = Vec::new();
            for p in params {
                match p {
                    SParam::Bind(x, d) => binders.push((x.clone(), d.clone())),
                    SParam::Lit(v) => lits.push(v.clone()),
                }
            }
            if !binders.is_empty() && !lits.is_empty() {
                return Err(Error::Invalid(format!("proc {n} mixes binders and literal parameters")));
            }
            if !lits.is_empty() {
                let g = el.proc_ground_name(n, &lits, &Env::new())?;
                let t = el.term(body, &Env::new())?;
                el.ground_procs.insert(g.clone());
                el.m.specs[0].equations.push((g, t));
                continue;
            }
            for env in el.envs(&binders)? {
                let args: Vec<ValExpr> = binders.iter().map(|(x, _)| ValExpr::Id(env[x].clone())).collect();
                let g = el.proc_ground_name(n, &args, &Env::new())?;
                let t = el.term(body, &env)?;
                if el.ground_procs.contains(&g) {
                    return Err(Error::Invalid(format!("proc {g} defined twice")));
                }
                el.ground_procs.insert(g.clone());
                el.m.specs[0].equations.push((g, t));
            }
        }
    }
    for s in &stmts {
        match s {
            Stmt::System(t) => el.m.system = Some(el.term(t, &Env::new())?),
            Stmt::Spec(t) => el.m.spec_term = Some(el.term(t, &Env::new())?),
            _ => {}
        }
    }
    let ground = el.ground_procs.clone();
    for (_, t) in &el.m.specs[0].equations {
        check_refs(t, &ground)?;
    }
    for t in el.m.system.iter().chain(el.m.spec_term.iter()) {
        check_refs(t, &ground)?;
    }
    crate::data::validate_effects(&el.m)?;
    Ok(el.m)
}

/// Parse a standalone term in the context of a model's declarations.
pub fn parse_term(m: &Model, text: &str) -> Result<T> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let st = p.term()?;
    if *p.peek() != Tok::Eof {
        return p.err("end of term");
    }
    let mut el = Elab { m: m.clone(), procs: BTreeMap::new(), ground_procs: BTreeSet::new(), shadow_ctr: BTreeMap::new() };
    for (n, _) in &m.main_spec().equations {
        el.ground_procs.insert(n.clone());
        let (base, arity) = split_ground_name(n);
        el.procs.insert((base, arity), ());
    }
    collect_shadow_indices(m, &mut el.shadow_ctr);
    let t = el.term(&st, &Env::new())?;
    check_refs(&t, &el.ground_procs)?;
    Ok(t)
}

/// Syntax-only view of a term, taken before its names are declared.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TermScan {
    /// Identifiers with their literal arguments, in order of first occurrence.
    pub ids: Vec<(Name, Vec<Name>)>,
    /// Guard comparisons `x = v`.
    pub guard_eqs: Vec<(Name, Name)>,
    pub has_new: bool,
    /// Identifiers (actions or process names) in tail position; `None` when some run can
    /// end on a constant, guard, shadow or creation.
    pub tails: Option<BTreeSet<Name>>,
}

pub fn scan_term(text: &str) -> Result<TermScan> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let st = p.term()?;
    if *p.peek() != Tok::Eof {
        return p.err("end of term");
    }
    let mut out = TermScan::default();
    scan(&st, &mut out)?;
    out.tails = tails(&st);
    Ok(out)
}

fn literal(v: &ValExpr) -> Result<Name> {
    match v {
        ValExpr::Id(x) => Ok(x.clone()),
        ValExpr::App(f, _) => Err(Error::Invalid(format!("`{f}(..)` needs declarations to evaluate"))),
    }
}

fn scan_guard(g: &SGuard, out: &mut TermScan) -> Result<()> {
    match g {
        SGuard::True | SGuard::False => {}
        SGuard::Eq(x, v) => {
            let e = (x.clone(), literal(v)?);
            if !out.guard_eqs.contains(&e) {
                out.guard_eqs.push(e);
            }
        }
        SGuard::Not(a) => scan_guard(a, out)?,
        SGuard::Alt(a, b) | SGuard::Seq(a, b) | SGuard::Par(a, b) => {
            scan_guard(a, out)?;
            scan_guard(b, out)?;
        }
    }
    Ok(())
}

fn scan(t: &STerm, out: &mut TermScan) -> Result<()> {
    match t {
        STerm::Id(n, args) | STerm::Shadow(n, args, _) => {
            let e = (n.clone(), args.iter().map(literal).collect::<Result<Vec<_>>>()?);
            if !out.ids.contains(&e) {
                out.ids.push(e);
            }
        }
        STerm::Const(_) | STerm::Call(..) => {}
        STerm::Guard(g) => scan_guard(g, out)?,
        STerm::Bin(_, l, r) | STerm::Unless(l, r) => {
            scan(l, out)?;
            scan(r, out)?;
        }
        STerm::Theta(x) | STerm::Encap(_, x) | STerm::Hide(_, x) | STerm::Sum(_, x) => scan(x, out)?,
        STerm::New(x) => {
            out.has_new = true;
            scan(x, out)?;
        }
    }
    Ok(())
}

fn tails(t: &STerm) -> Option<BTreeSet<Name>> {
    match t {
        STerm::Id(n, _) | STerm::Call(n, _) => Some([n.clone()].into()),
        STerm::Const(ActionKind::Delta) => Some(BTreeSet::new()),
        STerm::Const(_) | STerm::Shadow(..) | STerm::Guard(_) | STerm::New(_) => None,
        STerm::Bin('.', _, r) => tails(r),
        STerm::Bin('+', l, r) => {
            let mut a = tails(l)?;
            a.extend(tails(r)?);
            Some(a)
        }
        STerm::Bin(_, l, r) => match (tails(l), tails(r)) {
            (None, None) => None,
            (a, b) => Some(a.into_iter().chain(b).flatten().collect()),
        },
        STerm::Unless(x, _) | STerm::Theta(x) | STerm::Encap(_, x) | STerm::Hide(_, x) | STerm::Sum(_, x) => tails(x),
    }
}

fn collect_shadow_indices(m: &Model, ctr: &mut BTreeMap<String, u32>) {
    fn walk(t: &Term, ctr: &mut BTreeMap<String, u32>) {
        if let Term::Shadow(a, i) = t {
            let e = ctr.entry(a.to_string()).or_insert(0);
            *e = (*e).max(*i);
        }
        for c in t.children() {
            walk(c, ctr);
        }
    }
    for (_, t) in &m.main_spec().equations {
        walk(t, ctr);
    }
}

fn split_ground_name(n: &str) -> (Name, usize) {
    match n.find('(') {
        Some(i) => (n[..i].into(), n[i..].split(',').count()),
        None => (n.into(), 0),
    }
}

// ---------------------------------------------------------------- rendering

pub fn render_guard(g: &Guard) -> String {
    match g {
        Guard::True => "true".into(),
        Guard::False => "false".into(),
        Guard::Pred(x, args) if args.len() == 1 => format!("{} = {}", x, args[0]),
        Guard::Pred(x, args) => format!("{}({})", x, args.join(",")),
        Guard::Not(g) => format!("!{}", render_guard_unit(g)),
        Guard::Alt(a, b) => format!("({} + {})", render_guard(a), render_guard(b)),
        Guard::Seq(a, b) => format!("({} . {})", render_guard(a), render_guard(b)),
        Guard::Par(a, b) => format!("({} ||| {})", render_guard(a), render_guard(b)),
    }
}

fn render_guard_unit(g: &Guard) -> String {
    match g {
        Guard::Pred(..) => format!("({})", render_guard(g)),
        _ => render_guard(g),
    }
}

fn render_set(s: &NameSet) -> String {
    match &s.label {
        Some(l) => l.to_string(),
        None => format!("{{{}}}", s.items.iter().map(|x| x.as_ref()).collect::<Vec<_>>().join(",")),
    }
}

/// Fully parenthesized canonical rendering; `parse_term` inverts it.
pub fn render_term(t: &Term) -> String {
    match t {
        Term::Atom(a) => a.to_string(),
        Term::Shadow(a, i) => format!("@{}#{}", a, i),
        Term::Guard(g) => format!("[{}]", render_guard(g)),
        Term::Seq(l, r) => format!("({} . {})", render_term(l), render_term(r)),
        Term::Alt(l, r) => format!("({} + {})", render_term(l), render_term(r)),
        Term::Par(l, r) => format!("({} ||| {})", render_term(l), render_term(r)),
        Term::Comm(l, r) => format!("({} | {})", render_term(l), render_term(r)),
        Term::Merge(l, r) => format!("({} || {})", render_term(l), render_term(r)),
        Term::Theta(x) => format!("theta({})", render_term(x)),
        Term::Unless(l, r) => format!("unless({}, {})", render_term(l), render_term(r)),
        Term::Encap(h, x) => format!("encap({}, {})", render_set(h), render_term(x)),
        Term::Hide(i, x) => format!("hide({}, {})", render_set(i), render_term(x)),
        Term::Var(n) => n.to_string(),
        Term::Call(x, e) => format!("<{}|{}>", x, e),
        Term::New(x) => format!("new({})", render_term(x)),
    }
}

fn render_val(v: &ValExpr) -> String {
    match v {
        ValExpr::Id(x) => x.to_string(),
        ValExpr::App(f, inner) => format!("{}({})", f, render_val(inner)),
    }
}

fn render_pat(p: &PatAction) -> String {
    if p.args.is_empty() {
        p.name.to_string()
    } else {
        format!("{}({})", p.name, p.args.iter().map(render_val).collect::<Vec<_>>().join(","))
    }
}

pub fn render_model(m: &Model) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model {};", m.name);
    for (d, vs) in &m.domains {
        let _ = writeln!(s, "domain {} = {{{}}};", d, vs.join(", "));
    }
    for f in &m.funs {
        let items: Vec<String> = f.map.iter().map(|(k, v)| format!("{k} -> {v}")).collect();
        let _ = writeln!(s, "fun {} = {{{}}};", f.name, items.join(", "));
    }
    for (mb, cap) in &m.mailboxes {
        let _ = writeln!(s, "mailbox {} cap {};", mb, cap);
    }
    for a in &m.actions {
        let mut line = format!("act {}", a.name);
        if !a.params.is_empty() {
            let _ = write!(line, "({})", a.params.join(", "));
        }
        match &a.mail {
            Some((MailRole::Send, mb)) => {
                let _ = write!(line, " sends {mb}");
            }
            Some((MailRole::Receive, mb)) => {
                let _ = write!(line, " receives {mb}");
            }
            None => {}
        }
        let _ = writeln!(s, "{line};");
    }
    for v in &m.vars {
        let _ = writeln!(s, "var {} : {} = {};", v.name, v.domain, v.init);
    }
    for e in &m.effects {
        let head = if e.params.is_empty() { e.action.to_string() } else { format!("{}({})", e.action, e.params.join(", ")) };
        let alts: Vec<String> = e
            .alternatives
            .iter()
            .map(|alt| {
                if alt.is_empty() {
                    "skip".to_string()
                } else {
                    alt.iter().map(|(x, v)| format!("{x} := {}", render_val(v))).collect::<Vec<_>>().join(", ")
                }
            })
            .collect();
        let _ = writeln!(s, "effect {} : {};", head, alts.join(" | "));
    }
    for r in &m.comm_rules {
        let _ = writeln!(s, "comm {} | {} = {};", render_pat(&r.left), render_pat(&r.right), render_pat(&r.result));
    }
    for r in &m.conflict_rules {
        let _ = writeln!(s, "conflict {} # {};", render_pat(&r.left), render_pat(&r.right));
    }
    for r in &m.order_rules {
        let _ = writeln!(s, "order {} <= {};", render_pat(&r.left), render_pat(&r.right));
    }
    for (n, items) in &m.sets {
        let _ = writeln!(s, "set {} = {{{}}};", n, items.iter().map(|x| x.as_ref()).collect::<Vec<_>>().join(", "));
    }
    for (n, t) in &m.main_spec().equations {
        let _ = writeln!(s, "proc {} = {};", n, render_term(t));
    }
    if let Some(t) = &m.system {
        let _ = writeln!(s, "system = {};", render_term(t));
    }
    if let Some(t) = &m.spec_term {
        let _ = writeln!(s, "spec = {};", render_term(t));
    }
    s
}

// ---------------------------------------------------------------- compact and math printers

fn prec(t: &Term) -> u8 {
    match t {
        Term::Alt(..) => 1,
        Term::Par(..) | Term::Comm(..) | Term::Merge(..) => 2,
        Term::Seq(..) => 3,
        _ => 4,
    }
}

struct Style {
    seq: &'static str,
    alt: &'static str,
    par: &'static str,
    comm: &'static str,
    merge: &'static str,
    math: bool,
}

const COMPACT: Style = Style { seq: ".", alt: "+", par: "|||", comm: "|", merge: "||", math: false };
const MATH: Style = Style { seq: "·", alt: "+", par: "∥", comm: "∣", merge: "≬", math: true };

fn pretty(t: &Term, st: &Style) -> String {
    let bin = |l: &T, r: &T, op: &str| {
        let p = prec(t);
        let ls = pretty(l, st);
        let rs = pretty(r, st);
        let lp = prec(l) <= p && prec(l) < 4;
        let rp = prec(r) < p || (prec(r) == p && std::mem::discriminant(r.as_ref()) != std::mem::discriminant(t));
        let ls = if lp { format!("({ls})") } else { ls };
        let rs = if rp { format!("({rs})") } else { rs };
        format!("{ls}{op}{rs}")
    };
    match t {
        Term::Atom(a) if st.math => match a.kind {
            ActionKind::Tau => "τ".into(),
            ActionKind::Delta => "δ".into(),
            ActionKind::Eps => "ε".into(),
            ActionKind::Visible => a.to_string(),
        },
        Term::Shadow(a, _) if st.math => format!("Ⓢ^{a}"),
        Term::Seq(l, r) => bin(l, r, st.seq),
        Term::Alt(l, r) => bin(l, r, st.alt),
        Term::Par(l, r) => bin(l, r, st.par),
        Term::Comm(l, r) => bin(l, r, st.comm),
        Term::Merge(l, r) => bin(l, r, st.merge),
        Term::Theta(x) if st.math => format!("Θ({})", pretty(x, st)),
        Term::Unless(l, r) if st.math => format!("({}◁{})", pretty(l, st), pretty(r, st)),
        Term::Encap(h, x) if st.math => format!("∂_{}({})", render_set(h), pretty(x, st)),
        Term::Hide(i, x) if st.math => format!("τ_{}({})", render_set(i), pretty(x, st)),
        Term::New(x) => format!("new({})", pretty(x, st)),
        Term::Theta(x) => format!("theta({})", pretty(x, st)),
        Term::Unless(l, r) => format!("unless({},{})", pretty(l, st), pretty(r, st)),
        Term::Encap(h, x) => format!("encap({},{})", render_set(h), pretty(x, st)),
        Term::Hide(i, x) => format!("hide({},{})", render_set(i), pretty(x, st)),
        _ => render_term(t),
    }
}

/// Minimal-parenthesis ASCII form, e.g. `a.c+b.c`.
pub fn compact(t: &Term) -> String {
    pretty(t, &COMPACT)
}

/// Mathematical notation used in proof traces.
pub fn math(t: &Term) -> String {
    pretty(t, &MATH)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::*;

    const SMALL: &str = "model m; act a, b, c; comm a | b = c; proc P = a . b; system = P || c;";

    #[test]
    fn scan_reports_ids_and_tails() {
        let sc = scan_term("r_X(m1) . ([ok = T] -> (new(eps) ||| a) + [ok = F]) . X_1").unwrap();
        assert_eq!(sc.ids[0], ("r_X".into(), vec!["m1".into()]));
        assert_eq!(sc.guard_eqs.len(), 2);
        assert!(sc.has_new);
        assert_eq!(sc.tails, Some(["X_1".into()].into()));
        assert_eq!(scan_term("a . X + b").unwrap().tails, Some(["X".into(), "b".into()].into()));
        assert_eq!(scan_term("a . X + [ok = T]").unwrap().tails, None);
    }

    #[test]
    fn dangling_dot_is_syntax_error() {
        let e = parse_model("model m; act a; proc P = a .;").unwrap_err();
        assert!(matches!(e, Error::SyntaxError { .. }), "{e:?}");
    }

    #[test]
    fn undeclared_and_arity() {
        assert!(matches!(parse_model("model m; act a; proc P = b;"), Err(Error::UndeclaredName(_))));
        assert!(matches!(
            parse_model("model m; domain D = {x}; act a(D); proc P = a;"),
            Err(Error::ArityMismatch(_))
        ));
    }

    #[test]
    fn asymmetric_gamma_rejected() {
        let e = parse_model("model m; act a, b, c, d; comm a | b = c; comm b | a = d;").unwrap_err();
        assert!(matches!(e, Error::AsymmetricGamma(_)));
    }

    #[test]
    fn render_examples() {
        let t = merge(atom("a"), atom("b"));
        assert_eq!(render_term(&t), "(a || b)");
        let h = NameSet::new(["sB", "rB"]);
        let t = encap(h, merge(var("R"), var("S")));
        assert_eq!(render_term(&t), "encap({rB,sB}, (R || S))");
    }

    #[test]
    fn compact_printer() {
        let t = alt(seq(atom("a"), atom("c")), seq(atom("b"), atom("c")));
        assert_eq!(compact(&t), "a.c+b.c");
        let t = seq(alt(atom("a"), atom("b")), atom("c"));
        assert_eq!(compact(&t), "(a+b).c");
        assert_eq!(math(&t), "(a+b)·c");
    }

    #[test]
    fn model_round_trip() {
        let m = parse_model(SMALL).unwrap();
        assert_eq!(m.gamma.len(), 2);
        let again = parse_model(&render_model(&m)).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn parametric_procs_and_sums() {
        let src = "model m; domain D = {d1, d2}; domain Bit = {0, 1}; fun flip = {0 -> 1, 1 -> 0};
            act r(D), s(D, Bit);
            proc S(b:Bit) = sum d:D . r(d) . s(d, b) . S(flip(b));
            system = S(0);";
        let m = parse_model(src).unwrap();
        assert_eq!(m.main_spec().equations.len(), 2);
        let s0 = m.proc("S(0)").unwrap();
        assert!(render_term(s0).contains("S(1)"));
        let again = parse_model(&render_model(&m)).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn term_round_trip_with_guards_and_shadows() {
        let src = "model m; domain V = {0, 1}; var x : V; act a, b; set H = {a};
            proc P = [x = 0] -> a . @b#1 + [!x = 1 + true] . hide(H, theta(a) ||| unless(a, b)) + <P|m>;";
        let m = parse_model(src).unwrap();
        let p = m.proc("P").unwrap().clone();
        let again = parse_term(&m, &render_term(&p)).unwrap();
        assert_eq!(p, again);
    }
}
