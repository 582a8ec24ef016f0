//! Soundness fuzzing of the axiom tables: random instances of each row are
//! compared semantically, left side against right side.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::data::{wp_holds, DataState};
use crate::dsl::{compact, parse_model};
use crate::equiv::{check_rbs, check_strong, Ts, Verdict};
use crate::error::Result;
use crate::model::Model;
use crate::rewrite::{self, build, canon, cond_holds, table_rows, Axiom, Bind, Check, Dir, Kind, Shape, Table};
use crate::sos::{generate_lts_from, Config, LtsOptions, Silent};
use crate::term::{self, Action, Guard, NameSet, Term, T};

pub const BASE_MODEL: &str = "model fuzz; act a, b, c; comm a | b = c; conflict a # b; order b <= c;
    set H = {a}; set I = {b};";

/// Guard rows run over two variables written deterministically by `a` and `b`.
pub const GUARD_MODEL: &str = "model fuzzg; domain V = {0, 1}; var x : V = 0; var y : V = 0;
    act a, b, c; comm a | b = c; conflict a # b; order b <= c;
    effect a : x := 1; effect b : y := 1; set H = {a}; set I = {b, x};";

const MAX_ATTEMPTS: usize = 50;
const STATE_BOUND: usize = 50_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub axiom: String,
    pub lhs: String,
    pub rhs: String,
    pub relation: &'static str,
    pub store: Option<String>,
    pub witness: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableReport {
    pub table: Table,
    pub instances: usize,
    pub per_row: BTreeMap<String, usize>,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuzzReport {
    pub seed: u64,
    pub size: usize,
    pub tables: Vec<TableReport>,
}

impl FuzzReport {
    pub fn violations(&self) -> impl Iterator<Item = &Violation> {
        self.tables.iter().flat_map(|t| t.violations.iter())
    }

    pub fn is_sound(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "size": self.size,
            "sound": self.is_sound(),
            "tables": self.tables.iter().map(|t| json!({
                "table": t.table.tag(),
                "instances": t.instances,
                "rows": t.per_row,
                "violations": t.violations.iter().map(|v| json!({
                    "axiom": v.axiom, "lhs": v.lhs, "rhs": v.rhs, "relation": v.relation,
                    "store": v.store, "witness": v.witness,
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn fuzz_model(table: Table) -> Model {
    let src = if table == Table::G { GUARD_MODEL } else { BASE_MODEL };
    parse_model(src).expect("built-in fuzz model")
}

/// `count` instances per table, each left side of size at most `size` where the row allows it.
pub fn soundness_fuzz(seed: u64, count: usize, size: usize) -> Result<FuzzReport> {
    let tables = Table::ALL
        .par_iter()
        .enumerate()
        .map(|(i, &t)| fuzz_table(t, seed.wrapping_add(i as u64 * 0x9e37_79b9), count, size))
        .collect::<Result<Vec<_>>>()?;
    Ok(FuzzReport { seed, size, tables })
}

pub fn fuzz_table(table: Table, seed: u64, count: usize, size: usize) -> Result<TableReport> {
    let m = fuzz_model(table);
    let rows = table_rows(table);
    let mut g = Gen::new(table, &m, seed, size);
    let mut rep = TableReport { table, instances: 0, per_row: BTreeMap::new(), violations: Vec::new() };
    while rep.instances < count {
        let ax = *rows.choose(&mut g.rng).expect("non-empty table");
        let Some((lhs, rhs)) = (0..MAX_ATTEMPTS).find_map(|_| g.instance(ax)) else { continue };
        rep.instances += 1;
        *rep.per_row.entry(ax.id.short()).or_insert(0) += 1;
        if let Some(v) = compare(&m, ax, &lhs, &rhs, table == Table::G)? {
            rep.violations.push(v);
        }
    }
    Ok(rep)
}

fn verdict(m: &Model, check: Check, l: &T, r: &T, s: &DataState) -> Result<Verdict> {
    let silent = if check == Check::Rbs { Silent::KeepGuards } else { Silent::CollapseAll };
    let opts = LtsOptions { bound: STATE_BOUND, jobs: 1, silent };
    let a = Ts::from(&generate_lts_from(m, Config::new(l.clone(), s.clone()), &opts)?);
    let b = Ts::from(&generate_lts_from(m, Config::new(r.clone(), s.clone()), &opts)?);
    Ok(match check {
        Check::Step => check_strong(&a, &b),
        Check::Rbs => check_rbs(&a, &b),
    })
}

/// Compares one instance; guard rows are compared from every store.
pub fn compare(m: &Model, ax: &Axiom, l: &T, r: &T, all_stores: bool) -> Result<Option<Violation>> {
    let stores = if all_stores { DataState::all_stores(m) } else { vec![DataState::initial(m)] };
    for s in stores {
        let v = verdict(m, ax.check, l, r, &s)?;
        if !v.related {
            let store = all_stores.then(|| s.store.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(","));
            return Ok(Some(Violation {
                axiom: ax.id.to_string(),
                lhs: compact(l),
                rhs: compact(r),
                relation: if ax.check == Check::Rbs { "rbs" } else { "step" },
                store,
                witness: v.to_json(false)["witness"].clone(),
            }));
        }
    }
    Ok(None)
}

struct Gen<'m> {
    rng: ChaCha8Rng,
    table: Table,
    m: &'m Model,
    size: usize,
}

const PREDS: [(&str, &str); 4] = [("x", "0"), ("x", "1"), ("y", "0"), ("y", "1")];

impl<'m> Gen<'m> {
    fn new(table: Table, m: &'m Model, seed: u64, size: usize) -> Gen<'m> {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed), table, m, size }
    }

    fn with_tau(&self) -> bool {
        matches!(self.table, Table::Tau | Table::Ti | Table::G)
    }

    fn event(&mut self) -> T {
        if self.with_tau() && self.rng.gen_bool(0.2) {
            return term::tau();
        }
        term::atom(["a", "b", "c"][self.rng.gen_range(0..3)])
    }

    fn guard_expr(&mut self, depth: usize) -> Guard {
        if depth == 0 || self.rng.gen_bool(0.5) {
            let (x, v) = PREDS[self.rng.gen_range(0..PREDS.len())];
            return Guard::pred(x, &[v]);
        }
        let l = Arc::new(self.guard_expr(depth - 1));
        match self.rng.gen_range(0..3) {
            0 => Guard::Not(l),
            1 => Guard::Alt(l, Arc::new(self.guard_expr(depth - 1))),
            _ => Guard::Seq(l, Arc::new(self.guard_expr(depth - 1))),
        }
    }

    fn guard(&mut self) -> T {
        if self.rng.gen_bool(0.1) {
            return term::eps();
        }
        term::guard(self.guard_expr(2))
    }

    fn leaf(&mut self) -> T {
        let r: f64 = self.rng.gen();
        if r < 0.1 {
            term::delta()
        } else if self.table == Table::G && r < 0.2 {
            term::eps()
        } else if self.table == Table::G && r < 0.4 {
            self.guard()
        } else {
            self.event()
        }
    }

    fn ops(&self) -> &'static [fn(T, T) -> T] {
        match self.table {
            Table::Batc | Table::Sc => &[term::seq, term::alt],
            Table::Aptc | Table::Ce | Table::U => &[term::seq, term::alt, term::par, term::comm, term::merge],
            Table::D => &[term::seq, term::alt, term::par, term::merge],
            Table::Tau | Table::Ti => &[term::seq, term::alt, term::par],
            Table::G => &[term::seq, term::alt, term::par, term::comm],
            Table::Pc => &[term::seq, term::alt, term::merge],
        }
    }

    /// A random term with at most `s` nodes.
    fn term(&mut self, s: usize) -> T {
        if s < 3 || self.rng.gen_bool(0.25) {
            return self.leaf();
        }
        let ops = self.ops();
        let op = ops[self.rng.gen_range(0..ops.len())];
        let l = self.rng.gen_range(1..s - 1);
        let a = self.term(l);
        let b = self.term(s - 1 - l);
        op(a, b)
    }

    /// A random basic term in canonical form.
    fn basic(&mut self, depth: usize) -> T {
        let n = self.rng.gen_range(1..=2);
        let parts: Vec<T> = (0..n)
            .map(|_| {
                let tail = depth > 0 && self.rng.gen_bool(0.4);
                let head = if self.rng.gen_bool(0.3) { term::par(self.event(), self.event()) } else { self.event() };
                match (tail, &*head) {
                    (false, _) => head,
                    (true, Term::Par(l, r)) => term::par(l.clone(), term::seq(r.clone(), self.basic(depth - 1))),
                    (true, _) => term::seq(head, self.basic(depth - 1)),
                }
            })
            .collect();
        canon(&term::alt_chain(parts).expect("non-empty"))
    }

    fn wp_guard(&self, e: &Action, p: &Guard, negated: bool) -> Guard {
        let mut disj: Option<Guard> = None;
        for s in DataState::all_stores(self.m) {
            if wp_holds(self.m, e, p, &s).unwrap_or(false) == negated {
                continue;
            }
            let conj = s
                .store
                .iter()
                .map(|(x, v)| Guard::Pred(x.clone(), vec![v.clone()]))
                .reduce(|a, b| Guard::Seq(Arc::new(a), Arc::new(b)))
                .unwrap_or(Guard::True);
            disj = Some(match disj {
                None => conj,
                Some(d) => Guard::Alt(Arc::new(d), Arc::new(conj)),
            });
        }
        disj.unwrap_or(Guard::False)
    }

    fn custom(&mut self, ax: &Axiom) -> Option<(T, T)> {
        let lhs = match ax.shape {
            Shape::Expand => term::merge(self.basic(2), self.basic(2)),
            Shape::GuardValid => self.guard(),
            Shape::GuardSeqFalse | Shape::GuardParFalse => {
                let n = self.rng.gen_range(1..=3);
                let gs: Vec<T> = (0..n).map(|_| term::guard(self.guard_expr(1))).collect();
                let f = if ax.shape == Shape::GuardSeqFalse { term::seq } else { term::par };
                if ax.shape == Shape::GuardParFalse && gs.len() < 2 {
                    return None;
                }
                term::fold_right(gs, f).expect("non-empty")
            }
            Shape::Eq => unreachable!(),
        };
        let rhs = rewrite::rewrite_here(&canon(&lhs), ax.id, Dir::Ltr, self.m).ok()?;
        Some((lhs, rhs))
    }

    fn instance(&mut self, ax: &Axiom) -> Option<(T, T)> {
        if ax.shape != Shape::Eq {
            return self.custom(ax);
        }
        let mut vars = Vec::new();
        ax.lp.vars(&mut vars);
        let mut b = Bind::default();
        let set = if ax.lhs.contains("dh(") { "H" } else { "I" };
        b.set = self.m.set(set);
        let mut extra = self.size.saturating_sub(ax.lp.size());
        vars.shuffle(&mut self.rng);
        // wp guards depend on the other variables, so they are filled in last
        vars.sort_by_key(|(n, _)| *n == "q" && ax.id.row.starts_with("G1"));
        for (n, k) in vars {
            let t = match k {
                Kind::Any => {
                    let occ = ax.lp.occurrences(n).max(1);
                    let s = 1 + self.rng.gen_range(0..=extra / occ);
                    extra -= (s - 1) * occ;
                    self.term(s)
                }
                Kind::Event => {
                    let e = if ax.products && self.rng.gen_bool(0.25) { term::par(self.event(), self.event()) } else { self.event() };
                    if let Some(a) = e.as_event() {
                        b.shadows.insert(n, term::shadow(a.clone(), 1));
                    }
                    e
                }
                Kind::Guard if n == "q" && matches!(ax.id.row, "G10" | "G11") => {
                    let e = b.vars.get("e")?.as_event()?.clone();
                    let Term::Guard(p) = &**b.vars.get("p")? else { return None };
                    term::guard(self.wp_guard(&e, p, ax.id.row == "G11"))
                }
                Kind::Guard => self.guard(),
                Kind::Test => term::guard(self.guard_expr(2)),
            };
            b.vars.insert(n, t);
        }
        if ax.conds.iter().any(|c| !cond_holds(c, &b, self.m)) {
            return None;
        }
        Some((build(&ax.lp, &b, self.m)?, build(&ax.rp, &b, self.m)?))
    }
}

/// Name sets used by the fuzz models, for callers building their own instances.
pub fn fuzz_sets(m: &Model) -> (NameSet, NameSet) {
    (m.set("H").expect("H"), m.set("I").expect("I"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = fuzz_table(Table::Batc, 7, 40, 7).unwrap();
        let b = fuzz_table(Table::Batc, 7, 40, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.instances, 40);
    }

    #[test]
    fn every_row_is_instantiable() {
        for t in Table::ALL {
            let m = fuzz_model(t);
            let mut g = Gen::new(t, &m, 1, 7);
            for ax in table_rows(t) {
                let ok = (0..400).any(|_| g.instance(ax).is_some());
                assert!(ok, "{}", ax.id);
            }
        }
    }
}
