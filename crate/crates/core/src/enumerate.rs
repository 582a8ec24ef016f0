//! Exhaustive enumeration of small closed terms and the cross-checks run over it:
//! elimination to basic terms, the equivalence hierarchy, and agreement between
//! the operational and the event-structure semantics.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::dsl::{compact, parse_model};
use crate::equiv::{check_hhp_bisimulation, check_hp_bisimulation, check_pes_step_bisimulation, check_pomset_bisimulation, check_strong, Ts};
use crate::error::Result;
use crate::model::Model;
use crate::pes::{self, build_pes};
use crate::rewrite::{normalize_with, Strategy};
use crate::sos::{lts_of, Silent, StepLabel};
use crate::term::{self, is_basic_term, NameSet, T};

pub const ENUM_MODEL: &str = "model enumeration; act a, b, c; comm a | b = c; set H = {a}; set I = {b};";

pub fn enumeration_model() -> Model {
    parse_model(ENUM_MODEL).expect("built-in model")
}

/// Every term over leaves `a`, `b` and the binary operators `·`, `+`, `∥`, `≬`, `∣` with at
/// most `max_size` nodes; with `unary`, also `∂_{a}` and `τ_{b}` nodes.
pub fn enumerate_terms(max_size: usize, unary: bool) -> Vec<T> {
    let binary: [fn(T, T) -> T; 5] = [term::seq, term::alt, term::par, term::merge, term::comm];
    let h = NameSet::named("H", ["a".into()].into_iter().collect());
    let i = NameSet::named("I", ["b".into()].into_iter().collect());
    let mut by_size: Vec<Vec<T>> = vec![Vec::new(); max_size + 1];
    for s in 1..=max_size {
        let mut out = Vec::new();
        if s == 1 {
            out.push(term::atom("a"));
            out.push(term::atom("b"));
        }
        if unary && s >= 2 {
            for x in &by_size[s - 1] {
                out.push(term::encap(h.clone(), x.clone()));
                out.push(term::hide(i.clone(), x.clone()));
            }
        }
        for l in 1..s.saturating_sub(1) {
            let r = s - 1 - l;
            for op in binary {
                for x in &by_size[l] {
                    for y in &by_size[r] {
                        out.push(op(x.clone(), y.clone()));
                    }
                }
            }
        }
        by_size[s] = out;
    }
    by_size.into_iter().flatten().collect()
}

#[derive(Clone, Debug, Default)]
pub struct EliminationReport {
    pub terms: usize,
    pub basic: usize,
    pub preserved: usize,
    pub confluent: usize,
    pub failures: Vec<String>,
}

impl EliminationReport {
    pub fn complete(&self) -> bool {
        self.terms == self.basic && self.terms == self.preserved && self.failures.is_empty()
    }
}

enum Outcome {
    Ok { confluent: bool },
    Failed(String),
}

fn eliminate_one(t: &T, m: &Model, fuel: usize) -> Outcome {
    let (nf, trace) = match normalize_with(t, m, fuel, Strategy::LeftmostInnermost) {
        Ok(r) => r,
        Err(e) => return Outcome::Failed(format!("{}: {e}", compact(t))),
    };
    if !is_basic_term(&nf) {
        return Outcome::Failed(format!("{}: not basic {}", compact(t), compact(&nf)));
    }
    if let Err(e) = trace.replay(m) {
        return Outcome::Failed(format!("{}: replay: {e}", compact(t)));
    }
    let same = match (lts_of(m, t, Silent::CollapseAll), lts_of(m, &nf, Silent::CollapseAll)) {
        (Ok(a), Ok(b)) => check_strong(&Ts::from(&a), &Ts::from(&b)).related,
        _ => false,
    };
    if !same {
        return Outcome::Failed(format!("{}: normal form {} not step bisimilar", compact(t), compact(&nf)));
    }
    let other = normalize_with(t, m, fuel, Strategy::RightmostInnermost).map(|r| r.0);
    Outcome::Ok { confluent: other.as_ref() == Ok(&nf) }
}

pub fn check_elimination(terms: &[T], m: &Model, fuel: usize) -> EliminationReport {
    let outcomes: Vec<Outcome> = terms.par_iter().map(|t| eliminate_one(t, m, fuel)).collect();
    let mut r = EliminationReport { terms: terms.len(), ..Default::default() };
    for o in outcomes {
        match o {
            Outcome::Ok { confluent } => {
                r.basic += 1;
                r.preserved += 1;
                r.confluent += usize::from(confluent);
            }
            Outcome::Failed(s) => r.failures.push(s),
        }
    }
    r
}

#[derive(Clone, Debug, Default)]
pub struct HierarchyReport {
    pub terms: usize,
    pub pairs: usize,
    /// Related pairs per relation: step, pomset, hp, hhp.
    pub related: [usize; 4],
    pub counterexamples: Vec<String>,
    pub errors: Vec<String>,
}

/// Checks hhp ⇒ hp ⇒ pomset ⇒ step on every ordered pair with `i <= j`.
pub fn check_hierarchy(terms: &[T], m: &Model) -> HierarchyReport {
    let built: Vec<Result<pes::Pes>> = terms.par_iter().map(|t| build_pes(t, m)).collect();
    let mut rep = HierarchyReport { terms: terms.len(), ..Default::default() };
    let mut ok = Vec::new();
    for (t, p) in terms.iter().zip(built) {
        match p {
            Ok(p) => ok.push((t.clone(), p)),
            Err(e) => rep.errors.push(format!("{}: {e}", compact(t))),
        }
    }
    let pairs: Vec<(usize, usize)> = (0..ok.len()).flat_map(|i| (i..ok.len()).map(move |j| (i, j))).collect();
    let results: Vec<std::result::Result<[bool; 4], String>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (p, q) = (&ok[i].1, &ok[j].1);
            let v = [
                check_pes_step_bisimulation(p, q),
                check_pomset_bisimulation(p, q),
                check_hp_bisimulation(p, q),
                check_hhp_bisimulation(p, q),
            ];
            let mut out = [false; 4];
            for (k, r) in v.into_iter().enumerate() {
                out[k] = r.map_err(|e| format!("{} vs {}: {e}", compact(&ok[i].0), compact(&ok[j].0)))?.related;
            }
            Ok(out)
        })
        .collect();
    rep.pairs = pairs.len();
    const NAMES: [&str; 4] = ["step", "pomset", "hp", "hhp"];
    for (&(i, j), r) in pairs.iter().zip(results) {
        match r {
            Err(e) => rep.errors.push(e),
            Ok(v) => {
                for k in 0..4 {
                    rep.related[k] += usize::from(v[k]);
                }
                for k in 1..4 {
                    if v[k] && !v[k - 1] {
                        rep.counterexamples.push(format!(
                            "{} vs {}: {} without {}",
                            compact(&ok[i].0),
                            compact(&ok[j].0),
                            NAMES[k],
                            NAMES[k - 1]
                        ));
                    }
                }
            }
        }
    }
    rep
}

#[derive(Clone, Debug, Default)]
pub struct AgreementReport {
    pub terms: usize,
    pub agreeing: usize,
    pub mismatches: Vec<String>,
}

/// Labels of the single-event steps from the initial state.
pub fn sos_singletons(t: &T, m: &Model) -> Result<BTreeSet<String>> {
    let l = lts_of(m, t, Silent::CollapseAll)?;
    Ok(l
        .transitions
        .iter()
        .filter(|(s, lab, _)| *s == l.initial && matches!(lab, StepLabel::Visible(v) if v.len() == 1))
        .map(|(_, lab, _)| lab.render())
        .collect())
}

/// Labels of the single-event transitions from the empty configuration.
pub fn pes_singletons(t: &T, m: &Model) -> Result<BTreeSet<String>> {
    let p = build_pes(t, m)?;
    Ok(pes::members_of(p.enabled(0)).into_iter().map(|e| pes::step_label(&p, 1u128 << e)).collect())
}

pub fn check_sos_pes_agreement(terms: &[T], m: &Model) -> AgreementReport {
    let rows: Vec<Option<String>> = terms
        .par_iter()
        .map(|t| match (sos_singletons(t, m), pes_singletons(t, m)) {
            (Ok(a), Ok(b)) if a == b => None,
            (Ok(a), Ok(b)) => Some(format!("{}: sos {:?} pes {:?}", compact(t), a, b)),
            (a, b) => Some(format!("{}: {:?} {:?}", compact(t), a.err(), b.err())),
        })
        .collect();
    let mismatches: Vec<String> = rows.into_iter().flatten().collect();
    AgreementReport { terms: terms.len(), agreeing: terms.len() - mismatches.len(), mismatches }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::DEFAULT_FUEL;

    #[test]
    fn counts() {
        // 2 + 5·2·2 + 5·(2·20 + 20·2)
        assert_eq!(enumerate_terms(5, false).len(), 422);
        let all = enumerate_terms(3, true);
        assert_eq!(all.len(), 2 + 4 + 28);
    }

    #[test]
    fn small_elimination() {
        let m = enumeration_model();
        let r = check_elimination(&enumerate_terms(4, true), &m, DEFAULT_FUEL);
        assert!(r.complete(), "{:?}", r.failures);
    }

    #[test]
    fn singletons_of_sequence() {
        let m = enumeration_model();
        let t = term::seq(term::atom("a"), term::atom("b"));
        assert_eq!(sos_singletons(&t, &m).unwrap(), pes_singletons(&t, &m).unwrap());
    }
}
