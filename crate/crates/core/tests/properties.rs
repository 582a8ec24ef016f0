use std::collections::BTreeSet;

use aptc_core::cases::{build_case_study, CaseStudyId};
use aptc_core::data::{apply_effect, eval_guard, mailbox_receive, mailbox_send, wp_holds, DataState};
use aptc_core::dsl::{compact, parse_model, parse_term, render_term};
use aptc_core::enumerate::{enumeration_model, pes_singletons, sos_singletons};
use aptc_core::equiv::{
    check_hhp_bisimulation, check_hp_bisimulation, check_pes_step_bisimulation, check_pomset_bisimulation, check_rbs,
    check_strong, replay, validate_rbs_relation, validate_step_relation, Ts, Witness,
};
use aptc_core::model::Model;
use aptc_core::pes::{build_pes, enumerate_configurations};
use aptc_core::rewrite::{normalize_to_basic, DEFAULT_FUEL};
use aptc_core::sos::{aut, enabled_steps, generate_lts, lts_of, Config, LtsOptions, Silent, StepLabel};
use aptc_core::term::{self, is_basic_term, Action, Guard, Name, NameSet, Term, T};
use proptest::prelude::*;

fn h() -> NameSet {
    NameSet::named("H", ["a".into()].into_iter().collect())
}

fn i() -> NameSet {
    NameSet::named("I", ["b".into()].into_iter().collect())
}

fn leaf() -> impl Strategy<Value = T> {
    prop_oneof![Just(term::atom("a")), Just(term::atom("b")), Just(term::atom("c"))]
}

/// Recursion-free terms over a, b, c. `hide` toggles τ_I nodes.
fn terms(depth: u32, hide: bool) -> impl Strategy<Value = T> {
    leaf().prop_recursive(depth, 12, 2, move |inner| {
        let bin = (inner.clone(), inner.clone(), 0..5u8).prop_map(|(l, r, k)| match k {
            0 => term::seq(l, r),
            1 => term::alt(l, r),
            2 => term::merge(l, r),
            3 => term::comm(l, r),
            _ => term::par(l, r),
        });
        let un = (inner, 0..if hide { 2u8 } else { 1 }).prop_map(|(x, k)| if k == 0 { term::encap(h(), x) } else { term::hide(i(), x) });
        prop_oneof![3 => bin, 1 => un]
    })
}

/// The fragment event structures are built for: binary operators only.
fn pes_terms(depth: u32) -> impl Strategy<Value = T> {
    binary_terms(depth, 0..5u8)
}

fn binary_terms(depth: u32, ops: std::ops::Range<u8>) -> impl Strategy<Value = T> {
    leaf().prop_recursive(depth, 12, 2, move |inner| {
        (inner.clone(), inner, ops.clone()).prop_map(|(l, r, k)| match k {
            0 => term::seq(l, r),
            1 => term::alt(l, r),
            2 => term::merge(l, r),
            3 => term::comm(l, r),
            _ => term::par(l, r),
        })
    })
}

fn batc(depth: u32) -> impl Strategy<Value = T> {
    leaf().prop_recursive(depth, 8, 2, |inner| {
        (inner.clone(), inner, any::<bool>()).prop_map(|(l, r, s)| if s { term::seq(l, r) } else { term::alt(l, r) })
    })
}

fn lts(m: &Model, t: &T) -> aptc_core::sos::Lts {
    lts_of(m, t, Silent::CollapseAll).expect("finite term")
}

/// Direct reading of the single-event rules for `·` and `+`: (label, residual or None for √).
fn batc_moves(t: &T) -> BTreeSet<(String, Option<String>)> {
    match &**t {
        Term::Atom(a) => [(format!("{{{a}}}"), None)].into_iter().collect(),
        Term::Alt(l, r) => batc_moves(l).union(&batc_moves(r)).cloned().collect(),
        Term::Seq(l, r) => batc_moves(l)
            .into_iter()
            .map(|(e, rest)| match rest {
                None => (e, Some(compact(r))),
                Some(x) => (e, Some(format!("({x}).({})", compact(r)))),
            })
            .collect(),
        _ => unreachable!("only BATC terms are generated"),
    }
}

fn sos_moves(m: &Model, t: &T) -> BTreeSet<(String, Option<String>)> {
    let c = Config::new(t.clone(), DataState::initial(m));
    enabled_steps(&c, m)
        .expect("steps")
        .into_iter()
        .map(|s| (s.label.render(), s.target.term.as_ref().map(|x| compact(x))))
        .collect()
}

fn step_traces(ts: &Ts, depth: usize) -> BTreeSet<Vec<String>> {
    let succ = ts.successors();
    let mut out = BTreeSet::new();
    let mut todo = vec![(ts.initial, Vec::<String>::new())];
    while let Some((s, tr)) = todo.pop() {
        if ts.term[s] {
            let mut t = tr.clone();
            t.push("tick".into());
            out.insert(t);
        }
        out.insert(tr.clone());
        if tr.len() < depth {
            for (l, d) in &succ[s] {
                let mut t = tr.clone();
                t.push(l.to_string());
                todo.push((*d, t));
            }
        }
    }
    out
}

fn reparse(m: &Model, s: &Option<String>) -> Option<T> {
    s.as_ref().map(|x| parse_term(m, x).expect("reparse"))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn render_parse_round_trip(t in terms(4, true)) {
        let m = enumeration_model();
        prop_assert_eq!(parse_term(&m, &render_term(&t)).unwrap(), t);
    }

    #[test]
    fn parallel_is_lockstep(x in terms(3, false), y in terms(3, false)) {
        let m = enumeration_model();
        let c = Config::new(term::par(x, y), DataState::initial(&m));
        for s in enabled_steps(&c, &m).unwrap() {
            if let StepLabel::Visible(v) = &s.label {
                prop_assert!(v.len() >= 2, "singleton step {}", s.label.render());
            }
        }
    }

    #[test]
    fn encapsulation_blocks_h(t in terms(4, true)) {
        let m = enumeration_model();
        let l = lts(&m, &term::encap(h(), t));
        for (_, lab, _) in &l.transitions {
            if let StepLabel::Visible(v) = lab {
                prop_assert!(v.iter().all(|a| a.name.as_ref() != "a"));
            }
        }
    }

    #[test]
    fn abstraction_hides_i(t in terms(4, true)) {
        let m = enumeration_model();
        let l = lts(&m, &term::hide(i(), t));
        for (_, lab, _) in &l.transitions {
            if let StepLabel::Visible(v) = lab {
                prop_assert!(v.iter().all(|a| a.name.as_ref() != "b"));
            }
        }
    }

    #[test]
    fn generation_is_deterministic(t in terms(4, true)) {
        let m = enumeration_model();
        let one = generate_lts(&m, &t, &LtsOptions { jobs: 1, ..LtsOptions::default() }).unwrap();
        let again = generate_lts(&m, &t, &LtsOptions { jobs: 1, ..LtsOptions::default() }).unwrap();
        let four = generate_lts(&m, &t, &LtsOptions { jobs: 4, ..LtsOptions::default() }).unwrap();
        prop_assert_eq!(aut(&one), aut(&again));
        prop_assert_eq!(aut(&one), aut(&four));
    }

    #[test]
    fn batc_single_event_rules(t in batc(4)) {
        let m = enumeration_model();
        let expected: BTreeSet<_> = batc_moves(&t)
            .into_iter()
            .map(|(e, r)| (e, reparse(&m, &r).map(|x| compact(&x))))
            .collect();
        prop_assert_eq!(sos_moves(&m, &t), expected);
    }

    #[test]
    fn step_checker_reflexive_symmetric_with_valid_witnesses(x in terms(3, true), y in terms(3, true)) {
        let m = enumeration_model();
        let (a, b) = (Ts::from(&lts(&m, &x)), Ts::from(&lts(&m, &y)));
        prop_assert!(check_strong(&a, &a).related);
        let v = check_strong(&a, &b);
        prop_assert_eq!(v.related, check_strong(&b, &a).related);
        match &v.witness {
            Witness::Relation(r) => prop_assert!(v.related && validate_step_relation(&a, &b, r)),
            Witness::Trace { side, steps, last } => {
                let (yes, no) = if *side == 1 { (&a, &b) } else { (&b, &a) };
                prop_assert!(replay(yes, steps, last, false) && !replay(no, steps, last, false));
            }
            // no trace separates them, so the step traces must coincide
            Witness::Note(_) => prop_assert!(!v.related && step_traces(&a, 8) == step_traces(&b, 8)),
            other => prop_assert!(false, "unexpected witness {other:?}"),
        }
    }

    #[test]
    fn rbs_checker_reflexive_symmetric_with_valid_witnesses(x in terms(3, true), y in terms(3, true)) {
        let m = enumeration_model();
        let opts = LtsOptions { silent: Silent::KeepGuards, ..LtsOptions::default() };
        let a = Ts::from(&generate_lts(&m, &x, &opts).unwrap());
        let b = Ts::from(&generate_lts(&m, &y, &opts).unwrap());
        prop_assert!(check_rbs(&a, &a).related);
        let v = check_rbs(&a, &b);
        prop_assert_eq!(v.related, check_rbs(&b, &a).related);
        if let Witness::Relation(r) = &v.witness {
            prop_assert!(validate_rbs_relation(&a, &b, r));
        }
        // strong step bisimilarity implies rooted branching
        if check_strong(&a, &b).related {
            prop_assert!(v.related);
        }
    }

    #[test]
    fn truly_concurrent_hierarchy(x in pes_terms(3), y in pes_terms(3)) {
        let m = enumeration_model();
        let (p, q) = (build_pes(&x, &m).unwrap(), build_pes(&y, &m).unwrap());
        prop_assert!(p.check_invariants() && q.check_invariants());
        let s = check_pes_step_bisimulation(&p, &q).unwrap().related;
        let po = check_pomset_bisimulation(&p, &q).unwrap().related;
        let hp = check_hp_bisimulation(&p, &q).unwrap().related;
        let hhp = check_hhp_bisimulation(&p, &q).unwrap().related;
        prop_assert!(!hhp || hp);
        prop_assert!(!hp || po);
        prop_assert!(!po || s);
        prop_assert!(check_hhp_bisimulation(&p, &p).unwrap().related);
        prop_assert_eq!(hp, check_hp_bisimulation(&q, &p).unwrap().related);
    }

    #[test]
    fn normal_forms_are_basic_and_equivalent(t in terms(3, true)) {
        let m = enumeration_model();
        let (nf, trace) = normalize_to_basic(&t, &m, DEFAULT_FUEL).unwrap();
        prop_assert!(is_basic_term(&nf), "{}", compact(&nf));
        prop_assert_eq!(trace.replay(&m).unwrap(), nf.clone());
        prop_assert!(check_strong(&Ts::from(&lts(&m, &t)), &Ts::from(&lts(&m, &nf))).related);
    }

    #[test]
    fn substitution_idempotent(t in terms(3, true), s in terms(2, true), hole in any::<bool>()) {
        let t = if hole { term::seq(t, term::var("X")) } else { t };
        let once = term::substitute(&t, "X", &s);
        prop_assert_eq!(term::substitute(&once, "X", &s), once);
        prop_assert_eq!(term::substitute(&term::seq(s.clone(), term::var("X")), "Y", &s), term::seq(s, term::var("X")));
    }

    #[test]
    fn finite_sum_has_one_leaf_per_value(n in 1usize..8) {
        let dom: Vec<Name> = (0..n).map(|k| Name::from(format!("v{k}"))).collect();
        let body = term::act(Action::new("a", &["d"]));
        let t = term::expand_finite_sum("d", &dom, &body).unwrap();
        fn leaves(t: &Term) -> usize {
            match t {
                Term::Alt(l, r) => leaves(l) + leaves(r),
                _ => 1,
            }
        }
        prop_assert_eq!(leaves(&t), n);
    }

    #[test]
    fn sos_and_pes_agree_without_parallel(t in binary_terms(3, 0..4u8)) {
        // ∥ is lockstep in the operational semantics but not in an event structure
        let m = enumeration_model();
        prop_assert_eq!(sos_singletons(&t, &m).unwrap(), pes_singletons(&t, &m).unwrap());
    }
}

const GUARD_MODEL: &str = "model g; domain V = {0, 1, 2}; var x : V = 0; var y : V = 0;
act a, b, c(V); effect a : x := 1 | x := 2, y := 1; effect b : y := 0; effect c(v) : x := v;
mailbox M cap 2; domain Msg = {m1, m2}; act s_M(Msg) sends M; act r_M(Msg) receives M;";

fn guards() -> impl Strategy<Value = Guard> {
    let atom = prop_oneof![
        Just(Guard::True),
        Just(Guard::False),
        (prop_oneof![Just("x"), Just("y")], prop_oneof![Just("0"), Just("1"), Just("2")]).prop_map(|(v, c)| Guard::pred(v, &[c])),
    ];
    atom.prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Guard::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Guard::Alt(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Guard::Seq(a.into(), b.into())),
            (inner.clone(), inner).prop_map(|(a, b)| Guard::Par(a.into(), b.into())),
        ]
    })
}

proptest! {
    #[test]
    fn guard_laws(g in guards()) {
        let m = parse_model(GUARD_MODEL).unwrap();
        for s in DataState::all_stores(&m) {
            let v = eval_guard(&m, &g, &s).unwrap();
            prop_assert_eq!(eval_guard(&m, &Guard::not(Guard::not(g.clone())), &s).unwrap(), v);
            prop_assert!(eval_guard(&m, &Guard::Alt(g.clone().into(), Guard::not(g.clone()).into()), &s).unwrap());
        }
    }

    #[test]
    fn wp_matches_successor_stores(g in guards(), e in prop_oneof![Just("a"), Just("b"), Just("c(2)"), Just("c(0)")]) {
        let m = parse_model(GUARD_MODEL).unwrap();
        let e = match e.split_once('(') {
            Some((n, v)) => Action::new(n, &[v.trim_end_matches(')')]),
            None => Action::new(e, &[]),
        };
        for s in DataState::all_stores(&m) {
            let brute = apply_effect(&m, &e, &s).iter().all(|n| eval_guard(&m, &g, n).unwrap());
            prop_assert_eq!(wp_holds(&m, &e, &g, &s).unwrap(), brute);
        }
    }

    #[test]
    fn receive_undoes_send(msg in prop_oneof![Just("m1"), Just("m2")], pre in prop::collection::vec(prop_oneof![Just("m1"), Just("m2")], 0..2)) {
        let m = parse_model(GUARD_MODEL).unwrap();
        let mut s = DataState::initial(&m);
        for p in pre {
            s = mailbox_send(&m, "M", &[Name::from(p)], &s).unwrap();
        }
        let msg = [Name::from(msg)];
        let sent = mailbox_send(&m, "M", &msg, &s).unwrap();
        prop_assert_eq!(mailbox_receive("M", &msg, &sent), Some(s));
    }
}

#[test]
fn wp_agrees_on_reachable_states_of_bundled_models() {
    let mut checked = 0;
    for id in CaseStudyId::defaults() {
        let c = build_case_study(id).unwrap();
        let m = &c.model;
        if m.effects.is_empty() {
            continue;
        }
        let l = lts_of(m, &c.system, Silent::KeepGuards).unwrap();
        let mut preds = Vec::new();
        for v in &m.vars {
            for val in m.domain(&v.domain).unwrap_or(&[]) {
                preds.push(Guard::Pred(v.name.clone(), vec![val.clone()]));
            }
        }
        for eff in &m.effects {
            let e = Action::with_args(eff.action.clone(), Vec::new());
            for cfg in &l.states {
                for g in &preds {
                    let brute = apply_effect(m, &e, &cfg.state).iter().all(|n| eval_guard(m, g, n).unwrap());
                    assert_eq!(wp_holds(m, &e, g, &cfg.state).unwrap(), brute);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn configurations_of_parallel_atoms() {
    let m = parse_model("model p; act e1, e2, e3, e4, e5, e6;").unwrap();
    for n in 1..=6 {
        let t = (2..=n).fold(term::atom("e1"), |acc, k| term::merge(acc, term::atom(&format!("e{k}"))));
        // ≬ adds no communication events here, so configurations are the subsets of the atoms
        let p = build_pes(&t, &m).unwrap();
        assert_eq!(enumerate_configurations(&p).unwrap().len(), 1 << n, "n = {n}");
    }
}

#[test]
fn parsing_is_deterministic() {
    for id in CaseStudyId::defaults() {
        let c = build_case_study(id).unwrap();
        assert_eq!(parse_model(&c.source).unwrap(), parse_model(&c.source).unwrap());
    }
}
