//! Actor templates, their composition into a mailbox-connected system, and the
//! external-behaviour check of an assembled system against its spec.
//!
//! Naming convention: actor `X` owns mailbox `X`; `r_X(m)` receives `m` from it and
//! `s_X(m)` sends `m` to it. Receives listed as inputs and sends to output channels
//! are external; every other receive goes through the mailbox. Remaining actions of
//! an actor are local computations and are hidden.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::dsl::{parse_model, scan_term, TermScan};
use crate::equiv::{check_rbs, replay, Ts, Verdict, Witness};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::sos::{generate_lts, Lts, LtsOptions, Silent, StepLabel};
use crate::term::{Action, Name, NameSet, T};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActorTemplate {
    /// Actor (and mailbox) name, possibly with `${param}` placeholders.
    pub name: String,
    pub params: Vec<String>,
    /// State equations `(state, body)`; the first state is the initial one.
    pub equations: Vec<(String, String)>,
    /// Extra declarations (variables, effects) copied into the composed model.
    pub decls: Vec<String>,
    /// Constrained actors may not create other actors.
    pub constrained: bool,
}

impl ActorTemplate {
    pub fn new(name: &str, params: &[&str], equations: &[(&str, &str)]) -> ActorTemplate {
        ActorTemplate {
            name: name.into(),
            params: params.iter().map(|p| p.to_string()).collect(),
            equations: equations.iter().map(|(s, b)| (s.to_string(), b.to_string())).collect(),
            decls: Vec::new(),
            constrained: false,
        }
    }

    pub fn constrained(mut self) -> Self {
        self.constrained = true;
        self
    }

    pub fn with_decls(mut self, decls: &[&str]) -> Self {
        self.decls = decls.iter().map(|d| d.to_string()).collect();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActorInstance {
    pub name: String,
    pub equations: Vec<(String, String)>,
    pub decls: Vec<String>,
    /// Actors spawned by `new(..)` in the equations.
    pub creations: BTreeSet<String>,
    /// Actions with their literal arguments, in order of first use.
    pub actions: Vec<(Name, Vec<Name>)>,
    pub guard_eqs: Vec<(Name, Name)>,
}

impl ActorInstance {
    pub fn initial(&self) -> &str {
        &self.equations[0].0
    }
}

/// Replace every `${x}` in `text`; a placeholder with no value is an error.
pub fn substitute(text: &str, params: &BTreeMap<String, String>) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find("${") {
        out.push_str(&rest[..i]);
        let after = &rest[i + 2..];
        let j = after.find('}').ok_or_else(|| Error::Invalid(format!("unclosed placeholder in `{text}`")))?;
        let key = &after[..j];
        out.push_str(params.get(key).ok_or_else(|| Error::UnboundParam(key.to_string()))?);
        rest = &after[j + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

pub fn instantiate_actor(t: &ActorTemplate, params: &BTreeMap<String, String>) -> Result<ActorInstance> {
    for p in &t.params {
        if !params.contains_key(p) {
            return Err(Error::UnboundParam(p.clone()));
        }
    }
    let name = substitute(&t.name, params)?;
    if t.equations.is_empty() {
        return Err(Error::PersistenceViolation(format!("{name} has no equations")));
    }
    let mut equations = Vec::new();
    let mut scans: Vec<TermScan> = Vec::new();
    for (s, b) in &t.equations {
        let body = substitute(b, params)?;
        scans.push(scan_term(&body)?);
        equations.push((substitute(s, params)?, body));
    }
    let decls = t.decls.iter().map(|d| substitute(d, params)).collect::<Result<Vec<_>>>()?;
    let states: BTreeSet<&str> = equations.iter().map(|(s, _)| s.as_str()).collect();
    if states.len() != equations.len() {
        return Err(Error::Invalid(format!("{name} defines a state twice")));
    }

    let mut creations = BTreeSet::new();
    for ((s, body), sc) in equations.iter().zip(&scans) {
        if sc.has_new && t.constrained {
            return Err(Error::Invalid(format!("{name} is constrained but {s} creates actors")));
        }
        creations.extend(spawned(body));
        match &sc.tails {
            Some(tails) if tails.iter().all(|x| states.contains(x.as_ref())) => {}
            _ => {
                return Err(Error::PersistenceViolation(format!(
                    "{name}: {s} can finish without returning to a state"
                )))
            }
        }
    }
    // every state must lead back to the initial one
    let edges: BTreeMap<&str, BTreeSet<&str>> = equations
        .iter()
        .zip(&scans)
        .map(|((s, _), sc)| {
            let next = sc.ids.iter().map(|(n, _)| n.as_ref()).filter(|n| states.contains(n)).collect();
            (s.as_str(), next)
        })
        .collect();
    let init = equations[0].0.as_str();
    for s in &states {
        let mut seen = BTreeSet::from([*s]);
        let mut todo = vec![*s];
        let mut back = false;
        while let Some(x) = todo.pop() {
            for y in &edges[x] {
                back |= *y == init;
                if seen.insert(y) {
                    todo.push(y);
                }
            }
        }
        if !back {
            return Err(Error::PersistenceViolation(format!("{name}: {s} never re-enters {init}")));
        }
    }

    let mut actions = Vec::new();
    let mut guard_eqs = Vec::new();
    for sc in &scans {
        for id in &sc.ids {
            let n = id.0.as_ref();
            if !states.contains(n) && !creations.contains(n) && n != "eps" && !actions.contains(id) {
                actions.push(id.clone());
            }
        }
        for g in &sc.guard_eqs {
            if !guard_eqs.contains(g) {
                guard_eqs.push(g.clone());
            }
        }
    }
    Ok(ActorInstance { name, equations, decls, creations, actions, guard_eqs })
}

/// Names appearing as `new(X)` in a body.
fn spawned(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(i) = rest.find("new(") {
        let after = &rest[i + 4..];
        let j = after.find(')').unwrap_or(after.len());
        let inner = after[..j].trim();
        if inner != "eps" && inner.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'') {
            out.push(inner.to_string());
        }
        rest = &after[j.min(after.len())..];
    }
    out
}

fn replace_spawns(body: &str, creations: &BTreeSet<String>) -> String {
    let mut out = body.to_string();
    for c in creations {
        out = out.replace(&format!("new({c})"), "new(eps)");
    }
    out
}

#[derive(Clone, Debug)]
pub struct SystemAssembly {
    pub name: String,
    /// Generated model text; parsing it gives `model`.
    pub source: String,
    pub model: Model,
    pub actors: Vec<ActorInstance>,
    pub h: NameSet,
    pub i: NameSet,
    /// Actions the system may show after abstraction.
    pub external: BTreeSet<String>,
    pub system: T,
    pub spec: T,
}

impl SystemAssembly {
    /// The system before abstraction, where mailbox traffic is still visible.
    pub fn unhidden(&self) -> Result<T> {
        match self.system.as_ref() {
            crate::term::Term::Hide(_, inner) => Ok(inner.clone()),
            _ => Err(Error::Invalid("system is not an abstraction".into())),
        }
    }
}

/// Channel of a send or receive action (`s_X`, `r_X`).
fn channel(n: &str) -> Option<(char, &str)> {
    n.strip_prefix("s_").map(|c| ('s', c)).or_else(|| n.strip_prefix("r_").map(|c| ('r', c)))
}

/// Wire actors through their mailboxes and build `τ_I(∂_H(A1 ≬ … ≬ An))` with the given
/// spec equations (first equation is the spec's initial state). `inputs` are rendered
/// receive actions fed from outside; `outputs` are channel names.
pub fn compose_system(
    name: &str,
    actors: &[ActorInstance],
    inputs: &[&str],
    outputs: &[&str],
    spec: &[(&str, &str)],
) -> Result<SystemAssembly> {
    let mut boxes = BTreeSet::new();
    for a in actors {
        if !boxes.insert(a.name.as_str()) {
            return Err(Error::DuplicateMailbox(a.name.clone()));
        }
    }
    let mut states = BTreeSet::new();
    for a in actors {
        for (s, _) in &a.equations {
            if boxes.contains(s.as_str()) && s != a.initial() || !states.insert(s.as_str()) {
                return Err(Error::Invalid(format!("state name {s} is used twice")));
            }
        }
        for c in &a.creations {
            if !boxes.contains(c.as_str()) {
                return Err(Error::Invalid(format!("{} creates unknown actor {c}", a.name)));
            }
        }
    }

    // messages routed to each mailbox, and what each mailbox owner reads
    let mut routed: BTreeMap<&str, BTreeSet<Name>> = BTreeMap::new();
    let mut reads: BTreeMap<&str, BTreeSet<Name>> = BTreeMap::new();
    let mut ins: BTreeMap<&str, BTreeSet<Name>> = BTreeMap::new();
    let mut out_msgs: BTreeMap<&str, BTreeSet<Name>> = BTreeMap::new();
    let mut senders: BTreeMap<(&str, Name), BTreeSet<&str>> = BTreeMap::new();
    for a in actors {
        for (n, args) in &a.actions {
            let Some((dir, ch)) = channel(n) else { continue };
            let render = Action::with_args(n.clone(), args.clone()).to_string();
            if args.len() != 1 {
                return Err(Error::Invalid(format!("{render}: messages carry exactly one value")));
            }
            match dir {
                's' if boxes.contains(ch) => {
                    let mb = boxes.get(ch).copied().unwrap_or(ch);
                    routed.entry(mb).or_default().insert(args[0].clone());
                    senders.entry((mb, args[0].clone())).or_default().insert(a.name.as_str());
                }
                's' => match outputs.iter().find(|o| **o == ch) {
                    Some(o) => {
                        out_msgs.entry(o).or_default().insert(args[0].clone());
                    }
                    None => return Err(Error::DanglingSend(render)),
                },
                _ if ch != a.name => {
                    return Err(Error::Invalid(format!("{} reads mailbox {ch}", a.name)));
                }
                _ if inputs.contains(&render.as_str()) => {
                    ins.entry(boxes.get(ch).copied().unwrap_or(ch)).or_default().insert(args[0].clone());
                }
                _ => {
                    reads.entry(boxes.get(ch).copied().unwrap_or(ch)).or_default().insert(args[0].clone());
                }
            }
        }
    }
    for i in inputs {
        let known = ins.iter().any(|(mb, ms)| ms.iter().any(|m| format!("r_{mb}({m})") == *i));
        if !known {
            return Err(Error::Invalid(format!("input {i} is not read by any actor")));
        }
    }
    // An actor that starts by reading its mailbox and receives nothing from anyone never
    // moves; its sends are dead and need no reader.
    let inert = |a: &ActorInstance| {
        let opens_with_read = a
            .equations
            .first()
            .is_some_and(|(_, body)| body.trim_start().trim_start_matches('(').starts_with(&format!("r_{}(", a.name)));
        opens_with_read && !routed.contains_key(a.name.as_str()) && !ins.contains_key(a.name.as_str())
    };
    let inert: BTreeSet<&str> = actors.iter().filter(|a| inert(a)).map(|a| a.name.as_str()).collect();
    for (mb, msgs) in &routed {
        let r = reads.get(mb).cloned().unwrap_or_default();
        let live = |m: &&Name| senders.get(&(*mb, (*m).clone())).is_some_and(|s| s.iter().any(|x| !inert.contains(x)));
        if let Some(m) = msgs.difference(&r).find(live) {
            return Err(Error::DanglingSend(format!("s_{mb}({m})")));
        }
        if let Some(m) = msgs.intersection(&ins.get(mb).cloned().unwrap_or_default()).next() {
            return Err(Error::Invalid(format!("r_{mb}({m}) is both an input and a mailbox read")));
        }
    }

    let mut src = String::new();
    let _ = writeln!(src, "// Generated by the actor framework; regenerate rather than edit.");
    let _ = writeln!(src, "model {name};\n");
    let mut external = BTreeSet::new();
    let mut hidden: Vec<String> = Vec::new();
    let mut decl_lines = Vec::new();
    for a in actors {
        let _ = writeln!(src, "// actor {}", a.name);
        let bound = reads.get(a.name.as_str()).cloned().unwrap_or_default();
        let inputs = ins.get(a.name.as_str()).cloned().unwrap_or_default();
        // dead sends from inert actors still need a declared message
        let all: BTreeSet<Name> = bound.union(routed.get(a.name.as_str()).unwrap_or(&BTreeSet::new())).cloned().collect();
        if !all.is_empty() {
            let _ = writeln!(src, "domain M_{} = {{{}}};", a.name, join(&all));
            let _ = writeln!(src, "mailbox {} cap {};", a.name, bound.len().max(1));
            let _ = writeln!(src, "act r_{0}(M_{0}) receives {0};", a.name);
            let _ = writeln!(src, "act s_{0}(M_{0}) sends {0};", a.name);
            for m in &all {
                hidden.push(format!("r_{}({m})", a.name));
                hidden.push(format!("s_{}({m})", a.name));
            }
        }
        if !inputs.is_empty() {
            let _ = writeln!(src, "domain In_{} = {{{}}};", a.name, join(&inputs));
            let _ = writeln!(src, "act r_{0}(In_{0});", a.name);
            for m in &inputs {
                external.insert(format!("r_{}({m})", a.name));
            }
        }
        let mut locals = BTreeSet::new();
        for (n, args) in &a.actions {
            if channel(n).is_none() {
                if !args.is_empty() {
                    return Err(Error::Invalid(format!("local action {n} takes no arguments")));
                }
                locals.insert(n.clone());
            }
        }
        if !locals.is_empty() {
            let _ = writeln!(src, "act {};", join(&locals));
            hidden.extend(locals.iter().map(|l| l.to_string()));
        }
        let declared: BTreeSet<String> = a
            .decls
            .iter()
            .filter_map(|d| d.strip_prefix("var ").and_then(|r| r.split(':').next()).map(|x| x.trim().to_string()))
            .collect();
        let mut gvars: BTreeMap<Name, Vec<Name>> = BTreeMap::new();
        for (x, v) in &a.guard_eqs {
            let vs = gvars.entry(x.clone()).or_default();
            if !vs.contains(v) {
                vs.push(v.clone());
            }
        }
        for (x, vs) in &gvars {
            if !declared.contains(x.as_ref()) && !hidden.iter().any(|h| h == x.as_ref()) {
                let _ = writeln!(src, "domain V_{x} = {{{}}};", vs.iter().map(|v| v.as_ref()).collect::<Vec<_>>().join(", "));
                let _ = writeln!(src, "var {x} : V_{x} = {};", vs[0]);
            }
            if !hidden.iter().any(|h| h == x.as_ref()) {
                hidden.push(x.to_string());
            }
        }
        decl_lines.extend(a.decls.iter().cloned());
    }
    for (o, msgs) in &out_msgs {
        let _ = writeln!(src, "domain Out_{o} = {{{}}};", join(msgs));
        let _ = writeln!(src, "act s_{o}(Out_{o});");
        for m in msgs {
            external.insert(format!("s_{o}({m})"));
        }
    }
    for d in &decl_lines {
        let _ = writeln!(src, "{};", d.trim_end_matches(';'));
    }
    let _ = writeln!(src, "\nset H = {{}};");
    let _ = writeln!(src, "set I = {{{}}};", hidden.join(", "));
    for a in actors {
        let _ = writeln!(src);
        for (s, b) in &a.equations {
            let _ = writeln!(src, "proc {s} = {};", replace_spawns(b, &a.creations));
        }
    }
    let _ = writeln!(src);
    for (s, b) in spec {
        let _ = writeln!(src, "proc {s} = {b};");
    }
    let roots: Vec<&str> = actors.iter().map(|a| a.initial()).collect();
    let _ = writeln!(src, "\nsystem = hide(I, encap(H, {}));", roots.join(" || "));
    let _ = writeln!(src, "spec = {};", spec.first().map(|s| s.0).unwrap_or("delta"));

    let model = parse_model(&src)?;
    let h = model.set("H").unwrap_or_default();
    let i = model.set("I").unwrap_or_default();
    let system = model.system.clone().ok_or_else(|| Error::Invalid("no system".into()))?;
    let spec_t = model.spec_term.clone().ok_or_else(|| Error::Invalid("no spec".into()))?;
    Ok(SystemAssembly {
        name: name.into(),
        source: src,
        model,
        actors: actors.to_vec(),
        h,
        i,
        external,
        system,
        spec: spec_t,
    })
}

fn join(xs: &BTreeSet<Name>) -> String {
    xs.iter().map(|x| x.as_ref()).collect::<Vec<_>>().join(", ")
}

/// Both state spaces and the rooted branching verdict between them.
#[derive(Clone, Debug)]
pub struct Verification {
    pub verdict: Verdict,
    pub system: Lts,
    pub spec: Lts,
}

impl Verification {
    /// A trace witness is accepted by its side and refused by the other.
    pub fn witness_replays(&self) -> bool {
        match &self.verdict.witness {
            Witness::Trace { side, steps, last } => {
                let (a, b) = (Ts::from(&self.system), Ts::from(&self.spec));
                let (yes, no) = if *side == 1 { (&a, &b) } else { (&b, &a) };
                replay(yes, steps, last, true) && !replay(no, steps, last, true)
            }
            _ => false,
        }
    }
}

/// Rooted branching step bisimulation between two closed terms of a model; guard tests
/// stay as silent `eps` moves.
pub fn verify_terms(m: &Model, system: &T, spec: &T, bound: usize, jobs: usize) -> Result<Verification> {
    let opts = LtsOptions { bound, jobs, silent: Silent::KeepGuards };
    let sys = generate_lts(m, system, &opts)?;
    let sp = generate_lts(m, spec, &opts)?;
    let verdict = check_rbs(&Ts::from(&sys), &Ts::from(&sp));
    Ok(Verification { verdict, system: sys, spec: sp })
}

pub fn verify_external_behavior(a: &SystemAssembly, bound: usize) -> Result<Verification> {
    verify_terms(&a.model, &a.system, &a.spec, bound, 1)
}

/// Replays every transition of the unabstracted system, tracking pending messages per
/// mailbox from the labels alone: a receive must consume an earlier send.
pub fn check_send_before_receive(a: &SystemAssembly, bound: usize) -> Result<std::result::Result<(), String>> {
    let lts = generate_lts(&a.model, &a.unhidden()?, &LtsOptions { bound, jobs: 1, silent: Silent::KeepGuards })?;
    let succ = lts.successors();
    type Pending = BTreeMap<(String, Name), u32>;
    let mut seen: Vec<Option<Pending>> = vec![None; lts.num_states()];
    seen[lts.initial] = Some(Pending::new());
    let mut todo = vec![lts.initial];
    while let Some(s) = todo.pop() {
        let cur = seen[s].clone().unwrap_or_default();
        for (label, d) in &succ[s] {
            let mut next = cur.clone();
            if let StepLabel::Visible(acts) = label {
                for act in acts.iter().filter(|x| x.args.len() == 1) {
                    if let Some(('r', mb)) = channel(&act.name) {
                        if a.model.mail_binding(act).is_some() {
                            let c = next.entry((mb.to_string(), act.args[0].clone())).or_insert(0);
                            if *c == 0 {
                                return Ok(Err(format!("{act} in state {s} has no pending send")));
                            }
                            *c -= 1;
                        }
                    }
                }
                for act in acts.iter().filter(|x| x.args.len() == 1) {
                    if let Some(('s', mb)) = channel(&act.name) {
                        if a.model.mail_binding(act).is_some() {
                            *next.entry((mb.to_string(), act.args[0].clone())).or_insert(0) += 1;
                        }
                    }
                }
            }
            next.retain(|_, c| *c > 0);
            match &seen[*d] {
                None => {
                    seen[*d] = Some(next);
                    todo.push(*d);
                }
                Some(p) if *p != next => {
                    return Ok(Err(format!("state {d} reached with different pending messages")));
                }
                Some(_) => {}
            }
        }
    }
    Ok(Ok(()))
}

/// Labels of the abstracted system that are neither silent nor declared external.
pub fn unexpected_actions(a: &SystemAssembly, lts: &Lts) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (_, l, _) in &lts.transitions {
        if let StepLabel::Visible(acts) = l {
            for x in acts {
                let r = x.to_string();
                if !a.external.contains(&r) {
                    out.insert(r);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, &str)]) -> BTreeMap<String, String> {
        kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn worker() -> ActorTemplate {
        ActorTemplate::new(
            "W_${i}",
            &["i"],
            &[
                ("W_${i}", "r_W_${i}(DI_W_${i}) . W_${i}_1"),
                ("W_${i}_1", "i_W_${i} . W_${i}_2"),
                ("W_${i}_2", "s_M(DO_W_${i}) . W_${i}"),
            ],
        )
        .constrained()
    }

    fn master() -> ActorTemplate {
        ActorTemplate::new(
            "M",
            &[],
            &[
                ("M", "r_M(DI_M) . M_1"),
                ("M_1", "(new(W_1) ||| new(W_2)) . M_2"),
                ("M_2", "(s_W_1(DI_W_1) ||| s_W_2(DI_W_2)) . M_3"),
                ("M_3", "(r_M(DO_W_1) ||| r_M(DO_W_2)) . M_4"),
                ("M_4", "i_M . s_O(DO_M) . M"),
            ],
        )
    }

    fn assembly(order: &[usize]) -> SystemAssembly {
        let mut actors = vec![instantiate_actor(&master(), &params(&[])).unwrap()];
        for i in ["1", "2"] {
            actors.push(instantiate_actor(&worker(), &params(&[("i", i)])).unwrap());
        }
        let actors: Vec<_> = order.iter().map(|&k| actors[k].clone()).collect();
        compose_system("toy", &actors, &["r_M(DI_M)"], &["O"], &[("Spec", "r_M(DI_M) . s_O(DO_M) . Spec")]).unwrap()
    }

    #[test]
    fn worker_instantiates_to_three_equations() {
        let w = instantiate_actor(&worker(), &params(&[("i", "1")])).unwrap();
        assert_eq!(w.equations.len(), 3);
        assert_eq!(w.equations[2].1, "s_M(DO_W_1) . W_1");
        assert!(matches!(instantiate_actor(&worker(), &params(&[])), Err(Error::UnboundParam(_))));
    }

    #[test]
    fn persistence_is_enforced() {
        let t = ActorTemplate::new("A", &[], &[("A", "r_A(x) . A_1"), ("A_1", "s_O(y)")]);
        assert!(matches!(instantiate_actor(&t, &params(&[])), Err(Error::PersistenceViolation(_))));
        let t = ActorTemplate::new("A", &[], &[("A", "r_A(x) . A_1"), ("A_1", "s_O(y) . A_1")]);
        assert!(matches!(instantiate_actor(&t, &params(&[])), Err(Error::PersistenceViolation(_))));
        let t = ActorTemplate::new("A", &[], &[("A", "new(B) . A")]).constrained();
        assert!(instantiate_actor(&t, &params(&[])).is_err());
    }

    #[test]
    fn composition_checks_mailboxes() {
        let w = instantiate_actor(&worker(), &params(&[("i", "1")])).unwrap();
        let e = compose_system("x", &[w.clone(), w.clone()], &[], &["O"], &[]).unwrap_err();
        assert!(matches!(e, Error::DuplicateMailbox(_)));
        let e = compose_system("x", &[w], &[], &["O"], &[]).unwrap_err();
        assert!(matches!(e, Error::DanglingSend(_)), "{e:?}");
    }

    #[test]
    fn toy_system_shows_desired_behaviour() {
        let a = assembly(&[0, 1, 2]);
        assert!(a.i.contains_name("i_M"));
        assert!(a.i.contains(&Action::new("r_M", &["DO_W_1"])));
        assert!(!a.i.contains(&Action::new("r_M", &["DI_M"])));
        assert!(a.h.items.is_empty());
        let v = verify_external_behavior(&a, 10_000).unwrap();
        assert!(v.verdict.related, "{:?}", v.verdict.witness);
        assert!(unexpected_actions(&a, &v.system).is_empty());
        assert_eq!(check_send_before_receive(&a, 10_000).unwrap(), Ok(()));
        for order in [[2, 0, 1], [1, 2, 0]] {
            assert!(verify_external_behavior(&assembly(&order), 10_000).unwrap().verdict.related);
        }
    }

    #[test]
    fn missing_reply_deadlocks() {
        let a = assembly(&[0, 1, 2]);
        let src = a.source.replace("proc W_2_2 = s_M(DO_W_2) . W_2;", "proc W_2_2 = i_W_2 . W_2;");
        let m = parse_model(&src).unwrap();
        let v = verify_terms(&m, m.system.as_ref().unwrap(), m.spec_term.as_ref().unwrap(), 10_000, 1).unwrap();
        assert!(!v.verdict.related);
        assert!(v.witness_replays(), "{:?}", v.verdict.witness);
    }
}
