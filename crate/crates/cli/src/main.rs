use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use aptc_core::actor::verify_terms;
use aptc_core::cases::{build_case_study, list_case_studies, CaseStudyId};
use aptc_core::dsl::{compact, parse_model, parse_term, render_model};
use aptc_core::equiv::{
    check_hhp_bisimulation, check_hp_bisimulation, check_pomset_bisimulation, check_rbs, check_strong, Ts, Verdict,
};
use aptc_core::fuzz::soundness_fuzz;
use aptc_core::model::Model;
use aptc_core::pes::{self, build_pes};
use aptc_core::rewrite::{normalize_to_basic, DEFAULT_FUEL};
use aptc_core::sos::{self, check_guardedness, generate_lts, LtsOptions, Silent, DEFAULT_BOUND};
use aptc_core::term::T;
use aptc_core::Error;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

macro_rules! say {
    ($($t:tt)*) => { emit(&format!("{}\n", format!($($t)*))) };
}

#[derive(Parser)]
#[command(name = "aptc", version, about = "Truly concurrent process algebra toolkit")]
struct Cli {
    /// Worker threads for state-space generation.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Rel {
    Step,
    Pomset,
    Hp,
    Hhp,
    Rbs,
}

impl Rel {
    fn name(self) -> &'static str {
        match self {
            Rel::Step => "step",
            Rel::Pomset => "pomset",
            Rel::Hp => "hp",
            Rel::Hhp => "hhp",
            Rel::Rbs => "rbs",
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a model and print its canonical form.
    Parse { file: PathBuf },
    /// Rewrite a term to a basic term with the axioms.
    Normalize {
        file: PathBuf,
        #[arg(long)]
        term: String,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
    },
    /// Generate the step transition system of a term.
    Lts {
        file: PathBuf,
        #[arg(long)]
        term: String,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write DOT instead of AUT.
        #[arg(long)]
        dot: bool,
        /// Keep guard tests as `eps` transitions.
        #[arg(long)]
        keep_guards: bool,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: usize,
    },
    /// Build the prime event structure of a recursion-free term.
    Pes {
        file: PathBuf,
        #[arg(long)]
        term: String,
        #[arg(long)]
        dot: bool,
    },
    /// Decide an equivalence between two terms.
    Check {
        file: PathBuf,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, value_enum)]
        rel: Rel,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: usize,
    },
    /// Compare a model's system with its spec.
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: usize,
        #[arg(long, value_enum, default_value_t = Rel::Rbs)]
        rel: Rel,
        /// Compare against this process instead of the declared spec.
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Random soundness check of the axiom tables.
    Fuzz {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        size: usize,
        #[arg(long)]
        json: bool,
    },
    /// List or run the bundled case studies.
    Examples {
        /// Run one case study, or all of them when no id is given.
        #[arg(long, num_args = 0..=1, default_missing_value = "all")]
        run: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: usize,
        #[arg(long)]
        json: bool,
    },
}

enum Failure {
    Usage(String),
    Analysis(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Analysis(e)
    }
}

type Out = Result<bool, Failure>;

struct Ui {
    color: bool,
}

impl Ui {
    fn new() -> Ui {
        let off = std::env::var("APTC_COLOR").is_ok_and(|v| v == "0");
        Ui { color: !off && std::io::stdout().is_terminal() }
    }

    fn verdict(&self, related: bool) -> String {
        let (word, code) = if related { ("related", "32") } else { ("not related", "31") };
        if self.color {
            format!("\x1b[{code}m{word}\x1b[0m")
        } else {
            word.to_string()
        }
    }
}

fn read_model(file: &Path) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
    let m = parse_model(&text)?;
    for spec in &m.specs {
        let g = check_guardedness(spec, &m);
        if !g.guarded {
            let var = g.cycle.first().cloned().unwrap_or_default();
            return Err(Error::UnguardedRecursion { spec: spec.name.to_string(), var }.into());
        }
    }
    Ok(m)
}

fn print_json(v: &Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).unwrap_or_default()));
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}



fn lts(m: &Model, t: &T, bound: usize, jobs: usize, silent: Silent) -> Result<sos::Lts, Error> {
    generate_lts(m, t, &LtsOptions { bound, jobs, silent })
}

/// The relation decided on two terms; rbs keeps guard tests as silent moves.
fn decide(m: &Model, l: &T, r: &T, rel: Rel, bound: usize, jobs: usize) -> Result<(Verdict, Value), Error> {
    match rel {
        Rel::Step | Rel::Rbs => {
            let silent = if rel == Rel::Step { Silent::CollapseAll } else { Silent::KeepGuards };
            let (a, b) = (lts(m, l, bound, jobs, silent)?, lts(m, r, bound, jobs, silent)?);
            let v = if rel == Rel::Step { check_strong(&Ts::from(&a), &Ts::from(&b)) } else { check_rbs(&Ts::from(&a), &Ts::from(&b)) };
            Ok((v, json!({"left": a.num_states(), "right": b.num_states()})))
        }
        _ => {
            let (p, q) = (build_pes(l, m)?, build_pes(r, m)?);
            let v = match rel {
                Rel::Pomset => check_pomset_bisimulation(&p, &q)?,
                Rel::Hp => check_hp_bisimulation(&p, &q)?,
                _ => check_hhp_bisimulation(&p, &q)?,
            };
            Ok((v, json!({"left": p.len(), "right": q.len()})))
        }
    }
}

fn report(ui: &Ui, header: Value, v: &Verdict, sizes: Value, json_out: bool) {
    if json_out {
        let mut out = v.to_json(false);
        if let (Value::Object(o), Value::Object(h)) = (&mut out, header) {
            o.extend(h);
            o.insert("sizes".into(), sizes);
        }
        print_json(&out);
        return;
    }
    say!("{}", ui.verdict(v.related));
    match &v.witness {
        aptc_core::equiv::Witness::Trace { side, steps, last } => {
            let path = if steps.is_empty() { String::from("(initial)") } else { steps.join(" ") };
            say!("witness: after {path}, only side {side} can do {last}");
        }
        aptc_core::equiv::Witness::Note(s) => say!("witness: {s}"),
        _ => {}
    }
}

fn run(cli: Cli) -> Out {
    let ui = Ui::new();
    let jobs = cli.jobs.max(1);
    match cli.cmd {
        Cmd::Parse { file } => {
            let m = read_model(&file)?;
            emit(&render_model(&m));
            Ok(true)
        }
        Cmd::Normalize { file, term, trace, json: json_out } => {
            let m = read_model(&file)?;
            let t = parse_term(&m, &term)?;
            let (nf, proof) = normalize_to_basic(&t, &m, DEFAULT_FUEL)?;
            if json_out {
                print_json(&proof.to_json());
            } else {
                if trace {
                    emit(&proof.render());
                }
                say!("{}", compact(&nf));
            }
            Ok(true)
        }
        Cmd::Lts { file, term, out, dot, keep_guards, bound } => {
            let m = read_model(&file)?;
            let t = parse_term(&m, &term)?;
            let silent = if keep_guards { Silent::KeepGuards } else { Silent::CollapseAll };
            let l = lts(&m, &t, bound, jobs, silent)?;
            let text = if dot { sos::dot(&l) } else { sos::aut(&l) };
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
                None => emit(&text),
            }
            Ok(true)
        }
        Cmd::Pes { file, term, dot } => {
            let m = read_model(&file)?;
            let t = parse_term(&m, &term)?;
            let p = build_pes(&t, &m)?;
            if dot {
                emit(&pes::dot(&p));
            } else {
                for (i, l) in p.labels.iter().enumerate() {
                    let causes: Vec<String> = pes::members_of(p.causes[i]).iter().map(|c| format!("e{c}")).collect();
                    let conflicts: Vec<String> = pes::members_of(p.conflicts[i]).iter().map(|c| format!("e{c}")).collect();
                    say!("e{i} {l} causes [{}] conflicts [{}]", causes.join(","), conflicts.join(","));
                }
            }
            Ok(true)
        }
        Cmd::Check { file, left, right, rel, json: json_out, bound } => {
            let m = read_model(&file)?;
            let (l, r) = (parse_term(&m, &left)?, parse_term(&m, &right)?);
            let (v, sizes) = decide(&m, &l, &r, rel, bound, jobs)?;
            let header = json!({"command": "check", "relation": rel.name(), "left": compact(&l), "right": compact(&r)});
            report(&ui, header, &v, sizes, json_out);
            Ok(v.related)
        }
        Cmd::Verify { file, bound, rel, spec, json: json_out } => {
            let m = read_model(&file)?;
            let system = m.system.clone().ok_or_else(|| Failure::Usage("model declares no system".into()))?;
            let spec_term = match &spec {
                Some(name) if m.proc(name).is_some() => parse_term(&m, name)?,
                Some(name) => return Err(Failure::Usage(format!("no process {name}"))),
                None => m.spec_term.clone().ok_or_else(|| Failure::Usage("model declares no spec".into()))?,
            };
            let (v, sizes) = if rel == Rel::Rbs {
                let ver = verify_terms(&m, &system, &spec_term, bound, jobs)?;
                let sizes = json!({"left": ver.system.num_states(), "right": ver.spec.num_states()});
                (ver.verdict, sizes)
            } else {
                decide(&m, &system, &spec_term, rel, bound, jobs)?
            };
            let header = json!({
                "command": "verify",
                "model": m.name.to_string(),
                "relation": rel.name(),
                "spec": spec.unwrap_or_else(|| compact(&spec_term)),
            });
            report(&ui, header, &v, sizes, json_out);
            Ok(v.related)
        }
        Cmd::Fuzz { seed, count, size, json: json_out } => {
            let r = soundness_fuzz(seed, count, size)?;
            if json_out {
                print_json(&r.to_json());
            } else {
                for t in &r.tables {
                    say!("{:<6} {:>6} instances  {} violations", t.table.tag(), t.instances, t.violations.len());
                    for v in &t.violations {
                        say!("  {}: {} vs {} ({})", v.axiom, v.lhs, v.rhs, v.relation);
                    }
                }
                say!("{}", if r.is_sound() { "sound" } else { "violations found" });
            }
            Ok(r.is_sound())
        }
        Cmd::Examples { run, bound, json: json_out } => examples(&ui, run, bound, jobs, json_out),
    }
}

fn examples(ui: &Ui, run: Option<String>, bound: usize, jobs: usize, json_out: bool) -> Out {
    let catalog = list_case_studies();
    let Some(which) = run else {
        if json_out {
            let rows: Vec<Value> = catalog
                .iter()
                .map(|e| {
                    json!({"id": e.id.to_string(), "file": e.file, "expected_related": e.expected_related,
                           "golden_states": e.golden_states, "mutation": e.mutation.description})
                })
                .collect();
            print_json(&json!({"case_studies": rows}));
        } else {
            for e in &catalog {
                say!("{:<22} {:<26} {} states", e.id.to_string(), e.file, e.golden_states);
            }
        }
        return Ok(true);
    };
    let ids: Vec<CaseStudyId> = if which == "all" {
        catalog.iter().map(|e| e.id).collect()
    } else {
        vec![which.parse::<CaseStudyId>().map_err(|e| Failure::Usage(e.to_string()))?]
    };
    let mut all_ok = true;
    let mut rows = Vec::new();
    for id in ids {
        let start = Instant::now();
        let c = build_case_study(id)?;
        let v = c.verify(bound, jobs)?;
        let entry = catalog.iter().find(|e| e.id == id);
        let ok = entry.map_or(v.verdict.related, |e| e.expected_related == v.verdict.related);
        all_ok &= ok;
        let golden = entry.map(|e| e.golden_states);
        if json_out {
            rows.push(json!({
                "id": id.to_string(),
                "related": v.verdict.related,
                "expected_related": entry.map(|e| e.expected_related),
                "system_states": v.system.num_states(),
                "spec_states": v.spec.num_states(),
                "golden_states": golden,
            }));
        } else {
            let gold = match golden {
                Some(g) if g == v.system.num_states() => String::from("golden"),
                Some(g) => format!("golden {g}"),
                None => String::new(),
            };
            say!(
                "{:<22} {:<12} {:>7} states {:<12} {:>8.1} ms",
                id.to_string(),
                ui.verdict(v.verdict.related),
                v.system.num_states(),
                gold,
                start.elapsed().as_secs_f64() * 1000.0
            );
        }
    }
    if json_out {
        print_json(&json!({"runs": rows}));
    }
    Ok(all_ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let code = match run(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Analysis(e)) => {
            eprintln!("error: {e}");
            3
        }
    };
    let _ = std::io::stdout().flush();
    ExitCode::from(code)
}
