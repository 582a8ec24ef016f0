use std::path::PathBuf;
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn aptc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aptc")).args(args).current_dir(root()).env("APTC_COLOR", "0").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn schema(name: &str) -> JSONSchema {
    let text = std::fs::read_to_string(root().join("schemas").join(name)).unwrap();
    JSONSchema::compile(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(s: &JSONSchema, o: &Output) -> Value {
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    if let Err(errs) = s.validate(&v) {
        let msgs: Vec<String> = errs.map(|e| format!("{e} at {}", e.instance_path)).collect();
        panic!("schema violations: {msgs:?}\n{v}");
    }
    v
}

fn model(text: &str) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.aptc");
    std::fs::write(&p, text).unwrap();
    (dir, p.to_string_lossy().into_owned())
}

#[test]
fn normalize_distributes_choice() {
    let (_d, f) = model("model f; act a, b, c;");
    let o = aptc(&["normalize", &f, "--term", "(a+b).c"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "a.c+b.c\n");
    let traced = aptc(&["normalize", &f, "--term", "(a+b).c", "--trace"]);
    assert!(stdout(&traced).contains("A4"), "{}", stdout(&traced));
    assert_valid(&schema("trace.schema.json"), &aptc(&["normalize", &f, "--term", "(a+b).c", "--json"]));
}

#[test]
fn exit_codes() {
    let (_d, f) = model("model f; act a, b;");
    assert_eq!(aptc(&["check", &f, "--left", "a||b", "--right", "a.b+b.a", "--rel", "step"]).status.code(), Some(1));
    assert_eq!(aptc(&["check", &f, "--left", "a+a", "--right", "a", "--rel", "step"]).status.code(), Some(0));
    assert_eq!(aptc(&["check", &f, "--left", "a", "--rel", "step"]).status.code(), Some(2));
    assert_eq!(aptc(&["verify", &f, "--frobnicate"]).status.code(), Some(2));
    assert_eq!(aptc(&["parse", "no/such/file.aptc"]).status.code(), Some(2));
    assert_eq!(aptc(&["verify", "models/gfs.aptc", "--spec", "Nope"]).status.code(), Some(2));
    assert_eq!(aptc(&["verify", "models/gfs.aptc", "--bound", "5"]).status.code(), Some(3));
    let (_e, g) = model("model u; act a; proc X = tau . X; system = a; spec = a;");
    let o = aptc(&["verify", &g]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unguarded"));
}

#[test]
fn parse_output_is_a_fixed_point() {
    for f in ["abp", "abp-shadow", "qos-wsoe"] {
        let once = stdout(&aptc(&["parse", &format!("models/{f}.aptc")]));
        let (_d, p) = model(&once);
        assert_eq!(stdout(&aptc(&["parse", &p])), once, "{f}");
    }
}

#[test]
fn lts_and_pes_exports() {
    let (d, f) = model("model f; act a, b, c;");
    let out = d.path().join("x.aut");
    let o = aptc(&["lts", &f, "--term", "a.b", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let aut = std::fs::read_to_string(&out).unwrap();
    assert_eq!(aut, "des (0,3,4)\n(0,\"{a}\",1)\n(1,\"{b}\",2)\n(2,\"tick\",3)\n");
    assert_eq!(stdout(&aptc(&["lts", &f, "--term", "a.b"])), aut);
    assert!(stdout(&aptc(&["lts", &f, "--term", "a|||b", "--dot"])).starts_with("digraph lts"));
    let pes = stdout(&aptc(&["pes", &f, "--term", "a.b+c", "--dot"]));
    assert!(pes.starts_with("digraph pes") && pes.contains("e0 -> e1"));
}

#[test]
fn verify_reports_match_schema_and_goldens() {
    let s = schema("verdict.schema.json");
    for f in ["abp", "abp-shadow", "mapreduce", "gfs", "cloud-rm", "buyingbooks", "qos-wsoe"] {
        let o = aptc(&["verify", &format!("models/{f}.aptc"), "--json"]);
        let v = assert_valid(&s, &o);
        let golden = std::fs::read(root().join(format!("tests/golden/verify-{f}.json"))).unwrap();
        assert_eq!(o.stdout, golden, "{f}");
        assert_eq!(o.status.code(), Some(if v["related"] == Value::Bool(true) { 0 } else { 1 }));
    }
    let o = aptc(&["verify", "models/abp-shadow.aptc", "--spec", "SpecCommit", "--json"]);
    assert_valid(&s, &o);
    assert_eq!(o.stdout, std::fs::read(root().join("tests/golden/verify-abp-shadow-commit.json")).unwrap());
    let (_d, f) = model("model f; act a, b;");
    for rel in ["step", "pomset", "hp", "hhp", "rbs"] {
        assert_valid(&s, &aptc(&["check", &f, "--left", "a|||b", "--right", "a.b", "--rel", rel, "--json"]));
    }
}

#[test]
fn examples_and_fuzz_reports() {
    let s = schema("examples.schema.json");
    assert_valid(&s, &aptc(&["examples", "--json"]));
    let o = aptc(&["examples", "--run", "--json"]);
    assert_valid(&s, &o);
    assert_eq!(o.stdout, std::fs::read(root().join("tests/golden/examples.json")).unwrap());
    let one = aptc(&["examples", "--run", "gfs(3)", "--json"]);
    assert_eq!(one.status.code(), Some(0));
    assert_valid(&s, &one);
    assert_eq!(aptc(&["examples", "--run", "paxos"]).status.code(), Some(2));
    let f = aptc(&["fuzz", "--seed", "7", "--count", "20", "--json"]);
    assert_valid(&schema("fuzz.schema.json"), &f);
    assert_eq!(f.stdout, aptc(&["fuzz", "--seed", "7", "--count", "20", "--json", "--jobs", "4"]).stdout);
}

#[test]
fn color_can_be_disabled() {
    let o = aptc(&["examples", "--run", "gfs"]);
    assert!(!stdout(&o).contains('\x1b'));
    assert!(stdout(&o).contains("related"));
}
