use aptc_core::cases::{build_case_study, CaseStudyId};
use aptc_core::dsl::{parse_model, parse_term};
use aptc_core::enumerate::{check_hierarchy, enumerate_terms, enumeration_model};
use aptc_core::equiv::{check_rbs, Ts};
use aptc_core::pes::build_pes;
use aptc_core::rewrite::{normalize_to_basic, DEFAULT_FUEL};
use aptc_core::sos::{generate_lts, LtsOptions, Silent};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn state_space(c: &mut Criterion) {
    let abp = build_case_study(CaseStudyId::Abp).unwrap();
    let gfs = build_case_study(CaseStudyId::Gfs { n: 4 }).unwrap();
    let opts = LtsOptions { silent: Silent::KeepGuards, ..LtsOptions::default() };
    c.bench_function("lts abp", |b| b.iter(|| generate_lts(&abp.model, black_box(&abp.system), &opts).unwrap()));
    c.bench_function("lts gfs(4)", |b| b.iter(|| generate_lts(&gfs.model, black_box(&gfs.system), &opts).unwrap()));
    let par = LtsOptions { jobs: 4, ..opts.clone() };
    c.bench_function("lts gfs(4) jobs 4", |b| b.iter(|| generate_lts(&gfs.model, black_box(&gfs.system), &par).unwrap()));
}

fn equivalence(c: &mut Criterion) {
    let qos = build_case_study(CaseStudyId::QosWsoe).unwrap();
    let opts = LtsOptions { silent: Silent::KeepGuards, ..LtsOptions::default() };
    let sys = Ts::from(&generate_lts(&qos.model, &qos.system, &opts).unwrap());
    let spec = Ts::from(&generate_lts(&qos.model, &qos.spec, &opts).unwrap());
    c.bench_function("rbs qos-wsoe", |b| b.iter(|| check_rbs(black_box(&sys), black_box(&spec))));
    let m = enumeration_model();
    let terms = enumerate_terms(4, false);
    c.bench_function("hierarchy size 4", |b| b.iter(|| check_hierarchy(black_box(&terms), &m)));
}

fn rewriting(c: &mut Criterion) {
    let m = parse_model("model r; act a, b, c, d; comm a | b = c;").unwrap();
    let t = parse_term(&m, "(a + b) . (c ||| d) || (a . b)").unwrap();
    c.bench_function("normalize", |b| b.iter(|| normalize_to_basic(black_box(&t), &m, DEFAULT_FUEL).unwrap()));
    let p = parse_term(&m, "(a . b + c) ||| (d + a) . b").unwrap();
    c.bench_function("build pes", |b| b.iter(|| build_pes(black_box(&p), &m).unwrap()));
}

criterion_group!(benches, state_space, equivalence, rewriting);
criterion_main!(benches);
