use std::path::PathBuf;
use std::time::{Duration, Instant};

use aptc_core::actor::{check_send_before_receive, compose_system, unexpected_actions, verify_external_behavior};
use aptc_core::cases::{build_case_study, catalog_entry, list_case_studies, mapreduce, CaseStudyId};
use aptc_core::sos::DEFAULT_BOUND;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn bundled_files_match_builders() {
    for e in list_case_studies() {
        let on_disk = std::fs::read_to_string(root().join(e.file)).unwrap();
        let c = build_case_study(e.id).unwrap();
        assert_eq!(on_disk, c.source, "{} is stale; regenerate it from the builder", e.file);
    }
}

#[test]
fn catalog_shape() {
    let cat = list_case_studies();
    assert_eq!(cat.len(), 7);
    assert!(cat.iter().all(|e| e.expected_related));
    assert_eq!(catalog_entry(CaseStudyId::Gfs { n: 5 }).unwrap().id, CaseStudyId::Gfs { n: 2 });
}

#[test]
fn ids_parse_and_print() {
    assert_eq!("mapreduce".parse::<CaseStudyId>().unwrap(), CaseStudyId::MapReduce { m: 2, n: 1 });
    assert_eq!("mapreduce(m=3,n=2)".parse::<CaseStudyId>().unwrap(), CaseStudyId::MapReduce { m: 3, n: 2 });
    assert_eq!("gfs(4)".parse::<CaseStudyId>().unwrap().to_string(), "gfs(n=4)");
    assert!("gfs(0)".parse::<CaseStudyId>().is_err());
    assert!("abp(2)".parse::<CaseStudyId>().is_err());
    assert!("paxos".parse::<CaseStudyId>().is_err());
}

#[test]
fn golden_state_counts() {
    for e in list_case_studies() {
        let v = build_case_study(e.id).unwrap().verify(DEFAULT_BOUND, 1).unwrap();
        assert_eq!(v.system.num_states(), e.golden_states, "{}", e.id);
    }
}

#[test]
fn actor_systems_show_their_external_behaviour() {
    for e in list_case_studies().into_iter().skip(2) {
        let start = Instant::now();
        let c = build_case_study(e.id).unwrap();
        let a = c.assembly.as_ref().unwrap();
        let v = verify_external_behavior(a, DEFAULT_BOUND).unwrap();
        assert!(v.verdict.related, "{}: {:?}", e.id, v.verdict.witness);
        assert!(start.elapsed() < Duration::from_secs(60));
        assert_eq!(check_send_before_receive(a, DEFAULT_BOUND).unwrap(), Ok(()), "{}", e.id);
        assert!(unexpected_actions(a, &v.system).is_empty(), "{}", e.id);
        assert!(a.h.items.is_empty());
    }
}

#[test]
fn mutations_flip_the_verdict() {
    for e in list_case_studies().into_iter().skip(2) {
        let c = build_case_study(e.id).unwrap();
        let v = c.mutated(&e.mutation).unwrap().verify(DEFAULT_BOUND, 1).unwrap();
        assert!(!v.verdict.related, "{}: mutation `{}` went unnoticed", e.id, e.mutation.description);
        assert!(v.witness_replays(), "{}", e.id);
    }
}

#[test]
fn abp_shadow_commits_to_its_output_after_reading() {
    let c = build_case_study(CaseStudyId::AbpShadow).unwrap().with_spec("SpecCommit").unwrap();
    assert!(c.verify(DEFAULT_BOUND, 1).unwrap().verdict.related);
    let e = catalog_entry(CaseStudyId::AbpShadow).unwrap();
    let v = c.mutated(&e.mutation).unwrap().verify(DEFAULT_BOUND, 1).unwrap();
    assert!(!v.verdict.related && v.witness_replays());
}

#[test]
fn verdict_survives_actor_permutation() {
    let a = mapreduce(2, 1).unwrap();
    let mut actors = a.actors.clone();
    actors.reverse();
    let b = compose_system("mapreduce", &actors, &["r_Mas(DI_Mas)"], &["O"], &[("Spec", "r_Mas(DI_Mas) . s_O(DO_Mas) . Spec")])
        .unwrap();
    assert!(verify_external_behavior(&b, DEFAULT_BOUND).unwrap().verdict.related);
}

#[test]
fn larger_parameters_still_verify() {
    for id in ["mapreduce(3,2)", "gfs(3)", "cloud-rm(3)"] {
        let c = build_case_study(id.parse().unwrap()).unwrap();
        assert!(c.verify(DEFAULT_BOUND, 2).unwrap().verdict.related, "{id}");
    }
}
