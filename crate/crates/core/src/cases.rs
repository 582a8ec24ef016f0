//! Bundled case studies: the two alternating-bit models and five actor systems, each
//! with the external behaviour its chapter claims.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::actor::{compose_system, instantiate_actor, verify_terms, ActorInstance, ActorTemplate, SystemAssembly, Verification};
use crate::dsl::{parse_model, parse_term};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::term::T;

pub const ABP_SOURCE: &str = include_str!("../../../models/abp.aptc");
pub const ABP_SHADOW_SOURCE: &str = include_str!("../../../models/abp-shadow.aptc");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseStudyId {
    Abp,
    AbpShadow,
    MapReduce { m: usize, n: usize },
    Gfs { n: usize },
    CloudRm { n: usize },
    BuyingBooks,
    QosWsoe,
}

impl CaseStudyId {
    pub fn defaults() -> [CaseStudyId; 7] {
        [
            CaseStudyId::Abp,
            CaseStudyId::AbpShadow,
            CaseStudyId::MapReduce { m: 2, n: 1 },
            CaseStudyId::Gfs { n: 2 },
            CaseStudyId::CloudRm { n: 2 },
            CaseStudyId::BuyingBooks,
            CaseStudyId::QosWsoe,
        ]
    }

    /// Short name, also the file stem under `models/`.
    pub fn slug(&self) -> &'static str {
        match self {
            CaseStudyId::Abp => "abp",
            CaseStudyId::AbpShadow => "abp-shadow",
            CaseStudyId::MapReduce { .. } => "mapreduce",
            CaseStudyId::Gfs { .. } => "gfs",
            CaseStudyId::CloudRm { .. } => "cloud-rm",
            CaseStudyId::BuyingBooks => "buyingbooks",
            CaseStudyId::QosWsoe => "qos-wsoe",
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CaseStudyId::MapReduce { m, n } => m >= 1 && n >= 1,
            CaseStudyId::Gfs { n } | CaseStudyId::CloudRm { n } => n >= 1,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("{self}: parameters must be at least 1")))
        }
    }
}

impl fmt::Display for CaseStudyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseStudyId::MapReduce { m, n } => write!(f, "mapreduce(m={m},n={n})"),
            CaseStudyId::Gfs { n } => write!(f, "gfs(n={n})"),
            CaseStudyId::CloudRm { n } => write!(f, "cloud-rm(n={n})"),
            other => f.write_str(other.slug()),
        }
    }
}

/// Accepts `mapreduce`, `mapreduce(3,1)`, `mapreduce(m=3,n=1)`, `gfs(4)` and so on.
impl FromStr for CaseStudyId {
    type Err = Error;
    fn from_str(s: &str) -> Result<CaseStudyId> {
        let s = s.trim();
        let (head, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(Error::Invalid(format!("bad case study `{s}`"))),
            None => (s, None),
        };
        let mut nums = Vec::new();
        if let Some(a) = args {
            for part in a.split(',') {
                let v = part.rsplit('=').next().unwrap_or("").trim();
                nums.push(v.parse::<usize>().map_err(|_| Error::Invalid(format!("bad parameter `{part}`")))?);
            }
        }
        let id = match (head, nums.as_slice()) {
            ("abp", []) => CaseStudyId::Abp,
            ("abp-shadow", []) => CaseStudyId::AbpShadow,
            ("mapreduce", []) => CaseStudyId::MapReduce { m: 2, n: 1 },
            ("mapreduce", [m, n]) => CaseStudyId::MapReduce { m: *m, n: *n },
            ("gfs", []) => CaseStudyId::Gfs { n: 2 },
            ("gfs", [n]) => CaseStudyId::Gfs { n: *n },
            ("cloud-rm", []) => CaseStudyId::CloudRm { n: 2 },
            ("cloud-rm", [n]) => CaseStudyId::CloudRm { n: *n },
            ("buyingbooks", []) => CaseStudyId::BuyingBooks,
            ("qos-wsoe", []) => CaseStudyId::QosWsoe,
            _ => return Err(Error::Invalid(format!("unknown case study `{s}`"))),
        };
        id.validate()?;
        Ok(id)
    }
}

#[derive(Clone, Debug)]
pub struct CaseStudy {
    pub id: CaseStudyId,
    pub source: String,
    pub model: Model,
    /// Present for the actor systems.
    pub assembly: Option<SystemAssembly>,
    pub system: T,
    pub spec: T,
}

impl CaseStudy {
    pub fn verify(&self, bound: usize, jobs: usize) -> Result<Verification> {
        verify_terms(&self.model, &self.system, &self.spec, bound, jobs)
    }

    /// Compares against another process of the same model instead of the declared spec.
    pub fn with_spec(mut self, proc_name: &str) -> Result<CaseStudy> {
        if self.model.proc(proc_name).is_none() {
            return Err(Error::Invalid(format!("{}: no process {proc_name}", self.id)));
        }
        self.spec = parse_term(&self.model, proc_name)?;
        Ok(self)
    }

    /// The same study with one textual edit applied to its source.
    pub fn mutated(&self, m: &Mutation) -> Result<CaseStudy> {
        let mut c = from_source(self.id, &m.apply(&self.source)?)?;
        if self.model.spec_term.as_ref() != Some(&self.spec) {
            c.spec = self.spec.clone();
        }
        Ok(c)
    }
}

fn from_source(id: CaseStudyId, source: &str) -> Result<CaseStudy> {
    let model = parse_model(source)?;
    let system = model.system.clone().ok_or_else(|| Error::Invalid("model has no system".into()))?;
    let spec = model.spec_term.clone().ok_or_else(|| Error::Invalid("model has no spec".into()))?;
    Ok(CaseStudy { id, source: source.to_string(), model, assembly: None, system, spec })
}

fn from_assembly(id: CaseStudyId, a: SystemAssembly) -> CaseStudy {
    CaseStudy {
        id,
        source: a.source.clone(),
        model: a.model.clone(),
        system: a.system.clone(),
        spec: a.spec.clone(),
        assembly: Some(a),
    }
}

pub fn build_case_study(id: CaseStudyId) -> Result<CaseStudy> {
    id.validate()?;
    match id {
        CaseStudyId::Abp => from_source(id, ABP_SOURCE),
        CaseStudyId::AbpShadow => from_source(id, ABP_SHADOW_SOURCE),
        CaseStudyId::MapReduce { m, n } => Ok(from_assembly(id, mapreduce(m, n)?)),
        CaseStudyId::Gfs { n } => Ok(from_assembly(id, gfs(n)?)),
        CaseStudyId::CloudRm { n } => Ok(from_assembly(id, cloud_rm(n)?)),
        CaseStudyId::BuyingBooks => Ok(from_assembly(id, buying_books()?)),
        CaseStudyId::QosWsoe => Ok(from_assembly(id, qos_wsoe()?)),
    }
}

// ---------------------------------------------------------------- actor systems

fn params(kv: &[(&str, &str)]) -> BTreeMap<String, String> {
    kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn fixed(name: &str, equations: &[(String, String)]) -> Result<ActorInstance> {
    let eqs: Vec<(&str, &str)> = equations.iter().map(|(s, b)| (s.as_str(), b.as_str())).collect();
    instantiate_actor(&ActorTemplate::new(name, &[], &eqs), &BTreeMap::new())
}

/// `x_1 ||| … ||| x_k`, parenthesized when there is more than one.
fn lockstep(parts: Vec<String>) -> String {
    if parts.len() == 1 {
        parts.into_iter().next().unwrap_or_default()
    } else {
        format!("({})", parts.join(" ||| "))
    }
}

fn each(k: usize, f: impl Fn(usize) -> String) -> String {
    lockstep((1..=k).map(f).collect())
}

fn eqs(list: &[(&str, String)]) -> Vec<(String, String)> {
    list.iter().map(|(s, b)| (s.to_string(), b.clone())).collect()
}

/// Receive, one local computation, reply: the shape shared by map, reduce and storage actors.
fn worker(name: &str, reply_to: &str) -> ActorTemplate {
    let n = name;
    ActorTemplate::new(
        &format!("{n}_${{i}}"),
        &["i"],
        &[
            (&format!("{n}_${{i}}"), &format!("r_{n}_${{i}}(DI_{n}_${{i}}) . {n}_${{i}}_1")),
            (&format!("{n}_${{i}}_1"), &format!("i_{n}_${{i}} . {n}_${{i}}_2")),
            (&format!("{n}_${{i}}_2"), &format!("s_{reply_to}(DO_{n}_${{i}}) . {n}_${{i}}")),
        ],
    )
    .constrained()
}

fn workers(t: &ActorTemplate, k: usize) -> Result<Vec<ActorInstance>> {
    (1..=k).map(|i| instantiate_actor(t, &params(&[("i", &i.to_string())]))).collect()
}

pub fn mapreduce(m: usize, n: usize) -> Result<SystemAssembly> {
    let mas = fixed(
        "Mas",
        &eqs(&[
            ("Mas", "r_Mas(DI_Mas) . Mas_1".into()),
            ("Mas_1", "i_Mas . Mas_2".into()),
            ("Mas_2", format!("{} . Mas_3", each(m, |i| format!("new(MapA_{i})")))),
            ("Mas_3", format!("{} . Mas_4", each(m, |i| format!("s_MapA_{i}(DI_MapA_{i})")))),
            ("Mas_4", format!("{} . Mas_5", each(m, |i| format!("r_Mas(DO_MapA_{i})")))),
            ("Mas_5", "i_Mas . Mas_6".into()),
            ("Mas_6", format!("{} . Mas_7", each(n, |i| format!("new(RA_{i})")))),
            ("Mas_7", format!("{} . Mas_8", each(n, |i| format!("s_RA_{i}(DI_RA_{i})")))),
            ("Mas_8", format!("{} . Mas_9", each(n, |i| format!("r_Mas(DO_RA_{i})")))),
            ("Mas_9", "i_Mas . Mas_10".into()),
            ("Mas_10", "s_O(DO_Mas) . Mas".into()),
        ]),
    )?;
    let mut actors = vec![mas];
    actors.extend(workers(&worker("MapA", "Mas"), m)?);
    actors.extend(workers(&worker("RA", "Mas"), n)?);
    compose_system(
        "mapreduce",
        &actors,
        &["r_Mas(DI_Mas)"],
        &["O"],
        &[("Spec", "r_Mas(DI_Mas) . s_O(DO_Mas) . Spec")],
    )
}

pub fn gfs(n: usize) -> Result<SystemAssembly> {
    let ca = fixed(
        "CA",
        &eqs(&[
            ("CA", "r_CA(DI_CA) . CA_1".into()),
            ("CA_1", "i_CA . CA_2".into()),
            ("CA_2", "s_Mas(DI_Mas) . CA_3".into()),
            ("CA_3", format!("{} . CA_4", each(n, |i| format!("r_CA(DO_CSA_{i})")))),
            ("CA_4", "i_CA . CA_5".into()),
            ("CA_5", "s_O(DO_CA) . CA".into()),
        ]),
    )?;
    let mas = fixed(
        "Mas",
        &eqs(&[
            ("Mas", "r_Mas(DI_Mas) . Mas_1".into()),
            ("Mas_1", "i_Mas . Mas_2".into()),
            ("Mas_2", format!("{} . Mas_3", each(n, |i| format!("new(CSA_{i})")))),
            ("Mas_3", format!("{} . Mas", each(n, |i| format!("s_CSA_{i}(DI_CSA_{i})")))),
        ]),
    )?;
    let mut actors = vec![ca, mas];
    actors.extend(workers(&worker("CSA", "CA"), n)?);
    compose_system("gfs", &actors, &["r_CA(DI_CA)"], &["O"], &[("Spec", "r_CA(DI_CA) . s_O(DO_CA) . Spec")])
}

pub fn cloud_rm(n: usize) -> Result<SystemAssembly> {
    let ca = fixed(
        "CA",
        &eqs(&[
            ("CA", "r_CA(DI_CA) . CA_1".into()),
            ("CA_1", "i_CA . CA_2".into()),
            ("CA_2", "s_RA(DI_RA) . CA_3".into()),
            ("CA_3", "r_CA(RS_RA) . CA_4".into()),
            ("CA_4", "i_CA . CA_5".into()),
            ("CA_5", "s_O(RS_CA) . CA_6".into()),
            ("CA_6", "r_CA(CR_RA) . CA_7".into()),
            ("CA_7", "i_CA . CA_8".into()),
            ("CA_8", "s_O(DO_CA) . CA".into()),
        ]),
    )?;
    let va = ActorTemplate::new(
        "VA_${i}",
        &["i"],
        &[
            ("VA_${i}", "r_VA_${i}(DI_VA_${i}) . VA_${i}_1"),
            ("VA_${i}_1", "i_VA_${i} . VA_${i}_2"),
            ("VA_${i}_2", "s_SA(RS_VA_${i}) . VA_${i}_3"),
            ("VA_${i}_3", "i_VA_${i} . VA_${i}_4"),
            ("VA_${i}_4", "s_RA(CR_VA_${i}) . VA_${i}"),
        ],
    )
    .constrained();
    let ra = fixed(
        "RA",
        &eqs(&[
            ("RA", "r_RA(DI_RA) . RA_1".into()),
            ("RA_1", "i_RA . RA_2".into()),
            ("RA_2", format!("{} . RA_3", each(n, |i| format!("new(VA_{i})")))),
            ("RA_3", format!("{} . RA_4", each(n, |i| format!("s_VA_{i}(DI_VA_{i})")))),
            ("RA_4", "r_RA(RS_SA) . RA_5".into()),
            ("RA_5", "i_RA . RA_6".into()),
            ("RA_6", "s_CA(RS_RA) . RA_7".into()),
            ("RA_7", format!("{} . RA_8", each(n, |i| format!("r_RA(CR_VA_{i})")))),
            ("RA_8", "i_RA . RA_9".into()),
            ("RA_9", "s_CA(CR_RA) . RA".into()),
        ]),
    )?;
    let sa = fixed(
        "SA",
        &eqs(&[
            ("SA", format!("{} . SA_1", each(n, |i| format!("r_SA(RS_VA_{i})")))),
            ("SA_1", "i_SA . SA_2".into()),
            ("SA_2", "s_RA(RS_SA) . SA".into()),
        ]),
    )?;
    let mut actors = vec![ca, ra, sa];
    actors.extend(workers(&va, n)?);
    compose_system(
        "cloud_rm",
        &actors,
        &["r_CA(DI_CA)"],
        &["O"],
        &[("Spec", "r_CA(DI_CA) . s_O(RS_CA) . s_O(DO_CA) . Spec")],
    )
}

/// Agent actor of an orchestration: forwards one message kind back to its orchestrator.
fn agent() -> ActorTemplate {
    ActorTemplate::new(
        "AA_${k}",
        &["k", "msg", "wso", "w"],
        &[
            ("AA_${k}", "r_AA_${k}(${msg}_WA${w}) . AA_${k}_1"),
            ("AA_${k}_1", "i_AA_${k} . AA_${k}_2"),
            ("AA_${k}_2", "s_${wso}(${msg}_AW${w}) . AA_${k}"),
        ],
    )
    .constrained()
}

/// `(s_1 . r_1)`-style numbered state chain `X_1 … X_k` returning to `X`.
fn chain(x: &str, first: &str, steps: &[&str]) -> Vec<(String, String)> {
    let mut out = vec![(x.to_string(), format!("{first} . {x}_1"))];
    for (i, s) in steps.iter().enumerate() {
        let next = if i + 1 == steps.len() { x.to_string() } else { format!("{x}_{}", i + 2) };
        out.push((format!("{x}_{}", i + 1), format!("{s} . {next}")));
    }
    out
}

fn initialized(x: &str, created: &[&str]) -> String {
    let news = lockstep(created.iter().map(|c| format!("new({c})")).collect());
    format!("([ini_{x} = F] -> {news} + [ini_{x} = T])")
}

pub fn buying_books() -> Result<SystemAssembly> {
    let mut actors = Vec::new();
    actors.push(fixed(
        "WSC",
        &chain(
            "WSC",
            "r_WSC(DI_WSC)",
            &[
                &initialized("WSC", &["WS_1", "WS_2"]),
                "i_WSC",
                "s_WS_1(ReBuyingBooks_WC_1)",
                "r_WSC(GetPShipB_WC_2)",
                "i_WSC",
                "s_O(DO_WSC)",
            ],
        ),
    )?);
    actors.push(fixed(
        "WS_1",
        &chain(
            "WS_1",
            "r_WS_1(ReBuyingBooks_WC_1)",
            &[
                &initialized("WS_1", &["WSO_1"]),
                "i_WS_1",
                "s_WSO_1(ReBuyingBooks_WW_1)",
                "r_WS_1(RequestLB_WW_1)",
                "i_WS_1",
                "s_WS_2(RequestLB_WW_12)",
                "r_WS_1(SendLB_WW_21)",
                "i_WS_1",
                "s_WSO_1(ReceiveLB_WW_1)",
                "r_WS_1(SendSB_WW_1)",
                "i_WS_1",
                "s_WS_2(SendSB_WW_12)",
                "r_WS_1(SendPB_WW_21)",
                "i_WS_1",
                "s_WSO_1(ReceivePB_WW_1)",
                "r_WS_1(PayB_WW_1)",
                "i_WS_1",
                "s_WS_2(PayB_WW_12)",
            ],
        ),
    )?);
    actors.push(fixed(
        "WS_2",
        &chain(
            "WS_2",
            "r_WS_2(RequestLB_WW_12)",
            &[
                &initialized("WS_2", &["WSO_2"]),
                "i_WS_2",
                "s_WSO_2(ReceiveRB_WW_2)",
                "r_WS_2(SendLB_WW_2)",
                "i_WS_2",
                "s_WS_1(SendLB_WW_21)",
                "r_WS_2(SendSB_WW_12)",
                "i_WS_2",
                "s_WSO_2(ReceiveSB_WW_2)",
                "r_WS_2(SendPB_WW_2)",
                "i_WS_2",
                "s_WS_1(SendPB_WW_21)",
                // the sender writes PayB_WW_12
                "r_WS_2(PayB_WW_12)",
                "i_WS_2",
                "s_WSO_2(GetPShipB_WW_2)",
                "r_WS_2(GetPShipB_WW_2)",
                "i_WS_2",
                "s_WSC(GetPShipB_WC_2)",
            ],
        ),
    )?);
    actors.push(fixed(
        "WSO_1",
        &chain(
            "WSO_1",
            "r_WSO_1(ReBuyingBooks_WW_1)",
            &[
                &initialized("WSO_1", &["AA_11", "AA_12", "AA_13", "AA_14", "AA_15"]),
                "i_WSO_1",
                "s_AA_11(RequestLB_WA_1)",
                "r_WSO_1(RequestLB_AW_1)",
                "i_WSO_1",
                "s_WS_1(RequestLB_WW_1)",
                "r_WSO_1(ReceiveLB_WW_1)",
                "i_WSO_1",
                "s_AA_12(ReceiveLB_WA_1)",
                "r_WSO_1(ReceiveLB_AW_1)",
                "i_WSO_1",
                "s_AA_13(SendSB_WA_1)",
                "r_WSO_1(SendSB_AW_1)",
                "i_WSO_1",
                "s_WS_1(SendSB_WW_1)",
                "r_WSO_1(ReceivePB_WW_1)",
                "i_WSO_1",
                "s_AA_14(ReceivePB_WA_1)",
                "r_WSO_1(ReceivePB_AW_1)",
                "i_WSO_1",
                "s_AA_15(PayB_WA_1)",
                "r_WSO_1(PayB_AW_1)",
                "i_WSO_1",
                "s_WS_1(PayB_WW_1)",
            ],
        ),
    )?);
    actors.push(fixed(
        "WSO_2",
        &chain(
            "WSO_2",
            "r_WSO_2(ReceiveRB_WW_2)",
            &[
                &initialized("WSO_2", &["AA_21", "AA_22", "AA_23", "AA_24", "AA_25"]),
                "i_WSO_2",
                "s_AA_21(ReceiveRB_WA_2)",
                "r_WSO_2(ReceiveRB_AW_2)",
                "i_WSO_2",
                "s_AA_22(SendLB_WA_2)",
                "r_WSO_2(SendLB_AW_2)",
                "i_WSO_2",
                "s_WS_2(SendLB_WW_2)",
                "r_WSO_2(ReceiveSB_WW_2)",
                "i_WSO_2",
                "s_AA_23(ReceiveSB_WA_2)",
                "r_WSO_2(ReceiveSB_AW_2)",
                "i_WSO_2",
                "s_AA_24(SendPB_WA_2)",
                "r_WSO_2(SendPB_AW_2)",
                "i_WSO_2",
                "s_WS_2(SendPB_WW_2)",
                // the sender writes GetPShipB_WW_2
                "r_WSO_2(GetPShipB_WW_2)",
                "i_WSO_2",
                "s_AA_25(GetPShipB_WA_2)",
                "r_WSO_2(GetPShipB_AW_2)",
                "i_WSO_2",
                "s_WS_2(GetPShipB_WW_2)",
            ],
        ),
    )?);
    let aa = agent();
    for (w, msgs) in [
        ("1", ["RequestLB", "ReceiveLB", "SendSB", "ReceivePB", "PayB"]),
        ("2", ["ReceiveRB", "SendLB", "ReceiveSB", "SendPB", "GetPShipB"]),
    ] {
        for (j, msg) in msgs.iter().enumerate() {
            let k = format!("{w}{}", j + 1);
            let wso = format!("WSO_{w}");
            let suffix = format!("_{w}");
            actors.push(instantiate_actor(&aa, &params(&[("k", &k), ("msg", msg), ("wso", &wso), ("w", &suffix)]))?);
        }
    }
    compose_system(
        "buyingbooks",
        &actors,
        &["r_WSC(DI_WSC)"],
        &["O"],
        &[("Spec", "r_WSC(DI_WSC) . s_O(DO_WSC) . Spec")],
    )
}

pub fn qos_wsoe() -> Result<SystemAssembly> {
    let mut actors = Vec::new();
    let ws = |i: &str, first: &str, steps: &[&str]| fixed(&format!("WS_{i}"), &chain(&format!("WS_{i}"), first, steps));
    actors.push(ws(
        "1",
        "r_WS_1(SendLB_WW_1)",
        &["i_WS_1", "s_WSO(ReceiveSB_WW_1)", "r_WS_1(SendP_WW_1)", "i_WS_1", "s_WSO(GetPays_WW_1)"],
    )?);
    actors.push(ws(
        "2",
        "r_WS_2(RequestLB_WS_2)",
        &["i_WS_2", "s_WSOIM(ReceiveRB_WM)", "r_WS_2(BBFinish_WW_2)", "i_WS_2", "s_O(BBFinish_O)"],
    )?);
    actors.push(ws("3", "r_WS_3(ShipByT_WW_3)", &["i_WS_3", "s_WSO(ShipFinish_WW_3)"])?);
    actors.push(ws("4", "r_WS_4(ShipByA_WW_4)", &["i_WS_4", "s_WSO(ShipFinish_WW_4)"])?);
    // the generic WSOIM with DI := ReceiveRB_WM and DO := ReceiveRB_MW
    actors.push(fixed(
        "WSOIM",
        &chain("WSOIM", "r_WSOIM(ReceiveRB_WM)", &[&initialized("WSO", &["WSO"]), "i_WSOIM", "s_WSO(ReceiveRB_MW)"]),
    )?);
    actors.push(fixed("SS", &chain("SS", "r_SS(DI_SS)", &["i_SS", "s_WSO(DO_SS)"]))?);
    let wso_eqs = chain(
        "WSO",
        "r_WSO(ReceiveRB_MW)",
        &[
            &initialized("WSO", &["AA_1", "AA_2", "AA_3", "AA_4", "AA_5", "AA_6", "AA_7"]),
            "i_WSO",
            "s_AA_1(ReceiveRB_WA)",
            "r_WSO(ReceiveRB_AW)",
            "i_WSO",
            "s_AA_2(SendLB_WA)",
            "r_WSO(SendLB_AW)",
            "i_WSO",
            "s_WS_1(SendLB_WW_1)",
            "r_WSO(ReceiveSB_WW_1)",
            "i_WSO",
            "s_AA_3(ReceiveSB_WA)",
            "r_WSO(ReceiveSB_AW)",
            "i_WSO",
            "s_AA_4(CalculateP_WA)",
            "r_WSO(CalculateP_AW)",
            "i_WSO",
            "s_AA_5(SendP_WA)",
            "r_WSO(SendP_AW)",
            "i_WSO",
            "s_WS_1(SendP_WW_1)",
            "r_WSO(GetPays_WW_1)",
            "i_WSO",
            "s_AA_6(GetPays_WA)",
            "r_WSO(GetPays_AW)",
            "i_WSO",
            "s_SS(DI_SS)",
            "r_WSO(DO_SS)",
            "i_WSO",
            "([pays = low] -> s_WS_3(ShipByT_WW_3) . r_WSO(ShipFinish_WW_3) + [pays = high] -> s_WS_4(ShipByA_WW_4) . r_WSO(ShipFinish_WW_4))",
            "i_WSO",
            "s_WS_2(BBFinish_WW_2)",
        ],
    );
    let eqs: Vec<(&str, &str)> = wso_eqs.iter().map(|(s, b)| (s.as_str(), b.as_str())).collect();
    let wso = ActorTemplate::new("WSO", &[], &eqs).with_decls(&[
        "domain Pays = {low, high}",
        "var pays : Pays = low",
        "effect i_WSO : pays := low | pays := high",
    ]);
    actors.push(instantiate_actor(&wso, &BTreeMap::new())?);
    let aa = agent();
    for (k, msg) in ["ReceiveRB", "SendLB", "ReceiveSB", "CalculateP", "SendP", "GetPays", "ShipByA"].iter().enumerate() {
        let k = (k + 1).to_string();
        actors.push(instantiate_actor(&aa, &params(&[("k", &k), ("msg", msg), ("wso", "WSO"), ("w", "")]))?);
    }
    compose_system(
        "qos_wsoe",
        &actors,
        &["r_WS_2(RequestLB_WS_2)"],
        &["O"],
        &[("Spec", "r_WS_2(RequestLB_WS_2) . s_O(BBFinish_O) . Spec")],
    )
}

// ---------------------------------------------------------------- catalog

/// A single textual edit of a model's source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mutation {
    pub description: &'static str,
    pub find: &'static str,
    pub replace: &'static str,
}

impl Mutation {
    pub fn apply(&self, source: &str) -> Result<String> {
        match source.matches(self.find).count() {
            1 => Ok(source.replacen(self.find, self.replace, 1)),
            k => Err(Error::Invalid(format!("mutation `{}` matches {k} times", self.description))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub id: CaseStudyId,
    pub file: &'static str,
    /// The verdict the chapter claims.
    pub expected_related: bool,
    /// States of the system LTS at the default parameters, frozen from the first run.
    pub golden_states: usize,
    pub mutation: Mutation,
}

pub fn list_case_studies() -> Vec<CatalogEntry> {
    let e = |id: CaseStudyId, file, golden_states, description, find, replace| CatalogEntry {
        id,
        file,
        expected_related: true,
        golden_states,
        mutation: Mutation { description, find, replace },
    };
    vec![
        e(
            CaseStudyId::Abp,
            "models/abp.aptc",
            52,
            "sender keeps its bit after a good acknowledgement",
            "r_D(b) . S(flip(b))",
            "r_D(b) . S(b)",
        ),
        e(
            CaseStudyId::AbpShadow,
            "models/abp-shadow.aptc",
            38,
            "sender keeps its bit after a good acknowledgement",
            "r_D(b) . S(flip(b))",
            "r_D(b) . S(b)",
        ),
        e(
            CaseStudyId::MapReduce { m: 2, n: 1 },
            "models/mapreduce.aptc",
            27,
            "second map actor never replies",
            "proc MapA_2_2 = s_Mas(DO_MapA_2) . MapA_2;",
            "proc MapA_2_2 = MapA_2;",
        ),
        e(
            CaseStudyId::Gfs { n: 2 },
            "models/gfs.aptc",
            24,
            "second chunk server never replies",
            "proc CSA_2_2 = s_CA(DO_CSA_2) . CSA_2;",
            "proc CSA_2_2 = CSA_2;",
        ),
        e(
            CaseStudyId::CloudRm { n: 2 },
            "models/cloud-rm.aptc",
            137,
            "state actor never reports",
            "proc SA_2 = s_RA(RS_SA) . SA;",
            "proc SA_2 = SA;",
        ),
        e(
            CaseStudyId::BuyingBooks,
            "models/buyingbooks.aptc",
            125,
            "seller service never answers the customer",
            "proc WS_2_18 = s_WSC(GetPShipB_WC_2) . WS_2;",
            "proc WS_2_18 = WS_2;",
        ),
        e(
            CaseStudyId::QosWsoe,
            "models/qos-wsoe.aptc",
            150,
            "shipping service never answers",
            "proc SS_2 = s_WSO(DO_SS) . SS;",
            "proc SS_2 = SS;",
        ),
    ]
}

pub fn catalog_entry(id: CaseStudyId) -> Option<CatalogEntry> {
    list_case_studies().into_iter().find(|e| e.id.slug() == id.slug())
}
