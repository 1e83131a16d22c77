//! Synthetic knowledge bases, noisy patient cases and top-n accuracy.
//!
//! Every random draw comes from ChaCha8 seeded with `rng_seed`. The
//! knowledge base uses stream 0 and case `i` uses stream `i + 1`, so cases
//! can be generated in any order (or in parallel) with identical results.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{ElementKind, Symptom};
use crate::diagnosis::{diagnose, ListDistanceParams};
use crate::error::{Error, Result};
use crate::kb::{BundleFiles, DiseaseRecord, DiseaseSpec, KnowledgeBase, PatientCase, RawSymptom};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_diseases: usize,
    pub symptoms_per_disease: SizeRange,
    pub dropout_rate: f64,
    pub substitution_rate: f64,
    pub rng_seed: u64,
    #[serde(default = "one")]
    pub cases_per_disease: usize,
    /// Draw disease symptoms from a pool of this many distinct symptoms
    /// instead of the whole symptom space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symptom_pool: Option<usize>,
    #[serde(default)]
    pub params: ListDistanceParams,
}

fn one() -> usize {
    1
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_diseases: 20,
            symptoms_per_disease: SizeRange { min: 2, max: 6 },
            dropout_rate: 0.2,
            substitution_rate: 0.1,
            rng_seed: 7,
            cases_per_disease: 1,
            symptom_pool: None,
            params: ListDistanceParams::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(Error::Config(detail));
        if self.n_diseases < 2 {
            return bad(format!("n_diseases must be at least 2, got {}", self.n_diseases));
        }
        for (name, rate) in [("dropout_rate", self.dropout_rate), ("substitution_rate", self.substitution_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return bad(format!("{name} must lie in [0, 1], got {rate}"));
            }
        }
        let SizeRange { min, max } = self.symptoms_per_disease;
        if min == 0 || min > max {
            return bad(format!("symptoms_per_disease needs 1 <= min <= max, got {min}..={max}"));
        }
        if self.cases_per_disease == 0 {
            return bad("cases_per_disease must be at least 1".into());
        }
        self.params.validate()
    }
}

pub fn case_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_symptom(domains: &[Vec<u32>], rng: &mut ChaCha8Rng) -> Symptom {
    Symptom(
        domains
            .iter()
            .map(|d| *d.choose(rng).expect("non-empty domain"))
            .collect(),
    )
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Generate a knowledge base on top of the fixture schema, ontology and
/// relation tables. Disease symptom sets are pairwise distinct.
pub fn generate_kb(cfg: &SimConfig) -> Result<KnowledgeBase> {
    cfg.validate()?;
    let base = BundleFiles::fixture();
    let template = base.clone().build()?;
    let schema = template.schema();
    let domains: Vec<Vec<u32>> = schema
        .elements()
        .iter()
        .map(|e| e.values(template.ontology()))
        .collect();
    let space: u128 = domains.iter().map(|d| d.len() as u128).product();
    let mut rng = case_rng(cfg.rng_seed, 0);

    let pool: Option<Vec<Symptom>> = cfg.symptom_pool.map(|n| {
        let n = (n as u128).min(space) as usize;
        let mut seen = HashSet::new();
        let mut pool = Vec::with_capacity(n);
        while pool.len() < n {
            let s = random_symptom(&domains, &mut rng);
            if seen.insert(s.clone()) {
                pool.push(s);
            }
        }
        pool
    });
    let universe = pool.as_ref().map_or(space, |p| p.len() as u128);
    let SizeRange { min, max } = cfg.symptoms_per_disease;
    let max = max.min(universe.min(usize::MAX as u128) as usize);
    let distinct_sets: u128 = (min..=max)
        .map(|s| binomial(universe.min(1 << 20) as usize, s))
        .fold(0u128, |a, b| a.saturating_add(b));
    if min > max || distinct_sets < cfg.n_diseases as u128 {
        return Err(Error::Config(format!(
            "cannot draw {} distinct symptom sets of size {min}..={} from {universe} symptoms",
            cfg.n_diseases, cfg.symptoms_per_disease.max
        )));
    }

    let mut taken: HashSet<Vec<u128>> = HashSet::new();
    let mut diseases = Vec::with_capacity(cfg.n_diseases);
    for i in 0..cfg.n_diseases {
        let mut attempts = 0;
        let codes = loop {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::Config(format!("could not find a distinct symptom set for disease {}", i + 1)));
            }
            let size = rng.random_range(min..=max);
            let chosen: Vec<Symptom> = match &pool {
                Some(pool) => pool.choose_multiple(&mut rng, size).cloned().collect(),
                None => {
                    let mut set = HashSet::new();
                    let mut out = Vec::new();
                    while out.len() < size {
                        let s = random_symptom(&domains, &mut rng);
                        if set.insert(s.clone()) {
                            out.push(s);
                        }
                    }
                    out
                }
            };
            let mut codes: Vec<u128> = chosen
                .iter()
                .map(|s| schema.encode(s).map(|c| c.0))
                .collect::<Result<_>>()?;
            codes.sort_unstable();
            if taken.insert(codes.clone()) {
                break codes;
            }
        };
        diseases.push(DiseaseSpec {
            id: format!("S{:04}", i + 1),
            name: format!("synthetic disease {}", i + 1),
            category: "synthetic".into(),
            symptoms: codes
                .into_iter()
                .map(|c| RawSymptom::Text(schema.render(crate::CharacteristicValue(c))))
                .collect(),
        });
    }
    BundleFiles { diseases, ..base }.build()
}

/// Corrupt a disease's symptom list into a patient case: drop symptoms with
/// `dropout_rate`, then replace SCALE/CATEGORY element values with
/// `substitution_rate`. WHERE values are never substituted. At least one
/// symptom always survives.
pub fn generate_case(kb: &KnowledgeBase, disease: &DiseaseRecord, cfg: &SimConfig, case_index: u64) -> PatientCase {
    let mut rng = case_rng(cfg.rng_seed, case_index + 1);
    let mut kept: Vec<Symptom> = disease
        .symptoms
        .iter()
        .filter(|_| rng.random::<f64>() >= cfg.dropout_rate)
        .cloned()
        .collect();
    if kept.is_empty() {
        kept.push(disease.symptoms.choose(&mut rng).expect("disease has symptoms").clone());
    }
    let schema = kb.schema();
    for s in &mut kept {
        for (i, el) in schema.elements().iter().enumerate() {
            if el.kind == ElementKind::Where || rng.random::<f64>() >= cfg.substitution_rate {
                continue;
            }
            let current = s.0[i];
            let others: Vec<u32> = el
                .values(kb.ontology())
                .into_iter()
                .filter(|&v| v != current)
                .collect();
            if let Some(&v) = others.choose(&mut rng) {
                s.0[i] = v;
            }
        }
    }
    let mut pairs: Vec<_> = kept
        .into_iter()
        .map(|s| (schema.encode(&s).expect("substitutions stay in domain"), s))
        .collect();
    pairs.sort();
    pairs.dedup();
    let (codes, symptoms) = pairs.into_iter().unzip();
    PatientCase {
        case_id: format!("{}-{}", disease.id, case_index),
        symptoms,
        codes,
    }
}

/// A case together with the id of the disease it was generated from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCase {
    pub case: PatientCase,
    pub label: String,
}

/// `cases_per_disease` cases per disease, in disease order.
pub fn generate_cases(kb: &KnowledgeBase, cfg: &SimConfig) -> Vec<LabeledCase> {
    let per = cfg.cases_per_disease;
    (0..kb.diseases().len() * per)
        .into_par_iter()
        .map(|i| {
            let d = &kb.diseases()[i / per];
            LabeledCase {
                case: generate_case(kb, d, cfg, i as u64),
                label: d.id.clone(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub case_id: String,
    pub label: String,
    /// 1-based rank of the true disease.
    pub rank: usize,
    pub top: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub top1: f64,
    pub top3: f64,
    pub top5: f64,
    pub n_cases: usize,
    pub bundle_version: String,
    pub params: ListDistanceParams,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config: Option<SimConfig>,
    pub cases: Vec<CaseOutcome>,
}

/// Rank every case against the whole knowledge base and count how often the
/// true disease lands in the first 1, 3 and 5 entries.
pub fn evaluate(kb: &KnowledgeBase, cases: &[LabeledCase], params: &ListDistanceParams) -> Result<AccuracyReport> {
    params.validate()?;
    if cases.is_empty() {
        return Err(Error::validation("evaluation", "no cases"));
    }
    for c in cases {
        kb.lookup(&c.label).map_err(|_| {
            Error::validation(format!("case {}", c.case.case_id), format!("label {:?} is not in the knowledge base", c.label))
        })?;
    }
    let full = ListDistanceParams {
        k: kb.diseases().len(),
        ..*params
    };
    let outcomes = cases
        .par_iter()
        .map(|c| {
            let ranking = diagnose(&c.case, kb, &full)?;
            let rank = ranking
                .entries
                .iter()
                .position(|e| e.disease_id == c.label)
                .expect("full ranking contains every disease")
                + 1;
            Ok(CaseOutcome {
                case_id: c.case.case_id.clone(),
                label: c.label.clone(),
                rank,
                top: ranking
                    .entries
                    .iter()
                    .take(5)
                    .map(|e| (e.disease_id.clone(), e.distance))
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let share = |n: usize| outcomes.iter().filter(|o| o.rank <= n).count() as f64 / outcomes.len() as f64;
    Ok(AccuracyReport {
        top1: share(1),
        top3: share(3),
        top5: share(5),
        n_cases: outcomes.len(),
        bundle_version: kb.bundle_version().to_string(),
        params: *params,
        seed: None,
        config: None,
        cases: outcomes,
    })
}

#[derive(Serialize)]
struct CaseRecord<'a> {
    case_id: &'a str,
    label: &'a str,
    symptoms: Vec<String>,
}

fn write_file(path: &Path, contents: String) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Generate, evaluate and write `kb/`, `cases.json`, `report.json` and
/// `summary.csv` under `out`.
pub fn simulate(cfg: &SimConfig, out: &Path) -> Result<AccuracyReport> {
    let kb = generate_kb(cfg)?;
    let cases = generate_cases(&kb, cfg);
    let mut report = evaluate(&kb, &cases, &cfg.params)?;
    report.seed = Some(cfg.rng_seed);
    report.config = Some(cfg.clone());

    kb.to_files().write_dir(out.join("kb"))?;
    let schema = kb.schema();
    let records: Vec<_> = cases
        .iter()
        .map(|c| CaseRecord {
            case_id: &c.case.case_id,
            label: &c.label,
            symptoms: c.case.codes.iter().map(|&code| schema.render(code)).collect(),
        })
        .collect();
    write_file(&out.join("cases.json"), serde_json::to_string_pretty(&records).expect("cases serialize") + "\n")?;
    write_file(&out.join("report.json"), serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    write_file(
        &out.join("summary.csv"),
        format!(
            "seed,n_diseases,n_cases,dropout_rate,substitution_rate,lambda,top1,top3,top5,bundle_version\n{},{},{},{},{},{},{},{},{},{}\n",
            cfg.rng_seed,
            cfg.n_diseases,
            report.n_cases,
            cfg.dropout_rate,
            cfg.substitution_rate,
            cfg.params.lambda,
            report.top1,
            report.top3,
            report.top5,
            report.bundle_version
        ),
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> SimConfig {
        SimConfig {
            n_diseases: 12,
            rng_seed: seed,
            ..SimConfig::default()
        }
    }

    #[test]
    fn same_seed_same_kb() {
        let a = generate_kb(&cfg(7)).unwrap();
        let b = generate_kb(&cfg(7)).unwrap();
        assert_eq!(a.diseases(), b.diseases());
        assert_eq!(a.bundle_version(), b.bundle_version());
        let c = generate_kb(&cfg(8)).unwrap();
        assert_ne!(a.bundle_version(), c.bundle_version());
    }

    #[test]
    fn generated_symptoms_round_trip() {
        let kb = generate_kb(&cfg(7)).unwrap();
        let mut sets = HashSet::new();
        for d in kb.diseases() {
            let range = cfg(7).symptoms_per_disease;
            assert!((range.min..=range.max).contains(&d.symptoms.len()));
            for (s, &code) in d.symptoms.iter().zip(&d.codes) {
                assert_eq!(kb.schema().encode(s).unwrap(), code);
                assert_eq!(&kb.schema().decode(code).unwrap(), s);
                assert!(kb.schema().validate(s, kb.ontology()).is_valid());
            }
            assert!(sets.insert(d.codes.clone()));
        }
    }

    #[test]
    fn infeasible_config_is_rejected() {
        let tiny = SimConfig {
            n_diseases: 2,
            symptoms_per_disease: SizeRange { min: 1, max: 1 },
            symptom_pool: Some(1),
            ..cfg(7)
        };
        assert!(matches!(generate_kb(&tiny), Err(Error::Config(_))));
        let bad_rate = SimConfig { dropout_rate: 1.5, ..cfg(7) };
        assert!(matches!(generate_kb(&bad_rate), Err(Error::Config(_))));
        let one = SimConfig { n_diseases: 1, ..cfg(7) };
        assert!(generate_kb(&one).is_err());
    }

    #[test]
    fn noise_free_case_is_the_disease() {
        let c = SimConfig {
            dropout_rate: 0.0,
            substitution_rate: 0.0,
            ..cfg(7)
        };
        let kb = generate_kb(&c).unwrap();
        for (i, d) in kb.diseases().iter().enumerate() {
            let case = generate_case(&kb, d, &c, i as u64);
            assert_eq!(case.symptoms, d.symptoms);
        }
    }

    #[test]
    fn full_dropout_keeps_one() {
        let c = SimConfig {
            dropout_rate: 1.0,
            substitution_rate: 0.0,
            ..cfg(7)
        };
        let kb = generate_kb(&c).unwrap();
        for (i, d) in kb.diseases().iter().enumerate() {
            let case = generate_case(&kb, d, &c, i as u64);
            assert_eq!(case.symptoms.len(), 1);
            assert!(d.symptoms.contains(&case.symptoms[0]));
        }
    }

    #[test]
    fn substitution_never_touches_where() {
        let c = SimConfig {
            dropout_rate: 0.0,
            substitution_rate: 1.0,
            ..cfg(3)
        };
        let kb = generate_kb(&c).unwrap();
        let w = kb.schema().where_index().unwrap();
        for (i, d) in kb.diseases().iter().enumerate() {
            let case = generate_case(&kb, d, &c, i as u64);
            let wheres: HashSet<u32> = d.symptoms.iter().map(|s| s.0[w]).collect();
            for s in &case.symptoms {
                assert!(wheres.contains(&s.0[w]));
                assert!(kb.schema().validate(s, kb.ontology()).is_valid());
            }
        }
    }

    #[test]
    fn cases_are_deterministic_and_order_free() {
        let c = cfg(11);
        let kb = generate_kb(&c).unwrap();
        let all = generate_cases(&kb, &c);
        assert_eq!(all, generate_cases(&kb, &c));
        // a single case regenerated on its own matches its slot
        let d = &kb.diseases()[5];
        assert_eq!(generate_case(&kb, d, &c, 5), all[5].case);
    }

    #[test]
    fn evaluate_errors() {
        let kb = generate_kb(&cfg(7)).unwrap();
        let p = ListDistanceParams::default();
        assert!(matches!(evaluate(&kb, &[], &p), Err(Error::Validation { .. })));
        let mut cases = generate_cases(&kb, &cfg(7));
        cases[0].label = "nope".into();
        assert!(matches!(evaluate(&kb, &cases, &p), Err(Error::Validation { .. })));
    }

    #[test]
    fn accuracies_are_ordered() {
        let c = SimConfig {
            dropout_rate: 0.5,
            substitution_rate: 0.5,
            cases_per_disease: 3,
            ..cfg(21)
        };
        let kb = generate_kb(&c).unwrap();
        let r = evaluate(&kb, &generate_cases(&kb, &c), &c.params).unwrap();
        assert!(r.top1 <= r.top3 && r.top3 <= r.top5 && r.top5 <= 1.0);
        assert_eq!(r.n_cases, 36);
    }

    #[test]
    fn simulate_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(5);
        let report = simulate(&c, dir.path()).unwrap();
        for f in ["kb/schema.json", "kb/diseases.json", "cases.json", "report.json", "summary.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let reloaded = KnowledgeBase::load(dir.path().join("kb")).unwrap();
        assert_eq!(reloaded.bundle_version(), report.bundle_version);
        let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(report.seed, Some(5));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(1, 1), 1);
        assert_eq!(binomial(1, 2), 0);
        assert_eq!(binomial(52, 5), 2_598_960);
    }
}
