//! Symptom-list distance and the ranked differential.
//!
//! The list distance between a patient set `P` and a disease set `D` is the
//! symmetric average-minimum form
//!
//! ```text
//! L(P, D) = (1/|P|) Σ_{x∈P} min_{y∈D} d(x, y) + λ (1/|D|) Σ_{y∈D} min_{x∈P} d(y, x)
//! ```
//!
//! where `d` is the Euclidean symptom distance. It is zero exactly when the
//! sets are equal and reduces to `(1 + λ) d(x, y)` on singletons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::Symptom;
use crate::error::{Error, Result};
use crate::kb::{KnowledgeBase, PatientCase};
use crate::metric::RelationTableSet;

/// Label carried in every ranking so consumers know which list distance
/// produced the numbers.
pub const LIST_DISTANCE_NAME: &str = "symmetric-average-minimum";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ListDistanceParams {
    /// Weight of the disease -> patient term.
    pub lambda: f64,
    /// Number of ranked entries returned.
    pub k: usize,
}

impl Default for ListDistanceParams {
    fn default() -> Self {
        ListDistanceParams { lambda: 1.0, k: 10 }
    }
}

impl ListDistanceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::validation("parameters", format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.k == 0 {
            return Err(Error::validation("parameters", "k must be at least 1"));
        }
        Ok(())
    }
}

struct ListMatch {
    forward: f64,
    backward: f64,
    /// For each patient symptom, index of its nearest disease symptom.
    nearest: Vec<(usize, f64)>,
}

impl ListMatch {
    fn total(&self, lambda: f64) -> f64 {
        self.forward + lambda * self.backward
    }
}

fn nearest(x: &Symptom, candidates: &[Symptom], ts: &RelationTableSet) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, y) in candidates.iter().enumerate() {
        let d = ts.symptom_distance_unchecked(x, y);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

// Summation runs in slice order so results do not depend on scheduling.
fn match_lists(patient: &[Symptom], disease: &[Symptom], ts: &RelationTableSet) -> ListMatch {
    let nearest_fwd: Vec<_> = patient.iter().map(|x| nearest(x, disease, ts)).collect();
    let forward = nearest_fwd.iter().map(|&(_, d)| d).sum::<f64>() / patient.len() as f64;
    let backward = disease
        .iter()
        .map(|y| nearest(y, patient, ts).1)
        .sum::<f64>()
        / disease.len() as f64;
    ListMatch {
        forward,
        backward,
        nearest: nearest_fwd,
    }
}

/// Distance between a patient symptom list and a disease symptom list.
pub fn list_distance(
    patient: &[Symptom],
    disease: &[Symptom],
    ts: &RelationTableSet,
    params: &ListDistanceParams,
) -> Result<f64> {
    params.validate()?;
    if patient.is_empty() || disease.is_empty() {
        return Err(Error::validation("symptom list", "list distance needs two non-empty lists"));
    }
    // validate every value once; the matching loop then uses unchecked lookups
    for s in patient.iter().chain(disease) {
        ts.element_distances(s, s)?;
    }
    Ok(match_lists(patient, disease, ts).total(params.lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchTrace {
    pub symptom: String,
    pub nearest: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub rank: usize,
    pub disease_id: String,
    pub name: String,
    pub distance: f64,
    /// `(1/|P|) Σ min d`, patient symptoms explained by the disease.
    pub patient_term: f64,
    /// `(1/|D|) Σ min d`, disease symptoms present in the patient.
    pub disease_term: f64,
    pub trace: Vec<MatchTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDiagnosis {
    pub case_id: String,
    pub bundle_version: String,
    pub engine_version: String,
    pub list_distance: String,
    pub params: ListDistanceParams,
    pub entries: Vec<RankedEntry>,
}

impl RankedDiagnosis {
    /// Canonical JSON rendering shared by the CLI and the HTTP service.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("ranking serializes");
        text.push('\n');
        text
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "case {}  (bundle {}, lambda {}, k {})\n",
            if self.case_id.is_empty() { "-" } else { &self.case_id },
            self.bundle_version,
            self.params.lambda,
            self.params.k
        );
        out.push_str(&format!("{:>4}  {:<10} {:<28} {:>12}\n", "rank", "id", "name", "distance"));
        for e in &self.entries {
            out.push_str(&format!(
                "{:>4}  {:<10} {:<28} {:>12.6}\n",
                e.rank, e.disease_id, e.name, e.distance
            ));
        }
        out
    }
}

/// Rank every disease by list distance to the case, nearest first. Equal
/// distances are ordered by disease id.
pub fn diagnose(case: &PatientCase, kb: &KnowledgeBase, params: &ListDistanceParams) -> Result<RankedDiagnosis> {
    params.validate()?;
    if case.symptoms.is_empty() {
        return Err(Error::validation(format!("case {}", case.case_id), "empty symptom list"));
    }
    if kb.diseases().is_empty() {
        return Err(Error::Config("knowledge base has no diseases".into()));
    }
    for (i, s) in case.symptoms.iter().enumerate() {
        kb.schema()
            .validate(s, kb.ontology())
            .into_result(&format!("case {} symptom {}", case.case_id, i + 1))?;
    }

    let ts = kb.relations();
    let mut scored: Vec<_> = kb
        .diseases()
        .par_iter()
        .map(|d| (d, match_lists(&case.symptoms, &d.symptoms, ts)))
        .collect();
    scored.sort_by(|(da, ma), (db, mb)| {
        ma.total(params.lambda)
            .total_cmp(&mb.total(params.lambda))
            .then_with(|| da.id.cmp(&db.id))
    });
    scored.truncate(params.k);

    let schema = kb.schema();
    let patient_codes: Vec<String> = case
        .symptoms
        .iter()
        .map(|s| schema.render(schema.encode(s).expect("validated above")))
        .collect();
    let entries = scored
        .into_iter()
        .enumerate()
        .map(|(i, (d, m))| RankedEntry {
            rank: i + 1,
            disease_id: d.id.clone(),
            name: d.name.clone(),
            distance: m.total(params.lambda),
            patient_term: m.forward,
            disease_term: m.backward,
            trace: m
                .nearest
                .iter()
                .zip(&patient_codes)
                .map(|(&(j, dist), code)| MatchTrace {
                    symptom: code.clone(),
                    nearest: schema.render(d.codes[j]),
                    distance: dist,
                })
                .collect(),
        })
        .collect();
    Ok(RankedDiagnosis {
        case_id: case.case_id.clone(),
        bundle_version: kb.bundle_version().to_string(),
        engine_version: crate::ENGINE_VERSION.to_string(),
        list_distance: LIST_DISTANCE_NAME.to_string(),
        params: *params,
        entries,
    })
}
