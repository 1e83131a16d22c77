//! Knowledge base bundles and patient case ingestion.
//!
//! A bundle is a directory holding `schema.json`, `ontology.json`,
//! `relations.json` and `diseases.json`. Loading validates every part,
//! materializes the relation tables, runs the audit, and stamps the
//! result with a content hash.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{CharacteristicValue, ElementDef, ElementSchema, Symptom};
use crate::error::{Error, Result};
use crate::metric::{AuditReport, RelationTableSet, RelationTableSpec};
use crate::ontology::{BodyOntology, OntologyNode};

pub const SCHEMA_FILE: &str = "schema.json";
pub const ONTOLOGY_FILE: &str = "ontology.json";
pub const RELATIONS_FILE: &str = "relations.json";
pub const DISEASES_FILE: &str = "diseases.json";

/// A symptom as written in input files: a characteristic value (digit
/// string or integer) or an explicit element-value vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawSymptom {
    Text(String),
    Number(u64),
    Values(Vec<RawValue>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    Number(u32),
    Text(String),
}

impl RawSymptom {
    /// Resolve to element values and check them against the codec domains.
    /// Ontology membership is not checked here.
    pub fn resolve(&self, schema: &ElementSchema) -> Result<Symptom> {
        match self {
            RawSymptom::Text(text) => schema.decode(schema.parse_code(text)?),
            RawSymptom::Number(n) => schema.decode(CharacteristicValue((*n).into())),
            RawSymptom::Values(values) => {
                let values = values
                    .iter()
                    .map(|v| match v {
                        RawValue::Number(n) => Ok(*n),
                        RawValue::Text(t) => crate::codes::parse_digits(t)
                            .and_then(|v| u32::try_from(v).ok())
                            .ok_or_else(|| Error::validation("element values", format!("{t:?} is not a digit string"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let symptom = Symptom(values);
                schema.encode(&symptom)?;
                Ok(symptom)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiseaseSpec {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub category: String,
    pub symptoms: Vec<RawSymptom>,
}

/// The four bundle files, parsed but not yet validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleFiles {
    pub schema: Vec<ElementDef>,
    pub ontology: Vec<OntologyNode>,
    pub relations: Vec<RelationTableSpec>,
    pub diseases: Vec<DiseaseSpec>,
}

fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<T> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("bundle parts serialize");
    text.push('\n');
    fs::write(&path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

impl BundleFiles {
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Ok(BundleFiles {
            schema: read_json(dir, SCHEMA_FILE)?,
            ontology: read_json(dir, ONTOLOGY_FILE)?,
            relations: read_json(dir, RELATIONS_FILE)?,
            diseases: read_json(dir, DISEASES_FILE)?,
        })
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        write_json(dir, SCHEMA_FILE, &self.schema)?;
        write_json(dir, ONTOLOGY_FILE, &self.ontology)?;
        write_json(dir, RELATIONS_FILE, &self.relations)?;
        write_json(dir, DISEASES_FILE, &self.diseases)
    }

    /// The bundle shipped with the crate (five diseases, four elements).
    pub fn fixture() -> Self {
        fn part<T: serde::de::DeserializeOwned>(text: &str) -> T {
            serde_json::from_str(text).expect("embedded fixture bundle parses")
        }
        BundleFiles {
            schema: part(include_str!("../data/bundle/schema.json")),
            ontology: part(include_str!("../data/bundle/ontology.json")),
            relations: part(include_str!("../data/bundle/relations.json")),
            diseases: part(include_str!("../data/bundle/diseases.json")),
        }
    }

    /// SHA-256 over the canonical serialization of all four parts.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for part in [
            serde_json::to_vec(&self.schema),
            serde_json::to_vec(&self.ontology),
            serde_json::to_vec(&self.relations),
            serde_json::to_vec(&self.diseases),
        ] {
            let bytes = part.expect("bundle parts serialize");
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(&bytes);
        }
        format!("sha256:{}", hex::encode(hasher.finalize()))
    }

    /// Validate everything and build the knowledge base. Blocking audit
    /// findings and duplicate disease ids fail with [`Error::Audit`].
    pub fn build(self) -> Result<KnowledgeBase> {
        let bundle_version = self.content_hash();
        let schema = ElementSchema::new(self.schema.clone()).map_err(|e| e.within(SCHEMA_FILE))?;
        let ontology = BodyOntology::new(self.ontology.clone()).map_err(|e| e.within(ONTOLOGY_FILE))?;
        let relations = RelationTableSet::build(self.relations.clone(), &schema, &ontology)?;
        let audit = relations.audit().into_result()?;

        if self.diseases.is_empty() {
            return Err(Error::Config("knowledge base has no diseases".into()));
        }
        let mut seen = BTreeSet::new();
        for d in &self.diseases {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::Audit {
                    summary: format!("duplicate disease id {:?}", d.id),
                    report: None,
                });
            }
        }
        let mut diseases = Vec::with_capacity(self.diseases.len());
        for spec in &self.diseases {
            diseases.push(DiseaseRecord::from_spec(spec, &schema, &ontology)?);
        }
        let index = diseases
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.clone(), i))
            .collect();
        Ok(KnowledgeBase {
            schema,
            ontology,
            relations,
            diseases,
            index,
            bundle_version,
            audit,
        })
    }
}

/// Resolve, validate and round-trip one symptom.
fn normalize(
    raw: &RawSymptom,
    schema: &ElementSchema,
    ontology: &BodyOntology,
    context: &str,
) -> Result<(CharacteristicValue, Symptom)> {
    let symptom = raw.resolve(schema).map_err(|e| match e {
        Error::Range { .. } => Error::Validation {
            context: context.to_string(),
            element: None,
            value: None,
            detail: e.to_string(),
        },
        other => other.within(context),
    })?;
    schema.validate(&symptom, ontology).into_result(context)?;
    let code = schema.encode(&symptom)?;
    if schema.decode(code)? != symptom {
        return Err(Error::validation(context, "symptom does not survive an encode/decode round trip"));
    }
    Ok((code, symptom))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiseaseRecord {
    pub id: String,
    pub name: String,
    pub category: String,
    /// Sorted by characteristic value, pairwise distinct.
    pub symptoms: Vec<Symptom>,
    #[serde(skip)]
    pub codes: Vec<CharacteristicValue>,
}

impl DiseaseRecord {
    fn from_spec(spec: &DiseaseSpec, schema: &ElementSchema, ontology: &BodyOntology) -> Result<Self> {
        if spec.symptoms.is_empty() {
            return Err(Error::validation(format!("disease {}", spec.id), "empty symptom list"));
        }
        let mut pairs = Vec::with_capacity(spec.symptoms.len());
        for (i, raw) in spec.symptoms.iter().enumerate() {
            pairs.push(normalize(raw, schema, ontology, &format!("disease {} symptom {}", spec.id, i + 1))?);
        }
        pairs.sort();
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation {
                context: format!("disease {}", spec.id),
                element: None,
                value: Some(w[0].0 .0),
                detail: format!("symptom {} listed twice", schema.render(w[0].0)),
            });
        }
        let (codes, symptoms) = pairs.into_iter().unzip();
        Ok(DiseaseRecord {
            id: spec.id.clone(),
            name: spec.name.clone(),
            category: spec.category.clone(),
            symptoms,
            codes,
        })
    }

    pub fn to_spec(&self, schema: &ElementSchema) -> DiseaseSpec {
        DiseaseSpec {
            id: self.id.clone(),
            name: self.name.clone(),
            category: self.category.clone(),
            symptoms: self.codes.iter().map(|&c| RawSymptom::Text(schema.render(c))).collect(),
        }
    }
}

/// A loaded, validated and audited knowledge base. Immutable.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    schema: ElementSchema,
    ontology: BodyOntology,
    relations: RelationTableSet,
    diseases: Vec<DiseaseRecord>,
    index: HashMap<String, usize>,
    bundle_version: String,
    audit: AuditReport,
}

impl KnowledgeBase {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        BundleFiles::read_dir(dir)?.build()
    }

    pub fn fixture() -> Self {
        BundleFiles::fixture().build().expect("embedded fixture bundle is valid")
    }

    pub fn schema(&self) -> &ElementSchema {
        &self.schema
    }

    pub fn ontology(&self) -> &BodyOntology {
        &self.ontology
    }

    pub fn relations(&self) -> &RelationTableSet {
        &self.relations
    }

    pub fn diseases(&self) -> &[DiseaseRecord] {
        &self.diseases
    }

    pub fn bundle_version(&self) -> &str {
        &self.bundle_version
    }

    /// Non-blocking audit findings (LENIENT tables).
    pub fn audit(&self) -> &AuditReport {
        &self.audit
    }

    pub fn lookup(&self, id: &str) -> Result<&DiseaseRecord> {
        self.index
            .get(id)
            .map(|&i| &self.diseases[i])
            .ok_or_else(|| Error::NotFound {
                what: "disease",
                detail: format!("no disease with id {id:?}"),
            })
    }

    pub fn to_files(&self) -> BundleFiles {
        BundleFiles {
            schema: self.schema.elements().to_vec(),
            ontology: self.ontology.to_nodes(),
            relations: self.relations.specs().to_vec(),
            diseases: self.diseases.iter().map(|d| d.to_spec(&self.schema)).collect(),
        }
    }

    /// Normalize a raw case: resolve, validate, deduplicate, sort by code.
    pub fn ingest_case(&self, raw: &CaseInput) -> Result<PatientCase> {
        if raw.symptoms.is_empty() {
            return Err(Error::validation(format!("case {}", raw.case_id), "empty symptom list"));
        }
        let mut pairs = Vec::with_capacity(raw.symptoms.len());
        for (i, s) in raw.symptoms.iter().enumerate() {
            let context = format!("case {} symptom {}", raw.case_id, i + 1);
            pairs.push(normalize(s, &self.schema, &self.ontology, &context)?);
        }
        pairs.sort();
        pairs.dedup();
        let (codes, symptoms) = pairs.into_iter().unzip();
        Ok(PatientCase {
            case_id: raw.case_id.clone(),
            symptoms,
            codes,
        })
    }
}

/// Case input as read from `case.json` or an HTTP request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseInput {
    #[serde(default)]
    pub case_id: String,
    pub symptoms: Vec<RawSymptom>,
}

impl CaseInput {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("case.json", e))
    }
}

/// A normalized patient symptom set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatientCase {
    pub case_id: String,
    /// Sorted by characteristic value, deduplicated.
    pub symptoms: Vec<Symptom>,
    pub codes: Vec<CharacteristicValue>,
}

impl PatientCase {
    pub fn to_input(&self, schema: &ElementSchema) -> CaseInput {
        CaseInput {
            case_id: self.case_id.clone(),
            symptoms: self.codes.iter().map(|&c| RawSymptom::Text(schema.render(c))).collect(),
        }
    }
}
