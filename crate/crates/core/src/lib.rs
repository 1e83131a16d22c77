//! Symptom similarity engine.
//!
//! Structured symptom descriptions (where, what kind of trouble, how
//! serious, how long, ...) are packed into positional-decimal
//! characteristic values, compared with a bounded per-element metric
//! combined under the Euclidean norm, and matched against a knowledge base
//! of disease symptom lists to produce a ranked differential.
//!
//! * [`codec`] and [`ontology`]: element schema, body-part codes, packing.
//! * [`metric`]: relation tables, element and symptom distances, audit.
//! * [`kb`]: bundle loading and patient case ingestion.
//! * [`diagnosis`]: symptom-list distance and ranking.
//! * [`sim`]: synthetic knowledge bases, noisy cases, accuracy.
//! * [`service`] and [`cli`]: HTTP API and command line front ends.

pub mod cli;
pub mod codec;
pub mod codes;
pub mod diagnosis;
pub mod error;
pub mod kb;
pub mod metric;
pub mod ontology;
pub mod service;
pub mod sim;

pub use codec::{CharacteristicValue, Domain, ElementDef, ElementKind, ElementSchema, Symptom, ValidationReport};

pub use kb::{BundleFiles, CaseInput, DiseaseRecord, KnowledgeBase, PatientCase, RawSymptom};
pub use diagnosis::{diagnose, list_distance, ListDistanceParams, RankedDiagnosis};
pub use error::{Error, ErrorKind, Result};

pub use metric::{AuditKind, AuditReport, OrderingMode, RelationTableSet, RelationTableSpec};
pub use ontology::BodyOntology;

/// Crate version, echoed in every service and CLI response.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
