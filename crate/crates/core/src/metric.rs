//! Bounded element distances, the Euclidean symptom distance, and the
//! relation table audit.
//!
//! Each element `k` has a relation table with a band `[d_min_k, d_max_k]`.
//! Equal values are at distance 0, related values at their table entry
//! (inside the band), and unrelated values at `d_max_k`. The symptom
//! distance is the Euclidean norm of the per-element distances.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::codec::{ElementKind, ElementSchema, Symptom};
use crate::codes;
use crate::error::{Error, Result};
use crate::ontology::BodyOntology;

/// Tolerance for floating point comparisons of distances.
pub const TOLERANCE: f64 = 1e-9;

/// Longest tree path between two codes under the same body part
/// (mini part -> small part -> part -> small part -> mini part).
const MAX_TREE_HOPS: u32 = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OrderingMode {
    /// Ordering and triangle violations reject the bundle.
    #[default]
    Strict,
    /// Ordering and triangle violations are reported as warnings.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationEntry {
    #[serde(with = "codes::value")]
    pub a: u32,
    #[serde(with = "codes::value")]
    pub b: u32,
    pub d: f64,
}

/// One table as stored in `relations.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationTableSpec {
    /// 1-based element position.
    pub element_index: usize,
    pub d_min: f64,
    pub d_max: f64,
    #[serde(default)]
    pub mode: OrderingMode,
    /// Fill related WHERE pairs from ontology tree distance. Defaults to
    /// `true` for the WHERE element and is ignored for other elements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ontology_defaults: Option<bool>,
    #[serde(default)]
    pub entries: Vec<RelationEntry>,
}

impl RelationTableSpec {
    /// Multiply the band and every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.d_min *= factor;
        out.d_max *= factor;
        for e in &mut out.entries {
            e.d *= factor;
        }
        out
    }
}

pub fn parse_relations(text: &str) -> Result<Vec<RelationTableSpec>> {
    serde_json::from_str(text).map_err(|e| Error::format("relations.json", e))
}

fn pair(a: u32, b: u32) -> (u32, u32) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone)]
pub struct RelationTable {
    element: usize,
    name: String,
    d_min: f64,
    d_max: f64,
    mode: OrderingMode,
    domain: Vec<u32>,
    entries: HashMap<(u32, u32), f64>,
    // kept for the audit; never consulted by lookups
    self_pairs: Vec<RelationEntry>,
    conflicts: Vec<(RelationEntry, f64)>,
}

impl RelationTable {
    /// 0-based element position.
    pub fn element(&self) -> usize {
        self.element
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn mode(&self) -> OrderingMode {
        self.mode
    }

    /// Admissible values of the element, ascending.
    pub fn domain(&self) -> &[u32] {
        &self.domain
    }

    pub fn is_related(&self, a: u32, b: u32) -> bool {
        a != b && self.entries.contains_key(&pair(a, b))
    }

    /// Related pairs with their distances, in ascending pair order.
    pub fn entries(&self) -> Vec<((u32, u32), f64)> {
        let mut out: Vec<_> = self.entries.iter().map(|(&k, &d)| (k, d)).collect();
        out.sort_by_key(|x| x.0);
        out
    }

    /// Distance lookup without domain checks.
    pub fn distance(&self, a: u32, b: u32) -> f64 {
        if a == b {
            0.0
        } else {
            self.entries.get(&pair(a, b)).copied().unwrap_or(self.d_max)
        }
    }
}

/// One relation table per schema element, in element order.
#[derive(Debug, Clone)]
pub struct RelationTableSet {
    tables: Vec<RelationTable>,
    specs: Vec<RelationTableSpec>,
}

impl RelationTableSet {
    /// Materialize tables for `schema`. Structural problems (missing or
    /// duplicate tables) are configuration errors; content problems are left
    /// for [`RelationTableSet::audit`].
    pub fn build(
        specs: Vec<RelationTableSpec>,
        schema: &ElementSchema,
        ontology: &BodyOntology,
    ) -> Result<Self> {
        let mut slots: Vec<Option<&RelationTableSpec>> = vec![None; schema.len()];
        for spec in &specs {
            let slot = spec
                .element_index
                .checked_sub(1)
                .and_then(|i| slots.get_mut(i))
                .ok_or_else(|| {
                    Error::Config(format!(
                        "relation table for element {} but the schema has {} elements",
                        spec.element_index,
                        schema.len()
                    ))
                })?;
            if slot.replace(spec).is_some() {
                return Err(Error::Config(format!(
                    "duplicate relation table for element {}",
                    spec.element_index
                )));
            }
        }
        let mut tables = Vec::with_capacity(schema.len());
        for (i, slot) in slots.into_iter().enumerate() {
            let spec = slot.ok_or_else(|| Error::Config(format!("no relation table for element {}", i + 1)))?;
            let def = &schema.elements()[i];
            let mut table = RelationTable {
                element: i,
                name: def.name.clone(),
                d_min: spec.d_min,
                d_max: spec.d_max,
                mode: spec.mode,
                domain: def.values(ontology),
                entries: HashMap::new(),
                self_pairs: Vec::new(),
                conflicts: Vec::new(),
            };
            if def.kind == ElementKind::Where && spec.ontology_defaults.unwrap_or(true) {
                let step = (spec.d_max - spec.d_min) / (MAX_TREE_HOPS - 1) as f64;
                for &a in &table.domain {
                    for &b in table.domain.iter().filter(|&&b| b > a) {
                        if let Some(hops) = ontology.tree_hops(a, b) {
                            table.entries.insert((a, b), spec.d_min + (hops - 1) as f64 * step);
                        }
                    }
                }
            }
            let mut explicit: HashMap<(u32, u32), f64> = HashMap::new();
            for entry in &spec.entries {
                if entry.a == entry.b {
                    table.self_pairs.push(entry.clone());
                    continue;
                }
                let key = pair(entry.a, entry.b);
                match explicit.get(&key) {
                    Some(&d) if d != entry.d => table.conflicts.push((entry.clone(), d)),
                    Some(_) => {}
                    None => {
                        explicit.insert(key, entry.d);
                        table.entries.insert(key, entry.d);
                    }
                }
            }
            tables.push(table);
        }
        Ok(RelationTableSet { tables, specs })
    }

    pub fn tables(&self) -> &[RelationTable] {
        &self.tables
    }

    pub fn table(&self, element: usize) -> Option<&RelationTable> {
        self.tables.get(element)
    }

    pub fn specs(&self) -> &[RelationTableSpec] {
        &self.specs
    }

    /// Distance between two values of element `element` (0-based).
    pub fn element_distance(&self, element: usize, a: u32, b: u32) -> Result<f64> {
        let table = self
            .tables
            .get(element)
            .ok_or_else(|| Error::Config(format!("no relation table for element {}", element + 1)))?;
        for v in [a, b] {
            if table.domain.binary_search(&v).is_err() {
                return Err(Error::Validation {
                    context: format!("element {} ({})", element + 1, table.name),
                    element: Some(element + 1),
                    value: Some(v.into()),
                    detail: format!("value {v} outside the element domain"),
                });
            }
        }
        Ok(table.distance(a, b))
    }

    /// Per-element distances `d_1..d_p`.
    pub fn element_distances(&self, x: &Symptom, y: &Symptom) -> Result<Vec<f64>> {
        if x.len() != self.tables.len() || y.len() != self.tables.len() {
            return Err(Error::validation(
                "symptom pair",
                format!(
                    "expected {} element values, got {} and {}",
                    self.tables.len(),
                    x.len(),
                    y.len()
                ),
            ));
        }
        x.values()
            .iter()
            .zip(y.values())
            .enumerate()
            .map(|(k, (&a, &b))| self.element_distance(k, a, b))
            .collect()
    }

    /// Euclidean norm of the per-element distance vector.
    pub fn symptom_distance(&self, x: &Symptom, y: &Symptom) -> Result<f64> {
        Ok(euclidean(&self.element_distances(x, y)?))
    }

    /// Same as [`symptom_distance`](Self::symptom_distance) for symptoms that
    /// are already known to be valid.
    pub(crate) fn symptom_distance_unchecked(&self, x: &Symptom, y: &Symptom) -> f64 {
        let mut sum = 0.0;
        for (table, (&a, &b)) in self.tables.iter().zip(x.values().iter().zip(y.values())) {
            let d = table.distance(a, b);
            sum += d * d;
        }
        sum.sqrt()
    }

    /// Check bands, cross-element ordering, triangle inequality, symmetry and
    /// identity. Every witness is reported.
    pub fn audit(&self) -> AuditReport {
        let mut violations = Vec::new();
        for table in &self.tables {
            audit_table(table, &mut violations);
        }
        for pair in self.tables.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            if next.d_min <= prev.d_max {
                violations.push(AuditViolation {
                    kind: AuditKind::Ordering,
                    element_index: next.element + 1,
                    witness: vec![prev.element as u32 + 1, next.element as u32 + 1],
                    distances: vec![prev.d_max, next.d_min],
                    detail: format!(
                        "d_min of element {} ({}) does not exceed d_max of element {} ({})",
                        next.element + 1,
                        next.d_min,
                        prev.element + 1,
                        prev.d_max
                    ),
                    blocking: next.mode == OrderingMode::Strict,
                });
            }
        }
        AuditReport { violations }
    }
}

pub fn euclidean(distances: &[f64]) -> f64 {
    distances.iter().map(|d| d * d).sum::<f64>().sqrt()
}

fn audit_table(table: &RelationTable, out: &mut Vec<AuditViolation>) {
    let element_index = table.element + 1;
    let mut push = |kind, witness: Vec<u32>, distances: Vec<f64>, detail: String, blocking| {
        out.push(AuditViolation {
            kind,
            element_index,
            witness,
            distances,
            detail,
            blocking,
        })
    };
    let strict = table.mode == OrderingMode::Strict;

    let band_ok = table.d_min.is_finite() && table.d_max.is_finite() && table.d_min > 0.0 && table.d_min <= table.d_max;
    if !band_ok {
        push(
            AuditKind::Band,
            vec![],
            vec![table.d_min, table.d_max],
            format!("band requires 0 < d_min <= d_max, got [{}, {}]", table.d_min, table.d_max),
            true,
        );
    }
    for ((a, b), d) in table.entries() {
        if !(d >= table.d_min && d <= table.d_max) {
            push(
                AuditKind::Band,
                vec![a, b],
                vec![d],
                format!("entry {d} outside [{}, {}]", table.d_min, table.d_max),
                true,
            );
        }
        for v in [a, b] {
            if table.domain.binary_search(&v).is_err() {
                push(
                    AuditKind::Domain,
                    vec![a, b],
                    vec![d],
                    format!("entry value {v} is not in the element domain"),
                    true,
                );
            }
        }
    }
    for e in &table.self_pairs {
        push(
            AuditKind::Identity,
            vec![e.a, e.b],
            vec![e.d],
            "entry pairs a value with itself; equal values are always at distance 0".into(),
            true,
        );
    }
    for (e, first) in &table.conflicts {
        push(
            AuditKind::Symmetry,
            vec![e.a, e.b],
            vec![*first, e.d],
            format!("pair listed twice with distances {first} and {}", e.d),
            true,
        );
    }

    // Values without any entry are at d_max from everything else, so they are
    // interchangeable in a triangle; one representative covers them all.
    let mut scan: BTreeSet<u32> = BTreeSet::new();
    for &(a, b) in table.entries.keys() {
        for v in [a, b] {
            if table.domain.binary_search(&v).is_ok() {
                scan.insert(v);
            }
        }
    }
    if let Some(&isolated) = table.domain.iter().find(|v| !scan.contains(v)) {
        scan.insert(isolated);
    }
    let scan: Vec<u32> = scan.into_iter().collect();
    for (i, &a) in scan.iter().enumerate() {
        for &b in &scan[i + 1..] {
            let direct = table.distance(a, b);
            for &c in &scan {
                if c == a || c == b {
                    continue;
                }
                let (ac, cb) = (table.distance(a, c), table.distance(c, b));
                if direct > ac + cb + TOLERANCE {
                    push(
                        AuditKind::Triangle,
                        vec![a, b, c],
                        vec![direct, ac, cb],
                        format!("d({a},{b}) = {direct} > d({a},{c}) + d({c},{b}) = {}", ac + cb),
                        strict,
                    );
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AuditKind {
    Band,
    Ordering,
    Triangle,
    Symmetry,
    Identity,
    Domain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditViolation {
    pub kind: AuditKind,
    /// 1-based element position.
    pub element_index: usize,
    /// Offending values; element positions for ORDERING.
    pub witness: Vec<u32>,
    pub distances: Vec<f64>,
    pub detail: String,
    /// Whether the violation rejects the bundle (otherwise a warning).
    pub blocking: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub violations: Vec<AuditViolation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn blocking(&self) -> impl Iterator<Item = &AuditViolation> {
        self.violations.iter().filter(|v| v.blocking)
    }

    pub fn has_blocking(&self) -> bool {
        self.blocking().next().is_some()
    }

    pub fn count(&self, kind: AuditKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    /// Err with every blocking violation attached, Ok with the warnings.
    pub fn into_result(self) -> Result<AuditReport> {
        if !self.has_blocking() {
            return Ok(self);
        }
        let first = self.blocking().next().expect("has blocking");
        let summary = format!(
            "{} blocking violation(s); first: {:?} on element {}: {}",
            self.blocking().count(),
            first.kind,
            first.element_index,
            first.detail
        );
        Err(Error::Audit {
            summary,
            report: Some(self),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{Domain, ElementDef};
    use std::collections::BTreeMap;

    fn ontology() -> BodyOntology {
        BodyOntology::from_json(include_str!("../data/bundle/ontology.json")).unwrap()
    }

    fn schema() -> ElementSchema {
        ElementSchema::from_json(include_str!("../data/bundle/schema.json")).unwrap()
    }

    fn fixture() -> RelationTableSet {
        let specs = parse_relations(include_str!("../data/bundle/relations.json")).unwrap();
        RelationTableSet::build(specs, &schema(), &ontology()).unwrap()
    }

    fn one_element(kind: ElementKind, domain: Domain, spec: RelationTableSpec) -> RelationTableSet {
        let width = if kind == ElementKind::Where { 3 } else { 1 };
        let schema = ElementSchema::new(vec![ElementDef {
            name: "e".into(),
            kind,
            width,
            domain,
            labels: BTreeMap::new(),
        }])
        .unwrap();
        RelationTableSet::build(vec![spec], &schema, &ontology()).unwrap()
    }

    fn spec(d_min: f64, d_max: f64, entries: &[(u32, u32, f64)]) -> RelationTableSpec {
        RelationTableSpec {
            element_index: 1,
            d_min,
            d_max,
            mode: OrderingMode::Strict,
            ontology_defaults: None,
            entries: entries.iter().map(|&(a, b, d)| RelationEntry { a, b, d }).collect(),
        }
    }

    #[test]
    fn element_distance_cases() {
        let o = ontology();
        let (belly, leg, feet) = (
            o.body_code(&["belly"]).unwrap(),
            o.body_code(&["limbs", "leg"]).unwrap(),
            o.body_code(&["limbs", "feet"]).unwrap(),
        );
        let ts = one_element(ElementKind::Where, Domain::Ontology, spec(1.0, 9.0, &[(leg, feet, 2.0)]));
        assert_eq!(ts.element_distance(0, 123, 123).unwrap(), 0.0);
        assert_eq!(ts.element_distance(0, belly, leg).unwrap(), 9.0);
        assert_eq!(ts.element_distance(0, leg, feet).unwrap(), 2.0);
        assert_eq!(ts.element_distance(0, feet, leg).unwrap(), 2.0);
    }

    #[test]
    fn element_distance_errors() {
        let ts = fixture();
        assert!(matches!(ts.element_distance(0, 999, 100), Err(Error::Validation { .. })));
        assert!(matches!(ts.element_distance(7, 1, 1), Err(Error::Config(_))));
    }

    #[test]
    fn ontology_defaults_scale_tree_hops() {
        let ts = fixture();
        let t = ts.table(0).unwrap();
        // band [1, 3] over 1..=4 hops
        assert_eq!(t.distance(120, 123), 1.0);
        assert!((t.distance(100, 123) - (1.0 + 2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(t.distance(123, 131), 3.0);
        assert_eq!(t.distance(123, 124), 1.2); // explicit override
        assert_eq!(t.distance(123, 620), 3.0); // different part, unrelated
        assert!(!t.is_related(123, 620));
    }

    #[test]
    fn pythagorean_symptom_distance() {
        let schema = ElementSchema::new(
            (0..4)
                .map(|i| ElementDef {
                    name: format!("e{i}"),
                    kind: ElementKind::Scale,
                    width: 1,
                    domain: Domain::Range { min: 0, max: 9 },
                    labels: BTreeMap::new(),
                })
                .collect(),
        )
        .unwrap();
        let specs = vec![
            RelationTableSpec { element_index: 1, ..spec(1.0, 3.0, &[]) },
            RelationTableSpec { element_index: 2, ..spec(3.5, 4.0, &[]) },
            RelationTableSpec { element_index: 3, ..spec(5.0, 6.0, &[]) },
            RelationTableSpec { element_index: 4, ..spec(7.0, 8.0, &[]) },
        ];
        let ts = RelationTableSet::build(specs, &schema, &ontology()).unwrap();
        let x = Symptom::new([1, 1, 5, 5]);
        let y = Symptom::new([2, 2, 5, 5]);
        assert_eq!(ts.element_distances(&x, &y).unwrap(), vec![3.0, 4.0, 0.0, 0.0]);
        assert_eq!(ts.symptom_distance(&x, &y).unwrap(), 5.0);
        assert_eq!(ts.symptom_distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn fixture_audit_is_clean() {
        let report = fixture().audit();
        assert!(report.is_clean(), "{report:#?}");
    }

    #[test]
    fn band_violation_reported() {
        let ts = one_element(
            ElementKind::Scale,
            Domain::Range { min: 0, max: 9 },
            spec(1.0, 2.0, &[(1, 2, 0.5)]),
        );
        let report = ts.audit();
        assert_eq!(report.count(AuditKind::Band), 1);
        let v = report.blocking().next().unwrap();
        assert_eq!(v.witness, vec![1, 2]);
        assert_eq!(v.distances, vec![0.5]);
    }

    #[test]
    fn triangle_violation_reported_once() {
        let ts = one_element(
            ElementKind::Scale,
            Domain::Values(vec![1, 2, 3]),
            spec(1.0, 9.0, &[(1, 3, 1.0), (3, 2, 1.0)]),
        );
        let report = ts.audit();
        assert_eq!(report.violations.len(), 1, "{report:#?}");
        let v = &report.violations[0];
        assert_eq!(v.kind, AuditKind::Triangle);
        assert_eq!(v.witness, vec![1, 2, 3]);
        assert_eq!(v.distances, vec![9.0, 1.0, 1.0]);
        assert!(v.blocking);
    }

    #[test]
    fn lenient_triangle_is_a_warning() {
        let mut s = spec(1.0, 9.0, &[(1, 3, 1.0), (3, 2, 1.0)]);
        s.mode = OrderingMode::Lenient;
        let report = one_element(ElementKind::Scale, Domain::Values(vec![1, 2, 3]), s).audit();
        assert_eq!(report.count(AuditKind::Triangle), 1);
        assert!(!report.has_blocking());
    }

    #[test]
    fn symmetry_and_identity_checks() {
        let ts = one_element(
            ElementKind::Scale,
            Domain::Range { min: 0, max: 9 },
            spec(1.0, 2.0, &[(1, 2, 1.5), (2, 1, 1.7), (4, 4, 1.0)]),
        );
        let report = ts.audit();
        assert_eq!(report.count(AuditKind::Symmetry), 1);
        assert_eq!(report.count(AuditKind::Identity), 1);
        // first listing wins for lookups, both directions agree
        assert_eq!(ts.element_distance(0, 2, 1).unwrap(), 1.5);
        assert_eq!(ts.element_distance(0, 4, 4).unwrap(), 0.0);
    }

    #[test]
    fn ordering_violation_names_both_elements() {
        let mut specs = parse_relations(include_str!("../data/bundle/relations.json")).unwrap();
        specs[2].d_min = 8.0;
        let ts = RelationTableSet::build(specs.clone(), &schema(), &ontology()).unwrap();
        let report = ts.audit();
        let v: Vec<_> = report.blocking().collect();
        assert_eq!(v.len(), 1, "{report:#?}");
        assert_eq!(v[0].kind, AuditKind::Ordering);
        assert_eq!(v[0].witness, vec![2, 3]);

        specs[2].mode = OrderingMode::Lenient;
        let ts = RelationTableSet::build(specs, &schema(), &ontology()).unwrap();
        assert!(!ts.audit().has_blocking());
    }

    #[test]
    fn missing_table_is_config_error() {
        let mut specs = parse_relations(include_str!("../data/bundle/relations.json")).unwrap();
        specs.pop();
        assert!(matches!(
            RelationTableSet::build(specs.clone(), &schema(), &ontology()),
            Err(Error::Config(_))
        ));
        let mut dup = specs.clone();
        dup.push(specs[0].clone());
        assert!(RelationTableSet::build(dup, &schema(), &ontology()).is_err());
    }

    #[test]
    fn isolated_values_witness_oversized_entries() {
        // 1-2 above 2*d_max is only broken through an unrelated middle value
        let ts = one_element(
            ElementKind::Scale,
            Domain::Range { min: 0, max: 9 },
            spec(1.0, 2.0, &[(1, 2, 5.0)]),
        );
        let report = ts.audit();
        assert_eq!(report.count(AuditKind::Band), 1);
        assert_eq!(report.count(AuditKind::Triangle), 1);
    }
}
