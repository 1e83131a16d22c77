//! Element schema and the positional-decimal symptom codec.
//!
//! A symptom is a vector of element values `ch_1..ch_p`. Element `i` owns
//! `t_i` decimal digits and the packed characteristic value is
//! `Σ ch_i · 10^{r_i}` with `r_i = Σ_{j>i} t_j`, so the first element is the
//! most significant. With widths `(3,3,1,1)`, `(100, 002, 3, 4)` packs to
//! `10000234`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codes;
use crate::error::{Error, Result};
use crate::ontology::BodyOntology;

pub const MAX_ELEMENTS: usize = 8;
pub const MAX_WIDTH: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ElementKind {
    /// Body location, backed by the ontology.
    Where,
    /// 0..9 graded value (severity, onset, duration, ...).
    Scale,
    /// Categorical value (kind of trouble, direction, ...).
    Category,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Admissible values are the ontology codes.
    Ontology,
    Range {
        #[serde(with = "codes::value")]
        min: u32,
        #[serde(with = "codes::value")]
        max: u32,
    },
    Values(#[serde(with = "codes::values")] Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementDef {
    pub name: String,
    pub kind: ElementKind,
    pub width: u8,
    pub domain: Domain,
    /// Optional human-readable labels keyed by value (as written in the file).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
}

impl ElementDef {
    pub fn modulus(&self) -> u32 {
        10u32.pow(self.width as u32)
    }

    /// Codec-level admissibility. WHERE membership in the ontology is
    /// checked separately by [`ElementSchema::validate`].
    pub fn admits(&self, value: u32) -> bool {
        value < self.modulus()
            && match &self.domain {
                Domain::Ontology => true,
                Domain::Range { min, max } => (*min..=*max).contains(&value),
                Domain::Values(values) => values.binary_search(&value).is_ok(),
            }
    }

    /// The finite set of admissible values, ascending.
    pub fn values(&self, ontology: &BodyOntology) -> Vec<u32> {
        match &self.domain {
            Domain::Ontology => ontology.codes().filter(|&c| c < self.modulus()).collect(),
            Domain::Range { min, max } => (*min..=*max).collect(),
            Domain::Values(values) => values.clone(),
        }
    }

    pub fn label(&self, value: u32) -> Option<&str> {
        self.labels
            .iter()
            .find(|(k, _)| codes::parse_digits(k) == Some(value.into()))
            .map(|(_, v)| v.as_str())
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("empty element name".into());
        }
        if !(1..=MAX_WIDTH).contains(&self.width) {
            return Err(format!("width {} outside 1..={MAX_WIDTH}", self.width));
        }
        let modulus = self.modulus();
        match (&self.kind, &self.domain) {
            (ElementKind::Where, Domain::Ontology) if self.width == 3 => {}
            (ElementKind::Where, _) => {
                return Err("a WHERE element must have width 3 and the ontology domain".into())
            }
            (_, Domain::Ontology) => {
                return Err("only a WHERE element may use the ontology domain".into())
            }
            (_, Domain::Range { min, max }) => {
                if min > max || *max >= modulus {
                    return Err(format!("range {min}..={max} does not fit width {}", self.width));
                }
            }
            (_, Domain::Values(values)) => {
                if values.is_empty() {
                    return Err("empty value domain".into());
                }
                if let Some(v) = values.iter().find(|&&v| v >= modulus) {
                    return Err(format!("domain value {v} does not fit width {}", self.width));
                }
            }
        }
        Ok(())
    }
}

/// Ordered element definitions. Element order is significant: it fixes both
/// digit significance and the relation table each element is measured with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ElementDef>", into = "Vec<ElementDef>")]
pub struct ElementSchema {
    elements: Vec<ElementDef>,
    /// `10^{r_i}` per element.
    scales: Vec<u128>,
    total_width: usize,
}

impl TryFrom<Vec<ElementDef>> for ElementSchema {
    type Error = Error;

    fn try_from(elements: Vec<ElementDef>) -> Result<Self> {
        ElementSchema::new(elements)
    }
}

impl From<ElementSchema> for Vec<ElementDef> {
    fn from(schema: ElementSchema) -> Self {
        schema.elements
    }
}

impl ElementSchema {
    pub fn new(mut elements: Vec<ElementDef>) -> Result<Self> {
        if elements.is_empty() || elements.len() > MAX_ELEMENTS {
            return Err(Error::validation(
                "schema",
                format!("expected 1..={MAX_ELEMENTS} elements, got {}", elements.len()),
            ));
        }
        for (i, el) in elements.iter_mut().enumerate() {
            if let Domain::Values(values) = &mut el.domain {
                values.sort_unstable();
                values.dedup();
            }
            el.check().map_err(|detail| Error::Validation {
                context: format!("schema element {:?}", el.name),
                element: Some(i + 1),
                value: None,
                detail,
            })?;
        }
        let where_count = elements.iter().filter(|e| e.kind == ElementKind::Where).count();
        if where_count > 1 {
            return Err(Error::validation("schema", "more than one WHERE element"));
        }
        for (i, el) in elements.iter().enumerate() {
            if elements[..i].iter().any(|e| e.name == el.name) {
                return Err(Error::validation("schema", format!("duplicate element name {:?}", el.name)));
            }
        }
        let total_width = elements.iter().map(|e| e.width as usize).sum();
        let mut scales = vec![0u128; elements.len()];
        let mut scale = 1u128;
        for (i, el) in elements.iter().enumerate().rev() {
            scales[i] = scale;
            scale *= 10u128.pow(el.width as u32);
        }
        Ok(ElementSchema {
            elements,
            scales,
            total_width,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let elements: Vec<ElementDef> =
            serde_json::from_str(text).map_err(|e| Error::format("schema.json", e))?;
        Self::new(elements)
    }

    pub fn elements(&self) -> &[ElementDef] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `Σ t_i`.
    pub fn total_width(&self) -> usize {
        self.total_width
    }

    /// Exponent `r_i` of element `i` (0-based).
    pub fn exponent(&self, i: usize) -> u32 {
        self.elements[i + 1..].iter().map(|e| e.width as u32).sum()
    }

    pub fn where_index(&self) -> Option<usize> {
        self.elements.iter().position(|e| e.kind == ElementKind::Where)
    }

    pub fn widths(&self) -> Vec<u8> {
        self.elements.iter().map(|e| e.width).collect()
    }

    fn check_values(&self, s: &Symptom) -> Result<()> {
        if s.len() != self.len() {
            return Err(Error::validation(
                "symptom",
                format!("expected {} element values, got {}", self.len(), s.len()),
            ));
        }
        for (i, (el, &v)) in self.elements.iter().zip(s.values()).enumerate() {
            if !el.admits(v) {
                return Err(Error::Validation {
                    context: format!("element {} ({})", i + 1, el.name),
                    element: Some(i + 1),
                    value: Some(v.into()),
                    detail: format!("value {v} outside the element domain"),
                });
            }
        }
        Ok(())
    }

    /// Pack element values into the characteristic value.
    pub fn encode(&self, s: &Symptom) -> Result<CharacteristicValue> {
        self.check_values(s)?;
        let code = s
            .values()
            .iter()
            .zip(&self.scales)
            .map(|(&v, &scale)| v as u128 * scale)
            .sum();
        Ok(CharacteristicValue(code))
    }

    /// Split a characteristic value back into element values.
    pub fn decode(&self, code: CharacteristicValue) -> Result<Symptom> {
        if code.0 >= 10u128.pow(self.total_width as u32) {
            return Err(Error::Range {
                code: code.0,
                width: self.total_width,
            });
        }
        let values = self
            .elements
            .iter()
            .zip(&self.scales)
            .map(|(el, &scale)| ((code.0 / scale) % el.modulus() as u128) as u32)
            .collect();
        let symptom = Symptom(values);
        self.check_values(&symptom)?;
        Ok(symptom)
    }

    /// Parse a digit string such as `"00000234"` and check it fits.
    pub fn parse_code(&self, text: &str) -> Result<CharacteristicValue> {
        let value = codes::parse_digits(text)
            .ok_or_else(|| Error::validation("characteristic value", format!("{text:?} is not a digit string")))?;
        if value >= 10u128.pow(self.total_width as u32) {
            return Err(Error::Range {
                code: value,
                width: self.total_width,
            });
        }
        Ok(CharacteristicValue(value))
    }

    /// Parse `"100,002,3,4"`.
    pub fn parse_values(&self, text: &str) -> Result<Symptom> {
        let values = text
            .split(',')
            .map(|part| {
                codes::parse_digits(part)
                    .and_then(|v| u32::try_from(v).ok())
                    .ok_or_else(|| Error::validation("element values", format!("{part:?} is not a digit string")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Symptom(values))
    }

    /// Comma-joined element values, each zero-padded to its width.
    pub fn format_values(&self, s: &Symptom) -> String {
        self.elements
            .iter()
            .zip(s.values())
            .map(|(el, v)| format!("{v:0width$}", width = el.width as usize))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn render(&self, code: CharacteristicValue) -> String {
        code.padded(self.total_width)
    }

    /// Collect every violation instead of stopping at the first.
    pub fn validate(&self, s: &Symptom, ontology: &BodyOntology) -> ValidationReport {
        let mut violations = Vec::new();
        if s.len() != self.len() {
            violations.push(SymptomViolation {
                kind: ViolationKind::Arity,
                element_index: None,
                value: None,
                detail: format!("expected {} element values, got {}", self.len(), s.len()),
            });
        }
        for (i, (el, &v)) in self.elements.iter().zip(s.values()).enumerate() {
            let mut push = |kind, detail: String| {
                violations.push(SymptomViolation {
                    kind,
                    element_index: Some(i + 1),
                    value: Some(v),
                    detail,
                })
            };
            if v >= el.modulus() {
                push(
                    ViolationKind::Range,
                    format!("{v} needs more than {} digit(s)", el.width),
                );
            } else if !el.admits(v) {
                push(ViolationKind::Domain, format!("{v} is not an admissible {}", el.name));
            } else if el.domain == Domain::Ontology && !ontology.contains(v) {
                push(ViolationKind::Ontology, format!("{v:03} is not a body ontology code"));
            }
        }
        ValidationReport { violations }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    Arity,
    Range,
    Domain,
    Ontology,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymptomViolation {
    pub kind: ViolationKind,
    pub element_index: Option<usize>,
    pub value: Option<u32>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<SymptomViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// First violation as an error, if any.
    pub fn into_result(self, context: &str) -> Result<()> {
        match self.violations.into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::Validation {
                context: context.to_string(),
                element: v.element_index,
                value: v.value.map(Into::into),
                detail: v.detail,
            }),
        }
    }
}

/// Element values `ch_1..ch_p` of one symptom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symptom(pub Vec<u32>);

impl Symptom {
    pub fn new(values: impl Into<Vec<u32>>) -> Self {
        Symptom(values.into())
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Packed characteristic value of a symptom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CharacteristicValue(pub u128);

impl CharacteristicValue {
    pub fn padded(self, width: usize) -> String {
        format!("{:0width$}", self.0)
    }
}

impl fmt::Display for CharacteristicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> ElementSchema {
        ElementSchema::from_json(include_str!("../data/bundle/schema.json")).unwrap()
    }

    fn ontology() -> BodyOntology {
        BodyOntology::from_json(include_str!("../data/bundle/ontology.json")).unwrap()
    }

    #[test]
    fn packs_worked_example() {
        let s = schema();
        assert_eq!(s.widths(), vec![3, 3, 1, 1]);
        assert_eq!(s.total_width(), 8);
        assert_eq!(s.encode(&Symptom::new([100, 2, 3, 4])).unwrap(), CharacteristicValue(10000234));
        assert_eq!(s.encode(&Symptom::new([0, 0, 0, 0])).unwrap(), CharacteristicValue(0));
        assert_eq!(s.encode(&Symptom::new([200, 5, 0, 0])).unwrap(), CharacteristicValue(20000500));
    }

    #[test]
    fn unpacks_table_codes() {
        let s = schema();
        assert_eq!(s.decode(CharacteristicValue(10000234)).unwrap(), Symptom::new([100, 2, 3, 4]));
        assert_eq!(s.decode(CharacteristicValue(0)).unwrap(), Symptom::new([0, 0, 0, 0]));
        assert_eq!(s.decode(CharacteristicValue(60040302)).unwrap(), Symptom::new([600, 403, 0, 2]));
    }

    #[test]
    fn exponents_follow_widths() {
        let s = schema();
        assert_eq!((0..4).map(|i| s.exponent(i)).collect::<Vec<_>>(), vec![5, 2, 1, 0]);
    }

    #[test]
    fn encode_names_offending_element() {
        let err = schema().encode(&Symptom::new([100, 2, 3, 12])).unwrap_err();
        match err {
            Error::Validation { element, value, .. } => {
                assert_eq!(element, Some(4));
                assert_eq!(value, Some(12));
            }
            other => panic!("unexpected {other:?}"),
        }
        // 999 is not in the trouble category list
        assert!(schema().encode(&Symptom::new([100, 999, 3, 4])).is_err());
        assert!(schema().encode(&Symptom::new([100, 2, 3])).is_err());
    }

    #[test]
    fn decode_rejects_wide_codes() {
        let err = schema().decode(CharacteristicValue(100_000_000)).unwrap_err();
        assert!(matches!(err, Error::Range { width: 8, .. }));
        assert!(schema().parse_code("123456789").is_err());
        assert_eq!(schema().parse_code("00000000").unwrap(), CharacteristicValue(0));
    }

    #[test]
    fn decode_rejects_out_of_domain_field() {
        // trouble field 999 is not admissible
        let err = schema().decode(CharacteristicValue(10099934)).unwrap_err();
        assert!(matches!(err, Error::Validation { element: Some(2), .. }));
    }

    #[test]
    fn validation_report() {
        let (s, o) = (schema(), ontology());
        assert!(s.validate(&Symptom::new([100, 2, 3, 4]), &o).is_valid());

        let r = s.validate(&Symptom::new([999, 0, 0, 0]), &o);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].kind, ViolationKind::Ontology);

        let r = s.validate(&Symptom::new([100, 2, 3, 12]), &o);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].kind, ViolationKind::Range);
        assert_eq!(r.violations[0].element_index, Some(4));
    }

    #[test]
    fn schema_rules() {
        let el = |name: &str, kind, width, domain| ElementDef {
            name: name.into(),
            kind,
            width,
            domain,
            labels: BTreeMap::new(),
        };
        let scale = |name: &str| el(name, ElementKind::Scale, 1, Domain::Range { min: 0, max: 9 });
        assert!(ElementSchema::new(vec![]).is_err());
        assert!(ElementSchema::new((0..9).map(|i| scale(&format!("e{i}"))).collect()).is_err());
        assert!(ElementSchema::new((0..8).map(|i| scale(&format!("e{i}"))).collect()).is_ok());
        assert!(ElementSchema::new(vec![el("w", ElementKind::Scale, 5, Domain::Range { min: 0, max: 9 })]).is_err());
        assert!(ElementSchema::new(vec![el("w", ElementKind::Scale, 1, Domain::Range { min: 0, max: 10 })]).is_err());
        assert!(ElementSchema::new(vec![
            el("a", ElementKind::Where, 3, Domain::Ontology),
            el("b", ElementKind::Where, 3, Domain::Ontology)
        ])
        .is_err());
        assert!(ElementSchema::new(vec![scale("a"), scale("a")]).is_err());
        assert!(ElementSchema::new(vec![el("c", ElementKind::Category, 2, Domain::Ontology)]).is_err());
    }

    #[test]
    fn thirty_two_digit_schema_fits() {
        let wide: Vec<_> = (0..8)
            .map(|i| ElementDef {
                name: format!("e{i}"),
                kind: ElementKind::Category,
                width: 4,
                domain: Domain::Range { min: 0, max: 9999 },
                labels: BTreeMap::new(),
            })
            .collect();
        let s = ElementSchema::new(wide).unwrap();
        let max = Symptom::new([9999; 8]);
        let code = s.encode(&max).unwrap();
        assert_eq!(code.0, 10u128.pow(32) - 1);
        assert_eq!(s.decode(code).unwrap(), max);
    }

    #[test]
    fn values_text_round_trip() {
        let s = schema();
        let v = s.parse_values("100,002,3,4").unwrap();
        assert_eq!(v, Symptom::new([100, 2, 3, 4]));
        assert_eq!(s.format_values(&v), "100,002,3,4");
        assert_eq!(s.render(CharacteristicValue(234)), "00000234");
    }
}
