//! Serde helpers for numeric codes that travel as zero-padded digit strings.
//!
//! Readers accept either a JSON integer or a string of ASCII digits, so
//! `"002"` and `2` parse to the same value.

use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;
use std::fmt;

/// Parse a string of ASCII digits (leading zeros allowed).
pub fn parse_digits(text: &str) -> Option<u128> {
    let text = text.trim();
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

struct CodeVisitor;

impl Visitor<'_> for CodeVisitor {
    type Value = u128;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a non-negative integer or a string of digits")
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<u128, E> {
        Ok(v.into())
    }

    fn visit_u128<E: de::Error>(self, v: u128) -> Result<u128, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<u128, E> {
        u128::try_from(v).map_err(|_| E::custom(format!("negative code {v}")))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<u128, E> {
        parse_digits(v).ok_or_else(|| E::custom(format!("invalid digit string {v:?}")))
    }
}

pub fn deserialize_u128<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
    d.deserialize_any(CodeVisitor)
}

pub fn deserialize_u32<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
    let v = deserialize_u128(d)?;
    u32::try_from(v).map_err(|_| de::Error::custom(format!("code {v} too large")))
}

/// Element value: accepts integer or digit string, writes an integer.
pub mod value {
    use super::*;

    pub fn serialize<S: Serializer>(v: &u32, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(*v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
        deserialize_u32(d)
    }
}

pub mod values {
    use super::*;
    use serde::de::SeqAccess;

    pub fn serialize<S: Serializer>(v: &[u32], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u32>, D::Error> {
        struct SeqVisitor;
        impl<'de> Visitor<'de> for SeqVisitor {
            type Value = Vec<u32>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of codes")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<u32>, A::Error> {
                #[derive(serde::Deserialize)]
                struct Item(#[serde(deserialize_with = "deserialize_u32")] u32);
                let mut out = Vec::new();
                while let Some(Item(v)) = seq.next_element()? {
                    out.push(v);
                }
                Ok(out)
            }
        }
        d.deserialize_seq(SeqVisitor)
    }
}

/// Three-digit ontology code, always written as `"ddd"`.
pub mod padded3 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &u32, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:03}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
        deserialize_u32(d)
    }
}

pub mod padded3_opt {
    use super::*;
    use serde::Deserialize;

    pub fn serialize<S: Serializer>(v: &Option<u32>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_str(&format!("{v:03}")),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u32>, D::Error> {
        #[derive(Deserialize)]
        struct Wrapped(#[serde(deserialize_with = "deserialize_u32")] u32);
        Ok(Option::<Wrapped>::deserialize(d)?.map(|w| w.0))
    }
}
