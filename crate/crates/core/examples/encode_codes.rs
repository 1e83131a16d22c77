//! Pack and unpack symptom codes with the bundled four-element schema.
//!
//! ```bash
//! cargo run --example encode_codes
//! ```

use symdist::{CharacteristicValue, KnowledgeBase, Symptom};

fn main() -> symdist::Result<()> {
    let kb = KnowledgeBase::fixture();
    let schema = kb.schema();
    println!("widths {:?}, total {} digits", schema.widths(), schema.total_width());

    let code = schema.encode(&Symptom::new([100, 2, 3, 4]))?;
    println!("(100,002,3,4) -> {}", code.0);

    for raw in [10000234u128, 20000500, 30001101, 60040302, 50030400] {
        let s = schema.decode(CharacteristicValue(raw))?;
        let names: Vec<String> = schema
            .elements()
            .iter()
            .zip(&s.0)
            .map(|(e, v)| e.label(*v).map(String::from).unwrap_or_else(|| kb.ontology().path(*v).unwrap_or_default().join("/")))
            .collect();
        println!("{raw} -> {} [{}]", schema.format_values(&s), names.join(", "));
    }

    // out-of-range values are refused with the offending element
    if let Err(e) = schema.encode(&Symptom::new([100, 2, 3, 12])) {
        println!("rejected: {e}");
    }
    Ok(())
}
