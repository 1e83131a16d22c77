//! Per-element and combined distances between symptom codes.

use symdist::KnowledgeBase;

fn main() -> symdist::Result<()> {
    let kb = KnowledgeBase::fixture();
    let schema = kb.schema();
    let pairs = [
        ("10000234", "10000234"),
        ("12300234", "12400234"),
        ("12300234", "12000234"),
        ("10000234", "10000235"),
        ("10000234", "50030400"),
    ];
    for (a, b) in pairs {
        let x = schema.decode(schema.parse_code(a)?)?;
        let y = schema.decode(schema.parse_code(b)?)?;
        let parts = kb.relations().element_distances(&x, &y)?;
        let total = kb.relations().symptom_distance(&x, &y)?;
        println!("{a} vs {b}: {parts:?} -> {total:.4}");
    }

    let t = kb.relations();
    for table in t.tables() {
        println!("element {}: band [{}, {}], {:?}", table.element() + 1, table.d_min(), table.d_max(), table.mode());
    }
    Ok(())
}
