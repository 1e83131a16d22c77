//! Rank the bundled diseases against a patient case, printed as a table and
//! with the per-symptom trace for the best match.

use symdist::{diagnose, CaseInput, KnowledgeBase, ListDistanceParams};

fn main() -> symdist::Result<()> {
    let kb = KnowledgeBase::fixture();
    let input = CaseInput::from_json(r#"{"case_id": "demo", "symptoms": ["10000234", [120, 2, 1, 2], "50030400"]}"#)?;
    let case = kb.ingest_case(&input)?;

    let ranking = diagnose(&case, &kb, &ListDistanceParams::default())?;
    print!("{}", ranking.to_table());

    let best = &ranking.entries[0];
    println!("\n{} ({})", best.name, best.disease_id);
    for t in &best.trace {
        println!("  {} -> {} at {:.4}", t.symptom, t.nearest, t.distance);
    }

    // patient-side only ranking
    let one_sided = diagnose(&case, &kb, &ListDistanceParams { lambda: 0.0, k: 3 })?;
    let ids: Vec<&str> = one_sided.entries.iter().map(|e| e.disease_id.as_str()).collect();
    println!("\nlambda 0: {ids:?}");
    Ok(())
}
