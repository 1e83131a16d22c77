//! Walk the three-level body tree and turn a wizard path into a WHERE code.

use symdist::KnowledgeBase;

fn main() -> symdist::Result<()> {
    let kb = KnowledgeBase::fixture();
    let body = kb.ontology();

    for part in body.children(None) {
        let subs: Vec<&str> = body.children(Some(part.code)).map(|n| n.label.as_str()).collect();
        println!("{:03} {:<6} {}", part.code, part.label, subs.join(", "));
    }

    let iris = body.body_code(&["head", "eye", "iris"])?;
    println!("\nhead > eye > iris = {iris:03}");
    println!("head > eye        = {:03}", body.body_code(&["head", "eye"])?);

    for (a, b) in [(123, 120), (123, 100), (123, 124), (630, 640), (123, 500)] {
        match body.tree_hops(a, b) {
            Some(h) => println!("{a:03} to {b:03}: {h} hops"),
            None => println!("{a:03} to {b:03}: different parts"),
        }
    }

    if let Err(e) = body.body_code(&["head", "knee"]) {
        println!("\n{e}");
    }
    Ok(())
}
