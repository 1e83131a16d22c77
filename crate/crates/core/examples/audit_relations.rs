//! Audit a relation bundle, then break it in two ways and show what the
//! audit reports.

use symdist::metric::OrderingMode;
use symdist::{BundleFiles, Error};

fn report(label: &str, files: BundleFiles) {
    match files.build() {
        Ok(kb) => println!("{label}: clean ({} violations)", kb.audit().violations.len()),
        Err(Error::Audit { report: Some(r), .. }) => {
            println!("{label}: rejected");
            for v in &r.violations {
                println!("  {:?} element {} witness {:?}: {}", v.kind, v.element_index, v.witness, v.detail);
            }
        }
        Err(e) => println!("{label}: {e}"),
    }
}

fn main() {
    report("fixture", BundleFiles::fixture());

    let mut band = BundleFiles::fixture();
    band.relations[1].entries[0].d = 40.0;
    report("entry outside band", band);

    let mut overlap = BundleFiles::fixture();
    overlap.relations[3].d_min = 10.0;
    report("overlapping bands", overlap.clone());

    // the same overlap only warns when the table is lenient
    overlap.relations[3].mode = OrderingMode::Lenient;
    match overlap.build() {
        Ok(kb) => {
            for v in &kb.audit().violations {
                println!("lenient warning: {:?} witness {:?}", v.kind, v.witness);
            }
        }
        Err(e) => println!("lenient: {e}"),
    }
}
