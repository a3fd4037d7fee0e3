//! Loading a JSON problem file and running commands through the report cache.

use eqtwist::run::{load, to_json, Cache, CacheMode, Command, Document};
use std::path::Path;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/k4_twisted.json");
    let spec = load(&path).unwrap();
    println!("inputs digest {}", spec.digest);
    let dir = std::env::temp_dir().join("eqtwist-example-cache");
    let cache = Cache {
        dir,
        mode: CacheMode::Use,
    };
    let mut reports = Vec::new();
    for cmd in [
        Command::Validate,
        Command::Transgress { element: None },
        Command::Delocalize { kmax: 4 },
    ] {
        let (report, _) = cache.run(&cmd, &spec).unwrap();
        println!("{}: passed {}", cmd.name(), report.passed());
        reports.push(report);
    }
    let doc = Document::new(reports);
    println!("{}", doc.markdown());
    println!("{} bytes of JSON", to_json(&doc).len());
}

#[test]
fn runs() {
    main();
}
