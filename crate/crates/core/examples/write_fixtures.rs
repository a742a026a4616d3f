//! Regenerates the checked-in fixture files from the canonical in-crate
//! fixtures. Run from the workspace root:
//!
//! ```text
//! cargo run -p bridgerank-core --example write_fixtures
//! ```

use std::fmt::Write as _;
use std::path::Path;

use bridgerank_core::fixtures;
use bridgerank_core::io::write_votes_csv;

fn main() {
    let dir = Path::new("fixtures");
    std::fs::create_dir_all(dir).expect("create fixtures directory");

    let (f1, _) = fixtures::f1();
    std::fs::write(dir.join("f1_votes.csv"), write_votes_csv(&f1)).unwrap();

    let (f2, truth) = fixtures::f2(42);
    std::fs::write(dir.join("f2_votes.csv"), write_votes_csv(&f2)).unwrap();

    let mut groups = String::from("person_id,group\n");
    for (person, group) in &truth {
        let _ = writeln!(groups, "{person},{group}");
    }
    std::fs::write(dir.join("f2_truth.csv"), groups).unwrap();

    println!("fixtures regenerated in {}", dir.display());
}
