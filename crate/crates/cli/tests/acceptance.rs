//! The fourteen acceptance criteria at their pinned sizes, seeds and time limits.
//! Prints one PASS/FAIL line per criterion, then fails if any row failed.

use mcal_audit::verify::{run, suite};

#[test]
fn acceptance() {
    let rows: Vec<_> = suite().iter().map(run).collect();
    for row in &rows {
        println!("{row}");
    }
    let failed: Vec<u8> = rows.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} passed, {} failed", rows.len() - failed.len(), failed.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
