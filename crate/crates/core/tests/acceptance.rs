//! Runs the twelve end-to-end criteria and prints one line per criterion.

use weightlab::acceptance::run_all;

#[test]
fn acceptance() {
    let outcomes = run_all();
    println!();
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
