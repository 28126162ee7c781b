use weightlab::invariants::run_invariants;

#[test]
fn module_invariants() {
    let outcomes = run_invariants();
    println!();
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
