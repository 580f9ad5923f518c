#[path = "support/oracle.rs"]
mod oracle;

#[test]
fn one_thousand_random_sequences_match_the_reference() {
    oracle::run_equivalence(1000);
}
