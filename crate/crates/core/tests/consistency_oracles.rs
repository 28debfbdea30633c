//! Cross-checks of the consistency tests against independent brute-force
//! and geometric oracles.

mod support;

use support::{aggregated_oracle_run, generated_triplet_run, polygon_oracle_run};

#[test]
fn aggregated_test_matches_exhaustive_enumeration_for_two_images() {
    let run = aggregated_oracle_run(2024, 500);
    assert_eq!(run.inconclusive, 0);
    assert_eq!(run.disagreements, 0, "{run:?}");
    assert_eq!(run.audit.violations, 0);
    assert_eq!(run.audit.checked, run.passed);
    assert!(run.passed > 50 && run.failed > 50, "{run:?}");
}

#[test]
fn image_level_test_matches_polygon_oracle_on_grid() {
    let run = polygon_oracle_run(99);
    assert_eq!(run.cases, 10_000);
    assert_eq!(run.disagreements, 0, "{run:?}");
    assert_eq!(run.audit.violations, 0);
    assert!(run.passes > 1000, "{run:?}");
}

#[test]
fn every_generated_triplet_passes_the_image_level_test() {
    let run = generated_triplet_run(3);
    assert_eq!(run.pairs, 20);
    assert_eq!(run.failures, 0, "{run:?}");
    assert_eq!(run.audit.violations, 0);
    assert!(run.checked > 10_000);
}
