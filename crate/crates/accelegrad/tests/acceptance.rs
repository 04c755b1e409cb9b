//! Acceptance suite: one test per verification check, printing a
//! pass/fail line each. Run with `--nocapture` to see the lines for
//! passing checks too.

use accelegrad::verify::run_checks;

fn criterion(id: &str) {
    let reports = run_checks(Some(id));
    assert!(!reports.is_empty(), "no check matches `{id}`");
    for report in reports {
        println!("{}", report.line());
        assert!(report.passed, "{}", report.line());
    }
}

#[test]
fn smooth_acceleration_rate() {
    criterion("rate-smooth-accelegrad");
}

#[test]
fn nonsmooth_rate() {
    criterion("rate-nonsmooth-accelegrad");
}

#[test]
fn adagrad_baseline_rates() {
    criterion("rate-adagrad");
}

#[test]
fn deterministic_ordering() {
    criterion("deterministic-ordering");
}

#[test]
fn stochastic_minibatch_robustness() {
    criterion("stochastic-minibatch");
}

#[test]
fn projection_free_variant() {
    criterion("projection-free");
}

#[test]
fn lemma_oracles_and_weight_properties() {
    criterion("lemma-oracles");
}

#[test]
fn oracle_unbiasedness_and_replay() {
    criterion("oracle-unbiasedness-replay");
}

#[test]
fn gradient_correctness() {
    criterion("gradient-correctness");
}
