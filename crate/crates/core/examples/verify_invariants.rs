//! Runs the randomized invariant suites, once clean and once with a
//! deliberately perturbed feedback matrix.
//!
//! cargo run --release --example verify_invariants

use mimo_sic::cli::run_verify;

fn main() {
    let clean = run_verify(1, 500, false);
    print!("{}", clean.to_text());
    println!("all passed: {}\n", clean.passed());

    let faulty = run_verify(1, 20, true);
    print!("{}", faulty.to_text());
    println!("all passed: {}", faulty.passed());
}
