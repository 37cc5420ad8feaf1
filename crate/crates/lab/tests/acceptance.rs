//! Runs the ten acceptance criteria and prints one verdict line for each.
//! Exits with a failing status if any criterion fails.

use std::process::ExitCode;

use rellich_lab::acceptance;
use rellich_lab::Config;

fn main() -> ExitCode {
    // `cargo test -- --list` and friends expect no work to be done.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    // ACCEPTANCE_SEED reruns the randomized batteries on another stream.
    let seed = match std::env::var("ACCEPTANCE_SEED") {
        Ok(s) => match s.parse() {
            Ok(v) => v,
            Err(_) => {
                eprintln!("ACCEPTANCE_SEED must be an unsigned integer, got `{s}`");
                return ExitCode::FAILURE;
            }
        },
        Err(_) => Config::default().seed,
    };
    println!("running the acceptance suite (seed {seed})");
    let outcomes = acceptance::run_all(seed, |o| println!("{}", o.line()));
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    if passed == outcomes.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
