//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;

use semiheat::experiments::acceptance::run_acceptance;

fn main() -> ExitCode {
    let results = run_acceptance();
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if results.len() != 13 || !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
