//! Prints one pass/fail line per acceptance criterion, with the rows behind
//! it, and exits non-zero if any criterion fails.

use std::process::ExitCode;

fn main() -> ExitCode {
    let criteria = moyal_validation::all();
    print!("{}", moyal_validation::render(&criteria));
    let failed: Vec<_> = criteria.iter().filter(|c| !c.pass()).map(|c| c.id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
