//! Every numbered criterion at full sample counts, one line each.
//! Runs without the libtest harness so passing lines are printed too.

use std::process::ExitCode;

use swipt_relay::verify::acceptance::{run_all, Level};

fn main() -> ExitCode {
    println!("running acceptance criteria (full)");
    let results = run_all(Level::Full, |r| {
        println!("criterion {r} ({:.1}s)", r.elapsed.as_secs_f64());
    });
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("acceptance: {} passed; {} failed {:?}", results.len() - failed.len(), failed.len(), failed);
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
