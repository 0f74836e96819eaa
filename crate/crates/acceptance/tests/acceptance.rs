use std::process::ExitCode;

use nelson_lab_acceptance::{run, CRITERIA};

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for cr in &CRITERIA {
        let v = run(cr);
        println!(
            "acceptance criterion {:>2} {:<22} {:<17} {}  ({:.1} s) {}",
            cr.number,
            cr.id.as_str(),
            cr.scenario,
            if v.passed { "PASS" } else { "FAIL" },
            v.elapsed.as_secs_f64(),
            v.detail
        );
        if !v.passed {
            failed.push(cr.number);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!(
            "acceptance: {} of {} criteria failed: {:?}",
            failed.len(),
            CRITERIA.len(),
            failed
        );
        ExitCode::FAILURE
    }
}
