//! One line per acceptance criterion. Criterion 6 is known to fail on the
//! third-order `U₃` residual of the truncated series; any other failure, or a
//! change in how 6 fails, makes this target exit nonzero.

use std::process::ExitCode;

use stokes_spectra::acceptance::{run_all, AcceptanceOptions};

fn main() -> ExitCode {
    let start = std::time::Instant::now();
    let reports = run_all(&AcceptanceOptions::default());
    let mut unexpected = Vec::new();
    for r in &reports {
        println!("{}", r.line());
        for (k, v) in &r.numbers {
            println!("        {k} = {v:.6e}");
        }
        let expected_failure = r.id == 6 && r.detail.starts_with("u3 halving ratio") && !r.detail.contains(';');
        if !r.pass && !expected_failure {
            unexpected.push(r.id);
        }
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    println!("{passed}/{} criteria pass in {:.1} s", reports.len(), start.elapsed().as_secs_f64());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
