//! Reporting for the acceptance suite in `tests/acceptance.rs`.

use std::io::Write;
use std::time::Duration;

/// Prints one PASS/FAIL line for criterion `id` and panics when it is not
/// met within `budget`.
///
/// The line goes straight to stderr so it shows up for passing tests too.
pub fn verdict(id: u32, pass: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let on_time = elapsed <= budget;
    let status = if pass && on_time { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {id}: {status} ({detail}; {:.1}s of {:.0}s)\n",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {id} not met: {detail}");
    assert!(on_time, "criterion {id} over its time budget");
}
