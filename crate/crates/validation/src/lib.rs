//! Reporting for the acceptance suite in `tests/acceptance.rs`.
//!
//! Run it with `cargo test -p dfmud-validation --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

/// Outcome of one check: every comparison it made, and whether all held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub pass: bool,
    pub lines: Vec<String>,
}

impl Default for Check {
    fn default() -> Self {
        Self::new()
    }
}

impl Check {
    pub fn new() -> Self {
        Self {
            pass: true,
            lines: Vec::new(),
        }
    }

    /// Records one comparison; any failing comparison fails the check.
    pub fn expect(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.lines
            .push(format!("{} {what}", if ok { "ok  " } else { "MISS" }));
    }

    /// An ungraded line.
    pub fn info(&mut self, what: String) {
        self.lines.push(format!("info {what}"));
    }
}

pub type Runner<'a> = Box<dyn FnMut() -> Check + 'a>;

/// Runs the checks in order, prints a `[PASS]`/`[FAIL]` line and the details
/// of each, then a summary. Fails if any check failed.
pub fn run(checks: Vec<(&str, Runner)>) -> ExitCode {
    let mut results = Vec::with_capacity(checks.len());
    for (label, mut check) in checks {
        let t = Instant::now();
        let c = check();
        println!(
            "[{}] {label} ({:.1} s)",
            if c.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        for l in &c.lines {
            println!("       {l}");
        }
        results.push((label, c.pass));
    }
    let passed = results.iter().filter(|r| r.1).count();
    println!("acceptance: {passed}/{} checks passed", results.len());
    for (label, pass) in &results {
        if !pass {
            println!("  failed: {label}");
        }
    }
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_miss_fails_the_check() {
        let mut c = Check::new();
        c.expect(true, "a".into());
        c.info("b".into());
        assert!(c.pass);
        c.expect(false, "c".into());
        c.expect(true, "d".into());
        assert!(!c.pass);
        assert_eq!(c.lines, ["ok   a", "info b", "MISS c", "ok   d"]);
    }
}
