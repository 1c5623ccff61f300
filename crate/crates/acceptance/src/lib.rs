//! Pass/fail bookkeeping for the acceptance suite.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Runs criteria in order and prints one line per criterion as it finishes.
#[derive(Debug, Default)]
pub struct Suite {
    verdicts: Vec<Verdict>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    /// `check` returns `Ok(detail)` on pass and `Err(detail)` on failure; a
    /// panic counts as a failure.
    pub fn run(&mut self, id: u32, name: &'static str, check: impl FnOnce() -> Result<String, String>) {
        let start = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(d)) => (true, d),
            Ok(Err(d)) => (false, d),
            Err(p) => {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                (false, format!("panicked: {msg}"))
            }
        };
        let v = Verdict {
            id,
            name,
            pass,
            detail,
        };
        println!(
            "criterion {:>2} {} {} ({:.1}s): {}",
            v.id,
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            start.elapsed().as_secs_f64(),
            v.detail
        );
        self.verdicts.push(v);
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.pass)
    }

    /// Prints the tally and returns the process exit status.
    pub fn finish(&self) -> i32 {
        let failed: Vec<String> = self.failures().map(|v| v.id.to_string()).collect();
        println!(
            "acceptance: {} passed, {} failed{}",
            self.verdicts.len() - failed.len(),
            failed.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!(" (criteria {})", failed.join(", "))
            }
        );
        i32::from(!failed.is_empty())
    }
}

/// `Ok` when `value <= limit`, with a uniform message either way.
pub fn at_most(what: &str, value: f64, limit: f64) -> Result<String, String> {
    let msg = format!("{what} = {value:.3e} (limit {limit:.0e})");
    if value <= limit {
        Ok(msg)
    } else {
        Err(msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally() {
        let mut s = Suite::new();
        s.run(1, "ok", || Ok("fine".into()));
        s.run(2, "bad", || Err("no".into()));
        s.run(3, "boom", || panic!("kaput"));
        assert_eq!(s.failures().map(|v| v.id).collect::<Vec<_>>(), [2, 3]);
        assert!(s.verdicts()[2].detail.contains("kaput"));
        assert_eq!(s.finish(), 1);
    }

    #[test]
    fn limits() {
        assert!(at_most("x", 1e-7, 1e-6).is_ok());
        assert!(at_most("x", 1e-5, 1e-6).is_err());
        assert!(at_most("x", f64::NAN, 1e-6).is_err());
    }
}
