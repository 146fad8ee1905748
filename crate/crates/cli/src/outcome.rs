//! How a command ends, and the process exit code for each ending.

use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum Failure {
    /// Bad command line or configuration.
    Usage(String),
    /// Output could not be written.
    Io(String),
    /// One or more checks missed their thresholds.
    Checks(Vec<String>),
    /// A march stopped before `r_max`.
    Aborted(Vec<String>),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Checks(_) => 2,
            Failure::Aborted(_) => 3,
            Failure::Usage(_) => 64,
            Failure::Io(_) => 74,
        }
    }

    pub fn exit(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
            Failure::Checks(list) => {
                writeln!(f, "{} check(s) failed:", list.len())?;
                for l in list {
                    writeln!(f, "  - {l}")?;
                }
                Ok(())
            }
            Failure::Aborted(list) => {
                writeln!(f, "{} march(es) aborted:", list.len())?;
                for l in list {
                    writeln!(f, "  - {l}")?;
                }
                Ok(())
            }
        }
    }
}

/// Accumulates named checks with measured values and thresholds.
#[derive(Debug, Default)]
pub struct Checklist {
    lines: Vec<(bool, String)>,
}

impl Checklist {
    pub fn record(&mut self, ok: bool, line: impl Into<String>) {
        self.lines.push((ok, line.into()));
    }

    /// Records a core error as a failed check.
    pub fn record_err(&mut self, what: &str, e: &nozzle_core::Error) {
        self.record(false, format!("{what}: {e}"));
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        for (ok, l) in &self.lines {
            s.push_str(if *ok { "PASS " } else { "FAIL " });
            s.push_str(l);
            s.push('\n');
        }
        s
    }

    pub fn into_result(self) -> Result<(), Failure> {
        let failed: Vec<String> = self
            .lines
            .into_iter()
            .filter(|(ok, _)| !ok)
            .map(|(_, l)| l)
            .collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Failure::Checks(failed))
        }
    }
}
