use std::fmt::Write as _;
use std::time::Duration;

use sha2::{Digest, Sha256};

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    /// Certified, verified, or theta agrees with alpha.
    Ok = 0,
    Input = 1,
    /// Nothing found up to the search bound, theta disagrees, or the sweep
    /// flagged candidates.
    NotFound = 2,
    Indeterminate = 3,
    VerificationFailed = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Line-oriented run report. Everything except timings depends only on
/// the inputs, flags and seeds.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    lines: Vec<String>,
    show_timings: bool,
}

impl RunReport {
    pub fn new(command: &str, show_timings: bool) -> Self {
        RunReport {
            lines: vec![format!("command: {command}")],
            show_timings,
        }
    }

    pub fn input(&mut self, name: &str, bytes: &[u8]) {
        self.lines.push(format!("input: {name} sha256={}", sha256_hex(bytes)));
    }

    pub fn seed(&mut self, seed: u64) {
        self.lines.push(format!("seed: {seed}"));
    }

    pub fn tolerance(&mut self, name: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("tolerance: {name}={value}"));
    }

    /// `module` is the code path that decided, `tol` the tolerance it used.
    pub fn verdict(&mut self, text: &str, module: &str, tol: &str) {
        self.lines.push(format!("verdict: {text} [{module}; {tol}]"));
    }

    pub fn note(&mut self, key: &str, text: impl std::fmt::Display) {
        self.lines.push(format!("{key}: {text}"));
    }

    pub fn certificate(&mut self, path: &str) {
        self.lines.push(format!("certificate: {path}"));
    }

    pub fn timing(&mut self, label: &str, elapsed: Duration) {
        if self.show_timings {
            self.lines.push(format!("time: {label} {:.3}s", elapsed.as_secs_f64()));
        }
    }

    pub fn finish(&mut self, exit: Exit) {
        self.lines.push(format!("exit: {}", exit.code()));
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}
