use serde::Serialize;
use std::fmt;

/// Most violations recorded per rule; the count keeps growing past this.
pub const MAX_WITNESSES_PER_RULE: usize = 64;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Violation {
    pub rule: String,
    pub witness: Vec<usize>,
    pub detail: String,
}

/// Outcome of an exhaustive structural check. Empty iff every rule held.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Total number of failures per rule, including ones not kept as witnesses.
    pub counts: Vec<(String, usize)>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, rule: &str, witness: Vec<usize>, detail: impl Into<String>) {
        let slot = match self.counts.iter_mut().find(|(r, _)| r == rule) {
            Some((_, c)) => {
                *c += 1;
                *c
            }
            None => {
                self.counts.push((rule.to_string(), 1));
                1
            }
        };
        if slot <= MAX_WITNESSES_PER_RULE {
            self.violations.push(Violation {
                rule: rule.to_string(),
                witness,
                detail: detail.into(),
            });
        }
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn first(&self, rule: &str) -> Option<&Violation> {
        self.violations.iter().find(|v| v.rule == rule)
    }

    pub fn merge(&mut self, other: ValidationReport) {
        for (rule, c) in other.counts {
            match self.counts.iter_mut().find(|(r, _)| *r == rule) {
                Some((_, mine)) => *mine += c,
                None => self.counts.push((rule, c)),
            }
        }
        self.violations.extend(other.violations);
    }

    pub fn count(&self, rule: &str) -> usize {
        self.counts
            .iter()
            .find(|(r, _)| r == rule)
            .map_or(0, |(_, c)| *c)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "ok");
        }
        for (rule, count) in &self.counts {
            write!(f, "{rule}: {count} violation(s); ")?;
        }
        Ok(())
    }
}
