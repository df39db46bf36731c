//! Structured verification reports.
//!
//! Every suite produces a list of check records; a record that fails always
//! names a concrete witness. JSON serialisation is schema-stable (keys:
//! suite, graph_hash, checks, bounds, seed) and timing data is kept out of
//! it so identical inputs produce identical bytes.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl CheckRecord {
    pub fn pass(id: impl Into<String>, anchor: impl Into<String>) -> CheckRecord {
        CheckRecord {
            id: id.into(),
            anchor: anchor.into(),
            status: CheckStatus::Pass,
            witness: None,
        }
    }

    pub fn pass_with(
        id: impl Into<String>,
        anchor: impl Into<String>,
        witness: impl Into<String>,
    ) -> CheckRecord {
        CheckRecord {
            id: id.into(),
            anchor: anchor.into(),
            status: CheckStatus::Pass,
            witness: Some(witness.into()),
        }
    }

    pub fn fail(
        id: impl Into<String>,
        anchor: impl Into<String>,
        witness: impl Into<String>,
    ) -> CheckRecord {
        CheckRecord {
            id: id.into(),
            anchor: anchor.into(),
            status: CheckStatus::Fail,
            witness: Some(witness.into()),
        }
    }

    pub fn skipped(
        id: impl Into<String>,
        anchor: impl Into<String>,
        witness: impl Into<String>,
    ) -> CheckRecord {
        CheckRecord {
            id: id.into(),
            anchor: anchor.into(),
            status: CheckStatus::Skipped,
            witness: Some(witness.into()),
        }
    }
}

/// A full suite run over one graph.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub graph_hash: String,
    pub checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip)]
    pub elapsed_ms: u128,
}

impl SuiteReport {
    pub fn failed(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .count()
    }

    pub fn passed(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Pass)
            .count()
    }

    pub fn skipped(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Skipped)
            .count()
    }

    pub fn is_clean(&self) -> bool {
        self.failed() == 0
    }
}

/// Count failures across a list of records.
pub fn failures(records: &[CheckRecord]) -> usize {
    records
        .iter()
        .filter(|c| c.status == CheckStatus::Fail)
        .count()
}
