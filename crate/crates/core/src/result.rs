// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

/// Output relations shared by the rule-based analysis and the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationName {
    StateE,
    StateA,
    StoredVal,
    StoredKont,
    FlowEe,
    FlowEa,
    FlowAa,
    FlowAe,
    PeekCtx,
    CopyCtx,
    Freevar,
}

impl RelationName {
    pub const ALL: [RelationName; 11] = [
        RelationName::StateE,
        RelationName::StateA,
        RelationName::StoredVal,
        RelationName::StoredKont,
        RelationName::FlowEe,
        RelationName::FlowEa,
        RelationName::FlowAa,
        RelationName::FlowAe,
        RelationName::PeekCtx,
        RelationName::CopyCtx,
        RelationName::Freevar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationName::StateE => "state_e",
            RelationName::StateA => "state_a",
            RelationName::StoredVal => "stored_val",
            RelationName::StoredKont => "stored_kont",
            RelationName::FlowEe => "flow_ee",
            RelationName::FlowEa => "flow_ea",
            RelationName::FlowAa => "flow_aa",
            RelationName::FlowAe => "flow_ae",
            RelationName::PeekCtx => "peek_ctx",
            RelationName::CopyCtx => "copy_ctx",
            RelationName::Freevar => "freevar",
        }
    }

    pub fn parse(s: &str) -> Option<RelationName> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            RelationName::StateE | RelationName::PeekCtx | RelationName::CopyCtx => 3,
            _ => 2,
        }
    }

    /// The machine state and the two stores.
    pub fn is_core(self) -> bool {
        matches!(
            self,
            RelationName::StateE
                | RelationName::StateA
                | RelationName::StoredVal
                | RelationName::StoredKont
        )
    }

    pub fn is_flow(self) -> bool {
        matches!(
            self,
            RelationName::FlowEe | RelationName::FlowEa | RelationName::FlowAa | RelationName::FlowAe
        )
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RelationName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Saturated output relations. Each row is a tab-separated line of
/// canonical terms; rows are sorted and unique.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnalysisResult {
    rows: [Vec<String>; 11],
}

/// Where two results first disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub relation: RelationName,
    pub row: String,
    /// True when only the left-hand result has the row.
    pub only_left: bool,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = if self.only_left { "left" } else { "right" };
        write!(f, "{}: only in {side}: {}", self.relation, self.row)
    }
}

impl AnalysisResult {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a result from unsorted, possibly duplicated rows.
    pub fn from_rows(rows: impl IntoIterator<Item = (RelationName, Vec<String>)>) -> Self {
        let mut r = AnalysisResult::default();
        for (rel, mut v) in rows {
            r.rows[rel.slot()].append(&mut v);
        }
        for v in r.rows.iter_mut() {
            v.sort();
            v.dedup();
        }
        r
    }

    pub fn rows(&self, rel: RelationName) -> &[String] {
        &self.rows[rel.slot()]
    }

    pub fn len(&self, rel: RelationName) -> usize {
        self.rows[rel.slot()].len()
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn tuples(&self, rel: RelationName) -> impl Iterator<Item = Vec<&str>> {
        self.rows[rel.slot()].iter().map(|r| r.split('\t').collect())
    }

    pub fn contains(&self, rel: RelationName, cells: &[&str]) -> bool {
        self.rows[rel.slot()].binary_search(&cells.join("\t")).is_ok()
    }

    /// Values stored at the value address with canonical text `vaddr`.
    pub fn values_at(&self, vaddr: &str) -> Vec<&str> {
        let prefix = format!("{vaddr}\t");
        self.rows(RelationName::StoredVal)
            .iter()
            .filter_map(|r| r.strip_prefix(&prefix))
            .collect()
    }

    /// Every value that reaches some continuation.
    pub fn applied_values(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .tuples(RelationName::StateA)
            .map(|t| t[0])
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// First row, in relation then row order, present in exactly one side.
    /// Flow relations are compared only when `flows` is set; the remaining
    /// bookkeeping relations never are.
    pub fn first_divergence(&self, other: &AnalysisResult, flows: bool) -> Option<Divergence> {
        for rel in RelationName::ALL {
            if !(rel.is_core() || (flows && rel.is_flow())) {
                continue;
            }
            let (a, b) = (self.rows(rel), other.rows(rel));
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let left = match (a.get(i), b.get(j)) {
                    (Some(x), Some(y)) if x == y => {
                        i += 1;
                        j += 1;
                        continue;
                    }
                    (Some(x), Some(y)) => x < y,
                    (Some(_), None) => true,
                    _ => false,
                };
                let row = if left { &a[i] } else { &b[j] };
                return Some(Divergence {
                    relation: rel,
                    row: row.clone(),
                    only_left: left,
                });
            }
        }
        None
    }
}
