//! Interaction rule variants.

use serde::{Deserialize, Serialize};

/// Which outcome an attempted move has when two particles meet.
///
/// `DropPush` and `Tasep` differ only in how identical species interact:
/// under `DropPush` the arriving particle treats an equal-species resident as
/// stronger and jumps over it, under `Tasep` the attempt is suppressed.
/// `NonIntegrableAlt` reverses the push/jump pairing; its interaction
/// matrices are well defined but repeated jump-overs loop forever, so the
/// dynamics modules reject it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleType {
    DropPush,
    Tasep,
    #[serde(rename = "non-integrable")]
    NonIntegrableAlt,
}

impl RuleType {
    /// Rules whose dynamics is well defined.
    pub fn is_integrable(self) -> bool {
        !matches!(self, RuleType::NonIntegrableAlt)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "drop-push" | "drop_push" | "droppush" => Some(RuleType::DropPush),
            "tasep" => Some(RuleType::Tasep),
            "non-integrable" | "non_integrable" | "non-integrable-alt" => {
                Some(RuleType::NonIntegrableAlt)
            }
            _ => None,
        }
    }
}

impl std::fmt::Display for RuleType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RuleType::DropPush => "drop-push",
            RuleType::Tasep => "tasep",
            RuleType::NonIntegrableAlt => "non-integrable",
        };
        f.write_str(s)
    }
}

/// Image of the length-2 word `(a, b)` under the jump-in matrix `B`.
///
/// `B` encodes the resolution of the hidden state created when the left
/// particle of a pair jumps onto its right neighbour coming from the left.
pub(crate) fn pair_b_image(rule: RuleType, a: u8, b: u8) -> Option<(u8, u8)> {
    match rule {
        RuleType::DropPush => (a <= b).then_some((b, a)),
        RuleType::Tasep => (a < b).then_some((b, a)),
        RuleType::NonIntegrableAlt => (a > b).then_some((a, b)),
    }
}

/// Image of the length-2 word `(a, b)` under the same-shape matrix `B'`.
pub(crate) fn pair_b_prime_image(rule: RuleType, a: u8, b: u8) -> Option<(u8, u8)> {
    match rule {
        RuleType::DropPush => (a > b).then_some((b, a)),
        RuleType::Tasep => (a >= b).then_some((b, a)),
        RuleType::NonIntegrableAlt => (a <= b).then_some((a, b)),
    }
}
