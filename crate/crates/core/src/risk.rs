//! Qualitative risk assessment on the ISO/IEC 27005 style 5x5 matrix.
//!
//! Likelihood and impact are ordinal scales; the matrix maps every pair to
//! one of four levels. The three canonical attack verdicts live here too so
//! every report embeds the same numbers.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Likelihood {
    Rare,
    Unlikely,
    Possible,
    Likely,
    AlmostCertain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Impact {
    Minor,
    Moderate,
    Major,
    Severe,
    Catastrophic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RiskLevel {
    Low,
    Medium,
    High,
    Extreme,
}

impl Likelihood {
    pub const ALL: [Likelihood; 5] = [
        Likelihood::Rare,
        Likelihood::Unlikely,
        Likelihood::Possible,
        Likelihood::Likely,
        Likelihood::AlmostCertain,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Likelihood::Rare => "rare",
            Likelihood::Unlikely => "unlikely",
            Likelihood::Possible => "possible",
            Likelihood::Likely => "likely",
            Likelihood::AlmostCertain => "almost certain",
        }
    }
}

impl Impact {
    pub const ALL: [Impact; 5] = [
        Impact::Minor,
        Impact::Moderate,
        Impact::Major,
        Impact::Severe,
        Impact::Catastrophic,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Impact::Minor => "minor",
            Impact::Moderate => "moderate",
            Impact::Major => "major",
            Impact::Severe => "severe",
            Impact::Catastrophic => "catastrophic",
        }
    }
}

impl RiskLevel {
    pub fn label(self) -> &'static str {
        match self {
            RiskLevel::Low => "low",
            RiskLevel::Medium => "medium",
            RiskLevel::High => "high",
            RiskLevel::Extreme => "extreme",
        }
    }
}

impl fmt::Display for Likelihood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for Impact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Matrix rows indexed by likelihood, columns by impact (minor first).
const MATRIX: [[RiskLevel; 5]; 5] = {
    use RiskLevel::{Extreme, High, Low, Medium};
    [
        [Low, Low, Low, Low, Low],
        [Low, Low, Medium, Medium, Medium],
        [Low, Medium, Medium, High, High],
        [Low, Medium, High, High, Extreme],
        [Low, Medium, High, Extreme, Extreme],
    ]
};

/// Looks up the level for a likelihood/impact pair. Total over both scales.
pub fn risk_level(likelihood: Likelihood, impact: Impact) -> RiskLevel {
    MATRIX[likelihood.index()][impact.index()]
}

/// The three attacks the laboratory reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackId {
    #[serde(rename = "PRINTJACK_1")]
    Printjack1,
    #[serde(rename = "PRINTJACK_2")]
    Printjack2,
    #[serde(rename = "PRINTJACK_3")]
    Printjack3,
}

impl AttackId {
    pub const ALL: [AttackId; 3] = [
        AttackId::Printjack1,
        AttackId::Printjack2,
        AttackId::Printjack3,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AttackId::Printjack1 => "Printjack 1 (zombie fan-out)",
            AttackId::Printjack2 => "Printjack 2 (paper denial of service)",
            AttackId::Printjack3 => "Printjack 3 (job interception)",
        }
    }
}

impl fmt::Display for AttackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A scored attack. `level` is always derived from the matrix, never stored
/// independently, so an Assessment cannot disagree with `risk_level`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assessment {
    pub attack_id: AttackId,
    pub likelihood: Likelihood,
    pub impact: Impact,
    pub level: RiskLevel,
    pub rationale: String,
}

impl Assessment {
    pub fn new(
        attack_id: AttackId,
        likelihood: Likelihood,
        impact: Impact,
        rationale: impl Into<String>,
    ) -> Self {
        Assessment {
            attack_id,
            likelihood,
            impact,
            level: risk_level(likelihood, impact),
            rationale: rationale.into(),
        }
    }
}

/// Canonical verdict for one attack.
pub fn assessment_for(attack: AttackId) -> Assessment {
    match attack {
        AttackId::Printjack1 => Assessment::new(
            AttackId::Printjack1,
            Likelihood::Possible,
            Impact::Catastrophic,
            "Tens of thousands of raw-9100 ports answer on the public internet and printer \
             CVEs are plentiful, so recruiting a printer botnet is realistic; a fleet lending \
             its connectivity to coordinated flooding harms third parties at a scale the \
             owner cannot bound.",
        ),
        AttackId::Printjack2 => Assessment::new(
            AttackId::Printjack2,
            Likelihood::Possible,
            Impact::Severe,
            "A few lines of TCP client code empty every tray and can wedge the engine in a \
             busy loop, denying the device for hours; severe for any office that depends on \
             printed output, and the sender needs no credentials at all.",
        ),
        AttackId::Printjack3 => Assessment::new(
            AttackId::Printjack3,
            Likelihood::Likely,
            Impact::Severe,
            "Print traffic crosses the network in cleartext, so one compromised on-path host \
             recovers full documents plus the user-to-job association; routine to mount once \
             inside, and severe under data-protection obligations.",
        ),
    }
}

/// All three canonical verdicts, in attack order.
pub fn canonical_assessments() -> Vec<Assessment> {
    AttackId::ALL.iter().map(|a| assessment_for(*a)).collect()
}
