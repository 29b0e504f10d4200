//! JSONL event trace of a run.
//!
//! Each line is `{"t": .., "stage": .., "event": .., "payload": {..}}`.
//! Exact quantities are `"num/den"` strings; proposal coordinates are plain
//! floats.

use std::fmt;
use std::io::{self, BufRead, Write};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::election::Seat;
use crate::ledger::{AgentId, UnitId};
use crate::proposal::{CorrectionId, CorrectionKind};
use crate::ratio;
use crate::strategies::Announcement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoInitialTransfers,
    ProposalUnchangedTwice,
    CommitteeUnchangedTwice,
    AllPowerEqual,
    PowerExhausted,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::NoInitialTransfers => "no_initial_transfers",
            StopReason::ProposalUnchangedTwice => "proposal_unchanged_twice",
            StopReason::CommitteeUnchangedTwice => "committee_unchanged_twice",
            StopReason::AllPowerEqual => "all_power_equal",
            StopReason::PowerExhausted => "power_exhausted",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t: usize,
    pub stage: u8,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    Scenario(ScenarioHeader),
    Transfer(MutationRecord),
    Reclaim(MutationRecord),
    Dropped(DroppedAnnouncement),
    Stage(StageReport),
    Committee(CommitteeRecord),
    Correction(CorrectionRecord),
    VoteTally(TallyRecord),
    Amendment(AmendmentRecord),
    Proposal(ProposalRecord),
    Stop(StopRecord),
}

/// Everything needed to analyse a trace without the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioHeader {
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub c: String,
    pub seed: u64,
    pub optima: Vec<Vec<f64>>,
    pub engaged: Vec<bool>,
    #[serde(with = "ratio::serde_ratio_vec")]
    pub initial_powers: Vec<BigRational>,
    pub initial_proposal: Vec<f64>,
    pub status_quo: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub sub_round: usize,
    pub unit: UnitId,
    pub actor: AgentId,
    pub holder: AgentId,
    #[serde(with = "ratio::serde_ratio")]
    pub value: BigRational,
    pub chain: Vec<AgentId>,
    pub mutation_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedAnnouncement {
    pub sub_round: usize,
    pub agent: AgentId,
    pub announcement: Announcement,
    pub reason: String,
}

/// Power snapshot at the end of stage 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub mutations: usize,
    pub dropped: usize,
    pub retired: usize,
    pub sub_rounds: usize,
    #[serde(with = "ratio::serde_ratio")]
    pub total_power: BigRational,
    #[serde(with = "ratio::serde_ratio_vec")]
    pub powers: Vec<BigRational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitteeRecord {
    pub t: usize,
    pub members: Vec<Seat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub t: usize,
    pub id: CorrectionId,
    pub author: AgentId,
    pub parent: Option<CorrectionId>,
    pub target: Vec<f64>,
    pub cost: f64,
    #[serde(flatten)]
    pub kind: CorrectionKind,
    #[serde(with = "ratio::serde_ratio")]
    pub share: BigRational,
    pub within_budget: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyRecord {
    pub correction: CorrectionId,
    #[serde(with = "ratio::serde_ratio")]
    pub favorable: BigRational,
    #[serde(with = "ratio::serde_ratio")]
    pub total: BigRational,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmendmentRecord {
    pub id: CorrectionId,
    pub authors: Vec<AgentId>,
    pub replaces: Vec<CorrectionId>,
    pub target: Vec<f64>,
    pub cost: f64,
    #[serde(with = "ratio::serde_ratio")]
    pub budget: BigRational,
    pub within_budget: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    pub survivors: Vec<CorrectionId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRecord {
    pub reason: StopReason,
    pub terminal_iteration: usize,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// An ordered event log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: usize, stage: u8, body: EventBody) {
        self.events.push(TraceEvent { t, stage, body });
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, TraceError> {
        let mut events = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event = serde_json::from_str(&line).map_err(|source| TraceError::Parse {
                line: i + 1,
                source,
            })?;
            events.push(event);
        }
        Ok(Self { events })
    }
}

impl FromIterator<TraceEvent> for Trace {
    fn from_iter<I: IntoIterator<Item = TraceEvent>>(iter: I) -> Self {
        Self {
            events: iter.into_iter().collect(),
        }
    }
}
