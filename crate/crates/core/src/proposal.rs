//! Proposal vectors, the corpus-change metric, budgeted corrections and
//! assembly of the next proposal from the corrections that survived.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::election::Committee;
use crate::ledger::AgentId;
use crate::ratio::ratio_to_f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProposalError {
    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("proposal must have at least one coordinate")]
    Empty,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("agent {0} is not a committee member")]
    NotMember(AgentId),
    #[error("unknown correction {0}")]
    UnknownCorrection(CorrectionId),
    #[error("correction {child} cannot build on {parent}")]
    Lineage {
        child: CorrectionId,
        parent: CorrectionId,
    },
    #[error("corrections {0} and {1} conflict but both reached assembly")]
    UnresolvedConflict(CorrectionId, CorrectionId),
}

/// A point of `[0, 1]^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Proposal(Vec<f64>);

impl Proposal {
    pub fn new(values: Vec<f64>) -> Result<Self, ProposalError> {
        if values.is_empty() {
            return Err(ProposalError::Empty);
        }
        let mut values = values;
        for (index, v) in values.iter_mut().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(ProposalError::OutOfRange { index, value: *v });
            }
            // fold -0.0 into 0.0 so equality and lexicographic order agree
            *v += 0.0;
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn check_dim(&self, other: &Proposal) -> Result<(), ProposalError> {
        if self.dim() != other.dim() {
            return Err(ProposalError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    /// Indices where `self` differs from `base`.
    pub fn changed_coordinates<'a>(&'a self, base: &'a Proposal) -> impl Iterator<Item = usize> + 'a {
        self.0
            .iter()
            .zip(&base.0)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
    }
}

impl TryFrom<Vec<f64>> for Proposal {
    type Error = ProposalError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Proposal::new(values)
    }
}

impl From<Proposal> for Vec<f64> {
    fn from(p: Proposal) -> Self {
        p.0
    }
}

/// How much of the proposal a correction rewrites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Mean absolute coordinate change.
    #[default]
    L1Normalized,
    /// Fraction of coordinates that change at all.
    HammingFraction,
}

pub fn corpus_delta(a: &Proposal, b: &Proposal, metric: Metric) -> Result<f64, ProposalError> {
    a.check_dim(b)?;
    let s = a.dim() as f64;
    let delta = match metric {
        Metric::L1Normalized => {
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>()
                / s
        }
        Metric::HammingFraction => a.changed_coordinates(b).count() as f64 / s,
    };
    Ok(delta.min(1.0))
}

/// A member's share of the committee's total power.
pub fn budget_share(member: AgentId, committee: &Committee) -> Result<BigRational, ProposalError> {
    committee
        .share_of(member)
        .cloned()
        .ok_or(ProposalError::NotMember(member))
}

/// Compares a float cost against the budget rounded to the nearest float.
/// Costs are themselves rounded, so an exact comparison would reject a
/// cost of `0.2` against a budget of `1/5`.
pub fn within_budget(cost: f64, budget: &BigRational) -> bool {
    cost.is_finite() && cost <= ratio_to_f64(budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrectionId(pub usize);

impl fmt::Display for CorrectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrectionKind {
    /// Authored in the first step.
    Original,
    /// Issued after the correction it built on was voted down.
    Replacement { replaces: CorrectionId },
    /// Joint correction settling a conflict between accepted corrections.
    Amendment {
        authors: Vec<AgentId>,
        replaces: Vec<CorrectionId>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub id: CorrectionId,
    pub author: AgentId,
    pub target: Proposal,
    pub parent: Option<CorrectionId>,
    pub iteration: usize,
    /// `corpus_delta(target, base)` where base is the parent's target, or
    /// the current proposal for roots.
    pub cost: f64,
    pub kind: CorrectionKind,
}

impl Correction {
    pub fn authors(&self) -> Vec<AgentId> {
        match &self.kind {
            CorrectionKind::Amendment { authors, .. } => authors.clone(),
            _ => vec![self.author],
        }
    }
}

/// All corrections of one iteration with their build-upon links.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrectionSet {
    corrections: Vec<Correction>,
}

impl CorrectionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.corrections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corrections.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Correction> {
        self.corrections.iter()
    }

    pub fn as_slice(&self) -> &[Correction] {
        &self.corrections
    }

    pub fn get(&self, id: CorrectionId) -> Result<&Correction, ProposalError> {
        self.corrections
            .get(id.0)
            .ok_or(ProposalError::UnknownCorrection(id))
    }

    /// Adds a correction, computing its cost against its effective base.
    /// Parents must already be in the set, which keeps lineage acyclic.
    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        author: AgentId,
        target: Proposal,
        parent: Option<CorrectionId>,
        iteration: usize,
        kind: CorrectionKind,
        current: &Proposal,
        metric: Metric,
    ) -> Result<CorrectionId, ProposalError> {
        let id = CorrectionId(self.corrections.len());
        if let Some(p) = parent {
            let parent_correction = self
                .corrections
                .get(p.0)
                .ok_or(ProposalError::Lineage { child: id, parent: p })?;
            if parent_correction.iteration != iteration {
                return Err(ProposalError::Lineage { child: id, parent: p });
            }
        }
        let base = match parent {
            Some(p) => &self.corrections[p.0].target,
            None => current,
        };
        let cost = corpus_delta(&target, base, metric)?;
        self.corrections.push(Correction {
            id,
            author,
            target,
            parent,
            iteration,
            cost,
            kind,
        });
        Ok(id)
    }

    /// The proposal a correction edits: its parent's target, or `current`.
    pub fn base_of<'a>(
        &'a self,
        id: CorrectionId,
        current: &'a Proposal,
    ) -> Result<&'a Proposal, ProposalError> {
        match self.get(id)?.parent {
            Some(p) => Ok(&self.get(p)?.target),
            None => Ok(current),
        }
    }

    /// Ancestors from the direct parent up to the root.
    pub fn ancestors(&self, id: CorrectionId) -> Vec<CorrectionId> {
        let mut out = Vec::new();
        let mut cursor = self.corrections.get(id.0).and_then(|c| c.parent);
        while let Some(p) = cursor {
            out.push(p);
            cursor = self.corrections.get(p.0).and_then(|c| c.parent);
        }
        out
    }

    pub fn root_of(&self, id: CorrectionId) -> CorrectionId {
        self.ancestors(id).last().copied().unwrap_or(id)
    }

    pub fn related(&self, a: CorrectionId, b: CorrectionId) -> bool {
        a == b || self.ancestors(a).contains(&b) || self.ancestors(b).contains(&a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BudgetVerdict {
    Accept,
    OverBudget {
        cost: f64,
        #[serde(with = "crate::ratio::serde_ratio")]
        share: BigRational,
    },
}

impl BudgetVerdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, BudgetVerdict::Accept)
    }
}

/// Checks a correction's cost against its author's budget share.
pub fn validate_correction(
    correction: &Correction,
    set: &CorrectionSet,
    committee: &Committee,
    current: &Proposal,
    metric: Metric,
) -> Result<BudgetVerdict, ProposalError> {
    if let Some(p) = correction.parent {
        set.get(p).map_err(|_| ProposalError::Lineage {
            child: correction.id,
            parent: p,
        })?;
    }
    let share = budget_share(correction.author, committee)?;
    let base = match correction.parent {
        Some(p) => &set.get(p)?.target,
        None => current,
    };
    let cost = corpus_delta(&correction.target, base, metric)?;
    if within_budget(cost, &share) {
        Ok(BudgetVerdict::Accept)
    } else {
        Ok(BudgetVerdict::OverBudget { cost, share })
    }
}

/// Two edits conflict when they both change some coordinate (each relative
/// to its own base) and disagree on its new value.
pub fn edits_conflict(a: &Proposal, a_base: &Proposal, b: &Proposal, b_base: &Proposal) -> bool {
    a.changed_coordinates(a_base)
        .any(|m| b.0[m] != b_base.0[m] && a.0[m] != b.0[m])
}

/// Conflicting pairs among the given corrections. Corrections on the same
/// lineage never conflict with each other.
pub fn detect_conflicts(
    set: &CorrectionSet,
    ids: &[CorrectionId],
    current: &Proposal,
) -> Result<Vec<(CorrectionId, CorrectionId)>, ProposalError> {
    let mut out = Vec::new();
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            if set.related(a, b) {
                continue;
            }
            let (ca, cb) = (set.get(a)?, set.get(b)?);
            let (ba, bb) = (set.base_of(a, current)?, set.base_of(b, current)?);
            if edits_conflict(&ca.target, ba, &cb.target, bb) {
                out.push((a.min(b), a.max(b)));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Picks the correction that builds on the most others. Ties go to the
/// lowest author id, then the lowest correction id.
pub fn richest_chain(set: &CorrectionSet, accepted: &[CorrectionId]) -> Option<CorrectionId> {
    accepted
        .iter()
        .copied()
        .filter_map(|id| set.get(id).ok().map(|c| (id, c.author)))
        .min_by(|(a, a_author), (b, b_author)| {
            set.ancestors(*b)
                .len()
                .cmp(&set.ancestors(*a).len())
                .then(a_author.cmp(b_author))
                .then(a.cmp(b))
        })
        .map(|(id, _)| id)
}

/// The richest correction of every lineage family among `accepted`, in
/// ascending root order.
pub fn family_heads(set: &CorrectionSet, accepted: &[CorrectionId]) -> Vec<CorrectionId> {
    let mut families: BTreeMap<CorrectionId, Vec<CorrectionId>> = BTreeMap::new();
    for &id in accepted {
        families.entry(set.root_of(id)).or_default().push(id);
    }
    families
        .values()
        .filter_map(|members| richest_chain(set, members))
        .collect()
}

/// Applies the surviving corrections to `current`.
///
/// Each lineage family contributes only its richest member, whose target
/// already carries its ancestors' edits. The applied edits are measured
/// against `current` and must not disagree on any coordinate.
pub fn assemble_next(
    current: &Proposal,
    set: &CorrectionSet,
    accepted: &[CorrectionId],
) -> Result<Proposal, ProposalError> {
    let heads = family_heads(set, accepted);
    let mut next = current.0.clone();
    let mut written_by: Vec<Option<CorrectionId>> = vec![None; current.dim()];
    for id in heads {
        let c = set.get(id)?;
        c.target.check_dim(current)?;
        for m in c.target.changed_coordinates(current) {
            match written_by[m] {
                Some(other) if next[m] != c.target.0[m] => {
                    return Err(ProposalError::UnresolvedConflict(other, id));
                }
                _ => {
                    next[m] = c.target.0[m];
                    written_by[m] = Some(id);
                }
            }
        }
    }
    Proposal::new(next)
}
