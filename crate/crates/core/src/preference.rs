//! Single-peaked opinions, the per-voter ballot and the strict-majority
//! ratification tally.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::election::Committee;
use crate::ledger::AgentId;
use crate::proposal::{Proposal, ProposalError};
use crate::ratio::{self, common_denominator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreferenceError {
    #[error(transparent)]
    Proposal(#[from] ProposalError),
    #[error("committee member {0} cannot vote on committee corrections")]
    MemberVoting(AgentId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    #[default]
    Euclidean,
    L1,
}

impl Distance {
    /// Distance between two points. Euclidean is reported squared, which
    /// ranks points identically.
    pub fn rank_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let terms = a.iter().zip(b).map(|(x, y)| x - y);
        match self {
            Distance::Euclidean => terms.map(|d| d * d).sum(),
            Distance::L1 => terms.map(f64::abs).sum(),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => self.rank_distance(a, b).sqrt(),
            Distance::L1 => self.rank_distance(a, b),
        }
    }
}

/// An agent's ideal proposal and the total order it induces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opinion {
    pub owner: AgentId,
    pub optimum: Proposal,
    #[serde(default)]
    pub distance: Distance,
}

impl Opinion {
    pub fn new(owner: AgentId, optimum: Proposal, distance: Distance) -> Self {
        Self {
            owner,
            optimum,
            distance,
        }
    }

    /// Closer to the optimum ranks higher; equally distant points fall back
    /// to lexicographic order so that distinct points never compare equal.
    pub fn compare(&self, a: &Proposal, b: &Proposal) -> Result<Ordering, PreferenceError> {
        a.check_dim(&self.optimum)?;
        b.check_dim(&self.optimum)?;
        let da = self.distance.rank_distance(a.values(), self.optimum.values());
        let db = self.distance.rank_distance(b.values(), self.optimum.values());
        let lex = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal);
        // Less means "preferred"
        Ok(da.total_cmp(&db).then(lex))
    }

    /// `a ≿ b`: `a` is at least as good as `b`.
    pub fn prefers(&self, a: &Proposal, b: &Proposal) -> Result<bool, PreferenceError> {
        Ok(self.compare(a, b)?.is_le())
    }
}

/// One voter outside the committee.
#[derive(Debug, Clone)]
pub struct Voter<'a> {
    pub id: AgentId,
    pub power: BigRational,
    /// Disengaged voters never object, so their power counts in favour.
    pub engaged: bool,
    pub opinion: &'a Opinion,
}

/// Ballot of an agent outside the committee: full power when the corrected
/// proposal beats the current one and the current one beats the status quo
/// (or when the voter is disengaged), zero otherwise.
pub fn vote(
    voter: &Voter<'_>,
    committee: &Committee,
    target: &Proposal,
    current: &Proposal,
    status_quo: &Proposal,
) -> Result<BigRational, PreferenceError> {
    if committee.contains(voter.id) {
        return Err(PreferenceError::MemberVoting(voter.id));
    }
    ballot(voter, target, current, status_quo)
}

fn ballot(
    voter: &Voter<'_>,
    target: &Proposal,
    current: &Proposal,
    status_quo: &Proposal,
) -> Result<BigRational, PreferenceError> {
    if !voter.engaged {
        return Ok(voter.power.clone());
    }
    let favorable = voter.opinion.prefers(target, current)?
        && voter.opinion.prefers(current, status_quo)?;
    Ok(if favorable {
        voter.power.clone()
    } else {
        BigRational::zero()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    #[serde(with = "ratio::serde_ratio")]
    pub favorable: BigRational,
    #[serde(with = "ratio::serde_ratio")]
    pub total: BigRational,
    pub passed: bool,
}

/// Strict majority of outside power in favour: `favorable > total / 2`.
pub fn ratify(
    target: &Proposal,
    voters: &[Voter<'_>],
    current: &Proposal,
    status_quo: &Proposal,
) -> Result<Tally, PreferenceError> {
    let mut favorable = BigRational::zero();
    let mut total = BigRational::zero();
    for v in voters {
        favorable += ballot(v, target, current, status_quo)?;
        total += &v.power;
    }
    let passed = favorable.clone() * BigRational::from_integer(2.into()) > total;
    Ok(Tally {
        favorable,
        total,
        passed,
    })
}

/// Voters with their powers brought to one common denominator, so that
/// repeated tallies reduce to integer sums.
pub struct Electorate<'a> {
    voters: &'a [Voter<'a>],
    denominator: BigInt,
    numerators: Vec<BigInt>,
    total: BigInt,
}

impl<'a> Electorate<'a> {
    pub fn new(voters: &'a [Voter<'a>]) -> Self {
        let denominator = common_denominator(voters.iter().map(|v| v.power.denom()));
        let numerators: Vec<BigInt> = voters
            .iter()
            .map(|v| v.power.numer() * (&denominator / v.power.denom()))
            .collect();
        let total = numerators.iter().sum();
        Self {
            voters,
            denominator,
            numerators,
            total,
        }
    }

    /// Same result as [`ratify`] over the same voters.
    pub fn ratify(
        &self,
        target: &Proposal,
        current: &Proposal,
        status_quo: &Proposal,
    ) -> Result<Tally, PreferenceError> {
        let mut favorable = BigInt::zero();
        for (v, num) in self.voters.iter().zip(&self.numerators) {
            if !ballot(v, target, current, status_quo)?.is_zero() {
                favorable += num;
            }
        }
        let passed = &favorable * 2 > self.total;
        Ok(Tally {
            favorable: BigRational::new(favorable, self.denominator.clone()),
            total: BigRational::new(self.total.clone(), self.denominator.clone()),
            passed,
        })
    }
}
