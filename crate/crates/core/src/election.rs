//! Committee formation: top-k by power, ties broken by appeal order by
//! order, and the seat count shrinks when a tie on the last seat cannot be
//! broken.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{AgentId, Ledger};
use crate::ratio;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElectionError {
    #[error("every agent holds zero power")]
    EmptySociety,
    #[error("committee size must satisfy 1 <= k < n, got k = {k} with n = {n}")]
    InvalidSeatCount { k: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Committee {
    members: Vec<AgentId>,
    powers: BTreeMap<AgentId, BigRational>,
    total: BigRational,
    shares: BTreeMap<AgentId, BigRational>,
}

impl Committee {
    /// Builds a committee from `(member, power)` pairs in seating order.
    pub fn from_seats(seats: Vec<(AgentId, BigRational)>) -> Self {
        let members = seats.iter().map(|(a, _)| *a).collect();
        let total = ratio::sum_ratios(seats.iter().map(|(_, p)| p));
        let shares = seats
            .iter()
            .filter(|_| !total.is_zero())
            .map(|(a, p)| (*a, p / &total))
            .collect();
        Self {
            members,
            powers: seats.into_iter().collect(),
            total,
            shares,
        }
    }

    /// Members in seating order: descending power, then appeal, then id.
    pub fn members(&self) -> &[AgentId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.powers.contains_key(&agent)
    }

    /// Power snapshot taken at selection time.
    pub fn power_of(&self, agent: AgentId) -> Option<&BigRational> {
        self.powers.get(&agent)
    }

    pub fn total_power(&self) -> &BigRational {
        &self.total
    }

    /// A member's power as a fraction of the committee's total.
    pub fn share_of(&self, agent: AgentId) -> Option<&BigRational> {
        self.shares.get(&agent)
    }

    pub fn fingerprint(&self) -> CommitteeFingerprint {
        committee_fingerprint(self)
    }

    pub fn seats(&self) -> Vec<Seat> {
        self.members
            .iter()
            .map(|a| Seat {
                id: *a,
                power: self.powers[a].clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seat {
    pub id: AgentId,
    #[serde(with = "ratio::serde_ratio")]
    pub power: BigRational,
}

/// Canonical `(member, power)` list sorted by member id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CommitteeFingerprint(Vec<(AgentId, BigRational)>);

impl CommitteeFingerprint {
    pub fn entries(&self) -> &[(AgentId, BigRational)] {
        &self.0
    }
}

pub fn committee_fingerprint(committee: &Committee) -> CommitteeFingerprint {
    CommitteeFingerprint(
        committee
            .powers
            .iter()
            .map(|(a, p)| (*a, p.clone()))
            .collect(),
    )
}

/// Highest appeal order worth comparing. Chains hold at most `n` distinct
/// owners plus one repeated final holder, so `n + 1` covers every chain.
pub fn max_appeal_order(ledger: &Ledger) -> usize {
    (ledger.agent_count() + 1).max(ledger.max_chain_len()).max(2)
}

struct Candidate {
    agent: AgentId,
    power: BigRational,
    appeal: Vec<BigRational>,
}

impl Candidate {
    /// Strength ordering: greater power first, then greater appeal at the
    /// lowest differing order. `Equal` means an unbreakable tie.
    fn strength_cmp(&self, other: &Self) -> Ordering {
        other
            .power
            .cmp(&self.power)
            .then_with(|| other.appeal.cmp(&self.appeal))
    }
}

/// Seats the top `k` agents by power.
///
/// Ties on power are broken by first-order appeal, then second-order and so
/// on. If agents competing for the last seat are still indistinguishable,
/// none of the agents at that power level are seated and the committee is
/// the agents holding strictly more power. Zero-power agents are never
/// seated.
pub fn select_committee(ledger: &Ledger, k: usize) -> Result<Committee, ElectionError> {
    let n = ledger.agent_count();
    if k == 0 || k >= n {
        return Err(ElectionError::InvalidSeatCount { k, n });
    }
    let powers = ledger.powers();
    let profiles = ledger.appeal_profiles(max_appeal_order(ledger));
    let mut candidates: Vec<Candidate> = powers
        .into_iter()
        .zip(profiles)
        .enumerate()
        .filter(|(_, (p, _))| p.is_positive())
        .map(|(i, (power, appeal))| Candidate {
            agent: AgentId(i),
            power,
            appeal,
        })
        .collect();
    if candidates.is_empty() {
        return Err(ElectionError::EmptySociety);
    }
    candidates.sort_by(|a, b| a.strength_cmp(b).then(a.agent.cmp(&b.agent)));

    let seated: Vec<&Candidate> = if candidates.len() <= k {
        candidates.iter().collect()
    } else if candidates[k - 1].strength_cmp(&candidates[k]) == Ordering::Equal {
        let tie_power = &candidates[k].power;
        candidates.iter().filter(|c| c.power > *tie_power).collect()
    } else {
        candidates[..k].iter().collect()
    };

    Ok(Committee::from_seats(
        seated
            .into_iter()
            .map(|c| (c.agent, c.power.clone()))
            .collect(),
    ))
}
