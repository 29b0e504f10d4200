//! Voting-power units, dilution and chain-of-custody bookkeeping.
//!
//! Every unit carries an exact value. Each ownership mutation (delegation,
//! redelegation by an earlier owner, or reclaim) multiplies the value by
//! `1 - c` and bumps the unit's mutation counter, so the ledger's total value
//! is non-increasing and strictly drops whenever a live unit moves.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratio::{self, format_ratio};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitId(pub usize);

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("dilution must satisfy 0 < c < 1, got {numerator}/{denominator}")]
    InvalidDilution { numerator: u64, denominator: u64 },
    #[error("malformed dilution: {0}")]
    MalformedDilution(String),
    #[error("units can only be issued before the first iteration")]
    IssuanceClosed,
    #[error("agent {agent} out of range for a society of {agent_count}")]
    AgentOutOfRange { agent: AgentId, agent_count: usize },
    #[error("issuance count must be positive")]
    EmptyIssuance,
    #[error("initial unit value must lie in (0, 1], got {0}")]
    InvalidInitialValue(String),
    #[error("unknown unit {0}")]
    UnknownUnit(UnitId),
    #[error("agent {agent} is not in the chain of custody of {unit}")]
    Unauthorized { unit: UnitId, agent: AgentId },
    #[error("agent {0} cannot transfer a unit to themselves")]
    SelfTransfer(AgentId),
    #[error("agent {agent} already holds {unit}")]
    AlreadyHolder { unit: UnitId, agent: AgentId },
    #[error("{0} has been retired below the power floor")]
    RetiredUnit(UnitId),
    #[error("appeal order must be at least 2, got {0}")]
    InvalidOrder(usize),
}

/// Dilution factor `c = numerator / denominator`, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dilution {
    numerator: u64,
    denominator: u64,
}

impl Dilution {
    pub fn new(numerator: u64, denominator: u64) -> Result<Self, LedgerError> {
        if numerator == 0 || denominator == 0 || numerator >= denominator {
            return Err(LedgerError::InvalidDilution {
                numerator,
                denominator,
            });
        }
        let g = numerator.gcd(&denominator);
        Ok(Self {
            numerator: numerator / g,
            denominator: denominator / g,
        })
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// `c` as an exact rational.
    pub fn factor(&self) -> BigRational {
        BigRational::new(self.numerator.into(), self.denominator.into())
    }

    /// `1 - c`, the fraction of value a unit keeps per mutation.
    pub fn retention(&self) -> BigRational {
        BigRational::new(
            (self.denominator - self.numerator).into(),
            self.denominator.into(),
        )
    }
}

impl fmt::Display for Dilution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for Dilution {
    type Err = LedgerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, d) = s.trim().split_once('/').unwrap_or((s.trim(), "1"));
        let n: u64 = n
            .trim()
            .parse()
            .map_err(|_| LedgerError::MalformedDilution(s.to_string()))?;
        let d: u64 = d
            .trim()
            .parse()
            .map_err(|_| LedgerError::MalformedDilution(s.to_string()))?;
        Dilution::new(n, d)
    }
}

impl Serialize for Dilution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dilution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// One indivisible voting-power unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    id: UnitId,
    initial_value: BigRational,
    value: BigRational,
    chain: Vec<AgentId>,
    mutation_count: u32,
    retired: bool,
}

impl Unit {
    pub fn id(&self) -> UnitId {
        self.id
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn initial_value(&self) -> &BigRational {
        &self.initial_value
    }

    /// Original owner first, current holder last.
    pub fn chain(&self) -> &[AgentId] {
        &self.chain
    }

    pub fn original_owner(&self) -> AgentId {
        self.chain[0]
    }

    pub fn holder(&self) -> AgentId {
        *self.chain.last().expect("chain is never empty")
    }

    pub fn mutation_count(&self) -> u32 {
        self.mutation_count
    }

    /// Retired units were floored to zero value and can no longer move.
    pub fn is_retired(&self) -> bool {
        self.retired
    }

    fn position_of(&self, agent: AgentId) -> Option<usize> {
        self.chain.iter().position(|&a| a == agent)
    }
}

/// Serialized view of a unit: `{id, value: "num/den", chain, mutation_count}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub id: UnitId,
    #[serde(with = "ratio::serde_ratio")]
    pub value: BigRational,
    pub chain: Vec<AgentId>,
    pub mutation_count: u32,
}

impl From<&Unit> for UnitRecord {
    fn from(unit: &Unit) -> Self {
        Self {
            id: unit.id,
            value: unit.value.clone(),
            chain: unit.chain.clone(),
            mutation_count: unit.mutation_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    Transfer,
    Reclaim,
}

/// One entry of the ledger's mutation history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutation {
    pub kind: MutationKind,
    pub unit: UnitId,
    /// The agent that exercised ownership (the sender, or the reclaiming owner).
    pub actor: AgentId,
    /// Holder after the mutation.
    pub holder: AgentId,
    #[serde(with = "ratio::serde_ratio")]
    pub value_before: BigRational,
    #[serde(with = "ratio::serde_ratio")]
    pub value_after: BigRational,
    pub chain_after: Vec<AgentId>,
    pub mutation_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Issuance,
    Running,
}

/// The set of all units of one run, plus issuance and mutation history.
#[derive(Debug, Clone)]
pub struct Ledger {
    units: Vec<Unit>,
    dilution: Dilution,
    retention: BigRational,
    agent_count: usize,
    phase: Phase,
    history: Vec<Mutation>,
}

impl Ledger {
    pub fn new(agent_count: usize, dilution: Dilution) -> Self {
        Self {
            units: Vec::new(),
            retention: dilution.retention(),
            dilution,
            agent_count,
            phase: Phase::Issuance,
            history: Vec::new(),
        }
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    pub fn dilution(&self) -> Dilution {
        self.dilution
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit(&self, id: UnitId) -> Result<&Unit, LedgerError> {
        self.units.get(id.0).ok_or(LedgerError::UnknownUnit(id))
    }

    pub fn history(&self) -> &[Mutation] {
        &self.history
    }

    pub fn is_issuance_open(&self) -> bool {
        self.phase == Phase::Issuance
    }

    fn check_agent(&self, agent: AgentId) -> Result<(), LedgerError> {
        if agent.0 >= self.agent_count {
            return Err(LedgerError::AgentOutOfRange {
                agent,
                agent_count: self.agent_count,
            });
        }
        Ok(())
    }

    /// Issues `count` fresh units to `owner`. Ids are assigned densely in
    /// call order.
    pub fn issue_units(
        &mut self,
        owner: AgentId,
        count: usize,
        initial_value: &BigRational,
    ) -> Result<Vec<UnitId>, LedgerError> {
        if self.phase != Phase::Issuance {
            return Err(LedgerError::IssuanceClosed);
        }
        self.check_agent(owner)?;
        if count == 0 {
            return Err(LedgerError::EmptyIssuance);
        }
        if *initial_value <= BigRational::zero() || *initial_value > BigRational::one() {
            return Err(LedgerError::InvalidInitialValue(format_ratio(initial_value)));
        }
        let start = self.units.len();
        self.units.extend((start..start + count).map(|id| Unit {
            id: UnitId(id),
            initial_value: initial_value.clone(),
            value: initial_value.clone(),
            chain: vec![owner],
            mutation_count: 0,
            retired: false,
        }));
        Ok((start..start + count).map(UnitId).collect())
    }

    /// Closes issuance. Called by the engine when iteration 0 begins.
    pub fn close_issuance(&mut self) {
        self.phase = Phase::Running;
    }

    /// Moves a unit from `from` to `to`.
    ///
    /// When `from` is the current holder this appends `to` to the chain.
    /// When `from` is an earlier owner the chain is cut right after `from`'s
    /// first occurrence before appending, which is how earlier owners
    /// redirect units they passed on. Either way one dilution is charged.
    pub fn transfer(
        &mut self,
        unit: UnitId,
        from: AgentId,
        to: AgentId,
    ) -> Result<&Unit, LedgerError> {
        self.check_agent(to)?;
        if from == to {
            return Err(LedgerError::SelfTransfer(from));
        }
        let u = self.units.get(unit.0).ok_or(LedgerError::UnknownUnit(unit))?;
        if u.retired {
            return Err(LedgerError::RetiredUnit(unit));
        }
        let pos = u
            .position_of(from)
            .ok_or(LedgerError::Unauthorized { unit, agent: from })?;
        self.mutate(unit, MutationKind::Transfer, from, pos, Some(to))
    }

    /// Pulls a unit back to an earlier owner, truncating the chain after
    /// them. Costs one dilution like any other mutation.
    pub fn reclaim(&mut self, unit: UnitId, owner: AgentId) -> Result<&Unit, LedgerError> {
        let u = self.units.get(unit.0).ok_or(LedgerError::UnknownUnit(unit))?;
        if u.retired {
            return Err(LedgerError::RetiredUnit(unit));
        }
        let pos = u
            .position_of(owner)
            .ok_or(LedgerError::Unauthorized { unit, agent: owner })?;
        if pos == u.chain.len() - 1 {
            return Err(LedgerError::AlreadyHolder { unit, agent: owner });
        }
        self.mutate(unit, MutationKind::Reclaim, owner, pos, None)
    }

    fn mutate(
        &mut self,
        unit: UnitId,
        kind: MutationKind,
        actor: AgentId,
        keep_through: usize,
        append: Option<AgentId>,
    ) -> Result<&Unit, LedgerError> {
        let retention = &self.retention;
        let u = &mut self.units[unit.0];
        let value_before = u.value.clone();
        u.chain.truncate(keep_through + 1);
        if let Some(to) = append {
            u.chain.push(to);
        }
        u.value = &u.value * retention;
        u.mutation_count += 1;
        self.history.push(Mutation {
            kind,
            unit,
            actor,
            holder: u.holder(),
            value_before,
            value_after: u.value.clone(),
            chain_after: u.chain.clone(),
            mutation_count: u.mutation_count,
        });
        Ok(&self.units[unit.0])
    }

    /// Sets every live unit whose value is strictly below `floor` to zero.
    /// Returns the number of units retired by this call.
    pub fn retire_below(&mut self, floor: &BigRational) -> usize {
        let mut retired = 0;
        for u in self.units.iter_mut().filter(|u| !u.retired) {
            if u.value < *floor {
                u.value = BigRational::zero();
                u.retired = true;
                retired += 1;
            }
        }
        retired
    }

    /// Voting power of one agent: the summed value of units it currently holds.
    pub fn power(&self, agent: AgentId) -> BigRational {
        sum_values(self.units.iter().filter(|u| u.holder() == agent))
    }

    /// Powers of all agents, indexed by agent id.
    pub fn powers(&self) -> Vec<BigRational> {
        let mut by_agent: Vec<Vec<&Unit>> = vec![Vec::new(); self.agent_count];
        for u in &self.units {
            by_agent[u.holder().0].push(u);
        }
        by_agent
            .into_iter()
            .map(|units| sum_values(units.into_iter()))
            .collect()
    }

    /// Summed value of units held by `agent` whose chain has exactly
    /// `order` entries. Order 2 is first-order (direct) appeal.
    pub fn appeal(&self, agent: AgentId, order: usize) -> Result<BigRational, LedgerError> {
        if order < 2 {
            return Err(LedgerError::InvalidOrder(order));
        }
        Ok(sum_values(
            self.units
                .iter()
                .filter(|u| u.holder() == agent && u.chain.len() == order),
        ))
    }

    /// Appeals of every agent for orders `2..=max_order`, indexed
    /// `[agent][order - 2]`.
    pub fn appeal_profiles(&self, max_order: usize) -> Vec<Vec<BigRational>> {
        let width = max_order.saturating_sub(1);
        let mut grouped: Vec<Vec<Vec<&Unit>>> = vec![vec![Vec::new(); width]; self.agent_count];
        for u in &self.units {
            let len = u.chain.len();
            if len >= 2 && len <= max_order {
                grouped[u.holder().0][len - 2].push(u);
            }
        }
        grouped
            .into_iter()
            .map(|orders| {
                orders
                    .into_iter()
                    .map(|units| sum_values(units.into_iter()))
                    .collect()
            })
            .collect()
    }

    /// Longest chain currently in the ledger.
    pub fn max_chain_len(&self) -> usize {
        self.units.iter().map(|u| u.chain.len()).max().unwrap_or(1)
    }

    /// Sum of all unit values.
    pub fn total_power(&self) -> BigRational {
        sum_values(self.units.iter())
    }

    pub fn records(&self) -> Vec<UnitRecord> {
        self.units.iter().map(UnitRecord::from).collect()
    }
}

/// Adds unit values, grouping by denominator first so each distinct
/// denominator is reduced once instead of once per unit.
fn sum_values<'a>(units: impl Iterator<Item = &'a Unit>) -> BigRational {
    use std::collections::BTreeMap;
    let mut by_den: BTreeMap<&num_bigint::BigInt, num_bigint::BigInt> = BTreeMap::new();
    for u in units {
        if u.value.is_zero() {
            continue;
        }
        *by_den.entry(u.value.denom()).or_default() += u.value.numer();
    }
    ratio::sum_fractions(by_den.into_iter().map(|(den, num)| (num, den)))
}
