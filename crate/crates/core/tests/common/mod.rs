//! Reference implementations used as oracles, plus scripted strategies.
//!
//! The oracles deliberately avoid the library's own helpers: powers and
//! appeals come from a plain scan over unit records, sums use naive
//! rational addition.
#![allow(dead_code)]

use std::cmp::Ordering;

use liquid_deliberation::ledger::{AgentId, Dilution, Ledger, UnitId};
use liquid_deliberation::proposal::Proposal;
use liquid_deliberation::strategies::{
    AgentRng, Announcement, CorrectionDraft, CorrectionRequest, DelegationView, Strategy,
};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn p(v: &[f64]) -> Proposal {
    Proposal::new(v.to_vec()).unwrap()
}

/// Power and appeal by order for every agent, from unit records alone.
pub struct Scan {
    pub powers: Vec<BigRational>,
    /// `appeal[agent][len]` for chain length `len` (index 0 and 1 unused).
    pub appeal: Vec<Vec<BigRational>>,
}

pub fn scan(ledger: &Ledger) -> Scan {
    let n = ledger.agent_count();
    let records = ledger.records();
    let depth = records.iter().map(|r| r.chain.len()).max().unwrap_or(1).max(n + 1);
    let mut powers = vec![BigRational::zero(); n];
    let mut appeal = vec![vec![BigRational::zero(); depth + 1]; n];
    for r in &records {
        let holder = r.chain.last().unwrap().0;
        powers[holder] = &powers[holder] + &r.value;
        appeal[holder][r.chain.len()] = &appeal[holder][r.chain.len()] + &r.value;
    }
    Scan { powers, appeal }
}

/// Seating by counting: an agent is seated when fewer than `k` agents beat
/// it, unless some indistinguishable group straddles the last seat, in
/// which case only agents with more power than that group sit.
pub fn oracle_committee(ledger: &Ledger, k: usize) -> Vec<usize> {
    let Scan { powers, appeal } = scan(ledger);
    let n = powers.len();
    let live: Vec<usize> = (0..n).filter(|&a| powers[a].is_positive()).collect();
    // Greater means stronger.
    let strength = |a: usize, b: usize| -> Ordering {
        powers[a].cmp(&powers[b]).then_with(|| {
            for (x, y) in appeal[a].iter().zip(&appeal[b]).skip(2) {
                match x.cmp(y) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    };
    let stronger = |a: usize| live.iter().filter(|&&b| strength(b, a) == Ordering::Greater).count();
    let peers = |a: usize| {
        live.iter()
            .filter(|&&b| b != a && strength(b, a) == Ordering::Equal)
            .count()
    };
    let straddler = live
        .iter()
        .copied()
        .find(|&a| stronger(a) < k && stronger(a) + peers(a) >= k && peers(a) > 0 && live.len() > k);
    let mut seated: Vec<usize> = match straddler {
        Some(x) => live.iter().copied().filter(|&a| powers[a] > powers[x]).collect(),
        None => live.iter().copied().filter(|&a| stronger(a) < k).collect(),
    };
    seated.sort_by(|&a, &b| strength(b, a).then(a.cmp(&b)));
    seated
}

/// The voter's preference key: squared distance, then coordinates.
pub fn preference_key(x: &[f64], optimum: &[f64], l1: bool) -> (f64, Vec<f64>) {
    let d = x
        .iter()
        .zip(optimum)
        .map(|(a, b)| if l1 { (a - b).abs() } else { (a - b) * (a - b) })
        .sum::<f64>();
    (d, x.to_vec())
}

pub fn key_le(a: &(f64, Vec<f64>), b: &(f64, Vec<f64>)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            for (x, y) in a.1.iter().zip(&b.1) {
                match x.total_cmp(y) {
                    Ordering::Less => return true,
                    Ordering::Greater => return false,
                    Ordering::Equal => {}
                }
            }
            true
        }
    }
}

/// Naive Gini: mean absolute difference over all ordered pairs.
pub fn naive_gini(powers: &[BigRational]) -> BigRational {
    let n = powers.len() as i64;
    let mut diff = BigRational::zero();
    let mut total = BigRational::zero();
    for a in powers {
        total += a;
        for b in powers {
            diff += (a - b).abs();
        }
    }
    diff / (total * BigRational::from_integer((2 * n).into()))
}

/// Sends every delegable unit to a fixed agent.
pub struct SendTo {
    pub to: AgentId,
    /// Only acts in iterations `t < until`.
    pub until: usize,
    /// Only acts in sub-round 0.
    pub first_sub_round_only: bool,
}

impl Strategy for SendTo {
    fn delegate(&self, agent: AgentId, view: &DelegationView<'_>, _rng: &mut AgentRng) -> Vec<Announcement> {
        if view.t >= self.until || (self.first_sub_round_only && view.sub_round > 0) {
            return Vec::new();
        }
        view.delegable_units(agent)
            .into_iter()
            .map(|unit: UnitId| Announcement::Transfer {
                unit,
                from: agent,
                to: self.to,
            })
            .collect()
    }
}

/// Never delegates and never corrects.
pub struct Silent;

impl Strategy for Silent {
    fn delegate(&self, _: AgentId, _: &DelegationView<'_>, _: &mut AgentRng) -> Vec<Announcement> {
        Vec::new()
    }

    fn correct(&self, _: &CorrectionRequest<'_>, _: &mut AgentRng) -> Option<CorrectionDraft> {
        None
    }
}

/// Never delegates; proposes a fixed target every iteration.
pub struct Fixed {
    pub target: Vec<f64>,
}

impl Strategy for Fixed {
    fn delegate(&self, _: AgentId, _: &DelegationView<'_>, _: &mut AgentRng) -> Vec<Announcement> {
        Vec::new()
    }

    fn correct(&self, _: &CorrectionRequest<'_>, _: &mut AgentRng) -> Option<CorrectionDraft> {
        Some(CorrectionDraft {
            target: p(&self.target),
            parent: None,
        })
    }
}

/// Swaps all held units to a partner in sub-round 0 and flips the proposal
/// between two points when seated.
pub struct Swapper {
    pub partner: AgentId,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Strategy for Swapper {
    fn delegate(&self, agent: AgentId, view: &DelegationView<'_>, _rng: &mut AgentRng) -> Vec<Announcement> {
        if view.sub_round > 0 {
            return Vec::new();
        }
        view.delegable_units(agent)
            .into_iter()
            .map(|unit| Announcement::Transfer {
                unit,
                from: agent,
                to: self.partner,
            })
            .collect()
    }

    fn correct(&self, request: &CorrectionRequest<'_>, _: &mut AgentRng) -> Option<CorrectionDraft> {
        let target = if request.current.values() == self.a.as_slice() {
            &self.b
        } else {
            &self.a
        };
        Some(CorrectionDraft {
            target: p(target),
            parent: None,
        })
    }
}

/// One fuzzed ledger operation. `pick` selects the acting agent from the
/// unit's chain, so most operations are authorized.
#[derive(Debug, Clone, Copy)]
pub struct Op {
    pub unit: usize,
    pub pick: usize,
    pub to: usize,
    pub reclaim: bool,
}

/// Builds a ledger, applies `ops` and returns it with the number of
/// successful mutations per unit, counted on the test side.
pub fn fuzz_ledger(
    units: &[usize],
    c: (u64, u64),
    initial: &BigRational,
    ops: &[Op],
) -> (Ledger, Vec<u32>) {
    let n = units.len();
    let mut ledger = Ledger::new(n, Dilution::new(c.0, c.1).unwrap());
    for (a, &count) in units.iter().enumerate() {
        if count > 0 {
            ledger.issue_units(AgentId(a), count, initial).unwrap();
        }
    }
    ledger.close_issuance();
    let mut counts = vec![0u32; ledger.units().len()];
    if counts.is_empty() {
        return (ledger, counts);
    }
    for op in ops {
        let id = op.unit % counts.len();
        let chain = ledger.units()[id].chain().to_vec();
        let actor = chain[op.pick % chain.len()];
        let ok = if op.reclaim {
            ledger.reclaim(UnitId(id), actor).is_ok()
        } else {
            ledger.transfer(UnitId(id), actor, AgentId(op.to % n)).is_ok()
        };
        if ok {
            counts[id] += 1;
        }
    }
    (ledger, counts)
}
