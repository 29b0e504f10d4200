//! Agent behaviour: who delegates what to whom during stage 1, and which
//! correction a seated expert proposes during stage 3.
//!
//! Strategies only see a read-only [`DelegationView`] or
//! [`CorrectionRequest`] plus their own RNG stream, so replaying a run with
//! the same seed replays every decision.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ledger::{AgentId, Ledger, UnitId};
use crate::proposal::{corpus_delta, within_budget, Correction, CorrectionId, Metric, Proposal};
use crate::ratio::{common_denominator, ratio_to_f64};

pub type AgentRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream for one agent, derived from the run seed.
pub fn agent_rng(seed: u64, agent: AgentId, offset: u64) -> AgentRng {
    let mixed = splitmix64(seed ^ splitmix64(agent.0 as u64 ^ splitmix64(offset)));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Named stream for scenario-level sampling (opinions, engagement).
pub fn stream_rng(seed: u64, stream: u64) -> AgentRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    /// Never delegates.
    Noop,
    /// Keeps whatever distribution already exists.
    Stick,
    /// Each held unit goes to a uniformly random other agent with
    /// probability `fraction`.
    RandomDelegate { fraction: f64 },
    /// `floor(fraction * held)` units go to the agent whose optimum is
    /// closest to ours.
    ProximityDelegate { fraction: f64 },
    /// Like `proximity_delegate`, restricted to the `pool` most powerful
    /// agents.
    ExpertSeeker { fraction: f64, pool: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    #[serde(flatten)]
    pub kind: StrategyKind,
    #[serde(default)]
    pub seed_offset: u64,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            seed_offset: 0,
        }
    }

    /// Parameter problems, empty when the spec is usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let fraction = match self.kind {
            StrategyKind::Noop | StrategyKind::Stick => None,
            StrategyKind::RandomDelegate { fraction }
            | StrategyKind::ProximityDelegate { fraction } => Some(fraction),
            StrategyKind::ExpertSeeker { fraction, pool } => {
                if pool == 0 {
                    out.push("pool must be at least 1".to_string());
                }
                Some(fraction)
            }
        };
        if let Some(f) = fraction {
            if !(0.0..=1.0).contains(&f) {
                out.push(format!("fraction must lie in [0, 1], got {f}"));
            }
        }
        out
    }

    pub fn build(&self) -> Box<dyn Strategy> {
        Box::new(Policy { kind: self.kind })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Announcement {
    Transfer {
        unit: UnitId,
        from: AgentId,
        to: AgentId,
    },
    Reclaim {
        unit: UnitId,
        owner: AgentId,
    },
}

/// What an agent sees during a stage-1 sub-round.
pub struct DelegationView<'a> {
    pub t: usize,
    pub sub_round: usize,
    pub ledger: &'a Ledger,
    pub powers: &'a [BigRational],
    pub optima: &'a [Proposal],
    pub current: &'a Proposal,
    pub distance: crate::preference::Distance,
    /// Units each agent received during the previous sub-round.
    pub received: &'a [Vec<UnitId>],
}

impl DelegationView<'_> {
    /// Units an agent may hand on this sub-round: everything it holds in
    /// the first sub-round, afterwards only what just arrived.
    pub fn delegable_units(&self, agent: AgentId) -> Vec<UnitId> {
        let held = |id: &UnitId| {
            self.ledger
                .unit(*id)
                .map(|u| u.holder() == agent && !u.is_retired())
                .unwrap_or(false)
        };
        if self.sub_round == 0 {
            self.ledger
                .units()
                .iter()
                .map(|u| u.id())
                .filter(held)
                .collect()
        } else {
            self.received[agent.0].iter().copied().filter(held).collect()
        }
    }

    /// Nearest other agent by optimum distance among `candidates`, lowest id
    /// on ties.
    pub fn nearest(&self, agent: AgentId, candidates: impl Iterator<Item = AgentId>) -> Option<AgentId> {
        let me = self.optima[agent.0].values();
        candidates
            .filter(|&c| c != agent)
            .map(|c| (self.distance.rank_distance(me, self.optima[c.0].values()), c))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, c)| c)
    }

    /// The `m` most powerful agents, lowest id on ties.
    pub fn top_by_power(&self, m: usize) -> Vec<AgentId> {
        let mut ids: Vec<usize> = (0..self.powers.len()).collect();
        ids.sort_by(|&a, &b| self.powers[b].cmp(&self.powers[a]).then(a.cmp(&b)));
        ids.into_iter().take(m).map(AgentId).collect()
    }
}

/// What a seated expert sees when authoring a correction.
pub struct CorrectionRequest<'a> {
    pub t: usize,
    pub member: AgentId,
    pub share: &'a BigRational,
    pub current: &'a Proposal,
    pub optimum: &'a Proposal,
    pub metric: Metric,
    /// Corrections already tabled this step, available to build on.
    pub tabled: &'a [Correction],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionDraft {
    pub target: Proposal,
    pub parent: Option<CorrectionId>,
}

pub trait Strategy: Send + Sync {
    fn delegate(&self, agent: AgentId, view: &DelegationView<'_>, rng: &mut AgentRng) -> Vec<Announcement>;

    fn correct(&self, request: &CorrectionRequest<'_>, _rng: &mut AgentRng) -> Option<CorrectionDraft> {
        greedy_toward_optimum(request.current, request.optimum, request.share, request.metric)
            .map(|target| CorrectionDraft {
                target,
                parent: None,
            })
    }

    /// Fallback root correction after the correction this member built on
    /// was voted down.
    fn replace(&self, request: &CorrectionRequest<'_>, rng: &mut AgentRng) -> Option<CorrectionDraft> {
        self.correct(request, rng).map(|d| CorrectionDraft {
            parent: None,
            ..d
        })
    }
}

struct Policy {
    kind: StrategyKind,
}

impl Strategy for Policy {
    fn delegate(&self, agent: AgentId, view: &DelegationView<'_>, rng: &mut AgentRng) -> Vec<Announcement> {
        delegate_decide(agent, view, &self.kind, rng)
    }
}

pub fn delegate_decide(
    agent: AgentId,
    view: &DelegationView<'_>,
    kind: &StrategyKind,
    rng: &mut AgentRng,
) -> Vec<Announcement> {
    let n = view.ledger.agent_count();
    match *kind {
        StrategyKind::Noop | StrategyKind::Stick => Vec::new(),
        StrategyKind::RandomDelegate { fraction } => {
            let others: Vec<AgentId> = (0..n).map(AgentId).filter(|&a| a != agent).collect();
            if others.is_empty() {
                return Vec::new();
            }
            view.delegable_units(agent)
                .into_iter()
                .filter_map(|unit| {
                    if rng.random_bool(fraction) {
                        let to = *others.choose(rng).expect("non-empty");
                        Some(Announcement::Transfer {
                            unit,
                            from: agent,
                            to,
                        })
                    } else {
                        None
                    }
                })
                .collect()
        }
        StrategyKind::ProximityDelegate { fraction } => {
            let to = view.nearest(agent, (0..n).map(AgentId));
            hand_over(agent, view, fraction, to)
        }
        StrategyKind::ExpertSeeker { fraction, pool } => {
            let to = view.nearest(agent, view.top_by_power(pool).into_iter());
            hand_over(agent, view, fraction, to)
        }
    }
}

fn hand_over(agent: AgentId, view: &DelegationView<'_>, fraction: f64, to: Option<AgentId>) -> Vec<Announcement> {
    let Some(to) = to else {
        return Vec::new();
    };
    let units = view.delegable_units(agent);
    let count = (fraction * units.len() as f64).floor() as usize;
    units
        .into_iter()
        .take(count)
        .map(|unit| Announcement::Transfer {
            unit,
            from: agent,
            to,
        })
        .collect()
}

/// Moves the current proposal toward `optimum` as far as the budget allows.
///
/// Under the L1 metric the step is `beta = min(1, budget * s / |optimum -
/// current|_1)`, so the budget binds exactly unless the optimum is within
/// reach. Under the Hamming metric the `floor(budget * s)` coordinates with
/// the largest gap jump straight to the optimum. Returns `None` when the
/// expert has nothing to change.
pub fn greedy_toward_optimum(
    current: &Proposal,
    optimum: &Proposal,
    budget: &BigRational,
    metric: Metric,
) -> Option<Proposal> {
    if current.dim() != optimum.dim() || current == optimum {
        return None;
    }
    let s = current.dim();
    let cur = current.values();
    let opt = optimum.values();
    let target = match metric {
        Metric::L1Normalized => {
            let gap: f64 = cur.iter().zip(opt).map(|(c, o)| (o - c).abs()).sum();
            let mut beta = (ratio_to_f64(budget) * s as f64 / gap).min(1.0);
            let step = |beta: f64| {
                let v = cur
                    .iter()
                    .zip(opt)
                    .map(|(c, o)| (c + beta * (o - c)).clamp(0.0, 1.0))
                    .collect();
                Proposal::new(v).ok()
            };
            let mut candidate = if beta >= 1.0 { optimum.clone() } else { step(beta)? };
            // float rounding can overshoot the budget by an ulp
            let mut shrink = f64::EPSILON;
            while !within_budget(corpus_delta(&candidate, current, metric).ok()?, budget) {
                beta *= 1.0 - shrink;
                shrink *= 2.0;
                if beta <= 0.0 || shrink >= 1.0 {
                    return None;
                }
                candidate = step(beta)?;
            }
            candidate
        }
        Metric::HammingFraction => {
            let seats = (budget * BigRational::from_integer(s.into())).floor().to_integer();
            let count = seats.to_usize().unwrap_or(s).min(s);
            let mut gaps: Vec<(usize, f64)> = cur
                .iter()
                .zip(opt)
                .enumerate()
                .filter(|(_, (c, o))| c != o)
                .map(|(i, (c, o))| (i, (o - c).abs()))
                .collect();
            gaps.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            if count == 0 || gaps.is_empty() {
                return None;
            }
            let mut v = cur.to_vec();
            for &(i, _) in gaps.iter().take(count) {
                v[i] = opt[i];
            }
            Proposal::new(v).ok()?
        }
    };
    (target != *current).then_some(target)
}

/// One side of a conflict handed to [`joint_amendment`].
pub struct Contribution<'a> {
    pub target: &'a Proposal,
    pub power: &'a BigRational,
}

/// Default joint correction for a group of conflicting corrections.
///
/// Coordinates nobody touched keep `base`. Coordinates every editor set to
/// the same value take it. Contested coordinates get the power-weighted
/// average of the editors' values, weights normalised over the editors of
/// that coordinate and summed in contribution order.
pub fn joint_amendment(base: &Proposal, contributions: &[Contribution<'_>]) -> Option<Proposal> {
    let mut out = base.values().to_vec();
    // exact weights per distinct set of editors
    let mut weights: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    for (m, slot) in out.iter_mut().enumerate() {
        let editors: Vec<usize> = (0..contributions.len())
            .filter(|&i| {
                contributions[i]
                    .target
                    .values()
                    .get(m)
                    .is_some_and(|v| *v != base.values()[m])
            })
            .collect();
        let Some(&first) = editors.first() else {
            continue;
        };
        let v0 = contributions[first].target.values()[m];
        if editors.iter().all(|&i| contributions[i].target.values()[m] == v0) {
            *slot = v0;
            continue;
        }
        if !weights.contains_key(&editors) {
            let den = common_denominator(editors.iter().map(|&i| contributions[i].power.denom()));
            let nums: Vec<BigInt> = editors
                .iter()
                .map(|&i| contributions[i].power.numer() * (&den / contributions[i].power.denom()))
                .collect();
            let total: BigInt = nums.iter().sum();
            if total.is_zero() {
                return None;
            }
            // correctly rounded without reducing
            let w = nums
                .into_iter()
                .map(|n| ratio_to_f64(&BigRational::new_raw(n, total.clone())))
                .collect();
            weights.insert(editors.clone(), w);
        }
        *slot = editors
            .iter()
            .zip(&weights[&editors])
            .map(|(&i, w)| w * contributions[i].target.values()[m])
            .sum::<f64>()
            .clamp(0.0, 1.0);
    }
    Proposal::new(out).ok()
}
