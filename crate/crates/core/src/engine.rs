//! The iteration loop: delegation (stage 1), committee election (stage 2)
//! and correction plus ratification (stage 3), with the stopping rules
//! checked once the committee is known.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::election::{select_committee, Committee, CommitteeFingerprint, ElectionError};
use crate::ledger::{AgentId, Ledger, LedgerError, Mutation, MutationKind, UnitId};
use crate::preference::{Electorate, PreferenceError, Tally, Voter};
use crate::proposal::{
    assemble_next, budget_share, corpus_delta, edits_conflict, family_heads, validate_correction,
    within_budget, BudgetVerdict, CorrectionId, CorrectionKind, CorrectionSet, Proposal,
    ProposalError,
};
use crate::ratio::{format_ratio, ratio_to_f64};
use crate::scenario::Scenario;
use crate::strategies::{
    agent_rng, joint_amendment, Announcement, AgentRng, Contribution, CorrectionRequest,
    DelegationView, Strategy,
};
use crate::trace::{
    AmendmentRecord, CommitteeRecord, CorrectionRecord, DroppedAnnouncement, EventBody,
    MutationRecord, ProposalRecord, ScenarioHeader, StageReport, StopReason, StopRecord, TallyRecord,
    Trace,
};

/// Salt separating the correction RNG streams from the delegation ones.
const CORRECTION_SALT: u64 = 0x636f_7272_6563_7421;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no natural stop within {0} iterations")]
    SafetyCap(usize),
    #[error("scenario has {expected} agents but {got} strategies were supplied")]
    StrategyCount { expected: usize, got: usize },
    #[error("correction {id} costs {cost} but its budget is {budget}")]
    BudgetViolation {
        id: CorrectionId,
        cost: f64,
        budget: String,
    },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Election(#[from] ElectionError),
    #[error(transparent)]
    Proposal(#[from] ProposalError),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
}

/// How one tabled correction fared.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionOutcome {
    pub id: CorrectionId,
    pub budget: BigRational,
    pub within_budget: bool,
    /// `None` when the correction never reached a vote.
    pub tally: Option<Tally>,
}

impl CorrectionOutcome {
    pub fn accepted(&self) -> bool {
        self.tally.as_ref().is_some_and(|t| t.passed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Report {
    pub mutations: Vec<Mutation>,
    pub dropped: usize,
    pub retired: usize,
    pub sub_rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage3Report {
    pub corrections: CorrectionSet,
    pub outcomes: Vec<CorrectionOutcome>,
    /// Amendment ids in the order they were issued.
    pub amendments: Vec<CorrectionId>,
    pub survivors: Vec<CorrectionId>,
    /// Sum of every member's budget share.
    pub share_sum: BigRational,
    pub next: Proposal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    pub transfers: Vec<Mutation>,
    pub dropped: usize,
    pub retired: usize,
    pub total_power_before: BigRational,
    pub total_power_after: BigRational,
    pub powers: Vec<BigRational>,
    pub committee: Option<Committee>,
    pub stage3: Option<Stage3Report>,
    pub proposal_before: Proposal,
    pub proposal_after: Proposal,
    pub stop_reason: Option<StopReason>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_proposal: Proposal,
    pub stop_reason: StopReason,
    /// Index of the iteration in which the stop fired.
    pub terminal_iteration: usize,
    pub trace: Trace,
    pub records: Vec<IterationRecord>,
}

/// Everything the stopping rules look at.
#[derive(Debug, Clone, Copy)]
pub struct StopContext<'a> {
    pub t: usize,
    pub mutations_ever: usize,
    pub powers: &'a [BigRational],
    pub total_power: &'a BigRational,
    pub committee: Option<&'a CommitteeFingerprint>,
    pub previous_committee: Option<&'a CommitteeFingerprint>,
    pub proposal: &'a Proposal,
    pub previous_proposal: Option<&'a Proposal>,
}

/// Applies the stopping rules in fixed precedence order.
pub fn check_stop(ctx: &StopContext<'_>) -> Option<StopReason> {
    if ctx.t == 0 && ctx.mutations_ever == 0 {
        return Some(StopReason::NoInitialTransfers);
    }
    if ctx.mutations_ever > 0
        && !ctx.total_power.is_zero()
        && ctx.powers.windows(2).all(|w| w[0] == w[1])
    {
        return Some(StopReason::AllPowerEqual);
    }
    if ctx.t > 0 {
        if let (Some(now), Some(before)) = (ctx.committee, ctx.previous_committee) {
            if now == before {
                return Some(StopReason::CommitteeUnchangedTwice);
            }
        }
        if ctx.previous_proposal == Some(ctx.proposal) {
            return Some(StopReason::ProposalUnchangedTwice);
        }
    }
    if ctx.total_power.is_zero() {
        return Some(StopReason::PowerExhausted);
    }
    None
}

/// Mutable state carried between iterations.
pub struct Engine<'s> {
    scenario: &'s Scenario,
    strategies: Vec<Box<dyn Strategy>>,
    delegation_rngs: Vec<AgentRng>,
    correction_rngs: Vec<AgentRng>,
    ledger: Ledger,
    trace: Trace,
}

impl<'s> Engine<'s> {
    /// Engine using the strategies named in the scenario.
    pub fn new(scenario: &'s Scenario) -> Result<Self, EngineError> {
        let strategies = scenario.strategies.iter().map(|s| s.build()).collect();
        Self::with_strategies(scenario, strategies)
    }

    pub fn with_strategies(
        scenario: &'s Scenario,
        strategies: Vec<Box<dyn Strategy>>,
    ) -> Result<Self, EngineError> {
        let n = scenario.n;
        if strategies.len() != n {
            return Err(EngineError::StrategyCount {
                expected: n,
                got: strategies.len(),
            });
        }
        let mut ledger = Ledger::new(n, scenario.dilution);
        for (a, &count) in scenario.endowments.iter().enumerate() {
            if count > 0 {
                ledger.issue_units(AgentId(a), count, &scenario.initial_value)?;
            }
        }
        ledger.close_issuance();
        let offsets: Vec<u64> = (0..n)
            .map(|a| scenario.strategies.get(a).map_or(0, |s| s.seed_offset))
            .collect();
        let delegation_rngs = (0..n)
            .map(|a| agent_rng(scenario.seed, AgentId(a), offsets[a]))
            .collect();
        let correction_rngs = (0..n)
            .map(|a| agent_rng(scenario.seed ^ CORRECTION_SALT, AgentId(a), offsets[a]))
            .collect();
        Ok(Self {
            scenario,
            strategies,
            delegation_rngs,
            correction_rngs,
            ledger,
            trace: Trace::new(),
        })
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    fn header(&self) -> ScenarioHeader {
        let sc = self.scenario;
        ScenarioHeader {
            n: sc.n,
            k: sc.k,
            s: sc.s,
            c: sc.dilution.to_string(),
            seed: sc.seed,
            optima: sc.opinions.iter().map(|o| o.optimum.values().to_vec()).collect(),
            engaged: sc.engaged.clone(),
            initial_powers: self.ledger.powers(),
            initial_proposal: sc.initial_proposal.values().to_vec(),
            status_quo: sc.status_quo.values().to_vec(),
        }
    }

    /// Delegation sub-rounds. Every agent decides against the same snapshot,
    /// then announcements are applied in ascending agent order. Sub-rounds
    /// stop after one without mutations, or after `n` of them.
    pub fn run_stage1(&mut self, t: usize, current: &Proposal) -> Stage1Report {
        let n = self.scenario.n;
        let optima: Vec<Proposal> = self.scenario.opinions.iter().map(|o| o.optimum.clone()).collect();
        let mut received: Vec<Vec<UnitId>> = vec![Vec::new(); n];
        let mut mutations = Vec::new();
        let mut dropped = 0;
        let mut sub_rounds = 0;
        for sub_round in 0..n {
            sub_rounds += 1;
            let powers = self.ledger.powers();
            let view = DelegationView {
                t,
                sub_round,
                ledger: &self.ledger,
                powers: &powers,
                optima: &optima,
                current,
                distance: self.scenario.distance,
                received: &received,
            };
            let announced: Vec<Vec<Announcement>> = (0..n)
                .map(|a| {
                    self.strategies[a].delegate(AgentId(a), &view, &mut self.delegation_rngs[a])
                })
                .collect();
            let mut arrivals: Vec<Vec<UnitId>> = vec![Vec::new(); n];
            let mut applied = 0;
            for (a, list) in announced.into_iter().enumerate() {
                let agent = AgentId(a);
                for ann in list {
                    let result = match ann {
                        Announcement::Transfer { unit, from, .. }
                        | Announcement::Reclaim { unit, owner: from }
                            if from != agent =>
                        {
                            Err(LedgerError::Unauthorized { unit, agent })
                        }
                        Announcement::Transfer { unit, from, to } => {
                            self.ledger.transfer(unit, from, to).map(|_| ())
                        }
                        Announcement::Reclaim { unit, owner } => {
                            self.ledger.reclaim(unit, owner).map(|_| ())
                        }
                    };
                    match result {
                        Ok(()) => {
                            let m = self.ledger.history().last().expect("just mutated").clone();
                            arrivals[m.holder.0].push(m.unit);
                            let record = MutationRecord {
                                sub_round,
                                unit: m.unit,
                                actor: m.actor,
                                holder: m.holder,
                                value: m.value_after.clone(),
                                chain: m.chain_after.clone(),
                                mutation_count: m.mutation_count,
                            };
                            let body = match m.kind {
                                MutationKind::Transfer => EventBody::Transfer(record),
                                MutationKind::Reclaim => EventBody::Reclaim(record),
                            };
                            self.trace.push(t, 1, body);
                            mutations.push(m);
                            applied += 1;
                        }
                        Err(e) => {
                            dropped += 1;
                            self.trace.push(
                                t,
                                1,
                                EventBody::Dropped(DroppedAnnouncement {
                                    sub_round,
                                    agent,
                                    announcement: ann,
                                    reason: e.to_string(),
                                }),
                            );
                        }
                    }
                }
            }
            if applied == 0 {
                break;
            }
            received = arrivals;
        }
        let retired = self.ledger.retire_below(&self.scenario.power_floor);
        Stage1Report {
            mutations,
            dropped,
            retired,
            sub_rounds,
        }
    }

    /// Corrections, replacements, amendments and assembly of the next
    /// proposal.
    pub fn run_stage3(
        &mut self,
        t: usize,
        committee: &Committee,
        powers: &[BigRational],
        current: &Proposal,
    ) -> Result<Stage3Report, EngineError> {
        let sc = self.scenario;
        let metric = sc.metric;
        let voters = outside_voters(sc, committee, powers);
        let electorate = Electorate::new(&voters);
        let mut events: Vec<EventBody> = Vec::new();
        let mut set = CorrectionSet::new();
        let mut outcomes: Vec<CorrectionOutcome> = Vec::new();

        let members = committee.members().to_vec();
        let shares: Vec<BigRational> = members
            .iter()
            .map(|&m| budget_share(m, committee))
            .collect::<Result<_, _>>()?;
        let share_sum = shares.iter().fold(BigRational::zero(), |acc, s| acc + s);
        let share_of = |a: AgentId| -> BigRational {
            members
                .iter()
                .position(|&m| m == a)
                .map(|i| shares[i].clone())
                .unwrap_or_else(BigRational::zero)
        };

        // tables, budget-checks and ratifies one correction
        let table = |set: &mut CorrectionSet,
                         outcomes: &mut Vec<CorrectionOutcome>,
                         events: &mut Vec<EventBody>,
                         author: AgentId,
                         target: Proposal,
                         parent: Option<CorrectionId>,
                         kind: CorrectionKind|
         -> Result<CorrectionId, EngineError> {
            let id = set.push(author, target, parent, t, kind, current, metric)?;
            let correction = set.get(id)?.clone();
            let share = share_of(author);
            let verdict = validate_correction(&correction, set, committee, current, metric)?;
            events.push(EventBody::Correction(CorrectionRecord {
                t,
                id,
                author,
                parent,
                target: correction.target.values().to_vec(),
                cost: correction.cost,
                kind: correction.kind.clone(),
                share: share.clone(),
                within_budget: verdict.is_accept(),
            }));
            let tally = if let BudgetVerdict::Accept = verdict {
                let tally = electorate.ratify(&correction.target, current, &sc.status_quo)?;
                events.push(EventBody::VoteTally(TallyRecord {
                    correction: id,
                    favorable: tally.favorable.clone(),
                    total: tally.total.clone(),
                    passed: tally.passed,
                }));
                Some(tally)
            } else {
                None
            };
            outcomes.push(CorrectionOutcome {
                id,
                budget: share,
                within_budget: verdict.is_accept(),
                tally,
            });
            Ok(id)
        };

        // step 1: one correction per member, in seating order
        let mut authored: Vec<(AgentId, CorrectionId)> = Vec::new();
        for (i, &m) in members.iter().enumerate() {
            let request = CorrectionRequest {
                t,
                member: m,
                share: &shares[i],
                current,
                optimum: &sc.opinions[m.0].optimum,
                metric,
                tabled: set.as_slice(),
            };
            let draft = self.strategies[m.0].correct(&request, &mut self.correction_rngs[m.0]);
            if let Some(d) = draft {
                let id = table(&mut set, &mut outcomes, &mut events, m, d.target, d.parent, CorrectionKind::Original)?;
                authored.push((m, id));
            }
        }

        let accepted_ids = |outcomes: &[CorrectionOutcome]| -> BTreeSet<CorrectionId> {
            outcomes.iter().filter(|o| o.accepted()).map(|o| o.id).collect()
        };

        // step 2: replacements for members whose base was voted down
        let accepted = accepted_ids(&outcomes);
        for &(m, id) in &authored {
            let lost_base = set.ancestors(id).iter().any(|a| !accepted.contains(a));
            if !lost_base {
                continue;
            }
            let i = members.iter().position(|&x| x == m).expect("author is seated");
            let request = CorrectionRequest {
                t,
                member: m,
                share: &shares[i],
                current,
                optimum: &sc.opinions[m.0].optimum,
                metric,
                tabled: set.as_slice(),
            };
            if let Some(d) = self.strategies[m.0].replace(&request, &mut self.correction_rngs[m.0]) {
                table(
                    &mut set,
                    &mut outcomes,
                    &mut events,
                    m,
                    d.target,
                    None,
                    CorrectionKind::Replacement { replaces: id },
                )?;
            }
        }

        // live corrections: accepted with every ancestor accepted
        let accepted = accepted_ids(&outcomes);
        let live: Vec<CorrectionId> = accepted
            .iter()
            .copied()
            .filter(|&id| set.ancestors(id).iter().all(|a| accepted.contains(a)))
            .collect();
        let mut survivors = family_heads(&set, &live);

        // step 2: settle conflicts between families with joint amendments
        let mut amendments = Vec::new();
        let mut amendment_budgets: Vec<(CorrectionId, BigRational)> = Vec::new();
        loop {
            let components = conflict_components(&set, &survivors, current)?;
            if components.is_empty() {
                break;
            }
            for component in components {
                let mut authors: Vec<AgentId> = component
                    .iter()
                    .flat_map(|&id| set.get(id).map(|c| c.authors()).unwrap_or_default())
                    .collect();
                authors.sort();
                authors.dedup();
                let weights: Vec<BigRational> = component
                    .iter()
                    .map(|&id| {
                        set.get(id)
                            .map(|c| {
                                c.authors()
                                    .iter()
                                    .map(|&a| committee.power_of(a).cloned().unwrap_or_else(BigRational::zero))
                                    .sum()
                            })
                            .unwrap_or_else(|_| BigRational::zero())
                    })
                    .collect();
                let contributions: Vec<Contribution<'_>> = component
                    .iter()
                    .zip(&weights)
                    .map(|(&id, power)| Contribution {
                        target: &set.as_slice()[id.0].target,
                        power,
                    })
                    .collect();
                let target = joint_amendment(current, &contributions);
                survivors.retain(|id| !component.contains(id));
                let Some(target) = target else {
                    continue;
                };
                let budget: BigRational = authors.iter().map(|&a| share_of(a)).sum();
                let id = set.push(
                    authors[0],
                    target,
                    None,
                    t,
                    CorrectionKind::Amendment {
                        authors: authors.clone(),
                        replaces: component.clone(),
                    },
                    current,
                    metric,
                )?;
                let amendment = set.get(id)?.clone();
                let fits = within_budget(amendment.cost, &budget);
                events.push(EventBody::Amendment(AmendmentRecord {
                    id,
                    authors,
                    replaces: component.clone(),
                    target: amendment.target.values().to_vec(),
                    cost: amendment.cost,
                    budget: budget.clone(),
                    within_budget: fits,
                }));
                let tally = if fits {
                    let tally = electorate.ratify(&amendment.target, current, &sc.status_quo)?;
                    events.push(EventBody::VoteTally(TallyRecord {
                        correction: id,
                        favorable: tally.favorable.clone(),
                        total: tally.total.clone(),
                        passed: tally.passed,
                    }));
                    Some(tally)
                } else {
                    None
                };
                let outcome = CorrectionOutcome {
                    id,
                    budget: budget.clone(),
                    within_budget: fits,
                    tally,
                };
                if outcome.accepted() {
                    survivors.push(id);
                }
                outcomes.push(outcome);
                amendments.push(id);
                amendment_budgets.push((id, budget));
            }
            survivors.sort();
        }

        // budget audit of everything that reaches assembly
        for &id in &survivors {
            for c in std::iter::once(id).chain(set.ancestors(id)) {
                let correction = set.get(c)?;
                let (cost, budget) = match &correction.kind {
                    CorrectionKind::Amendment { .. } => {
                        let budget = amendment_budgets
                            .iter()
                            .find(|(a, _)| *a == c)
                            .map(|(_, b)| b.clone())
                            .unwrap_or_else(BigRational::zero);
                        (corpus_delta(&correction.target, current, metric)?, budget)
                    }
                    _ => {
                        let verdict = validate_correction(correction, &set, committee, current, metric)?;
                        if verdict.is_accept() {
                            continue;
                        }
                        (correction.cost, share_of(correction.author))
                    }
                };
                if !within_budget(cost, &budget) {
                    return Err(EngineError::BudgetViolation {
                        id: c,
                        cost,
                        budget: format_ratio(&budget),
                    });
                }
            }
        }

        let next = assemble_next(current, &set, &survivors)?;
        events.push(EventBody::Proposal(ProposalRecord {
            before: current.values().to_vec(),
            after: next.values().to_vec(),
            survivors: survivors.clone(),
        }));
        for e in events {
            self.trace.push(t, 3, e);
        }
        Ok(Stage3Report {
            corrections: set,
            outcomes,
            amendments,
            survivors,
            share_sum,
            next,
        })
    }

    /// Iterates until a stopping rule fires or the safety cap is reached.
    pub fn run(mut self) -> Result<RunOutcome, EngineError> {
        let sc = self.scenario;
        self.trace.push(0, 0, EventBody::Scenario(self.header()));
        let mut current = sc.initial_proposal.clone();
        let mut previous_proposal: Option<Proposal> = None;
        let mut previous_committee: Option<CommitteeFingerprint> = None;
        let mut mutations_ever = 0usize;
        let mut records = Vec::new();

        for t in 0..sc.max_iterations {
            let total_power_before = self.ledger.total_power();
            let stage1 = self.run_stage1(t, &current);
            mutations_ever += stage1.mutations.len();
            let powers = self.ledger.powers();
            let total_power = self.ledger.total_power();
            self.trace.push(
                t,
                1,
                EventBody::Stage(StageReport {
                    mutations: stage1.mutations.len(),
                    dropped: stage1.dropped,
                    retired: stage1.retired,
                    sub_rounds: stage1.sub_rounds,
                    total_power: total_power.clone(),
                    powers: powers.clone(),
                }),
            );

            let skip_election = total_power.is_zero() || (t == 0 && mutations_ever == 0);
            let committee = if skip_election {
                None
            } else {
                let c = select_committee(&self.ledger, sc.k)?;
                self.trace.push(
                    t,
                    2,
                    EventBody::Committee(CommitteeRecord {
                        t,
                        members: c.seats(),
                    }),
                );
                Some(c)
            };
            let fingerprint = committee.as_ref().map(Committee::fingerprint);

            let stop = check_stop(&StopContext {
                t,
                mutations_ever,
                powers: &powers,
                total_power: &total_power,
                committee: fingerprint.as_ref(),
                previous_committee: previous_committee.as_ref(),
                proposal: &current,
                previous_proposal: previous_proposal.as_ref(),
            });

            let mut record = IterationRecord {
                t,
                transfers: stage1.mutations,
                dropped: stage1.dropped,
                retired: stage1.retired,
                total_power_before,
                total_power_after: total_power,
                powers,
                committee,
                stage3: None,
                proposal_before: current.clone(),
                proposal_after: current.clone(),
                stop_reason: stop,
            };

            if let Some(reason) = stop {
                self.trace.push(
                    t,
                    2,
                    EventBody::Stop(StopRecord {
                        reason,
                        terminal_iteration: t,
                    }),
                );
                records.push(record);
                return Ok(RunOutcome {
                    final_proposal: current,
                    stop_reason: reason,
                    terminal_iteration: t,
                    trace: self.trace,
                    records,
                });
            }

            let committee = record
                .committee
                .as_ref()
                .expect("a committee exists whenever no stop fired");
            let stage3 = self.run_stage3(t, committee, &record.powers, &current)?;
            record.proposal_after = stage3.next.clone();
            let next = stage3.next.clone();
            record.stage3 = Some(stage3);
            records.push(record);

            previous_committee = fingerprint;
            previous_proposal = Some(std::mem::replace(&mut current, next));
        }
        Err(EngineError::SafetyCap(sc.max_iterations))
    }
}

/// Everyone outside the committee, with their current power.
pub fn outside_voters<'a>(scenario: &'a Scenario, committee: &Committee, powers: &[BigRational]) -> Vec<Voter<'a>> {
    (0..scenario.n)
        .filter(|&a| !committee.contains(AgentId(a)))
        .map(|a| Voter {
            id: AgentId(a),
            power: powers[a].clone(),
            engaged: scenario.engaged[a],
            opinion: &scenario.opinions[a],
        })
        .collect()
}

/// Groups conflicting survivors into connected components, each sorted, in
/// order of their smallest member.
fn conflict_components(
    set: &CorrectionSet,
    survivors: &[CorrectionId],
    current: &Proposal,
) -> Result<Vec<Vec<CorrectionId>>, ProposalError> {
    let len = survivors.len();
    let mut parent: Vec<usize> = (0..len).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut any = vec![false; len];
    for i in 0..len {
        for j in i + 1..len {
            let a = &set.get(survivors[i])?.target;
            let b = &set.get(survivors[j])?.target;
            if edits_conflict(a, current, b, current) {
                any[i] = true;
                any[j] = true;
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<CorrectionId>> = Default::default();
    for i in (0..len).filter(|&i| any[i]) {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(survivors[i]);
    }
    let mut out: Vec<Vec<CorrectionId>> = groups
        .into_values()
        .map(|mut g| {
            g.sort();
            g
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Builds the scenario's own strategies and runs to a stop.
pub fn run(scenario: &Scenario) -> Result<RunOutcome, EngineError> {
    Engine::new(scenario)?.run()
}

/// Total committee share as a float, for reporting.
pub fn share_sum_f64(report: &Stage3Report) -> f64 {
    ratio_to_f64(&report.share_sum)
}

/// `true` when every seated member's share adds to exactly one.
pub fn shares_conserved(report: &Stage3Report) -> bool {
    report.share_sum == BigRational::one()
}
