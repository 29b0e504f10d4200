//! Acceptance suite. Runs every criterion, prints one line each and exits
//! nonzero if any failed.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{fuzz_ledger, key_le, oracle_committee, preference_key, q, Op};
use liquid_deliberation::analysis::batch_with;
use liquid_deliberation::election::ElectionError;
use liquid_deliberation::engine::{IterationRecord, RunOutcome};
use liquid_deliberation::ledger::{AgentId, Dilution, Ledger};
use liquid_deliberation::preference::{Electorate, Voter};
use liquid_deliberation::ratio::ratio_to_f64;
use liquid_deliberation::scenario::{OpinionSpec, StrategyAssignment, UnitsPerAgent};
use liquid_deliberation::{
    engine, ratify, select_committee, Distance, Metric, Opinion, Proposal, Scenario, ScenarioConfig,
    StrategyKind, StrategySpec,
};
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RANDOM_SCENARIOS: u64 = 1000;
const FUZZED_MUTATIONS: usize = 100_000;
const RATIFY_INSTANCES: usize = 10_000;
const ORDER_TRIPLES: usize = 100_000;
const BATCH_SEEDS: u64 = 64;
/// Coordinate tolerance for the hand-traced fixture.
const FIXTURE_TOL: f64 = 0.0;

type Verdict = Result<String, String>;

fn main() -> ExitCode {
    let mut lines: Vec<(u8, String, Verdict, f64)> = Vec::new();
    let mut timed = |id: u8, name: &str, f: &mut dyn FnMut() -> Verdict| {
        let started = Instant::now();
        let verdict = f();
        lines.push((id, name.to_string(), verdict, started.elapsed().as_secs_f64()));
    };

    // 3 and 6 inspect the runs of 1
    let mut runs = Vec::new();
    timed(1, "finite termination", &mut || {
        runs = random_runs();
        termination(&runs)
    });
    timed(3, "power decay", &mut || power_decay(&runs));
    timed(6, "budget conservation", &mut || budget_conservation(&runs));
    drop(runs);
    timed(2, "dilution law", &mut dilution_law);
    timed(4, "election oracle", &mut election_oracle);
    timed(5, "ratification oracle", &mut ratification_oracle);
    timed(7, "total order axioms", &mut order_axioms);
    timed(8, "determinism", &mut determinism);
    timed(9, "conflict fixture", &mut conflict_fixture);

    lines.sort_by_key(|l| l.0);
    let mut failed = 0;
    for (id, name, verdict, secs) in &lines {
        match verdict {
            Ok(detail) => println!("PASS {id} {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

struct Run {
    seed: u64,
    scenario: Scenario,
    outcome: Result<RunOutcome, String>,
}

fn random_runs() -> Vec<Run> {
    (0..RANDOM_SCENARIOS)
        .map(|seed| {
            let scenario = Scenario::from_config(&ScenarioConfig::random(seed)).unwrap();
            let outcome = engine::run(&scenario).map_err(|e| e.to_string());
            Run { seed, scenario, outcome }
        })
        .collect()
}

fn records(runs: &[Run]) -> impl Iterator<Item = (&Run, &IterationRecord)> {
    runs.iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|o| (r, o)))
        .flat_map(|(r, o)| o.records.iter().map(move |rec| (r, rec)))
}

fn termination(runs: &[Run]) -> Verdict {
    let bad: Vec<String> = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|e| format!("seed {}: {e}", r.seed)))
        .collect();
    if !bad.is_empty() {
        return Err(format!("{} runs did not stop naturally, first {}", bad.len(), bad[0]));
    }
    let max_t = runs
        .iter()
        .map(|r| r.outcome.as_ref().unwrap().terminal_iteration)
        .max()
        .unwrap_or(0);
    Ok(format!("{} of {} stopped naturally, max T {max_t}", runs.len(), runs.len()))
}

fn power_decay(runs: &[Run]) -> Verdict {
    let mut checked = 0;
    for (run, rec) in records(runs) {
        if rec.transfers.is_empty() {
            if rec.total_power_after > rec.total_power_before {
                return Err(format!("seed {} t {}: power grew without mutations", run.seed, rec.t));
            }
            continue;
        }
        checked += 1;
        if rec.total_power_after >= rec.total_power_before {
            return Err(format!("seed {} t {}: no strict decrease", run.seed, rec.t));
        }
    }
    Ok(format!("{checked} stage-1 passes with mutations, all strictly decreasing"))
}

fn cost(a: &Proposal, b: &Proposal, metric: Metric) -> f64 {
    let s = a.dim() as f64;
    let pairs = a.values().iter().zip(b.values());
    let raw = match metric {
        Metric::L1Normalized => pairs.map(|(x, y)| (x - y).abs()).sum::<f64>() / s,
        Metric::HammingFraction => pairs.filter(|(x, y)| x != y).count() as f64 / s,
    };
    raw.min(1.0)
}

fn budget_conservation(runs: &[Run]) -> Verdict {
    let mut iterations = 0;
    let mut empty = 0;
    let mut applied = 0;
    for (run, rec) in records(runs) {
        let (Some(committee), Some(s3)) = (&rec.committee, &rec.stage3) else {
            continue;
        };
        if committee.is_empty() {
            // a tie straddling the last seat can seat nobody; no budgets exist
            empty += 1;
            continue;
        }
        iterations += 1;
        let shares: BigRational = committee
            .members()
            .iter()
            .map(|&m| committee.power_of(m).unwrap() / committee.total_power())
            .fold(BigRational::zero(), |acc, x| acc + x);
        if !shares.is_one() || !s3.share_sum.is_one() {
            return Err(format!("seed {} t {}: shares sum to {shares}", run.seed, rec.t));
        }
        let mut present: Vec<_> = s3.survivors.clone();
        for &id in &s3.survivors {
            present.extend(s3.corrections.ancestors(id));
        }
        present.sort();
        present.dedup();
        for id in present {
            applied += 1;
            let c = s3.corrections.get(id).unwrap();
            let base = match c.parent {
                Some(p) => &s3.corrections.get(p).unwrap().target,
                None => &rec.proposal_before,
            };
            let budget = c
                .authors()
                .iter()
                .map(|&a| committee.power_of(a).unwrap() / committee.total_power())
                .fold(BigRational::zero(), |acc, x| acc + x);
            let f = cost(&c.target, base, run.scenario.metric);
            if f > ratio_to_f64(&budget) {
                return Err(format!(
                    "seed {} t {}: correction {} costs {f} over {budget}",
                    run.seed, rec.t, id.0
                ));
            }
            let passed = s3
                .outcomes
                .iter()
                .any(|o| o.id == id && o.tally.as_ref().is_some_and(|t| t.passed));
            if !passed {
                return Err(format!("seed {} t {}: correction {} applied unratified", run.seed, rec.t, id.0));
            }
            if let Some(t) = s3.outcomes.iter().find(|o| o.id == id).and_then(|o| o.tally.as_ref()) {
                let outside: BigRational = (0..run.scenario.n)
                    .filter(|&a| !committee.contains(AgentId(a)))
                    .map(|a| rec.powers[a].clone())
                    .fold(BigRational::zero(), |acc, x| acc + x);
                if t.total != outside {
                    return Err(format!("seed {} t {}: tally total includes members", run.seed, rec.t));
                }
            }
        }
    }
    Ok(format!(
        "{iterations} seated iterations ({empty} with an empty committee), {applied} applied corrections, zero violations"
    ))
}

fn dilution_law() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd11);
    let mut mutations = 0;
    let mut ledgers = 0;
    while mutations < FUZZED_MUTATIONS {
        let n = rng.random_range(2..=8usize);
        let units: Vec<usize> = (0..n).map(|_| rng.random_range(0..=4)).collect();
        let c_den = rng.random_range(2..=100u64);
        let c_num = rng.random_range(1..c_den);
        let initial = q(rng.random_range(1..=7), 7);
        let ops: Vec<Op> = (0..rng.random_range(1..=400))
            .map(|_| Op {
                unit: rng.random_range(0..64),
                pick: rng.random_range(0..16),
                to: rng.random_range(0..n),
                reclaim: rng.random_bool(0.25),
            })
            .collect();
        let (ledger, counts) = fuzz_ledger(&units, (c_num, c_den), &initial, &ops);
        let retention = BigRational::one() - BigRational::new(c_num.into(), c_den.into());
        for (u, &m) in ledger.units().iter().zip(&counts) {
            let expected = &initial * retention.clone().pow(m as i32);
            if u.mutation_count() != m || *u.value() != expected {
                return Err(format!(
                    "ledger {ledgers} unit {}: value {} after {m} mutations, expected {expected}",
                    u.id().0,
                    u.value()
                ));
            }
        }
        mutations += counts.iter().map(|&m| m as usize).sum::<usize>();
        ledgers += 1;
    }
    Ok(format!("{mutations} mutations over {ledgers} ledgers, all exact"))
}

#[derive(Clone, Copy)]
enum Kind {
    Own,
    Direct,
    Second,
    Reclaimed,
}

/// All count vectors over `kinds` with at most `max` units in total.
fn profiles(kinds: usize, max: usize) -> Vec<Vec<usize>> {
    fn go(kinds: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == kinds {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            go(kinds, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(kinds, max, &mut Vec::new(), &mut out);
    out
}

/// Non-decreasing index sequences of length `n` over `0..m`.
fn multisets(m: usize, n: usize, f: &mut impl FnMut(&[usize])) {
    fn go(m: usize, n: usize, start: usize, prefix: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if prefix.len() == n {
            f(prefix);
            return;
        }
        for i in start..m {
            prefix.push(i);
            go(m, n, i, prefix, f);
            prefix.pop();
        }
    }
    go(m, n, 0, &mut Vec::new(), f);
}

/// Ledger where agent `h` holds the units described by its profile. Chains
/// are realized through real transfers at c = 1/2.
fn realize(assignment: &[&Vec<usize>], kinds: &[Kind]) -> Ledger {
    let n = assignment.len();
    let mut ledger = Ledger::new(n, Dilution::new(1, 2).unwrap());
    let mut plan = Vec::new();
    for (h, profile) in assignment.iter().enumerate() {
        for (&count, &kind) in profile.iter().zip(kinds) {
            if count == 0 {
                continue;
            }
            let issuer = match kind {
                Kind::Direct => (h + 1) % n,
                _ => h,
            };
            for id in ledger.issue_units(AgentId(issuer), count, &BigRational::one()).unwrap() {
                plan.push((id, h, kind));
            }
        }
    }
    ledger.close_issuance();
    for (id, h, kind) in plan {
        let other = AgentId((h + 1) % n);
        match kind {
            Kind::Own => {}
            Kind::Direct => {
                ledger.transfer(id, other, AgentId(h)).unwrap();
            }
            Kind::Second => {
                ledger.transfer(id, AgentId(h), other).unwrap();
                ledger.transfer(id, other, AgentId(h)).unwrap();
            }
            Kind::Reclaimed => {
                ledger.transfer(id, AgentId(h), other).unwrap();
                ledger.reclaim(id, AgentId(h)).unwrap();
            }
        }
    }
    ledger
}

fn election_sweep(kinds: &[Kind], sizes: std::ops::RangeInclusive<usize>) -> Result<usize, String> {
    let table = profiles(kinds.len(), 3);
    let mut checked = 0;
    let mut failure = None;
    for n in sizes {
        multisets(table.len(), n, &mut |idx| {
            if failure.is_some() {
                return;
            }
            let assignment: Vec<&Vec<usize>> = idx.iter().map(|&i| &table[i]).collect();
            let ledger = realize(&assignment, kinds);
            for k in 1..n {
                checked += 1;
                let expected = oracle_committee(&ledger, k);
                let got = match select_committee(&ledger, k) {
                    Ok(c) => c.members().iter().map(|a| a.0).collect(),
                    Err(ElectionError::EmptySociety) => Vec::new(),
                    Err(e) => {
                        failure = Some(format!("{assignment:?} k={k}: {e}"));
                        return;
                    }
                };
                if got != expected {
                    failure = Some(format!("{assignment:?} k={k}: got {got:?}, oracle {expected:?}"));
                    return;
                }
            }
        });
    }
    failure.map_or(Ok(checked), Err)
}

fn election_oracle() -> Verdict {
    let plain = election_sweep(&[Kind::Own, Kind::Direct, Kind::Second], 2..=5)?;
    let reclaimed = election_sweep(&[Kind::Own, Kind::Direct, Kind::Second, Kind::Reclaimed], 2..=4)?;
    Ok(format!("{plain} elections over depth-3 ledgers, {reclaimed} with reclaimed units, all agree"))
}

fn random_point(rng: &mut ChaCha8Rng, s: usize, grid: bool) -> Proposal {
    let v = (0..s)
        .map(|_| {
            if grid {
                f64::from(rng.random_range(0..=4u8)) / 4.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    Proposal::new(v).unwrap()
}

fn ratification_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a7);
    let mut passed = 0;
    for i in 0..RATIFY_INSTANCES {
        let s = rng.random_range(1..=4);
        let grid = rng.random_bool(0.5);
        let l1 = rng.random_bool(0.5);
        let distance = if l1 { Distance::L1 } else { Distance::Euclidean };
        let voters_n = rng.random_range(0..=8);
        let opinions: Vec<Opinion> = (0..voters_n)
            .map(|a| Opinion::new(AgentId(a), random_point(&mut rng, s, grid), distance))
            .collect();
        let voters: Vec<Voter> = opinions
            .iter()
            .map(|o| Voter {
                id: o.owner,
                power: q(rng.random_range(0..=20), rng.random_range(1..=12)),
                engaged: rng.random_bool(0.85),
                opinion: o,
            })
            .collect();
        let target = random_point(&mut rng, s, grid);
        let current = random_point(&mut rng, s, grid);
        let sq = random_point(&mut rng, s, grid);

        let mut favorable = BigRational::zero();
        let mut total = BigRational::zero();
        for v in &voters {
            let key = |x: &Proposal| preference_key(x.values(), v.opinion.optimum.values(), l1);
            let yes = !v.engaged
                || (key_le(&key(&target), &key(&current)) && key_le(&key(&current), &key(&sq)));
            if yes {
                favorable += &v.power;
            }
            total += &v.power;
        }
        let expected = favorable.clone() + favorable.clone() > total;

        let tally = ratify(&target, &voters, &current, &sq).map_err(|e| e.to_string())?;
        let fast = Electorate::new(&voters)
            .ratify(&target, &current, &sq)
            .map_err(|e| e.to_string())?;
        if tally.favorable != favorable || tally.total != total || tally.passed != expected || fast != tally {
            return Err(format!("instance {i}: got {tally:?}, expected {favorable}/{total} {expected}"));
        }
        passed += usize::from(expected);
    }
    Ok(format!("{RATIFY_INSTANCES} instances agree ({passed} passed)"))
}

fn order_axioms() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0d7);
    for distance in [Distance::Euclidean, Distance::L1] {
        for i in 0..ORDER_TRIPLES {
            let s = rng.random_range(1..=3);
            let grid = rng.random_bool(0.7);
            let opinion = Opinion::new(AgentId(0), random_point(&mut rng, s, grid), distance);
            let a = random_point(&mut rng, s, grid);
            let b = random_point(&mut rng, s, grid);
            let c = random_point(&mut rng, s, grid);
            let le = |x: &Proposal, y: &Proposal| opinion.prefers(x, y).unwrap();
            let fail = |axiom: &str| Err(format!("{distance:?} triple {i}: {axiom} fails on {a:?} {b:?} {c:?}"));
            if !le(&a, &a) {
                return fail("reflexivity");
            }
            if le(&a, &b) && le(&b, &a) && a != b {
                return fail("antisymmetry");
            }
            if le(&a, &b) && le(&b, &c) && !le(&a, &c) {
                return fail("transitivity");
            }
            if !le(&a, &b) && !le(&b, &a) {
                return fail("totality");
            }
        }
    }
    Ok(format!("{ORDER_TRIPLES} triples per distance, zero violations"))
}

fn determinism() -> Verdict {
    let demo = Scenario::from_config(&ScenarioConfig::demo()).unwrap();
    let first = engine::run(&demo).map_err(|e| e.to_string())?.trace.to_jsonl();
    let second = engine::run(&demo).map_err(|e| e.to_string())?.trace.to_jsonl();
    if first != second {
        return Err("demo traces differ".into());
    }
    let seeds: Vec<u64> = (0..BATCH_SEEDS).collect();
    let serial = batch_with(&seeds, 1, ScenarioConfig::random);
    let parallel = batch_with(&seeds, 8, ScenarioConfig::random);
    if serial.csv_records() != parallel.csv_records() || serial.aggregate() != parallel.aggregate() {
        return Err("batch output depends on parallelism".into());
    }
    Ok(format!(
        "demo trace {} bytes identical, {BATCH_SEEDS}-seed batch identical at jobs 1 and 8",
        first.len()
    ))
}

fn fixture_config() -> ScenarioConfig {
    let mut strategies = vec![StrategySpec::new(StrategyKind::Noop); 5];
    strategies[2] = StrategySpec::new(StrategyKind::ProximityDelegate { fraction: 0.5 });
    ScenarioConfig {
        n: 5,
        k: 2,
        s: 2,
        c: "1/10".into(),
        units_per_agent: UnitsPerAgent::PerAgent(vec![4, 3, 2, 2, 2]),
        initial_value: "1/1".into(),
        initial_proposal: vec![0.5, 0.5],
        status_quo: vec![0.2, 0.2],
        metric: Metric::L1Normalized,
        distance: Distance::Euclidean,
        engagement_probability: 1.0,
        power_floor: "1/1000000000".into(),
        opinions: OpinionSpec::Explicit(vec![
            vec![0.9, 0.6],
            vec![0.3, 0.9],
            vec![0.66, 0.84],
            vec![0.9, 0.5],
            vec![0.3, 0.95],
        ]),
        strategies: StrategyAssignment::PerAgent(strategies),
        seed: 1,
        max_iterations: 1000,
    }
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= FIXTURE_TOL)
}

fn conflict_fixture() -> Verdict {
    let scenario = Scenario::from_config(&fixture_config()).map_err(|e| e.to_string())?;
    let outcome = engine::run(&scenario).map_err(|e| e.to_string())?;
    let first = &outcome.records[0];
    let committee = first.committee.as_ref().ok_or("no committee at t=0")?;
    let members: Vec<usize> = committee.members().iter().map(|a| a.0).collect();
    if members != [0, 1] {
        return Err(format!("committee {members:?}"));
    }
    let share0 = committee.share_of(AgentId(0)).unwrap();
    let share1 = committee.share_of(AgentId(1)).unwrap();
    if *share0 != q(49, 79) || *share1 != q(30, 79) {
        return Err(format!("shares {share0}, {share1}"));
    }
    let s3 = first.stage3.as_ref().ok_or("no stage 3")?;
    let expected: [(&[f64], (i64, i64)); 3] = [
        (&[0.9, 0.6], (3, 5)),
        (&[0.3, 0.9], (3, 5)),
        (&[0.6721518987341772, 0.7139240506329114], (5, 5)),
    ];
    if s3.outcomes.len() != expected.len() {
        return Err(format!("{} outcomes", s3.outcomes.len()));
    }
    for (o, (target, (fav, tot))) in s3.outcomes.iter().zip(expected) {
        let c = s3.corrections.get(o.id).unwrap();
        let tally = o.tally.as_ref().ok_or("missing tally")?;
        if !close(c.target.values(), target)
            || tally.favorable != q(fav, 1)
            || tally.total != q(tot, 1)
            || !tally.passed
        {
            return Err(format!("correction {}: {:?} tally {tally:?}", o.id.0, c.target));
        }
    }
    if !close(first.proposal_after.values(), expected[2].0) {
        return Err(format!("next proposal {:?}", first.proposal_after));
    }
    Ok(format!(
        "tallies 3/5, 3/5, amendment 5/5, next proposal {:?}",
        first.proposal_after.values()
    ))
}

