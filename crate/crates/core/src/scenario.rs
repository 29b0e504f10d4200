//! Scenario files and their expansion into a runnable [`Scenario`].
//!
//! Validation collects every problem before reporting, each tagged with the
//! JSON path of the offending field.

use std::fmt;
use std::path::Path;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{AgentId, Dilution};
use crate::preference::{Distance, Opinion};
use crate::proposal::{Metric, Proposal};
use crate::ratio::parse_ratio;
use crate::strategies::{stream_rng, StrategyKind, StrategySpec};

const OPINION_STREAM: u64 = 1;
const ENGAGEMENT_STREAM: u64 = 2;

const REQUIRED: [&str; 10] = [
    "n",
    "k",
    "s",
    "c",
    "units_per_agent",
    "initial_proposal",
    "status_quo",
    "opinions",
    "strategies",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnitsPerAgent {
    Uniform(usize),
    PerAgent(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeanSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpinionSpec {
    Explicit(Vec<Vec<f64>>),
    Uniform,
    GaussianClipped { mean: MeanSpec, stddev: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategyAssignment {
    All(StrategySpec),
    PerAgent(Vec<StrategySpec>),
}

fn default_initial_value() -> String {
    "1/1".to_string()
}

fn default_engagement() -> f64 {
    1.0
}

fn default_floor() -> String {
    "1/1000000000".to_string()
}

fn default_max_iterations() -> usize {
    1_000_000
}

/// A scenario file as written on disk. Rationals stay as text until
/// [`ScenarioConfig::validate`] so malformed ones can be reported alongside
/// every other problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub c: String,
    pub units_per_agent: UnitsPerAgent,
    #[serde(default = "default_initial_value")]
    pub initial_value: String,
    pub initial_proposal: Vec<f64>,
    pub status_quo: Vec<f64>,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub distance: Distance,
    #[serde(default = "default_engagement")]
    pub engagement_probability: f64,
    #[serde(default = "default_floor")]
    pub power_floor: String,
    pub opinions: OpinionSpec,
    pub strategies: StrategyAssignment,
    pub seed: u64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigProblem {
    pub path: String,
    pub message: String,
}

impl ConfigProblem {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{} problem(s) in scenario:\n{}", .0.len(), render(.0))]
    Invalid(Vec<ConfigProblem>),
}

impl ConfigError {
    pub fn problems(&self) -> &[ConfigProblem] {
        match self {
            ConfigError::Invalid(p) => p,
            ConfigError::Io { .. } => &[],
        }
    }
}

fn render(problems: &[ConfigProblem]) -> String {
    problems
        .iter()
        .map(|p| format!("  {p}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Reads and validates a scenario file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Parses and validates scenario JSON.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ConfigError::Invalid(vec![ConfigProblem::new("$", e.to_string())]))?;
    let Some(object) = value.as_object() else {
        return Err(ConfigError::Invalid(vec![ConfigProblem::new(
            "$",
            "scenario must be a JSON object",
        )]));
    };
    let missing: Vec<ConfigProblem> = REQUIRED
        .iter()
        .filter(|key| !object.contains_key(**key))
        .map(|key| ConfigProblem::new(format!("$.{key}"), "missing required field"))
        .collect();
    if !missing.is_empty() {
        return Err(ConfigError::Invalid(missing));
    }
    let config: ScenarioConfig = serde_json::from_value(value)
        .map_err(|e| ConfigError::Invalid(vec![ConfigProblem::new("$", e.to_string())]))?;
    let problems = config.validate();
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(problems))
    }
}

pub fn save_config(config: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(config).expect("scenario config always serializes")
}

fn check_vector(out: &mut Vec<ConfigProblem>, path: &str, v: &[f64], s: usize) {
    if v.len() != s {
        out.push(ConfigProblem::new(path, format!("expected {s} coordinates, got {}", v.len())));
    }
    for (i, x) in v.iter().enumerate() {
        if !(0.0..=1.0).contains(x) {
            out.push(ConfigProblem::new(format!("{path}[{i}]"), format!("{x} is outside [0, 1]")));
        }
    }
}

impl ScenarioConfig {
    /// Every violated invariant, empty when the config is runnable.
    pub fn validate(&self) -> Vec<ConfigProblem> {
        let mut out = Vec::new();
        let (n, s) = (self.n, self.s);
        if n < 2 {
            out.push(ConfigProblem::new("$.n", "society needs at least 2 agents"));
        }
        if self.k == 0 || self.k >= n {
            out.push(ConfigProblem::new("$.k", format!("need 1 <= k < n, got k = {} with n = {n}", self.k)));
        }
        if s == 0 {
            out.push(ConfigProblem::new("$.s", "proposal dimension must be at least 1"));
        }
        if let Err(e) = self.c.parse::<Dilution>() {
            out.push(ConfigProblem::new("$.c", e.to_string()));
        }
        match &self.units_per_agent {
            UnitsPerAgent::Uniform(0) => {
                out.push(ConfigProblem::new("$.units_per_agent", "at least one unit per agent"));
            }
            UnitsPerAgent::Uniform(_) => {}
            UnitsPerAgent::PerAgent(list) => {
                if list.len() != n {
                    out.push(ConfigProblem::new(
                        "$.units_per_agent",
                        format!("expected {n} entries, got {}", list.len()),
                    ));
                }
                if list.iter().all(|&u| u == 0) {
                    out.push(ConfigProblem::new("$.units_per_agent", "no units issued at all"));
                }
            }
        }
        match parse_ratio(&self.initial_value) {
            Ok(v) if v.is_positive() && v <= BigRational::one() => {}
            Ok(_) => out.push(ConfigProblem::new("$.initial_value", "must lie in (0, 1]")),
            Err(e) => out.push(ConfigProblem::new("$.initial_value", e.to_string())),
        }
        match parse_ratio(&self.power_floor) {
            Ok(v) if !v.is_negative() => {}
            Ok(_) => out.push(ConfigProblem::new("$.power_floor", "must be non-negative")),
            Err(e) => out.push(ConfigProblem::new("$.power_floor", e.to_string())),
        }
        check_vector(&mut out, "$.initial_proposal", &self.initial_proposal, s);
        check_vector(&mut out, "$.status_quo", &self.status_quo, s);
        if self.initial_proposal == self.status_quo {
            out.push(ConfigProblem::new(
                "$.initial_proposal",
                "initial proposal must differ from the status quo",
            ));
        }
        if !(0.0..=1.0).contains(&self.engagement_probability) {
            out.push(ConfigProblem::new("$.engagement_probability", "must lie in [0, 1]"));
        }
        match &self.opinions {
            OpinionSpec::Explicit(list) => {
                if list.len() != n {
                    out.push(ConfigProblem::new(
                        "$.opinions.explicit",
                        format!("expected {n} optima, got {}", list.len()),
                    ));
                }
                for (i, v) in list.iter().enumerate() {
                    check_vector(&mut out, &format!("$.opinions.explicit[{i}]"), v, s);
                }
            }
            OpinionSpec::Uniform => {}
            OpinionSpec::GaussianClipped { mean, stddev } => {
                match mean {
                    MeanSpec::Scalar(m) => {
                        check_vector(&mut out, "$.opinions.gaussian_clipped.mean", &[*m], 1)
                    }
                    MeanSpec::Vector(v) => {
                        check_vector(&mut out, "$.opinions.gaussian_clipped.mean", v, s)
                    }
                }
                if !stddev.is_finite() || *stddev < 0.0 {
                    out.push(ConfigProblem::new(
                        "$.opinions.gaussian_clipped.stddev",
                        "must be finite and non-negative",
                    ));
                }
            }
        }
        match &self.strategies {
            StrategyAssignment::All(spec) => {
                for m in spec.problems() {
                    out.push(ConfigProblem::new("$.strategies", m));
                }
            }
            StrategyAssignment::PerAgent(list) => {
                if list.len() != n {
                    out.push(ConfigProblem::new(
                        "$.strategies",
                        format!("expected {n} strategies, got {}", list.len()),
                    ));
                }
                for (i, spec) in list.iter().enumerate() {
                    for m in spec.problems() {
                        out.push(ConfigProblem::new(format!("$.strategies[{i}]"), m));
                    }
                }
            }
        }
        if self.max_iterations == 0 {
            out.push(ConfigProblem::new("$.max_iterations", "must be at least 1"));
        }
        out
    }

    /// Twelve agents with mixed delegation habits over a 4-coordinate
    /// proposal.
    pub fn demo() -> Self {
        let kinds = [
            StrategyKind::ProximityDelegate { fraction: 0.5 },
            StrategyKind::ExpertSeeker {
                fraction: 0.5,
                pool: 3,
            },
            StrategyKind::RandomDelegate { fraction: 0.3 },
            StrategyKind::Stick,
        ];
        Self {
            n: 12,
            k: 3,
            s: 4,
            c: "1/10".into(),
            units_per_agent: UnitsPerAgent::Uniform(4),
            initial_value: default_initial_value(),
            initial_proposal: vec![0.5; 4],
            status_quo: vec![0.2, 0.8, 0.5, 0.1],
            metric: Metric::L1Normalized,
            distance: Distance::Euclidean,
            engagement_probability: 0.8,
            power_floor: default_floor(),
            opinions: OpinionSpec::Uniform,
            strategies: StrategyAssignment::PerAgent(
                (0..12).map(|i| StrategySpec::new(kinds[i % kinds.len()])).collect(),
            ),
            seed: 42,
            max_iterations: default_max_iterations(),
        }
    }

    /// A randomized scenario drawn from the stress-test ranges:
    /// `n` in 3..=50, `s` in 1..=8, `k` in 1..n, `c` in [1/100, 1/2].
    pub fn random(seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0);
        let n = rng.random_range(3..=50usize);
        let s = rng.random_range(1..=8usize);
        let k = rng.random_range(1..n);
        let c = format!("{}/100", rng.random_range(1..=50u32));
        let units = (0..n).map(|_| rng.random_range(1..=4usize)).collect();
        let point = |rng: &mut crate::strategies::AgentRng| -> Vec<f64> {
            (0..s).map(|_| rng.random::<f64>()).collect()
        };
        let initial_proposal = point(&mut rng);
        let mut status_quo = point(&mut rng);
        while status_quo == initial_proposal {
            status_quo = point(&mut rng);
        }
        let strategies = (0..n)
            .map(|_| {
                let fraction = rng.random_range(0.0..=1.0);
                let kind = match rng.random_range(0..5u8) {
                    0 => StrategyKind::Noop,
                    1 => StrategyKind::Stick,
                    2 => StrategyKind::RandomDelegate { fraction },
                    3 => StrategyKind::ProximityDelegate { fraction },
                    _ => StrategyKind::ExpertSeeker {
                        fraction,
                        pool: rng.random_range(1..=n),
                    },
                };
                StrategySpec::new(kind)
            })
            .collect();
        let metric = if rng.random_bool(0.5) {
            Metric::L1Normalized
        } else {
            Metric::HammingFraction
        };
        let distance = if rng.random_bool(0.5) {
            Distance::Euclidean
        } else {
            Distance::L1
        };
        Self {
            n,
            k,
            s,
            c,
            units_per_agent: UnitsPerAgent::PerAgent(units),
            initial_value: default_initial_value(),
            initial_proposal,
            status_quo,
            metric,
            distance,
            engagement_probability: rng.random_range(0.5..=1.0),
            power_floor: default_floor(),
            opinions: OpinionSpec::Uniform,
            strategies: StrategyAssignment::PerAgent(strategies),
            seed,
            max_iterations: default_max_iterations(),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// A validated scenario with samplers expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub dilution: Dilution,
    pub endowments: Vec<usize>,
    pub initial_value: BigRational,
    pub initial_proposal: Proposal,
    pub status_quo: Proposal,
    pub metric: Metric,
    pub distance: Distance,
    pub opinions: Vec<Opinion>,
    pub engaged: Vec<bool>,
    pub strategies: Vec<StrategySpec>,
    pub seed: u64,
    pub power_floor: BigRational,
    pub max_iterations: usize,
}

impl Scenario {
    pub fn from_config(config: &ScenarioConfig) -> Result<Self, ConfigError> {
        let problems = config.validate();
        if !problems.is_empty() {
            return Err(ConfigError::Invalid(problems));
        }
        let invalid = |path: &str, e: String| ConfigError::Invalid(vec![ConfigProblem::new(path, e)]);
        let n = config.n;
        let s = config.s;
        let dilution: Dilution = config.c.parse().map_err(|e: crate::ledger::LedgerError| invalid("$.c", e.to_string()))?;
        let initial_value = parse_ratio(&config.initial_value).map_err(|e| invalid("$.initial_value", e.to_string()))?;
        let power_floor = parse_ratio(&config.power_floor).map_err(|e| invalid("$.power_floor", e.to_string()))?;
        let endowments = match &config.units_per_agent {
            UnitsPerAgent::Uniform(u) => vec![*u; n],
            UnitsPerAgent::PerAgent(list) => list.clone(),
        };
        let to_proposal = |path: &str, v: &[f64]| Proposal::new(v.to_vec()).map_err(|e| invalid(path, e.to_string()));

        let mut rng = stream_rng(config.seed, OPINION_STREAM);
        let optima: Vec<Vec<f64>> = match &config.opinions {
            OpinionSpec::Explicit(list) => list.clone(),
            OpinionSpec::Uniform => (0..n)
                .map(|_| (0..s).map(|_| rng.random::<f64>()).collect())
                .collect(),
            OpinionSpec::GaussianClipped { mean, stddev } => {
                let means = match mean {
                    MeanSpec::Scalar(m) => vec![*m; s],
                    MeanSpec::Vector(v) => v.clone(),
                };
                let normals: Vec<Normal<f64>> = means
                    .iter()
                    .map(|m| Normal::new(*m, *stddev).map_err(|e| invalid("$.opinions.gaussian_clipped", e.to_string())))
                    .collect::<Result<_, _>>()?;
                (0..n)
                    .map(|_| normals.iter().map(|d| d.sample(&mut rng).clamp(0.0, 1.0)).collect())
                    .collect()
            }
        };
        let opinions = optima
            .iter()
            .enumerate()
            .map(|(i, v)| {
                Ok(Opinion::new(AgentId(i), to_proposal(&format!("$.opinions[{i}]"), v)?, config.distance))
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;

        let mut rng = stream_rng(config.seed, ENGAGEMENT_STREAM);
        let engaged = (0..n)
            .map(|_| rng.random_bool(config.engagement_probability))
            .collect();
        let strategies = match &config.strategies {
            StrategyAssignment::All(spec) => vec![*spec; n],
            StrategyAssignment::PerAgent(list) => list.clone(),
        };
        Ok(Self {
            n,
            k: config.k,
            s,
            dilution,
            endowments,
            initial_value,
            initial_proposal: to_proposal("$.initial_proposal", &config.initial_proposal)?,
            status_quo: to_proposal("$.status_quo", &config.status_quo)?,
            metric: config.metric,
            distance: config.distance,
            opinions,
            engaged,
            strategies,
            seed: config.seed,
            power_floor,
            max_iterations: config.max_iterations,
        })
    }

    /// Power each agent starts with.
    pub fn initial_powers(&self) -> Vec<BigRational> {
        self.endowments
            .iter()
            .map(|&u| &self.initial_value * BigRational::from_integer(u.into()))
            .collect()
    }

    pub fn total_initial_power(&self) -> BigRational {
        self.initial_powers()
            .iter()
            .fold(BigRational::zero(), |acc, p| acc + p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_json() -> serde_json::Value {
        serde_json::to_value(ScenarioConfig::demo()).unwrap()
    }

    #[test]
    fn demo_is_valid_and_round_trips() {
        let demo = ScenarioConfig::demo();
        assert!(demo.validate().is_empty());
        let text = save_config(&demo);
        assert_eq!(parse_config(&text).unwrap(), demo);
    }

    #[test]
    fn equal_initial_and_status_quo_rejected() {
        let mut cfg = ScenarioConfig::demo();
        cfg.status_quo = cfg.initial_proposal.clone();
        let problems = cfg.validate();
        assert_eq!(problems.len(), 1);
        assert_eq!(problems[0].path, "$.initial_proposal");
    }

    #[test]
    fn dilution_of_one_rejected() {
        let mut v = demo_json();
        v["c"] = "1/1".into();
        let err = parse_config(&v.to_string()).unwrap_err();
        assert!(err.problems().iter().any(|p| p.path == "$.c"));
    }

    #[test]
    fn all_problems_reported_together() {
        let mut v = demo_json();
        v["c"] = "one tenth".into();
        v["k"] = 12.into();
        v["initial_proposal"] = serde_json::json!([0.5, 1.5, 0.5, 0.5]);
        v["power_floor"] = "x".into();
        let err = parse_config(&v.to_string()).unwrap_err();
        let paths: Vec<&str> = err.problems().iter().map(|p| p.path.as_str()).collect();
        assert_eq!(
            paths,
            vec!["$.k", "$.c", "$.power_floor", "$.initial_proposal[1]"]
        );
    }

    #[test]
    fn missing_fields_listed() {
        let mut v = demo_json();
        let obj = v.as_object_mut().unwrap();
        obj.remove("seed");
        obj.remove("opinions");
        let err = parse_config(&v.to_string()).unwrap_err();
        let paths: Vec<&str> = err.problems().iter().map(|p| p.path.as_str()).collect();
        assert_eq!(paths, vec!["$.opinions", "$.seed"]);
    }

    #[test]
    fn optional_fields_default() {
        let mut v = demo_json();
        let obj = v.as_object_mut().unwrap();
        for key in ["metric", "distance", "engagement_probability", "power_floor", "max_iterations", "initial_value"] {
            obj.remove(key);
        }
        let cfg = parse_config(&v.to_string()).unwrap();
        assert_eq!(cfg.max_iterations, 1_000_000);
        assert_eq!(cfg.power_floor, "1/1000000000");
        assert_eq!(cfg.engagement_probability, 1.0);
    }

    #[test]
    fn samplers_are_seeded() {
        let cfg = ScenarioConfig::demo();
        let a = Scenario::from_config(&cfg).unwrap();
        let b = Scenario::from_config(&cfg).unwrap();
        assert_eq!(a, b);
        let c = Scenario::from_config(&cfg.with_seed(43)).unwrap();
        assert_ne!(a.opinions, c.opinions);

        let mut g = cfg.clone();
        g.opinions = OpinionSpec::GaussianClipped {
            mean: MeanSpec::Scalar(0.5),
            stddev: 2.0,
        };
        let sc = Scenario::from_config(&g).unwrap();
        assert!(sc
            .opinions
            .iter()
            .flat_map(|o| o.optimum.values().to_vec())
            .all(|x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn opinion_spec_encoding() {
        let u: OpinionSpec = serde_json::from_str("\"uniform\"").unwrap();
        assert_eq!(u, OpinionSpec::Uniform);
        let g: OpinionSpec =
            serde_json::from_str(r#"{"gaussian_clipped":{"mean":[0.1,0.2],"stddev":0.1}}"#).unwrap();
        assert!(matches!(g, OpinionSpec::GaussianClipped { mean: MeanSpec::Vector(_), .. }));
    }

    #[test]
    fn random_configs_validate() {
        for seed in 0..200 {
            let cfg = ScenarioConfig::random(seed);
            assert!(cfg.validate().is_empty(), "seed {seed}: {:?}", cfg.validate());
        }
    }
}
