//! Synthetic scenario generators. Each template ships its own rule table;
//! truth trajectories come from the oracle rules plus the engine sampler, so
//! ground truth is internally consistent with the symbolic pathway.

use crate::engine::{run_simulation, whole_population_assignment, EngineConfig, Pathways, Scenario, SymbolicSource, SymbolicVariant, TruthData};
use crate::error::{Error, Result};
use crate::fusion::FusionMode;
use crate::model::{
    minority_counts, synthetic_layers, AgentProfile, ExogenousSeries, InteractionGraph,
    ScenarioConfig, StateSpace, Transition,
};
use crate::rng::Stream;
use crate::symbolic::rules::{HazardForm, HazardRule, PolicyEffect, RuleTable};
use crate::symbolic::{BehaviorDim, ContextProbe, OracleBehavior};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    SeirdShock,
    MarketRegimes,
    AttentionLifecycle,
}

impl Template {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "seird_shock" => Some(Template::SeirdShock),
            "market_regimes" => Some(Template::MarketRegimes),
            "attention_lifecycle" => Some(Template::AttentionLifecycle),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Template::SeirdShock => "seird_shock",
            Template::MarketRegimes => "market_regimes",
            Template::AttentionLifecycle => "attention_lifecycle",
        }
    }
}

/// Knobs shared by the generators; template-specific fields are ignored by
/// the other templates.
#[derive(Debug, Clone)]
pub struct GeneratorParams {
    pub shock_day: usize,
    pub shock_multiplier: f64,
    pub fatigue_onset: usize,
    pub mean_degree: f64,
    /// Contact-pressure base rate for the epidemic template.
    pub beta: f64,
    /// Links between adjacent households on the chain (wave-speed knob).
    pub adjacent_links: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            shock_day: 33,
            shock_multiplier: 0.2,
            fatigue_onset: 55,
            mean_degree: 4.0,
            beta: 2.8,
            adjacent_links: 2,
        }
    }
}

/// Behavioral archetype attributes: three regimes, one dominant axis each.
fn behavioral_profiles(n: usize, seed: u64) -> Vec<AgentProfile> {
    let mut rng = Stream::keyed(seed, "profiles", &[n as u64]);
    (0..n)
        .map(|id| {
            let (ra, ca, co) = match id % 3 {
                0 => (0.9, 0.1, 0.05),
                1 => (0.05, 0.9, 0.1),
                _ => (0.1, 0.05, 0.9),
            };
            let mut attributes = BTreeMap::new();
            attributes.insert("risk_aversion".to_string(), ra + 0.05 * rng.normal());
            attributes.insert("caution".to_string(), ca + 0.05 * rng.normal());
            attributes.insert("compliance".to_string(), co + 0.05 * rng.normal());
            attributes.insert("age".to_string(), rng.uniform_range(0.0, 1.0));
            AgentProfile {
                id,
                attributes,
                susceptibility: BTreeMap::new(),
            }
        })
        .collect()
}

fn epi_probes() -> Vec<ContextProbe> {
    vec![
        ContextProbe { name: "home_restrictions".into(), intensity: vec![0.4, 0.9, 0.3] },
        ContextProbe { name: "workplace_mandate".into(), intensity: vec![0.7, 0.2, 1.0] },
        ContextProbe { name: "community_outbreak".into(), intensity: vec![1.0, 0.6, 0.5] },
    ]
}

fn default_behavior() -> OracleBehavior {
    OracleBehavior::new(vec![
        BehaviorDim { name: "contact_reduction".into(), attribute: "risk_aversion".into(), weight: 1.0 },
        BehaviorDim { name: "isolation_intensity".into(), attribute: "caution".into(), weight: 1.0 },
        BehaviorDim { name: "compliance".into(), attribute: "compliance".into(), weight: 1.0 },
    ])
}

/// Runs the oracle generator over the whole population (one cluster) and
/// returns truth states plus the recorded per-day population hazards.
/// `initial` overrides the seeded uniform placement (used by the wave
/// template, which seeds one end of the household chain).
fn generate_truth(
    scenario: &Scenario,
    seed: u64,
    initial: Option<Vec<usize>>,
) -> Result<(TruthData, Vec<BTreeMap<(usize, usize), f64>>)> {
    let n = scenario.n();
    let days = scenario.config.horizon;
    let assignment = whole_population_assignment(n);
    let initial = match initial {
        Some(states) => states,
        None => crate::model::initialize_states(&scenario.config, n, seed)?,
    };
    let mut config = EngineConfig::new(seed);
    config.salt = 0;
    config.fusion_mode = FusionMode::SymbolicOnly;
    let pathways = Pathways {
        symbolic: Some(SymbolicSource::Oracle {
            rules: &scenario.rules,
            variant: SymbolicVariant::Full,
        }),
        neural: None,
        calibrator: None,
    };
    let run = run_simulation(scenario, &assignment, initial, 0, days - 1, &pathways, config)?;
    // Hazards per day from the trace rows (single cluster, symbolic-only).
    let mut hazards: Vec<BTreeMap<(usize, usize), f64>> = vec![BTreeMap::new(); days];
    for row in &run.traces {
        hazards[row.day].insert((row.from, row.to), row.lambda_sym);
    }
    // The final day has no step; evaluate the rules on the final composition.
    let contexts = crate::symbolic::assemble_all_contexts(
        &assignment.labels,
        1,
        &scenario.graph,
        run.trajectories.last().unwrap(),
        scenario.space().n_states(),
        &scenario.config.exogenous,
        days - 1,
    )?;
    let est = scenario.rules.oracle_hazards(&contexts[0], scenario.space())?;
    for (key, entry) in &est.entries {
        hazards[days - 1].insert(*key, entry.hazard);
    }
    Ok((
        TruthData {
            states: run.trajectories,
            regime_labels: None,
        },
        hazards,
    ))
}

/// Spatial household ladder: household cliques of size 2-5 arranged in rungs
/// of two, with community links inside each rung and between every household
/// pair of adjacent rungs. An epidemic seeded at one end travels along the
/// ladder as a wave (the redundant forward links keep hand-off reliable), so
/// events keep arriving across the whole horizon instead of one early burst.
pub fn chained_household_layers(
    n: usize,
    adjacent_links: usize,
    seed: u64,
) -> Vec<(String, Vec<(usize, usize, f64)>)> {
    let mut rng = Stream::keyed(seed, "household-chain", &[n as u64]);
    let mut households: Vec<Vec<usize>> = Vec::new();
    let mut pos = 0;
    while pos < n {
        let size = (2 + rng.below(2)).min(n - pos);
        households.push((pos..pos + size).collect());
        pos += size;
    }
    let mut household_edges = Vec::new();
    for members in &households {
        for a in 0..members.len() {
            for b in (a + 1)..members.len() {
                household_edges.push((members[a], members[b], 1.0));
            }
        }
    }
    let mut community_edges = Vec::new();
    let mut link = |a_members: &Vec<usize>, b_members: &Vec<usize>, count: usize, rng: &mut Stream, edges: &mut Vec<(usize, usize, f64)>| {
        for _ in 0..count {
            let a = a_members[rng.below(a_members.len())];
            let b = b_members[rng.below(b_members.len())];
            if a != b {
                edges.push((a.min(b), a.max(b), 1.0));
            }
        }
    };
    let rungs: Vec<&[Vec<usize>]> = households.chunks(2).collect();
    for (r, rung) in rungs.iter().enumerate() {
        if rung.len() == 2 {
            link(&rung[0], &rung[1], 1, &mut rng, &mut community_edges);
        }
        if r + 1 < rungs.len() {
            for a in *rung {
                for b in rungs[r + 1] {
                    link(a, b, adjacent_links.max(1), &mut rng, &mut community_edges);
                }
            }
        }
    }
    vec![
        ("household".to_string(), household_edges),
        ("community".to_string(), community_edges),
    ]
}

/// SEIRD epidemic with a mid-course policy shock: fast, sharply timed
/// progression travelling along a chained household network, with a
/// stringency step that suppresses exposure by the shock multiplier.
pub fn seird_shock(n: usize, days: usize, seed: u64, params: &GeneratorParams) -> Result<(Scenario, TruthData)> {
    if days < 2 {
        return Err(Error::InvalidScenario("need at least 2 days".into()));
    }
    // Pre-symptomatic transmission: both E and I exert contact pressure,
    // matching the exposure-window semantics of the ground-truth labels.
    let space = StateSpace::new(
        ["S", "E", "I", "R", "D"].map(String::from).to_vec(),
        vec![
            Transition { from: 0, to: 1, contact_driven: true },
            Transition { from: 1, to: 2, contact_driven: false },
            Transition { from: 2, to: 3, contact_driven: false },
            Transition { from: 2, to: 4, contact_driven: false },
        ],
        std::collections::BTreeSet::from([3, 4]),
        std::collections::BTreeSet::from([1, 2]),
    )?;
    let graph = InteractionGraph::build(n, chained_household_layers(n, params.adjacent_links, seed))?;
    let stringency: Vec<f64> = (0..days)
        .map(|d| if d >= params.shock_day { 1.0 } else { 0.0 })
        .collect();
    let mobility: Vec<f64> = stringency.iter().map(|v| 1.0 - 0.7 * v).collect();
    let rules = RuleTable {
        rules: vec![
            HazardRule {
                from: 0,
                to: 1,
                form: HazardForm::ContactPressure { base: params.beta },
                policy: Some(PolicyEffect {
                    series: "stringency".into(),
                    multiplier_at_one: params.shock_multiplier,
                }),
                uncertainty: 0.02,
            },
            HazardRule {
                from: 1,
                to: 2,
                form: HazardForm::Reciprocal { days: 1.0 / 0.95 },
                policy: None,
                uncertainty: 0.005,
            },
            HazardRule {
                from: 2,
                to: 3,
                form: HazardForm::Constant { rate: 0.9 },
                policy: None,
                uncertainty: 0.005,
            },
            HazardRule {
                from: 2,
                to: 4,
                form: HazardForm::Constant { rate: 0.02 },
                policy: None,
                uncertainty: 0.005,
            },
        ],
    };
    let mut initial = BTreeMap::new();
    let seeds_e = (n / 25).max(2);
    let seeds_i = (n / 25).max(2);
    initial.insert(0, n - seeds_e - seeds_i);
    initial.insert(1, seeds_e);
    initial.insert(2, seeds_i);
    let mut scenario = Scenario {
        config: ScenarioConfig {
            domain: "seird_shock".into(),
            state_space: space,
            horizon: days,
            initial_counts: initial,
            exogenous: vec![
                ExogenousSeries { name: "stringency".into(), values: stringency, units: "fraction".into() },
                ExogenousSeries { name: "mobility".into(), values: mobility, units: "fraction".into() },
            ],
            seed,
            generator_hazards: None,
        },
        graph,
        profiles: behavioral_profiles(n, seed),
        rules,
        probes: epi_probes(),
        behavior: default_behavior(),
    };
    // Seed the wave at the start of the household chain.
    let mut initial_states = vec![0usize; n];
    for agent in 0..seeds_i {
        initial_states[agent] = 2;
    }
    for agent in seeds_i..seeds_i + seeds_e {
        initial_states[agent] = 1;
    }
    let (truth, hazards) = generate_truth(&scenario, seed, Some(initial_states))?;
    scenario.config.generator_hazards = Some(hazards);
    scenario.validate()?;
    Ok((scenario, truth))
}

/// Three-regime hidden-Markov index series with sentiment-contagion rules
/// driven by daily returns.
pub fn market_regimes(n: usize, days: usize, seed: u64) -> Result<(Scenario, TruthData)> {
    let states = ["Bearish", "Bullish", "Neutral"].map(String::from).to_vec();
    let transitions = vec![
        Transition { from: 0, to: 2, contact_driven: false }, // Bearish -> Neutral
        Transition { from: 1, to: 2, contact_driven: false }, // Bullish -> Neutral
        Transition { from: 2, to: 0, contact_driven: false }, // Neutral -> Bearish
        Transition { from: 2, to: 1, contact_driven: false }, // Neutral -> Bullish
    ];
    let space = StateSpace::new(states, transitions, BTreeSet::new(), BTreeSet::new())?;

    // Hidden-Markov regime path and the index it generates.
    let mut rng = Stream::keyed(seed, "market-hmm", &[days as u64]);
    let mut regime = 2usize; // start Neutral
    let mut level = 100.0f64;
    let mut regimes = Vec::with_capacity(days);
    let mut returns = Vec::with_capacity(days);
    let mut levels = Vec::with_capacity(days);
    for _ in 0..days {
        if rng.uniform() > 0.9 {
            regime = match regime {
                2 => {
                    if rng.uniform() < 0.5 {
                        0
                    } else {
                        1
                    }
                }
                _ => 2,
            };
        }
        let (mu, sigma) = match regime {
            0 => (-0.005, 0.012),
            1 => (0.004, 0.008),
            _ => (0.0, 0.006),
        };
        let ret = mu + sigma * rng.normal();
        level *= 1.0 + ret;
        regimes.push(regime);
        returns.push(ret);
        levels.push(level);
    }

    let rules = RuleTable {
        rules: vec![
            HazardRule {
                from: 0,
                to: 2,
                form: HazardForm::Constant { rate: 0.3 },
                policy: None,
                uncertainty: 0.05,
            },
            HazardRule {
                from: 1,
                to: 2,
                form: HazardForm::Constant { rate: 0.3 },
                policy: None,
                uncertainty: 0.05,
            },
            HazardRule {
                from: 2,
                to: 0,
                form: HazardForm::SignalScaled {
                    base: 0.05,
                    series: "index_return".into(),
                    coef: -60.0,
                    offset: 1.0,
                },
                policy: None,
                uncertainty: 0.15,
            },
            HazardRule {
                from: 2,
                to: 1,
                form: HazardForm::SignalScaled {
                    base: 0.05,
                    series: "index_return".into(),
                    coef: 60.0,
                    offset: 1.0,
                },
                policy: None,
                uncertainty: 0.15,
            },
        ],
    };
    let mut initial = minority_counts(n, 2, 1, 0.01);
    // a few bears too
    let bears = ((0.01 * n as f64).ceil() as usize).min(*initial.get(&2).unwrap_or(&0));
    if bears > 0 {
        *initial.get_mut(&2).unwrap() -= bears;
        initial.insert(0, bears);
    }
    let graph = InteractionGraph::build(n, synthetic_layers(n, 4.68, seed))?;
    let mut scenario = Scenario {
        config: ScenarioConfig {
            domain: "market_regimes".into(),
            state_space: space,
            horizon: days,
            initial_counts: initial,
            exogenous: vec![
                ExogenousSeries { name: "index_return".into(), values: returns, units: "fraction".into() },
                ExogenousSeries { name: "index_level".into(), values: levels, units: "points".into() },
            ],
            seed,
            generator_hazards: None,
        },
        graph,
        profiles: behavioral_profiles(n, seed),
        rules,
        probes: epi_probes(),
        behavior: default_behavior(),
    };
    let (mut truth, hazards) = generate_truth(&scenario, seed, None)?;
    truth.regime_labels = Some(regimes);
    scenario.config.generator_hazards = Some(hazards);
    scenario.validate()?;
    Ok((scenario, truth))
}

/// S-shaped attention index with event spikes; fatigue switches on at the
/// configured onset day.
pub fn attention_lifecycle(n: usize, days: usize, seed: u64, params: &GeneratorParams) -> Result<(Scenario, TruthData)> {
    let states = ["Unaware", "Interested", "Fatigued"].map(String::from).to_vec();
    let transitions = vec![
        Transition { from: 0, to: 1, contact_driven: true },  // U -> I
        Transition { from: 1, to: 2, contact_driven: false }, // I -> F
    ];
    let space = StateSpace::new(
        states,
        transitions,
        BTreeSet::from([2]),
        BTreeSet::from([1]),
    )?;
    let mut rng = Stream::keyed(seed, "attention-index", &[days as u64]);
    let mid = days as f64 * 0.4;
    let mut attention: Vec<f64> = (0..days)
        .map(|d| 1.0 / (1.0 + (-(d as f64 - mid) * 0.15).exp()))
        .collect();
    // two seeded event spikes with 3-day decay
    for _ in 0..2 {
        let at = rng.below(days.saturating_sub(10)) + 5;
        for offset in 0..4 {
            if at + offset < days {
                attention[at + offset] += 0.3 * 0.5f64.powi(offset as i32);
            }
        }
    }
    let (attention, _) = crate::io::ingest::normalize_minmax(&attention);
    let fatigue: Vec<f64> = (0..days)
        .map(|d| {
            if d < params.fatigue_onset {
                0.0
            } else {
                (((d - params.fatigue_onset) as f64) / 10.0).min(1.0)
            }
        })
        .collect();
    let rules = RuleTable {
        rules: vec![
            HazardRule {
                from: 0,
                to: 1,
                form: HazardForm::ContactPressure { base: 0.9 },
                policy: Some(PolicyEffect {
                    series: "attention_index".into(),
                    multiplier_at_one: 3.0,
                }),
                uncertainty: 0.1,
            },
            HazardRule {
                from: 1,
                to: 2,
                form: HazardForm::SignalScaled {
                    base: 0.25,
                    series: "fatigue".into(),
                    coef: 1.0,
                    offset: 0.0,
                },
                policy: None,
                uncertainty: 0.05,
            },
        ],
    };
    let graph = InteractionGraph::build(n, synthetic_layers(n, 11.3, seed))?;
    let mut scenario = Scenario {
        config: ScenarioConfig {
            domain: "attention_lifecycle".into(),
            state_space: space,
            horizon: days,
            initial_counts: minority_counts(n, 0, 1, 0.01),
            exogenous: vec![
                ExogenousSeries { name: "attention_index".into(), values: attention, units: "normalized".into() },
                ExogenousSeries { name: "fatigue".into(), values: fatigue, units: "fraction".into() },
            ],
            seed,
            generator_hazards: None,
        },
        graph,
        profiles: behavioral_profiles(n, seed),
        rules,
        probes: epi_probes(),
        behavior: default_behavior(),
    };
    let (truth, hazards) = generate_truth(&scenario, seed, None)?;
    scenario.config.generator_hazards = Some(hazards);
    scenario.validate()?;
    Ok((scenario, truth))
}

pub fn generate(template: Template, n: usize, days: usize, seed: u64, params: &GeneratorParams) -> Result<(Scenario, TruthData)> {
    match template {
        Template::SeirdShock => seird_shock(n, days, seed, params),
        Template::MarketRegimes => market_regimes(n, days, seed),
        Template::AttentionLifecycle => attention_lifecycle(n, days, seed, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seird_shock_generator_hazard_drops_fivefold_at_the_shock() {
        let params = GeneratorParams::default();
        let (scenario, _) = seird_shock(100, 60, 3, &params).unwrap();
        let hazards = scenario.config.generator_hazards.as_ref().unwrap();
        // The policy multiplier drops S->E by exactly the shock multiplier at
        // equal infectious fractions; verify the recorded multiplier through
        // the rule directly on matched compositions.
        let rule = scenario.rules.rule(0, 1).unwrap();
        let ctx_pre = crate::symbolic::ClusterContext {
            cluster_id: 0,
            t: 0,
            size: 100,
            phi: vec![0.8, 0.1, 0.1, 0.0, 0.0],
            psi: vec![
                crate::symbolic::ExoSnapshot { name: "stringency".into(), value: 0.0, trailing_mean: 0.0 },
                crate::symbolic::ExoSnapshot { name: "mobility".into(), value: 1.0, trailing_mean: 1.0 },
            ],
            psi_nbr: crate::symbolic::NeighborSummary { mean_phi: vec![], inter_cluster_edge_fraction: 0.0 },
        };
        let mut ctx_post = ctx_pre.clone();
        ctx_post.psi[0].value = 1.0;
        let (pre, _) = scenario.rules.evaluate_rule(rule, &ctx_pre, scenario.space()).unwrap();
        let (post, _) = scenario.rules.evaluate_rule(rule, &ctx_post, scenario.space()).unwrap();
        assert!((post / pre - 0.2).abs() < 1e-12, "5x drop");
        assert_eq!(hazards.len(), 60);
    }

    #[test]
    fn same_seed_identical_truth() {
        let params = GeneratorParams::default();
        let (_, t1) = seird_shock(60, 40, 11, &params).unwrap();
        let (_, t2) = seird_shock(60, 40, 11, &params).unwrap();
        assert_eq!(t1.states, t2.states);
        let (_, t3) = seird_shock(60, 40, 12, &params).unwrap();
        assert_ne!(t1.states, t3.states);
    }

    #[test]
    fn closed_loop_identity_oracle_equals_generator() {
        // Evaluating the rule table on the whole-population composition
        // reproduces the recorded generator hazards exactly.
        let params = GeneratorParams::default();
        let (scenario, truth) = seird_shock(80, 50, 7, &params).unwrap();
        let hazards = scenario.config.generator_hazards.as_ref().unwrap();
        let assignment = whole_population_assignment(80);
        for day in [0usize, 10, 25, 45, 49] {
            let contexts = crate::symbolic::assemble_all_contexts(
                &assignment.labels,
                1,
                &scenario.graph,
                &truth.states[day],
                scenario.space().n_states(),
                &scenario.config.exogenous,
                day,
            )
            .unwrap();
            let est = scenario.rules.oracle_hazards(&contexts[0], scenario.space()).unwrap();
            for (key, entry) in &est.entries {
                let recorded = hazards[day][key];
                assert!(
                    (entry.hazard - recorded).abs() < 1e-12,
                    "day {day} {key:?}: {} vs {}",
                    entry.hazard,
                    recorded
                );
            }
        }
    }

    #[test]
    fn market_generator_emits_regime_labels_and_valid_truth() {
        let (scenario, truth) = market_regimes(50, 70, 5).unwrap();
        assert_eq!(truth.regime_labels.as_ref().unwrap().len(), 70);
        assert_eq!(truth.states.len(), 70);
        scenario.validate().unwrap();
    }

    #[test]
    fn attention_interested_fraction_non_decreasing_until_fatigue_onset() {
        let params = GeneratorParams {
            fatigue_onset: 60,
            ..Default::default()
        };
        let (_, truth) = attention_lifecycle(120, 80, 9, &params).unwrap();
        let interested_fraction = |day: usize| -> f64 {
            truth.states[day].iter().filter(|&&s| s == 1).count() as f64 / 120.0
        };
        for day in 1..60 {
            assert!(
                interested_fraction(day) + 1e-12 >= interested_fraction(day - 1),
                "interested fraction dipped at day {day}"
            );
        }
    }

    #[test]
    fn unknown_template_name() {
        assert!(Template::parse("bogus").is_none());
        assert_eq!(Template::parse("seird_shock"), Some(Template::SeirdShock));
    }
}
