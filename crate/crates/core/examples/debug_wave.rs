// scratch: trace the first days of the wave generator
use clusterabm_core::engine::*;
use clusterabm_core::fusion::FusionMode;
use clusterabm_core::io::generate::{chained_household_layers, GeneratorParams};
use clusterabm_core::model::*;
use clusterabm_core::symbolic::rules::*;
use std::collections::BTreeMap;

fn main() {
    let n = 200;
    let seed = 7u64;
    let params = GeneratorParams::default();
    let space = StateSpace::seird();
    let graph = InteractionGraph::build(n, chained_household_layers(n, params.adjacent_links, seed)).unwrap();
    println!("mean degree {}", graph.mean_degree());
    let rules = RuleTable { rules: vec![
        HazardRule { from: 0, to: 1, form: HazardForm::ContactPressure { base: 2.0 },
            policy: Some(PolicyEffect { series: "stringency".into(), multiplier_at_one: 0.2 }), uncertainty: 0.1 },
        HazardRule { from: 1, to: 2, form: HazardForm::Reciprocal { days: 1.0/0.95 }, policy: None, uncertainty: 0.02 },
        HazardRule { from: 2, to: 3, form: HazardForm::Constant { rate: 0.9 }, policy: None, uncertainty: 0.02 },
        HazardRule { from: 2, to: 4, form: HazardForm::Constant { rate: 0.02 }, policy: None, uncertainty: 0.02 },
    ]};
    let mut initial_counts = BTreeMap::new();
    initial_counts.insert(0, n - 16);
    initial_counts.insert(1, 8);
    initial_counts.insert(2, 8);
    let scenario = Scenario {
        config: ScenarioConfig {
            domain: "dbg".into(), state_space: space, horizon: 60,
            initial_counts,
            exogenous: vec![ExogenousSeries { name: "stringency".into(), values: vec![0.0; 60], units: "".into() }],
            seed, generator_hazards: None,
        },
        graph, profiles: (0..n).map(|id| AgentProfile { id, attributes: BTreeMap::new(), susceptibility: BTreeMap::new() }).collect(),
        rules,
        probes: vec![], behavior: clusterabm_core::symbolic::OracleBehavior::default_epi(),
    };
    let mut initial = vec![0usize; n];
    for a in 0..8 { initial[a] = 2; }
    for a in 8..16 { initial[a] = 1; }
    let assignment = whole_population_assignment(n);
    let mut config = EngineConfig::new(seed);
    config.fusion_mode = FusionMode::SymbolicOnly;
    let mut sim = Simulator::new(&scenario, &assignment, initial.clone(), 0, Vec::new(), config).unwrap();
    let pathways = Pathways {
        symbolic: Some(SymbolicSource::Oracle { rules: &scenario.rules, variant: SymbolicVariant::Full }),
        neural: None, calibrator: None,
    };
    for day in 0..15 {
        // inspect BEFORE stepping: agent 16-24 lambda-tilde
        let origins: Vec<usize> = sim.states.clone();
        let out = sim.step_full(&pathways, Some(&origins)).unwrap();
        let counts = {
            let mut c = [0usize; 5];
            for &s in &sim.states { c[s] += 1; }
            c
        };
        let new_e = sim.events.iter().filter(|e| e.day == day + 1 && e.to == 1).count();
        // lambda for a few S agents near the front
        let mut front = String::new();
        for agent in 14..22 {
            if origins[agent] == 0 {
                if let Some(rows) = out.counterfactual.get(agent) {
                    for ((f, t), h) in rows {
                        if *f == 0 && *t == 1 {
                            front.push_str(&format!("a{agent}={h:.3} "));
                        }
                    }
                }
            }
        }
        println!("day {day:2}: S{} E{} I{} R{} D{} newE={new_e} front: {front}", counts[0], counts[1], counts[2], counts[3], counts[4]);
    }
}
