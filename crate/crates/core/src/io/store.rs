//! Scenario directory layout: a sectioned `scenario.ini` plus sibling CSVs
//! for edges, agents, exogenous series, truth trajectories, generator
//! hazards, and (when present) realized regime labels.

use crate::engine::{Scenario, TruthData};
use crate::error::{Error, Result};
use crate::io::csv_io;
use crate::io::scenario_file::{
    parse_behavior, parse_rules, parse_scenario_text, parse_state_space, write_scenario_text,
    ScenarioTextParts,
};
use crate::model::{InteractionGraph, ScenarioConfig};
use std::collections::BTreeMap;
use std::path::Path;

pub const SCENARIO_FILE: &str = "scenario.ini";

pub fn save_scenario(dir: &Path, scenario: &Scenario, truth: Option<&TruthData>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut files = BTreeMap::new();
    files.insert("edges".to_string(), "edges.csv".to_string());
    files.insert("agents".to_string(), "agents.csv".to_string());
    files.insert("exogenous".to_string(), "exogenous.csv".to_string());
    if truth.is_some() {
        files.insert("truth".to_string(), "truth.csv".to_string());
    }
    if scenario.config.generator_hazards.is_some() {
        files.insert("generator_hazards".to_string(), "generator_hazards.csv".to_string());
    }
    if truth.and_then(|t| t.regime_labels.as_ref()).is_some() {
        files.insert("regimes".to_string(), "regimes.csv".to_string());
    }
    let text = write_scenario_text(&ScenarioTextParts {
        domain: &scenario.config.domain,
        horizon: scenario.config.horizon,
        n: scenario.n(),
        seed: scenario.config.seed,
        space: scenario.space(),
        initial_counts: &scenario.config.initial_counts,
        rules: &scenario.rules,
        behavior: &scenario.behavior,
        probes: &scenario.probes,
        files: &files,
    });
    std::fs::write(dir.join(SCENARIO_FILE), text)?;

    let layers: Vec<(String, Vec<(usize, usize, f64)>)> = scenario
        .graph
        .layers()
        .iter()
        .map(|l| (l.name.clone(), l.edges.clone()))
        .collect();
    csv_io::write_edges(&dir.join("edges.csv"), &layers)?;
    csv_io::write_agents(&dir.join("agents.csv"), &scenario.profiles, scenario.space())?;
    csv_io::write_exogenous(&dir.join("exogenous.csv"), &scenario.config.exogenous)?;
    if let Some(truth) = truth {
        csv_io::write_trajectories(&dir.join("truth.csv"), &truth.states, scenario.space())?;
        if let Some(regimes) = &truth.regime_labels {
            let mut w = csv::Writer::from_path(dir.join("regimes.csv"))?;
            w.write_record(["day", "regime"])?;
            for (day, r) in regimes.iter().enumerate() {
                w.write_record([&day.to_string(), &r.to_string()])?;
            }
            w.flush()?;
        }
    }
    if let Some(hazards) = &scenario.config.generator_hazards {
        let mut w = csv::Writer::from_path(dir.join("generator_hazards.csv"))?;
        w.write_record(["day", "from", "to", "hazard"])?;
        let space = scenario.space();
        for (day, per_day) in hazards.iter().enumerate() {
            for ((f, t), h) in per_day {
                w.write_record([
                    &day.to_string(),
                    space.state_name(*f),
                    space.state_name(*t),
                    &h.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

pub fn load_scenario(scenario_path: &Path) -> Result<(Scenario, Option<TruthData>)> {
    let dir = scenario_path.parent().unwrap_or(Path::new("."));
    let file = scenario_path.display().to_string();
    let content = std::fs::read_to_string(scenario_path)?;
    let text = parse_scenario_text(&content, &file)?;
    let space = parse_state_space(&text, &file)?;
    let rules = parse_rules(&text, &space, &file)?;
    let (behavior, probes) = parse_behavior(&text, &file)?;
    let meta = text.require("meta", &file)?;
    let horizon: usize = meta
        .pairs
        .get("horizon")
        .ok_or_else(|| Error::Parse { file: file.clone(), line: 0, detail: "missing horizon".into() })?
        .parse()
        .map_err(|e| Error::Parse { file: file.clone(), line: 0, detail: format!("bad horizon: {e}") })?;
    let n: usize = meta
        .pairs
        .get("n")
        .ok_or_else(|| Error::Parse { file: file.clone(), line: 0, detail: "missing n".into() })?
        .parse()
        .map_err(|e| Error::Parse { file: file.clone(), line: 0, detail: format!("bad n: {e}") })?;
    let domain = meta.pairs.get("domain").cloned().unwrap_or_default();
    let seed: u64 = text
        .require("seed", &file)?
        .pairs
        .get("seed")
        .ok_or_else(|| Error::Parse { file: file.clone(), line: 0, detail: "missing seed".into() })?
        .parse()
        .map_err(|e| Error::Parse { file: file.clone(), line: 0, detail: format!("bad seed: {e}") })?;

    let mut initial_counts = BTreeMap::new();
    for row in &text.require("init", &file)?.rows {
        if row.len() != 2 {
            return Err(Error::Parse {
                file: file.clone(),
                line: 0,
                detail: format!("[init] rows are `state count`; got {row:?}"),
            });
        }
        let state = space.state_index(&row[0]).ok_or_else(|| Error::Parse {
            file: file.clone(),
            line: 0,
            detail: format!("unknown state {}", row[0]),
        })?;
        initial_counts.insert(
            state,
            row[1].parse::<usize>().map_err(|e| Error::Parse {
                file: file.clone(),
                line: 0,
                detail: format!("bad count: {e}"),
            })?,
        );
    }

    let files = text.section("files").map(|s| s.pairs.clone()).unwrap_or_default();
    let resolve = |key: &str| files.get(key).map(|f| dir.join(f));

    let graph = match resolve("edges") {
        Some(path) => InteractionGraph::build(n, csv_io::read_edges(&path)?)?,
        None => InteractionGraph::build(n, vec![])?,
    };
    let profiles = match resolve("agents") {
        Some(path) => csv_io::read_agents(&path, &space)?,
        None => (0..n)
            .map(|id| crate::model::AgentProfile {
                id,
                attributes: BTreeMap::new(),
                susceptibility: BTreeMap::new(),
            })
            .collect(),
    };
    let exogenous = match resolve("exogenous") {
        Some(path) => csv_io::read_exogenous(&path, horizon)?,
        None => vec![],
    };
    let generator_hazards = match resolve("generator_hazards") {
        Some(path) => {
            let mut reader = csv::Reader::from_path(&path)?;
            let mut hazards: Vec<BTreeMap<(usize, usize), f64>> = vec![BTreeMap::new(); horizon];
            for record in reader.records() {
                let record = record?;
                let day: usize = record.get(0).unwrap_or("").parse().map_err(|e| Error::Ingest(format!("bad day: {e}")))?;
                let from = space.state_index(record.get(1).unwrap_or("")).ok_or_else(|| Error::Ingest("bad from state".into()))?;
                let to = space.state_index(record.get(2).unwrap_or("")).ok_or_else(|| Error::Ingest("bad to state".into()))?;
                let h: f64 = record.get(3).unwrap_or("").parse().map_err(|e| Error::Ingest(format!("bad hazard: {e}")))?;
                hazards[day].insert((from, to), h);
            }
            Some(hazards)
        }
        None => None,
    };
    let truth = match resolve("truth") {
        Some(path) => {
            let states = csv_io::read_trajectories(&path, &space)?;
            let regime_labels = match resolve("regimes") {
                Some(rpath) => {
                    let mut reader = csv::Reader::from_path(&rpath)?;
                    let mut labels = Vec::new();
                    for record in reader.records() {
                        let record = record?;
                        labels.push(
                            record.get(1).unwrap_or("").parse::<usize>().map_err(|e| {
                                Error::Ingest(format!("bad regime label: {e}"))
                            })?,
                        );
                    }
                    Some(labels)
                }
                None => None,
            };
            Some(TruthData { states, regime_labels })
        }
        None => None,
    };

    let scenario = Scenario {
        config: ScenarioConfig {
            domain,
            state_space: space,
            horizon,
            initial_counts,
            exogenous,
            seed,
            generator_hazards,
        },
        graph,
        profiles,
        rules,
        probes,
        behavior,
    };
    scenario.validate()?;
    Ok((scenario, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate::{seird_shock, GeneratorParams};

    #[test]
    fn scenario_directory_round_trip() {
        let dir = std::env::temp_dir().join(format!("clusterabm-store-{}", std::process::id()));
        std::fs::remove_dir_all(&dir).ok();
        let (scenario, truth) = seird_shock(40, 40, 3, &GeneratorParams::default()).unwrap();
        save_scenario(&dir, &scenario, Some(&truth)).unwrap();
        let (loaded, loaded_truth) = load_scenario(&dir.join(SCENARIO_FILE)).unwrap();
        assert_eq!(loaded.n(), 40);
        assert_eq!(loaded.config.horizon, 40);
        assert_eq!(loaded.config.seed, 3);
        assert_eq!(loaded.space().states(), scenario.space().states());
        assert_eq!(loaded_truth.as_ref().unwrap().states, truth.states);
        // generator hazards survive the round trip
        let orig = scenario.config.generator_hazards.as_ref().unwrap();
        let back = loaded.config.generator_hazards.as_ref().unwrap();
        for (day, per_day) in orig.iter().enumerate() {
            for (key, h) in per_day {
                assert!((back[day][key] - h).abs() < 1e-12);
            }
        }
        // graph identical
        assert_eq!(loaded.graph.edge_count(), scenario.graph.edge_count());
        for i in 0..40 {
            assert_eq!(loaded.graph.neighbors(i), scenario.graph.neighbors(i));
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
