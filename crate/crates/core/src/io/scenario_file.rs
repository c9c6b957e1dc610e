//! Sectioned scenario text format.
//!
//! Sections in brackets hold either `key = value` pairs or whitespace-
//! separated table rows; `#` starts a comment. The canonical sections are
//! [meta], [states], [transitions], [init], [rules], [behavior],
//! [probe <name>] (one per probe), [files], [exogenous], [seed].

use crate::error::{Error, Result};
use crate::model::{StateSpace, Transition};
use crate::symbolic::{BehaviorDim, ContextProbe, OracleBehavior};
use crate::symbolic::rules::{HazardForm, HazardRule, PolicyEffect, RuleTable};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

#[derive(Debug, Clone, Default)]
pub struct Section {
    pub name: String,
    pub pairs: BTreeMap<String, String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioText {
    pub sections: Vec<Section>,
}

impl ScenarioText {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn require(&self, name: &str, file: &str) -> Result<&Section> {
        self.section(name).ok_or_else(|| Error::Parse {
            file: file.to_string(),
            line: 0,
            detail: format!("missing [{name}] section"),
        })
    }

    pub fn probes(&self) -> impl Iterator<Item = &Section> {
        self.sections.iter().filter(|s| s.name.starts_with("probe "))
    }
}

pub fn parse_scenario_text(content: &str, file: &str) -> Result<ScenarioText> {
    let mut out = ScenarioText::default();
    let mut current: Option<Section> = None;
    for (idx, raw) in content.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            if let Some(s) = current.take() {
                out.sections.push(s);
            }
            current = Some(Section {
                name: name.trim().to_string(),
                ..Default::default()
            });
            continue;
        }
        let section = current.as_mut().ok_or_else(|| Error::Parse {
            file: file.to_string(),
            line: idx + 1,
            detail: "content before the first section".into(),
        })?;
        // `key = value` only when the key is a single token; table rows may
        // carry embedded key=value parameters.
        match line.split_once('=') {
            Some((key, value)) if !key.trim().contains(char::is_whitespace) => {
                section
                    .pairs
                    .insert(key.trim().to_string(), value.trim().to_string());
            }
            _ => {
                section
                    .rows
                    .push(line.split_whitespace().map(str::to_string).collect());
            }
        }
    }
    if let Some(s) = current.take() {
        out.sections.push(s);
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(value: &str, what: &str, file: &str) -> Result<T> {
    value.parse::<T>().map_err(|_| Error::Parse {
        file: file.to_string(),
        line: 0,
        detail: format!("cannot parse {what} from {value:?}"),
    })
}

/// Parses the [states] and [transitions] sections into a state machine.
pub fn parse_state_space(text: &ScenarioText, file: &str) -> Result<StateSpace> {
    let states_sec = text.require("states", file)?;
    let mut names = Vec::new();
    let mut terminal = BTreeSet::new();
    let mut infectious = BTreeSet::new();
    for row in &states_sec.rows {
        if row.len() != 3 {
            return Err(Error::Parse {
                file: file.into(),
                line: 0,
                detail: format!("[states] rows are `name terminal infectious`; got {row:?}"),
            });
        }
        let idx = names.len();
        names.push(row[0].clone());
        if row[1] == "1" {
            terminal.insert(idx);
        }
        if row[2] == "1" {
            infectious.insert(idx);
        }
    }
    let find = |name: &str| -> Result<usize> {
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Parse {
                file: file.into(),
                line: 0,
                detail: format!("unknown state {name}"),
            })
    };
    let mut transitions = Vec::new();
    for row in &text.require("transitions", file)?.rows {
        if row.len() != 3 {
            return Err(Error::Parse {
                file: file.into(),
                line: 0,
                detail: format!("[transitions] rows are `from to contact_driven`; got {row:?}"),
            });
        }
        transitions.push(Transition {
            from: find(&row[0])?,
            to: find(&row[1])?,
            contact_driven: row[2] == "1",
        });
    }
    StateSpace::new(names, transitions, terminal, infectious)
}

/// Parses the [rules] section rows:
/// `FROM TO form key=value... [policy=SERIES policy_mult=X] u=Y`.
pub fn parse_rules(text: &ScenarioText, space: &StateSpace, file: &str) -> Result<RuleTable> {
    let mut rules = Vec::new();
    for row in &text.require("rules", file)?.rows {
        if row.len() < 3 {
            return Err(Error::Parse {
                file: file.into(),
                line: 0,
                detail: format!("[rules] row too short: {row:?}"),
            });
        }
        let from = space.state_index(&row[0]).ok_or_else(|| Error::Parse {
            file: file.into(),
            line: 0,
            detail: format!("unknown state {}", row[0]),
        })?;
        let to = space.state_index(&row[1]).ok_or_else(|| Error::Parse {
            file: file.into(),
            line: 0,
            detail: format!("unknown state {}", row[1]),
        })?;
        let mut kv = BTreeMap::new();
        for part in &row[3..] {
            if let Some((k, v)) = part.split_once('=') {
                kv.insert(k.to_string(), v.to_string());
            }
        }
        let get = |key: &str| -> Result<f64> {
            kv.get(key)
                .ok_or_else(|| Error::Parse {
                    file: file.into(),
                    line: 0,
                    detail: format!("rule {}->{} missing {key}=", row[0], row[1]),
                })
                .and_then(|v| parse_num::<f64>(v, key, file))
        };
        let form = match row[2].as_str() {
            "contact" => HazardForm::ContactPressure { base: get("base")? },
            "reciprocal" => HazardForm::Reciprocal { days: get("days")? },
            "constant" => HazardForm::Constant { rate: get("rate")? },
            "signal" => HazardForm::SignalScaled {
                base: get("base")?,
                series: kv
                    .get("series")
                    .ok_or_else(|| Error::Parse {
                        file: file.into(),
                        line: 0,
                        detail: "signal rule missing series=".into(),
                    })?
                    .clone(),
                coef: get("coef")?,
                offset: kv.get("offset").map(|v| parse_num(v, "offset", file)).transpose()?.unwrap_or(1.0),
            },
            other => {
                return Err(Error::Parse {
                    file: file.into(),
                    line: 0,
                    detail: format!("unknown rule form {other}"),
                })
            }
        };
        let policy = match kv.get("policy") {
            Some(series) => Some(PolicyEffect {
                series: series.clone(),
                multiplier_at_one: get("policy_mult")?,
            }),
            None => None,
        };
        let rule = match kv.get("u") {
            Some(u) => HazardRule {
                from,
                to,
                form,
                policy,
                uncertainty: parse_num(u, "u", file)?,
            },
            None => HazardRule::with_default_uncertainty(from, to, form, policy),
        };
        rules.push(rule);
    }
    Ok(RuleTable { rules })
}

/// Parses [behavior] dims and the [probe *] sections.
pub fn parse_behavior(text: &ScenarioText, file: &str) -> Result<(OracleBehavior, Vec<ContextProbe>)> {
    let mut dims = Vec::new();
    if let Some(sec) = text.section("behavior") {
        for row in &sec.rows {
            if row.len() != 3 {
                return Err(Error::Parse {
                    file: file.into(),
                    line: 0,
                    detail: format!("[behavior] rows are `dim attribute weight`; got {row:?}"),
                });
            }
            dims.push(BehaviorDim {
                name: row[0].clone(),
                attribute: row[1].clone(),
                weight: parse_num(&row[2], "weight", file)?,
            });
        }
    }
    let behavior = OracleBehavior::new(dims);
    let mut probes = Vec::new();
    for sec in text.probes() {
        let name = sec.name.trim_start_matches("probe ").trim().to_string();
        let intensity: Result<Vec<f64>> = behavior
            .dims
            .iter()
            .map(|d| {
                sec.pairs
                    .get(&d.name)
                    .map(|v| parse_num::<f64>(v, &d.name, file))
                    .unwrap_or(Ok(0.0))
            })
            .collect();
        probes.push(ContextProbe {
            name,
            intensity: intensity?,
        });
    }
    Ok((behavior, probes))
}

/// Serializes a state space + rules + behavior back into the text format.
pub struct ScenarioTextParts<'a> {
    pub domain: &'a str,
    pub horizon: usize,
    pub n: usize,
    pub seed: u64,
    pub space: &'a StateSpace,
    pub initial_counts: &'a BTreeMap<usize, usize>,
    pub rules: &'a RuleTable,
    pub behavior: &'a OracleBehavior,
    pub probes: &'a [ContextProbe],
    pub files: &'a BTreeMap<String, String>,
}

pub fn write_scenario_text(parts: &ScenarioTextParts) -> String {
    let mut out = String::new();
    let space = parts.space;
    writeln!(out, "[meta]").unwrap();
    writeln!(out, "domain = {}", parts.domain).unwrap();
    writeln!(out, "horizon = {}", parts.horizon).unwrap();
    writeln!(out, "n = {}", parts.n).unwrap();
    writeln!(out, "\n[states]").unwrap();
    writeln!(out, "# name terminal infectious").unwrap();
    for (idx, name) in space.states().iter().enumerate() {
        writeln!(
            out,
            "{name} {} {}",
            u8::from(space.is_terminal(idx)),
            u8::from(space.is_infectious(idx))
        )
        .unwrap();
    }
    writeln!(out, "\n[transitions]").unwrap();
    writeln!(out, "# from to contact_driven").unwrap();
    for t in space.transitions() {
        writeln!(
            out,
            "{} {} {}",
            space.state_name(t.from),
            space.state_name(t.to),
            u8::from(t.contact_driven)
        )
        .unwrap();
    }
    writeln!(out, "\n[init]").unwrap();
    for (state, count) in parts.initial_counts {
        writeln!(out, "{} {}", space.state_name(*state), count).unwrap();
    }
    writeln!(out, "\n[rules]").unwrap();
    for rule in &parts.rules.rules {
        let mut line = format!(
            "{} {} ",
            space.state_name(rule.from),
            space.state_name(rule.to)
        );
        match &rule.form {
            HazardForm::ContactPressure { base } => {
                write!(line, "contact base={base}").unwrap();
            }
            HazardForm::Reciprocal { days } => {
                write!(line, "reciprocal days={days}").unwrap();
            }
            HazardForm::Constant { rate } => {
                write!(line, "constant rate={rate}").unwrap();
            }
            HazardForm::SignalScaled { base, series, coef, offset } => {
                write!(line, "signal base={base} series={series} coef={coef} offset={offset}").unwrap();
            }
        }
        if let Some(policy) = &rule.policy {
            write!(line, " policy={} policy_mult={}", policy.series, policy.multiplier_at_one).unwrap();
        }
        write!(line, " u={}", rule.uncertainty).unwrap();
        writeln!(out, "{line}").unwrap();
    }
    writeln!(out, "\n[behavior]").unwrap();
    writeln!(out, "# dim attribute weight").unwrap();
    for dim in &parts.behavior.dims {
        writeln!(out, "{} {} {}", dim.name, dim.attribute, dim.weight).unwrap();
    }
    for probe in parts.probes {
        writeln!(out, "\n[probe {}]", probe.name).unwrap();
        for (dim, value) in parts.behavior.dims.iter().zip(&probe.intensity) {
            writeln!(out, "{} = {}", dim.name, value).unwrap();
        }
    }
    writeln!(out, "\n[files]").unwrap();
    for (key, value) in parts.files {
        writeln!(out, "{key} = {value}").unwrap();
    }
    writeln!(out, "\n[seed]").unwrap();
    writeln!(out, "seed = {}", parts.seed).unwrap();
    out
}
