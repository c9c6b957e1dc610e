//! CSV readers and writers for every tabular artifact.

use crate::anchor::ClusterAssignment;
use crate::engine::{Event, FusionTraceRow};
use crate::error::{Error, Result};
use crate::model::{AgentProfile, ExogenousSeries, StateSpace};
use chrono::NaiveDate;
use ndarray::Array2;
use std::collections::BTreeMap;
use std::path::Path;

/// Nominal calendar origin for day indices in emitted series files.
pub const DAY_ZERO: &str = "2024-01-01";

pub fn day_to_date(day: usize) -> String {
    let origin = NaiveDate::parse_from_str(DAY_ZERO, "%Y-%m-%d").unwrap();
    (origin + chrono::Days::new(day as u64)).format("%Y-%m-%d").to_string()
}

pub fn date_to_day(date: &str, origin: &str) -> Result<i64> {
    let origin = NaiveDate::parse_from_str(origin, "%Y-%m-%d")
        .map_err(|e| Error::Ingest(format!("bad origin date: {e}")))?;
    let d = NaiveDate::parse_from_str(date, "%Y-%m-%d")
        .map_err(|e| Error::Ingest(format!("bad date {date}: {e}")))?;
    Ok((d - origin).num_days())
}

/// Edge list: `layer,i,j,weight`.
pub fn write_edges(path: &Path, layers: &[(String, Vec<(usize, usize, f64)>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["layer", "i", "j", "weight"])?;
    for (name, edges) in layers {
        for (i, j, weight) in edges {
            w.write_record([name.as_str(), &i.to_string(), &j.to_string(), &weight.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_edges(path: &Path) -> Result<Vec<(String, Vec<(usize, usize, f64)>)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut layers: BTreeMap<String, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let layer = record
            .get(0)
            .ok_or_else(|| Error::Ingest("edge row missing layer".into()))?
            .to_string();
        let parse = |idx: usize, what: &str| -> Result<f64> {
            record
                .get(idx)
                .ok_or_else(|| Error::Ingest(format!("edge row missing {what}")))?
                .parse::<f64>()
                .map_err(|e| Error::Ingest(format!("bad {what}: {e}")))
        };
        layers.entry(layer).or_default().push((
            parse(1, "i")? as usize,
            parse(2, "j")? as usize,
            parse(3, "weight")?,
        ));
    }
    Ok(layers.into_iter().collect())
}

/// Exogenous series: `date,name,value` at daily resolution.
pub fn write_exogenous(path: &Path, series: &[ExogenousSeries]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "name", "value"])?;
    let span = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    for day in 0..span {
        for s in series {
            if let Some(v) = s.values.get(day) {
                w.write_record([day_to_date(day).as_str(), &s.name, &v.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_exogenous(path: &Path, span: usize) -> Result<Vec<ExogenousSeries>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut by_name: BTreeMap<String, Vec<(i64, f64)>> = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let date = record.get(0).ok_or_else(|| Error::Ingest("missing date".into()))?;
        let name = record.get(1).ok_or_else(|| Error::Ingest("missing name".into()))?;
        let value: f64 = record
            .get(2)
            .ok_or_else(|| Error::Ingest("missing value".into()))?
            .parse()
            .map_err(|e| Error::Ingest(format!("bad value: {e}")))?;
        by_name
            .entry(name.to_string())
            .or_default()
            .push((date_to_day(date, DAY_ZERO)?, value));
    }
    let mut out = Vec::new();
    for (name, mut points) in by_name {
        points.sort_by_key(|(d, _)| *d);
        let mut values = vec![0.0; span];
        for (day, value) in points {
            if day < 0 || day as usize >= span {
                return Err(Error::Ingest(format!("series {name} has day {day} outside span {span}")));
            }
            values[day as usize] = value;
        }
        out.push(ExogenousSeries {
            name,
            values,
            units: String::new(),
        });
    }
    Ok(out)
}

/// Agent profiles: `id,<attributes...>,<mod_FROM->TO...>`.
pub fn write_agents(path: &Path, profiles: &[AgentProfile], space: &StateSpace) -> Result<()> {
    let attr_names: Vec<String> = {
        let set: std::collections::BTreeSet<String> = profiles
            .iter()
            .flat_map(|p| p.attributes.keys().cloned())
            .collect();
        set.into_iter().collect()
    };
    let mod_keys: Vec<(usize, usize)> = {
        let set: std::collections::BTreeSet<(usize, usize)> = profiles
            .iter()
            .flat_map(|p| p.susceptibility.keys().copied())
            .collect();
        set.into_iter().collect()
    };
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend(attr_names.iter().cloned());
    header.extend(
        mod_keys
            .iter()
            .map(|&(f, t)| format!("mod_{}->{}", space.state_name(f), space.state_name(t))),
    );
    w.write_record(&header)?;
    for p in profiles {
        let mut row = vec![p.id.to_string()];
        row.extend(attr_names.iter().map(|a| p.attribute(a).to_string()));
        row.extend(mod_keys.iter().map(|&(f, t)| p.modifier(f, t).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_agents(path: &Path, space: &StateSpace) -> Result<Vec<AgentProfile>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let mut profiles = Vec::new();
    for record in r.records() {
        let record = record?;
        let mut attributes = BTreeMap::new();
        let mut susceptibility = BTreeMap::new();
        let mut id = None;
        for (name, value) in header.iter().zip(record.iter()) {
            if name == "id" {
                id = Some(value.parse::<usize>().map_err(|e| Error::Ingest(format!("bad id: {e}")))?);
            } else if let Some(spec) = name.strip_prefix("mod_") {
                let (from, to) = spec
                    .split_once("->")
                    .ok_or_else(|| Error::Ingest(format!("bad modifier column {name}")))?;
                let f = space
                    .state_index(from)
                    .ok_or_else(|| Error::Ingest(format!("unknown state {from}")))?;
                let t = space
                    .state_index(to)
                    .ok_or_else(|| Error::Ingest(format!("unknown state {to}")))?;
                susceptibility.insert(
                    (f, t),
                    value.parse::<f64>().map_err(|e| Error::Ingest(format!("bad modifier: {e}")))?,
                );
            } else {
                attributes.insert(
                    name.to_string(),
                    value.parse::<f64>().map_err(|e| Error::Ingest(format!("bad attribute {name}: {e}")))?,
                );
            }
        }
        profiles.push(AgentProfile {
            id: id.ok_or_else(|| Error::Ingest("agent row missing id".into()))?,
            attributes,
            susceptibility,
        });
    }
    profiles.sort_by_key(|p| p.id);
    Ok(profiles)
}

/// Trajectories: `day,agent_id,state` with state names.
pub fn write_trajectories(path: &Path, states: &[Vec<usize>], space: &StateSpace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["day", "agent_id", "state"])?;
    for (day, day_states) in states.iter().enumerate() {
        for (agent, &s) in day_states.iter().enumerate() {
            w.write_record([&day.to_string(), &agent.to_string(), space.state_name(s)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectories(path: &Path, space: &StateSpace) -> Result<Vec<Vec<usize>>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut cells: Vec<(usize, usize, usize)> = Vec::new();
    for record in r.records() {
        let record = record?;
        let day: usize = record.get(0).unwrap_or("").parse().map_err(|e| Error::Ingest(format!("bad day: {e}")))?;
        let agent: usize = record.get(1).unwrap_or("").parse().map_err(|e| Error::Ingest(format!("bad agent: {e}")))?;
        let state = space
            .state_index(record.get(2).unwrap_or(""))
            .ok_or_else(|| Error::Ingest(format!("unknown state {:?}", record.get(2))))?;
        cells.push((day, agent, state));
    }
    let days = cells.iter().map(|c| c.0).max().map(|d| d + 1).unwrap_or(0);
    let agents = cells.iter().map(|c| c.1).max().map(|a| a + 1).unwrap_or(0);
    let mut out = vec![vec![usize::MAX; agents]; days];
    for (day, agent, state) in cells {
        out[day][agent] = state;
    }
    for row in &out {
        if row.iter().any(|&s| s == usize::MAX) {
            return Err(Error::Ingest("trajectory matrix has holes".into()));
        }
    }
    Ok(out)
}

/// Events: `day,agent_id,from,to`.
pub fn write_events(path: &Path, events: &[Event], space: &StateSpace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["day", "agent_id", "from", "to"])?;
    for e in events {
        w.write_record([
            &e.day.to_string(),
            &e.agent.to_string(),
            space.state_name(e.from),
            space.state_name(e.to),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fusion traces: one row per (window, day, cluster, transition).
pub fn write_hazard_trace(path: &Path, traces: &[FusionTraceRow], space: &StateSpace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "window", "day", "cluster", "from", "to", "lambda_sym", "u_sym", "lambda_neu", "u_neu",
        "c_sym", "c_neu", "lambda_fused",
    ])?;
    for t in traces {
        w.write_record([
            &t.window.to_string(),
            &t.day.to_string(),
            &t.cluster.to_string(),
            space.state_name(t.from),
            space.state_name(t.to),
            &t.lambda_sym.to_string(),
            &t.u_sym.to_string(),
            &t.lambda_neu.to_string(),
            &t.u_neu.to_string(),
            &t.c_sym.to_string(),
            &t.c_neu.to_string(),
            &t.lambda_fused.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Cluster assignment: `agent_id,cluster_id,anchor_flag`.
pub fn write_clusters(path: &Path, assignment: &ClusterAssignment) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["agent_id", "cluster_id", "anchor_flag"])?;
    for (agent, &cluster) in assignment.labels.iter().enumerate() {
        let anchor = assignment.anchors[cluster] == agent;
        w.write_record([
            agent.to_string(),
            cluster.to_string(),
            if anchor { "1".to_string() } else { "0".to_string() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_clusters(path: &Path) -> Result<ClusterAssignment> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows: Vec<(usize, usize, bool)> = Vec::new();
    for record in r.records() {
        let record = record?;
        rows.push((
            record.get(0).unwrap_or("").parse().map_err(|e| Error::Ingest(format!("bad agent: {e}")))?,
            record.get(1).unwrap_or("").parse().map_err(|e| Error::Ingest(format!("bad cluster: {e}")))?,
            record.get(2) == Some("1"),
        ));
    }
    rows.sort_by_key(|r| r.0);
    let k = rows.iter().map(|r| r.1).max().map(|c| c + 1).unwrap_or(0);
    let labels: Vec<usize> = rows.iter().map(|r| r.1).collect();
    let mut anchors = vec![usize::MAX; k];
    for (agent, cluster, is_anchor) in &rows {
        if *is_anchor {
            anchors[*cluster] = *agent;
        }
    }
    if anchors.iter().any(|&a| a == usize::MAX) {
        return Err(Error::Ingest("clusters file missing an anchor".into()));
    }
    Ok(ClusterAssignment { labels, k, anchors })
}

/// Motif profiles: `agent_id,m_1..m_K`.
pub fn write_motifs(path: &Path, p: &Array2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["agent_id".to_string()];
    header.extend((1..=p.ncols()).map(|k| format!("m_{k}")));
    w.write_record(&header)?;
    for (agent, row) in p.rows().into_iter().enumerate() {
        let mut record = vec![agent.to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
