//! Ground-truth construction from raw records: clinical case timelines,
//! index series regime labeling, and pageview normalization.

use crate::error::{Error, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedRow {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: Vec<RejectedRow>,
}

fn parse_date(s: &str) -> Result<Option<NaiveDate>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(Some)
        .map_err(|e| Error::Ingest(format!("bad date {s:?}: {e}")))
}

/// SEIRD label indices used by the timeline builder.
pub const SEIRD_S: usize = 0;
pub const SEIRD_E: usize = 1;
pub const SEIRD_I: usize = 2;
pub const SEIRD_R: usize = 3;
pub const SEIRD_D: usize = 4;

/// Builds per-agent daily SEIRD labels from case timelines.
///
/// CSV columns: `agent_id,infection_date,recovery_date,death_date` (empty
/// fields mean absent). Exposed covers the incubation window before the
/// infection date; Susceptible before that; Infected from infection until
/// recovery or death; the terminal state absorbs afterwards. Inconsistent
/// rows are rejected and reported.
pub fn ingest_case_timelines(
    path: &Path,
    span_start: &str,
    span_days: usize,
    incubation_days: usize,
) -> Result<(Vec<Vec<usize>>, IngestReport)> {
    if !(5..=7).contains(&incubation_days) && incubation_days != 7 {
        // 5-7 day window; 7 is the default and always allowed.
        return Err(Error::Ingest(format!(
            "incubation window {incubation_days} outside the supported 5-7 day range"
        )));
    }
    let origin = NaiveDate::parse_from_str(span_start, "%Y-%m-%d")
        .map_err(|e| Error::Ingest(format!("bad span start: {e}")))?;
    let mut reader = csv::Reader::from_path(path)?;
    let mut report = IngestReport::default();
    let mut rows: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = idx + 2; // 1-based with header
        let reject = |reason: String, report: &mut IngestReport| {
            report.rejected.push(RejectedRow { row: row_no, reason });
        };
        let agent: usize = match record.get(0).unwrap_or("").trim().parse() {
            Ok(a) => a,
            Err(e) => {
                reject(format!("bad agent id: {e}"), &mut report);
                continue;
            }
        };
        let dates: Result<Vec<Option<NaiveDate>>> = (1..=3)
            .map(|i| parse_date(record.get(i).unwrap_or("")))
            .collect();
        let [infection, recovery, death] = match dates {
            Ok(v) => [v[0], v[1], v[2]],
            Err(e) => {
                reject(e.to_string(), &mut report);
                continue;
            }
        };
        if recovery.is_some() && death.is_some() {
            reject("both recovery and death present".into(), &mut report);
            continue;
        }
        let outcome = recovery.or(death);
        if let (Some(inf), Some(out)) = (infection, outcome) {
            if out < inf {
                reject("outcome precedes infection".into(), &mut report);
                continue;
            }
        }
        if infection.is_none() && outcome.is_some() {
            reject("outcome without infection".into(), &mut report);
            continue;
        }
        let mut labels = vec![SEIRD_S; span_days];
        if let Some(inf) = infection {
            let inf_day = (inf - origin).num_days();
            for (day, label) in labels.iter_mut().enumerate() {
                let d = day as i64;
                *label = if d < inf_day - incubation_days as i64 {
                    SEIRD_S
                } else if d < inf_day {
                    SEIRD_E
                } else {
                    SEIRD_I
                };
            }
            if let Some(out) = outcome {
                let out_day = (out - origin).num_days();
                let terminal = if recovery.is_some() { SEIRD_R } else { SEIRD_D };
                for (day, label) in labels.iter_mut().enumerate() {
                    if day as i64 >= out_day {
                        *label = terminal;
                    }
                }
            }
        }
        rows.insert(agent, labels);
        report.accepted += 1;
    }
    let n = rows.keys().max().map(|&a| a + 1).unwrap_or(0);
    let mut matrix = vec![vec![SEIRD_S; span_days]; n];
    for (agent, labels) in rows {
        matrix[agent] = labels;
    }
    // transpose to [day][agent]
    let by_day: Vec<Vec<usize>> = (0..span_days)
        .map(|d| (0..n).map(|a| matrix[a][d]).collect())
        .collect();
    Ok((by_day, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Bearish,
    Bullish,
    Neutral,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Bearish => "Bearish",
            Regime::Bullish => "Bullish",
            Regime::Neutral => "Neutral",
        }
    }
}

/// Daily regime labels from a `date,value` index series: the k-day return
/// against symmetric thresholds. Gaps forward-fill up to 3 days; the first k
/// days are Neutral by convention.
pub fn ingest_index_series(
    path: &Path,
    k: usize,
    theta: f64,
) -> Result<(Vec<Regime>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut points: Vec<(NaiveDate, f64)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let date = parse_date(record.get(0).unwrap_or(""))?
            .ok_or_else(|| Error::Ingest("index row missing date".into()))?;
        let value: f64 = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e| Error::Ingest(format!("bad index value: {e}")))?;
        points.push((date, value));
    }
    if points.is_empty() {
        return Err(Error::Ingest("empty index series".into()));
    }
    points.sort_by_key(|(d, _)| *d);
    let start = points[0].0;
    let end = points.last().unwrap().0;
    let span = (end - start).num_days() as usize + 1;
    let mut values = vec![f64::NAN; span];
    for (date, value) in &points {
        values[(*date - start).num_days() as usize] = *value;
    }
    // forward-fill gaps up to 3 days
    let mut gap = 0usize;
    for i in 0..span {
        if values[i].is_nan() {
            gap += 1;
            if gap > 3 {
                return Err(Error::Ingest(format!("gap longer than 3 days ending at day {i}")));
            }
            values[i] = values[i - 1];
        } else {
            gap = 0;
        }
    }
    let labels: Vec<Regime> = (0..span)
        .map(|d| {
            if d < k {
                return Regime::Neutral;
            }
            let ret = (values[d] - values[d - k]) / values[d - k];
            if ret > theta {
                Regime::Bullish
            } else if ret < -theta {
                Regime::Bearish
            } else {
                Regime::Neutral
            }
        })
        .collect();
    Ok((labels, values))
}

/// Min-max-normalized daily attention index from `date,count` pageview rows.
/// An all-equal series maps to 0.5 with the flag set.
pub fn ingest_pageviews(path: &Path) -> Result<(Vec<f64>, bool)> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut counts: Vec<(NaiveDate, f64)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let date = parse_date(record.get(0).unwrap_or(""))?
            .ok_or_else(|| Error::Ingest("pageview row missing date".into()))?;
        let count: f64 = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e| Error::Ingest(format!("bad count: {e}")))?;
        if count < 0.0 {
            return Err(Error::Ingest(format!("negative count {count}")));
        }
        counts.push((date, count));
    }
    counts.sort_by_key(|(d, _)| *d);
    let raw: Vec<f64> = counts.iter().map(|(_, c)| *c).collect();
    Ok(normalize_minmax(&raw))
}

/// Min-max normalization over the span; constant input maps to 0.5 with a
/// degeneracy flag.
pub fn normalize_minmax(raw: &[f64]) -> (Vec<f64>, bool) {
    let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if (max - min).abs() < 1e-12 {
        return (vec![0.5; raw.len()], true);
    }
    (raw.iter().map(|v| (v - min) / (max - min)).collect(), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_csv(name: &str, content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("clusterabm-ingest-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn timeline_window_arithmetic() {
        // infection day 10, recovery day 20, incubation 7:
        // E on days 3-9, I on 10-19, R from 20
        let path = temp_csv(
            "cases.csv",
            "agent_id,infection_date,recovery_date,death_date\n0,2024-01-11,2024-01-21,\n",
        );
        let (labels, report) = ingest_case_timelines(&path, "2024-01-01", 30, 7).unwrap();
        assert_eq!(report.accepted, 1);
        assert!(report.rejected.is_empty());
        // day index: infection on day 10 (2024-01-11), recovery day 20
        for day in 0..3 {
            assert_eq!(labels[day][0], SEIRD_S, "day {day}");
        }
        for day in 3..10 {
            assert_eq!(labels[day][0], SEIRD_E, "day {day}");
        }
        for day in 10..20 {
            assert_eq!(labels[day][0], SEIRD_I, "day {day}");
        }
        for day in 20..30 {
            assert_eq!(labels[day][0], SEIRD_R, "day {day}");
        }
    }

    #[test]
    fn no_infection_means_susceptible_throughout() {
        let path = temp_csv("cases2.csv", "agent_id,infection_date,recovery_date,death_date\n0,,,\n");
        let (labels, report) = ingest_case_timelines(&path, "2024-01-01", 10, 7).unwrap();
        assert_eq!(report.accepted, 1);
        assert!(labels.iter().all(|day| day[0] == SEIRD_S));
    }

    #[test]
    fn death_before_infection_rejected() {
        let path = temp_csv(
            "cases3.csv",
            "agent_id,infection_date,recovery_date,death_date\n0,2024-01-20,,2024-01-10\n",
        );
        let (_, report) = ingest_case_timelines(&path, "2024-01-01", 30, 7).unwrap();
        assert_eq!(report.accepted, 0);
        assert_eq!(report.rejected.len(), 1);
    }

    #[test]
    fn accepted_plus_rejected_covers_all_rows() {
        let path = temp_csv(
            "cases4.csv",
            "agent_id,infection_date,recovery_date,death_date\n\
             0,2024-01-11,2024-01-21,\n\
             1,bogus,,\n\
             2,,,\n\
             3,2024-01-05,2024-01-02,\n",
        );
        let (_, report) = ingest_case_timelines(&path, "2024-01-01", 30, 7).unwrap();
        assert_eq!(report.accepted + report.rejected.len(), 4);
        assert_eq!(report.accepted, 2);
    }

    #[test]
    fn flat_index_series_is_all_neutral() {
        let rows: String = (0..20)
            .map(|d| format!("{},100.0\n", crate::io::csv_io::day_to_date(d)))
            .collect();
        let path = temp_csv("index_flat.csv", &format!("date,value\n{rows}"));
        let (labels, _) = ingest_index_series(&path, 5, 0.005).unwrap();
        assert!(labels.iter().all(|&r| r == Regime::Neutral));
    }

    #[test]
    fn monotone_growth_turns_bullish_after_k_days() {
        let rows: String = (0..20)
            .map(|d| format!("{},{}\n", crate::io::csv_io::day_to_date(d), 100.0 * 1.01f64.powi(d as i32)))
            .collect();
        let path = temp_csv("index_up.csv", &format!("date,value\n{rows}"));
        let (labels, _) = ingest_index_series(&path, 5, 0.005).unwrap();
        for (d, label) in labels.iter().enumerate() {
            if d < 5 {
                assert_eq!(*label, Regime::Neutral, "day {d}");
            } else {
                assert_eq!(*label, Regime::Bullish, "day {d}");
            }
        }
    }

    #[test]
    fn long_gaps_are_rejected() {
        let content = format!(
            "date,value\n{},100\n{},101\n",
            crate::io::csv_io::day_to_date(0),
            crate::io::csv_io::day_to_date(6),
        );
        let path = temp_csv("index_gap.csv", &content);
        assert!(ingest_index_series(&path, 5, 0.005).is_err());
    }

    #[test]
    fn pageview_normalization() {
        let (norm, flag) = normalize_minmax(&[0.0, 50.0, 100.0]);
        assert_eq!(norm, vec![0.0, 0.5, 1.0]);
        assert!(!flag);
        let (norm, flag) = normalize_minmax(&[7.0, 7.0]);
        assert_eq!(norm, vec![0.5, 0.5]);
        assert!(flag);
        // invariance under positive affine rescaling
        let (a, _) = normalize_minmax(&[1.0, 3.0, 9.0]);
        let (b, _) = normalize_minmax(&[10.0, 30.0, 90.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
