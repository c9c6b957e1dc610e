//! First-passage event-time distributions derived from daily hazards.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Competing-risk discretization used by both the sampler and the analytic
/// distribution. `Exponential` converts per-day probabilities to
/// continuous-time rates; `Weights` normalizes raw hazards against a unit
/// persistence mass (sensitivity alternative).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerKind {
    Exponential,
    Weights,
}

impl Default for SamplerKind {
    fn default() -> Self {
        SamplerKind::Exponential
    }
}

/// Per-day probability converted to a continuous-time rate.
#[inline]
pub fn prob_to_rate(p: f64) -> f64 {
    -(1.0 - p.min(1.0 - 1e-12)).ln()
}

/// Per-day stay probability and per-type event shares for one day's hazards.
/// Returns (stay, shares) where shares sum to 1 when any hazard is positive.
pub fn day_outcome(hazards: &[f64], kind: SamplerKind) -> (f64, Vec<f64>) {
    match kind {
        SamplerKind::Exponential => {
            let rates: Vec<f64> = hazards.iter().map(|&p| prob_to_rate(p)).collect();
            let total: f64 = rates.iter().sum();
            if total <= 0.0 {
                return (1.0, vec![0.0; hazards.len()]);
            }
            let stay = (-total).exp();
            (stay, rates.iter().map(|r| r / total).collect())
        }
        SamplerKind::Weights => {
            let total: f64 = hazards.iter().sum();
            let denom = total + 1.0;
            if total <= 0.0 {
                return (1.0, vec![0.0; hazards.len()]);
            }
            (1.0 / denom, hazards.iter().map(|h| h / total).collect())
        }
    }
}

/// Joint distribution over (transition type, day) within a forecast horizon,
/// plus the no-event mass. Days are 1-based; `p[t][d-1]` holds p(type t,
/// day d). Types are restricted to the outgoing transitions of the origin
/// state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointEventDistribution {
    pub horizon: usize,
    pub origin: usize,
    /// Transition types as (from, to) pairs, in a fixed declared order.
    pub types: Vec<(usize, usize)>,
    /// p[type][day-1]
    pub p: Vec<Vec<f64>>,
    pub p_none: f64,
}

impl JointEventDistribution {
    /// Builds the first-passage distribution from a table of daily hazards:
    /// `hazards[d-1][t]` is the per-day probability of type `t` on day `d`
    /// conditional on no earlier event.
    pub fn from_daily_hazards(
        origin: usize,
        types: Vec<(usize, usize)>,
        hazards: &[Vec<f64>],
        kind: SamplerKind,
    ) -> Result<Self> {
        let horizon = hazards.len();
        let n_types = types.len();
        for (d, row) in hazards.iter().enumerate() {
            if row.len() != n_types {
                return Err(Error::Metrics(format!(
                    "day {} hazard row has {} entries, expected {}",
                    d + 1,
                    row.len(),
                    n_types
                )));
            }
            for &h in row {
                if !(0.0..=1.0).contains(&h) {
                    return Err(Error::Metrics(format!("invalid hazard {h} on day {}", d + 1)));
                }
            }
        }
        let mut p = vec![vec![0.0; horizon]; n_types];
        let mut survival = 1.0;
        for (d, row) in hazards.iter().enumerate() {
            let (stay, shares) = day_outcome(row, kind);
            let event = survival * (1.0 - stay);
            for (t, share) in shares.iter().enumerate() {
                p[t][d] = event * share;
            }
            survival *= stay;
        }
        Ok(Self {
            horizon,
            origin,
            types,
            p,
            p_none: survival,
        })
    }

    /// Point mass on (type index, day). Used by tests and degenerate
    /// forecasters.
    pub fn point_mass(
        origin: usize,
        types: Vec<(usize, usize)>,
        type_idx: usize,
        day: usize,
        horizon: usize,
    ) -> Self {
        let mut p = vec![vec![0.0; horizon]; types.len()];
        p[type_idx][day - 1] = 1.0;
        Self {
            horizon,
            origin,
            types,
            p,
            p_none: 0.0,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.p_none + self.p.iter().flatten().sum::<f64>()
    }

    /// Marginal probability of any event on a given 1-based day.
    pub fn p_any_on_day(&self, day: usize) -> f64 {
        self.p.iter().map(|row| row[day - 1]).sum()
    }

    /// Marginal probability of a type across days.
    pub fn p_type(&self, type_idx: usize) -> f64 {
        self.p[type_idx].iter().sum()
    }

    /// Expected event day with the no-event mass mapped to day H+1.
    pub fn expected_day(&self) -> f64 {
        let mut e = (self.horizon + 1) as f64 * self.p_none;
        for d in 1..=self.horizon {
            e += d as f64 * self.p_any_on_day(d);
        }
        e
    }

    /// Highest-probability cell mass across (type, day) cells and no-event.
    pub fn max_cell(&self) -> f64 {
        self.p
            .iter()
            .flatten()
            .copied()
            .fold(self.p_none, f64::max)
    }

    /// argmax type by marginal mass; ties broken by the lexicographically
    /// first (from, to) pair.
    pub fn predicted_type(&self) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        let mut order: Vec<usize> = (0..self.types.len()).collect();
        order.sort_by_key(|&i| self.types[i]);
        for i in order {
            let mass = self.p_type(i);
            match best {
                Some((_, m)) if mass <= m => {}
                _ => best = Some((self.types[i], mass)),
            }
        }
        best.map(|(t, _)| t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_zero_hazards_mean_no_event() {
        let hz = vec![vec![0.0, 0.0]; 7];
        let d =
            JointEventDistribution::from_daily_hazards(0, vec![(0, 1), (0, 2)], &hz, SamplerKind::Exponential)
                .unwrap();
        assert_eq!(d.p_none, 1.0);
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_survival_arithmetic() {
        // single type, constant p = 1 - e^-1, H = 2
        let p = 1.0 - (-1.0f64).exp();
        let hz = vec![vec![p], vec![p]];
        let d = JointEventDistribution::from_daily_hazards(0, vec![(0, 1)], &hz, SamplerKind::Exponential)
            .unwrap();
        let e1 = (-1.0f64).exp();
        assert!((d.p[0][0] - (1.0 - e1)).abs() < 1e-12);
        assert!((d.p[0][1] - e1 * (1.0 - e1)).abs() < 1e-12);
        assert!((d.p_none - e1 * e1).abs() < 1e-12);
    }

    #[test]
    fn single_rate_one_example() {
        // p = 1 - e^-1 gives rate 1 and stay prob e^-1 on day 1
        let p = 1.0 - (-1.0f64).exp();
        assert!((prob_to_rate(p) - 1.0).abs() < 1e-12);
        let (stay, shares) = day_outcome(&[p], SamplerKind::Exponential);
        assert!((stay - (-1.0f64).exp()).abs() < 1e-12);
        assert!((shares[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_hazards_split_evenly() {
        let (_, shares) = day_outcome(&[0.3, 0.3], SamplerKind::Exponential);
        assert!((shares[0] - 0.5).abs() < 1e-12);
        assert!((shares[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weights_kind_normalizes_against_unit_mass() {
        let (stay, shares) = day_outcome(&[0.5, 0.5], SamplerKind::Weights);
        assert!((stay - 0.5).abs() < 1e-12);
        assert!((shares[0] - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn distribution_normalizes(
            table in proptest::collection::vec(
                proptest::collection::vec(0.0f64..1.0, 2),
                1..9,
            )
        ) {
            let d = JointEventDistribution::from_daily_hazards(
                0,
                vec![(0, 1), (0, 2)],
                &table,
                SamplerKind::Exponential,
            ).unwrap();
            prop_assert!((d.total_mass() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn weights_distribution_normalizes(
            table in proptest::collection::vec(
                proptest::collection::vec(0.0f64..1.0, 2),
                1..9,
            )
        ) {
            let d = JointEventDistribution::from_daily_hazards(
                0,
                vec![(0, 1), (0, 2)],
                &table,
                SamplerKind::Weights,
            ).unwrap();
            prop_assert!((d.total_mass() - 1.0).abs() < 1e-9);
        }
    }
}
