// scratch: why does naive fusion outperform calibrated full on EETE?
use clusterabm_core::engine::*;
use clusterabm_core::io::generate::{seird_shock, GeneratorParams};
use clusterabm_core::neural::RegressorHyper;
use clusterabm_core::symbolic::rules::HazardForm;

fn misspecify(scenario: &Scenario) -> Scenario {
    let mut s = scenario.clone();
    for rule in &mut s.rules.rules {
        match &mut rule.form {
            HazardForm::ContactPressure { base } => { *base *= 1.5; rule.uncertainty = 0.15; }
            HazardForm::Reciprocal { days } => { *days *= 4.0; rule.uncertainty = 0.4; }
            HazardForm::Constant { rate } => { *rate *= 0.3; rule.uncertainty = 0.4; }
            HazardForm::SignalScaled { .. } => {}
        }
    }
    s
}

fn main() {
    let seed = 8u64;
    let (scenario, truth) = seird_shock(200, 60, seed, &GeneratorParams::default()).unwrap();
    let oracle_view = misspecify(&scenario);
    let assignment = {
        let labels: Vec<usize> = (0..200).map(|i| i % 4).collect();
        clusterabm_core::anchor::ClusterAssignment { labels, k: 4, anchors: vec![0, 1, 2, 3] }
    };
    let h = ndarray::Array2::zeros((200, 8));
    let config = WindowConfig {
        regressor: RegressorHyper { hidden: (16, 16), epochs: 200, step_size: 0.4, weight_penalty: 1e-5, ensemble: 2 },
        ..Default::default()
    };
    for kind in [AblationKind::Full, AblationKind::NaiveFusion] {
        let run = run_ablation(kind, &oracle_view, &truth, &assignment, &h, &config, seed).unwrap();
        println!("== {}", kind.name());
        for w in &run.windows {

        }
        for w in &run.windows {
            let mut by_origin: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
            for (f, rec) in w.forecasts.iter().zip(&w.truth_events) {
                if let Some(ev) = &rec.event {
                    let err = (f.distribution.expected_day() - ev.day as f64).abs();
                    let e = by_origin.entry(f.origin).or_insert((0.0, 0));
                    e.0 += err;
                    e.1 += 1;
                }
            }
            let detail: Vec<String> = by_origin.iter().map(|(o, (s, c))| format!("origin{o}: {:.2}({c})", s / *c as f64)).collect();
            println!("  w{} eete={:?} {detail:?}", w.index, w.metrics.eete.map(|e| (e * 1000.0).round() / 1000.0));
        }
    }
}
