// scratch: criterion-14 rehearsal - ablation EETE ordering with a
// misspecified oracle (the Table-4 regime: approximate symbolic priors)
use clusterabm_core::engine::*;
use clusterabm_core::io::generate::{seird_shock, GeneratorParams};
use clusterabm_core::neural::RegressorHyper;
use clusterabm_core::symbolic::rules::{HazardForm, PolicyEffect};

/// The Table-4 regime: the rule table knows the regime structure (contact
/// form and policy multiplier roughly right, low uncertainty) but is coarse
/// on progression rates (far too slow, flagged with wide uncertainty).
fn misspecify(scenario: &Scenario) -> Scenario {
    let mut s = scenario.clone();
    for rule in &mut s.rules.rules {
        match &mut rule.form {
            HazardForm::ContactPressure { base } => {
                *base *= 1.1;
                rule.uncertainty = 0.05;
            }
            HazardForm::Reciprocal { days } => {
                *days *= 4.0;
                rule.uncertainty = 0.4;
            }
            HazardForm::Constant { rate } => {
                *rate *= 0.3;
                rule.uncertainty = 0.4;
            }
            HazardForm::SignalScaled { .. } => {}
        }
        let _ = PolicyEffect { series: String::new(), multiplier_at_one: 0.0 };
    }
    s
}

fn main() {
    let params = GeneratorParams::default();
    let mut wins = [0usize; 4]; // vs neural_only, symbolic_only, naive, flat
    let kinds = [
        AblationKind::NeuralOnly,
        AblationKind::SymbolicOnly,
        AblationKind::NaiveFusion,
        AblationKind::FlatAgents,
    ];
    for seed in 1u64..=10 {
        let (scenario, truth) = seird_shock(200, 60, seed, &params).unwrap();
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
        let eete = |kind: AblationKind| -> f64 {
            let run = run_ablation(kind, &oracle_view, &truth, &assignment, &h, &config, seed).unwrap();
            run.outcome.aggregate.eete_mean.unwrap_or(f64::INFINITY)
        };
        let full = eete(AblationKind::Full);
        let mut line = format!("seed {seed:2}: full {full:.3}");
        for (i, kind) in kinds.iter().enumerate() {
            let v = eete(*kind);
            let beat = full <= v;
            if beat { wins[i] += 1; }
            line.push_str(&format!(" | {} {v:.3}{}", kind.name(), if beat { " <=" } else { " >" }));
        }
        println!("{line}");
    }
    println!("full wins: neural {} symbolic {} naive {} flat {}", wins[0], wins[1], wins[2], wins[3]);
}
