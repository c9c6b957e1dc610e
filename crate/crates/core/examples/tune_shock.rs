// scratch: criterion-10 rehearsal - symbolic weight response at the shock
use clusterabm_core::engine::*;
use clusterabm_core::fusion::FusionMode;
use clusterabm_core::io::generate::{seird_shock, GeneratorParams};
use std::collections::BTreeMap;

fn main() {
    let params = GeneratorParams::default();
    let shock_day = params.shock_day;
    let mut passes = 0;
    for seed in 1u64..=10 {
        let (scenario, truth) = seird_shock(200, 60, seed, &params).unwrap();
        let assignment = {
            let labels: Vec<usize> = (0..200).map(|i| i % 4).collect();
            clusterabm_core::anchor::ClusterAssignment { labels, k: 4, anchors: vec![0, 1, 2, 3] }
        };
        let h = ndarray::Array2::zeros((200, 8));
        let config = WindowConfig::default();
        let windows = rolling_window_run(
            &scenario, &truth, &assignment, &h,
            SymbolicVariant::Full, FusionMode::DefaultReciprocal, &config, seed,
        ).unwrap();
        // daily mean w_sym across clusters and transitions
        let mut by_day: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for w in &windows {
            for t in &w.traces {
                by_day.entry(t.day).or_default().push(t.c_sym / (t.c_sym + t.c_neu));
            }
        }
        let mean_at = |d: usize| -> Option<f64> {
            by_day.get(&d).map(|v| v.iter().sum::<f64>() / v.len() as f64)
        };
        let Some(at_shock) = mean_at(shock_day) else { println!("seed {seed}: shock day has no trace"); continue };
        let trailing: Vec<f64> = (shock_day.saturating_sub(7)..shock_day).filter_map(mean_at).collect();
        let trail_mean = trailing.iter().sum::<f64>() / trailing.len().max(1) as f64;
        let pass = at_shock > trail_mean;
        if pass { passes += 1; }
        println!(
            "seed {seed:2}: w_sym(shock {shock_day}) = {at_shock:.4} vs trailing {trail_mean:.4} ({} days) {}",
            trailing.len(), if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("passes: {passes}/10");
}
