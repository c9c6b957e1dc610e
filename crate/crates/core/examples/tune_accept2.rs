// scratch: full criterion-2 rehearsal (generate -> ANCHOR -> calibrated windows)
use clusterabm_core::anchor::{run_anchor, AnchorConfig};
use clusterabm_core::engine::*;
use clusterabm_core::fusion::FusionMode;
use clusterabm_core::io::generate::{seird_shock, GeneratorParams};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: Vec<u64> = args[1..].iter().map(|s| s.parse().unwrap()).collect();
    for seed in seeds {
        let t0 = std::time::Instant::now();
        let (scenario, truth) = seird_shock(200, 60, seed, &GeneratorParams::default()).unwrap();
        let anchor_config = AnchorConfig { k_coarse: 6, k_m: 3, k_final: 4, seed, ..Default::default() };
        let result = run_anchor(&scenario.graph, &scenario.profiles, &scenario.probes, &scenario.behavior, &anchor_config).unwrap();
        let config = WindowConfig { train_calibrator: true, ..Default::default() };
        let windows = rolling_window_run(
            &scenario, &truth, &result.assignment, &result.h,
            SymbolicVariant::Full, FusionMode::LearnedCalibrator, &config, seed,
        ).unwrap();
        let maes = fused_vs_generator_mae(&windows, scenario.config.generator_hazards.as_ref().unwrap());
        let mean_mae = maes.iter().sum::<f64>() / maes.len() as f64;
        let eetes: Vec<f64> = windows.iter().filter_map(|w| w.metrics.eete).collect();
        let mean_eete = eetes.iter().sum::<f64>() / eetes.len().max(1) as f64;
        println!(
            "seed {seed:2}: k={} MAE {:?} mean {:.4} | EETE mean {:.3} | {:.0}s {}",
            result.assignment.k,
            maes.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>(), mean_mae, mean_eete,
            t0.elapsed().as_secs_f64(),
            if mean_mae < 0.01 && mean_eete < 0.5 { "PASS" } else { "FAIL" }
        );
    }
}
