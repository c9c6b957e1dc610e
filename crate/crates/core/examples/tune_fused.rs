// scratch: closed-loop fused rehearsal (criterion-2 shape)
use clusterabm_core::engine::*;
use clusterabm_core::fusion::FusionMode;
use clusterabm_core::io::generate::{seird_shock, GeneratorParams};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: Vec<u64> = if args.len() > 1 {
        args[1..].iter().map(|s| s.parse().unwrap()).collect()
    } else {
        vec![23]
    };
    for seed in seeds {
        let start = std::time::Instant::now();
        let params = GeneratorParams::default();
        let (scenario, truth) = seird_shock(200, 60, seed, &params).unwrap();
        let assignment = {
            let labels: Vec<usize> = (0..200).map(|i| i % 4).collect();
            clusterabm_core::anchor::ClusterAssignment { labels, k: 4, anchors: vec![0, 1, 2, 3] }
        };
        let h = ndarray::Array2::zeros((200, 8));
        let config = WindowConfig {
            train_calibrator: true,
            ..Default::default()
        };
        let windows = rolling_window_run(
            &scenario, &truth, &assignment, &h,
            SymbolicVariant::Full, FusionMode::LearnedCalibrator, &config, seed,
        ).unwrap();
        let maes = fused_vs_generator_mae(&windows, scenario.config.generator_hazards.as_ref().unwrap());
        let eetes: Vec<String> = windows.iter().map(|w| match w.metrics.eete {
            Some(e) => format!("{:.2}({})", e, w.metrics.event_count), None => "-".into(),
        }).collect();
        let mean_eete: f64 = {
            let v: Vec<f64> = windows.iter().filter_map(|w| w.metrics.eete).collect();
            v.iter().sum::<f64>() / v.len().max(1) as f64
        };
        let mean_mae = maes.iter().sum::<f64>() / maes.len() as f64;
        // u_neu snapshot per window (mean over traces)
        let u_neus: Vec<String> = windows.iter().map(|w| {
            let vals: Vec<f64> = w.traces.iter().map(|t| t.u_neu).collect();
            format!("{:.3}", vals.iter().sum::<f64>() / vals.len().max(1) as f64)
        }).collect();
        println!(
            "seed {seed:2}: EETE {eetes:?} mean {mean_eete:.3} | MAE per-window {:?} mean {mean_mae:.4} | u_neu {:?} | {:.1}s",
            maes.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>(), u_neus,
            start.elapsed().as_secs_f64()
        );
    }
}
