// scratch: decompose fused-vs-generator MAE by window/transition/pathway
use clusterabm_core::engine::*;
use clusterabm_core::fusion::FusionMode;
use clusterabm_core::io::generate::{seird_shock, GeneratorParams};
use std::collections::BTreeMap;

fn main() {
    let seed = 23u64;
    let params = GeneratorParams::default();
    let (scenario, truth) = seird_shock(200, 60, seed, &params).unwrap();
    let assignment = {
        let labels: Vec<usize> = (0..200).map(|i| i % 4).collect();
        clusterabm_core::anchor::ClusterAssignment { labels, k: 4, anchors: vec![0, 1, 2, 3] }
    };
    let h = ndarray::Array2::zeros((200, 8));
    let config = WindowConfig { train_calibrator: true, ..Default::default() };
    let windows = rolling_window_run(
        &scenario, &truth, &assignment, &h,
        SymbolicVariant::Full, FusionMode::LearnedCalibrator, &config, seed,
    ).unwrap();
    let gen = scenario.config.generator_hazards.as_ref().unwrap();
    let space = scenario.space();
    for w in &windows {
        println!("== window {} (reset {})", w.index, w.reset_day);
        // per-day cluster traces: aggregate sym, neu, fused with at-risk weights
        for offset in 0..7usize {
            let day = w.reset_day + offset;
            let states = &w.simulated[offset];
            let mut line = format!("  day {day}: ");
            for tr in space.transitions() {
                let key = (tr.from, tr.to);
                let mut atr = vec![0.0f64; 4];
                for (agent, &s) in states.iter().enumerate() {
                    if s == tr.from { atr[assignment.labels[agent]] += 1.0; }
                }
                let total: f64 = atr.iter().sum();
                if total == 0.0 { continue; }
                let mut sym = 0.0; let mut neu = 0.0; let mut fus = 0.0; let mut wsym = 0.0;
                let rows: BTreeMap<usize, _> = w.traces.iter()
                    .filter(|t| t.day == day && (t.from, t.to) == key)
                    .map(|t| (t.cluster, t)).collect();
                for c in 0..4 {
                    let t = rows[&c];
                    sym += atr[c] * t.lambda_sym; neu += atr[c] * t.lambda_neu;
                    fus += atr[c] * t.lambda_fused;
                    wsym += atr[c] * t.c_sym / (t.c_sym + t.c_neu);
                }
                sym /= total; neu /= total; fus /= total; wsym /= total;
                let g = gen[day][&key];
                line.push_str(&format!(
                    "{}[g={:.3} s={:.3} n={:.3} f={:.3} w={:.2} ar={}] ",
                    space.transition_key(tr), g, sym, neu, fus, wsym, total as usize
                ));
            }
            println!("{line}");
        }
    }
}
