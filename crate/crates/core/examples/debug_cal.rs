// scratch: can the calibrator learn u_sym-conditional weights?
use clusterabm_core::fusion::*;
use clusterabm_core::rng::Stream;

fn main() {
    let mut rng = Stream::keyed(3, "cal-cond", &[]);
    let mut records = Vec::new();
    for _ in 0..400 {
        let truth = rng.uniform_range(0.05, 0.9);
        // class A (u_sym 0.05): symbolic exact, neural noisy
        records.push(CalibratorRecord {
            features: CalibratorFeatures { u_sym: 0.05, u_neu: rng.uniform_range(0.0, 0.05), phi_entropy: rng.uniform_range(0.0, 1.5), exo_change: rng.uniform_range(0.0, 0.5) },
            lambda_sym: truth,
            lambda_neu: (truth + rng.uniform_range(-0.3, 0.3)).clamp(0.0, 1.0),
            realized_rate: truth,
        });
        // class B (u_sym 0.4): symbolic far off, neural exact
        let truth2 = rng.uniform_range(0.05, 0.9);
        records.push(CalibratorRecord {
            features: CalibratorFeatures { u_sym: 0.4, u_neu: rng.uniform_range(0.0, 0.05), phi_entropy: rng.uniform_range(0.0, 1.5), exo_change: rng.uniform_range(0.0, 0.5) },
            lambda_sym: (truth2 * 0.3).clamp(0.0, 1.0),
            lambda_neu: truth2,
            realized_rate: truth2,
        });
    }
    for (hidden, epochs, step) in [(8, 8000, 0.25), (16, 20000, 0.3)] {
        let hyper = CalibratorHyper { hidden, epochs, step_size: step };
        let (cal, trace) = train_calibrator(&records, &hyper, 7).unwrap();
        let fa = CalibratorFeatures { u_sym: 0.05, u_neu: 0.02, phi_entropy: 0.8, exo_change: 0.2 };
        let fb = CalibratorFeatures { u_sym: 0.4, u_neu: 0.02, phi_entropy: 0.8, exo_change: 0.2 };
        let (ca_s, ca_n) = cal.confidences(&fa);
        let (cb_s, cb_n) = cal.confidences(&fb);
        println!(
            "hidden {hidden} epochs {epochs}: classA w_sym {:.3} classB w_sym {:.3} (loss {:.5} -> {:.5})",
            ca_s / (ca_s + ca_n), cb_s / (cb_s + cb_n), trace[0], trace.last().unwrap()
        );
    }
}
