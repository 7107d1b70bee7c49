//! Scratch driver: MTB fixed points for the anchor channels.
//!
//! Usage: scratch_mtb <case> with case in {do80, do40, ll02, ll18, lossy02,
//! lossy15, lossy18}.

use mtb_core::optimizer::find_mtb;
use mtb_core::signal;
use mtb_core::{FiberParams, SsfmConfig};

fn main() {
    let case = std::env::args().nth(1).unwrap_or_else(|| "do80".into());
    let (energy, fiber) = match case.as_str() {
        "do80" => (1e-12, FiberParams::new(0.0, -21.7, 0.0, 80.0).unwrap()),
        "do40" => (1e-12, FiberParams::new(0.0, -21.7, 0.0, 40.0).unwrap()),
        "ll02" => (0.2e-12, FiberParams::new(0.0, -21.7, 1.2, 80.0).unwrap()),
        "ll18" => (1.8e-12, FiberParams::new(0.0, -21.7, 1.2, 80.0).unwrap()),
        "lossy02" => (0.2e-12, FiberParams::new(0.2, -21.7, 1.2, 80.0).unwrap()),
        "lossy15" => (1.5e-12, FiberParams::new(0.2, -21.7, 1.2, 80.0).unwrap()),
        "lossy18" => (1.8e-12, FiberParams::new(0.2, -21.7, 1.2, 80.0).unwrap()),
        other => panic!("unknown case {other}"),
    };
    let cfg = SsfmConfig::default();
    let t0 = std::time::Instant::now();
    let r = find_mtb(energy, 50e9, 1e-4, &fiber, &cfg).unwrap();
    println!(
        "[{case}] t* = {:.3} ps in {:.1?} ({} evaluations)",
        r.t_star * 1e12,
        t0.elapsed(),
        r.evaluations.len()
    );
    println!(
        "[{case}] rx = {:.3} ps, inband = {:.9}, tx_check = {:.3} ps",
        r.design.rx_duration * 1e12,
        r.design.inband,
        r.design.tx_duration_check * 1e12
    );
    let bw = signal::effective_bandwidth(&r.design.pulse, 1e-4).unwrap();
    println!("[{case}] design effective bandwidth = {:.3} GHz", bw * 1e-9);
    for (t, rx) in &r.evaluations {
        println!("  t_p {:8.3} ps -> rx {:8.3} ps", t * 1e12, rx * 1e12);
    }
    for d in &r.diagnostics {
        println!("diag: {d}");
    }
}
