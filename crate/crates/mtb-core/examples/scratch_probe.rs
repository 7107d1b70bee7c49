//! Scratch driver: raw-launch landscape probe at 1.8 pJ on the lossy
//! fibre, time limit 282 ps. Measures the received duration of truncated
//! sech launches over a t0 ladder, with optional quadratic chirp.

use mtb_core::optimizer::DesignProblem;
use mtb_core::signal::{self, SampledSignal};
use mtb_core::{FiberParams, SsfmConfig};
use num_complex::Complex64;

fn truncated_sech(
    problem: &DesignProblem,
    t0: f64,
    chirp: f64,
) -> SampledSignal {
    let grid = problem.resolve_grid().unwrap();
    let t_half = problem.t_p / 2.0;
    let mut s = SampledSignal::from_fn(grid, |t| {
        if t.abs() <= t_half {
            let mag = 1.0 / (t / t0).cosh();
            let phase = chirp * t * t;
            Complex64::from_polar(mag, phase)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
    .unwrap();
    let e = signal::energy(&s);
    let scale = (problem.energy / e).sqrt();
    for v in s.samples_mut() {
        *v *= scale;
    }
    s
}

fn main() {
    let fiber = FiberParams::new(0.2, -21.7, 1.2, 80.0).unwrap();
    let mode = std::env::args().nth(1).unwrap_or_else(|| "ladder".into());
    if mode == "solve" {
        let t_p: f64 = std::env::args()
            .nth(2)
            .map(|s| s.parse().unwrap())
            .unwrap_or(282e-12);
        let problem = DesignProblem::new(
            1.8e-12,
            t_p,
            50e9,
            1e-4,
            fiber,
            SsfmConfig::default(),
        );
        let t0 = std::time::Instant::now();
        let d = mtb_core::optimizer::minimize_rx_duration(&problem).unwrap();
        println!(
            "solve t_p {:.2} ps: rx {:.3} ps, tx {:.3} ps, inband {:.9} in {:.1?}",
            t_p * 1e12,
            d.rx_duration * 1e12,
            d.tx_duration_check * 1e12,
            d.inband,
            t0.elapsed()
        );
        let h = &d.objective_history;
        if h.len() >= 2 {
            println!(
                "polish history: {} iters, first {:.3}, last two {:.3} / {:.3}",
                h.len(),
                h[0],
                h[h.len() - 2],
                h[h.len() - 1]
            );
        }

        // Where does the dispersion-design start itself land?
        let do_fiber = FiberParams::new(0.2, -21.7, 0.0, 80.0).unwrap();
        let mut nested = problem.clone();
        nested.fiber = do_fiber;
        nested.n_starts = 2;
        let nd = mtb_core::optimizer::minimize_rx_duration(&nested).unwrap();
        println!(
            "DO design at t_p {:.2} ps: rx_do {:.3} ps, tx {:.3} ps",
            t_p * 1e12,
            nd.rx_duration * 1e12,
            nd.tx_duration_check * 1e12
        );
        let rx_kerr =
            mtb_core::propagator::propagate(&nd.pulse, &fiber, &problem.ssfm)
                .unwrap();
        println!(
            "DO design through lossy Kerr: rx {:.3} ps",
            mtb_core::signal::effective_duration(&rx_kerr, problem.eps)
                .unwrap()
                * 1e12
        );
        return;
    }
    let cfg = SsfmConfig::default().unchecked();
    let problem = DesignProblem::new(1.8e-12, 282e-12, 50e9, 1e-4, fiber, cfg);

    let t0_ladder: [f64; 10] = [
        20.06e-12, 24e-12, 28.48e-12, 34e-12, 40e-12, 48e-12, 58e-12, 70e-12,
        85e-12, 100e-12,
    ];
    println!("unchirped ladder (t_p = 282 ps, E = 1.8 pJ, lossy):");
    let mut rows: Vec<(f64, f64, f64, f64, f64)> = Vec::new();
    for &t0 in &t0_ladder {
        let s = truncated_sech(&problem, t0, 0.0);
        let tx = signal::effective_duration(&s, problem.eps).unwrap();
        let inband = signal::band_energy_fraction(&s, problem.w_max).unwrap();
        let rx_sig = mtb_core::propagator::propagate(&s, &fiber, &cfg).unwrap();
        let rx = signal::effective_duration(&rx_sig, problem.eps).unwrap();
        rows.push((t0, tx, rx, inband, 0.0));
        println!(
            "  t0 {:6.2} ps  tx {:7.2} ps  rx {:7.2} ps  inband {:.7}",
            t0 * 1e12,
            tx * 1e12,
            rx * 1e12,
            inband
        );
    }
    rows.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
    let best = rows[0];
    println!(
        "best unchirped: t0 {:.2} ps -> rx {:.2} ps",
        best.0 * 1e12,
        best.2 * 1e12
    );

    println!("chirped variants around the three best t0:");
    for &(t0, ..) in rows.iter().take(3) {
        for c in [-2e20, -1e20, -0.5e20, 0.5e20, 1e20, 2e20] {
            let s = truncated_sech(&problem, t0, c);
            let tx = signal::effective_duration(&s, problem.eps).unwrap();
            let inband =
                signal::band_energy_fraction(&s, problem.w_max).unwrap();
            let rx_sig =
                mtb_core::propagator::propagate(&s, &fiber, &cfg).unwrap();
            let rx = signal::effective_duration(&rx_sig, problem.eps).unwrap();
            println!(
                "  t0 {:6.2} ps  C {:+.1e}  tx {:7.2} ps  rx {:7.2} ps  inband {:.7}",
                t0 * 1e12,
                c,
                tx * 1e12,
                rx * 1e12,
                inband
            );
        }
    }
}
