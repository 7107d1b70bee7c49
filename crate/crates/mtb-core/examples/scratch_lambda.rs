//! Scratch driver: lambda convergence under grid refinement.

use mtb_core::basis::build_basis;
use mtb_core::signal::TimeGrid;

fn main() {
    let t_p = 100e-12;
    let w = 50e9;
    let mut prev: Option<Vec<f64>> = None;
    for over in [8usize, 16, 32, 64, 128, 256] {
        let dt = 1.0 / (over as f64 * w);
        let n = ((8.0 * t_p / dt).ceil() as usize).next_power_of_two();
        let grid = TimeGrid::new(n, dt).unwrap();
        let t0 = std::time::Instant::now();
        let basis = build_basis(t_p, w, None, grid).unwrap();
        let lambdas = basis.lambdas().to_vec();
        if let Some(p) = &prev {
            let worst = p
                .iter()
                .zip(&lambdas)
                .map(|(a, b)| (a - b).abs())
                .enumerate()
                .max_by(|(_, x), (_, y)| x.partial_cmp(y).unwrap())
                .unwrap();
            println!(
                "{over:>4}x vs previous: max |dlambda| = {:.3e} at k = {} ({:.2?})",
                worst.1,
                worst.0,
                t0.elapsed()
            );
        } else {
            println!("{over:>4}x baseline ({:.2?})", t0.elapsed());
        }
        prev = Some(lambdas);
    }
}
