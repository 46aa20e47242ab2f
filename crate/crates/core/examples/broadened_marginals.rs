//! Pointer readout distributions of a cat state: the tabulated marginal is
//! convolved with the Gaussian measurement noise.

use pointer_entropy::distributions::{convolve_gaussian, GridDensity, DEFAULT_GRID_POINTS};
use pointer_entropy::entropy::grid_entropy;

fn main() -> pointer_entropy::Result<()> {
    let (a, s) = (2.0_f64, 0.5_f64);
    let position = GridDensity::sample(-a - 6.0, a + 6.0, 2001, |x| {
        let g = |c: f64| (-(x - c) * (x - c) / (4.0 * s * s)).exp();
        (g(a) + g(-a)).powi(2)
    })?
    .normalized()?;
    println!(
        "input: variance {:.4}, entropy {:.4}",
        position.variance(),
        grid_entropy(&position)?
    );
    for noise in [0.01, 0.25, 1.0, 4.0] {
        let out = convolve_gaussian(&position, noise, DEFAULT_GRID_POINTS)?;
        println!(
            "δ² = {noise:<5} variance {:.4}, entropy {:.4}, peak {:.4}",
            out.variance(),
            grid_entropy(&out)?,
            out.values.iter().cloned().fold(0.0, f64::max)
        );
    }
    Ok(())
}
