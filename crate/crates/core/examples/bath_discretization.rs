//! Ohmic spectral density with exponential cutoff reduced to discrete modes.

use pointer_entropy::model::{discretize_bath, BathSpec, OhmicExponential, Piecewise};
use pointer_entropy::noise::kernel_at;

fn main() -> pointer_entropy::Result<()> {
    let family = OhmicExponential {
        gamma: 0.1,
        cutoff: 1.0,
    };
    for modes in [8, 32, 128] {
        let bath = discretize_bath(&BathSpec::Continuous {
            family,
            beta: 2.0,
            modes,
            switch: Piecewise::constant(1.0),
            pattern: [true, false, false],
        })?;
        let total: f64 = bath.spectral_weights().iter().map(|(_, w)| w).sum();
        let nu0 = kernel_at(&bath, bath.beta, 0.0)[(0, 0)];
        println!("N = {modes:>4}: Σ weights = {total:.6}, ν(0) = {nu0:.6}");
    }
    let bath = discretize_bath(&BathSpec::Continuous {
        family,
        beta: 2.0,
        modes: 8,
        switch: Piecewise::constant(1.0),
        pattern: [true, false, false],
    })?;
    let delta = 8.0 * family.cutoff / 8.0;
    for (omega, weight) in bath.spectral_weights() {
        println!(
            "  ω = {omega:.3}  weight = {weight:.5}  I(ω)·Δ = {:.5}",
            family.density(omega) * delta
        );
    }
    Ok(())
}
