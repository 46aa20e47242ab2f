//! The entropy-power inequality in Lieb's form and the Hirschman bound for
//! a few position-momentum states.

use pointer_entropy::distributions::GridDensity;
use pointer_entropy::entropy::{
    gaussian_entropy, gaussian_lambda, hirschman_bound, hirschman_check, lieb_bound,
};
use pointer_entropy::model::{GaussianState, SystemState};

fn main() -> pointer_entropy::Result<()> {
    let (vf, vg) = (1.0, 3.0);
    let (sf, sg) = (gaussian_entropy(vf), gaussian_entropy(vg));
    println!("entropy of the sum: {:.6}", gaussian_entropy(vf + vg));
    for lambda in [0.1, gaussian_lambda(vf, vg), 0.5, 0.9] {
        println!(
            "  λ = {lambda:.3}: bound {:.6}",
            lieb_bound(sf, sg, lambda)?
        );
    }

    println!("Hirschman bound: {:.6}", hirschman_bound());
    let squeezed = SystemState::Gaussian(GaussianState::new(0.0, 0.0, 0.1, 2.5, 0.0)?);
    let thermal = SystemState::Gaussian(GaussianState::new(0.0, 0.0, 1.5, 1.5, 0.0)?);
    let w = 0.8_f64;
    let fock = SystemState::tabulated(
        GridDensity::sample(-10.0, 10.0, 2001, |x| {
            x * x * (-x * x / (2.0 * w * w)).exp()
        })?
        .normalized()?,
        GridDensity::sample(-10.0, 10.0, 2001, |p| p * p * (-2.0 * w * w * p * p).exp())?
            .normalized()?,
    )?;
    for (name, state) in [
        ("squeezed", squeezed),
        ("thermal", thermal),
        ("first excited", fock),
    ] {
        let r = hirschman_check(&state)?;
        println!(
            "  {name:<14} S_x + S_p = {:.6} ({})",
            r.sum,
            if r.ok { "ok" } else { "violated" }
        );
    }
    Ok(())
}
