//! The pure Gaussian state that minimises the collective entropy for the
//! noise of an open measurement, and the gap of nearby states.

use pointer_entropy::distributions::{broadened_marginal, Axis, DEFAULT_GRID_POINTS};
use pointer_entropy::dynamics::{build_grid, inference_coefficients, propagate};
use pointer_entropy::entropy::{collective_entropy, minimal_entropy_state};
use pointer_entropy::model::{GaussianState, SystemState};
use pointer_entropy::noise::{noise_covariance, Route};
use pointer_entropy::scenario::preset;

fn main() -> pointer_entropy::Result<()> {
    let scenario = preset("ak-ohmic")?.build(None)?;
    let t = 1.0;
    let prop = propagate(&scenario.model, &scenario.bath, &build_grid(&[t], 0.01)?)?;
    let coeff = inference_coefficients(&prop, scenario.choice, t)?;
    let cov = noise_covariance(
        &prop,
        &coeff,
        &scenario.pointers,
        &scenario.bath,
        Route::Direct,
    )?;
    let best = minimal_entropy_state(&cov)?;
    println!(
        "noise δX² = {:.6}, δP² = {:.6}, δXP = {:.2e}",
        cov.var_x(),
        cov.var_p(),
        cov.cov_xp()
    );
    println!(
        "minimal state: σx² = {:.6}, σp² = {:.6}",
        best.var_x, best.var_p
    );
    for factor in [0.5, 0.9, 1.0, 1.1, 2.0] {
        let vx = factor * best.var_x;
        let state = SystemState::Gaussian(GaussianState::new(0.0, 0.0, vx, 0.25 / vx, 0.0)?);
        let mx = broadened_marginal(&state, cov.var_x(), Axis::Position, DEFAULT_GRID_POINTS)?;
        let mp = broadened_marginal(&state, cov.var_p(), Axis::Momentum, DEFAULT_GRID_POINTS)?;
        println!(
            "  σx² × {factor:<4} gap {:.3e}",
            collective_entropy(&mx, &mp, &cov)?.gap
        );
    }
    Ok(())
}
