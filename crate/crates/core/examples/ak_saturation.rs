//! Closed Arthurs-Kelly measurement: the optimal pointer width `κ²t²/4`
//! makes the Gaussian ground state saturate the collective bound.

use pointer_entropy::distributions::{broadened_marginal, Axis, DEFAULT_GRID_POINTS};
use pointer_entropy::dynamics::{build_grid, inference_coefficients, propagate};
use pointer_entropy::entropy::{collective_entropy, minimal_entropy_state};
use pointer_entropy::model::{
    DiscreteBath, MeasurementChoice, PointerPreparation, QuadraticModel, SystemState,
};
use pointer_entropy::noise::{noise_covariance, Route};

fn main() -> pointer_entropy::Result<()> {
    let kappa = 1.0;
    let model = QuadraticModel::arthurs_kelly(kappa);
    let bath = DiscreteBath::closed();
    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>12}",
        "t", "δX²", "δP²", "bound", "gap"
    );
    for t in [0.5, 1.0, 1.5, 2.0] {
        let prop = propagate(&model, &bath, &build_grid(&[t], 0.01)?)?;
        let coeff = inference_coefficients(&prop, MeasurementChoice::X1X2, t)?;
        let width = (kappa * t).powi(2) / 4.0;
        let cov = noise_covariance(
            &prop,
            &coeff,
            &PointerPreparation::new(width, width)?,
            &bath,
            Route::Direct,
        )?;
        let state = SystemState::Gaussian(minimal_entropy_state(&cov)?);
        let mx = broadened_marginal(&state, cov.var_x(), Axis::Position, DEFAULT_GRID_POINTS)?;
        let mp = broadened_marginal(&state, cov.var_p(), Axis::Momentum, DEFAULT_GRID_POINTS)?;
        let r = collective_entropy(&mx, &mp, &cov)?;
        println!(
            "{t:>5.2} {:>10.6} {:>10.6} {:>10.6} {:>12.3e}",
            cov.var_x(),
            cov.var_p(),
            r.bound,
            r.gap
        );
    }
    Ok(())
}
