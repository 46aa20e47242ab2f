//! Bath-induced noise of an Arthurs-Kelly measurement computed by direct
//! propagation of the bath modes and by the noise-kernel double integral.

use pointer_entropy::dynamics::{build_grid, inference_coefficients, propagate};
use pointer_entropy::model::{
    discretize_bath, BathSpec, MeasurementChoice, OhmicExponential, Piecewise, PointerPreparation,
    QuadraticModel,
};
use pointer_entropy::noise::{noise_covariance, Route};

fn main() -> pointer_entropy::Result<()> {
    let bath = discretize_bath(&BathSpec::Continuous {
        family: OhmicExponential {
            gamma: 0.05,
            cutoff: 1.0,
        },
        beta: 1.0,
        modes: 32,
        switch: Piecewise::constant(1.0),
        pattern: [true; 3],
    })?;
    let model = QuadraticModel::arthurs_kelly(1.0);
    let prep = PointerPreparation::new(0.25, 0.25)?;
    for t in [0.5, 1.0, 2.0] {
        let prop = propagate(&model, &bath, &build_grid(&[t], 1e-3)?)?;
        let coeff = inference_coefficients(&prop, MeasurementChoice::X1X2, t)?;
        let direct = noise_covariance(&prop, &coeff, &prep, &bath, Route::Direct)?;
        let kernel = noise_covariance(&prop, &coeff, &prep, &bath, Route::Kernel)?;
        println!("t = {t}");
        println!("  direct bath block {:?}", direct.bath.as_slice());
        println!("  kernel bath block {:?}", kernel.bath.as_slice());
        println!("  δX²δP² − δXP² = {:.6}", direct.product());
    }
    Ok(())
}
