//! Which pointer pairs allow the system position and momentum to be
//! inferred, and how well conditioned the inference is.

use pointer_entropy::dynamics::{build_grid, inference_coefficients, propagate};
use pointer_entropy::model::{DiscreteBath, MeasurementChoice, QuadraticModel};

fn main() -> pointer_entropy::Result<()> {
    let model = QuadraticModel::arthurs_kelly(1.0);
    let bath = DiscreteBath::closed();
    let t = 1.0;
    let prop = propagate(&model, &bath, &build_grid(&[t], 0.01)?)?;
    for choice in MeasurementChoice::ALL {
        match inference_coefficients(&prop, choice, t) {
            Ok(c) => println!(
                "{:<6} condition {:.3e}, A = {:?}",
                choice.name(),
                c.condition,
                c.a.as_slice()
            ),
            Err(e) => println!("{:<6} {e}", choice.name()),
        }
    }
    Ok(())
}
