//! Differential entropies (in nats), the collective entropy of the two
//! inferred marginals, and the entropic lower bounds it obeys.

use std::f64::consts::{E, PI};

use crate::distributions::{Gaussian1d, GridDensity, Marginal};
use crate::error::{Error, Result};
use crate::model::{GaussianState, SystemState};
use crate::noise::NoiseCovariance;

/// Densities below this are treated as zero in `p ln p`.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Gap below which the collective entropy counts as saturating its bound.
pub const SATURATION_TOL: f64 = 1e-6;

const NORMALIZATION_TOL: f64 = 1e-6;

pub fn gaussian_entropy(variance: f64) -> f64 {
    0.5 * (2.0 * PI * E * variance).ln()
}

/// `−∫ p ln p` by the trapezoidal rule.
pub fn grid_entropy(density: &GridDensity) -> Result<f64> {
    let norm = density.integral();
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized(norm));
    }
    Ok(density.expect_values(|p| if p < DENSITY_FLOOR { 0.0 } else { -p.ln() }))
}

pub fn differential_entropy(marginal: &Marginal) -> Result<f64> {
    match marginal {
        Marginal::Gaussian(Gaussian1d { variance, .. }) => Ok(gaussian_entropy(*variance)),
        Marginal::Grid(d) => grid_entropy(d),
    }
}

/// `1 + ln[2π(δ_X δ_P + 1/2)]`
pub fn collective_bound(noise_product: f64) -> f64 {
    1.0 + (2.0 * PI * (noise_product + 0.5)).ln()
}

/// Weight maximizing the single-parameter bound, `1 / (1 + 2 δ_X δ_P)`.
pub fn optimal_lambda(noise_product: f64) -> f64 {
    1.0 / (1.0 + 2.0 * noise_product)
}

/// `1 − λ ln(λ/π) + (1−λ) ln(2π δ_X δ_P / (1−λ))`, the collective-entropy
/// bound for a fixed weight `λ ∈ (0, 1)`.
pub fn single_lambda_bound(lambda: f64, noise_product: f64) -> f64 {
    1.0 - lambda * (lambda / PI).ln()
        + (1.0 - lambda) * (2.0 * PI * noise_product / (1.0 - lambda)).ln()
}

fn x_ln_x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Lower bound on the entropy of a convolution `f ∗ g` from the entropies
/// of `f` and `g`.
pub fn lieb_bound(entropy_f: f64, entropy_g: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    Ok(lambda * entropy_f + (1.0 - lambda) * entropy_g
        - 0.5 * (x_ln_x(lambda) + x_ln_x(1.0 - lambda)))
}

/// The weight at which the convolution bound is tight for two Gaussians.
pub fn gaussian_lambda(var_f: f64, var_g: f64) -> f64 {
    var_f / (var_f + var_g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub entropy_x: f64,
    pub entropy_p: f64,
    pub total: f64,
    pub bound: f64,
    pub gap: f64,
    pub lambda: f64,
    pub saturated: bool,
}

pub fn collective_entropy(
    marginal_x: &Marginal,
    marginal_p: &Marginal,
    cov: &NoiseCovariance,
) -> Result<EntropyReport> {
    let entropy_x = differential_entropy(marginal_x)?;
    let entropy_p = differential_entropy(marginal_p)?;
    let total = entropy_x + entropy_p;
    let product = cov.product();
    let bound = collective_bound(product);
    let gap = total - bound;
    Ok(EntropyReport {
        entropy_x,
        entropy_p,
        total,
        bound,
        gap,
        lambda: optimal_lambda(product),
        saturated: gap.abs() < SATURATION_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HirschmanReport {
    pub sum: f64,
    pub bound: f64,
    pub ok: bool,
}

/// `1 + ln π`
pub fn hirschman_bound() -> f64 {
    1.0 + PI.ln()
}

/// Position plus momentum entropy of the system state against `1 + ln π`.
pub fn hirschman_check(state: &SystemState) -> Result<HirschmanReport> {
    let sum = match state {
        SystemState::Gaussian(g) => gaussian_entropy(g.var_x) + gaussian_entropy(g.var_p),
        SystemState::Tabulated { position, momentum } => {
            grid_entropy(position)? + grid_entropy(momentum)?
        }
    };
    let bound = hirschman_bound();
    Ok(HirschmanReport {
        sum,
        bound,
        ok: sum >= bound - SATURATION_TOL,
    })
}

/// Pure Gaussian state that saturates the collective-entropy bound for the
/// given noise: `σ_x² = δ_X / (2 δ_P)`, `σ_p² = 1 / (4 σ_x²)`.
pub fn minimal_entropy_state(cov: &NoiseCovariance) -> Result<GaussianState> {
    let var_x = cov.var_x().sqrt() / (2.0 * cov.var_p().sqrt());
    GaussianState::new(0.0, 0.0, var_x, 0.25 / var_x, 0.0)
}

impl GridDensity {
    /// Trapezoidal `∫ p(x) f(p(x)) dx`.
    pub(crate) fn expect_values(&self, f: impl Fn(f64) -> f64) -> f64 {
        let n = self.values.len();
        self.values
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
                w * self.spacing * p * f(p)
            })
            .sum()
    }
}
