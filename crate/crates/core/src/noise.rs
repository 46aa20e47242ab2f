//! Covariance of the noise operators `N_𝒳 = 𝒳(t) − X_S(0)`,
//! `N_𝒫 = 𝒫(t) − P_S(0)`.
//!
//! Two independent routes are provided. [`Route::Direct`] applies the
//! inferred map to the exact initial covariance of pointers and thermal
//! bath modes. [`Route::Kernel`] evaluates `B V Bᵀ` plus the double time
//! integral of `g g Λ ν Λᵀ` with the trapezoidal rule. The direct route is
//! the reference; agreement of the two checks the sign conventions of `Λ`
//! and `ν`.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Matrix3x2, Matrix4};
use rayon::prelude::*;

use crate::dynamics::{lambda_series, InferenceCoefficients, Propagator};
use crate::error::{Error, Result};
use crate::model::{DiscreteBath, PointerPreparation};

/// Tolerance of the Robertson and Schrödinger checks.
pub const BOUND_TOL: f64 = 1e-9;

/// Relative change allowed when the kernel-route step is halved.
pub const CONVERGENCE_TOL: f64 = 1e-4;

/// Symmetrized covariance of `(X_1, X_2, P_1, P_2)` for squeezed vacua.
pub fn pointer_covariance(prep: &PointerPreparation) -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(
        prep.var1,
        prep.var2,
        0.25 / prep.var1,
        0.25 / prep.var2,
    ))
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// Symmetrized thermal second moments `(⟨q²⟩, ⟨k²⟩)` of one oscillator.
pub fn thermal_moments(mass: f64, frequency: f64, beta: f64) -> (f64, f64) {
    let c = coth(0.5 * beta * frequency);
    (c / (2.0 * mass * frequency), 0.5 * mass * frequency * c)
}

/// `ν(τ) = ½ Σ_j coth(β ω_j / 2) cos(ω_j τ) g_j g_jᵀ / (m_j ω_j)`.
pub fn kernel_at(bath: &DiscreteBath, beta: f64, tau: f64) -> Matrix3<f64> {
    bath.modes
        .iter()
        .map(|m| 0.5 * coth(0.5 * beta * m.frequency) * (m.frequency * tau).cos() * m.weight())
        .fold(Matrix3::zeros(), |acc, x| acc + x)
}

/// Bath noise kernel sampled on a τ grid.
#[derive(Debug, Clone)]
pub struct NoiseKernel {
    pub beta: f64,
    pub taus: Vec<f64>,
    pub samples: Vec<Matrix3<f64>>,
}

pub fn noise_kernel(bath: &DiscreteBath, beta: f64, taus: &[f64]) -> Result<NoiseKernel> {
    if !(beta > 0.0) {
        return Err(Error::InvalidModel(format!("beta {beta} must be positive")));
    }
    Ok(NoiseKernel {
        beta,
        taus: taus.to_vec(),
        samples: taus.iter().map(|&t| kernel_at(bath, beta, t)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Direct,
    Kernel,
}

/// Noise covariance split into pointer and bath contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCovariance {
    pub pointer: Matrix2<f64>,
    pub bath: Matrix2<f64>,
    pub route: Route,
}

impl NoiseCovariance {
    pub fn from_total(total: Matrix2<f64>, route: Route) -> Self {
        Self {
            pointer: total,
            bath: Matrix2::zeros(),
            route,
        }
    }

    pub fn total(&self) -> Matrix2<f64> {
        self.pointer + self.bath
    }

    /// `δ_X²`
    pub fn var_x(&self) -> f64 {
        self.total()[(0, 0)]
    }

    /// `δ_P²`
    pub fn var_p(&self) -> f64 {
        self.total()[(1, 1)]
    }

    /// `δ_XP`
    pub fn cov_xp(&self) -> f64 {
        0.5 * (self.total()[(0, 1)] + self.total()[(1, 0)])
    }

    /// `δ_X δ_P`
    pub fn product(&self) -> f64 {
        (self.var_x() * self.var_p()).sqrt()
    }
}

pub fn noise_covariance(
    prop: &Propagator,
    coeff: &InferenceCoefficients,
    prep: &PointerPreparation,
    bath: &DiscreteBath,
    route: Route,
) -> Result<NoiseCovariance> {
    noise_covariance_with_tolerance(prop, coeff, prep, bath, route, CONVERGENCE_TOL)
}

pub fn noise_covariance_with_tolerance(
    prop: &Propagator,
    coeff: &InferenceCoefficients,
    prep: &PointerPreparation,
    bath: &DiscreteBath,
    route: Route,
    convergence_tol: f64,
) -> Result<NoiseCovariance> {
    if prop.layout().modes != bath.len() {
        return Err(Error::InconsistentInput(
            "propagator and bath disagree on the number of modes".into(),
        ));
    }
    let pointer = coeff.b * pointer_covariance(prep) * coeff.b.transpose();
    let bath_part = if bath.is_decoupled() {
        Matrix2::zeros()
    } else {
        match route {
            Route::Direct => direct_bath(prop, coeff, bath),
            Route::Kernel => {
                let (fine, coarse) = kernel_bath(prop, coeff, bath);
                let scale = (pointer + fine).amax().max(f64::MIN_POSITIVE);
                let change = (fine - coarse).amax() / scale;
                if change > convergence_tol {
                    return Err(Error::GridTooCoarse { change });
                }
                fine
            }
        }
    };
    Ok(NoiseCovariance {
        pointer: symmetrize(pointer),
        bath: symmetrize(bath_part),
        route,
    })
}

fn symmetrize(m: Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (m + m.transpose())
}

fn direct_bath(
    prop: &Propagator,
    coeff: &InferenceCoefficients,
    bath: &DiscreteBath,
) -> Matrix2<f64> {
    let layout = prop.layout();
    let rows = coeff.noise_rows();
    let mut out = Matrix2::zeros();
    for (j, mode) in bath.modes.iter().enumerate() {
        let (qq, kk) = thermal_moments(mode.mass, mode.frequency, bath.beta);
        for (col, var) in [(layout.q(j), qq), (layout.k(j), kk)] {
            let v = nalgebra::Vector2::new(rows[(0, col)], rows[(1, col)]);
            out += var * v * v.transpose();
        }
    }
    out
}

/// Trapezoidal weight of each grid point for `∫₀ᵗ g(s) f(s) ds`, with
/// `g` taken inside each interval.
fn switch_weights(grid: &[f64], points: &[usize], bath: &DiscreteBath) -> Vec<f64> {
    let mut w = vec![0.0; points.len()];
    for k in 0..points.len().saturating_sub(1) {
        let (a, b) = (grid[points[k]], grid[points[k + 1]]);
        let g = *bath.switch.at(0.5 * (a + b));
        w[k] += 0.5 * (b - a) * g;
        w[k + 1] += 0.5 * (b - a) * g;
    }
    w
}

fn is_uniform(grid: &[f64]) -> bool {
    match grid {
        [] | [_] => true,
        _ => {
            let h = grid[1] - grid[0];
            grid.windows(2)
                .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
        }
    }
}

/// Every other grid point, keeping the end point and all switch breaks.
fn halved_points(grid: &[f64], bath: &DiscreteBath) -> Vec<usize> {
    let last = grid.len() - 1;
    (0..=last)
        .filter(|&i| {
            i % 2 == 0
                || i == last
                || bath
                    .switch
                    .breaks()
                    .iter()
                    .any(|&b| (b - grid[i]).abs() <= 1e-12 * b.max(1.0))
        })
        .collect()
}

/// Bath double integral on the full grid and on the halved grid.
fn kernel_bath(
    prop: &Propagator,
    coeff: &InferenceCoefficients,
    bath: &DiscreteBath,
) -> (Matrix2<f64>, Matrix2<f64>) {
    let grid = &prop.grid()[..=coeff.index];
    let lambdas = lambda_series(prop, coeff);
    let uniform = is_uniform(grid);
    let lag_table = if uniform {
        let h = if grid.len() > 1 {
            grid[1] - grid[0]
        } else {
            0.0
        };
        let taus: Vec<f64> = (0..grid.len()).map(|k| k as f64 * h).collect();
        Some(
            noise_kernel(bath, bath.beta, &taus)
                .expect("validated beta")
                .samples,
        )
    } else {
        None
    };
    let nu = |a: usize, b: usize| -> Matrix3<f64> {
        match &lag_table {
            Some(t) => t[a.abs_diff(b)],
            None => kernel_at(bath, bath.beta, grid[a] - grid[b]),
        }
    };

    let integrate = |points: &[usize]| -> Matrix2<f64> {
        let weights = switch_weights(grid, points, bath);
        let right: Vec<Matrix3x2<f64>> = points
            .iter()
            .zip(&weights)
            .map(|(&p, &w)| w * lambdas[p].transpose())
            .collect();
        let partial: Vec<Matrix2<f64>> = points
            .par_iter()
            .zip(weights.par_iter())
            .map(|(&a, &wa)| {
                if wa == 0.0 {
                    return Matrix2::zeros();
                }
                let mut inner = Matrix3x2::zeros();
                for (&b, r) in points.iter().zip(&right) {
                    inner += nu(a, b) * r;
                }
                let left: Matrix2x3<f64> = wa * lambdas[a];
                left * inner
            })
            .collect();
        partial.iter().fold(Matrix2::zeros(), |acc, m| acc + m)
    };

    let all: Vec<usize> = (0..grid.len()).collect();
    let fine = integrate(&all);
    let coarse = if grid.len() > 2 {
        integrate(&halved_points(grid, bath))
    } else {
        fine
    };
    (fine, coarse)
}

/// Outcome of the Robertson and Schrödinger checks on a noise covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBoundReport {
    /// `δ_X δ_P`
    pub product: f64,
    pub robertson_ok: bool,
    pub schroedinger_ok: bool,
}

pub fn check_noise_bound(cov: &NoiseCovariance) -> Result<NoiseBoundReport> {
    let (vx, vp, c) = (cov.var_x(), cov.var_p(), cov.cov_xp());
    let det = vx * vp - c * c;
    let scale = (vx * vp).abs().max(1.0);
    if !(vx >= 0.0 && vp >= 0.0 && det >= -1e-12 * scale) {
        return Err(Error::InconsistentInput(format!(
            "noise covariance ({vx}, {vp}, {c}) is not positive semidefinite"
        )));
    }
    let product = (vx * vp).sqrt();
    Ok(NoiseBoundReport {
        product,
        robertson_ok: product >= 0.5 - BOUND_TOL,
        schroedinger_ok: vx * vp >= c * c + 0.25 - BOUND_TOL,
    })
}
