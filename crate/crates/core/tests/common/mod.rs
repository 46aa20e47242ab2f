#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2x4};
use rand::Rng;

use pointer_entropy::distributions::GridDensity;
use pointer_entropy::dynamics::{
    build_grid, inference_coefficients, propagate, InferenceCoefficients, Propagator,
};
use pointer_entropy::model::{
    discretize_bath, BathSpec, DiscreteBath, GaussianState, Interaction, Mass, MeasurementChoice,
    OhmicExponential, Piecewise, PointerPreparation, QuadraticModel, SystemState,
};

/// `δ_X²` of the closed Arthurs-Kelly measurement.
pub fn ak_var_x(var1: f64, var2: f64, kappa: f64, t: f64) -> f64 {
    let kt = kappa * t;
    var1 / (kt * kt) + kt * kt / (16.0 * var2)
}

/// `δ_P²` of the closed Arthurs-Kelly measurement.
pub fn ak_var_p(var1: f64, var2: f64, kappa: f64, t: f64) -> f64 {
    ak_var_x(var2, var1, kappa, t)
}

/// Closed-form Arthurs-Kelly flow on the system and pointer block, in the
/// order `(X_S, X_1, X_2, P_S, P_1, P_2)`.
pub fn ak_flow(kappa: f64, t: f64) -> DMatrix<f64> {
    let k = kappa * t;
    let h = 0.5 * k * k;
    let mut m = DMatrix::identity(6, 6);
    m[(0, 5)] = k;
    m[(3, 4)] = -k;
    m[(1, 0)] = k;
    m[(1, 5)] = h;
    m[(2, 3)] = k;
    m[(2, 4)] = -h;
    m
}

pub fn ohmic_bath(
    gamma: f64,
    cutoff: f64,
    modes: usize,
    beta: f64,
    pattern: [bool; 3],
) -> DiscreteBath {
    discretize_bath(&BathSpec::Continuous {
        family: OhmicExponential { gamma, cutoff },
        beta,
        modes,
        switch: Piecewise::constant(1.0),
        pattern,
    })
    .unwrap()
}

pub fn setup(
    model: &QuadraticModel,
    bath: &DiscreteBath,
    choice: MeasurementChoice,
    t: f64,
    max_step: f64,
) -> pointer_entropy::Result<(Propagator, InferenceCoefficients)> {
    let grid = build_grid(&[t], max_step)?;
    let prop = propagate(model, bath, &grid)?;
    let coeff = inference_coefficients(&prop, choice, t)?;
    Ok((prop, coeff))
}

/// Fourth-order Runge-Kutta integration of `dz/dt = G z` for the columns of
/// the identity, with `G` supplied as a function of time. The last stage
/// samples `G` just inside the step so that a jump at the step end is not
/// seen early.
pub fn rk4_flow(
    dim: usize,
    generator: impl Fn(f64) -> DMatrix<f64>,
    t: f64,
    steps: usize,
) -> DMatrix<f64> {
    let h = t / steps as f64;
    let mut z = DMatrix::<f64>::identity(dim, dim);
    for k in 0..steps {
        let s = k as f64 * h;
        let k1 = generator(s) * &z;
        let k2 = generator(s + 0.5 * h) * (&z + 0.5 * h * &k1);
        let k3 = generator(s + 0.5 * h) * (&z + 0.5 * h * &k2);
        let k4 = generator(s + h * (1.0 - 1e-9)) * (&z + h * &k3);
        z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    z
}

/// Composite Simpson rule on `[lo, hi]` with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

fn tabulate(lo: f64, hi: f64, count: usize, f: impl Fn(f64) -> f64) -> GridDensity {
    GridDensity::sample(lo, hi, count, f)
        .unwrap()
        .normalized()
        .unwrap()
}

/// Even superposition of two Gaussian packets at `±a` with width `s`.
pub fn cat_state(a: f64, s: f64) -> SystemState {
    let span = a + 12.0 * s;
    let position = tabulate(-span, span, 2001, |x| {
        let g = |c: f64| (-(x - c) * (x - c) / (4.0 * s * s)).exp();
        let psi = g(a) + g(-a);
        psi * psi
    });
    let pspan = 12.0 / (2.0 * s);
    let momentum = tabulate(-pspan, pspan, 4001, |p| {
        (-2.0 * s * s * p * p).exp() * (p * a).cos().powi(2)
    });
    SystemState::tabulated(position, momentum).unwrap()
}

/// First excited harmonic-oscillator state with position width `s`.
pub fn fock1_state(s: f64) -> SystemState {
    let span = 12.0 * s;
    let position = tabulate(-span, span, 2001, |x| {
        let u = x / s;
        u * u * (-u * u / 2.0).exp()
    });
    let ps = 1.0 / (2.0 * s);
    let pspan = 12.0 * ps;
    let momentum = tabulate(-pspan, pspan, 2001, |p| {
        let u = p / ps;
        u * u * (-u * u / 2.0).exp()
    });
    SystemState::tabulated(position, momentum).unwrap()
}

/// `w·cat + (1 − w)·fock1`, sampled on common grids.
pub fn mixed_state(w: f64, a: f64, s: f64) -> SystemState {
    let span = a + 12.0 * s;
    let cat_x = |x: f64| {
        let g = |c: f64| (-(x - c) * (x - c) / (4.0 * s * s)).exp();
        let psi = g(a) + g(-a);
        psi * psi / (2.0 * (2.0 * PI * s * s).sqrt() * (1.0 + (-a * a / (2.0 * s * s)).exp()))
    };
    let fock_x = |x: f64| {
        let v = 2.0 * s * s;
        x * x * (-x * x / v).exp() / (v * (PI * v).sqrt() / 2.0)
    };
    let position = tabulate(-span, span, 2001, |x| w * cat_x(x) + (1.0 - w) * fock_x(x));
    let pspan = 12.0 / s;
    let cat_p = |p: f64| {
        (-2.0 * s * s * p * p).exp() * (p * a).cos().powi(2) * 2.0 * s * (2.0 / PI).sqrt()
            / (1.0 + (-a * a / (2.0 * s * s)).exp())
    };
    let fock_p = |p: f64| {
        let v = 1.0 / (2.0 * s * s);
        p * p * (-p * p / v).exp() / (v * (PI * v).sqrt() / 2.0)
    };
    let momentum = tabulate(-pspan, pspan, 4001, |p| {
        w * cat_p(p) + (1.0 - w) * fock_p(p)
    });
    SystemState::tabulated(position, momentum).unwrap()
}

pub fn random_gaussian(rng: &mut impl Rng) -> GaussianState {
    let var_x = rng.random_range(0.1..3.0);
    let cov_xp = rng.random_range(-0.5..0.5);
    let excess = rng.random_range(1.0..2.0);
    let var_p = excess * (0.25 + cov_xp * cov_xp) / var_x;
    GaussianState::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        var_x,
        var_p,
        cov_xp,
    )
    .unwrap()
}

/// A random valid quadratic model: optional finite masses, small
/// potentials and a dense random coupling matrix.
pub fn random_model(rng: &mut impl Rng) -> QuadraticModel {
    let mass = |rng: &mut dyn rand::RngCore| {
        if rng.random_bool(0.5) {
            Mass::infinite()
        } else {
            Mass::new(rng.random_range(0.5..5.0)).unwrap()
        }
    };
    let masses = [mass(rng), mass(rng), mass(rng)];
    let potentials = [
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.2..0.2),
    ];
    let coupling = Matrix2x4::from_fn(|_, _| rng.random_range(-1.5..1.5));
    QuadraticModel::new(
        masses,
        Piecewise::constant(Interaction {
            potentials,
            coupling,
        }),
    )
    .unwrap()
}

pub fn random_pointers(rng: &mut impl Rng) -> PointerPreparation {
    PointerPreparation::new(rng.random_range(0.05..2.0), rng.random_range(0.05..2.0)).unwrap()
}
