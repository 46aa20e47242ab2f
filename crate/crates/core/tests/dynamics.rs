mod common;

use nalgebra::{DMatrix, DVector, Matrix2x3, Matrix2x4, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use pointer_entropy::dynamics::{
    build_grid, inference_coefficients, inferred_commutator, lambda_kernel, lambda_series,
    propagate, response_kernel, symplectic_defect,
};
use pointer_entropy::model::{
    assemble_generator, discretize_bath, BathSpec, DiscreteBath, Interaction, Layout,
    MeasurementChoice, Piecewise, QuadraticModel,
};
use pointer_entropy::Error;

fn model_from_seed(seed: u64) -> QuadraticModel {
    random_model(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn small_bath(seed: u64, modes: usize) -> DiscreteBath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    discretize_bath(&BathSpec::Discrete {
        masses: (0..modes).map(|_| rng.random_range(0.5..2.0)).collect(),
        frequencies: (0..modes).map(|_| rng.random_range(0.3..3.0)).collect(),
        couplings: (0..modes)
            .map(|_| {
                [
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                ]
            })
            .collect(),
        beta: rng.random_range(0.5..3.0),
        switch: Piecewise::constant(1.0),
    })
    .unwrap()
}

/// Energy `½ zᵀ H z` written term by term, independent of the Hessian
/// assembly in the library.
fn energy(model: &QuadraticModel, bath: &DiscreteBath, t: f64, z: &DVector<f64>) -> f64 {
    let n = bath.len();
    let (x, p) = ([z[0], z[1], z[2]], [z[3], z[4], z[5]]);
    let mut e = 0.0;
    for (pi, m) in p.iter().zip(&model.masses) {
        e += 0.5 * pi * pi * m.inverse();
    }
    let seg = model.interaction.at(t);
    for (xi, c) in x.iter().zip(&seg.potentials) {
        e += c * xi * xi;
    }
    let sys = [x[0], p[0]];
    let ptr = [x[1], x[2], p[1], p[2]];
    for (r, s) in sys.iter().enumerate() {
        for (c, q) in ptr.iter().enumerate() {
            e += seg.coupling[(r, c)] * s * q;
        }
    }
    let g = *bath.switch.at(t);
    for (j, m) in bath.modes.iter().enumerate() {
        let (q, k) = (z[6 + j], z[6 + n + j]);
        e += k * k / (2.0 * m.mass) + 0.5 * m.mass * m.frequency * m.frequency * q * q;
        e += g * q * (m.coupling[0] * x[0] + m.coupling[1] * x[1] + m.coupling[2] * x[2]);
    }
    e
}

/// Hamilton's equations from central differences of the energy (exact
/// for a quadratic form up to roundoff).
fn hamilton_rhs(
    model: &QuadraticModel,
    bath: &DiscreteBath,
    t: f64,
    z: &DVector<f64>,
) -> DVector<f64> {
    let dim = z.len();
    let n = bath.len();
    let grad = DVector::from_fn(dim, |i, _| {
        let mut a = z.clone();
        let mut b = z.clone();
        a[i] += 1e-3;
        b[i] -= 1e-3;
        (energy(model, bath, t, &a) - energy(model, bath, t, &b)) / 2e-3
    });
    // Coordinates (X_S, X_1, X_2) pair with (P_S, P_1, P_2); q_j with k_j.
    DVector::from_fn(dim, |i, _| match i {
        0..=2 => grad[i + 3],
        3..=5 => -grad[i - 3],
        _ if i < 6 + n => grad[i + n],
        _ => -grad[i - n],
    })
}

#[test]
fn generator_matches_hand_written_hamilton_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..10 {
        let model = model_from_seed(seed);
        let bath = small_bath(seed, 3);
        let g = assemble_generator(&model, &bath, 0.4);
        let z = DVector::from_fn(g.nrows(), |_, _| rng.random_range(-1.0..1.0));
        let err = (&g * &z - hamilton_rhs(&model, &bath, 0.4, &z)).amax();
        assert!(err < 1e-9, "seed {seed}: {err}");
    }
}

#[test]
fn arthurs_kelly_equations_of_motion() {
    let g = assemble_generator(
        &QuadraticModel::arthurs_kelly(1.0),
        &DiscreteBath::closed(),
        0.0,
    );
    let mut expected = DMatrix::zeros(6, 6);
    expected[(1, 0)] = 1.0; // dX_1/dt = X_S
    expected[(2, 3)] = 1.0; // dX_2/dt = P_S
    expected[(0, 5)] = 1.0; // dX_S/dt = P_2
    expected[(3, 4)] = -1.0; // dP_S/dt = -P_1
    assert_eq!(g, expected);
}

#[test]
fn arthurs_kelly_flow_matches_closed_form() {
    for (kappa, t) in [(1.0, 1.0), (0.7, 2.3), (2.0, 0.15)] {
        let model = QuadraticModel::arthurs_kelly(kappa);
        let grid = build_grid(&[t], 0.01).unwrap();
        let prop = propagate(&model, &DiscreteBath::closed(), &grid).unwrap();
        let err = (prop.map(grid.len() - 1, 0) - ak_flow(kappa, t)).amax();
        assert!(err < 1e-12, "κ={kappa} t={t}: {err}");
    }
}

#[test]
fn arthurs_kelly_inference_coefficients() {
    let (kappa, t) = (1.3, 0.8);
    let (_, coeff) = setup(
        &QuadraticModel::arthurs_kelly(kappa),
        &DiscreteBath::closed(),
        MeasurementChoice::X1X2,
        t,
        0.1,
    )
    .unwrap();
    let kt = kappa * t;
    assert!((coeff.a - nalgebra::Matrix2::new(1.0 / kt, 0.0, 0.0, 1.0 / kt)).amax() < 1e-13);
    let b = Matrix2x4::new(1.0 / kt, 0.0, 0.0, kt / 2.0, 0.0, 1.0 / kt, -kt / 2.0, 0.0);
    assert!((coeff.b - b).amax() < 1e-13);
}

#[test]
fn arthurs_kelly_lambda_rows() {
    let (kappa, t) = (1.5, 1.2);
    let model = QuadraticModel::arthurs_kelly(kappa);
    let grid = build_grid(&[t], 0.05).unwrap();
    let prop = propagate(&model, &DiscreteBath::closed(), &grid).unwrap();
    let coeff = inference_coefficients(&prop, MeasurementChoice::X1X2, t).unwrap();
    let series = lambda_series(&prop, &coeff);
    for (k, &s) in grid.iter().enumerate() {
        let tau = t - s;
        let kt = kappa * t;
        let h = 0.5 * kappa * kappa * tau * tau;
        let expected = Matrix2x3::new(0.0, 0.0, h / kt, kappa * tau / kt, -h / kt, 0.0);
        assert!((series[k] - expected).amax() < 1e-12, "s={s}");
        if k % 6 == 0 {
            let direct = lambda_kernel(&prop, &coeff, t, s).unwrap();
            assert!((direct - series[k]).amax() < 1e-13);
        }
    }
}

/// Time-dependent model with finite masses, a coupling pulse, and a bath
/// switched on late.
fn pulsed_setup() -> (QuadraticModel, DiscreteBath) {
    let mut base = model_from_seed(3);
    let later = Interaction {
        potentials: [0.05, -0.1, 0.2],
        coupling: Matrix2x4::new(0.3, -0.8, 0.5, 0.1, 0.9, 0.2, -0.4, 0.6),
    };
    let first = *base.interaction.at(0.0);
    base.interaction =
        Piecewise::from_segments(vec![(0.5, first), (0.75, later)], Interaction::zero()).unwrap();
    let mut bath = small_bath(3, 2);
    bath.switch = Piecewise::from_segments(vec![(0.25, 0.0)], 1.0).unwrap();
    (base, bath)
}

#[test]
fn propagator_matches_runge_kutta_oracle() {
    let (model, bath) = pulsed_setup();
    let t = 1.75;
    let mut knots = vec![t];
    knots.extend(pointer_entropy::model::discontinuities(&model, &bath));
    let grid = build_grid(&knots, 0.05).unwrap();
    let prop = propagate(&model, &bath, &grid).unwrap();
    let oracle = rk4_flow(
        Layout::new(bath.len()).dim(),
        |s| assemble_generator(&model, &bath, s),
        t,
        7000,
    );
    let err = (prop.map(grid.len() - 1, 0) - oracle).amax();
    assert!(err < 1e-9, "{err}");
}

#[test]
fn grid_must_contain_discontinuities() {
    let (model, bath) = pulsed_setup();
    let grid = build_grid(&[2.0], 0.3).unwrap();
    assert!(matches!(
        propagate(&model, &bath, &grid),
        Err(Error::SegmentMismatch { .. })
    ));
}

#[test]
fn structural_blindness_of_momentum_pair() {
    let model = QuadraticModel::arthurs_kelly(1.0);
    let grid = build_grid(&[0.5, 1.0, 2.0], 0.1).unwrap();
    let prop = propagate(&model, &DiscreteBath::closed(), &grid).unwrap();
    for &t in &grid {
        assert!(matches!(
            inference_coefficients(&prop, MeasurementChoice::P1P2, t),
            Err(Error::NotInvertible { .. })
        ));
    }
    assert!(inference_coefficients(&prop, MeasurementChoice::X1X2, 0.5).is_ok());
}

#[test]
fn response_kernel_is_stationary_for_constant_couplings() {
    let model = model_from_seed(5);
    let bath = small_bath(5, 3);
    let h = 0.01;
    let grid = build_grid(&[2.0], h).unwrap();
    let prop = propagate(&model, &bath, &grid).unwrap();
    for choice in MeasurementChoice::ALL {
        for (t, s) in [(1.0, 0.3), (1.5, 1.5), (0.7, 0.0)] {
            let a = response_kernel(&prop, choice, t, s).unwrap();
            let b = response_kernel(&prop, choice, t + 37.0 * h, s + 37.0 * h).unwrap();
            assert!((a - b).amax() < 1e-8, "{choice:?} ({t}, {s})");
        }
    }
}

#[test]
fn decoupled_bath_leaves_system_block_untouched() {
    let model = model_from_seed(9);
    let closed = assemble_generator(&model, &DiscreteBath::closed(), 0.3);
    for (gamma, pattern) in [(0.0, [true; 3]), (0.2, [false; 3])] {
        let bath = ohmic_bath(gamma, 2.0, 8, 1.0, pattern);
        let g = assemble_generator(&model, &bath, 0.3);
        let layout = Layout::new(bath.len());
        let sys = [0, 1, 2, 3, 4, 5];
        for (r, &a) in sys.iter().enumerate() {
            for (c, &b) in sys.iter().enumerate() {
                assert_eq!(g[(a, b)], closed[(r, c)]);
            }
            for j in 0..bath.len() {
                for other in [layout.q(j), layout.k(j)] {
                    assert_eq!(g[(a, other)], 0.0);
                    assert_eq!(g[(other, a)], 0.0);
                }
            }
        }
    }
}

#[test]
fn ohmic_weight_matches_quadrature() {
    let (gamma, cutoff) = (0.1, 5.0);
    let bath = ohmic_bath(gamma, cutoff, 64, 1.0, [true, false, false]);
    let total: f64 = bath.spectral_weights().iter().map(|w| w.1).sum();
    let exact = simpson(
        |w| gamma * w * (-w / cutoff).exp(),
        0.0,
        8.0 * cutoff,
        200_000,
    );
    assert!((total - exact).abs() < 0.01 * exact, "{total} vs {exact}");
}

#[test]
fn ohmic_weight_error_shrinks_with_mode_count() {
    let (gamma, cutoff) = (0.3, 1.5);
    let exact = simpson(
        |w| gamma * w * (-w / cutoff).exp(),
        0.0,
        8.0 * cutoff,
        200_000,
    );
    let err = |n: usize| {
        let total: f64 = ohmic_bath(gamma, cutoff, n, 1.0, [false, true, false])
            .spectral_weights()
            .iter()
            .map(|w| w.1)
            .sum();
        (total - exact).abs()
    };
    for n in [8, 16, 32, 64] {
        assert!(
            err(2 * n) <= 0.5 * err(n),
            "N={n}: {} -> {}",
            err(n),
            err(2 * n)
        );
    }
}

#[test]
fn single_discrete_mode_is_verbatim() {
    let bath = discretize_bath(&BathSpec::Discrete {
        masses: vec![1.0],
        frequencies: vec![2.0],
        couplings: vec![[0.3, 0.0, 0.0]],
        beta: 1.0,
        switch: Piecewise::constant(1.0),
    })
    .unwrap();
    assert_eq!(bath.len(), 1);
    assert_eq!(bath.modes[0].coupling, Vector3::new(0.3, 0.0, 0.0));
    assert_eq!(bath.spectral_weights(), vec![(2.0, 0.09 / 2.0)]);
}

fn arb_case() -> impl Strategy<Value = (u64, usize, f64)> {
    (any::<u64>(), 0usize..4, 0.2f64..2.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_is_hamiltonian((seed, modes, t) in arb_case()) {
        let model = model_from_seed(seed);
        let bath = small_bath(seed, modes);
        let g = assemble_generator(&model, &bath, t);
        let jg = Layout::new(modes).symplectic_form() * &g;
        prop_assert!((&jg - jg.transpose()).amax() < 1e-12);
    }

    #[test]
    fn flow_is_symplectic_and_composes((seed, modes, t) in arb_case()) {
        let model = model_from_seed(seed);
        let bath = small_bath(seed, modes);
        let grid = build_grid(&[t], 0.02).unwrap();
        let prop = propagate(&model, &bath, &grid).unwrap();
        let j = prop.layout().symplectic_form();
        let last = grid.len() - 1;
        let mid = last / 3;
        for (i, k) in [(last, 0), (mid, 0), (last, mid), (mid + 1, mid)] {
            prop_assert!(symplectic_defect(&prop.map(i, k), &j) < 1e-9);
        }
        let composed = prop.map(last, mid) * prop.map(mid, 0);
        prop_assert!((composed - prop.map(last, 0)).amax() < 1e-9);
    }

    #[test]
    fn inferred_observables_commute_and_retrodict((seed, modes, t) in arb_case()) {
        let model = model_from_seed(seed);
        let bath = small_bath(seed, modes);
        let grid = build_grid(&[t], 0.05).unwrap();
        let prop = propagate(&model, &bath, &grid).unwrap();
        for choice in MeasurementChoice::ALL {
            let Ok(coeff) = inference_coefficients(&prop, choice, t) else { continue };
            prop_assert!(inferred_commutator(&prop, &coeff).abs() < 1e-9);
            let r = &coeff.inferred_rows;
            let block = nalgebra::Matrix2::new(r[(0, 0)], r[(0, 3)], r[(1, 0)], r[(1, 3)]);
            prop_assert!((block - nalgebra::Matrix2::identity()).amax() < 1e-10);
        }
    }
}
