//! Linear Heisenberg propagation and the inference coefficients `A(t)`,
//! `B(t)` and `Λ(t, s)`.
//!
//! Each grid interval is advanced by the exponential of the generator
//! evaluated at its midpoint, which is exact because the generator is
//! piecewise constant and every discontinuity is a grid point. Products
//! of step maps are never formed eagerly: every quantity downstream only
//! needs a few rows of `Φ(t, s)`, which are pulled back one step at a time.

use nalgebra::{DMatrix, Matrix2, Matrix2x3, Matrix2x4, Vector2, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::model::{
    assemble_generator, discontinuities, DiscreteBath, Layout, MeasurementChoice, QuadraticModel,
};

/// Above this condition number the inferred observables are treated as
/// non-existent.
pub const CONDITION_LIMIT: f64 = 1e8;

const GRID_MATCH_TOL: f64 = 1e-12;

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= GRID_MATCH_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Grid through all `knots` (plus `t = 0`), each gap split into equal
/// steps no longer than `max_step`.
pub fn build_grid(knots: &[f64], max_step: f64) -> Result<Vec<f64>> {
    if !(max_step > 0.0 && max_step.is_finite()) {
        return Err(Error::InvalidGrid);
    }
    let mut points: Vec<f64> = std::iter::once(0.0).chain(knots.iter().copied()).collect();
    if points.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidGrid);
    }
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| same_time(*a, *b));
    let mut grid = vec![0.0];
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let steps = ((hi - lo) / max_step - 1e-9).ceil().max(1.0) as usize;
        for k in 1..steps {
            grid.push(lo + (hi - lo) * k as f64 / steps as f64);
        }
        grid.push(hi);
    }
    Ok(grid)
}

/// `max |Φᵀ J Φ − J|`.
pub fn symplectic_defect(map: &DMatrix<f64>, j: &DMatrix<f64>) -> f64 {
    (map.transpose() * j * map - j).amax()
}

/// Homogeneous solution of the Heisenberg equations on a time grid.
#[derive(Debug, Clone)]
pub struct Propagator {
    layout: Layout,
    grid: Vec<f64>,
    /// `steps[i]` indexes the map `Φ(t_{i+1}, t_i)` in `maps`.
    steps: Vec<usize>,
    maps: Vec<DMatrix<f64>>,
    defects: Vec<f64>,
}

/// Propagate the full phase space over `grid`.
pub fn propagate(model: &QuadraticModel, bath: &DiscreteBath, grid: &[f64]) -> Result<Propagator> {
    if grid.first() != Some(&0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid);
    }
    for &at in &discontinuities(model, bath) {
        let end = *grid.last().unwrap();
        if at <= 0.0 || at >= end {
            continue;
        }
        let k = grid.partition_point(|&t| t < at);
        let on_grid = [k.checked_sub(1), Some(k)]
            .into_iter()
            .flatten()
            .filter_map(|i| grid.get(i))
            .any(|&t| same_time(t, at));
        if !on_grid {
            return Err(Error::SegmentMismatch {
                start: grid[k - 1],
                end: grid[k],
                at,
            });
        }
    }

    let layout = Layout::new(bath.len());
    let j = layout.symplectic_form();
    let mut steps = Vec::with_capacity(grid.len().saturating_sub(1));
    let mut maps: Vec<DMatrix<f64>> = Vec::new();
    let mut defects = Vec::new();
    let mut last: Option<(DMatrix<f64>, f64)> = None;
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        let generator = assemble_generator(model, bath, 0.5 * (w[0] + w[1]));
        let reuse =
            matches!(&last, Some((g, h0)) if *g == generator && (h - h0).abs() <= 1e-15 * h);
        if !reuse {
            let map = (&generator * h).exp();
            defects.push(symplectic_defect(&map, &j));
            maps.push(map);
            last = Some((generator, h));
        }
        steps.push(maps.len() - 1);
    }
    Ok(Propagator {
        layout,
        grid: grid.to_vec(),
        steps,
        maps,
        defects,
    })
}

impl Propagator {
    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Index of grid time `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = self.grid.partition_point(|&g| g < t);
        [k.checked_sub(1), Some(k)]
            .into_iter()
            .flatten()
            .find(|&i| i < self.grid.len() && same_time(self.grid[i], t))
            .ok_or(Error::NotOnGrid(t))
    }

    /// One-step map `Φ(t_{i+1}, t_i)`.
    pub fn step(&self, i: usize) -> &DMatrix<f64> {
        &self.maps[self.steps[i]]
    }

    /// Largest symplectic defect over the distinct one-step maps.
    pub fn step_defect(&self) -> f64 {
        self.defects.iter().copied().fold(0.0, f64::max)
    }

    /// Full map `Φ(t_i, t_j)` for `i ≥ j`.
    pub fn map(&self, i: usize, j: usize) -> DMatrix<f64> {
        assert!(i >= j && i < self.grid.len(), "map({i}, {j}) out of order");
        let n = self.layout.dim();
        let mut out = DMatrix::identity(n, n);
        for k in j..i {
            out = self.step(k) * out;
        }
        out
    }

    /// `rows · Φ(t_i, t_0)`.
    pub fn rows_from_start(&self, i: usize, rows: &DMatrix<f64>) -> DMatrix<f64> {
        let mut r = rows.clone();
        for k in (0..i).rev() {
            r = &r * self.step(k);
        }
        r
    }

    /// `rows · Φ(t_i, t_j)` for `j = 0..=i`.
    pub fn rows_backward(&self, i: usize, rows: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut out = vec![rows.clone(); i + 1];
        for k in (0..i).rev() {
            out[k] = &out[k + 1] * self.step(k);
        }
        out
    }

    /// Selection matrix `W` picking the measured pointer observables.
    pub fn selection(&self, choice: MeasurementChoice) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(2, self.layout.dim());
        for (r, &c) in choice.indices().iter().enumerate() {
            w[(r, c)] = 1.0;
        }
        w
    }
}

/// `A(t)`, `B(t)` and the full inferred-observable rows at one grid time.
#[derive(Debug, Clone)]
pub struct InferenceCoefficients {
    pub time: f64,
    pub index: usize,
    pub choice: MeasurementChoice,
    pub a: Matrix2<f64>,
    pub b: Matrix2x4<f64>,
    /// Condition number of the inverted system block.
    pub condition: f64,
    /// Rows of `A W Φ(t, 0)`: the inferred observables as linear
    /// combinations of every initial phase-space coordinate.
    pub inferred_rows: DMatrix<f64>,
}

impl InferenceCoefficients {
    /// Inferred map with the initial system observables subtracted, i.e.
    /// the noise operators as rows over the initial phase space.
    pub fn noise_rows(&self) -> DMatrix<f64> {
        let mut rows = self.inferred_rows.clone();
        rows[(0, 0)] -= 1.0;
        rows[(1, 3)] -= 1.0;
        rows
    }
}

fn condition_number(m: &Matrix2<f64>) -> f64 {
    let sv = m.singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    if lo > 0.0 && hi.is_finite() {
        hi / lo
    } else {
        f64::INFINITY
    }
}

pub fn inference_coefficients(
    prop: &Propagator,
    choice: MeasurementChoice,
    t: f64,
) -> Result<InferenceCoefficients> {
    inference_coefficients_with_limit(prop, choice, t, CONDITION_LIMIT)
}

pub fn inference_coefficients_with_limit(
    prop: &Propagator,
    choice: MeasurementChoice,
    t: f64,
    condition_limit: f64,
) -> Result<InferenceCoefficients> {
    let index = prop.index_of(t)?;
    let time = prop.grid[index];
    let measured = prop.rows_from_start(index, &prop.selection(choice));
    let layout = prop.layout;
    let sys = [layout.x(0), layout.p(0)];
    let block = Matrix2::from_fn(|r, c| measured[(r, sys[c])]);
    let condition = condition_number(&block);
    let a = match block.try_inverse() {
        Some(a) if condition <= condition_limit => a,
        _ => return Err(Error::NotInvertible { time, condition }),
    };
    let inferred_rows = DMatrix::from_fn(2, layout.dim(), |r, c| {
        a[(r, 0)] * measured[(0, c)] + a[(r, 1)] * measured[(1, c)]
    });
    let ptr = layout.pointer_indices();
    let b = Matrix2x4::from_fn(|r, c| inferred_rows[(r, ptr[c])]);
    Ok(InferenceCoefficients {
        time,
        index,
        choice,
        a,
        b,
        condition,
        inferred_rows,
    })
}

fn force_columns(layout: Layout, rows: &DMatrix<f64>) -> Matrix2x3<f64> {
    Matrix2x3::from_fn(|r, c| rows[(r, layout.p(c))])
}

/// Reduced Green's function `W Φ(t, s) E`: response of the measured
/// observables at `t` to a unit momentum kick on `(S, 1, 2)` at `s`.
pub fn response_kernel(
    prop: &Propagator,
    choice: MeasurementChoice,
    t: f64,
    s: f64,
) -> Result<Matrix2x3<f64>> {
    let (i, j) = (prop.index_of(t)?, prop.index_of(s)?);
    if j > i {
        return Err(Error::InconsistentInput(
            "response kernel needs s <= t".into(),
        ));
    }
    let w = prop.selection(choice);
    let mut rows = w;
    for k in (j..i).rev() {
        rows = &rows * prop.step(k);
    }
    Ok(force_columns(prop.layout, &rows))
}

/// `Λ(t, s) = A(t) W Φ(t, s) E`.
pub fn lambda_kernel(
    prop: &Propagator,
    coeff: &InferenceCoefficients,
    t: f64,
    s: f64,
) -> Result<Matrix2x3<f64>> {
    if prop.index_of(t)? != coeff.index {
        return Err(Error::InconsistentInput(
            "coefficients were computed for a different time".into(),
        ));
    }
    Ok(coeff.a * response_kernel(prop, coeff.choice, t, s)?)
}

/// `Λ(t, t_j)` for every grid point `t_j ≤ t`.
pub fn lambda_series(prop: &Propagator, coeff: &InferenceCoefficients) -> Vec<Matrix2x3<f64>> {
    let w = prop.selection(coeff.choice);
    prop.rows_backward(coeff.index, &w)
        .iter()
        .map(|rows| coeff.a * force_columns(prop.layout, rows))
        .collect()
}

/// Expectation shift `s(t) = B ⟨J⟩ + ∫ Λ(t, s) ⟨ξ(s)⟩ ds`, trapezoidal on
/// the propagator grid.
pub fn shift(
    prop: &Propagator,
    coeff: &InferenceCoefficients,
    pointer_means: Vector4<f64>,
    force_mean: impl Fn(f64) -> Vector3<f64>,
) -> Vector2<f64> {
    let lambdas = lambda_series(prop, coeff);
    let grid = &prop.grid[..=coeff.index];
    let mut integral = Vector2::zeros();
    for k in 0..coeff.index {
        let h = grid[k + 1] - grid[k];
        integral +=
            0.5 * h * (lambdas[k] * force_mean(grid[k]) + lambdas[k + 1] * force_mean(grid[k + 1]));
    }
    coeff.b * pointer_means + integral
}

/// Symplectic product `r_X J r_Pᵀ` of the inferred-observable rows; zero
/// means `[𝒳(t), 𝒫(t)] = 0`.
pub fn inferred_commutator(prop: &Propagator, coeff: &InferenceCoefficients) -> f64 {
    let j = prop.layout.symplectic_form();
    let rx = coeff.inferred_rows.row(0);
    let rp = coeff.inferred_rows.row(1);
    (rx * j * rp.transpose())[(0, 0)]
}
