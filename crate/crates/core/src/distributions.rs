//! Broadened marginals of the inferred observables and the Gaussian joint
//! distribution.
//!
//! Pointers and a thermal bath act as a Gaussian filter on the system's
//! position and momentum distributions: each marginal is the system density
//! convolved with a centred Gaussian whose variance is the corresponding
//! noise term.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::model::{GaussianState, SystemState};
use crate::noise::NoiseCovariance;

/// Grid size used when none is given.
pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Half-width of generated grids, in standard deviations.
pub const GRID_HALF_WIDTH: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Position,
    Momentum,
}

/// Density sampled on a uniform grid `origin + i * spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub origin: f64,
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn new(origin: f64, spacing: f64, values: Vec<f64>) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) || values.len() < 2 {
            return Err(Error::InvalidState(
                "grid needs positive spacing and at least two points".into(),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidState(
                "density values must be finite and >= 0".into(),
            ));
        }
        Ok(Self {
            origin,
            spacing,
            values,
        })
    }

    /// Sample `f` on `count` points spanning `[lo, hi]`.
    pub fn sample(lo: f64, hi: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let spacing = (hi - lo) / (count.max(2) - 1) as f64;
        Self::new(
            lo,
            spacing,
            (0..count).map(|i| f(lo + i as f64 * spacing)).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn coordinates(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.coordinate(i))
    }

    fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.len() {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }

    /// Trapezoidal `∫ f(x) p(x) dx`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        (0..self.len())
            .map(|i| self.trapezoid_weight(i) * self.values[i] * f(self.coordinate(i)))
            .sum()
    }

    pub fn integral(&self) -> f64 {
        self.expect(|_| 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x) / self.integral()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m)) / self.integral()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.integral();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized(norm));
        }
        self.values.iter_mut().for_each(|v| *v /= norm);
        Ok(self)
    }

    /// Parse two-column text `coordinate density`, separated by whitespace
    /// or a comma. Blank lines and `#` comments are skipped. Coordinates
    /// must be uniformly spaced.
    pub fn parse(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
            match parsed.as_deref() {
                Some([x, y]) => {
                    xs.push(*x);
                    ys.push(*y);
                }
                _ => {
                    return Err(Error::InvalidState(format!(
                        "line {}: expected two numbers",
                        n + 1
                    )))
                }
            }
        }
        if xs.len() < 2 {
            return Err(Error::InvalidState(
                "density needs at least two rows".into(),
            ));
        }
        let spacing = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        let uniform = xs.iter().enumerate().all(|(i, &x)| {
            (x - (xs[0] + i as f64 * spacing)).abs()
                <= 1e-9 * spacing.abs().max(1e-300) * xs.len() as f64
        });
        if !uniform {
            return Err(Error::InvalidState(
                "coordinates are not uniformly spaced".into(),
            ));
        }
        Self::new(xs[0], spacing, ys)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Two-column text in the format [`GridDensity::parse`] accepts.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (x, y) in self.coordinates().zip(&self.values) {
            let _ = writeln!(out, "{x:e} {y:e}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1d {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian1d {
    pub fn pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        (-0.5 * d * d / self.variance).exp() / (2.0 * std::f64::consts::PI * self.variance).sqrt()
    }
}

/// Marginal distribution of an inferred observable.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    Gaussian(Gaussian1d),
    Grid(GridDensity),
}

impl Marginal {
    pub fn variance(&self) -> f64 {
        match self {
            Marginal::Gaussian(g) => g.variance,
            Marginal::Grid(d) => d.variance(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Marginal::Gaussian(g) => g.mean,
            Marginal::Grid(d) => d.mean(),
        }
    }

    /// Tabulate on `points` samples spanning mean ± 8 standard deviations.
    pub fn to_grid(&self, points: usize) -> Result<GridDensity> {
        match self {
            Marginal::Grid(d) => Ok(d.clone()),
            Marginal::Gaussian(g) => {
                let half = GRID_HALF_WIDTH * g.variance.sqrt();
                GridDensity::sample(g.mean - half, g.mean + half, points, |x| g.pdf(x))
            }
        }
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `∫ p(x) N(X − x; 0, δ²) dx` evaluated on `points` samples spanning the
/// broadened mean ± 8 effective standard deviations.
pub fn convolve_gaussian(
    input: &GridDensity,
    noise_var: f64,
    points: usize,
) -> Result<GridDensity> {
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(Error::InconsistentInput(format!(
            "noise variance {noise_var}"
        )));
    }
    if noise_var == 0.0 {
        return Ok(input.clone());
    }
    let delta = noise_var.sqrt();
    // The discrete sum needs the filter resolved by the input grid.
    let input = if delta < 2.0 * input.spacing {
        refine(input, (2.0 * input.spacing / delta).ceil() as usize)?
    } else {
        input.clone()
    };

    let mean = input.mean();
    let half = GRID_HALF_WIDTH * (input.variance() + noise_var).sqrt();
    let (lo, hi) = (mean - half, mean + half);

    let kept: f64 = (0..input.len())
        .map(|i| {
            let x = input.coordinate(i);
            input.trapezoid_weight(i)
                * input.values[i]
                * (normal_cdf((hi - x) / delta) - normal_cdf((lo - x) / delta))
        })
        .sum::<f64>()
        / input.integral();
    let leak = 1.0 - kept;
    if leak > 1e-6 {
        return Err(Error::GridTooSmall { leak });
    }

    let norm = 1.0 / (2.0 * std::f64::consts::PI * noise_var).sqrt();
    let sources: Vec<(f64, f64)> = (0..input.len())
        .filter(|&i| input.values[i] > 1e-300)
        .map(|i| {
            (
                input.coordinate(i),
                input.trapezoid_weight(i) * input.values[i] * norm,
            )
        })
        .collect();
    let spacing = (hi - lo) / (points.max(2) - 1) as f64;
    let cutoff = 80.0 * noise_var;
    let values = (0..points.max(2))
        .map(|k| {
            let x = lo + k as f64 * spacing;
            sources
                .iter()
                .map(|&(y, w)| {
                    let d2 = (x - y) * (x - y);
                    if d2 > cutoff {
                        0.0
                    } else {
                        w * (-0.5 * d2 / noise_var).exp()
                    }
                })
                .sum()
        })
        .collect();
    GridDensity::new(lo, spacing, values)?.normalized()
}

/// Cubic (Catmull-Rom) interpolation onto a grid `factor` times finer.
/// Negative overshoot next to sharp features is clipped.
fn refine(input: &GridDensity, factor: usize) -> Result<GridDensity> {
    let v = &input.values;
    let last = v.len() - 1;
    let at = |i: isize| {
        if i < 0 || i as usize > last {
            0.0
        } else {
            v[i as usize]
        }
    };
    let n = last * factor + 1;
    let values = (0..n)
        .map(|k| {
            let (i, r) = ((k / factor) as isize, k % factor);
            if r == 0 {
                return at(i);
            }
            let f = r as f64 / factor as f64;
            let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
            let y = p1
                + 0.5
                    * f
                    * (p2 - p0
                        + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3
                            + f * (3.0 * (p1 - p2) + p3 - p0)));
            y.max(0.0)
        })
        .collect();
    GridDensity::new(input.origin, input.spacing / factor as f64, values)?.normalized()
}

/// Broadened marginal of the inferred position or momentum. Gaussian
/// states stay in closed form (the variances add); tabulated states are
/// convolved on a grid of `points` samples.
pub fn broadened_marginal(
    state: &SystemState,
    noise_var: f64,
    axis: Axis,
    points: usize,
) -> Result<Marginal> {
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(Error::InconsistentInput(format!(
            "noise variance {noise_var}"
        )));
    }
    match state {
        SystemState::Gaussian(g) => {
            let (mean, var) = match axis {
                Axis::Position => (g.mean_x, g.var_x),
                Axis::Momentum => (g.mean_p, g.var_p),
            };
            Ok(Marginal::Gaussian(Gaussian1d {
                mean,
                variance: var + noise_var,
            }))
        }
        SystemState::Tabulated { position, momentum } => {
            let input = match axis {
                Axis::Position => position,
                Axis::Momentum => momentum,
            };
            Ok(Marginal::Grid(convolve_gaussian(input, noise_var, points)?))
        }
    }
}

/// Coefficients of the pointer and bath Gaussian filters, and of their
/// combination.
///
/// Each filter is `exp[a x² + b p² + c x p] / d`-type with
/// `[[−2b, c], [c, −2a]]` equal to its share of the noise covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFilterCoefficients {
    pub a_pointer: f64,
    pub b_pointer: f64,
    pub c_pointer: f64,
    pub d_pointer: f64,
    pub a_bath: f64,
    pub b_bath: f64,
    pub c_bath: f64,
    pub d_bath: f64,
    pub delta_x2: f64,
    pub delta_p2: f64,
    pub gamma: f64,
    pub d: f64,
}

fn abc(m: &Matrix2<f64>) -> (f64, f64, f64, f64) {
    let b = -0.5 * m[(0, 0)];
    let a = -0.5 * m[(1, 1)];
    let c = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    (a, b, c, 4.0 * a * b - c * c)
}

impl GaussianFilterCoefficients {
    pub fn from_covariance(cov: &NoiseCovariance) -> Self {
        let (a_pointer, b_pointer, c_pointer, d_pointer) = abc(&cov.pointer);
        let (a_bath, b_bath, c_bath, d_bath) = abc(&cov.bath);
        let (a, b, c) = (a_pointer + a_bath, b_pointer + b_bath, c_pointer + c_bath);
        let d = 4.0 * a * b - c * c;
        Self {
            a_pointer,
            b_pointer,
            c_pointer,
            d_pointer,
            a_bath,
            b_bath,
            c_bath,
            d_bath,
            delta_x2: -d / (2.0 * a),
            delta_p2: -d / (2.0 * b),
            gamma: c / d,
            d,
        }
    }

    /// `(δ_X², δ_P², δ_XP)` recovered from the coefficients.
    pub fn noise_terms(&self) -> (f64, f64, f64) {
        (
            -2.0 * (self.b_pointer + self.b_bath),
            -2.0 * (self.a_pointer + self.a_bath),
            self.c_pointer + self.c_bath,
        )
    }

    /// Pointer and bath covariance blocks implied by the coefficients.
    pub fn to_covariance(&self, route: crate::noise::Route) -> NoiseCovariance {
        let block = |a: f64, b: f64, c: f64| Matrix2::new(-2.0 * b, c, c, -2.0 * a);
        NoiseCovariance {
            pointer: block(self.a_pointer, self.b_pointer, self.c_pointer),
            bath: block(self.a_bath, self.b_bath, self.c_bath),
            route,
        }
    }

    /// Combined filter `exp[−x²/(2Δ_X²) − p²/(2Δ_P²) + γ x p] / (2π √d)`.
    pub fn filter(&self, x: f64, p: f64) -> f64 {
        (-x * x / (2.0 * self.delta_x2) - p * p / (2.0 * self.delta_p2) + self.gamma * x * p).exp()
            / (2.0 * std::f64::consts::PI * self.d.sqrt())
    }
}

/// Filter coefficients for a computed noise covariance. With the bath
/// decoupled the bath filter is a delta distribution and its coefficients
/// vanish.
pub fn filter_coefficients(cov: &NoiseCovariance) -> GaussianFilterCoefficients {
    GaussianFilterCoefficients::from_covariance(cov)
}

/// Bivariate Gaussian for the joint inferred distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointGaussian {
    pub mean: Vector2<f64>,
    pub covariance: Matrix2<f64>,
}

impl JointGaussian {
    pub fn pdf(&self, x: f64, p: f64) -> f64 {
        let d = Vector2::new(x, p) - self.mean;
        let inv = self
            .covariance
            .try_inverse()
            .expect("positive definite covariance");
        (-0.5 * (d.transpose() * inv * d)[(0, 0)]).exp()
            / (2.0 * std::f64::consts::PI * self.covariance.determinant().sqrt())
    }

    pub fn marginal(&self, axis: Axis) -> Gaussian1d {
        let i = match axis {
            Axis::Position => 0,
            Axis::Momentum => 1,
        };
        Gaussian1d {
            mean: self.mean[i],
            variance: self.covariance[(i, i)],
        }
    }
}

/// Wigner function of a Gaussian system state.
pub fn wigner(state: &GaussianState) -> JointGaussian {
    JointGaussian {
        mean: Vector2::new(state.mean_x, state.mean_p),
        covariance: Matrix2::new(state.var_x, state.cov_xp, state.cov_xp, state.var_p),
    }
}

/// Convolution of the system Wigner function with the combined filter:
/// the covariances add.
pub fn joint_distribution(
    state: &SystemState,
    fc: &GaussianFilterCoefficients,
) -> Result<JointGaussian> {
    let SystemState::Gaussian(g) = state else {
        return Err(Error::NonGaussianState);
    };
    let (vx, vp, c) = fc.noise_terms();
    let w = wigner(g);
    Ok(JointGaussian {
        mean: w.mean,
        covariance: w.covariance + Matrix2::new(vx, c, c, vp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::Route;

    #[test]
    fn gaussian_variances_add() {
        let state = SystemState::Gaussian(GaussianState::pure(0.5, 0.0).unwrap());
        let m = broadened_marginal(&state, 0.5, Axis::Position, 4096).unwrap();
        assert_eq!(
            m,
            Marginal::Gaussian(Gaussian1d {
                mean: 0.0,
                variance: 1.0
            })
        );
    }

    #[test]
    fn zero_noise_returns_input() {
        let d = GridDensity::sample(-6.0, 6.0, 801, |x| (-x * x / 2.0).exp())
            .unwrap()
            .normalized()
            .unwrap();
        let out = convolve_gaussian(&d, 0.0, 4096).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn output_normalized_and_variance_adds() {
        let d = GridDensity::sample(-4.0, 4.0, 1601, |x| if x.abs() <= 1.0 { 0.5 } else { 0.0 })
            .unwrap()
            .normalized()
            .unwrap();
        let out = convolve_gaussian(&d, 0.3, 4096).unwrap();
        assert!((out.integral() - 1.0).abs() < 1e-12);
        assert!(out.values.iter().all(|&v| v >= 0.0));
        assert!((out.variance() - (d.variance() + 0.3)).abs() < 1e-6);
    }

    #[test]
    fn narrow_filter_is_refined() {
        let d = GridDensity::sample(-8.0, 8.0, 321, |x| (-x * x / 2.0).exp())
            .unwrap()
            .normalized()
            .unwrap();
        let out = convolve_gaussian(&d, 1e-4, 4096).unwrap();
        assert!((out.variance() - (1.0 + 1e-4)).abs() < 1e-6);
    }

    #[test]
    fn truncated_grid_leaks() {
        // A far-away satellite peak sits beyond mean ± 8 standard deviations.
        let d = GridDensity::sample(0.0, 1000.0, 2001, |x| {
            (-(x - 10.0) * (x - 10.0) / 2.0).exp() + 1e-4 * (-(x - 990.0) * (x - 990.0) / 2.0).exp()
        })
        .unwrap()
        .normalized()
        .unwrap();
        let err = convolve_gaussian(&d, 1.0, 4096).unwrap_err();
        assert!(matches!(err, Error::GridTooSmall { .. }), "{err:?}");
    }

    #[test]
    fn text_round_trip() {
        let d = GridDensity::new(-1.0, 0.25, vec![0.0, 0.5, 1.0, 0.5, 0.0]).unwrap();
        let back = GridDensity::parse(&d.to_text()).unwrap();
        assert_eq!(back.len(), 5);
        assert!((back.origin + 1.0).abs() < 1e-15);
        assert!((back.spacing - 0.25).abs() < 1e-15);
        assert_eq!(back.values, d.values);
        assert!(GridDensity::parse("0 1\n1 2\n3 1\n").is_err());
        assert!(GridDensity::parse("# header\n0, 1\n1, 2\n").is_ok());
        assert!(GridDensity::parse("0 1 2\n1 2 3\n").is_err());
    }

    #[test]
    fn filter_coefficients_from_ak_covariance() {
        let cov = NoiseCovariance::from_total(Matrix2::new(0.625, 0.0, 0.0, 0.625), Route::Direct);
        let fc = filter_coefficients(&cov);
        assert_eq!(fc.a_pointer, -0.3125);
        assert_eq!(fc.b_pointer, -0.3125);
        assert_eq!(fc.c_pointer, 0.0);
        assert_eq!(
            (fc.a_bath, fc.b_bath, fc.c_bath, fc.d_bath),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(fc.noise_terms(), (0.625, 0.625, 0.0));
    }

    #[test]
    fn correlation_sign_carries_into_filter() {
        for c in [0.3, -0.3] {
            let cov = NoiseCovariance::from_total(Matrix2::new(1.0, c, c, 1.0), Route::Direct);
            let fc = filter_coefficients(&cov);
            assert_eq!(fc.gamma.signum(), c.signum());
            // Δ_X² = det / δ_P², γ = δ_XP / det
            let det = 1.0 - c * c;
            assert!((fc.delta_x2 - det).abs() < 1e-15);
            assert!((fc.gamma - c / det).abs() < 1e-15);
        }
    }

    #[test]
    fn joint_rejects_tabulated() {
        let d = GridDensity::sample(-6.0, 6.0, 601, |x| (-x * x / 2.0).exp())
            .unwrap()
            .normalized()
            .unwrap();
        let state = SystemState::tabulated(d.clone(), d).unwrap();
        let cov = NoiseCovariance::from_total(Matrix2::identity(), Route::Direct);
        assert_eq!(
            joint_distribution(&state, &filter_coefficients(&cov)).unwrap_err(),
            Error::NonGaussianState
        );
    }

    #[test]
    fn joint_covariance_adds() {
        let state = SystemState::Gaussian(GaussianState::pure(0.5, 0.0).unwrap());
        let cov = NoiseCovariance::from_total(Matrix2::new(0.5, 0.0, 0.0, 0.5), Route::Direct);
        let j = joint_distribution(&state, &filter_coefficients(&cov)).unwrap();
        assert!((j.covariance - Matrix2::identity()).amax() < 1e-15);
    }
}
