//! Scenario configuration, presets, time sweeps and CSV reporting.
//!
//! A scenario is a TOML file with the blocks `[model]`, `[bath]`,
//! `[pointers]`, `[system]`, `[measurement]`, `[sweep]`, `[numerics]` and
//! `[output]`. Unknown keys are rejected. See the crate README for the
//! full schema.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{broadened_marginal, Axis, GridDensity, DEFAULT_GRID_POINTS};
use crate::dynamics::{build_grid, inference_coefficients_with_limit, propagate, CONDITION_LIMIT};
use crate::entropy::{collective_entropy, SATURATION_TOL};
use crate::error::{Error, Result};
use crate::model::{
    discontinuities, discretize_bath, BathSpec, CouplingMatrix, DiscreteBath, GaussianState,
    Interaction, Mass, MeasurementChoice, OhmicExponential, Piecewise, PointerPreparation,
    QuadraticModel, SystemState,
};
use crate::noise::{check_noise_bound, noise_covariance_with_tolerance, Route, CONVERGENCE_TOL};

pub const PRESETS: [&str; 2] = ["ak-closed", "ak-ohmic"];

fn infinite_masses() -> [f64; 3] {
    [f64::INFINITY; 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `M_S, M_1, M_2`; `inf` drops the kinetic term.
    #[serde(default = "infinite_masses")]
    pub masses: [f64; 3],
    /// Arthurs-Kelly coupling `κ (X_S P_1 + P_S P_2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ak_kappa: Option<f64>,
    /// Time-independent `C_S, C_1, C_2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potentials: Option<[f64; 3]>,
    /// Time-independent 2×4 coupling matrix, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<[[f64; 4]; 2]>,
    /// Piecewise-constant interaction; a duration on the last segment
    /// switches the interaction off afterwards.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segment: Vec<SegmentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default)]
    pub potentials: [f64; 3],
    pub coupling: [[f64; 4]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    /// `none`, `ohmic-exponential` or `discrete`.
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// 0/1 flags selecting which of `X_S, X_1, X_2` couple.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<[u8; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub switch: Vec<SwitchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<[f64; 3]>>,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            family: "none".into(),
            gamma: None,
            cutoff: None,
            modes: None,
            beta: None,
            pattern: None,
            switch: Vec::new(),
            masses: None,
            frequencies: None,
            couplings: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointerConfig {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// `gaussian` or `tabulated`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov_xp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    /// `x1-x2`, `x1-p2`, `p1-x2` or `p1-p2`.
    pub choice: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub start: f64,
    pub stop: f64,
    /// Number of report times, evenly spaced and including both ends.
    /// Times are snapped to multiples of 1e-12.
    pub steps: usize,
}

impl SweepConfig {
    pub fn times(&self) -> Result<Vec<f64>> {
        if self.steps == 0 || !(self.start >= 0.0) || !(self.stop >= self.start) {
            return Err(Error::Config(
                "sweep needs 0 <= start <= stop and steps >= 1".into(),
            ));
        }
        if self.steps == 1 {
            return Ok(vec![self.start]);
        }
        let n = self.steps - 1;
        Ok((0..self.steps)
            .map(|k| (self.start * (n - k) as f64 + self.stop * k as f64) / n as f64)
            .map(|t| (t * 1e12).round() / 1e12)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// Samples per tabulated marginal.
    pub grid_points: usize,
    /// Longest propagation step.
    pub max_step: f64,
    pub condition_limit: f64,
    /// Allowed relative change of the kernel route under step halving.
    pub convergence_tolerance: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            max_step: 2e-3,
            condition_limit: CONDITION_LIMIT,
            convergence_tolerance: CONVERGENCE_TOL,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub bath: BathConfig,
    pub pointers: PointerConfig,
    pub system: SystemConfig,
    pub measurement: MeasurementConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Validate into domain types. Relative density paths resolve against
    /// `base_dir`.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<Scenario> {
        let model = self.model.build()?;
        let bath = discretize_bath(&self.bath.build()?)?;
        let pointers = PointerPreparation::new(self.pointers.sigma1_sq, self.pointers.sigma2_sq)?;
        let state = self.system.build(base_dir)?;
        let choice = MeasurementChoice::parse(&self.measurement.choice).ok_or_else(|| {
            Error::Config(format!(
                "unknown measurement choice `{}`",
                self.measurement.choice
            ))
        })?;
        let n = &self.numerics;
        if n.grid_points < 16
            || !(n.max_step > 0.0)
            || !(n.condition_limit >= 1.0)
            || !(n.convergence_tolerance > 0.0)
        {
            return Err(Error::Config("invalid numerics block".into()));
        }
        Ok(Scenario {
            model,
            bath,
            pointers,
            state,
            choice,
            times: self.sweep.times()?,
            numerics: n.clone(),
        })
    }
}

fn coupling_matrix(rows: &[[f64; 4]; 2]) -> CouplingMatrix {
    CouplingMatrix::from_fn(|r, c| rows[r][c])
}

impl ModelConfig {
    fn build(&self) -> Result<QuadraticModel> {
        let masses = [
            Mass::new(self.masses[0])?,
            Mass::new(self.masses[1])?,
            Mass::new(self.masses[2])?,
        ];
        let plain = self.potentials.is_some() || self.coupling.is_some();
        let forms = [self.ak_kappa.is_some(), plain, !self.segment.is_empty()];
        if forms.iter().filter(|&&f| f).count() != 1 {
            return Err(Error::Config(
                "model needs exactly one of ak_kappa, potentials/coupling, or [[model.segment]]"
                    .into(),
            ));
        }
        let interaction = if let Some(kappa) = self.ak_kappa {
            Piecewise::constant(Interaction::arthurs_kelly(kappa))
        } else if plain {
            Piecewise::constant(Interaction {
                potentials: self.potentials.unwrap_or([0.0; 3]),
                coupling: self
                    .coupling
                    .map(|c| coupling_matrix(&c))
                    .unwrap_or_else(CouplingMatrix::zeros),
            })
        } else {
            let (last, init) = self.segment.split_last().expect("non-empty");
            let mut segments = Vec::new();
            for s in init {
                let d = s.duration.ok_or_else(|| {
                    Error::Config("every segment but the last needs a duration".into())
                })?;
                segments.push((d, s.interaction()));
            }
            let tail = match last.duration {
                Some(d) => {
                    segments.push((d, last.interaction()));
                    Interaction::zero()
                }
                None => last.interaction(),
            };
            Piecewise::from_segments(segments, tail)?
        };
        QuadraticModel::new(masses, interaction)
    }
}

impl SegmentConfig {
    fn interaction(&self) -> Interaction {
        Interaction {
            potentials: self.potentials,
            coupling: coupling_matrix(&self.coupling),
        }
    }
}

fn switch_function(segments: &[SwitchConfig]) -> Result<Piecewise<f64>> {
    let Some((last, init)) = segments.split_last() else {
        return Ok(Piecewise::constant(1.0));
    };
    let mut out = Vec::new();
    for s in init {
        let d = s.duration.ok_or_else(|| {
            Error::Config("every switch segment but the last needs a duration".into())
        })?;
        out.push((d, s.value));
    }
    let tail = match last.duration {
        Some(d) => {
            out.push((d, last.value));
            0.0
        }
        None => last.value,
    };
    Piecewise::from_segments(out, tail)
}

impl BathConfig {
    fn build(&self) -> Result<BathSpec> {
        let missing =
            |key: &str| Error::Config(format!("bath family `{}` needs `{key}`", self.family));
        let forbid = |present: bool, key: &str| -> Result<()> {
            if present {
                Err(Error::Config(format!(
                    "bath family `{}` does not take `{key}`",
                    self.family
                )))
            } else {
                Ok(())
            }
        };
        match self.family.as_str() {
            "none" => {
                forbid(self.gamma.is_some(), "gamma")?;
                forbid(self.cutoff.is_some(), "cutoff")?;
                forbid(self.modes.is_some(), "modes")?;
                forbid(self.pattern.is_some(), "pattern")?;
                forbid(!self.switch.is_empty(), "switch")?;
                forbid(self.masses.is_some(), "masses")?;
                forbid(self.frequencies.is_some(), "frequencies")?;
                forbid(self.couplings.is_some(), "couplings")?;
                Ok(BathSpec::closed())
            }
            "ohmic-exponential" => {
                forbid(self.masses.is_some(), "masses")?;
                forbid(self.frequencies.is_some(), "frequencies")?;
                forbid(self.couplings.is_some(), "couplings")?;
                let pattern = self.pattern.unwrap_or([1, 1, 1]);
                if pattern.iter().any(|&p| p > 1) {
                    return Err(Error::Config("pattern entries must be 0 or 1".into()));
                }
                Ok(BathSpec::Continuous {
                    family: OhmicExponential {
                        gamma: self.gamma.ok_or_else(|| missing("gamma"))?,
                        cutoff: self.cutoff.ok_or_else(|| missing("cutoff"))?,
                    },
                    beta: self.beta.ok_or_else(|| missing("beta"))?,
                    modes: self.modes.ok_or_else(|| missing("modes"))?,
                    switch: switch_function(&self.switch)?,
                    pattern: pattern.map(|p| p == 1),
                })
            }
            "discrete" => {
                forbid(self.gamma.is_some(), "gamma")?;
                forbid(self.cutoff.is_some(), "cutoff")?;
                forbid(self.modes.is_some(), "modes")?;
                forbid(self.pattern.is_some(), "pattern")?;
                Ok(BathSpec::Discrete {
                    masses: self.masses.clone().ok_or_else(|| missing("masses"))?,
                    frequencies: self
                        .frequencies
                        .clone()
                        .ok_or_else(|| missing("frequencies"))?,
                    couplings: self.couplings.clone().ok_or_else(|| missing("couplings"))?,
                    beta: self.beta.ok_or_else(|| missing("beta"))?,
                    switch: switch_function(&self.switch)?,
                })
            }
            other => Err(Error::Config(format!("unknown bath family `{other}`"))),
        }
    }
}

impl SystemConfig {
    fn build(&self, base_dir: Option<&Path>) -> Result<SystemState> {
        match self.kind.as_str() {
            "gaussian" => {
                if self.position_file.is_some() || self.momentum_file.is_some() {
                    return Err(Error::Config(
                        "gaussian system takes no density files".into(),
                    ));
                }
                let need = |v: Option<f64>, key: &str| {
                    v.ok_or_else(|| Error::Config(format!("gaussian system needs `{key}`")))
                };
                Ok(SystemState::Gaussian(GaussianState::new(
                    self.mean_x.unwrap_or(0.0),
                    self.mean_p.unwrap_or(0.0),
                    need(self.var_x, "var_x")?,
                    need(self.var_p, "var_p")?,
                    self.cov_xp.unwrap_or(0.0),
                )?))
            }
            "tabulated" => {
                let moments = [
                    self.mean_x,
                    self.mean_p,
                    self.var_x,
                    self.var_p,
                    self.cov_xp,
                ];
                if moments.iter().any(Option::is_some) {
                    return Err(Error::Config(
                        "tabulated system takes only density files".into(),
                    ));
                }
                let resolve = |p: &Option<PathBuf>, key: &str| -> Result<PathBuf> {
                    let p = p
                        .as_ref()
                        .ok_or_else(|| Error::Config(format!("tabulated system needs `{key}`")))?;
                    Ok(match base_dir {
                        Some(dir) if p.is_relative() => dir.join(p),
                        _ => p.clone(),
                    })
                };
                let position = GridDensity::read(&resolve(&self.position_file, "position_file")?)?;
                let momentum = GridDensity::read(&resolve(&self.momentum_file, "momentum_file")?)?;
                SystemState::tabulated(position, momentum)
            }
            other => Err(Error::Config(format!("unknown system kind `{other}`"))),
        }
    }
}

/// Named starting configurations.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let closed = ScenarioConfig {
        model: ModelConfig {
            masses: infinite_masses(),
            ak_kappa: Some(1.0),
            potentials: None,
            coupling: None,
            segment: Vec::new(),
        },
        bath: BathConfig::default(),
        pointers: PointerConfig {
            sigma1_sq: 0.25,
            sigma2_sq: 0.25,
        },
        system: SystemConfig {
            kind: "gaussian".into(),
            mean_x: Some(0.0),
            mean_p: Some(0.0),
            var_x: Some(0.5),
            var_p: Some(0.5),
            cov_xp: Some(0.0),
            position_file: None,
            momentum_file: None,
        },
        measurement: MeasurementConfig {
            choice: MeasurementChoice::X1X2.name().into(),
        },
        sweep: SweepConfig {
            start: 0.1,
            stop: 2.0,
            steps: 20,
        },
        numerics: NumericsConfig::default(),
        output: OutputConfig::default(),
    };
    match name {
        "ak-closed" => Ok(closed),
        "ak-ohmic" => Ok(ScenarioConfig {
            bath: BathConfig {
                family: "ohmic-exponential".into(),
                gamma: Some(0.05),
                cutoff: Some(5.0),
                modes: Some(64),
                beta: Some(1.0),
                pattern: Some([1, 1, 1]),
                ..BathConfig::default()
            },
            ..closed
        }),
        other => Err(Error::UnknownPreset(other.into())),
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: QuadraticModel,
    pub bath: DiscreteBath,
    pub pointers: PointerPreparation,
    pub state: SystemState,
    pub choice: MeasurementChoice,
    pub times: Vec<f64>,
    pub numerics: NumericsConfig,
}

/// One CSV row. Quantities that could not be computed are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub t: f64,
    pub exists: bool,
    pub cond: f64,
    pub delta_x2: f64,
    pub delta_p2: f64,
    pub delta_xp: f64,
    pub delta_x2_pointer: f64,
    pub delta_x2_bath: f64,
    pub s_x: f64,
    pub s_p: f64,
    pub s_total: f64,
    pub lambda_opt: f64,
    pub bound: f64,
    pub gap: f64,
    pub route_disagreement: f64,
    /// Any of the noise or entropy bounds failed.
    pub violation: bool,
}

pub const CSV_HEADER: &str = "t,exists,cond,delta_x2,delta_p2,delta_xp,delta_x2_pointer,delta_x2_bath,s_x,s_p,s_total,lambda_opt,bound,gap,route_disagreement";

impl ReportRow {
    fn not_invertible(t: f64, cond: f64) -> Self {
        let nan = f64::NAN;
        Self {
            t,
            exists: false,
            cond,
            delta_x2: nan,
            delta_p2: nan,
            delta_xp: nan,
            delta_x2_pointer: nan,
            delta_x2_bath: nan,
            s_x: nan,
            s_p: nan,
            s_total: nan,
            lambda_opt: nan,
            bound: nan,
            gap: nan,
            route_disagreement: nan,
            violation: false,
        }
    }

    pub fn to_csv(&self) -> String {
        let nums = [
            self.cond,
            self.delta_x2,
            self.delta_p2,
            self.delta_xp,
            self.delta_x2_pointer,
            self.delta_x2_bath,
            self.s_x,
            self.s_p,
            self.s_total,
            self.lambda_opt,
            self.bound,
            self.gap,
            self.route_disagreement,
        ];
        let mut out = format!("{},{}", self.t, self.exists);
        for v in nums {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub rows: Vec<ReportRow>,
    pub violations: usize,
    pub not_invertible: usize,
}

impl ScenarioReport {
    /// 0 on success, 1 when any row violates a bound.
    pub fn exit_code(&self) -> i32 {
        if self.violations > 0 {
            1
        } else {
            0
        }
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for row in &self.rows {
            writeln!(out, "{}", row.to_csv())?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        format!(
            "{} rows, {} not invertible, {} bound violations",
            self.rows.len(),
            self.not_invertible,
            self.violations
        )
    }
}

/// Largest element-wise relative difference.
fn relative_disagreement(a: &nalgebra::Matrix2<f64>, b: &nalgebra::Matrix2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let scale = x.abs().max(y.abs());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioReport> {
    let mut knots = scenario.times.clone();
    let end = knots.iter().copied().fold(0.0, f64::max);
    knots.extend(
        discontinuities(&scenario.model, &scenario.bath)
            .into_iter()
            .filter(|&t| t < end),
    );
    let grid = build_grid(&knots, scenario.numerics.max_step)?;
    let prop = propagate(&scenario.model, &scenario.bath, &grid)?;
    let n = &scenario.numerics;

    let rows: Vec<ReportRow> = scenario
        .times
        .par_iter()
        .map(|&t| -> Result<ReportRow> {
            let coeff = match inference_coefficients_with_limit(
                &prop,
                scenario.choice,
                t,
                n.condition_limit,
            ) {
                Ok(c) => c,
                Err(Error::NotInvertible { condition, .. }) => {
                    return Ok(ReportRow::not_invertible(t, condition))
                }
                Err(e) => return Err(e),
            };
            let cov = |route| {
                noise_covariance_with_tolerance(
                    &prop,
                    &coeff,
                    &scenario.pointers,
                    &scenario.bath,
                    route,
                    n.convergence_tolerance,
                )
            };
            let direct = cov(Route::Direct)?;
            let kernel = cov(Route::Kernel)?;
            let noise = check_noise_bound(&direct)?;
            let mx = broadened_marginal(
                &scenario.state,
                direct.var_x(),
                Axis::Position,
                n.grid_points,
            )?;
            let mp = broadened_marginal(
                &scenario.state,
                direct.var_p(),
                Axis::Momentum,
                n.grid_points,
            )?;
            let report = collective_entropy(&mx, &mp, &direct)?;
            Ok(ReportRow {
                t,
                exists: true,
                cond: coeff.condition,
                delta_x2: direct.var_x(),
                delta_p2: direct.var_p(),
                delta_xp: direct.cov_xp(),
                delta_x2_pointer: direct.pointer[(0, 0)],
                delta_x2_bath: direct.bath[(0, 0)],
                s_x: report.entropy_x,
                s_p: report.entropy_p,
                s_total: report.total,
                lambda_opt: report.lambda,
                bound: report.bound,
                gap: report.gap,
                route_disagreement: relative_disagreement(&direct.total(), &kernel.total()),
                violation: !noise.robertson_ok
                    || !noise.schroedinger_ok
                    || report.gap < -SATURATION_TOL,
            })
        })
        .collect::<Result<_>>()?;

    Ok(ScenarioReport {
        violations: rows.iter().filter(|r| r.violation).count(),
        not_invertible: rows.iter().filter(|r| !r.exists).count(),
        rows,
    })
}
