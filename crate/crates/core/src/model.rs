//! Measurement configuration: the bilinear Hamiltonian of system, pointers
//! and Caldeira-Leggett bath, the pointer and system preparations, and the
//! choice of measured pointer observables.
//!
//! Phase-space vectors are stacked as
//! `(X_S, X_1, X_2, P_S, P_1, P_2, q_1..q_N, k_1..k_N)`, in units with ħ = 1.

use nalgebra::{DMatrix, SMatrix, Vector3};

use crate::distributions::GridDensity;
use crate::error::{Error, Result};

pub type CouplingMatrix = SMatrix<f64, 2, 4>;

/// A scalar-or-matrix function of time that is constant on consecutive
/// segments. Every segment but the last has a finite duration.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise<T> {
    breaks: Vec<f64>,
    values: Vec<T>,
}

impl<T: Clone> Piecewise<T> {
    pub fn constant(value: T) -> Self {
        Self {
            breaks: Vec::new(),
            values: vec![value],
        }
    }

    /// Build from `(duration, value)` segments followed by the value that
    /// holds forever after.
    pub fn from_segments(segments: Vec<(f64, T)>, tail: T) -> Result<Self> {
        let mut breaks = Vec::with_capacity(segments.len());
        let mut values = Vec::with_capacity(segments.len() + 1);
        let mut end = 0.0;
        for (duration, value) in segments {
            if !(duration.is_finite() && duration > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "segment duration {duration} must be finite and positive"
                )));
            }
            end += duration;
            breaks.push(end);
            values.push(value);
        }
        values.push(tail);
        Ok(Self { breaks, values })
    }

    /// Value in force at time `t`; at a break the later segment wins.
    pub fn at(&self, t: f64) -> &T {
        let k = self.breaks.partition_point(|&b| b <= t);
        &self.values[k]
    }

    /// Times at which the value may jump.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Piecewise<U> {
        Piecewise {
            breaks: self.breaks.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// Particle mass. An infinite mass drops the kinetic term, which is the
/// canonical Arthurs-Kelly limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mass(f64);

impl Mass {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && !value.is_nan() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidModel(format!(
                "mass {value} must be positive"
            )))
        }
    }

    pub const fn infinite() -> Self {
        Self(f64::INFINITY)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn inverse(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }
}

/// Quadratic potentials `C_S, C_1, C_2` and the 2×4 coupling of
/// `(X_S, P_S)` to `(X_1, X_2, P_1, P_2)` during one time segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub potentials: [f64; 3],
    pub coupling: CouplingMatrix,
}

impl Interaction {
    pub fn arthurs_kelly(kappa: f64) -> Self {
        let mut coupling = CouplingMatrix::zeros();
        coupling[(0, 2)] = kappa;
        coupling[(1, 3)] = kappa;
        Self {
            potentials: [0.0; 3],
            coupling,
        }
    }

    pub fn zero() -> Self {
        Self {
            potentials: [0.0; 3],
            coupling: CouplingMatrix::zeros(),
        }
    }
}

/// The system-pointer part of the Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    /// `M_S, M_1, M_2`.
    pub masses: [Mass; 3],
    pub interaction: Piecewise<Interaction>,
}

impl QuadraticModel {
    pub fn new(masses: [Mass; 3], interaction: Piecewise<Interaction>) -> Result<Self> {
        for seg in interaction.values() {
            let finite = seg.potentials.iter().all(|v| v.is_finite())
                && seg.coupling.iter().all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidModel(
                    "potentials and couplings must be finite".into(),
                ));
            }
        }
        Ok(Self {
            masses,
            interaction,
        })
    }

    /// `H_int = κ (X_S P_1 + P_S P_2)` with all kinetic terms dropped.
    pub fn arthurs_kelly(kappa: f64) -> Self {
        Self {
            masses: [Mass::infinite(); 3],
            interaction: Piecewise::constant(Interaction::arthurs_kelly(kappa)),
        }
    }
}

/// Ohmic spectral density with exponential cutoff, `I(ω) = γ ω exp(-ω/Ω_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhmicExponential {
    pub gamma: f64,
    pub cutoff: f64,
}

impl OhmicExponential {
    pub fn density(&self, omega: f64) -> f64 {
        self.gamma * omega * (-omega / self.cutoff).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BathSpec {
    Continuous {
        family: OhmicExponential,
        beta: f64,
        modes: usize,
        switch: Piecewise<f64>,
        /// Which of `X_S, X_1, X_2` couple to the bath.
        pattern: [bool; 3],
    },
    Discrete {
        masses: Vec<f64>,
        frequencies: Vec<f64>,
        /// Row `j` couples mode `j` to `(X_S, X_1, X_2)`.
        couplings: Vec<[f64; 3]>,
        beta: f64,
        switch: Piecewise<f64>,
    },
}

impl BathSpec {
    /// No bath at all.
    pub fn closed() -> Self {
        BathSpec::Discrete {
            masses: Vec::new(),
            frequencies: Vec::new(),
            couplings: Vec::new(),
            beta: 1.0,
            switch: Piecewise::constant(0.0),
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            BathSpec::Continuous { beta, .. } | BathSpec::Discrete { beta, .. } => *beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let beta = self.beta();
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidModel(format!("beta {beta} must be positive")));
        }
        match self {
            BathSpec::Continuous { family, .. } => {
                if !(family.gamma >= 0.0 && family.gamma.is_finite()) {
                    return Err(Error::InvalidModel("gamma must be >= 0".into()));
                }
                if !(family.cutoff > 0.0 && family.cutoff.is_finite()) {
                    return Err(Error::InvalidModel("cutoff must be > 0".into()));
                }
            }
            BathSpec::Discrete {
                masses,
                frequencies,
                couplings,
                ..
            } => {
                if masses.len() != frequencies.len() || masses.len() != couplings.len() {
                    return Err(Error::InvalidModel(
                        "bath masses, frequencies and couplings differ in length".into(),
                    ));
                }
                if masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
                    return Err(Error::InvalidModel("bath masses must be positive".into()));
                }
                if frequencies.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
                    return Err(Error::InvalidModel(
                        "bath frequencies must be positive".into(),
                    ));
                }
                if couplings.iter().flatten().any(|g| !g.is_finite()) {
                    return Err(Error::InvalidModel("bath couplings must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathMode {
    pub mass: f64,
    pub frequency: f64,
    pub coupling: Vector3<f64>,
}

impl BathMode {
    /// Weight of this mode in the spectral density, `g gᵀ / (m ω)`.
    pub fn weight(&self) -> nalgebra::Matrix3<f64> {
        self.coupling * self.coupling.transpose() / (self.mass * self.frequency)
    }
}

/// A bath reduced to finitely many independent oscillators.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBath {
    pub modes: Vec<BathMode>,
    pub beta: f64,
    /// Switch function `g(t)` multiplying every coupling.
    pub switch: Piecewise<f64>,
}

impl DiscreteBath {
    pub fn closed() -> Self {
        Self {
            modes: Vec::new(),
            beta: 1.0,
            switch: Piecewise::constant(0.0),
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// True when no mode can exert a force at any time.
    pub fn is_decoupled(&self) -> bool {
        self.modes.iter().all(|m| m.coupling == Vector3::zeros())
            || self.switch.values().iter().all(|&g| g == 0.0)
    }

    /// Total spectral weight `Σ_j g_jᵀ g_j / (m_j ω_j)` per unit pattern.
    pub fn spectral_weights(&self) -> Vec<(f64, f64)> {
        self.modes
            .iter()
            .map(|m| (m.frequency, m.weight().trace()))
            .collect()
    }
}

/// Reduce a bath specification to discrete modes.
///
/// The Ohmic family uses `N` unit-mass modes at the bin centres
/// `ω_j = (j − ½) Δ`, `Δ = 8 Ω_c / N`, each carrying the trapezoidal
/// integral of `I(ω)` over its bin `[(j-1)Δ, jΔ]`. Discrete baths pass
/// through.
pub fn discretize_bath(spec: &BathSpec) -> Result<DiscreteBath> {
    spec.validate()?;
    match spec {
        BathSpec::Discrete {
            masses,
            frequencies,
            couplings,
            beta,
            switch,
        } => Ok(DiscreteBath {
            modes: masses
                .iter()
                .zip(frequencies)
                .zip(couplings)
                .map(|((&mass, &frequency), c)| BathMode {
                    mass,
                    frequency,
                    coupling: Vector3::from(*c),
                })
                .collect(),
            beta: *beta,
            switch: switch.clone(),
        }),
        BathSpec::Continuous {
            family,
            beta,
            modes,
            switch,
            pattern,
        } => {
            if *modes == 0 {
                if family.gamma > 0.0 && pattern.iter().any(|&p| p) {
                    return Err(Error::ZeroModes);
                }
                return Ok(DiscreteBath {
                    modes: Vec::new(),
                    beta: *beta,
                    switch: switch.clone(),
                });
            }
            let direction = Vector3::from_fn(|i, _| if pattern[i] { 1.0 } else { 0.0 });
            let step = 8.0 * family.cutoff / *modes as f64;
            let modes = (1..=*modes)
                .map(|j| {
                    let lo = (j - 1) as f64 * step;
                    let hi = j as f64 * step;
                    let weight = 0.5 * step * (family.density(lo) + family.density(hi));
                    let centre = 0.5 * (lo + hi);
                    let strength = (weight * centre).sqrt();
                    BathMode {
                        mass: 1.0,
                        frequency: centre,
                        coupling: direction * strength,
                    }
                })
                .collect();
            Ok(DiscreteBath {
                modes,
                beta: *beta,
                switch: switch.clone(),
            })
        }
    }
}

/// Squeezed-vacuum pointer states with position variances `σ_1², σ_2²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerPreparation {
    pub var1: f64,
    pub var2: f64,
}

impl PointerPreparation {
    pub fn new(var1: f64, var2: f64) -> Result<Self> {
        for v in [var1, var2] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "pointer variance {v} must be positive and finite"
                )));
            }
        }
        Ok(Self { var1, var2 })
    }
}

/// Gaussian system state given by its first and second moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
    pure: bool,
}

const PURITY_TOL: f64 = 1e-12;

impl GaussianState {
    pub fn new(mean_x: f64, mean_p: f64, var_x: f64, var_p: f64, cov_xp: f64) -> Result<Self> {
        let all_finite = [mean_x, mean_p, var_x, var_p, cov_xp]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || var_x <= 0.0 || var_p <= 0.0 {
            return Err(Error::InvalidState(
                "Gaussian moments must be finite with positive variances".into(),
            ));
        }
        let det = var_x * var_p - cov_xp * cov_xp;
        if det < 0.25 - PURITY_TOL {
            return Err(Error::InvalidState(format!(
                "covariance determinant {det} below 1/4 violates the uncertainty principle"
            )));
        }
        Ok(Self {
            mean_x,
            mean_p,
            var_x,
            var_p,
            cov_xp,
            pure: (det - 0.25).abs() <= PURITY_TOL,
        })
    }

    /// Pure centred state with `σ_x² σ_p² − σ_xp² = 1/4`.
    pub fn pure(var_x: f64, cov_xp: f64) -> Result<Self> {
        if !(var_x > 0.0) {
            return Err(Error::InvalidState("var_x must be positive".into()));
        }
        let var_p = (0.25 + cov_xp * cov_xp) / var_x;
        Self::new(0.0, 0.0, var_x, var_p, cov_xp)
    }

    pub fn is_pure(&self) -> bool {
        self.pure
    }

    pub fn determinant(&self) -> f64 {
        self.var_x * self.var_p - self.cov_xp * self.cov_xp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemState {
    Gaussian(GaussianState),
    /// Independently supplied position and momentum densities.
    Tabulated {
        position: GridDensity,
        momentum: GridDensity,
    },
}

impl SystemState {
    pub fn tabulated(position: GridDensity, momentum: GridDensity) -> Result<Self> {
        for d in [&position, &momentum] {
            let norm = d.integral();
            if (norm - 1.0).abs() > 1e-8 {
                return Err(Error::NotNormalized(norm));
            }
        }
        Ok(SystemState::Tabulated { position, momentum })
    }
}

/// Which observable of each pointer is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementChoice {
    X1X2,
    X1P2,
    P1X2,
    P1P2,
}

impl MeasurementChoice {
    pub const ALL: [MeasurementChoice; 4] = [
        MeasurementChoice::X1X2,
        MeasurementChoice::X1P2,
        MeasurementChoice::P1X2,
        MeasurementChoice::P1P2,
    ];

    /// Indices of the measured observables in the stacked phase-space vector.
    pub fn indices(self) -> [usize; 2] {
        match self {
            MeasurementChoice::X1X2 => [1, 2],
            MeasurementChoice::X1P2 => [1, 5],
            MeasurementChoice::P1X2 => [4, 2],
            MeasurementChoice::P1P2 => [4, 5],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasurementChoice::X1X2 => "x1-x2",
            MeasurementChoice::X1P2 => "x1-p2",
            MeasurementChoice::P1X2 => "p1-x2",
            MeasurementChoice::P1P2 => "p1-p2",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Index bookkeeping for the stacked phase-space vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub modes: usize,
}

impl Layout {
    pub const SYSTEM: usize = 0;

    pub fn new(modes: usize) -> Self {
        Self { modes }
    }

    pub fn dim(self) -> usize {
        2 * (3 + self.modes)
    }

    /// Position of particle 0 = system, 1, 2 = pointers.
    pub fn x(self, particle: usize) -> usize {
        particle
    }

    pub fn p(self, particle: usize) -> usize {
        3 + particle
    }

    pub fn q(self, mode: usize) -> usize {
        6 + mode
    }

    pub fn k(self, mode: usize) -> usize {
        6 + self.modes + mode
    }

    /// Pointer initial values `(X_1, X_2, P_1, P_2)`.
    pub fn pointer_indices(self) -> [usize; 4] {
        [1, 2, 4, 5]
    }

    /// Canonical pairs `(position index, momentum index)`.
    pub fn pairs(self) -> impl Iterator<Item = (usize, usize)> {
        (0..3)
            .map(move |i| (self.x(i), self.p(i)))
            .chain((0..self.modes).map(move |j| (self.q(j), self.k(j))))
    }

    /// The symplectic form `J` with `J[x, p] = 1`, `J[p, x] = -1`.
    pub fn symplectic_form(self) -> DMatrix<f64> {
        let n = self.dim();
        let mut j = DMatrix::zeros(n, n);
        for (a, b) in self.pairs() {
            j[(a, b)] = 1.0;
            j[(b, a)] = -1.0;
        }
        j
    }
}

/// Hessian `H` of the Hamiltonian at time `t`, so that `ℋ = ½ zᵀ H z`.
pub fn hamiltonian_hessian(model: &QuadraticModel, bath: &DiscreteBath, t: f64) -> DMatrix<f64> {
    let layout = Layout::new(bath.len());
    let n = layout.dim();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..3 {
        h[(layout.p(i), layout.p(i))] = model.masses[i].inverse();
    }
    let seg = model.interaction.at(t);
    for i in 0..3 {
        h[(layout.x(i), layout.x(i))] = 2.0 * seg.potentials[i];
    }
    let rows = [layout.x(0), layout.p(0)];
    let cols = [layout.x(1), layout.x(2), layout.p(1), layout.p(2)];
    for (r, &a) in rows.iter().enumerate() {
        for (c, &b) in cols.iter().enumerate() {
            h[(a, b)] += seg.coupling[(r, c)];
            h[(b, a)] += seg.coupling[(r, c)];
        }
    }
    let switch = *bath.switch.at(t);
    for (j, mode) in bath.modes.iter().enumerate() {
        let (q, k) = (layout.q(j), layout.k(j));
        h[(k, k)] = 1.0 / mode.mass;
        h[(q, q)] = mode.mass * mode.frequency * mode.frequency;
        for i in 0..3 {
            let g = switch * mode.coupling[i];
            h[(q, layout.x(i))] += g;
            h[(layout.x(i), q)] += g;
        }
    }
    h
}

/// Generator `G(t) = J H(t)` of the Heisenberg flow `dz/dt = G z`.
pub fn assemble_generator(model: &QuadraticModel, bath: &DiscreteBath, t: f64) -> DMatrix<f64> {
    let layout = Layout::new(bath.len());
    layout.symplectic_form() * hamiltonian_hessian(model, bath, t)
}

/// All times at which the generator may jump.
pub fn discontinuities(model: &QuadraticModel, bath: &DiscreteBath) -> Vec<f64> {
    let mut out: Vec<f64> = model
        .interaction
        .breaks()
        .iter()
        .chain(bath.switch.breaks())
        .copied()
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}
