//! Coupled optical-polarisation / alkali-spin / noble-gas-spin dynamics on a
//! spherical cell.
//!
//! ```text
//! dP/dt = -gamma_p P + i Omega S
//! dS/dt = -(gamma_s + i delta_s) S + D_a lap S + i Omega P - i J K
//! dK/dt = -(gamma_k + i delta_k) K + D_b lap K - i J S
//! ```
//!
//! `S` vanishes at the wall; `K` has zero radial flux there. Quantum noise
//! terms are dropped and the absorbed signal enters as the initial condition.
//! By default `P` is not integrated: the optical write and read pulses are
//! treated as instantaneous mappings with the adiabatic-transfer efficiency.

mod grid;
mod protocol;
pub mod rk;

use num_complex::Complex64;

pub use grid::{radial_laplacian, Boundary, RadialGrid, MIN_POINTS};
pub use protocol::{
    simulate_protocol, write_kymograph_csv, Kymograph, ProtocolOutcome, ProtocolSchedule,
    KYMOGRAPH_HEADER,
};

use crate::afc::EnsembleParams;
use crate::error::{Error, Result};
use rk::{StepControl, StepStats};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialProfile {
    #[default]
    Uniform,
    /// Lowest Dirichlet eigenmode `sin(pi r / R) / (pi r / R)`.
    FundamentalMode,
}

impl InitialProfile {
    pub fn sample(&self, grid: &RadialGrid) -> Vec<Complex64> {
        let radius = grid.cell_radius();
        grid.node_positions()
            .iter()
            .map(|&r| match self {
                InitialProfile::Uniform => Complex64::new(1.0, 0.0),
                InitialProfile::FundamentalMode => {
                    let x = std::f64::consts::PI * r / radius;
                    Complex64::new(x.sin() / x, 0.0)
                }
            })
            .collect()
    }

    /// Profile scaled to unit volume-weighted norm.
    pub fn normalized(&self, grid: &RadialGrid) -> Vec<Complex64> {
        let mut f = self.sample(grid);
        let scale = grid.norm_sq(&f).sqrt().recip();
        f.iter_mut().for_each(|z| *z *= scale);
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldModel {
    /// Integrate `S` and `K` only; optical pulses are instantaneous maps.
    #[default]
    SpinOnly,
    /// Integrate `P`, `S` and `K`, with explicit control pulses.
    ThreeField,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_step: f64,
    pub max_steps: usize,
    pub initial_profile: InitialProfile,
    pub field_model: FieldModel,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-8,
            absolute_tolerance: 1e-10,
            max_step: f64::INFINITY,
            max_steps: 50_000_000,
            initial_profile: InitialProfile::Uniform,
            field_model: FieldModel::SpinOnly,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0) {
            return Err(Error::param("relative_tolerance", "must be > 0"));
        }
        if !(self.absolute_tolerance > 0.0) {
            return Err(Error::param("absolute_tolerance", "must be > 0"));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::param("max_step", "must be > 0"));
        }
        Ok(())
    }

    fn step_control(&self) -> StepControl {
        StepControl {
            rtol: self.relative_tolerance,
            atol: self.absolute_tolerance,
            max_step: self.max_step,
            max_steps: self.max_steps,
        }
    }
}

/// Radial profiles of the three collective amplitudes at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinFieldState {
    pub p: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub k: Vec<Complex64>,
    pub time: f64,
}

impl SpinFieldState {
    pub fn zeros(n: usize, time: f64) -> Self {
        Self {
            p: vec![ZERO; n],
            s: vec![ZERO; n],
            k: vec![ZERO; n],
            time,
        }
    }

    /// `∫ (|P|^2 + |S|^2 + |K|^2) r^2 dr`.
    pub fn total_norm_sq(&self, grid: &RadialGrid) -> f64 {
        grid.norm_sq(&self.p) + grid.norm_sq(&self.s) + grid.norm_sq(&self.k)
    }

    fn check(&self, grid: &RadialGrid) -> Result<()> {
        for f in [&self.p, &self.s, &self.k] {
            if f.len() != grid.point_count() {
                return Err(Error::LengthMismatch {
                    expected: grid.point_count(),
                    found: f.len(),
                });
            }
        }
        Ok(())
    }

    fn pack(&self, model: FieldModel) -> Vec<Complex64> {
        match model {
            FieldModel::SpinOnly => [&self.s[..], &self.k[..]].concat(),
            FieldModel::ThreeField => [&self.p[..], &self.s[..], &self.k[..]].concat(),
        }
    }

    fn unpack(y: &[Complex64], n: usize, model: FieldModel, time: f64) -> Self {
        match model {
            FieldModel::SpinOnly => Self {
                p: vec![ZERO; n],
                s: y[..n].to_vec(),
                k: y[n..2 * n].to_vec(),
                time,
            },
            FieldModel::ThreeField => Self {
                p: y[..n].to_vec(),
                s: y[n..2 * n].to_vec(),
                k: y[2 * n..3 * n].to_vec(),
                time,
            },
        }
    }
}

/// One piece of the drive on which the right-hand side is smooth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSegment {
    pub duration: f64,
    pub rabi_frequency: f64,
    /// Spin-exchange rate in effect; 0 while the noble-gas spins are parked.
    pub exchange_coupling: f64,
}

struct SpinSystem<'a> {
    grid: &'a RadialGrid,
    ens: &'a EnsembleParams,
    rabi: f64,
    exchange: f64,
    model: FieldModel,
}

impl SpinSystem<'_> {
    fn eval(&self, y: &[Complex64], dy: &mut [Complex64]) {
        let n = self.grid.point_count();
        let e = self.ens;
        let (p, s, k, dp, ds, dk) = match self.model {
            FieldModel::SpinOnly => {
                let (ds, dk) = dy.split_at_mut(n);
                (None, &y[..n], &y[n..], None, ds, dk)
            }
            FieldModel::ThreeField => {
                let (dp, rest) = dy.split_at_mut(n);
                let (ds, dk) = rest.split_at_mut(n);
                (Some(&y[..n]), &y[n..2 * n], &y[2 * n..], Some(dp), ds, dk)
            }
        };
        let decay_s = Complex64::new(e.alkali_decay, e.alkali_detuning);
        let decay_k = Complex64::new(e.noble_decay, e.noble_detuning);
        let ij = I * self.exchange;
        for i in 0..n {
            ds[i] = -decay_s * s[i] - ij * k[i];
            dk[i] = -decay_k * k[i] - ij * s[i];
        }
        if let (Some(p), Some(dp)) = (p, dp) {
            let iw = I * self.rabi;
            for i in 0..n {
                dp[i] = -e.optical_decay * p[i] + iw * s[i];
                ds[i] += iw * p[i];
            }
        }
        self.grid.add_laplacian(s, Boundary::Dirichlet, e.alkali_diffusion, ds);
        self.grid.add_laplacian(k, Boundary::Neumann, e.noble_diffusion, dk);
    }
}

/// Time derivative of the full three-field system at the given control
/// Rabi frequency, with the ensemble's exchange coupling switched on.
pub fn rhs(
    state: &SpinFieldState,
    grid: &RadialGrid,
    ens: &EnsembleParams,
    rabi_frequency: f64,
) -> Result<SpinFieldState> {
    state.check(grid)?;
    let sys = SpinSystem {
        grid,
        ens,
        rabi: rabi_frequency,
        exchange: ens.exchange_coupling,
        model: FieldModel::ThreeField,
    };
    let y = state.pack(FieldModel::ThreeField);
    let mut dy = vec![ZERO; y.len()];
    sys.eval(&y, &mut dy);
    Ok(SpinFieldState::unpack(&dy, grid.point_count(), FieldModel::ThreeField, state.time))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<SpinFieldState>,
    pub final_state: SpinFieldState,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }
}

/// Integrates the system through consecutive drive segments starting at
/// `initial.time`, restarting the stepper at each segment boundary.
///
/// States are recorded at every entry of `sample_times`, which must be
/// ascending and lie within the driven interval.
pub fn integrate(
    initial: &SpinFieldState,
    segments: &[DriveSegment],
    ens: &EnsembleParams,
    grid: &RadialGrid,
    solver: &SolverConfig,
    sample_times: &[f64],
) -> Result<Trajectory> {
    initial.check(grid)?;
    ens.validate()?;
    solver.validate()?;
    if sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("sample_times", "must be ascending"));
    }
    let mut edges = Vec::with_capacity(segments.len() + 1);
    let mut t = initial.time;
    edges.push(t);
    for seg in segments {
        if !(seg.duration >= 0.0) {
            return Err(Error::param("duration", "drive segments must have duration >= 0"));
        }
        t += seg.duration;
        edges.push(t);
    }
    let t_end = t;
    if let (Some(&first), Some(&last)) = (sample_times.first(), sample_times.last()) {
        let slack = 1e-12 * (t_end - initial.time).abs().max(1.0);
        if first < initial.time - slack || last > t_end + slack {
            return Err(Error::param(
                "sample_times",
                format!("must lie within [{}, {t_end}]", initial.time),
            ));
        }
    }

    let n = grid.point_count();
    let model = solver.field_model;
    let ctl = solver.step_control();
    let mut y = initial.pack(model);
    let mut states = Vec::with_capacity(sample_times.len());
    let mut stats = StepStats::default();

    let mut cursor = 0;
    while cursor < sample_times.len() && sample_times[cursor] <= initial.time {
        states.push(SpinFieldState::unpack(&y, n, model, sample_times[cursor]));
        cursor += 1;
    }
    for (idx, seg) in segments.iter().enumerate() {
        let (t0, t1) = (edges[idx], edges[idx + 1]);
        let is_last = idx + 1 == segments.len();
        let hi = sample_times[cursor..]
            .iter()
            .take_while(|&&ts| ts <= t1 || is_last)
            .count();
        let local = &sample_times[cursor..cursor + hi];
        cursor += hi;
        let sys = SpinSystem {
            grid,
            ens,
            rabi: seg.rabi_frequency,
            exchange: seg.exchange_coupling,
            model,
        };
        stats += rk::integrate_interval(
            |y, dy| sys.eval(y, dy),
            t0,
            t1,
            &mut y,
            &ctl,
            local,
            |ts, ys| states.push(SpinFieldState::unpack(ys, n, model, ts)),
        )?;
    }
    Ok(Trajectory {
        states,
        final_state: SpinFieldState::unpack(&y, n, model, t_end),
        stats,
    })
}
