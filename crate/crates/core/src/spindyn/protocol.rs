use std::io::{self, Write};

use super::rk::StepStats;
use super::{integrate, DriveSegment, FieldModel, RadialGrid, SolverConfig, SpinFieldState};
use crate::afc::{optical_to_spin_efficiency, ControlPulse, EnsembleParams};
use crate::error::{Error, Result};
use crate::format::fmt_full;

pub const KYMOGRAPH_HEADER: &str = "t_seconds,r_over_R,S_norm,K_norm";

/// Timing of one store-and-retrieve cycle.
///
/// The signal is written at `write_time`, moved into the noble-gas spins over
/// one exchange window, parked for `dark_interval` with the exchange switched
/// off, then moved back over a second exchange window and read out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSchedule {
    pub write_time: f64,
    pub exchange_window: f64,
    pub dark_interval: f64,
    /// Optical control pulse length `T`.
    pub pulse_duration: f64,
    pub rabi_frequency: f64,
    /// Comb bandwidth `Gamma`, Hz; sets the adiabatic mapping efficiency.
    pub comb_bandwidth: f64,
    /// Rows in each kymograph.
    pub sample_count: usize,
}

impl ProtocolSchedule {
    /// Schedule with a complete-transfer exchange window `pi / (2J)`.
    pub fn full_transfer(ens: &EnsembleParams, dark_interval: f64) -> Self {
        Self {
            write_time: 0.0,
            exchange_window: ens.full_transfer_time(),
            dark_interval,
            pulse_duration: 1e-6,
            rabi_frequency: 1e9,
            comb_bandwidth: 27e9,
            sample_count: 201,
        }
    }

    pub fn control_pulse(&self) -> ControlPulse {
        ControlPulse {
            duration: self.pulse_duration,
            rabi_frequency: self.rabi_frequency,
            exchange_duration: self.exchange_window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("write_time", self.write_time),
            ("exchange_window", self.exchange_window),
            ("dark_interval", self.dark_interval),
            ("pulse_duration", self.pulse_duration),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.comb_bandwidth > 0.0) {
            return Err(Error::param("comb_bandwidth", "must be > 0"));
        }
        if self.sample_count < 2 {
            return Err(Error::param("sample_count", "need at least 2 samples"));
        }
        Ok(())
    }

    /// Drive pieces from the write instant to the end of read-out.
    pub fn segments(&self, ens: &EnsembleParams, model: FieldModel) -> Vec<DriveSegment> {
        let exchange = DriveSegment {
            duration: self.exchange_window,
            rabi_frequency: 0.0,
            exchange_coupling: ens.exchange_coupling,
        };
        let dark = DriveSegment {
            duration: self.dark_interval,
            rabi_frequency: 0.0,
            exchange_coupling: 0.0,
        };
        match model {
            FieldModel::SpinOnly => vec![exchange, dark, exchange],
            FieldModel::ThreeField => {
                let pulse = DriveSegment {
                    duration: self.pulse_duration,
                    rabi_frequency: self.rabi_frequency,
                    exchange_coupling: 0.0,
                };
                vec![pulse, exchange, dark, exchange, pulse]
            }
        }
    }

    /// Instant at which retrieval completes.
    pub fn read_time(&self, model: FieldModel) -> f64 {
        let spin = 2.0 * self.exchange_window + self.dark_interval;
        let optical = match model {
            FieldModel::SpinOnly => 0.0,
            FieldModel::ThreeField => 2.0 * self.pulse_duration,
        };
        self.write_time + spin + optical
    }
}

/// `|field(r, t)|^2` on a uniform time grid, normalised to the peak of the
/// initial excitation.
#[derive(Debug, Clone, PartialEq)]
pub struct Kymograph {
    pub times: Vec<f64>,
    /// Node radii divided by the cell radius.
    pub radii: Vec<f64>,
    /// Row-major: one row of `radii.len()` values per time.
    pub values: Vec<f64>,
}

impl Kymograph {
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.radii.len();
        &self.values[i * n..(i + 1) * n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub kymograph_s: Kymograph,
    pub kymograph_k: Kymograph,
    /// Retrieved over input excitation, including the optical mappings.
    pub eta_mem: f64,
    /// Spin-wave part alone: `||S_out||^2 / ||S_in||^2`.
    pub spin_retrieval: f64,
    /// Write-and-read optical mapping factor.
    pub optical_mapping: f64,
    pub read_time: f64,
    pub final_state: SpinFieldState,
    pub stats: StepStats,
}

/// Runs write, transfer, storage, reverse transfer and read on the radial grid.
pub fn simulate_protocol(
    ens: &EnsembleParams,
    schedule: &ProtocolSchedule,
    grid: &RadialGrid,
    solver: &SolverConfig,
) -> Result<ProtocolOutcome> {
    schedule.validate()?;
    let model = solver.field_model;
    let n = grid.point_count();
    let loaded = solver.initial_profile.normalized(grid);
    let mut initial = SpinFieldState::zeros(n, schedule.write_time);
    match model {
        FieldModel::SpinOnly => initial.s = loaded.clone(),
        FieldModel::ThreeField => initial.p = loaded.clone(),
    }
    let input_norm = grid.norm_sq(&loaded);
    let peak = loaded.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);

    let read_time = schedule.read_time(model);
    let count = schedule.sample_count;
    let times: Vec<f64> = (0..count)
        .map(|i| {
            if i + 1 == count {
                read_time
            } else {
                read_time * i as f64 / (count - 1) as f64
            }
        })
        .collect();
    let split = times.partition_point(|&t| t < schedule.write_time);

    let segments = schedule.segments(ens, model);
    let traj = integrate(&initial, &segments, ens, grid, solver, &times[split..])?;

    let radius = grid.cell_radius();
    let radii: Vec<f64> = grid.node_positions().iter().map(|r| r / radius).collect();
    let mut s_vals = vec![0.0; split * n];
    let mut k_vals = vec![0.0; split * n];
    for st in &traj.states {
        s_vals.extend(st.s.iter().map(|z| z.norm_sqr() / peak));
        k_vals.extend(st.k.iter().map(|z| z.norm_sqr() / peak));
    }

    let fin = &traj.final_state;
    let (eta_mem, spin_retrieval, optical_mapping) = match model {
        FieldModel::SpinOnly => {
            let spin = grid.norm_sq(&fin.s) / input_norm;
            let map = optical_to_spin_efficiency(&schedule.control_pulse(), schedule.comb_bandwidth)?;
            (map * map * spin, spin, map * map)
        }
        FieldModel::ThreeField => {
            let eta = grid.norm_sq(&fin.p) / input_norm;
            (eta, eta, 1.0)
        }
    };

    Ok(ProtocolOutcome {
        kymograph_s: Kymograph {
            times: times.clone(),
            radii: radii.clone(),
            values: s_vals,
        },
        kymograph_k: Kymograph {
            times,
            radii,
            values: k_vals,
        },
        eta_mem,
        spin_retrieval,
        optical_mapping,
        read_time,
        final_state: traj.final_state,
        stats: traj.stats,
    })
}

/// Long-format kymograph export, one row per (time, radius), time-major.
pub fn write_kymograph_csv<W: Write>(s: &Kymograph, k: &Kymograph, mut out: W) -> io::Result<()> {
    writeln!(out, "{KYMOGRAPH_HEADER}")?;
    let n = s.radii.len();
    for (i, t) in s.times.iter().enumerate() {
        let t = fmt_full(*t);
        for j in 0..n {
            writeln!(
                out,
                "{t},{},{},{}",
                fmt_full(s.radii[j]),
                fmt_full(s.values[i * n + j]),
                fmt_full(k.values[i * n + j])
            )?;
        }
    }
    Ok(())
}
