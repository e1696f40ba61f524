//! Analytic model of the cavity-enhanced alkali/noble-gas AFC memory.
//!
//! Comb frequencies (`total_bandwidth`, `tooth_spacing`, `tooth_width`,
//! `homogeneous_linewidth`) are stored in Hz. The rephasing delay `2 pi / Delta`
//! reads the stored spacing as an angular frequency; [`comb_angular_spacing`]
//! is the only place that conversion happens.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AFCParams {
    pub total_bandwidth: f64,
    pub tooth_spacing: f64,
    pub tooth_width: f64,
    pub homogeneous_linewidth: f64,
}

impl Default for AFCParams {
    fn default() -> Self {
        Self {
            total_bandwidth: 27e9,
            tooth_spacing: 96e6,
            tooth_width: 12e6,
            homogeneous_linewidth: 5.96e6,
        }
    }
}

/// Non-fatal observations about a comb configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AFCWarning {
    /// Teeth narrower than twice the homogeneous linewidth cannot be prepared.
    ToothBelowLifetimeLimit,
}

impl AFCParams {
    pub fn validate(&self) -> Result<Vec<AFCWarning>> {
        if !(self.tooth_width > 0.0) {
            return Err(Error::param("tooth_width", "must be > 0"));
        }
        if !(self.tooth_spacing > self.tooth_width) {
            return Err(Error::param("tooth_spacing", "must exceed the tooth width (finesse > 1)"));
        }
        if !(self.total_bandwidth >= self.tooth_spacing) {
            return Err(Error::param("total_bandwidth", "must be at least one tooth spacing"));
        }
        if !(self.homogeneous_linewidth >= 0.0) {
            return Err(Error::param("homogeneous_linewidth", "must be >= 0"));
        }
        let mut warnings = Vec::new();
        if self.tooth_width < 2.0 * self.homogeneous_linewidth {
            warnings.push(AFCWarning::ToothBelowLifetimeLimit);
        }
        Ok(warnings)
    }

    pub fn finesse(&self) -> Result<f64> {
        finesse(self)
    }
}

/// Spin-exchange ensemble and transport parameters.
///
/// Rates are s⁻¹, diffusion m²/s, radius m, densities cm⁻³. Densities are
/// descriptive only; no model consumes them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleParams {
    pub exchange_coupling: f64,
    pub alkali_decay: f64,
    pub noble_decay: f64,
    pub alkali_detuning: f64,
    pub noble_detuning: f64,
    pub alkali_diffusion: f64,
    pub noble_diffusion: f64,
    pub cell_radius: f64,
    pub alkali_density: f64,
    pub noble_density: f64,
    pub optical_decay: f64,
}

impl EnsembleParams {
    /// K–³He cell as printed: 1 cm radius, J = 2e-5, D_a = 1.02e-8 m²/s,
    /// D_b = 2.05e-8 m²/s, gamma_s = 3.1e-7 s⁻¹, delta_k = 1.11e-3.
    pub fn paper_literal() -> Self {
        Self {
            exchange_coupling: 2.00e-5,
            alkali_decay: 3.1e-7,
            noble_decay: 0.0,
            alkali_detuning: 0.0,
            noble_detuning: 1.11e-3,
            alkali_diffusion: 1.02e-8,
            noble_diffusion: 2.05e-8,
            cell_radius: 0.01,
            alkali_density: 5.0e14,
            noble_density: 6.0e19,
            optical_decay: 2.0 * PI * 5.96e6,
        }
    }

    /// Same cell, with the exchange rate raised so a full transfer takes one
    /// second and the exchange running on resonance.
    pub fn rescaled() -> Self {
        Self {
            exchange_coupling: PI / 2.0,
            noble_detuning: 0.0,
            ..Self::paper_literal()
        }
    }

    /// No decay, detuning or diffusion: the exchange is a pure rotation.
    pub fn lossless() -> Self {
        Self {
            alkali_decay: 0.0,
            noble_decay: 0.0,
            alkali_detuning: 0.0,
            noble_detuning: 0.0,
            alkali_diffusion: 0.0,
            noble_diffusion: 0.0,
            optical_decay: 0.0,
            ..Self::rescaled()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("exchange_coupling", self.exchange_coupling),
            ("alkali_decay", self.alkali_decay),
            ("noble_decay", self.noble_decay),
            ("alkali_diffusion", self.alkali_diffusion),
            ("noble_diffusion", self.noble_diffusion),
            ("optical_decay", self.optical_decay),
            ("alkali_density", self.alkali_density),
            ("noble_density", self.noble_density),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.alkali_detuning.is_finite() && self.noble_detuning.is_finite()) {
            return Err(Error::param("detuning", "must be finite"));
        }
        if !(self.cell_radius > 0.0) {
            return Err(Error::param("cell_radius", "must be > 0"));
        }
        Ok(())
    }

    /// Exchange time for a complete alkali → noble-gas transfer, `pi / (2J)`.
    pub fn full_transfer_time(&self) -> f64 {
        PI / (2.0 * self.exchange_coupling)
    }
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self::paper_literal()
    }
}

/// Cavity decay `kappa` and the lumped ensemble coupling `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    pub cavity_decay: f64,
    pub ensemble_coupling: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        // impedance matched
        Self {
            cavity_decay: 1.0,
            ensemble_coupling: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPulse {
    pub duration: f64,
    pub rabi_frequency: f64,
    pub exchange_duration: f64,
}

impl ControlPulse {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("duration", self.duration),
            ("rabi_frequency", self.rabi_frequency),
            ("exchange_duration", self.exchange_duration),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

pub fn finesse(afc: &AFCParams) -> Result<f64> {
    if !(afc.tooth_width > 0.0) {
        return Err(Error::domain("finesse", "tooth width must be > 0"));
    }
    Ok(afc.tooth_spacing / afc.tooth_width)
}

/// Number of temporal modes the comb can hold, `floor(2 Gamma / (5 Delta))`.
pub fn multimode_capacity(total_bandwidth: f64, tooth_spacing: f64) -> Result<u64> {
    if !(tooth_spacing > 0.0) || !(total_bandwidth >= 0.0) {
        return Err(Error::domain(
            "multimode_capacity",
            "tooth spacing must be > 0 and bandwidth >= 0",
        ));
    }
    Ok((2.0 * total_bandwidth / (5.0 * tooth_spacing)).floor() as u64)
}

/// Amplitude reflection coefficient of the memory cavity; the absorbed
/// fraction is `1 - r^2`.
pub fn reflection_coefficient(cavity: &CavityParams) -> Result<f64> {
    let sum = cavity.cavity_decay + cavity.ensemble_coupling;
    if !(sum > 0.0) {
        return Err(Error::domain("reflection_coefficient", "kappa + Z must be > 0"));
    }
    Ok((cavity.cavity_decay - cavity.ensemble_coupling) / sum)
}

pub fn absorbed_fraction(cavity: &CavityParams) -> Result<f64> {
    let r = reflection_coefficient(cavity)?;
    Ok(1.0 - r * r)
}

/// Optical → alkali-spin mapping under a chirped adiabatic control pulse.
pub fn optical_to_spin_efficiency(pulse: &ControlPulse, total_bandwidth: f64) -> Result<f64> {
    if !(total_bandwidth > 0.0) {
        return Err(Error::domain("optical_to_spin_efficiency", "bandwidth must be > 0"));
    }
    let x = PI * pulse.duration * pulse.rabi_frequency.powi(2) / total_bandwidth;
    Ok(-(-x).exp_m1())
}

/// Alkali → noble-gas transfer through spin-exchange collisions. A vanishing
/// coupling means there is no transfer channel.
pub fn exchange_transfer_efficiency(alkali_decay: f64, exchange_coupling: f64) -> f64 {
    if exchange_coupling <= 0.0 {
        return 0.0;
    }
    (-PI * alkali_decay / (2.0 * exchange_coupling)).exp()
}

/// Comb dephasing penalty `sinc^2(pi / F)`.
pub fn comb_dephasing_factor(finesse: f64) -> Result<f64> {
    if !(finesse > 0.0) {
        return Err(Error::domain("comb_dephasing_factor", "finesse must be > 0"));
    }
    if finesse.is_infinite() {
        return Ok(1.0);
    }
    let x = PI / finesse;
    Ok((x.sin() / x).powi(2))
}

/// Round-trip memory efficiency.
///
/// Evaluated exactly as the closed form is printed, which differs from the
/// single-step factors above: the transfer exponent carries `pi^2` rather than
/// `pi`, and the exchange exponent is `pi gamma_s / J` rather than
/// `pi gamma_s / (2J)`.
pub fn total_memory_efficiency(
    pulse: &ControlPulse,
    ens: &EnsembleParams,
    afc: &AFCParams,
) -> Result<f64> {
    if !(afc.total_bandwidth > 0.0) {
        return Err(Error::domain("total_memory_efficiency", "bandwidth must be > 0"));
    }
    let x = PI * PI * pulse.duration * pulse.rabi_frequency.powi(2) / afc.total_bandwidth;
    let transfer = -(-x).exp_m1();
    let exchange = if ens.exchange_coupling > 0.0 {
        (-PI * ens.alkali_decay / ens.exchange_coupling).exp()
    } else {
        0.0
    };
    Ok(transfer * transfer * exchange * comb_dephasing_factor(finesse(afc)?)?)
}

/// Tooth spacing read as an angular frequency (rad/s) for the rephasing delay.
pub fn comb_angular_spacing(tooth_spacing_hz: f64) -> f64 {
    tooth_spacing_hz
}

/// Delay between absorption and re-emission: `2T' + 2T + 2 pi / Delta`.
pub fn echo_time(pulse: &ControlPulse, tooth_spacing: f64) -> Result<f64> {
    if !(tooth_spacing > 0.0) {
        return Err(Error::domain("echo_time", "tooth spacing must be > 0"));
    }
    Ok(2.0 * pulse.exchange_duration
        + 2.0 * pulse.duration
        + 2.0 * PI / comb_angular_spacing(tooth_spacing))
}

/// Probability of at least one success among `modes` independent attempts.
pub fn multimode_success(p: f64, modes: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("multimode_success", format!("probability {p} outside [0, 1]")));
    }
    if modes == 0 {
        return Err(Error::domain("multimode_success", "mode count must be >= 1"));
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    Ok(-((modes as f64) * (-p).ln_1p()).exp_m1())
}
