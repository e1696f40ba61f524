//! Free-space optical downlink efficiencies.
//!
//! Optical quantities are SI: metres and radians. The per-link efficiency is a
//! product of independent factors: source, memory, detector, atmosphere and
//! diffraction-plus-pointing coupling into the receive aperture.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalLinkParams {
    pub wavelength: f64,
    pub divergence_half_angle: f64,
    /// Always `wavelength / (pi * divergence_half_angle)`; kept consistent by [`Self::new`].
    pub beam_waist: f64,
    pub pointing_jitter_rms: f64,
    pub receiver_radius: f64,
    pub zenith_transmission: f64,
}

impl OpticalLinkParams {
    pub fn new(
        wavelength: f64,
        divergence_half_angle: f64,
        pointing_jitter_rms: f64,
        receiver_radius: f64,
        zenith_transmission: f64,
    ) -> Result<Self> {
        let p = Self {
            wavelength,
            divergence_half_angle,
            beam_waist: wavelength / (PI * divergence_half_angle),
            pointing_jitter_rms,
            receiver_radius,
            zenith_transmission,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_jitter(&self, pointing_jitter_rms: f64) -> Self {
        Self {
            pointing_jitter_rms,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("divergence_half_angle", self.divergence_half_angle),
            ("beam_waist", self.beam_waist),
            ("receiver_radius", self.receiver_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        // Zero jitter is the ideal-pointing limit.
        if !(self.pointing_jitter_rms >= 0.0) || !self.pointing_jitter_rms.is_finite() {
            return Err(Error::param(
                "pointing_jitter_rms",
                format!("must be finite and >= 0, got {}", self.pointing_jitter_rms),
            ));
        }
        if !(self.zenith_transmission > 0.0 && self.zenith_transmission <= 1.0) {
            return Err(Error::param(
                "zenith_transmission",
                format!("must lie in (0, 1], got {}", self.zenith_transmission),
            ));
        }
        let product = self.beam_waist * self.divergence_half_angle * PI / self.wavelength;
        if (product - 1.0).abs() > 1e-12 {
            return Err(Error::param(
                "beam_waist",
                "waist and divergence are inconsistent with the wavelength",
            ));
        }
        Ok(())
    }
}

impl Default for OpticalLinkParams {
    fn default() -> Self {
        Self::new(795e-9, 3e-6, 1e-6, 0.5, 0.8).expect("default optics are valid")
    }
}

/// Single-pass transmission along the slant path (air-mass model).
pub fn atmospheric_transmission(theta: f64, zenith_transmission: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= FRAC_PI_2) {
        return Err(Error::domain(
            "atmospheric_transmission",
            format!("elevation {theta} rad outside (0, pi/2]"),
        ));
    }
    Ok(zenith_transmission.powf(1.0 / theta.sin()))
}

/// Gaussian 1/e² intensity radius after propagating `z` metres.
pub fn beam_radius(z: f64, params: &OpticalLinkParams) -> f64 {
    let w0 = params.beam_waist;
    w0 * (1.0 + (params.divergence_half_angle * z / w0).powi(2)).sqrt()
}

/// Per-axis standard deviation of the long-exposure spot: the beam's intensity
/// profile (std `w/2`) convolved with the jitter displacement (std `sigma_p z`).
pub fn effective_spot_sigma(z: f64, params: &OpticalLinkParams) -> f64 {
    let w = beam_radius(z, params);
    let jitter = params.pointing_jitter_rms * z;
    (0.25 * w * w + jitter * jitter).sqrt()
}

/// Fraction of the transmitted power collected by the circular receive aperture
/// at range `l` metres.
pub fn collected_fraction(l: f64, params: &OpticalLinkParams) -> f64 {
    let sigma = effective_spot_sigma(l, params);
    let r = params.receiver_radius;
    -(-r * r / (2.0 * sigma * sigma)).exp_m1()
}

/// Which factors enter `eta_total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorSet {
    pub src: bool,
    pub mem: bool,
    pub det: bool,
    pub atm: bool,
    pub dif: bool,
}

impl FactorSet {
    pub const ALL: Self = Self {
        src: true,
        mem: true,
        det: true,
        atm: true,
        dif: true,
    };
    pub const NONE: Self = Self {
        src: false,
        mem: false,
        det: false,
        atm: false,
        dif: false,
    };
    /// Detector, atmosphere and diffraction: the single-photon downlink.
    pub const DOWNLINK: Self = Self {
        det: true,
        atm: true,
        dif: true,
        ..Self::NONE
    };
}

/// Efficiencies of the hardware stages that do not depend on geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageEfficiencies {
    pub source: f64,
    pub memory: f64,
    pub detector: f64,
}

impl Default for StageEfficiencies {
    fn default() -> Self {
        Self {
            source: 0.20,
            memory: 0.74,
            detector: 0.70,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyBreakdown {
    pub eta_src: f64,
    pub eta_mem: f64,
    pub eta_det: f64,
    pub eta_atm: f64,
    pub eta_dif: f64,
    pub eta_total: f64,
}

/// Factorised satellite-to-ground efficiency at elevation `theta` and range
/// `l` metres. Excluded factors are reported as 1.
pub fn single_link_efficiency(
    theta: f64,
    l: f64,
    params: &OpticalLinkParams,
    stages: &StageEfficiencies,
    include: FactorSet,
) -> Result<EfficiencyBreakdown> {
    for (name, v) in [
        ("eta_src", stages.source),
        ("eta_mem", stages.memory),
        ("eta_det", stages.detector),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::param(name, format!("must lie in [0, 1], got {v}")));
        }
    }
    if !(l > 0.0) {
        return Err(Error::domain("single_link_efficiency", format!("range {l} m is not positive")));
    }
    let pick = |on: bool, v: f64| if on { v } else { 1.0 };
    let eta_atm = if include.atm {
        atmospheric_transmission(theta, params.zenith_transmission)?
    } else {
        1.0
    };
    let b = EfficiencyBreakdown {
        eta_src: pick(include.src, stages.source),
        eta_mem: pick(include.mem, stages.memory),
        eta_det: pick(include.det, stages.detector),
        eta_atm,
        eta_dif: pick(include.dif, collected_fraction(l, params)),
        eta_total: 0.0,
    };
    Ok(EfficiencyBreakdown {
        eta_total: b.eta_src * b.eta_mem * b.eta_det * b.eta_atm * b.eta_dif,
        ..b
    })
}

/// Numerical reference for [`collected_fraction`]: integrates the jitter-convolved
/// intensity over the pupil in polar coordinates without using the
/// Gaussian-convolution closed form.
#[cfg(any(test, feature = "quadrature"))]
pub mod quadrature {
    use super::{beam_radius, OpticalLinkParams};
    use std::f64::consts::PI;

    const XGK: [f64; 8] = [
        0.991_455_371_120_812_6,
        0.949_107_912_342_758_5,
        0.864_864_423_359_769_1,
        0.741_531_185_599_394_4,
        0.586_087_235_467_691_1,
        0.405_845_151_377_397_2,
        0.207_784_955_007_898_5,
        0.0,
    ];
    const WGK: [f64; 8] = [
        0.022_935_322_010_529_22,
        0.063_092_092_629_978_55,
        0.104_790_010_322_250_2,
        0.140_653_259_715_525_9,
        0.169_004_726_639_267_9,
        0.190_350_578_064_785_4,
        0.204_432_940_075_298_9,
        0.209_482_141_084_728_8,
    ];
    const WG: [f64; 4] = [
        0.129_484_966_168_869_7,
        0.279_705_391_489_276_7,
        0.381_830_050_505_118_9,
        0.417_959_183_673_469_4,
    ];

    fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut kronrod = WGK[7] * fc;
        let mut gauss = WG[3] * fc;
        for j in 0..7 {
            let x = h * XGK[j];
            let s = f(c - x) + f(c + x);
            kronrod += WGK[j] * s;
            if j % 2 == 1 {
                gauss += WG[j / 2] * s;
            }
        }
        (kronrod * h, ((kronrod - gauss) * h).abs())
    }

    /// Adaptive Gauss–Kronrod (7/15) integration to absolute tolerance `tol`.
    pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
            let (value, err) = gk15(f, a, b);
            if err <= tol || err <= 64.0 * f64::EPSILON * value.abs() || depth >= 40 {
                return value;
            }
            let m = 0.5 * (a + b);
            recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
        }
        recurse(f, a, b, tol, 0)
    }

    /// Far-field beam intensity normalised to unit total power.
    fn intensity(r: f64, w: f64) -> f64 {
        2.0 / (PI * w * w) * (-2.0 * r * r / (w * w)).exp()
    }

    /// Sum of [`integrate`] over `pieces` equal subintervals of `[a, b]`.
    fn integrate_split<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
        let h = (b - a) / pieces as f64;
        (0..pieces)
            .map(|i| integrate(f, a + i as f64 * h, a + (i + 1) as f64 * h, tol / pieces as f64))
            .sum()
    }

    /// Jitter-convolved intensity at radius `rho`, as a polar integral over the
    /// beam-centre displacement. `jitter` is the displacement standard
    /// deviation in metres.
    fn convolved_intensity(rho: f64, w: f64, jitter: f64, tol: f64) -> f64 {
        let two_var = 2.0 * jitter * jitter;
        let radial = |d: f64| {
            // Angular integral over [0, pi], doubled by symmetry.
            let angular = |phi: f64| {
                let r2 = rho * rho + d * d - 2.0 * rho * d * phi.cos();
                intensity(r2.max(0.0).sqrt(), w)
            };
            let ang = 2.0 * integrate_split(&angular, 0.0, PI, 8, tol);
            d * (-d * d / two_var).exp() * ang / (PI * two_var)
        };
        integrate_split(&radial, 0.0, 9.0 * jitter, 16, tol)
    }

    /// Collected fraction by numerical quadrature, absolute tolerance `tol`.
    pub fn collected_fraction(l: f64, params: &OpticalLinkParams, tol: f64) -> f64 {
        let w = beam_radius(l, params);
        let jitter = params.pointing_jitter_rms * l;
        let r = params.receiver_radius;
        let outer = |rho: f64| {
            let i = if jitter == 0.0 {
                intensity(rho, w)
            } else {
                convolved_intensity(rho, w, jitter, tol * 1e-2)
            };
            2.0 * PI * rho * i
        };
        integrate(&outer, 0.0, r, tol)
    }
}
