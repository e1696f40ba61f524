//! Circular-orbit pass geometry.
//!
//! Lengths are kilometres, angles radians, times seconds. The ground-track
//! separation `L_g` is the great-circle arc between the ground station and the
//! sub-satellite point.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Standard gravitational parameter of the Earth, km³/s².
pub const EARTH_MU_KM3_S2: f64 = 398_600.0;
pub const EARTH_RADIUS_KM: f64 = 6_371.0;

const ARCSIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalConfig {
    pub earth_radius: f64,
    pub altitude: f64,
    pub gravitational_parameter: f64,
}

impl Default for OrbitalConfig {
    fn default() -> Self {
        Self {
            earth_radius: EARTH_RADIUS_KM,
            altitude: 500.0,
            gravitational_parameter: EARTH_MU_KM3_S2,
        }
    }
}

impl OrbitalConfig {
    pub fn new(earth_radius: f64, altitude: f64, gravitational_parameter: f64) -> Result<Self> {
        let cfg = Self {
            earth_radius,
            altitude,
            gravitational_parameter,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        positive("earth_radius", self.earth_radius)?;
        positive("altitude", self.altitude)?;
        positive("gravitational_parameter", self.gravitational_parameter)
    }

    /// Orbit radius measured from the Earth's centre.
    pub fn orbit_radius(&self) -> f64 {
        self.earth_radius + self.altitude
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassGeometry {
    pub ground_track_separation: f64,
    pub slant_range: f64,
    pub elevation: f64,
}

impl PassGeometry {
    pub fn from_ground_track(ground_track: f64, orbit: &OrbitalConfig) -> Result<Self> {
        Ok(Self {
            ground_track_separation: ground_track,
            slant_range: slant_range(ground_track, orbit)?,
            elevation: elevation(ground_track, orbit)?,
        })
    }
}

fn check_ground_track(op: &'static str, ground_track: f64, orbit: &OrbitalConfig) -> Result<f64> {
    let angle = ground_track / orbit.earth_radius;
    if !(ground_track >= 0.0) || angle >= PI {
        return Err(Error::domain(
            op,
            format!("ground-track separation {ground_track} km outside [0, pi R_E)"),
        ));
    }
    Ok(angle)
}

/// Line-of-sight distance from the ground station to the satellite.
pub fn slant_range(ground_track: f64, orbit: &OrbitalConfig) -> Result<f64> {
    let angle = check_ground_track("slant_range", ground_track, orbit)?;
    if angle == 0.0 {
        return Ok(orbit.altitude);
    }
    let re = orbit.earth_radius;
    let rs = orbit.orbit_radius();
    let sq = re * re + rs * rs - 2.0 * re * rs * angle.cos();
    if !(sq > 0.0) {
        return Err(Error::domain("slant_range", format!("l^2 = {sq} is not positive")));
    }
    Ok(sq.sqrt())
}

/// Elevation of the satellite above the station's horizon.
pub fn elevation(ground_track: f64, orbit: &OrbitalConfig) -> Result<f64> {
    let angle = check_ground_track("elevation", ground_track, orbit)?;
    if angle == 0.0 {
        return Ok(FRAC_PI_2);
    }
    let l = slant_range(ground_track, orbit)?;
    let arg = orbit.earth_radius / l * angle.sin();
    if arg.abs() > 1.0 + ARCSIN_SLACK {
        return Err(Error::domain("elevation", format!("arcsin argument {arg} exceeds 1")));
    }
    Ok(FRAC_PI_2 - angle - arg.clamp(-1.0, 1.0).asin())
}

/// Closed-form inverse of the pass geometry: slant range at a given elevation.
pub fn slant_range_from_elevation(theta: f64, orbit: &OrbitalConfig) -> Result<f64> {
    if !(theta > 0.0 && theta <= FRAC_PI_2) {
        return Err(Error::domain(
            "slant_range_from_elevation",
            format!("elevation {theta} rad outside (0, pi/2]"),
        ));
    }
    let re = orbit.earth_radius;
    let h = orbit.altitude;
    let s = theta.sin();
    Ok((re * re * s * s + 2.0 * re * h + h * h).sqrt() - re * s)
}

/// Ground-track separation that produces slant range `l` (inverse law of cosines).
pub fn ground_track_from_slant_range(l: f64, orbit: &OrbitalConfig) -> Result<f64> {
    let re = orbit.earth_radius;
    let rs = orbit.orbit_radius();
    if !(l >= orbit.altitude) || l > re + rs {
        return Err(Error::domain(
            "ground_track_from_slant_range",
            format!("slant range {l} km outside [h, 2R_E + h]"),
        ));
    }
    let cos = ((re * re + rs * rs - l * l) / (2.0 * re * rs)).clamp(-1.0, 1.0);
    Ok(re * cos.acos())
}

/// Elevation seen at slant range `l`; the inverse of [`slant_range_from_elevation`].
pub fn elevation_from_slant_range(l: f64, orbit: &OrbitalConfig) -> Result<f64> {
    let re = orbit.earth_radius;
    let rs = orbit.orbit_radius();
    if !(l >= orbit.altitude) {
        return Err(Error::domain(
            "elevation_from_slant_range",
            format!("slant range {l} km below altitude {}", orbit.altitude),
        ));
    }
    let sin = (rs * rs - re * re - l * l) / (2.0 * re * l);
    if sin.abs() > 1.0 + ARCSIN_SLACK {
        return Err(Error::domain(
            "elevation_from_slant_range",
            format!("sin(elevation) = {sin} out of range"),
        ));
    }
    Ok(sin.clamp(-1.0, 1.0).asin())
}

/// Circular-orbit period from Kepler's third law.
pub fn orbital_period(orbit: &OrbitalConfig) -> f64 {
    let a = orbit.orbit_radius();
    2.0 * PI * (a * a * a / orbit.gravitational_parameter).sqrt()
}

/// Sub-satellite point speed over a non-rotating Earth, km/s.
pub fn ground_track_speed(orbit: &OrbitalConfig) -> f64 {
    2.0 * PI * orbit.earth_radius / orbital_period(orbit)
}

/// Time for the sub-satellite point to travel between two stations
/// `ogs_separation` km apart along the ground track.
pub fn buffer_time(ogs_separation: f64, orbit: &OrbitalConfig) -> Result<f64> {
    if !(ogs_separation >= 0.0) {
        return Err(Error::domain(
            "buffer_time",
            format!("station separation {ogs_separation} km is negative"),
        ));
    }
    Ok(ogs_separation / ground_track_speed(orbit))
}
