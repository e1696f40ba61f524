//! Dual-downlink versus memory-buffered zenith downlink comparison.
//!
//! Slant ranges here are kilometres (converted to metres for the optics);
//! angles are radians.
//!
//! The combined per-trial efficiency uses detector, atmosphere and
//! diffraction per arm, squared for the two arms, times the memory efficiency
//! for the buffered case. Source, Bell-measurement and QND efficiencies are
//! not part of this product; [`crate::linkbudget::single_link_efficiency`]
//! still offers the full factorisation.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::{fmt_full, fmt_table};
use crate::geometry::{buffer_time, elevation_from_slant_range, slant_range_from_elevation, OrbitalConfig};
use crate::linkbudget::{atmospheric_transmission, collected_fraction, OpticalLinkParams};
use crate::skr::{feasibility, instantaneous_skr, QKDParams};

const KM: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub orbit: OrbitalConfig,
    pub link: OpticalLinkParams,
    pub qkd: QKDParams,
    pub detector_efficiency: f64,
    pub dual_elevation: f64,
    /// Taken as given rather than derived from `dual_elevation`.
    pub dual_slant_range: f64,
    pub buffered_elevation: f64,
    pub buffered_slant_range: f64,
    pub ogs_separation: f64,
    pub eta_mem: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            orbit: OrbitalConfig::default(),
            link: OpticalLinkParams::default(),
            qkd: QKDParams::default(),
            detector_efficiency: 0.70,
            dual_elevation: 20f64.to_radians(),
            dual_slant_range: 1461.9,
            buffered_elevation: FRAC_PI_2,
            buffered_slant_range: 500.0,
            ogs_separation: 3267.9,
            eta_mem: 0.74,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.orbit.validate()?;
        self.link.validate()?;
        self.qkd.validate()?;
        for (name, v) in [
            ("dual_slant_range", self.dual_slant_range),
            ("buffered_slant_range", self.buffered_slant_range),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("dual_elevation", self.dual_elevation),
            ("buffered_elevation", self.buffered_elevation),
        ] {
            if !(v > 0.0 && v <= FRAC_PI_2) {
                return Err(Error::param(name, format!("must lie in (0, pi/2], got {v}")));
            }
        }
        for (name, v) in [("eta_mem", self.eta_mem), ("detector_efficiency", self.detector_efficiency)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(self.ogs_separation >= 0.0) {
            return Err(Error::param("ogs_separation", "must be >= 0"));
        }
        Ok(())
    }
}

/// Detector × atmosphere × diffraction for one arm.
fn arm_efficiency(cfg: &ScenarioConfig, theta: f64, range_km: f64, link: &OpticalLinkParams) -> Result<f64> {
    Ok(cfg.detector_efficiency
        * atmospheric_transmission(theta, link.zenith_transmission)?
        * collected_fraction(range_km * KM, link))
}

pub fn combined_eta_dual(cfg: &ScenarioConfig) -> Result<f64> {
    cfg.validate()?;
    let arm = arm_efficiency(cfg, cfg.dual_elevation, cfg.dual_slant_range, &cfg.link)?;
    Ok(arm * arm)
}

pub fn combined_eta_buffered(cfg: &ScenarioConfig) -> Result<f64> {
    cfg.validate()?;
    let arm = arm_efficiency(cfg, cfg.buffered_elevation, cfg.buffered_slant_range, &cfg.link)?;
    Ok(cfg.eta_mem * arm * arm)
}

/// Buffered over dual success probability; equal to the key-rate ratio.
pub fn improvement_factor(cfg: &ScenarioConfig) -> Result<f64> {
    let dual = combined_eta_dual(cfg)?;
    if dual <= 0.0 {
        return Err(Error::domain("improvement_factor", "dual-downlink efficiency is zero"));
    }
    Ok(combined_eta_buffered(cfg)? / dual)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioResult {
    pub eta_dual: f64,
    pub eta_buffered: f64,
    pub skr_dual: f64,
    pub skr_buffered: f64,
    pub gain: f64,
    pub t_buffer: f64,
    pub feasible: bool,
}

pub fn table_one(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let eta_dual = combined_eta_dual(cfg)?;
    let eta_buffered = combined_eta_buffered(cfg)?;
    let herald = cfg.qkd.herald_probability;
    let skr_dual = instantaneous_skr(&cfg.qkd, herald * eta_dual)?;
    let skr_buffered = instantaneous_skr(&cfg.qkd, herald * eta_buffered)?;
    let gain = if eta_dual > 0.0 { eta_buffered / eta_dual } else { 0.0 };
    let t_buffer = buffer_time(cfg.ogs_separation, &cfg.orbit)?;
    Ok(ScenarioResult {
        eta_dual,
        eta_buffered,
        skr_dual,
        skr_buffered,
        gain,
        t_buffer,
        feasible: eta_buffered > 0.0 && feasibility(cfg.qkd.memory_lifetime, t_buffer),
    })
}

const RESULT_KEYS: [&str; 7] = [
    "eta_dual",
    "eta_buffered",
    "skr_dual",
    "skr_buffered",
    "gain",
    "t_buffer",
    "feasible",
];

impl ScenarioResult {
    /// `key = value` lines, full precision, fixed key order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (key, v) in RESULT_KEYS[..6].iter().zip([
            self.eta_dual,
            self.eta_buffered,
            self.skr_dual,
            self.skr_buffered,
            self.gain,
            self.t_buffer,
        ]) {
            let _ = writeln!(s, "{key} = {}", fmt_full(v));
        }
        let _ = writeln!(s, "feasible = {}", self.feasible);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut vals = [None; 6];
        let mut feasible = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cfg_err = |key: &str, detail: &str| Error::Config {
                line: i + 1,
                key: key.to_string(),
                detail: detail.to_string(),
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match RESULT_KEYS.iter().position(|k| *k == key) {
                Some(6) => {
                    feasible = Some(value.parse::<bool>().map_err(|_| cfg_err(key, "not a boolean"))?)
                }
                Some(idx) => {
                    vals[idx] = Some(value.parse::<f64>().map_err(|_| cfg_err(key, "not a number"))?)
                }
                None => return Err(cfg_err(key, "unknown key")),
            }
        }
        let get = |i: usize| {
            vals[i].ok_or_else(|| Error::Config {
                line: 0,
                key: RESULT_KEYS[i].to_string(),
                detail: "missing".into(),
            })
        };
        Ok(Self {
            eta_dual: get(0)?,
            eta_buffered: get(1)?,
            skr_dual: get(2)?,
            skr_buffered: get(3)?,
            gain: get(4)?,
            t_buffer: get(5)?,
            feasible: feasible.ok_or_else(|| Error::Config {
                line: 0,
                key: "feasible".into(),
                detail: "missing".into(),
            })?,
        })
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "| Scenario | Combined eta | SKR (bits/s) |");
        let _ = writeln!(s, "|---|---|---|");
        let _ = writeln!(s, "| Dual downlink | {} | {} |", fmt_table(self.eta_dual), fmt_table(self.skr_dual));
        let _ = writeln!(
            s,
            "| Buffered downlink | {} | {} |",
            fmt_table(self.eta_buffered),
            fmt_table(self.skr_buffered)
        );
        let skr_gain = if self.skr_dual > 0.0 { self.skr_buffered / self.skr_dual } else { 0.0 };
        let _ = writeln!(s, "| Improvement factor | {} | {} |", fmt_table(self.gain), fmt_table(skr_gain));
        let _ = writeln!(s);
        let _ = writeln!(s, "Buffer time: {} s", fmt_table(self.t_buffer));
        let _ = writeln!(s, "Memory feasible: {}", if self.feasible { "yes" } else { "no" });
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("scenario,eta,skr_bits_per_s\n");
        let _ = writeln!(s, "dual,{},{}", fmt_full(self.eta_dual), fmt_full(self.skr_dual));
        let _ = writeln!(s, "buffered,{},{}", fmt_full(self.eta_buffered), fmt_full(self.skr_buffered));
        s
    }
}

/// Values on a rectangular grid, first axis major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGrid {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub values: Vec<f64>,
}

impl ScenarioGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axis2.len() + j]
    }

    /// Long-format CSV with the grid's own axis values.
    pub fn to_csv(&self, header: [&str; 3]) -> String {
        long_csv(header, &self.axis1, &self.axis2, &self.values)
    }
}

/// Long-format CSV, first axis major. The axes given here are only printed,
/// so they may be in display units different from those used to compute
/// `values`.
pub fn long_csv(header: [&str; 3], axis1: &[f64], axis2: &[f64], values: &[f64]) -> String {
    assert_eq!(values.len(), axis1.len() * axis2.len(), "grid shape mismatch");
    let mut s = header.join(",");
    s.push('\n');
    let col2: Vec<String> = axis2.iter().map(|&b| fmt_full(b)).collect();
    for (i, &a) in axis1.iter().enumerate() {
        let a = fmt_full(a);
        for (j, b) in col2.iter().enumerate() {
            let _ = writeln!(s, "{a},{b},{}", fmt_full(values[i * axis2.len() + j]));
        }
    }
    s
}

fn check_axis(name: &'static str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::param(name, "axis is empty"));
    }
    if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(name, "axis must be finite and strictly ascending"));
    }
    Ok(())
}

/// Single-photon downlink efficiency over slant range (km) × pointing jitter
/// (rad). Elevation follows from range through the pass geometry.
pub fn downlink_probability_map(
    range_axis: &[f64],
    jitter_axis: &[f64],
    cfg: &ScenarioConfig,
) -> Result<ScenarioGrid> {
    cfg.validate()?;
    check_axis("range_axis", range_axis)?;
    check_axis("jitter_axis", jitter_axis)?;
    if jitter_axis[0] < 0.0 {
        return Err(Error::param("jitter_axis", "jitter must be >= 0"));
    }
    let rows: Vec<Vec<f64>> = range_axis
        .par_iter()
        .map(|&l| {
            let theta = elevation_from_slant_range(l, &cfg.orbit)?;
            if !(theta > 0.0) {
                return Err(Error::param("range_axis", format!("{l} km is beyond the horizon")));
            }
            let atm = atmospheric_transmission(theta.min(FRAC_PI_2), cfg.link.zenith_transmission)?;
            Ok(jitter_axis
                .iter()
                .map(|&s| cfg.detector_efficiency * atm * collected_fraction(l * KM, &cfg.link.with_jitter(s)))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(ScenarioGrid {
        axis1: range_axis.to_vec(),
        axis2: jitter_axis.to_vec(),
        values: rows.concat(),
    })
}

/// Key-rate gain over buffered-link elevation (rad) × memory efficiency,
/// against the configured dual downlink.
pub fn gain_map(elevation_axis: &[f64], eta_mem_axis: &[f64], cfg: &ScenarioConfig) -> Result<ScenarioGrid> {
    cfg.validate()?;
    check_axis("elevation_axis", elevation_axis)?;
    check_axis("eta_mem_axis", eta_mem_axis)?;
    if elevation_axis[0] <= 0.0 || *elevation_axis.last().unwrap() > FRAC_PI_2 {
        return Err(Error::param("elevation_axis", "elevations must lie in (0, pi/2]"));
    }
    if eta_mem_axis[0] < 0.0 || *eta_mem_axis.last().unwrap() > 1.0 {
        return Err(Error::param("eta_mem_axis", "memory efficiencies must lie in [0, 1]"));
    }
    let reference = {
        let a = atmospheric_transmission(cfg.dual_elevation, cfg.link.zenith_transmission)?
            * collected_fraction(cfg.dual_slant_range * KM, &cfg.link);
        a * a
    };
    if reference <= 0.0 {
        return Err(Error::domain("gain_map", "dual-downlink efficiency is zero"));
    }
    let rows: Vec<Vec<f64>> = elevation_axis
        .par_iter()
        .map(|&theta| {
            let l = slant_range_from_elevation(theta, &cfg.orbit)?;
            let a = atmospheric_transmission(theta, cfg.link.zenith_transmission)?
                * collected_fraction(l * KM, &cfg.link);
            Ok(eta_mem_axis.iter().map(|m| m * a * a / reference).collect())
        })
        .collect::<Result<_>>()?;
    Ok(ScenarioGrid {
        axis1: elevation_axis.to_vec(),
        axis2: eta_mem_axis.to_vec(),
        values: rows.concat(),
    })
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::param("steps", "need at least 2 steps"));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::param("bounds", format!("need finite min < max, got [{lo}, {hi}]")));
    }
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (steps - 1) as f64
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkbudget::{single_link_efficiency, FactorSet, StageEfficiencies};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn baseline() -> ScenarioConfig {
        ScenarioConfig::default()
    }

    #[test]
    fn published_efficiencies() {
        let cfg = baseline();
        assert_relative_eq!(combined_eta_dual(&cfg).unwrap(), 4.23e-5, max_relative = 0.01);
        assert_relative_eq!(combined_eta_buffered(&cfg).unwrap(), 4.70e-3, max_relative = 0.01);
        let g = improvement_factor(&cfg).unwrap();
        assert!((g - 111.0).abs() <= 2.0, "{g}");

        let perfect_mem = ScenarioConfig { eta_mem: 1.0, ..cfg };
        assert_relative_eq!(combined_eta_buffered(&perfect_mem).unwrap(), 6.35e-3, max_relative = 2e-3);

        let half = ScenarioConfig { eta_mem: 0.37, ..cfg };
        assert_relative_eq!(improvement_factor(&half).unwrap(), g / 2.0, max_relative = 1e-12);
        assert!((improvement_factor(&half).unwrap() - 55.6).abs() < 1.0);
    }

    #[test]
    fn degenerate_geometries() {
        let same = ScenarioConfig {
            buffered_elevation: 20f64.to_radians(),
            buffered_slant_range: 1461.9,
            eta_mem: 1.0,
            ..baseline()
        };
        assert_relative_eq!(
            combined_eta_buffered(&same).unwrap(),
            combined_eta_dual(&same).unwrap(),
            max_relative = 1e-15
        );
        assert_relative_eq!(improvement_factor(&same).unwrap(), 1.0, max_relative = 1e-15);

        let ideal = ScenarioConfig {
            detector_efficiency: 1.0,
            dual_elevation: FRAC_PI_2,
            link: OpticalLinkParams {
                receiver_radius: 1e9,
                ..OpticalLinkParams::default()
            },
            ..baseline()
        };
        assert_relative_eq!(combined_eta_dual(&ideal).unwrap(), 0.64, max_relative = 1e-12);

        let shaky = ScenarioConfig {
            link: OpticalLinkParams::default().with_jitter(1.0),
            ..baseline()
        };
        assert!(combined_eta_dual(&shaky).unwrap() < 1e-20);
    }

    #[test]
    fn table_rows() {
        let r = table_one(&baseline()).unwrap();
        assert_relative_eq!(r.skr_dual, 8.12e3, max_relative = 0.015);
        assert_relative_eq!(r.skr_buffered, 9.03e5, max_relative = 0.015);
        assert!((r.t_buffer - 463.0).abs() < 1.0);
        assert!(r.feasible);
        assert_relative_eq!(r.skr_buffered / r.skr_dual, r.gain, max_relative = 1e-9);

        let dead = table_one(&ScenarioConfig { eta_mem: 0.0, ..baseline() }).unwrap();
        assert_eq!(dead.eta_buffered, 0.0);
        assert_eq!(dead.skr_buffered, 0.0);
        assert_eq!(dead.gain, 0.0);
        assert!(!dead.feasible);

        let noisy = ScenarioConfig {
            qkd: QKDParams {
                qber_x: 0.12,
                qber_z: 0.12,
                ec_inefficiency: 1.0,
                ..QKDParams::default()
            },
            ..baseline()
        };
        let n = table_one(&noisy).unwrap();
        assert_eq!(n.skr_dual, 0.0);
        assert_eq!(n.skr_buffered, 0.0);
        assert_eq!(n.eta_dual, r.eta_dual);

        let short = ScenarioConfig {
            qkd: QKDParams {
                memory_lifetime: 400.0,
                ..QKDParams::default()
            },
            ..baseline()
        };
        assert!(!table_one(&short).unwrap().feasible);
    }

    #[test]
    fn text_record_round_trip() {
        let r = table_one(&baseline()).unwrap();
        assert_eq!(ScenarioResult::from_text(&r.to_text()).unwrap(), r);
        assert!(ScenarioResult::from_text("bogus = 1").is_err());
        let md = r.to_markdown();
        assert!(md.contains("| Dual downlink | 4.22535e-05 |"), "{md}");
    }

    #[test]
    fn link_map_structure() {
        let cfg = baseline();
        let ranges = linspace(500.0, 2500.0, 11).unwrap();
        let jitters = linspace(0.0, 5e-6, 11).unwrap();
        let grid = downlink_probability_map(&ranges, &jitters, &cfg).unwrap();
        for i in 0..ranges.len() {
            for j in 0..jitters.len() {
                if i + 1 < ranges.len() {
                    assert!(grid.get(i, j) > grid.get(i + 1, j));
                }
                if j + 1 < jitters.len() {
                    assert!(grid.get(i, j) > grid.get(i, j + 1));
                }
            }
        }
        let zen = single_link_efficiency(
            FRAC_PI_2,
            500e3,
            &cfg.link,
            &StageEfficiencies::default(),
            FactorSet::DOWNLINK,
        )
        .unwrap();
        let g = downlink_probability_map(&[500.0, 1461.9], &[1e-6], &cfg).unwrap();
        assert!((g.get(0, 0) - zen.eta_total).abs() < 1e-12);
        let dif_ratio = collected_fraction(1461.9e3, &cfg.link) / collected_fraction(500e3, &cfg.link);
        assert!((dif_ratio - 0.1253).abs() < 5e-4);
        assert!(downlink_probability_map(&[400.0], &[1e-6], &cfg).is_err());
        assert!(downlink_probability_map(&[900.0, 800.0], &[1e-6], &cfg).is_err());
        assert!(downlink_probability_map(&[], &[1e-6], &cfg).is_err());
    }

    #[test]
    fn gain_map_structure() {
        let cfg = baseline();
        let g = gain_map(&[FRAC_PI_2], &[0.74], &cfg).unwrap();
        assert!(g.get(0, 0) >= 100.0);
        assert_relative_eq!(g.get(0, 0), improvement_factor(&cfg).unwrap(), max_relative = 1e-12);

        let twenty = 20f64.to_radians();
        let matched = ScenarioConfig {
            dual_slant_range: slant_range_from_elevation(twenty, &cfg.orbit).unwrap(),
            ..cfg
        };
        let g = gain_map(&[twenty], &[1.0], &matched).unwrap();
        assert_relative_eq!(g.get(0, 0), 1.0, max_relative = 1e-12);

        let elev = linspace(10f64.to_radians(), FRAC_PI_2, 9).unwrap();
        let mems = linspace(0.1, 1.0, 10).unwrap();
        let g = gain_map(&elev, &mems, &cfg).unwrap();
        for i in 0..elev.len() {
            for j in 0..mems.len() {
                assert_relative_eq!(g.get(i, j) / mems[j], g.get(i, 0) / mems[0], max_relative = 1e-12);
                if i + 1 < elev.len() {
                    assert!(g.get(i, j) < g.get(i + 1, j));
                }
            }
        }
    }

    #[test]
    fn csv_shape() {
        let g = downlink_probability_map(&[500.0, 600.0], &[0.0, 1e-6], &baseline()).unwrap();
        let csv = long_csv(["slant_range_km", "jitter_urad", "eta"], &g.axis1, &[0.0, 1.0], &g.values);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "slant_range_km,jitter_urad,eta");
        assert!(lines[2].starts_with("500,1,"));
    }

    proptest! {
        #[test]
        fn skr_ratio_equals_eta_ratio(
            mem in 0.05f64..1.0,
            det in 0.1f64..1.0,
            jitter in 0.0f64..4e-6,
            dual_l in 800.0f64..2500.0,
            buff_l in 500.0f64..800.0,
        ) {
            let cfg = ScenarioConfig {
                eta_mem: mem,
                detector_efficiency: det,
                link: OpticalLinkParams::default().with_jitter(jitter),
                dual_slant_range: dual_l,
                buffered_slant_range: buff_l,
                ..ScenarioConfig::default()
            };
            let r = table_one(&cfg).unwrap();
            let ratio = r.skr_buffered / r.skr_dual;
            prop_assert!((ratio / r.gain - 1.0).abs() < 1e-9);
        }
    }
}
