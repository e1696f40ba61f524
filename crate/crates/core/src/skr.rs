//! Asymptotic BB84 secret-key rate with one-way post-processing.

use crate::error::{Error, Result};

/// Key-fraction bracket `1 - h(e_X) - f h(e_Z)` implied by the published
/// dual/buffered key rates.
pub const CALIBRATED_BRACKET: f64 = 0.03812;

/// QBER that, with `f = 1.10` in both bases, gives [`CALIBRATED_BRACKET`].
pub const CALIBRATED_QBER: f64 = 0.096_573_3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QKDParams {
    /// Channel uses per second (source repetition rate).
    pub channel_use_rate: f64,
    pub qber_x: f64,
    pub qber_z: f64,
    pub ec_inefficiency: f64,
    pub herald_probability: f64,
    pub mode_count: u64,
    /// Coherence time of the onboard memory, s.
    pub memory_lifetime: f64,
}

impl Default for QKDParams {
    fn default() -> Self {
        Self {
            channel_use_rate: 90e6,
            qber_x: CALIBRATED_QBER,
            qber_z: CALIBRATED_QBER,
            ec_inefficiency: 1.10,
            herald_probability: 1.0,
            mode_count: 112,
            memory_lifetime: 3600.0,
        }
    }
}

impl QKDParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.channel_use_rate > 0.0 && self.channel_use_rate.is_finite()) {
            return Err(Error::param("channel_use_rate", "must be finite and > 0"));
        }
        for (name, e) in [("qber_x", self.qber_x), ("qber_z", self.qber_z)] {
            if !(0.0..=0.5).contains(&e) {
                return Err(Error::param(name, format!("must lie in [0, 0.5], got {e}")));
            }
        }
        if !(self.ec_inefficiency >= 1.0) {
            return Err(Error::param("ec_inefficiency", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.herald_probability) {
            return Err(Error::param("herald_probability", "must lie in [0, 1]"));
        }
        if self.mode_count == 0 {
            return Err(Error::param("mode_count", "must be >= 1"));
        }
        if !(self.memory_lifetime >= 0.0) {
            return Err(Error::param("memory_lifetime", "must be >= 0"));
        }
        Ok(())
    }

    /// `1 - h(e_X) - f h(e_Z)`, unclamped.
    pub fn bracket(&self) -> Result<f64> {
        Ok(1.0 - binary_entropy(self.qber_x)? - self.ec_inefficiency * binary_entropy(self.qber_z)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YieldResult {
    pub yield_: f64,
    pub key_fraction: f64,
    pub skr: f64,
}

/// Shannon entropy of a biased coin, in bits.
pub fn binary_entropy(e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::domain("binary_entropy", format!("{e} outside [0, 1]")));
    }
    if e == 0.0 || e == 1.0 {
        return Ok(0.0);
    }
    Ok(-e * e.log2() - (1.0 - e) * (1.0 - e).log2())
}

/// Secret bits per channel use for a given bracket; negative brackets give 0.
pub fn key_fraction_from_bracket(yield_: f64, bracket: f64) -> Result<f64> {
    check_probability("key_fraction", yield_)?;
    Ok((0.5 * yield_ * bracket).max(0.0))
}

pub fn key_fraction(yield_: f64, q: &QKDParams) -> Result<f64> {
    key_fraction_from_bracket(yield_, q.bracket()?)
}

/// Secret key rate in bits/s. Each clock carries `mode_count` temporal modes,
/// so the mode count multiplies the channel-use rate.
pub fn instantaneous_skr(q: &QKDParams, yield_: f64) -> Result<f64> {
    instantaneous_skr_from_bracket(q, yield_, q.bracket()?)
}

pub fn instantaneous_skr_from_bracket(q: &QKDParams, yield_: f64, bracket: f64) -> Result<f64> {
    Ok(q.channel_use_rate * q.mode_count as f64 * key_fraction_from_bracket(yield_, bracket)?)
}

pub fn evaluate(q: &QKDParams, yield_: f64) -> Result<YieldResult> {
    let key_fraction = key_fraction(yield_, q)?;
    Ok(YieldResult {
        yield_,
        key_fraction,
        skr: q.channel_use_rate * q.mode_count as f64 * key_fraction,
    })
}

/// Success probability for simultaneous downlinks to both stations.
pub fn yield_dual(per_arm_a: f64, per_arm_b: f64, herald_probability: f64) -> Result<f64> {
    check_probability("yield_dual", per_arm_a)?;
    check_probability("yield_dual", per_arm_b)?;
    check_probability("yield_dual", herald_probability)?;
    Ok(herald_probability * (per_arm_a * per_arm_b))
}

/// Success probability when the second photon waits in the memory for the
/// next zenith contact.
pub fn yield_buffered(
    eta_first: f64,
    eta_second: f64,
    eta_mem: f64,
    herald_probability: f64,
) -> Result<f64> {
    check_probability("yield_buffered", eta_mem)?;
    Ok(eta_mem * yield_dual(eta_first, eta_second, herald_probability)?)
}

/// The memory must outlive the interval between zenith contacts.
pub fn feasibility(memory_lifetime: f64, buffer_time: f64) -> bool {
    memory_lifetime >= buffer_time
}

fn check_probability(op: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(op, format!("probability {p} outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert!((binary_entropy(0.11).unwrap() - 0.49999).abs() < 1e-4);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn calibrated_defaults_hit_bracket() {
        let b = QKDParams::default().bracket().unwrap();
        assert!((b - CALIBRATED_BRACKET).abs() < 1e-6, "{b}");
    }

    #[test]
    fn key_fraction_cases() {
        let perfect = QKDParams {
            qber_x: 0.0,
            qber_z: 0.0,
            ec_inefficiency: 1.0,
            ..QKDParams::default()
        };
        assert_eq!(key_fraction(0.3, &perfect).unwrap(), 0.15);
        let noisy = QKDParams {
            qber_x: 0.2,
            qber_z: 0.2,
            ..QKDParams::default()
        };
        assert!(noisy.bracket().unwrap() < 0.0);
        assert_eq!(key_fraction(0.3, &noisy).unwrap(), 0.0);
        assert_relative_eq!(
            key_fraction_from_bracket(4.70e-3, CALIBRATED_BRACKET).unwrap(),
            8.96e-5,
            max_relative = 1e-3
        );
        assert!(key_fraction(1.5, &perfect).is_err());
    }

    #[test]
    fn rates() {
        let q = QKDParams::default();
        let perfect = QKDParams {
            qber_x: 0.0,
            qber_z: 0.0,
            ec_inefficiency: 1.0,
            mode_count: 1,
            ..q
        };
        assert_relative_eq!(instantaneous_skr(&perfect, 1e-3).unwrap(), 90e6 * 1e-3 / 2.0);
        let dual = instantaneous_skr_from_bracket(&q, 4.226e-5, CALIBRATED_BRACKET).unwrap();
        assert_relative_eq!(dual, 8.12e3, max_relative = 1.5e-3);
        let buff = instantaneous_skr_from_bracket(&q, 4.700e-3, CALIBRATED_BRACKET).unwrap();
        assert_relative_eq!(buff, 9.03e5, max_relative = 1.5e-3);
        let r = evaluate(&q, 4.7e-3).unwrap();
        assert_relative_eq!(r.skr, instantaneous_skr(&q, 4.7e-3).unwrap());
    }

    #[test]
    fn yields() {
        assert_eq!(yield_dual(0.0, 0.5, 1.0).unwrap(), 0.0);
        assert_relative_eq!(yield_dual(6.50e-3, 6.50e-3, 1.0).unwrap(), 4.225e-5, max_relative = 1e-12);
        assert_relative_eq!(
            yield_dual(0.2, 0.3, 0.5).unwrap(),
            0.5 * yield_dual(0.2, 0.3, 1.0).unwrap()
        );
        assert_eq!(
            yield_buffered(0.0797, 0.0797, 1.0, 1.0).unwrap(),
            yield_dual(0.0797, 0.0797, 1.0).unwrap()
        );
        assert_relative_eq!(
            yield_buffered(0.0797, 0.0797, 0.74, 1.0).unwrap(),
            4.70e-3,
            max_relative = 1e-3
        );
        assert_eq!(yield_buffered(0.0797, 0.0797, 0.0, 1.0).unwrap(), 0.0);
        assert!(yield_dual(1.2, 0.1, 1.0).is_err());
    }

    #[test]
    fn memory_feasibility() {
        assert!(feasibility(463.0, 463.0));
        assert!(!feasibility(462.9, 463.0));
        assert!(feasibility(0.0, 0.0));
    }

    #[test]
    fn params_validation() {
        assert!(QKDParams::default().validate().is_ok());
        let bad = QKDParams {
            ec_inefficiency: 0.9,
            ..QKDParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = QKDParams {
            qber_x: 0.6,
            ..QKDParams::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn entropy_symmetric(e in 0.0f64..=1.0) {
            let a = binary_entropy(e).unwrap();
            let b = binary_entropy(1.0 - e).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(a <= 1.0);
        }

        #[test]
        fn key_fraction_monotone(y in 0.0f64..=1.0, e1 in 0.0f64..0.5, e2 in 0.0f64..0.5, f1 in 1.0f64..2.0, f2 in 1.0f64..2.0) {
            let (elo, ehi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let (flo, fhi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
            let q = |ex: f64, ez: f64, f: f64| QKDParams { qber_x: ex, qber_z: ez, ec_inefficiency: f, ..QKDParams::default() };
            let base = key_fraction(y, &q(elo, elo, flo)).unwrap();
            prop_assert!(base >= key_fraction(y, &q(ehi, elo, flo)).unwrap());
            prop_assert!(base >= key_fraction(y, &q(elo, ehi, flo)).unwrap());
            prop_assert!(base >= key_fraction(y, &q(elo, elo, fhi)).unwrap());
            prop_assert!(base >= 0.0);
        }

        #[test]
        fn skr_linear(y in 0.0f64..0.5, scale in 0.1f64..10.0, n in 1u64..200) {
            let q = QKDParams::default();
            let base = instantaneous_skr(&q, y).unwrap();
            let faster = QKDParams { channel_use_rate: q.channel_use_rate * scale, ..q };
            prop_assert!((instantaneous_skr(&faster, y).unwrap() - scale * base).abs() <= 1e-9 * scale * base.max(1e-300));
            let more = QKDParams { mode_count: n, ..q };
            let single = QKDParams { mode_count: 1, ..q };
            prop_assert!((instantaneous_skr(&more, y).unwrap() - n as f64 * instantaneous_skr(&single, y).unwrap()).abs() <= 1e-9 * base.max(1e-300) * n as f64);
            prop_assert!((instantaneous_skr(&q, y * 2.0).unwrap() - 2.0 * base).abs() <= 1e-9 * base.max(1e-300));
        }

        #[test]
        fn yields_symmetric(a in 0.0f64..=1.0, b in 0.0f64..=1.0, m in 0.0f64..=1.0, p in 0.0f64..=1.0) {
            prop_assert_eq!(yield_dual(a, b, p).unwrap(), yield_dual(b, a, p).unwrap());
            prop_assert_eq!(yield_buffered(a, b, m, p).unwrap(), yield_buffered(b, a, m, p).unwrap());
        }
    }
}
