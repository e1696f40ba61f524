//! Dormand–Prince 5(4) with step-size control and 4th-order dense output,
//! operating on complex state vectors. The right-hand side is autonomous
//! within each call, so the stage abscissae are not needed.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
/// Step may shrink by at most 5x and grow by at most 10x per attempt.
const FAC_MIN_INV: f64 = 5.0;
const FAC_MAX_INV: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl std::ops::AddAssign for StepStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
    }
}

struct Work {
    k: [Vec<C>; 7],
    ytmp: Vec<C>,
    ynew: Vec<C>,
    dense: [Vec<C>; 5],
}

impl Work {
    fn new(n: usize) -> Self {
        let z = || vec![C::new(0.0, 0.0); n];
        Self {
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            dense: [z(), z(), z(), z(), z()],
        }
    }
}

fn weighted_rms(err: &[C], y0: &[C], y1: &[C], ctl: &StepControl) -> f64 {
    let mut acc = 0.0;
    for ((e, a), b) in err.iter().zip(y0).zip(y1) {
        let sre = ctl.atol + ctl.rtol * a.re.abs().max(b.re.abs());
        let sim = ctl.atol + ctl.rtol * a.im.abs().max(b.im.abs());
        acc += (e.re / sre).powi(2) + (e.im / sim).powi(2);
    }
    (acc / (2 * err.len()).max(1) as f64).sqrt()
}

fn initial_step<F>(f: &mut F, y: &[C], f0: &[C], span: f64, ctl: &StepControl, work: &mut Work) -> f64
where
    F: FnMut(&[C], &mut [C]),
{
    let zero = vec![C::new(0.0, 0.0); y.len()];
    let d0 = weighted_rms(y, y, &zero, ctl);
    let d1 = weighted_rms(f0, y, &zero, ctl);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span).min(ctl.max_step);
    for (t, (a, b)) in work.ytmp.iter_mut().zip(y.iter().zip(f0)) {
        *t = a + h0 * b;
    }
    let (ytmp, k2) = (&work.ytmp, &mut work.k[1]);
    f(ytmp, k2);
    let diff: Vec<C> = k2.iter().zip(f0).map(|(a, b)| (a - b) / h0).collect();
    let d2 = weighted_rms(&diff, y, &zero, ctl);
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).min(ctl.max_step)
}

/// Integrates `dy/dt = f(y)` from `t0` to `t1` in place.
///
/// `f` is autonomous within the interval; callers split the time axis at
/// every discontinuity of the drive and call this once per piece. For each
/// time in `samples` (ascending, inside `(t0, t1]`) the dense-output
/// interpolant is passed to `emit`.
pub fn integrate_interval<F, E>(
    mut f: F,
    t0: f64,
    t1: f64,
    y: &mut [C],
    ctl: &StepControl,
    samples: &[f64],
    mut emit: E,
) -> Result<StepStats>
where
    F: FnMut(&[C], &mut [C]),
    E: FnMut(f64, &[C]),
{
    let n = y.len();
    let mut stats = StepStats::default();
    let span = t1 - t0;
    if span <= 0.0 {
        for &ts in samples {
            emit(ts, y);
        }
        return Ok(stats);
    }
    let mut w = Work::new(n);
    f(y, &mut w.k[0]);
    stats.evaluations += 1;
    let k0 = w.k[0].clone();
    let mut h = initial_step(&mut f, y, &k0, span, ctl, &mut w);
    stats.evaluations += 1;

    let mut t = t0;
    let mut next_sample = 0;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;

    while t < t1 {
        if stats.accepted + stats.rejected >= ctl.max_steps {
            return Err(Error::TooManySteps {
                t,
                steps: ctl.max_steps,
            });
        }
        if h.abs() <= 16.0 * f64::EPSILON * t.abs().max(span) {
            return Err(Error::StepSizeUnderflow { t, step: h });
        }
        let last = t + h >= t1 - 1e-12 * span;
        if last {
            h = t1 - t;
        }

        stage(&mut w, y, h, 1, &[A21]);
        f(&w.ytmp, &mut w.k[1]);
        stage(&mut w, y, h, 2, &[A31, A32]);
        f(&w.ytmp, &mut w.k[2]);
        stage(&mut w, y, h, 3, &[A41, A42, A43]);
        f(&w.ytmp, &mut w.k[3]);
        stage(&mut w, y, h, 4, &[A51, A52, A53, A54]);
        f(&w.ytmp, &mut w.k[4]);
        stage(&mut w, y, h, 5, &[A61, A62, A63, A64, A65]);
        f(&w.ytmp, &mut w.k[5]);
        for i in 0..n {
            w.ynew[i] = y[i]
                + h * (A71 * w.k[0][i]
                    + A73 * w.k[2][i]
                    + A74 * w.k[3][i]
                    + A75 * w.k[4][i]
                    + A76 * w.k[5][i]);
        }
        f(&w.ynew, &mut w.k[6]);
        stats.evaluations += 6;

        for i in 0..n {
            w.ytmp[i] = h
                * (E1 * w.k[0][i]
                    + E3 * w.k[2][i]
                    + E4 * w.k[3][i]
                    + E5 * w.k[4][i]
                    + E6 * w.k[5][i]
                    + E7 * w.k[6][i]);
        }
        let err = weighted_rms(&w.ytmp, y, &w.ynew, ctl);
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(EXPO1);
        let fac = (fac11 / facold.powf(BETA) / SAFETY).clamp(FAC_MAX_INV, FAC_MIN_INV);
        let mut hnew = h / fac;

        if err <= 1.0 {
            facold = err.max(1e-4);
            stats.accepted += 1;
            let t_new = if last { t1 } else { t + h };

            if next_sample < samples.len() && samples[next_sample] <= t_new {
                prepare_dense(&mut w, y, h);
                let mut buf = vec![C::new(0.0, 0.0); n];
                while next_sample < samples.len() && samples[next_sample] <= t_new {
                    let ts = samples[next_sample];
                    let theta = ((ts - t) / h).clamp(0.0, 1.0);
                    interpolate(&w, theta, &mut buf);
                    emit(ts, &buf);
                    next_sample += 1;
                }
            }

            y.copy_from_slice(&w.ynew);
            let (first, rest) = w.k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            t = t_new;
            if last_rejected {
                hnew = hnew.min(h);
            }
            last_rejected = false;
        } else {
            hnew = h / (fac11 / SAFETY).min(FAC_MIN_INV);
            stats.rejected += 1;
            last_rejected = true;
        }
        h = hnew.min(ctl.max_step);
    }
    // samples at exactly t1 that rounding left behind
    while next_sample < samples.len() {
        emit(samples[next_sample], y);
        next_sample += 1;
    }
    Ok(stats)
}

fn stage(w: &mut Work, y: &[C], h: f64, upto: usize, a: &[f64]) {
    for i in 0..y.len() {
        let mut acc = C::new(0.0, 0.0);
        for (j, aj) in a.iter().enumerate().take(upto) {
            acc += aj * w.k[j][i];
        }
        w.ytmp[i] = y[i] + h * acc;
    }
}

fn prepare_dense(w: &mut Work, y: &[C], h: f64) {
    for i in 0..y.len() {
        let dy = w.ynew[i] - y[i];
        let bspl = h * w.k[0][i] - dy;
        w.dense[0][i] = y[i];
        w.dense[1][i] = dy;
        w.dense[2][i] = bspl;
        w.dense[3][i] = dy - h * w.k[6][i] - bspl;
        w.dense[4][i] = h
            * (D1 * w.k[0][i]
                + D3 * w.k[2][i]
                + D4 * w.k[3][i]
                + D5 * w.k[4][i]
                + D6 * w.k[5][i]
                + D7 * w.k[6][i]);
    }
}

fn interpolate(w: &Work, theta: f64, out: &mut [C]) {
    let theta1 = 1.0 - theta;
    for (i, o) in out.iter_mut().enumerate() {
        *o = w.dense[0][i]
            + theta
                * (w.dense[1][i]
                    + theta1 * (w.dense[2][i] + theta * (w.dense[3][i] + theta1 * w.dense[4][i])));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl(rtol: f64) -> StepControl {
        StepControl {
            rtol,
            atol: rtol * 1e-2,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn exponential_decay() {
        let mut y = vec![C::new(1.0, 0.0)];
        let samples: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
        let mut got = Vec::new();
        integrate_interval(
            |y, dy| dy[0] = -0.7 * y[0],
            0.0,
            3.0,
            &mut y,
            &ctl(1e-10),
            &samples,
            |t, y| got.push((t, y[0])),
        )
        .unwrap();
        assert_eq!(got.len(), 10);
        for (t, v) in got {
            assert!((v.re - (-0.7 * t).exp()).abs() < 1e-8, "t={t} v={v}");
        }
        assert!((y[0].re - (-2.1f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn complex_rotation_keeps_modulus() {
        let mut y = vec![C::new(1.0, 0.0)];
        integrate_interval(
            |y, dy| dy[0] = C::new(0.0, -2.0) * y[0],
            0.0,
            10.0,
            &mut y,
            &ctl(1e-11),
            &[],
            |_, _| {},
        )
        .unwrap();
        let exact = C::new(0.0, -20.0).exp();
        assert!((y[0] - exact).norm() < 1e-8);
    }

    #[test]
    fn zero_dynamics_is_constant() {
        let mut y = vec![C::new(0.3, -0.2); 4];
        let stats = integrate_interval(
            |_, dy| dy.iter_mut().for_each(|d| *d = C::new(0.0, 0.0)),
            0.0,
            5.0,
            &mut y,
            &ctl(1e-8),
            &[2.5],
            |_, s| assert!(s.iter().all(|z| *z == C::new(0.3, -0.2))),
        )
        .unwrap();
        assert!(y.iter().all(|z| *z == C::new(0.3, -0.2)));
        assert!(stats.accepted >= 1);
    }

    #[test]
    fn step_limit_reported() {
        let mut y = vec![C::new(1.0, 0.0)];
        let limited = StepControl {
            max_steps: 3,
            max_step: 1e-3,
            ..ctl(1e-8)
        };
        let err = integrate_interval(
            |y, dy| dy[0] = -y[0],
            0.0,
            1.0,
            &mut y,
            &limited,
            &[],
            |_, _| {},
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooManySteps { .. }));
    }

    #[test]
    fn tighter_tolerance_converges() {
        let run = |rtol: f64| {
            let mut y = vec![C::new(1.0, 0.0), C::new(0.0, 0.0)];
            integrate_interval(
                |y, dy| {
                    dy[0] = C::new(0.0, -1.0) * y[1] - 0.1 * y[0];
                    dy[1] = C::new(0.0, -1.0) * y[0];
                },
                0.0,
                7.0,
                &mut y,
                &ctl(rtol),
                &[],
                |_, _| {},
            )
            .unwrap();
            y
        };
        let coarse = run(1e-6);
        let fine = run(5e-7);
        let finest = run(1e-12);
        for i in 0..2 {
            assert!((coarse[i] - fine[i]).norm() < 1e-6);
            assert!((fine[i] - finest[i]).norm() < 5e-6);
        }
    }
}
