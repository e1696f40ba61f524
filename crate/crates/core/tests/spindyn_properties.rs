use std::f64::consts::PI;

use num_complex::Complex64;
use orbmem::afc::EnsembleParams;
use orbmem::spindyn::{
    integrate, simulate_protocol, DriveSegment, FieldModel, InitialProfile, ProtocolSchedule, RadialGrid,
    SolverConfig, SpinFieldState,
};
use proptest::prelude::*;

fn tight() -> SolverConfig {
    SolverConfig {
        relative_tolerance: 1e-10,
        absolute_tolerance: 1e-12,
        ..SolverConfig::default()
    }
}

fn loaded(grid: &RadialGrid, profile: InitialProfile) -> SpinFieldState {
    let mut st = SpinFieldState::zeros(grid.point_count(), 0.0);
    st.s = profile.normalized(grid);
    st
}

fn exchange(duration: f64, j: f64) -> DriveSegment {
    DriveSegment {
        duration,
        rabi_frequency: 0.0,
        exchange_coupling: j,
    }
}

fn dark(duration: f64) -> DriveSegment {
    exchange(duration, 0.0)
}

/// Mean of the two fine nodes straddling each coarse node.
fn restrict(fine: &[Complex64], n: usize) -> Vec<Complex64> {
    let f = fine.len() / n;
    (0..n)
        .map(|i| {
            let c = i * f + f / 2;
            (fine[c - 1] + fine[c]) * 0.5
        })
        .collect()
}

#[test]
fn lossless_exchange_follows_rabi_curve() {
    let ens = EnsembleParams::lossless();
    let j = ens.exchange_coupling;
    let grid = RadialGrid::new(ens.cell_radius, 32).unwrap();
    let init = loaded(&grid, InitialProfile::Uniform);
    let times: Vec<f64> = (0..=100).map(|i| PI / j * i as f64 / 100.0).collect();
    let traj = integrate(&init, &[exchange(PI / j, j)], &ens, &grid, &tight(), &times).unwrap();
    for st in &traj.states {
        let k = grid.norm_sq(&st.k);
        let expected = (j * st.time).sin().powi(2);
        assert!((k - expected).abs() < 1e-3, "t = {}: {k} vs {expected}", st.time);
    }
    let half = &traj.states[50];
    assert!((grid.norm_sq(&half.k) - 1.0).abs() < 1e-4);
    assert!((grid.norm_sq(&traj.final_state.s) - 1.0).abs() < 1e-3);
    assert!(grid.norm_sq(&traj.final_state.k) < 1e-3);
}

#[test]
fn lossless_norm_is_conserved() {
    let ens = EnsembleParams::lossless();
    let j = ens.exchange_coupling;
    let grid = RadialGrid::new(ens.cell_radius, 48).unwrap();
    let init = loaded(&grid, InitialProfile::FundamentalMode);
    let times: Vec<f64> = (1..=20).map(|i| PI / j * i as f64 / 20.0).collect();
    let traj = integrate(&init, &[exchange(PI / j, j)], &ens, &grid, &SolverConfig::default(), &times).unwrap();
    for st in &traj.states {
        let total = st.total_norm_sq(&grid);
        assert!((total - 1.0).abs() < 1e-6, "t = {}: {total}", st.time);
    }

    let three = SolverConfig {
        field_model: FieldModel::ThreeField,
        ..SolverConfig::default()
    };
    let drive = [
        DriveSegment {
            duration: 0.3,
            rabi_frequency: 2.0,
            exchange_coupling: 0.0,
        },
        DriveSegment {
            duration: PI / j,
            rabi_frequency: 0.7,
            exchange_coupling: j,
        },
    ];
    let traj = integrate(&init, &drive, &ens, &grid, &three, &[]).unwrap();
    assert!((traj.final_state.total_norm_sq(&grid) - 1.0).abs() < 1e-6);
}

#[test]
fn dirichlet_decay_approaches_fundamental_rate() {
    let ens = EnsembleParams {
        exchange_coupling: 0.0,
        alkali_decay: 0.0,
        ..EnsembleParams::rescaled()
    };
    let radius = ens.cell_radius;
    let rate = ens.alkali_diffusion * (PI / radius).powi(2);
    let grid = RadialGrid::new(radius, 64).unwrap();
    let init = loaded(&grid, InitialProfile::Uniform);
    let t_end = 3.0 / rate;
    let times: Vec<f64> = (0..=30).map(|i| t_end * i as f64 / 30.0).collect();
    let traj = integrate(&init, &[dark(t_end)], &ens, &grid, &SolverConfig::default(), &times).unwrap();
    let norms: Vec<f64> = traj.states.iter().map(|st| grid.norm_sq(&st.s).sqrt()).collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]));
    let (a, b) = (norms[20], norms[30]);
    let observed = (a / b).ln() / (times[30] - times[20]);
    assert!((observed / rate - 1.0).abs() < 0.02, "{observed} vs {rate}");
    assert!(grid.norm_sq(&traj.final_state.k) == 0.0);
}

#[test]
fn neumann_moment_is_conserved() {
    let ens = EnsembleParams {
        exchange_coupling: 0.0,
        noble_decay: 0.0,
        noble_detuning: 0.0,
        ..EnsembleParams::rescaled()
    };
    let grid = RadialGrid::new(ens.cell_radius, 64).unwrap();
    let mut init = SpinFieldState::zeros(64, 0.0);
    init.k = grid
        .node_positions()
        .iter()
        .map(|&r| {
            let x = r / ens.cell_radius;
            Complex64::new((-20.0 * x * x).exp(), 0.3 * x)
        })
        .collect();
    let m0 = grid.moment(&init.k);
    let n0 = grid.norm_sq(&init.k);
    let mean = m0 / (ens.cell_radius.powi(3) / 3.0);
    let floor = mean.norm_sqr() * ens.cell_radius.powi(3) / 3.0;
    let t_end = 2000.0;
    let times: Vec<f64> = (1..=10).map(|i| t_end * i as f64 / 10.0).collect();
    let traj = integrate(&init, &[dark(t_end)], &ens, &grid, &SolverConfig::default(), &times).unwrap();
    let mut prev = n0;
    for st in &traj.states {
        let m = grid.moment(&st.k);
        assert!((m - m0).norm() <= 1e-8 * m0.norm(), "{m} vs {m0}");
        let n = grid.norm_sq(&st.k);
        assert!(n <= prev * (1.0 + 1e-12) && n >= floor * (1.0 - 1e-9));
        prev = n;
    }
}

fn diffusion_error_ratios(grids: &[usize], reference: usize, run: impl Fn(usize) -> SpinFieldState) -> Vec<f64> {
    let fine = run(reference);
    let errors: Vec<f64> = grids
        .iter()
        .map(|&n| {
            let grid = RadialGrid::new(1.0, n).unwrap();
            let coarse = run(n);
            let ds: Vec<Complex64> = coarse.s.iter().zip(restrict(&fine.s, n)).map(|(a, b)| a - b).collect();
            let dk: Vec<Complex64> = coarse.k.iter().zip(restrict(&fine.k, n)).map(|(a, b)| a - b).collect();
            (grid.norm_sq(&ds) + grid.norm_sq(&dk)).sqrt()
        })
        .collect();
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

#[test]
fn spatial_convergence_is_second_order() {
    // Unit sphere, rates chosen so diffusion and exchange act on comparable
    // time scales.
    let ens = EnsembleParams {
        exchange_coupling: 2.0,
        alkali_decay: 0.0,
        noble_decay: 0.0,
        alkali_detuning: 0.0,
        noble_detuning: 0.0,
        alkali_diffusion: 0.02,
        noble_diffusion: 0.04,
        cell_radius: 1.0,
        ..EnsembleParams::rescaled()
    };
    let solver = tight();

    let pure = EnsembleParams {
        exchange_coupling: 0.0,
        ..ens
    };
    let ratios = diffusion_error_ratios(&[64, 128, 256], 1024, |n| {
        let grid = RadialGrid::new(1.0, n).unwrap();
        integrate(&loaded(&grid, InitialProfile::FundamentalMode), &[dark(1.0)], &pure, &grid, &solver, &[])
            .unwrap()
            .final_state
    });
    for r in &ratios {
        let order = r.log2();
        assert!((order - 2.0).abs() <= 0.2, "{ratios:?}");
    }

    let ratios = diffusion_error_ratios(&[128, 256], 1024, |n| {
        let grid = RadialGrid::new(1.0, n).unwrap();
        let t = PI / (2.0 * ens.exchange_coupling);
        integrate(
            &loaded(&grid, InitialProfile::FundamentalMode),
            &[exchange(t, ens.exchange_coupling), dark(0.5), exchange(t, ens.exchange_coupling)],
            &ens,
            &grid,
            &solver,
            &[],
        )
        .unwrap()
        .final_state
    });
    let order = ratios[0].log2();
    assert!((order - 2.0).abs() <= 0.2, "{ratios:?}");
}

#[test]
fn protocol_efficiency_converges_with_grid() {
    let ens = EnsembleParams::rescaled();
    let schedule = ProtocolSchedule {
        sample_count: 2,
        ..ProtocolSchedule::full_transfer(&ens, 463.0)
    };
    let eta = |n: usize| {
        let grid = RadialGrid::new(ens.cell_radius, n).unwrap();
        simulate_protocol(&ens, &schedule, &grid, &SolverConfig::default()).unwrap().eta_mem
    };
    let (e128, e256, e512) = (eta(128), eta(256), eta(512));
    assert!((e256 - e512).abs() < 1e-3, "{e256} vs {e512}");
    assert!((e128 - e512).abs() > (e256 - e512).abs());
    assert!(e512 > 0.9 && e512 < 1.0);
}

#[test]
fn halving_tolerance_moves_result_less_than_tolerance() {
    let ens = EnsembleParams::rescaled();
    let grid = RadialGrid::new(ens.cell_radius, 32).unwrap();
    let init = loaded(&grid, InitialProfile::Uniform);
    let j = ens.exchange_coupling;
    let drive = [exchange(PI / (2.0 * j), j), dark(10.0), exchange(PI / (2.0 * j), j)];
    let run = |rtol: f64| {
        let cfg = SolverConfig {
            relative_tolerance: rtol,
            absolute_tolerance: rtol * 1e-2,
            ..SolverConfig::default()
        };
        integrate(&init, &drive, &ens, &grid, &cfg, &[]).unwrap().final_state
    };
    let coarse = run(1e-6);
    let fine = run(5e-7);
    let diff: Vec<Complex64> = coarse.s.iter().zip(&fine.s).map(|(a, b)| a - b).collect();
    assert!(grid.norm_sq(&diff).sqrt() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_never_grows(
        j in 0.0f64..3.0,
        gs in 0.0f64..0.5,
        gk in 0.0f64..0.5,
        ds in -2.0f64..2.0,
        dk in -2.0f64..2.0,
        da in 0.0f64..0.05,
        db in 0.0f64..0.05,
        fundamental in any::<bool>(),
    ) {
        let ens = EnsembleParams {
            exchange_coupling: j,
            alkali_decay: gs,
            noble_decay: gk,
            alkali_detuning: ds,
            noble_detuning: dk,
            alkali_diffusion: da,
            noble_diffusion: db,
            cell_radius: 1.0,
            ..EnsembleParams::rescaled()
        };
        let grid = RadialGrid::new(1.0, 16).unwrap();
        let profile = if fundamental { InitialProfile::FundamentalMode } else { InitialProfile::Uniform };
        let init = loaded(&grid, profile);
        let times: Vec<f64> = (1..=10).map(|i| 0.2 * i as f64).collect();
        let traj = integrate(&init, &[exchange(2.0, j)], &ens, &grid, &SolverConfig::default(), &times).unwrap();
        let mut prev = init.total_norm_sq(&grid);
        for st in &traj.states {
            let n = st.total_norm_sq(&grid);
            prop_assert!(n <= prev * (1.0 + 1e-7), "{} > {}", n, prev);
            prev = n;
        }
    }
}
