mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::DVector;
use nes_core::gauss_newton::{interval_endpoints, quadratic_loss, solve, KktSolver, Termination};
use nes_core::noise::{sample_white_noise_spectral, standard_normals, Purpose};
use nes_core::{
    FeatureSet, Grid, GridFunction, KernelGrid, KernelSpec, KktRoute, OperatorSpec, SeminormContext, SolverConfig,
    TestSpace,
};

fn tiny_instance(space: TestSpace, coefficient: f64, diffusion: f64) -> (nes_core::GramBlocks, SeminormContext) {
    let grid = Grid::line(256).unwrap();
    let fs = FeatureSet::constant(space, grid, coefficient, diffusion, interval_endpoints()).unwrap();
    let blocks = KernelGrid::new(KernelSpec::matern52(0.3).unwrap(), grid)
        .unwrap()
        .assemble(&fs)
        .unwrap();
    (blocks, SeminormContext::new(space, 1.0).unwrap())
}

#[test]
fn kkt_matches_null_space_qp_oracle() {
    for (coefficient, diffusion, seed) in [(1.0, 0.01, 1), (1.0 + PI, 0.1, 2), (0.0, 1.0, 3)] {
        let space = TestSpace::sine_1d(3).unwrap();
        let (blocks, ctx) = tiny_instance(space, coefficient, diffusion);
        let z = standard_normals(seed, Purpose::Manufactured, 99, 0, 5);
        let (y, g) = z.split_at(3);
        for gamma in [1e-2, 1e-4] {
            let oracle = common::qp_oracle(blocks.phi_phi(), ctx.stiffness(), 3, gamma, y, g);
            for route in [KktRoute::Reduced, KktRoute::Full] {
                let (c, _) = KktSolver::new(&blocks, ctx.stiffness(), gamma, route)
                    .unwrap()
                    .solve(y, g)
                    .unwrap();
                let scale = oracle.amax().max(1.0);
                let gap = (&c - &oracle).amax();
                assert!(
                    gap <= 1e-8 * scale,
                    "{route:?} γ={gamma}: gap {gap:e} at scale {scale:e}"
                );
            }
        }
    }
}

#[test]
fn kkt_residual_and_feasible_baseline() {
    let space = TestSpace::fem_1d(7).unwrap();
    let (blocks, ctx) = tiny_instance(space, 1.0, 0.05);
    let z = standard_normals(4, Purpose::Manufactured, 99, 0, 9);
    let (y, g) = z.split_at(7);
    let gamma = 1e-3;
    for route in [KktRoute::Reduced, KktRoute::Full] {
        let (c, nu) = KktSolver::new(&blocks, ctx.stiffness(), gamma, route)
            .unwrap()
            .solve(y, g)
            .unwrap();
        let scale = blocks.phi_phi().amax() * (1.0 + c.amax());
        let r = KktSolver::kkt_residual(&blocks, ctx.stiffness(), gamma, y, g, &c, &nu);
        assert!(r <= 1e-8 * scale, "{route:?}: residual {r:e}");
        // boundary interpolant with zero operator coefficients is feasible
        let kxx = blocks.phi_phi().view((7, 7), (2, 2)).into_owned();
        let beta = kxx.lu().solve(&DVector::from_column_slice(g)).unwrap();
        let mut baseline = DVector::zeros(9);
        baseline.rows_mut(7, 2).copy_from(&beta);
        assert!(quadratic_loss(&ctx, &blocks, y, gamma, &c) <= quadratic_loss(&ctx, &blocks, y, gamma, &baseline));
    }
}

fn elliptic_config(n: usize) -> SolverConfig {
    let mut cfg = SolverConfig::new(
        TestSpace::sine_1d(n).unwrap(),
        Grid::line(1 << 9).unwrap(),
        interval_endpoints(),
    );
    cfg.gamma = 1e-8;
    cfg
}

#[test]
fn single_mode_forcing_recovers_closed_form() {
    let nu = 0.01;
    let cfg = elliptic_config(64);
    let mut xi = vec![0.0; 64];
    xi[0] = 1.0;
    let (rep, report) = solve(
        &OperatorSpec::linear_elliptic(nu).unwrap(),
        &xi,
        &[0.0, 0.0],
        &cfg,
        None,
    )
    .unwrap();
    let exact = GridFunction::from_fn(cfg.grid, |[x, _]| 2f64.sqrt() * (PI * x).sin() / (nu * PI * PI + 1.0));
    let err = nes_core::rel_l2_error(&rep.evaluate_grid(), &exact).unwrap();
    assert!(err <= 1e-3, "relative error {err:e}");
    assert_eq!(report.iterations, 2);
    assert_eq!(report.termination, Termination::Converged);
}

#[test]
fn linear_problems_are_solved_in_one_step() {
    let cfg = elliptic_config(32);
    let xi = sample_white_noise_spectral(32, 8).unwrap();
    for op in [
        OperatorSpec::linear_elliptic(0.01).unwrap(),
        OperatorSpec::poisson(1.0).unwrap(),
    ] {
        let (_, report) = solve(&op, xi.as_slice(), &[0.2, -0.1], &cfg, None).unwrap();
        let first = report.losses[0].total();
        for later in &report.losses[1..] {
            assert!(
                (later.total() - first).abs() <= 1e-10 * first.max(1e-300),
                "{:?}",
                report.losses
            );
        }
        assert_eq!(report.iterations, 2);
    }
}

#[test]
fn boundary_values_hold_after_every_iteration() {
    let op = OperatorSpec::semilinear_sine(0.05).unwrap();
    let xi = sample_white_noise_spectral(48, 12).unwrap();
    let g = [0.4, -0.25];
    for iterations in 1..=4 {
        let mut cfg = elliptic_config(48);
        cfg.max_iterations = iterations;
        cfg.tolerance = 0.0;
        let (rep, report) = solve(&op, xi.as_slice(), &g, &cfg, None).unwrap();
        assert_eq!(report.iterations, iterations);
        let at = rep.evaluate(&interval_endpoints());
        for (v, want) in at.iter().zip(g) {
            assert!((v - want).abs() <= 1e-8, "iteration {iterations}: {v} vs {want}");
        }
        // grid synthesis agrees with direct evaluation
        let grid_values = rep.evaluate_grid();
        let pts: Vec<[f64; 2]> = (0..=16).map(|k| [k as f64 / 16.0, 0.0]).collect();
        let direct = rep.evaluate(&pts);
        for (p, d) in pts.iter().zip(direct) {
            let k = (p[0] * cfg.grid.intervals() as f64).round() as usize;
            assert_relative_eq!(grid_values.values()[k], d, epsilon = 1e-8, max_relative = 1e-8);
        }
    }
}

#[test]
fn heavy_regularization_collapses_the_coefficients() {
    let mut cfg = elliptic_config(16);
    let xi = sample_white_noise_spectral(16, 2).unwrap();
    let op = OperatorSpec::linear_elliptic(0.01).unwrap();
    let norm_at = |gamma: f64, cfg: &mut SolverConfig| {
        cfg.gamma = gamma;
        solve(&op, xi.as_slice(), &[0.0, 0.0], cfg, None)
            .unwrap()
            .0
            .coefficients()
            .norm()
    };
    let small = norm_at(1e-6, &mut cfg);
    let large = norm_at(1e6, &mut cfg);
    assert!(large < 1e-6 * small, "{large:e} vs {small:e}");
}
