use std::f64::consts::PI;

use approx::assert_relative_eq;
use nes_core::gauss_newton::interval_endpoints;
use nes_core::kernels::boundary_flux;
use nes_core::operators::laplacian;
use nes_core::reference::{closed_form_elliptic_1d, manufactured_semilinear_2d};
use nes_core::{
    FeatureSet, Grid, GridFunction, KernelGrid, KernelSpec, MeasurementVector, OperatorSpec, Projector, SolverConfig,
    TestSpace,
};

fn simpson_weights(intervals: usize) -> Vec<f64> {
    let h = 1.0 / intervals as f64;
    (0..=intervals)
        .map(|k| {
            let w = if k == 0 || k == intervals {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

fn sine(j: usize, x: f64) -> f64 {
    2f64.sqrt() * (PI * j as f64 * x).sin()
}

/// Gauss-Legendre nodes and weights on `[lo, hi]`.
fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            let half = 0.5 * (hi - lo);
            (lo + half * (x + 1.0), w * half)
        })
        .collect()
}

/// Matérn 5/2 profile `k(d)` and its even derivatives.
fn profile(l: f64, d: f64) -> (f64, f64, f64) {
    let a = 5f64.sqrt() / l;
    let r = d.abs();
    let e = (-a * r).exp();
    let k = (1.0 + a * r + a * a * r * r / 3.0) * e;
    let k2 = a * a / 3.0 * (a * a * r * r - a * r - 1.0) * e;
    let k4 = a.powi(4) / 3.0 * (a * a * r * r - 5.0 * a * r + 3.0) * e;
    (k, k2, k4)
}

#[test]
fn identity_operator_features_match_brute_force_quadrature() {
    let l = 0.2;
    let grid = Grid::line(1 << 14).unwrap();
    let space = TestSpace::sine_1d(4).unwrap();
    let fs = FeatureSet::constant(space, grid, 1.0, 0.0, interval_endpoints()).unwrap();
    let blocks = KernelGrid::new(KernelSpec::matern52(l).unwrap(), grid)
        .unwrap()
        .assemble(&fs)
        .unwrap();
    let q = 1 << 14;
    let w = simpson_weights(q);
    for i in 0..4 {
        for (j, xj) in [0.0, 1.0].into_iter().enumerate() {
            let brute: f64 = (0..=q)
                .map(|k| {
                    let x = k as f64 / q as f64;
                    w[k] * sine(i + 1, x) * profile(l, x - xj).0
                })
                .sum();
            let assembled = blocks.chi_phi()[(i, 4 + j)];
            assert!((assembled - brute).abs() <= 1e-8, "({i},{j}): {assembled} vs {brute}");
        }
    }
}

#[test]
fn weak_form_plus_boundary_term_agrees_with_strong_form() {
    let (l, nu, c) = (0.3, 0.05, 1.7);
    let grid = Grid::line(1 << 12).unwrap();
    let space = TestSpace::sine_1d(4).unwrap();
    let ends = interval_endpoints();
    let fs = FeatureSet::constant(space, grid, c, nu, ends.clone()).unwrap();
    let blocks = KernelGrid::new(KernelSpec::matern52(l).unwrap(), grid)
        .unwrap()
        .assemble(&fs)
        .unwrap();
    let k = blocks.phi_phi();
    // strong functional = weak functional + Σ_j b(i, j) δ_{x_j}
    let beta: Vec<Vec<f64>> = (0..2)
        .map(|j| {
            let mut g = [0.0; 2];
            g[j] = 1.0;
            boundary_flux(space, nu, &ends, &g).unwrap()
        })
        .collect();
    let b = |i: usize, j: usize| beta[j][i];
    // the kernel's fourth derivative has a kink on the diagonal, so the
    // inner integral is split there
    let outer = gauss_legendre(64, 0.0, 1.0);
    let split = |x: f64| {
        let mut nodes = gauss_legendre(48, 0.0, x);
        nodes.extend(gauss_legendre(48, x, 1.0));
        nodes
    };
    for i in 0..4 {
        for m in i..4 {
            // ∫∫ φ_i(x) φ_m(y) (ν² k⁗ − 2νc k″ + c² k)(x − y)
            let strong: f64 = outer
                .iter()
                .map(|&(x, wx)| {
                    let inner: f64 = split(x)
                        .into_iter()
                        .map(|(y, wy)| {
                            let (k0, k2, k4) = profile(l, x - y);
                            wy * sine(m + 1, y) * (nu * nu * k4 - 2.0 * nu * c * k2 + c * c * k0)
                        })
                        .sum();
                    wx * sine(i + 1, x) * inner
                })
                .sum();
            let mut weak = k[(i, m)];
            for j in 0..2 {
                weak += b(m, j) * k[(i, 4 + j)] + b(i, j) * k[(4 + j, m)];
                for r in 0..2 {
                    weak += b(i, j) * b(m, r) * k[(4 + j, 4 + r)];
                }
            }
            assert!(
                (weak - strong).abs() <= 1e-6 * strong.abs().max(1.0),
                "({i},{m}): {weak} vs {strong}"
            );
        }
        // against a boundary point: ∫ φ_i (−ν k″ + c k)(x − x_j)
        for (j, xj) in [0.0, 1.0].into_iter().enumerate() {
            let strong: f64 = split(xj)
                .into_iter()
                .map(|(x, w)| {
                    let (k0, k2, _) = profile(l, x - xj);
                    w * sine(i + 1, x) * (-nu * k2 + c * k0)
                })
                .sum();
            let weak = k[(i, 4 + j)] + (0..2).map(|r| b(i, r) * k[(4 + r, 4 + j)]).sum::<f64>();
            assert!(
                (weak - strong).abs() <= 1e-6 * strong.abs().max(1.0),
                "({i},x{j}): {weak} vs {strong}"
            );
        }
    }
}

#[test]
fn inhomogeneous_boundary_data_is_honored() {
    let nu = 0.02;
    let n = 64;
    let exact = |x: f64| 0.3 - 0.7 * x + x * (1.0 - x) * (2.0 * x).exp();
    // −ν u″ + u for the field above
    let forcing = |x: f64| {
        let e = (2.0 * x).exp();
        let second = e * (4.0 * x * (1.0 - x) + 4.0 * (1.0 - 2.0 * x) - 2.0);
        -nu * second + exact(x)
    };
    let q = 1 << 14;
    let w = simpson_weights(q);
    let xi: Vec<f64> = (1..=n)
        .map(|j| {
            (0..=q)
                .map(|k| {
                    let x = k as f64 / q as f64;
                    w[k] * forcing(x) * sine(j, x)
                })
                .sum()
        })
        .collect();
    let mut cfg = SolverConfig::new(
        TestSpace::sine_1d(n).unwrap(),
        Grid::line(1 << 10).unwrap(),
        interval_endpoints(),
    );
    cfg.gamma = 1e-10;
    let op = OperatorSpec::linear_elliptic(nu).unwrap();
    let (rep, _) = nes_core::gauss_newton::solve(&op, &xi, &[exact(0.0), exact(1.0)], &cfg, None).unwrap();
    let truth = GridFunction::from_fn(cfg.grid, |[x, _]| exact(x));
    let err = nes_core::rel_l2_error(&rep.evaluate_grid(), &truth).unwrap();
    assert!(err <= 1e-3, "relative error {err:e}");
}

#[test]
fn gram_blocks_are_symmetric_positive_semidefinite() {
    let grid = Grid::line(1 << 10).unwrap();
    for space in [TestSpace::sine_1d(2).unwrap(), TestSpace::fem_1d(15).unwrap()] {
        let fs = FeatureSet::constant(space, grid, 1.0, 0.01, interval_endpoints()).unwrap();
        let k = KernelGrid::new(KernelSpec::default(), grid)
            .unwrap()
            .assemble(&fs)
            .unwrap();
        let k = k.phi_phi();
        assert_eq!(k, &k.transpose());
        let min = k.clone().symmetric_eigenvalues().min();
        assert!(min >= -1e-8 * k.trace(), "min eigenvalue {min:e}");
    }
    // point Gram on scattered points in the square
    let spec = KernelSpec::matern52(0.4).unwrap();
    let pts: Vec<[f64; 2]> = (0..40)
        .map(|k| {
            let t = k as f64 * 0.618_033_988_75;
            [t.fract(), (t * 1.7).fract()]
        })
        .collect();
    let m = spec.matrix(&pts, &pts);
    assert_eq!(m, m.transpose());
    assert!(m.clone().symmetric_eigenvalues().min() >= -1e-10 * m.trace());
}

#[test]
fn gram_blocks_settle_under_grid_doubling() {
    let space = TestSpace::sine_1d(8).unwrap();
    let assemble = |intervals: usize| {
        let grid = Grid::line(intervals).unwrap();
        let fs = FeatureSet::constant(space, grid, 1.0, 0.01, interval_endpoints()).unwrap();
        KernelGrid::new(KernelSpec::default(), grid)
            .unwrap()
            .assemble(&fs)
            .unwrap()
            .phi_phi()
            .clone()
    };
    let a = assemble(1 << 10);
    let b = assemble(1 << 11);
    let c = assemble(1 << 12);
    let d1 = (&a - &b).amax() / b.amax();
    let d2 = (&b - &c).amax() / c.amax();
    assert!(d2 <= 1e-5, "relative change {d2:e}");
    // second-order quadrature: each doubling cuts the change by about four
    assert!(d2 <= 0.3 * d1, "{d1:e} then {d2:e}");
}

#[test]
fn kernel_gradient_matches_finite_differences() {
    let spec = KernelSpec::matern52(1.0).unwrap();
    let h = 1e-6;
    for (x, y) in [
        ([0.5, 0.0], [0.0, 0.0]),
        ([0.3, 0.7], [0.9, 0.1]),
        ([0.2, 0.2], [0.21, 0.18]),
    ] {
        let g = spec.eval_dx(x, y);
        for axis in 0..2 {
            let (mut p, mut m) = (x, x);
            p[axis] += h;
            m[axis] -= h;
            let fd = (spec.eval(p, y) - spec.eval(m, y)) / (2.0 * h);
            assert!((g[axis] - fd).abs() <= 1e-6, "{x:?} {y:?}: {} vs {fd}", g[axis]);
        }
        let back = spec.eval_dx(y, x);
        assert_relative_eq!(back[0], -g[0], epsilon = 1e-15);
    }
    assert_relative_eq!(spec.eval([0.0, 0.0], [1.0, 0.0]), 0.524_00, epsilon = 1e-5);
}

#[test]
fn linearization_has_second_order_taylor_remainder() {
    let grid = Grid::line(256).unwrap();
    let op = OperatorSpec::semilinear_sine(0.1).unwrap();
    let u = GridFunction::from_fn(grid, |[x, _]| 0.8 * (PI * x).sin() + 0.3 * (3.0 * PI * x).sin());
    let v = GridFunction::from_fn(grid, |[x, _]| (2.0 * PI * x).sin() - 0.5 * (5.0 * PI * x).sin());
    let lin = op.linearize(&u);
    let lap = laplacian(&v);
    let dv: Vec<f64> = v
        .values()
        .iter()
        .zip(lap.values())
        .zip(lin.coefficient.values())
        .map(|((&v, &l), &c)| -lin.diffusion * l + c * v)
        .collect();
    let base = op.apply(&u);
    let remainder = |eps: f64| {
        let moved = op.apply(&u.zip_with(&v, |a, b| a + eps * b).unwrap());
        moved
            .values()
            .iter()
            .zip(base.values())
            .zip(&dv)
            .map(|((m, b), d)| (m - b - eps * d).abs())
            .fold(0.0, f64::max)
    };
    let order = (remainder(1e-2) / remainder(1e-3)).log10();
    assert!(order >= 1.9, "observed order {order}");
}

#[test]
fn linear_operators_equal_their_linearization() {
    let grid = Grid::line(128).unwrap();
    let u = GridFunction::from_fn(grid, |[x, _]| x * (1.0 - x) * (4.0 * x).exp());
    for op in [
        OperatorSpec::linear_elliptic(0.01).unwrap(),
        OperatorSpec::poisson(1.0).unwrap(),
        OperatorSpec::backward_euler_heat(0.025, 0.1).unwrap(),
    ] {
        let lin = op.linearize(&u);
        assert!(lin.shift.is_none());
        let lap = laplacian(&u);
        let p = op.apply(&u);
        for k in 0..grid.len() {
            let want = -lin.diffusion * lap.values()[k] + lin.coefficient.values()[k] * u.values()[k];
            assert!((p.values()[k] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }
}

#[test]
fn closed_form_solution_round_trips_through_the_operator() {
    let nu = 0.01;
    let n = 128;
    let space = TestSpace::sine_1d(n).unwrap();
    let grid = Grid::line(1 << 10).unwrap();
    let xi = nes_core::noise::sample_white_noise_spectral(n, 21).unwrap();
    let u = closed_form_elliptic_1d(&xi, nu).unwrap();
    let projector = Projector::new(space, grid).unwrap();
    let field = projector.synthesize(&u).unwrap();
    let back = projector
        .project(&OperatorSpec::linear_elliptic(nu).unwrap().apply(&field))
        .unwrap();
    for (a, b) in back.as_slice().iter().zip(xi.as_slice()) {
        assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }
    let zero = closed_form_elliptic_1d(&MeasurementVector::zeros(space), nu).unwrap();
    assert!(zero.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn manufactured_single_mode_forcing() {
    let nu = 0.1;
    let grid = Grid::square(64).unwrap();
    let (u, xi) = manufactured_semilinear_2d(0.15, 1, 5, nu, grid).unwrap();
    let amplitude = u.values()[grid.index(32, 32)] / 2.0;
    for k in 0..grid.len() {
        let [x, y] = grid.point(k);
        let mode = 2.0 * amplitude * (PI * x).sin() * (PI * y).sin();
        assert!((u.values()[k] - mode).abs() <= 1e-12);
        let want = (2.0 * nu * PI * PI + 1.0) * mode + (PI * mode).sin();
        assert!((xi.values()[k] - want).abs() <= 1e-10, "{} vs {want}", xi.values()[k]);
    }
}
