#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nes_core::{ExperimentConfig, ExperimentKind};

/// Orthonormal basis of the null space of the `m × p` matrix `b` by
/// Gram-Schmidt on `[bᵀ | I]`.
pub fn null_space(b: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, p) = b.shape();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let candidates = (0..m)
        .map(|i| b.row(i).transpose())
        .chain((0..p).map(|i| DVector::from_fn(p, |k, _| if k == i { 1.0 } else { 0.0 })));
    for mut v in candidates {
        for _ in 0..2 {
            for q in &basis {
                v -= q * q.dot(&v);
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v / n);
        }
    }
    DMatrix::from_columns(&basis[m..])
}

/// Minimizes `|K_χ c − y|²_{A⁻¹} + γ cᵀKc` over `K_X c = g` on the
/// constraint manifold directly.
pub fn qp_oracle(k: &DMatrix<f64>, a: &DMatrix<f64>, n: usize, gamma: f64, y: &[f64], g: &[f64]) -> DVector<f64> {
    let m = k.nrows() - n;
    let kchi = k.rows(0, n).into_owned();
    let kx = k.rows(n, m).into_owned();
    let ainv = a.clone().try_inverse().unwrap();
    let q = kchi.transpose() * &ainv * &kchi + k * gamma;
    let lin = kchi.transpose() * &ainv * DVector::from_column_slice(y);
    let gram = &kx * kx.transpose();
    let cp = kx.transpose() * gram.lu().solve(&DVector::from_column_slice(g)).unwrap();
    let z = null_space(&kx);
    let reduced = z.transpose() * &q * &z;
    let rhs = z.transpose() * (&lin - &q * &cp);
    cp + z * reduced.lu().solve(&rhs).unwrap()
}

/// Every pipeline shrunk to seconds; the code paths are the desk-scale ones.
pub fn reduced(kind: ExperimentKind, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind, seed);
    let e = &mut cfg.elliptic1d;
    e.n = 64;
    e.modes = 1 << 10;
    e.grid_intervals = 1 << 9;
    for p in [&mut cfg.semilinear2d, &mut cfg.norm_study.problem] {
        p.per_dim = 6;
        p.grid_intervals = 1 << 5;
        p.data_intervals = 1 << 7;
        p.modes = 1 << 5;
        p.max_iterations = 3;
    }
    cfg.norm_study.exponents = vec![0.0, 1.0];
    for p in [&mut cfg.heat, &mut cfg.allen_cahn] {
        p.run.n = 16;
        p.run.dt = 1.0 / 64.0;
        p.run.t_final = 0.25;
        p.modes = 1 << 7;
        p.seeds = 2;
    }
    cfg.rate_study.gammas = vec![1e-2, 1e-3, 1e-4];
    cfg.rate_study.grid_intervals = 1 << 8;
    cfg
}
