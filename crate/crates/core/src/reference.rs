//! Ground truths: the closed-form 1D elliptic solution, manufactured 2D
//! semilinear data, and spectral Galerkin SPDE runs on a shared noise path.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft::{Dst1, Dst2};
use crate::function_spaces::{MeasurementVector, SpaceKind};
use crate::grid::{Grid, GridFunction};
use crate::noise::{standard_normals, NoiseMode, NoisePath, Purpose};
use crate::spde::{SpdeFamily, Trajectory};

/// Sine coefficients of the solution of `−νu'' + u = ξ`.
pub fn closed_form_elliptic_1d(xi: &MeasurementVector, nu: f64) -> Result<MeasurementVector> {
    if xi.space().kind() != SpaceKind::Sine1d {
        return Err(Error::invalid("closed form needs sine coefficients"));
    }
    let values = xi
        .as_slice()
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let k = PI * (j + 1) as f64;
            x / (nu * k * k + 1.0)
        })
        .collect();
    MeasurementVector::from_vec(xi.space(), values)
}

/// Exact point values of `Σ_j a_j √2 sin(πjx)` on a 1D grid for any number
/// of modes; modes beyond the grid resolution are folded onto their aliases.
pub fn sine_series_on_grid(coeffs: &[f64], grid: Grid) -> Result<GridFunction> {
    if grid.dim() != 1 {
        return Err(Error::invalid("sine series evaluation is one-dimensional"));
    }
    let g = grid.intervals();
    let mut folded = vec![0.0; g.saturating_sub(1)];
    for (j, &a) in coeffs.iter().enumerate() {
        let r = (j + 1) % (2 * g);
        if r == 0 || r == g {
            continue;
        }
        if r < g {
            folded[r - 1] += a;
        } else {
            folded[2 * g - r - 1] -= a;
        }
    }
    let interior: Vec<f64> = Dst1::new(g - 1)
        .apply(&folded)
        .iter()
        .map(|v| v * 2f64.sqrt())
        .collect();
    GridFunction::new(grid, grid.from_interior(&interior))
}

/// Manufactured pair `(u*, ξ)` for `−νΔu + u + sin(πu) = ξ` on the square,
/// with `u* = Σ_{i,j ≤ L} z_ij (i² + j²)^{−1−ε} 2 sin(iπx) sin(jπy)`.
pub fn manufactured_semilinear_2d(
    eps: f64,
    modes: usize,
    seed: u64,
    nu: f64,
    grid: Grid,
) -> Result<(GridFunction, GridFunction)> {
    if grid.dim() != 2 {
        return Err(Error::invalid("manufactured solution lives on the unit square"));
    }
    if modes == 0 || !(eps >= 0.0) {
        return Err(Error::invalid("need at least one mode and ε ≥ 0"));
    }
    let n = grid.interior_per_dim();
    if modes > n {
        return Err(Error::ResolutionTooCoarse {
            points: grid.points_per_dim(),
            required: modes + 2,
        });
    }
    let z = standard_normals(seed, Purpose::Manufactured, 0, 0, modes * modes);
    let mut u_hat = vec![0.0; n * n];
    let mut lap_hat = vec![0.0; n * n];
    for i in 0..modes {
        for j in 0..modes {
            let k2 = ((i + 1) * (i + 1) + (j + 1) * (j + 1)) as f64;
            let a = z[i * modes + j] / k2.powf(1.0 + eps);
            u_hat[i * n + j] = 2.0 * a;
            lap_hat[i * n + j] = 2.0 * a * PI * PI * k2;
        }
    }
    let dst = Dst2::new(n);
    let u = grid.from_interior(&dst.apply(&u_hat));
    let neg_lap = grid.from_interior(&dst.apply(&lap_hat));
    let xi = u
        .iter()
        .zip(&neg_lap)
        .map(|(&u, &l)| nu * l + u + (PI * u).sin())
        .collect();
    Ok((GridFunction::new(grid, u)?, GridFunction::new(grid, xi)?))
}

/// Sine coefficients `a_j` of `u(t)` recorded every `record_every` fine steps.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralTrajectory {
    pub times: Vec<f64>,
    pub coefficients: Vec<Vec<f64>>,
}

impl SpectralTrajectory {
    pub fn on_grid(&self, grid: Grid) -> Result<Trajectory> {
        let snapshots = self
            .coefficients
            .iter()
            .map(|a| sine_series_on_grid(a, grid).map(GridFunction::into_values))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(grid, self.times.clone(), snapshots)
    }
}

/// Semi-implicit Euler on the sine modes:
/// `a ← (a + δt f̂(u) + σΔβ) / (1 + δt ν π² j²)`, with the Allen-Cahn drift
/// evaluated on a grid of `2L` intervals.
pub fn spectral_galerkin_spde(
    family: SpdeFamily,
    nu: f64,
    sigma: f64,
    initial: &[f64],
    path: &NoisePath,
    record_every: usize,
) -> Result<SpectralTrajectory> {
    let modes = match path.mode {
        NoiseMode::Spectral(l) => l,
        NoiseMode::Fem(_) => return Err(Error::invalid("spectral reference needs a spectral noise path")),
    };
    if initial.len() > modes {
        return Err(Error::invalid("initial condition has more modes than the reference"));
    }
    if record_every == 0 || path.steps() % record_every != 0 {
        return Err(Error::invalid("recording interval must divide the step count"));
    }
    let dt = path.dt();
    let mut a = vec![0.0; modes];
    a[..initial.len()].copy_from_slice(initial);
    let denom: Vec<f64> = (1..=modes)
        .map(|j| {
            let k = PI * j as f64;
            1.0 + dt * nu * k * k
        })
        .collect();
    let dst = Dst1::new(2 * modes - 1);
    let mut times = vec![0.0];
    let mut coefficients = vec![a.clone()];
    for step in 0..path.steps() {
        let inc = path.increment(step)?;
        let drift = match family {
            SpdeFamily::Heat => None,
            SpdeFamily::AllenCahn => Some(allen_cahn_drift(&a, &dst)),
        };
        for j in 0..modes {
            let f = drift.as_ref().map_or(0.0, |d| d[j]);
            a[j] = (a[j] + dt * f + sigma * inc[j]) / denom[j];
        }
        if (step + 1) % record_every == 0 {
            times.push((step + 1) as f64 * dt);
            coefficients.push(a.clone());
        }
    }
    Ok(SpectralTrajectory { times, coefficients })
}

/// Sine coefficients of `u − u³`.
fn allen_cahn_drift(a: &[f64], dst: &Dst1) -> Vec<f64> {
    let modes = a.len();
    let mut padded = vec![0.0; dst.len()];
    padded[..modes].copy_from_slice(a);
    let cubes: Vec<f64> = dst.apply(&padded).iter().map(|v| (v * 2f64.sqrt()).powi(3)).collect();
    let h = 1.0 / (dst.len() + 1) as f64;
    let c = dst.apply(&cubes);
    (0..modes).map(|j| a[j] - 2f64.sqrt() * h * c[j]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_spaces::TestSpace;

    #[test]
    fn closed_form_first_mode() {
        let space = TestSpace::sine_1d(3).unwrap();
        let xi = MeasurementVector::from_vec(space, vec![1.0, 0.0, 0.0]).unwrap();
        let u = closed_form_elliptic_1d(&xi, 0.01).unwrap();
        assert!((u.as_slice()[0] - 0.910_169).abs() < 1e-6);
        assert_eq!(&u.as_slice()[1..], &[0.0, 0.0]);
    }

    #[test]
    fn folded_series_matches_direct_sum() {
        let grid = Grid::line(8).unwrap();
        let coeffs: Vec<f64> = (1..=40).map(|j| 1.0 / j as f64).collect();
        let u = sine_series_on_grid(&coeffs, grid).unwrap();
        for (k, &v) in u.values().iter().enumerate() {
            let x = k as f64 / 8.0;
            let direct: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(j, a)| a * 2f64.sqrt() * (PI * (j + 1) as f64 * x).sin())
                .sum();
            assert!((v - direct).abs() < 1e-12, "{v} vs {direct}");
        }
    }

    #[test]
    fn manufactured_pair_is_deterministic() {
        let grid = Grid::square(32).unwrap();
        let a = manufactured_semilinear_2d(0.15, 8, 3, 0.1, grid).unwrap();
        let b = manufactured_semilinear_2d(0.15, 8, 3, 0.1, grid).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn heat_without_noise_decays_mode_wise() {
        let path = NoisePath::new(1, NoiseMode::Spectral(4), 0.01, 10).unwrap();
        let traj = spectral_galerkin_spde(SpdeFamily::Heat, 0.5, 0.0, &[1.0, 0.0, 0.5], &path, 1).unwrap();
        let d1 = 1.0 + 0.01 * 0.5 * PI * PI;
        let d3 = 1.0 + 0.01 * 0.5 * 9.0 * PI * PI;
        let last = traj.coefficients.last().unwrap();
        assert!((last[0] - d1.powi(-10)).abs() < 1e-14);
        assert!((last[2] - 0.5 * d3.powi(-10)).abs() < 1e-14);
        assert_eq!(last[1], 0.0);
        assert_eq!(traj.times.len(), 11);
    }

    #[test]
    fn allen_cahn_drift_of_a_single_mode() {
        let dst = Dst1::new(63);
        let mut a = vec![0.0; 32];
        a[0] = 0.3;
        let d = allen_cahn_drift(&a, &dst);
        // ∫ (0.3√2 sin πx)³ √2 sin πx dx = 0.3³ · 4 · 3/8
        let expected = 0.3 - 0.027 * 1.5;
        assert!((d[0] - expected).abs() < 1e-12);
        assert!(d[1].abs() < 1e-12);
        // sin³ = (3 sin − sin 3x)/4
        assert!((d[2] - 0.027 * 4.0 / 8.0).abs() < 1e-12);
    }
}
