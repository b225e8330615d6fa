//! Error metrics and log-log rate fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::spde::Trajectory;

/// `‖u − v‖ / ‖v‖` in the trapezoid L² norm.
pub fn rel_l2_error(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    let diff = u.zip_with(v, |a, b| a - b)?;
    let norm = v.l2_norm();
    if norm == 0.0 {
        return Err(Error::invalid("reference has zero norm"));
    }
    Ok(diff.l2_norm() / norm)
}

pub fn sup_error(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    Ok(u.zip_with(v, |a, b| a - b)?.max_abs())
}

/// Relative `L²([0,T]; L²)` error of `estimate` against `reference`, with
/// the time integral taken by the trapezoid rule over the estimate's
/// stamps, each of which must also be a reference stamp.
pub fn space_time_l2_error(estimate: &Trajectory, reference: &Trajectory) -> Result<f64> {
    if estimate.grid() != reference.grid() {
        return Err(Error::invalid("trajectories live on different grids"));
    }
    let rt = reference.times();
    let mut cursor = 0;
    let mut err = Vec::with_capacity(estimate.times().len());
    let mut norm = Vec::with_capacity(estimate.times().len());
    for (k, &t) in estimate.times().iter().enumerate() {
        let tol = 1e-9 * t.abs().max(1.0);
        while cursor < rt.len() && rt[cursor] < t - tol {
            cursor += 1;
        }
        if cursor == rt.len() || (rt[cursor] - t).abs() > tol {
            return Err(Error::invalid(format!("time {t} has no matching reference snapshot")));
        }
        let a = estimate.snapshot(k);
        let b = reference.snapshot(cursor);
        err.push(a.zip_with(&b, |x, y| x - y)?.l2_norm().powi(2));
        norm.push(b.l2_norm().powi(2));
    }
    let times = estimate.times();
    let integrate = |f: &[f64]| -> f64 {
        if f.len() == 1 {
            return f[0];
        }
        times
            .windows(2)
            .zip(f.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    };
    let denom = integrate(&norm);
    if denom == 0.0 {
        return Err(Error::invalid("reference trajectory has zero norm"));
    }
    Ok((integrate(&err) / denom).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(log x, log y)`.
pub fn fit_rate(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::invalid("rate fit needs at least three paired points"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("rate fit needs positive finite data"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("rate fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn relative_error_basics() {
        let grid = Grid::line(32).unwrap();
        let v = GridFunction::from_fn(grid, |[x, _]| x * (1.0 - x) + 0.1);
        assert_eq!(rel_l2_error(&v, &v).unwrap(), 0.0);
        let u = v.map(|a| 1.1 * a);
        assert!((rel_l2_error(&u, &v).unwrap() - 0.1).abs() < 1e-14);
        assert!(rel_l2_error(&v, &GridFunction::zeros(grid)).is_err());
    }

    #[test]
    fn rate_fit_recovers_power_laws() {
        let xs = [1e-3, 1e-2, 1e-1, 1.0];
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let fit = fit_rate(&xs, &sq).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let root: Vec<f64> = xs.iter().map(|x| 3.0 * x.sqrt()).collect();
        assert!((fit_rate(&xs, &root).unwrap().slope - 0.5).abs() < 1e-12);
        assert!(fit_rate(&xs, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn constant_error_in_time() {
        let grid = Grid::line(8).unwrap();
        let v = GridFunction::from_fn(grid, |[x, _]| (std::f64::consts::PI * x).sin());
        let times = vec![0.0, 0.25, 0.5, 1.0];
        let r = Trajectory::new(grid, times.clone(), vec![v.values().to_vec(); 4]).unwrap();
        let e = Trajectory::new(grid, times, vec![v.map(|a| 1.2 * a).into_values(); 4]).unwrap();
        assert!((space_time_l2_error(&e, &r).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(space_time_l2_error(&r, &r).unwrap(), 0.0);
    }

    #[test]
    fn misaligned_stamps_are_rejected() {
        let grid = Grid::line(4).unwrap();
        let z = vec![vec![0.0, 1.0, 1.0, 1.0, 0.0]; 2];
        let a = Trajectory::new(grid, vec![0.0, 1.0], z.clone()).unwrap();
        let b = Trajectory::new(grid, vec![0.0, 0.7], z).unwrap();
        assert!(space_time_l2_error(&a, &b).is_err());
    }
}
