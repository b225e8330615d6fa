//! Semi-implicit Euler for `∂_t u = νΔu + f(u) + σξ̇` on the unit interval,
//! with one kernel solve of `(I − δt νΔ) u_{k+1} = u_k + δt f(u_k) + σδξ_k`
//! per step.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_spaces::{Projector, SpaceKind, TestSpace};
use crate::gauss_newton::{interval_endpoints, KktRoute, KktSolver};
use crate::grid::{Grid, GridFunction};
use crate::kernels::{FeatureSet, KernelGrid, KernelSpec};
use crate::noise::{sine_to_tent, NoiseMode, NoisePath};
use crate::seminorm::SeminormContext;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpdeFamily {
    Heat,
    AllenCahn,
}

impl SpdeFamily {
    /// Explicit drift `f(u)`.
    pub fn drift(self, u: f64) -> f64 {
        match self {
            SpdeFamily::Heat => 0.0,
            SpdeFamily::AllenCahn => u - u * u * u,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpdeConfig {
    pub family: SpdeFamily,
    pub nu: f64,
    pub sigma: f64,
    pub t_final: f64,
    pub dt: f64,
    pub measurements: SpaceKind,
    pub n: usize,
    pub s: f64,
    pub kernel: KernelSpec,
    pub gamma: f64,
    /// Quadrature intervals per measurement cell.
    pub refine: usize,
    pub cfl_bound: f64,
    pub allow_cfl_violation: bool,
    /// Amplitudes `b_j` of the initial condition `g = Σ b_j sin(πjx)`.
    pub initial: Vec<f64>,
}

impl SpdeConfig {
    pub fn heat() -> Self {
        SpdeConfig {
            family: SpdeFamily::Heat,
            nu: 0.025,
            sigma: 0.1,
            t_final: 1.0,
            dt: 1.0 / 1024.0,
            measurements: SpaceKind::Fem1d,
            n: 64,
            s: 1.0,
            kernel: KernelSpec::default(),
            gamma: 1e-12,
            refine: 8,
            cfl_bound: 5.0,
            allow_cfl_violation: false,
            initial: vec![1.0],
        }
    }

    pub fn allen_cahn() -> Self {
        SpdeConfig {
            family: SpdeFamily::AllenCahn,
            nu: 1e-4,
            sigma: 0.01,
            ..Self::heat()
        }
    }

    pub fn cfl(&self) -> f64 {
        (self.n * self.n) as f64 * self.dt
    }

    pub fn steps(&self) -> Result<usize> {
        let ratio = self.t_final / self.dt;
        let steps = ratio.round();
        if !(self.dt > 0.0) || !(self.t_final > 0.0) || (ratio - steps).abs() > 1e-9 * ratio {
            return Err(Error::invalid(format!(
                "final time {} is not a whole number of steps of {}",
                self.t_final, self.dt
            )));
        }
        Ok(steps as usize)
    }

    pub fn space(&self) -> Result<TestSpace> {
        TestSpace::build(self.measurements, self.n)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::line(self.refine * (self.n + 1))
    }

    pub fn validate(&self) -> Result<()> {
        self.steps()?;
        if self.measurements == SpaceKind::Sine2d {
            return Err(Error::invalid("SPDE runs are one-dimensional"));
        }
        if !(self.nu >= 0.0) || !(self.sigma >= 0.0) || !(self.gamma > 0.0) {
            return Err(Error::invalid("ν and σ must be nonnegative and γ positive"));
        }
        if self.refine < 2 {
            return Err(Error::invalid(
                "at least two quadrature intervals per cell are required",
            ));
        }
        if self.cfl() > self.cfl_bound * (1.0 + 1e-12) && !self.allow_cfl_violation {
            return Err(Error::Cfl {
                product: self.cfl(),
                bound: self.cfl_bound,
            });
        }
        self.kernel.validate()
    }

    /// `g` on a grid.
    pub fn initial_on(&self, grid: Grid) -> GridFunction {
        GridFunction::from_fn(grid, |[x, _]| {
            self.initial
                .iter()
                .enumerate()
                .map(|(j, b)| b * (std::f64::consts::PI * (j + 1) as f64 * x).sin())
                .sum()
        })
    }

    /// Orthonormal sine coefficients of `g`.
    pub fn initial_coefficients(&self) -> Vec<f64> {
        self.initial.iter().map(|b| b / 2f64.sqrt()).collect()
    }
}

/// Snapshots of grid values at increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    grid: Grid,
    times: Vec<f64>,
    snapshots: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(grid: Grid, times: Vec<f64>, snapshots: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != snapshots.len() || times.is_empty() {
            return Err(Error::invalid("one snapshot per time stamp is required"));
        }
        if snapshots.iter().any(|s| s.len() != grid.len()) {
            return Err(Error::invalid("snapshot size does not match the grid"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("time stamps must increase"));
        }
        Ok(Trajectory { grid, times, snapshots })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[Vec<f64>] {
        &self.snapshots
    }

    pub fn snapshot(&self, k: usize) -> GridFunction {
        GridFunction::new(self.grid, self.snapshots[k].clone()).expect("sized")
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Header `(points u64, Δt f64, steps u64)` then the initial time and all
    /// snapshot values as little-endian doubles, row-major by time.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        if self.grid.dim() != 1 {
            return Err(Error::invalid("binary snapshots are one-dimensional"));
        }
        let dt = if self.steps() > 0 {
            (self.times[self.steps()] - self.times[0]) / self.steps() as f64
        } else {
            0.0
        };
        w.write_all(&(self.grid.len() as u64).to_le_bytes())?;
        w.write_all(&dt.to_le_bytes())?;
        w.write_all(&(self.steps() as u64).to_le_bytes())?;
        w.write_all(&self.times[0].to_le_bytes())?;
        for s in &self.snapshots {
            for v in s {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let mut b = [0u8; 8];
        let mut next = |r: &mut dyn Read| -> Result<[u8; 8]> {
            r.read_exact(&mut b)
                .map_err(|e| Error::Format(format!("truncated trajectory: {e}")))?;
            Ok(b)
        };
        let points = u64::from_le_bytes(next(r)?) as usize;
        let dt = f64::from_le_bytes(next(r)?);
        let steps = u64::from_le_bytes(next(r)?) as usize;
        let t0 = f64::from_le_bytes(next(r)?);
        if points < 2 {
            return Err(Error::Format(format!("grid with {points} points")));
        }
        let grid = Grid::line(points - 1)?;
        let mut snapshots = Vec::with_capacity(steps + 1);
        for _ in 0..=steps {
            let row = (0..points)
                .map(|_| next(r).map(f64::from_le_bytes))
                .collect::<Result<Vec<_>>>()?;
            snapshots.push(row);
        }
        let times = (0..=steps).map(|k| t0 + k as f64 * dt).collect();
        Trajectory::new(grid, times, snapshots)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_binary(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Rows `time,x,value`.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "time,x,value")?;
        for (t, s) in self.times.iter().zip(&self.snapshots) {
            for (k, v) in s.iter().enumerate() {
                writeln!(w, "{t},{},{v:e}", self.grid.point(k)[0])?;
            }
        }
        Ok(())
    }
}

/// The factored per-step kernel system, reused for every step of a run.
pub struct Stepper {
    cfg: SpdeConfig,
    projector: Projector,
    kernel: KernelGrid,
    features: FeatureSet,
    solver: KktSolver,
}

impl Stepper {
    pub fn new(cfg: &SpdeConfig) -> Result<Self> {
        cfg.validate()?;
        let space = cfg.space()?;
        let grid = cfg.grid()?;
        let projector = Projector::new(space, grid)?;
        let kernel = KernelGrid::new(cfg.kernel, grid)?;
        let features = FeatureSet::constant(space, grid, 1.0, cfg.dt * cfg.nu, interval_endpoints())?;
        let blocks = kernel.assemble(&features)?;
        let ctx = SeminormContext::new(space, cfg.s)?;
        let solver = KktSolver::new(&blocks, ctx.stiffness(), cfg.gamma, KktRoute::Reduced)?;
        Ok(Stepper {
            cfg: cfg.clone(),
            projector,
            kernel,
            features,
            solver,
        })
    }

    pub fn grid(&self) -> Grid {
        self.projector.grid()
    }

    pub fn space(&self) -> TestSpace {
        self.projector.space()
    }

    /// `u_{k+1}` on the grid from `u_k` and the measured noise `[δξ_k, φ]`
    /// (unscaled by σ).
    pub fn step(&self, u_k: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
        if u_k.len() != self.grid().len() || noise.len() != self.space().len() {
            return Err(Error::invalid("state or noise has the wrong size"));
        }
        let dt = self.cfg.dt;
        let family = self.cfg.family;
        let rhs: Vec<f64> = u_k.iter().map(|&u| u + dt * family.drift(u)).collect();
        let mut y = self.projector.project_values(&rhs);
        y.iter_mut().zip(noise).for_each(|(y, n)| *y += self.cfg.sigma * n);
        let (c, _) = self.solver.solve(&y, &[0.0, 0.0])?;
        let n = self.features.n_test();
        Ok(self
            .kernel
            .evaluate_grid(&self.features, &c.as_slice()[..n], &c.as_slice()[n..]))
    }

    /// Maps spectral increments onto the measurement space.
    pub fn noise_map(&self, modes: usize) -> Result<DMatrix<f64>> {
        let space = self.space();
        match space.kind() {
            SpaceKind::Fem1d => sine_to_tent(modes, space),
            _ => Ok(DMatrix::from_fn(
                space.len(),
                modes,
                |a, j| if a == j { 1.0 } else { 0.0 },
            )),
        }
    }
}

/// Runs the configured scheme on a spectral noise path whose step matches
/// `cfg.dt`.
pub fn integrate(cfg: &SpdeConfig, path: &NoisePath) -> Result<Trajectory> {
    let steps = cfg.steps()?;
    if path.steps() != steps || (path.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::invalid(format!(
            "noise path has {} steps of {}, run needs {steps} of {}",
            path.steps(),
            path.dt(),
            cfg.dt
        )));
    }
    let modes = match path.mode {
        NoiseMode::Spectral(l) => l,
        NoiseMode::Fem(_) => return Err(Error::invalid("kernel runs consume spectral noise paths")),
    };
    let stepper = Stepper::new(cfg)?;
    let map = stepper.noise_map(modes)?;
    let grid = stepper.grid();
    let mut u = cfg.initial_on(grid).into_values();
    let mut times = vec![0.0];
    let mut snapshots = vec![u.clone()];
    for k in 0..steps {
        let inc = nalgebra::DVector::from_vec(path.increment(k)?);
        let noise = &map * inc;
        u = stepper.step(&u, noise.as_slice()).map_err(|e| Error::Step {
            index: k,
            source: Box::new(e),
        })?;
        times.push((k + 1) as f64 * cfg.dt);
        snapshots.push(u.clone());
    }
    Trajectory::new(grid, times, snapshots)
}
