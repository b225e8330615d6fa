//! Test bases (sine eigenfunctions in 1D/2D, piecewise-linear tents in 1D),
//! their stiffness and mass matrices, and the projection/synthesis
//! transforms between grid functions and measurement vectors.
//!
//! Sine bases are stored L²-orthonormal: `√2 sin(πjx)` on the interval and
//! `2 sin(πix) sin(πjy)` on the square. 2D modes are ordered row-major in
//! `(i, j)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{Dst1, Dst2};
use crate::grid::{Grid, GridFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Sine1d,
    Sine2d,
    Fem1d,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Sine1d => "sine1d",
            SpaceKind::Sine2d => "sine2d",
            SpaceKind::Fem1d => "fem1d",
        }
    }
}

/// A finite set of linearly independent test functions vanishing on the
/// boundary of the unit interval or square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSpace {
    kind: SpaceKind,
    n: usize,
}

impl TestSpace {
    /// Builds a space of `n` functions. For `Sine2d`, `n` is the total count
    /// and must be a perfect square.
    pub fn build(kind: SpaceKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("test space needs at least one function"));
        }
        if kind == SpaceKind::Sine2d {
            let per_dim = (n as f64).sqrt().round() as usize;
            if per_dim * per_dim != n {
                return Err(Error::invalid(format!(
                    "sine2d basis count {n} is not a perfect square"
                )));
            }
        }
        Ok(TestSpace { kind, n })
    }

    pub fn sine_1d(n: usize) -> Result<Self> {
        Self::build(SpaceKind::Sine1d, n)
    }

    pub fn sine_2d(per_dim: usize) -> Result<Self> {
        Self::build(SpaceKind::Sine2d, per_dim * per_dim)
    }

    pub fn fem_1d(n: usize) -> Result<Self> {
        Self::build(SpaceKind::Fem1d, n)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SpaceKind::Sine2d => 2,
            _ => 1,
        }
    }

    /// Modes per dimension for sine2d; `n` otherwise.
    pub fn per_dim(&self) -> usize {
        match self.kind {
            SpaceKind::Sine2d => (self.n as f64).sqrt().round() as usize,
            _ => self.n,
        }
    }

    /// Node spacing `1 / (n + 1)` of the FEM mesh.
    pub fn fem_spacing(&self) -> Option<f64> {
        (self.kind == SpaceKind::Fem1d).then(|| 1.0 / (self.n + 1) as f64)
    }

    /// 1-based mode indices of basis function `a` (second index 0 in 1D).
    pub fn mode(&self, a: usize) -> (usize, usize) {
        match self.kind {
            SpaceKind::Sine2d => {
                let p = self.per_dim();
                (a / p + 1, a % p + 1)
            }
            _ => (a + 1, 0),
        }
    }

    /// Dirichlet-Laplacian eigenvalue of a sine basis function.
    pub fn eigenvalue(&self, a: usize) -> Option<f64> {
        let (i, j) = self.mode(a);
        match self.kind {
            SpaceKind::Sine1d => Some((PI * i as f64).powi(2)),
            SpaceKind::Sine2d => Some(PI * PI * ((i * i + j * j) as f64)),
            SpaceKind::Fem1d => None,
        }
    }

    pub fn eigenvalues(&self) -> Option<Vec<f64>> {
        (0..self.n).map(|a| self.eigenvalue(a)).collect()
    }

    /// Value of basis function `a` at `x`.
    pub fn eval(&self, a: usize, x: [f64; 2]) -> f64 {
        let (i, j) = self.mode(a);
        match self.kind {
            SpaceKind::Sine1d => 2f64.sqrt() * (PI * i as f64 * x[0]).sin(),
            SpaceKind::Sine2d => 2.0 * (PI * i as f64 * x[0]).sin() * (PI * j as f64 * x[1]).sin(),
            SpaceKind::Fem1d => {
                let h = 1.0 / (self.n + 1) as f64;
                let node = (a + 1) as f64 * h;
                (1.0 - (x[0] - node).abs() / h).max(0.0)
            }
        }
    }

    /// Derivative of a 1D basis function (one-sided at FEM nodes).
    pub fn eval_dx(&self, a: usize, x: f64) -> f64 {
        let (i, _) = self.mode(a);
        match self.kind {
            SpaceKind::Sine1d => 2f64.sqrt() * PI * i as f64 * (PI * i as f64 * x).cos(),
            SpaceKind::Fem1d => {
                let h = 1.0 / (self.n + 1) as f64;
                let node = (a + 1) as f64 * h;
                if x > node - h && x < node {
                    1.0 / h
                } else if x >= node && x < node + h {
                    -1.0 / h
                } else {
                    0.0
                }
            }
            SpaceKind::Sine2d => f64::NAN,
        }
    }

    /// `A_ij = ∫ φ_i (−Δ)^s φ_j`. Sine bases accept any `s ≥ 0` through the
    /// spectral definition; the FEM basis supports `s ∈ {0, 1}` only.
    pub fn stiffness_matrix(&self, s: f64) -> Result<DMatrix<f64>> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::invalid(format!(
                "exponent must be finite and nonnegative, got {s}"
            )));
        }
        match self.kind {
            SpaceKind::Sine1d | SpaceKind::Sine2d => {
                Ok(DMatrix::from_diagonal(&DVector::from_vec(self.stiffness_diagonal(s)?)))
            }
            SpaceKind::Fem1d => {
                if s == 0.0 {
                    Ok(self.mass_matrix())
                } else if s == 1.0 {
                    let h = self.fem_spacing().unwrap();
                    Ok(tridiagonal(self.n, 2.0 / h, -1.0 / h))
                } else {
                    Err(Error::UnsupportedExponent { s, space: "fem1d" })
                }
            }
        }
    }

    /// Diagonal of the stiffness matrix for sine bases, `λ_a^s`.
    pub fn stiffness_diagonal(&self, s: f64) -> Result<Vec<f64>> {
        match self.eigenvalues() {
            Some(lam) => Ok(lam.into_iter().map(|l| l.powf(s)).collect()),
            None => Err(Error::invalid("stiffness is diagonal only for sine bases")),
        }
    }

    /// L² Gram matrix `⟨φ_i, φ_j⟩`.
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        match self.kind {
            SpaceKind::Sine1d | SpaceKind::Sine2d => DMatrix::identity(self.n, self.n),
            SpaceKind::Fem1d => {
                let h = self.fem_spacing().unwrap();
                tridiagonal(self.n, 2.0 * h / 3.0, h / 6.0)
            }
        }
    }

    pub fn is_orthonormal(&self) -> bool {
        self.kind != SpaceKind::Fem1d
    }

    /// Smallest grid (intervals per dimension) this space can be projected
    /// from without aliasing.
    pub fn min_grid_intervals(&self) -> usize {
        match self.kind {
            SpaceKind::Fem1d => self.n + 1,
            _ => 2 * self.per_dim() + 1,
        }
    }

    /// Checks that `grid` can carry this space.
    pub fn check_grid(&self, grid: Grid) -> Result<()> {
        if grid.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "{} space needs a {}D grid, got {}D",
                self.kind.name(),
                self.dim(),
                grid.dim()
            )));
        }
        match self.kind {
            SpaceKind::Fem1d => {
                if grid.intervals() % (self.n + 1) != 0 {
                    return Err(Error::invalid(format!(
                        "grid with {} intervals does not refine the FEM mesh of {} cells",
                        grid.intervals(),
                        self.n + 1
                    )));
                }
            }
            _ => {
                let required = 2 * self.per_dim() + 2;
                if grid.points_per_dim() < required {
                    return Err(Error::ResolutionTooCoarse {
                        points: grid.points_per_dim(),
                        required,
                    });
                }
            }
        }
        Ok(())
    }

    /// Basis functions sampled on every grid point; row `a` holds `φ_a`.
    pub fn sample(&self, grid: Grid) -> DMatrix<f64> {
        let pts = grid.points();
        DMatrix::from_fn(self.n, pts.len(), |a, k| self.eval(a, pts[k]))
    }
}

fn tridiagonal(n: usize, diag: f64, off: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag
        } else if i.abs_diff(j) == 1 {
            off
        } else {
            0.0
        }
    })
}

/// Projections `[f, φ] = (∫ f φ_1, …, ∫ f φ_N)` of a field onto a test space.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementVector {
    space: TestSpace,
    values: DVector<f64>,
}

impl MeasurementVector {
    pub fn new(space: TestSpace, values: DVector<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::invalid(format!(
                "measurement vector has {} entries, space has {}",
                values.len(),
                space.len()
            )));
        }
        Ok(MeasurementVector { space, values })
    }

    pub fn from_vec(space: TestSpace, values: Vec<f64>) -> Result<Self> {
        Self::new(space, DVector::from_vec(values))
    }

    pub fn zeros(space: TestSpace) -> Self {
        MeasurementVector {
            space,
            values: DVector::zeros(space.len()),
        }
    }

    pub fn space(&self) -> TestSpace {
        self.space
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        MeasurementVector {
            space: self.space,
            values: &self.values * c,
        }
    }

    pub fn add(&self, other: &MeasurementVector) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::invalid("measurements come from different test spaces"));
        }
        Ok(MeasurementVector {
            space: self.space,
            values: &self.values + &other.values,
        })
    }
}

/// Projection/synthesis transforms for one (space, grid) pair, with the
/// FFT plans built once.
#[derive(Clone, Debug)]
pub struct Projector {
    space: TestSpace,
    grid: Grid,
    plan: Plan,
}

#[derive(Clone, Debug)]
enum Plan {
    Line(Dst1),
    Square(Dst2),
    Fem { refine: usize },
}

impl Projector {
    pub fn new(space: TestSpace, grid: Grid) -> Result<Self> {
        space.check_grid(grid)?;
        let n = grid.interior_per_dim();
        let plan = match space.kind() {
            SpaceKind::Sine1d => Plan::Line(Dst1::new(n)),
            SpaceKind::Sine2d => Plan::Square(Dst2::new(n)),
            SpaceKind::Fem1d => Plan::Fem {
                refine: grid.intervals() / (space.len() + 1),
            },
        };
        Ok(Projector { space, grid, plan })
    }

    pub fn space(&self) -> TestSpace {
        self.space
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `[f, φ]` from grid values (boundary values are ignored by the sine
    /// kinds, whose basis vanishes there).
    pub fn project_values(&self, values: &[f64]) -> Vec<f64> {
        let h = self.grid.spacing();
        match &self.plan {
            Plan::Line(dst) => {
                let coef = dst.apply(&values[1..values.len() - 1]);
                let scale = 2f64.sqrt() * h;
                coef[..self.space.len()].iter().map(|c| c * scale).collect()
            }
            Plan::Square(dst) => {
                let interior = self.grid.interior_of(values);
                let coef = dst.apply(&interior);
                let n = dst.side();
                let p = self.space.per_dim();
                let scale = 2.0 * h * h;
                let mut out = Vec::with_capacity(p * p);
                for i in 0..p {
                    for j in 0..p {
                        out.push(coef[i * n + j] * scale);
                    }
                }
                out
            }
            Plan::Fem { refine } => {
                // exact integral of the piecewise-linear interpolant against
                // each tent, via the fine-grid mass matrix
                let m = *refine;
                let g = self.grid.intervals();
                let mf: Vec<f64> = (0..=g)
                    .map(|k| {
                        let mut s = 0.0;
                        if k > 0 {
                            s += h * (2.0 * values[k] + values[k - 1]) / 6.0;
                        }
                        if k < g {
                            s += h * (2.0 * values[k] + values[k + 1]) / 6.0;
                        }
                        s
                    })
                    .collect();
                (0..self.space.len())
                    .map(|a| {
                        let centre = (a + 1) * m;
                        (centre - m..=centre + m)
                            .map(|k| {
                                let t = 1.0 - (k as f64 - centre as f64).abs() / m as f64;
                                t * mf[k]
                            })
                            .sum()
                    })
                    .collect()
            }
        }
    }

    pub fn project(&self, f: &GridFunction) -> Result<MeasurementVector> {
        if f.grid() != self.grid {
            return Err(Error::invalid("grid function does not live on the projector grid"));
        }
        MeasurementVector::from_vec(self.space, self.project_values(f.values()))
    }

    /// Grid values of `Σ_a coeffs_a φ_a`.
    pub fn synthesize_values(&self, coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.space.len());
        match &self.plan {
            Plan::Line(dst) => {
                let mut padded = vec![0.0; dst.len()];
                padded[..coeffs.len()].copy_from_slice(coeffs);
                let interior: Vec<f64> = dst.apply(&padded).iter().map(|v| v * 2f64.sqrt()).collect();
                self.grid.from_interior(&interior)
            }
            Plan::Square(dst) => {
                let n = dst.side();
                let p = self.space.per_dim();
                let mut padded = vec![0.0; n * n];
                for i in 0..p {
                    for j in 0..p {
                        padded[i * n + j] = coeffs[i * p + j];
                    }
                }
                let interior: Vec<f64> = dst.apply(&padded).iter().map(|v| v * 2.0).collect();
                self.grid.from_interior(&interior)
            }
            Plan::Fem { refine } => {
                let m = *refine;
                let g = self.grid.intervals();
                (0..=g)
                    .map(|k| {
                        let node = k / m;
                        let frac = (k % m) as f64 / m as f64;
                        let nodal = |q: usize| if q == 0 || q > coeffs.len() { 0.0 } else { coeffs[q - 1] };
                        nodal(node) * (1.0 - frac) + if frac > 0.0 { nodal(node + 1) * frac } else { 0.0 }
                    })
                    .collect()
            }
        }
    }

    pub fn synthesize(&self, coeffs: &MeasurementVector) -> Result<GridFunction> {
        if coeffs.space() != self.space {
            return Err(Error::invalid("coefficients belong to a different test space"));
        }
        GridFunction::new(self.grid, self.synthesize_values(coeffs.as_slice()))
    }
}

/// `[f, φ]` for a grid function.
pub fn project(f: &GridFunction, space: TestSpace) -> Result<MeasurementVector> {
    Projector::new(space, f.grid())?.project(f)
}

/// `Σ_a coeffs_a φ_a` sampled on `grid`.
pub fn synthesize(coeffs: &MeasurementVector, grid: Grid) -> Result<GridFunction> {
    Projector::new(coeffs.space(), grid)?.synthesize(coeffs)
}
