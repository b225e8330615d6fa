//! Gauss-Newton iteration for
//! `min |P(u) − ξ|²_Φ + γ‖u‖²_K  s.t.  u(x_j) = g(x_j)`.
//!
//! Each step solves the linearized problem in the representer basis. Its
//! KKT system
//!
//! ```text
//! [ K_χᵀ A⁻¹ K_χ + γK   K_Xᵀ ] [c]   [K_χᵀ A⁻¹ y]
//! [ K_X                 0    ] [ν] = [g         ]
//! ```
//!
//! is equivalent to `(K + γ blkdiag(A, 0)) c = (y, g)` with `ν = −γ c_X`,
//! which avoids forming `K_χᵀ A⁻¹ K_χ` and squaring the condition number.
//! The reduced form is the default; the full system is kept as
//! [`KktRoute::Full`].

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_spaces::{Projector, TestSpace};
use crate::grid::{Grid, GridFunction};
use crate::kernels::{boundary_flux, CollocationSet, FeatureSet, GramBlocks, KernelGrid, KernelSpec};
use crate::operators::{OperatorFamily, OperatorSpec};
use crate::seminorm::SeminormContext;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KktRoute {
    #[default]
    Reduced,
    Full,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub gamma: f64,
    pub s: f64,
    pub space: TestSpace,
    pub boundary: Vec<[f64; 2]>,
    pub grid: Grid,
    pub kernel: KernelSpec,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub route: KktRoute,
}

impl SolverConfig {
    pub fn new(space: TestSpace, grid: Grid, boundary: Vec<[f64; 2]>) -> Self {
        SolverConfig {
            gamma: 1e-10,
            s: 1.0,
            space,
            boundary,
            grid,
            kernel: KernelSpec::default(),
            max_iterations: 20,
            tolerance: 1e-10,
            route: KktRoute::Reduced,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid(format!("γ must be positive, got {}", self.gamma)));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("at least one Gauss-Newton iteration is required"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("stopping tolerance must be nonnegative"));
        }
        self.kernel.validate()
    }
}

/// Endpoints of the unit interval.
pub fn interval_endpoints() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [1.0, 0.0]]
}

/// `per_side` equispaced points on each side of the unit square, corners
/// included once, `4 · per_side` in total.
pub fn square_boundary(per_side: usize) -> Vec<[f64; 2]> {
    let t = |k: usize| k as f64 / per_side as f64;
    let mut pts = Vec::with_capacity(4 * per_side);
    for k in 0..per_side {
        pts.push([t(k), 0.0]);
    }
    for k in 0..per_side {
        pts.push([1.0, t(k)]);
    }
    for k in 0..per_side {
        pts.push([1.0 - t(k), 1.0]);
    }
    for k in 0..per_side {
        pts.push([0.0, 1.0 - t(k)]);
    }
    pts
}

enum Factor {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factor {
    fn of(m: &DMatrix<f64>, symmetric: bool) -> Option<Self> {
        if symmetric {
            if let Some(c) = m.clone().cholesky() {
                return Some(Factor::Cholesky(c));
            }
        }
        let lu = m.clone().lu();
        lu.is_invertible().then_some(Factor::Lu(lu))
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Cholesky(c) => c.solve(b),
            Factor::Lu(lu) => lu.solve(b).expect("invertible"),
        }
    }
}

/// A factored KKT system for fixed Gram blocks, stiffness and `γ`; solves
/// for any right-hand side.
pub struct KktSolver {
    route: KktRoute,
    n: usize,
    m: usize,
    gamma: f64,
    matrix: DMatrix<f64>,
    factor: Factor,
    /// `K_χᵀ A⁻¹` for the full route.
    projection: Option<DMatrix<f64>>,
}

impl KktSolver {
    pub fn new(blocks: &GramBlocks, stiffness: &DMatrix<f64>, gamma: f64, route: KktRoute) -> Result<Self> {
        let n = blocks.n_test();
        let m = blocks.n_boundary();
        if stiffness.nrows() != n {
            return Err(Error::invalid(
                "stiffness size does not match the number of test functions",
            ));
        }
        let mut k = blocks.phi_phi().clone();
        let jitter = blocks.jitter();
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        let (matrix, projection, symmetric) = match route {
            KktRoute::Reduced => {
                let mut a = k;
                a.view_mut((0, 0), (n, n)).zip_apply(stiffness, |x, s| *x += gamma * s);
                (a, None, true)
            }
            KktRoute::Full => {
                let kchi = k.rows(0, n).into_owned();
                let chol = stiffness
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::invalid("stiffness matrix is not positive definite"))?;
                let ainv_kchi = chol.solve(&kchi);
                let proj = ainv_kchi.transpose();
                let mut top = &proj * &kchi;
                top += &k * gamma;
                let size = n + 2 * m;
                let mut a = DMatrix::zeros(size, size);
                a.view_mut((0, 0), (n + m, n + m)).copy_from(&top);
                let kx = k.rows(n, m);
                a.view_mut((n + m, 0), (m, n + m)).copy_from(&kx);
                a.view_mut((0, n + m), (n + m, m)).copy_from(&kx.transpose());
                (a, Some(proj), false)
            }
        };
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::DegenerateFeatures {
                block: "K(φ,φ)",
                detail: "non-finite Gram entries".into(),
            });
        }
        let factor = Factor::of(&matrix, symmetric).ok_or_else(|| degenerate(blocks))?;
        Ok(KktSolver {
            route,
            n,
            m,
            gamma,
            matrix,
            factor,
            projection,
        })
    }

    pub fn route(&self) -> KktRoute {
        self.route
    }

    /// Solves for the representer coefficients `c` and the multipliers `ν`
    /// given `y = [r_n, φ]` and boundary data `g`.
    pub fn solve(&self, y: &[f64], g: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        if y.len() != self.n || g.len() != self.m {
            return Err(Error::invalid(format!(
                "right-hand side has sizes ({}, {}), expected ({}, {})",
                y.len(),
                g.len(),
                self.n,
                self.m
            )));
        }
        let (n, m) = (self.n, self.m);
        let rhs = match &self.projection {
            None => DVector::from_iterator(n + m, y.iter().chain(g).copied()),
            Some(p) => {
                let top = p * DVector::from_column_slice(y);
                DVector::from_iterator(n + 2 * m, top.iter().chain(g).copied())
            }
        };
        let mut x = self.factor.solve(&rhs);
        let r = &rhs - &self.matrix * &x;
        x += self.factor.solve(&r);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::DegenerateFeatures {
                block: "K(φ,φ)",
                detail: "KKT solve produced non-finite coefficients".into(),
            });
        }
        Ok(match self.route {
            KktRoute::Reduced => {
                let nu = x.rows(n, m) * (-self.gamma);
                (x, nu)
            }
            KktRoute::Full => (x.rows(0, n + m).into_owned(), x.rows(n + m, m).into_owned()),
        })
    }

    /// Max-norm of the KKT residual for the full system at `(c, ν)`.
    pub fn kkt_residual(
        blocks: &GramBlocks,
        stiffness: &DMatrix<f64>,
        gamma: f64,
        y: &[f64],
        g: &[f64],
        c: &DVector<f64>,
        nu: &DVector<f64>,
    ) -> f64 {
        let n = blocks.n_test();
        let k = blocks.phi_phi();
        let kchi = k.rows(0, n);
        let kx = k.rows(n, blocks.n_boundary());
        let chol = stiffness.clone().cholesky().expect("positive definite stiffness");
        let misfit = &kchi * c - DVector::from_column_slice(y);
        let grad = kchi.transpose() * chol.solve(&misfit) + k * c * gamma + kx.transpose() * nu;
        let cons = &kx * c - DVector::from_column_slice(g);
        grad.amax().max(cons.amax())
    }
}

fn degenerate(blocks: &GramBlocks) -> Error {
    let n = blocks.n_test();
    let m = blocks.n_boundary();
    let kxx = blocks.phi_phi().view((n, n), (m, m)).into_owned();
    if m > 0 && kxx.cholesky().is_none() {
        Error::DegenerateFeatures {
            block: "K(X,X)",
            detail: "boundary kernel matrix is singular".into(),
        }
    } else {
        Error::DegenerateFeatures {
            block: "K(χ,φ)",
            detail: "operator features are linearly dependent".into(),
        }
    }
}

/// `u = Σ α_i K(·, χ_i) + Σ β_j K(·, x_j)`.
#[derive(Clone, Debug)]
pub struct Representer {
    coefficients: DVector<f64>,
    multipliers: DVector<f64>,
    features: FeatureSet,
    kernel: Arc<KernelGrid>,
}

impl Representer {
    pub fn new(
        coefficients: DVector<f64>,
        multipliers: DVector<f64>,
        features: FeatureSet,
        kernel: Arc<KernelGrid>,
    ) -> Result<Self> {
        if coefficients.len() != features.len() || multipliers.len() != features.n_boundary() {
            return Err(Error::invalid("representer coefficients do not match the features"));
        }
        Ok(Representer {
            coefficients,
            multipliers,
            features,
            kernel,
        })
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn alpha(&self) -> &[f64] {
        &self.coefficients.as_slice()[..self.features.n_test()]
    }

    pub fn beta(&self) -> &[f64] {
        &self.coefficients.as_slice()[self.features.n_test()..]
    }

    pub fn multipliers(&self) -> &DVector<f64> {
        &self.multipliers
    }

    pub fn features(&self) -> &FeatureSet {
        &self.features
    }

    pub fn kernel(&self) -> &KernelGrid {
        &self.kernel
    }

    /// Values on the quadrature grid.
    pub fn evaluate_grid(&self) -> GridFunction {
        let values = self.kernel.evaluate_grid(&self.features, self.alpha(), self.beta());
        GridFunction::new(self.features.grid(), values).expect("sized")
    }

    /// Values at arbitrary points of the closed domain.
    pub fn evaluate(&self, points: &[[f64; 2]]) -> Vec<f64> {
        let q = self.features.adjoint(self.alpha());
        let grid_pts = self.features.grid().points();
        let spec = self.kernel.spec();
        let support: Vec<([f64; 2], f64)> = grid_pts.into_iter().zip(q).filter(|(_, w)| *w != 0.0).collect();
        points
            .iter()
            .map(|&x| {
                let interior: f64 = support.iter().map(|&(p, w)| w * spec.eval(x, p)).sum();
                let boundary: f64 = self
                    .features
                    .boundary()
                    .iter()
                    .zip(self.beta())
                    .map(|(&p, b)| b * spec.eval(x, p))
                    .sum();
                interior + boundary
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub misfit: f64,
    pub regularization: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.misfit + self.regularization
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub losses: Vec<LossTerms>,
    pub iterations: usize,
    pub termination: Termination,
}

/// One linearized solve: returns the coefficients, multipliers and
/// the quadratic objective `|K_χ c − y|²_A⁻¹ + γ cᵀKc`.
pub fn gn_step(
    ctx: &SeminormContext,
    blocks: &GramBlocks,
    y: &[f64],
    g: &[f64],
    gamma: f64,
    route: KktRoute,
) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let solver = KktSolver::new(blocks, ctx.stiffness(), gamma, route)?;
    let (c, nu) = solver.solve(y, g)?;
    let loss = quadratic_loss(ctx, blocks, y, gamma, &c);
    Ok((c, nu, loss))
}

pub fn quadratic_loss(ctx: &SeminormContext, blocks: &GramBlocks, y: &[f64], gamma: f64, c: &DVector<f64>) -> f64 {
    let k = blocks.phi_phi();
    let misfit = k.rows(0, blocks.n_test()) * c - DVector::from_column_slice(y);
    ctx.whiten(&misfit).norm_squared() + gamma * c.dot(&(k * c))
}

/// Gauss-Newton from `u_0` (zero when `None`) on forcing measurements
/// `xi = [ξ, φ]` with boundary data `g` at the configured points.
pub fn solve(
    op: &OperatorSpec,
    xi: &[f64],
    g: &[f64],
    cfg: &SolverConfig,
    u_0: Option<&GridFunction>,
) -> Result<(Representer, SolveReport)> {
    cfg.validate()?;
    op.validate()?;
    if xi.len() != cfg.space.len() {
        return Err(Error::invalid(format!(
            "{} forcing measurements for {} test functions",
            xi.len(),
            cfg.space.len()
        )));
    }
    if g.len() != cfg.boundary.len() {
        return Err(Error::invalid("one boundary value per boundary point is required"));
    }
    let ctx = SeminormContext::new(cfg.space, cfg.s)?;
    let projector = Projector::new(cfg.space, cfg.grid)?;
    let kernel = Arc::new(KernelGrid::new(cfg.kernel, cfg.grid)?);
    let mut u = match u_0 {
        Some(u) if u.grid() != cfg.grid => {
            return Err(Error::invalid("initial guess must live on the quadrature grid"))
        }
        Some(u) => u.clone(),
        None => GridFunction::zeros(cfg.grid),
    };
    // the features drop the boundary term, so the data absorb it
    let flux = boundary_flux(cfg.space, op.diffusion(), &cfg.boundary, g)?;
    let xi: Vec<f64> = xi.iter().zip(&flux).map(|(x, f)| x - f).collect();
    let xi_vec = DVector::from_column_slice(&xi);
    let mut losses = Vec::new();
    let mut cached: Option<(FeatureSet, GramBlocks, KktSolver)> = None;
    let mut termination = Termination::MaxIterations;
    let mut rep = None;
    for it in 1..=cfg.max_iterations {
        let lin = op.linearize(&u);
        if cached.is_none() || !op.family.is_linear() {
            let fs = lin.features(&projector, cfg.boundary.clone())?;
            let blocks = kernel.assemble(&fs)?;
            let solver = KktSolver::new(&blocks, ctx.stiffness(), cfg.gamma, cfg.route)?;
            cached = Some((fs, blocks, solver));
        }
        let (fs, blocks, solver) = cached.as_ref().expect("assembled");
        let y = lin.rhs(&xi, &projector);
        let (c, nu) = solver.solve(&y, g)?;
        let next = Representer::new(c, nu, fs.clone(), kernel.clone())?;
        u = next.evaluate_grid();
        let residual = DVector::from_vec(op.measure(&u, &projector)?) - &xi_vec;
        let terms = LossTerms {
            misfit: ctx.whiten(&residual).norm_squared(),
            regularization: cfg.gamma * next.coefficients().dot(&(blocks.phi_phi() * next.coefficients())),
        };
        let total = terms.total();
        if !total.is_finite() {
            return Err(Error::Divergence {
                iteration: it,
                loss: total,
            });
        }
        rep = Some(next);
        let previous = losses.last().map(LossTerms::total);
        losses.push(terms);
        if let Some(prev) = previous {
            if (prev - total).abs() <= cfg.tolerance * prev.abs().max(f64::MIN_POSITIVE) {
                termination = Termination::Converged;
                break;
            }
        }
    }
    let report = SolveReport {
        iterations: losses.len(),
        losses,
        termination,
    };
    Ok((rep.expect("at least one iteration"), report))
}

/// Kernel solve of a linear 1D operator with pointwise residual features
/// and loss weight `A = I / h`, `h` the collocation spacing.
#[derive(Clone, Debug)]
pub struct PointwiseSolution {
    pub set: CollocationSet,
    pub kernel: KernelSpec,
    pub coefficients: DVector<f64>,
}

impl PointwiseSolution {
    pub fn evaluate(&self, xs: &[f64]) -> Vec<f64> {
        let n = self.set.n_test();
        let (a, b) = self.coefficients.as_slice().split_at(n);
        xs.iter().map(|&x| self.set.evaluate(&self.kernel, a, b, x)).collect()
    }
}

/// `values` are the forcing at the collocation points.
pub fn solve_pointwise(
    op: &OperatorSpec,
    values: &[f64],
    g: &[f64],
    kernel: KernelSpec,
    gamma: f64,
) -> Result<PointwiseSolution> {
    if !op.family.is_linear() || op.dt.is_some() {
        return Err(Error::invalid(
            "pointwise loss is implemented for stationary linear operators",
        ));
    }
    let n = values.len();
    let mass = if op.family == OperatorFamily::Poisson { 0.0 } else { 1.0 };
    let set = CollocationSet::uniform(n, mass, op.diffusion(), interval_endpoints())?;
    let blocks = set.assemble(&kernel);
    let stiffness = DMatrix::identity(n, n) * (n + 1) as f64;
    let solver = KktSolver::new(&blocks, &stiffness, gamma, KktRoute::Reduced)?;
    let (coefficients, _) = solver.solve(values, g)?;
    Ok(PointwiseSolution {
        set,
        kernel,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn elliptic_setup(n: usize) -> (OperatorSpec, SolverConfig) {
        let op = OperatorSpec::linear_elliptic(0.01).unwrap();
        let mut cfg = SolverConfig::new(
            TestSpace::sine_1d(n).unwrap(),
            Grid::line(256).unwrap(),
            interval_endpoints(),
        );
        cfg.gamma = 1e-8;
        (op, cfg)
    }

    #[test]
    fn single_mode_forcing_matches_closed_form() {
        let (op, cfg) = elliptic_setup(64);
        let mut xi = vec![0.0; 64];
        xi[0] = 1.0;
        let (rep, report) = solve(&op, &xi, &[0.0, 0.0], &cfg, None).unwrap();
        assert_eq!(report.iterations, 2);
        assert_eq!(report.termination, Termination::Converged);
        let u = rep.evaluate_grid();
        let exact = GridFunction::from_fn(cfg.grid, |[x, _]| 2f64.sqrt() * (PI * x).sin() / (0.01 * PI * PI + 1.0));
        let err = u.zip_with(&exact, |a, b| a - b).unwrap().l2_norm() / exact.l2_norm();
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn large_gamma_collapses_coefficients() {
        let (op, mut cfg) = elliptic_setup(8);
        cfg.gamma = 1e6;
        let xi: Vec<f64> = (0..8).map(|k| 1.0 / (k + 1) as f64).collect();
        let (rep, _) = solve(&op, &xi, &[0.0, 0.0], &cfg, None).unwrap();
        assert!(rep.coefficients().norm() < 1e-4);
    }

    #[test]
    fn routes_agree() {
        let (op, mut cfg) = elliptic_setup(6);
        cfg.gamma = 1e-4;
        let xi = [0.3, -0.2, 0.5, 0.1, 0.0, 0.7];
        let g = [0.2, -0.1];
        let (a, _) = solve(&op, &xi, &g, &cfg, None).unwrap();
        cfg.route = KktRoute::Full;
        let (b, _) = solve(&op, &xi, &g, &cfg, None).unwrap();
        let dc = (a.coefficients() - b.coefficients()).norm() / a.coefficients().norm();
        assert!(dc < 1e-6, "{dc}");
        let dn = (a.multipliers() - b.multipliers()).norm() / a.multipliers().norm();
        assert!(dn < 1e-6, "{dn}");
    }

    #[test]
    fn boundary_values_are_reproduced() {
        let (op, cfg) = elliptic_setup(16);
        let xi: Vec<f64> = (0..16).map(|k| (k as f64).cos()).collect();
        let g = [0.25, -0.5];
        let (rep, _) = solve(&op, &xi, &g, &cfg, None).unwrap();
        let at = rep.evaluate(&cfg.boundary);
        for (u, g) in at.iter().zip(g) {
            assert!((u - g).abs() <= 1e-8 * (1.0 + g.abs()), "{u} vs {g}");
        }
    }

    #[test]
    fn zero_coefficients_give_zero_function() {
        let (_, cfg) = elliptic_setup(4);
        let fs = FeatureSet::constant(cfg.space, cfg.grid, 1.0, 0.01, cfg.boundary.clone()).unwrap();
        let kernel = Arc::new(KernelGrid::new(cfg.kernel, cfg.grid).unwrap());
        let rep = Representer::new(DVector::zeros(6), DVector::zeros(2), fs, kernel).unwrap();
        assert!(rep.evaluate_grid().values().iter().all(|&v| v == 0.0));
        assert_eq!(rep.evaluate(&[[0.3, 0.0]]), vec![0.0]);
    }

    #[test]
    fn repeated_boundary_points_are_rejected() {
        let (op, mut cfg) = elliptic_setup(4);
        cfg.boundary = vec![[0.0, 0.0], [0.0, 0.0]];
        let err = solve(&op, &[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0], &cfg, None).unwrap_err();
        assert!(matches!(err, Error::DegenerateFeatures { block: "K(X,X)", .. }));
    }

    #[test]
    fn square_boundary_layout() {
        let pts = square_boundary(4);
        assert_eq!(pts.len(), 16);
        for (a, p) in pts.iter().enumerate() {
            for q in &pts[..a] {
                assert!(p != q);
            }
        }
    }
}
