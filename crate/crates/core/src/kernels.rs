//! Matérn-5/2 kernel and the Gram blocks over operator-applied test-function
//! features `K(·, χ_i)` and boundary point features `K(·, x_j)`.
//!
//! Features are realized through weak forms on a quadrature grid. Every
//! operator has the shape `−ν_diff Δ + c(x)` and every test function
//! vanishes on the boundary, so the Laplacian is moved onto the test
//! function: through `−Δφ_i = λ_i φ_i` for sine bases, and by one
//! integration by parts for tent functions. The sine route drops the term
//! `ν_diff ∮ v ∂_n φ_i`, which depends only on boundary values and is
//! returned by [`boundary_flux`] for the solver to fold into the data.
//! A feature is then a weighted sum of point evaluations,
//! `χ_i(v) = Σ_g B_ig v(x_g)`, and the feature Gram is `B K_grid Bᵀ` with
//! `K_grid` applied by FFT convolution.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::ToeplitzConv;
use crate::function_spaces::{Projector, SpaceKind, TestSpace};
use crate::grid::{Grid, GridFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    #[default]
    Matern52,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(default)]
    pub family: KernelFamily,
    pub length_scale: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            family: KernelFamily::Matern52,
            length_scale: 0.2,
        }
    }
}

impl KernelSpec {
    pub fn matern52(length_scale: f64) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::Matern52,
            length_scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale > 0.0) || !self.length_scale.is_finite() {
            return Err(Error::invalid(format!(
                "kernel length scale must be positive, got {}",
                self.length_scale
            )));
        }
        Ok(())
    }

    fn rate(&self) -> f64 {
        5f64.sqrt() / self.length_scale
    }

    /// Kernel as a function of the distance `r ≥ 0`.
    pub fn radial(&self, r: f64) -> f64 {
        let ar = self.rate() * r;
        (1.0 + ar + ar * ar / 3.0) * (-ar).exp()
    }

    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        self.radial(distance(x, y))
    }

    /// Gradient of `K(x, y)` in `x`.
    pub fn eval_dx(&self, x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
        let a = self.rate();
        let r = distance(x, y);
        // K'(r) / r
        let scale = -(a * a / 3.0) * (1.0 + a * r) * (-a * r).exp();
        [scale * (x[0] - y[0]), scale * (x[1] - y[1])]
    }

    /// Derivatives `[f, f', f'', f''', f'''']` of the 1D profile
    /// `f(d) = K(x, x − d)` at the signed offset `d`.
    pub fn profile_derivatives(&self, d: f64) -> [f64; 5] {
        let a = self.rate();
        let r = d.abs();
        let sign = if d < 0.0 { -1.0 } else { 1.0 };
        let ar = a * r;
        let e = (-ar).exp();
        let a2 = a * a;
        let a4 = a2 * a2;
        [
            (1.0 + ar + ar * ar / 3.0) * e,
            sign * (-a2 * r * (ar + 1.0) / 3.0) * e,
            a2 * (ar * ar - ar - 1.0) / 3.0 * e,
            sign * (-a4 * r * (ar - 3.0) / 3.0) * e,
            a4 * (ar * ar - 5.0 * ar + 3.0) / 3.0 * e,
        ]
    }

    /// Dense kernel matrix over a point set.
    pub fn matrix(&self, xs: &[[f64; 2]], ys: &[[f64; 2]]) -> DMatrix<f64> {
        DMatrix::from_fn(xs.len(), ys.len(), |i, j| self.eval(xs[i], ys[j]))
    }
}

fn distance(x: [f64; 2], y: [f64; 2]) -> f64 {
    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()
}

/// Linear features `χ_i(v) = ∫ (−ν_diff Δv + c v) φ_i` over a test space,
/// plus point evaluations at boundary nodes.
#[derive(Clone, Debug)]
pub struct FeatureSet {
    projector: Projector,
    coefficient: GridFunction,
    diffusion: f64,
    boundary: Vec<[f64; 2]>,
    constant_coefficient: Option<f64>,
}

impl FeatureSet {
    pub fn new(space: TestSpace, coefficient: GridFunction, diffusion: f64, boundary: Vec<[f64; 2]>) -> Result<Self> {
        let grid = coefficient.grid();
        let projector = Projector::new(space, grid)?;
        if !(diffusion >= 0.0) || !diffusion.is_finite() {
            return Err(Error::invalid(format!(
                "diffusion must be nonnegative, got {diffusion}"
            )));
        }
        if coefficient.values().iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("operator coefficient is not finite on the grid"));
        }
        check_boundary_points(&boundary, space.dim())?;
        let first = coefficient.values()[0];
        let constant_coefficient = coefficient.values().iter().all(|&c| c == first).then_some(first);
        Ok(FeatureSet {
            projector,
            coefficient,
            diffusion,
            boundary,
            constant_coefficient,
        })
    }

    /// Features with a spatially constant zeroth-order coefficient.
    pub fn constant(
        space: TestSpace,
        grid: Grid,
        coefficient: f64,
        diffusion: f64,
        boundary: Vec<[f64; 2]>,
    ) -> Result<Self> {
        Self::new(
            space,
            GridFunction::new(grid, vec![coefficient; grid.len()])?,
            diffusion,
            boundary,
        )
    }

    pub fn space(&self) -> TestSpace {
        self.projector.space()
    }

    pub fn grid(&self) -> Grid {
        self.projector.grid()
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn coefficient(&self) -> &GridFunction {
        &self.coefficient
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn boundary(&self) -> &[[f64; 2]] {
        &self.boundary
    }

    pub fn n_test(&self) -> usize {
        self.space().len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn len(&self) -> usize {
        self.n_test() + self.n_boundary()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(χ_1(v), …, χ_N(v))` for grid values `v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let space = self.space();
        let fem = space.kind() == SpaceKind::Fem1d;
        let plain = (self.constant_coefficient.is_some() || (!fem && self.diffusion != 0.0))
            .then(|| self.projector.project_values(v));
        let mut out = match (self.constant_coefficient, &plain) {
            (Some(c), Some(p)) => p.iter().map(|x| c * x).collect(),
            _ => {
                let weighted: Vec<f64> = v.iter().zip(self.coefficient.values()).map(|(a, b)| a * b).collect();
                self.projector.project_values(&weighted)
            }
        };
        if self.diffusion != 0.0 {
            if fem {
                let m = self.grid().intervals() / (space.len() + 1);
                let h = space.fem_spacing().unwrap();
                for (a, o) in out.iter_mut().enumerate() {
                    let k = (a + 1) * m;
                    *o += self.diffusion * (2.0 * v[k] - v[k - m] - v[k + m]) / h;
                }
            } else if let Some(p) = &plain {
                for (a, o) in out.iter_mut().enumerate() {
                    *o += self.diffusion * space.eigenvalue(a).unwrap() * p[a];
                }
            }
        }
        out
    }

    /// Grid vector `Bᵀ α`, so that `Σ_i α_i χ_i(v) = Σ_g (Bᵀα)_g v_g`.
    pub fn adjoint(&self, alpha: &[f64]) -> Vec<f64> {
        let space = self.space();
        let grid = self.grid();
        let h = grid.spacing();
        let weights = grid.trapezoid_weights();
        let c = self.coefficient.values();
        match space.kind() {
            SpaceKind::Fem1d => {
                let synth = self.projector.synthesize_values(alpha);
                let mut q = fine_mass(&synth, h);
                q.iter_mut().zip(c).for_each(|(q, c)| *q *= c);
                if self.diffusion != 0.0 {
                    let m = grid.intervals() / (space.len() + 1);
                    let hf = space.fem_spacing().unwrap();
                    for (a, &al) in alpha.iter().enumerate() {
                        let k = (a + 1) * m;
                        let s = self.diffusion * al / hf;
                        q[k] += 2.0 * s;
                        q[k - m] -= s;
                        q[k + m] -= s;
                    }
                }
                q
            }
            _ => {
                let plain = self.projector.synthesize_values(alpha);
                let mut q: Vec<f64> = plain.iter().zip(c).map(|(p, c)| p * c).collect();
                if self.diffusion != 0.0 {
                    let scaled: Vec<f64> = alpha
                        .iter()
                        .enumerate()
                        .map(|(a, al)| al * space.eigenvalue(a).unwrap())
                        .collect();
                    let diff = self.projector.synthesize_values(&scaled);
                    q.iter_mut().zip(diff).for_each(|(q, d)| *q += self.diffusion * d);
                }
                q.iter_mut().zip(weights).for_each(|(q, w)| *q *= w);
                q
            }
        }
    }

    /// Column `Bᵀ e_a` computed directly from sampled basis values.
    fn adjoint_unit(&self, a: usize, tables: &SineTables) -> Vec<f64> {
        let space = self.space();
        match space.kind() {
            SpaceKind::Fem1d => {
                let mut e = vec![0.0; space.len()];
                e[a] = 1.0;
                self.adjoint(&e)
            }
            _ => {
                let grid = self.grid();
                let lam = space.eigenvalue(a).unwrap();
                let (i, j) = space.mode(a);
                let c = self.coefficient.values();
                let h = grid.spacing();
                let p = grid.points_per_dim();
                let mut q = vec![0.0; grid.len()];
                match grid.dim() {
                    1 => {
                        for k in 1..p - 1 {
                            q[k] = h * (self.diffusion * lam + c[k]) * tables.value(i, k);
                        }
                    }
                    _ => {
                        for r in 1..p - 1 {
                            let si = tables.value(i, r);
                            for s in 1..p - 1 {
                                let k = r * p + s;
                                q[k] = h * h * (self.diffusion * lam + c[k]) * si * tables.value(j, s);
                            }
                        }
                    }
                }
                q
            }
        }
    }
}

/// The boundary term left over when the Laplacian is moved onto a sine test
/// function, `ν_diff ∮ v ∂_n φ_i`, for `v = g` at the boundary points. The
/// sine features measure `[P(u), φ_i]` minus this term. Exact in 1D; in 2D
/// the perimeter integral is a trapezoid rule through the points. Tent
/// features need no correction.
pub fn boundary_flux(space: TestSpace, diffusion: f64, points: &[[f64; 2]], g: &[f64]) -> Result<Vec<f64>> {
    if points.len() != g.len() {
        return Err(Error::invalid("one boundary value per boundary point is required"));
    }
    check_boundary_points(points, space.dim())?;
    let mut out = vec![0.0; space.len()];
    if space.kind() == SpaceKind::Fem1d || diffusion == 0.0 || g.iter().all(|&v| v == 0.0) {
        return Ok(out);
    }
    let weights = match space.dim() {
        1 => vec![1.0; points.len()],
        _ => perimeter_weights(points)?,
    };
    let pi = std::f64::consts::PI;
    for (a, o) in out.iter_mut().enumerate() {
        let (i, j) = space.mode(a);
        let (ki, kj) = (pi * i as f64, pi * j as f64);
        for ((p, &v), w) in points.iter().zip(g).zip(&weights) {
            let [x, y] = *p;
            let dn = match space.dim() {
                1 => {
                    let d = 2f64.sqrt() * ki * (ki * x).cos();
                    if x == 0.0 {
                        -d
                    } else {
                        d
                    }
                }
                _ => {
                    if y == 0.0 || y == 1.0 {
                        let d = 2.0 * kj * (kj * y).cos() * (ki * x).sin();
                        if y == 0.0 {
                            -d
                        } else {
                            d
                        }
                    } else {
                        let d = 2.0 * ki * (ki * x).cos() * (kj * y).sin();
                        if x == 0.0 {
                            -d
                        } else {
                            d
                        }
                    }
                }
            };
            *o += diffusion * w * dn * v;
        }
    }
    Ok(out)
}

/// Trapezoid weights along the perimeter of the unit square.
fn perimeter_weights(points: &[[f64; 2]]) -> Result<Vec<f64>> {
    if points.len() < 3 {
        return Err(Error::invalid(
            "a boundary integral over the square needs at least three points",
        ));
    }
    let arc = |[x, y]: [f64; 2]| {
        if y == 0.0 {
            x
        } else if x == 1.0 {
            1.0 + y
        } else if y == 1.0 {
            3.0 - x
        } else {
            4.0 - y
        }
    };
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| arc(points[a]).total_cmp(&arc(points[b])));
    let n = order.len();
    let mut w = vec![0.0; n];
    for k in 0..n {
        let prev = arc(points[order[(k + n - 1) % n]]);
        let next = arc(points[order[(k + 1) % n]]);
        w[order[k]] = 0.5 * (next - prev).rem_euclid(4.0);
    }
    Ok(w)
}

/// Fine-grid piecewise-linear mass matrix applied to grid values.
fn fine_mass(v: &[f64], h: f64) -> Vec<f64> {
    let g = v.len() - 1;
    (0..=g)
        .map(|k| {
            let mut s = 0.0;
            if k > 0 {
                s += h * (2.0 * v[k] + v[k - 1]) / 6.0;
            }
            if k < g {
                s += h * (2.0 * v[k] + v[k + 1]) / 6.0;
            }
            s
        })
        .collect()
}

fn check_boundary_points(points: &[[f64; 2]], dim: usize) -> Result<()> {
    for (a, p) in points.iter().enumerate() {
        let on_boundary = match dim {
            1 => p[0] == 0.0 || p[0] == 1.0,
            _ => {
                let inside = (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]);
                inside && (p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0)
            }
        };
        if !on_boundary {
            return Err(Error::invalid(format!(
                "collocation point {p:?} is not on the boundary"
            )));
        }
        for q in &points[..a] {
            if distance(*p, *q) < 1e-14 {
                return Err(Error::DegenerateFeatures {
                    block: "K(X,X)",
                    detail: format!("boundary point {p:?} is repeated"),
                });
            }
        }
    }
    Ok(())
}

/// Sampled `√2 sin(π i x_k)` (1D) or `√2 sin` factors for the 2D product.
struct SineTables {
    rows: Vec<Vec<f64>>,
}

impl SineTables {
    fn new(space: TestSpace, grid: Grid) -> Self {
        let modes = match space.kind() {
            SpaceKind::Fem1d => 0,
            _ => space.per_dim(),
        };
        let p = grid.points_per_dim();
        let h = grid.spacing();
        let rows = (1..=modes)
            .map(|i| {
                (0..p)
                    .map(|k| 2f64.sqrt() * (std::f64::consts::PI * (i * k) as f64 * h).sin())
                    .collect()
            })
            .collect();
        SineTables { rows }
    }

    fn value(&self, mode: usize, k: usize) -> f64 {
        self.rows[mode - 1][k]
    }
}

/// The Gram matrix over all `N + M` features, `N` operator features first.
#[derive(Clone, Debug)]
pub struct GramBlocks {
    n_test: usize,
    full: DMatrix<f64>,
}

impl GramBlocks {
    pub fn from_full(n_test: usize, full: DMatrix<f64>) -> Self {
        GramBlocks { n_test, full }
    }

    pub fn n_test(&self) -> usize {
        self.n_test
    }

    pub fn n_boundary(&self) -> usize {
        self.full.nrows() - self.n_test
    }

    /// `K(φ, φ)`, `(N+M) x (N+M)`.
    pub fn phi_phi(&self) -> &DMatrix<f64> {
        &self.full
    }

    /// `K(χ, φ)`, the first `N` rows.
    pub fn chi_phi(&self) -> DMatrix<f64> {
        self.full.rows(0, self.n_test).into_owned()
    }

    /// `K(X, φ)`, the last `M` rows.
    pub fn x_phi(&self) -> DMatrix<f64> {
        self.full.rows(self.n_test, self.n_boundary()).into_owned()
    }

    /// Diagonal jitter `1e-10 · trace / (N + M)` used before factorization.
    pub fn jitter(&self) -> f64 {
        1e-10 * self.full.trace() / self.full.nrows() as f64
    }
}

/// Stationary kernel on a fixed quadrature grid; reusable across feature
/// sets that share the grid.
#[derive(Clone, Debug)]
pub struct KernelGrid {
    spec: KernelSpec,
    grid: Grid,
    conv: ToeplitzConv,
}

impl KernelGrid {
    pub fn new(spec: KernelSpec, grid: Grid) -> Result<Self> {
        spec.validate()?;
        let conv = ToeplitzConv::new(grid.dim(), grid.points_per_dim(), grid.spacing(), |dx, dy| {
            spec.radial((dx * dx + dy * dy).sqrt())
        });
        Ok(KernelGrid { spec, grid, conv })
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `K_grid v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.conv.apply(v)
    }

    pub fn apply_pair(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.conv.apply_pair(a, b)
    }

    /// Kernel columns `K(x_g, x_j)` over the grid for each point.
    pub fn point_columns(&self, points: &[[f64; 2]]) -> Vec<Vec<f64>> {
        let pts = self.grid.points();
        points
            .iter()
            .map(|&x| pts.iter().map(|&g| self.spec.eval(g, x)).collect())
            .collect()
    }

    /// Assembles `K(φ, φ)` for a feature set living on this grid.
    pub fn assemble(&self, fs: &FeatureSet) -> Result<GramBlocks> {
        if fs.grid() != self.grid {
            return Err(Error::invalid("feature set and kernel use different quadrature grids"));
        }
        let n = fs.n_test();
        let m = fs.n_boundary();
        let tables = SineTables::new(fs.space(), self.grid);
        let pairs: Vec<(usize, Option<usize>)> = (0..n).step_by(2).map(|a| (a, (a + 1 < n).then_some(a + 1))).collect();
        let columns: Vec<(usize, Vec<f64>)> = pairs
            .par_iter()
            .flat_map_iter(|&(a, b)| {
                let qa = fs.adjoint_unit(a, &tables);
                match b {
                    Some(b) => {
                        let qb = fs.adjoint_unit(b, &tables);
                        let (ka, kb) = self.apply_pair(&qa, &qb);
                        vec![(a, fs.apply(&ka)), (b, fs.apply(&kb))]
                    }
                    None => vec![(a, fs.apply(&self.apply(&qa)))],
                }
            })
            .collect();
        let mut full = DMatrix::zeros(n + m, n + m);
        for (a, col) in columns {
            for (i, v) in col.into_iter().enumerate() {
                full[(i, a)] = v;
            }
        }
        // symmetrize the quadrature block
        for a in 0..n {
            for b in 0..a {
                let s = 0.5 * (full[(a, b)] + full[(b, a)]);
                full[(a, b)] = s;
                full[(b, a)] = s;
            }
        }
        let cols = self.point_columns(fs.boundary());
        let cross: Vec<Vec<f64>> = cols.par_iter().map(|c| fs.apply(c)).collect();
        for (j, col) in cross.into_iter().enumerate() {
            for (i, v) in col.into_iter().enumerate() {
                full[(i, n + j)] = v;
                full[(n + j, i)] = v;
            }
        }
        for (i, &xi) in fs.boundary().iter().enumerate() {
            for (j, &xj) in fs.boundary().iter().enumerate() {
                full[(n + i, n + j)] = self.spec.eval(xi, xj);
            }
        }
        Ok(GramBlocks::from_full(n, full))
    }

    /// Grid values of `Σ_i α_i K(·, χ_i) + Σ_j β_j K(·, x_j)`.
    pub fn evaluate_grid(&self, fs: &FeatureSet, alpha: &[f64], beta: &[f64]) -> Vec<f64> {
        let q = fs.adjoint(alpha);
        let mut u = self.apply(&q);
        for (col, &b) in self.point_columns(fs.boundary()).iter().zip(beta) {
            u.iter_mut().zip(col).for_each(|(u, k)| *u += b * k);
        }
        u
    }
}

/// Assembles the Gram blocks of a feature set on its own grid.
pub fn assemble_features(spec: &KernelSpec, fs: &FeatureSet) -> Result<GramBlocks> {
    KernelGrid::new(*spec, fs.grid())?.assemble(fs)
}

/// Pointwise collocation features `χ_k(v) = (−ν_diff v'' + c_k v)(x_k)` on the
/// interval, the measurement model of a pointwise residual loss.
#[derive(Clone, Debug)]
pub struct CollocationSet {
    points: Vec<f64>,
    coefficient: Vec<f64>,
    diffusion: f64,
    boundary: Vec<[f64; 2]>,
}

impl CollocationSet {
    pub fn new(points: Vec<f64>, coefficient: Vec<f64>, diffusion: f64, boundary: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("collocation needs at least one point"));
        }
        if coefficient.len() != points.len() {
            return Err(Error::invalid(
                "one coefficient value per collocation point is required",
            ));
        }
        if points.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::invalid("collocation points must be interior"));
        }
        check_boundary_points(&boundary, 1)?;
        Ok(CollocationSet {
            points,
            coefficient,
            diffusion,
            boundary,
        })
    }

    /// `n` equispaced interior points `k / (n + 1)`.
    pub fn uniform(n: usize, coefficient: f64, diffusion: f64, boundary: Vec<[f64; 2]>) -> Result<Self> {
        let points = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
        Self::new(points, vec![coefficient; n], diffusion, boundary)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn boundary(&self) -> &[[f64; 2]] {
        &self.boundary
    }

    pub fn n_test(&self) -> usize {
        self.points.len()
    }

    pub fn len(&self) -> usize {
        self.points.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn assemble(&self, spec: &KernelSpec) -> GramBlocks {
        let n = self.points.len();
        let m = self.boundary.len();
        let nu = self.diffusion;
        let mut full = DMatrix::zeros(n + m, n + m);
        for a in 0..n {
            for b in 0..=a {
                let f = spec.profile_derivatives(self.points[a] - self.points[b]);
                let (ca, cb) = (self.coefficient[a], self.coefficient[b]);
                let v = nu * nu * f[4] - nu * (ca + cb) * f[2] + ca * cb * f[0];
                full[(a, b)] = v;
                full[(b, a)] = v;
            }
            for (j, xj) in self.boundary.iter().enumerate() {
                let f = spec.profile_derivatives(self.points[a] - xj[0]);
                let v = -nu * f[2] + self.coefficient[a] * f[0];
                full[(a, n + j)] = v;
                full[(n + j, a)] = v;
            }
        }
        for (i, xi) in self.boundary.iter().enumerate() {
            for (j, xj) in self.boundary.iter().enumerate() {
                full[(n + i, n + j)] = spec.eval(*xi, *xj);
            }
        }
        GramBlocks::from_full(n, full)
    }

    /// `Σ_k α_k K(x, χ_k) + Σ_j β_j K(x, x_j)` at `x`.
    pub fn evaluate(&self, spec: &KernelSpec, alpha: &[f64], beta: &[f64], x: f64) -> f64 {
        let mut u = 0.0;
        for ((&p, &c), &a) in self.points.iter().zip(&self.coefficient).zip(alpha) {
            let f = spec.profile_derivatives(x - p);
            u += a * (-self.diffusion * f[2] + c * f[0]);
        }
        for (b, xb) in beta.iter().zip(&self.boundary) {
            u += b * spec.radial((x - xb[0]).abs());
        }
        u
    }
}
