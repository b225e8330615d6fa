//! Differential operators `P`, their linearizations, and grid evaluation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{Dst1, Dst2};
use crate::function_spaces::Projector;
use crate::grid::{Grid, GridFunction};
use crate::kernels::FeatureSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorFamily {
    /// `−νΔu + u`
    LinearElliptic,
    /// `−νΔu + u + sin(πu)`
    SemilinearSine,
    /// `−νΔu`
    Poisson,
    /// `u − δt νΔu`
    BackwardEulerHeat,
    /// `u − δt νΔu`; the Allen-Cahn drift is explicit and lives in the
    /// right-hand side.
    BackwardEulerAllenCahn,
}

impl OperatorFamily {
    pub fn name(self) -> &'static str {
        match self {
            OperatorFamily::LinearElliptic => "linear_elliptic",
            OperatorFamily::SemilinearSine => "semilinear_sine",
            OperatorFamily::Poisson => "poisson",
            OperatorFamily::BackwardEulerHeat => "backward_euler_heat",
            OperatorFamily::BackwardEulerAllenCahn => "backward_euler_allen_cahn",
        }
    }

    pub fn is_linear(self) -> bool {
        self != OperatorFamily::SemilinearSine
    }

    fn is_euler(self) -> bool {
        matches!(
            self,
            OperatorFamily::BackwardEulerHeat | OperatorFamily::BackwardEulerAllenCahn
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub family: OperatorFamily,
    pub nu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl OperatorSpec {
    pub fn new(family: OperatorFamily, nu: f64, dt: Option<f64>) -> Result<Self> {
        let op = OperatorSpec { family, nu, dt };
        op.validate()?;
        Ok(op)
    }

    pub fn linear_elliptic(nu: f64) -> Result<Self> {
        Self::new(OperatorFamily::LinearElliptic, nu, None)
    }

    pub fn semilinear_sine(nu: f64) -> Result<Self> {
        Self::new(OperatorFamily::SemilinearSine, nu, None)
    }

    pub fn poisson(nu: f64) -> Result<Self> {
        Self::new(OperatorFamily::Poisson, nu, None)
    }

    pub fn backward_euler_heat(nu: f64, dt: f64) -> Result<Self> {
        Self::new(OperatorFamily::BackwardEulerHeat, nu, Some(dt))
    }

    pub fn backward_euler_allen_cahn(nu: f64, dt: f64) -> Result<Self> {
        Self::new(OperatorFamily::BackwardEulerAllenCahn, nu, Some(dt))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::invalid(format!("ν must be positive, got {}", self.nu)));
        }
        match (self.family.is_euler(), self.dt) {
            (true, Some(dt)) if dt > 0.0 && dt.is_finite() => Ok(()),
            (true, _) => Err(Error::invalid("backward Euler operators need a positive δt")),
            (false, None) => Ok(()),
            (false, Some(_)) => Err(Error::invalid(format!("{} takes no time step", self.family.name()))),
        }
    }

    /// Coefficient of `−Δ` in the operator.
    pub fn diffusion(&self) -> f64 {
        match self.dt {
            Some(dt) => dt * self.nu,
            None => self.nu,
        }
    }

    /// Zeroth-order coefficient of the linear part.
    fn mass(&self) -> f64 {
        match self.family {
            OperatorFamily::Poisson => 0.0,
            _ => 1.0,
        }
    }

    /// `P(u)` on the grid, with the Laplacian applied spectrally.
    pub fn apply(&self, u: &GridFunction) -> GridFunction {
        let lap = laplacian(u);
        let d = self.diffusion();
        let m = self.mass();
        let semi = self.family == OperatorFamily::SemilinearSine;
        let values = u
            .values()
            .iter()
            .zip(lap.values())
            .map(|(&u, &l)| {
                let mut p = -d * l + m * u;
                if semi {
                    p += (PI * u).sin();
                }
                p
            })
            .collect();
        GridFunction::new(u.grid(), values).expect("same grid")
    }

    /// `[P(u), φ]` in the weak form used by the features.
    pub fn measure(&self, u: &GridFunction, projector: &Projector) -> Result<Vec<f64>> {
        let fs = FeatureSet::constant(projector.space(), u.grid(), self.mass(), self.diffusion(), Vec::new())?;
        let mut out = fs.apply(u.values());
        if self.family == OperatorFamily::SemilinearSine {
            let s: Vec<f64> = u.values().iter().map(|&v| (PI * v).sin()).collect();
            let p = projector.project_values(&s);
            out.iter_mut().zip(p).for_each(|(o, p)| *o += p);
        }
        Ok(out)
    }

    /// Linearization of `P` around `u_n`.
    pub fn linearize(&self, u_n: &GridFunction) -> Linearization {
        let grid = u_n.grid();
        let (coefficient, shift) = match self.family {
            OperatorFamily::SemilinearSine => {
                let c = u_n.map(|u| 1.0 + PI * (PI * u).cos());
                let r = u_n.map(|u| PI * (PI * u).cos() * u - (PI * u).sin());
                (c, Some(r))
            }
            _ => (
                GridFunction::new(grid, vec![self.mass(); grid.len()]).expect("sized"),
                None,
            ),
        };
        Linearization {
            coefficient,
            diffusion: self.diffusion(),
            shift,
        }
    }
}

/// `P′(u_n) v = −ν_diff Δv + c v` with the affine shift
/// `r_n − ξ = P′(u_n)u_n − P(u_n)`.
#[derive(Clone, Debug)]
pub struct Linearization {
    pub coefficient: GridFunction,
    pub diffusion: f64,
    /// `None` for linear operators, where `r_n = ξ`.
    pub shift: Option<GridFunction>,
}

impl Linearization {
    pub fn grid(&self) -> Grid {
        self.coefficient.grid()
    }

    /// `[r_n, φ]` from the forcing measurements.
    pub fn rhs(&self, xi: &[f64], projector: &Projector) -> Vec<f64> {
        match &self.shift {
            None => xi.to_vec(),
            Some(r) => xi
                .iter()
                .zip(projector.project_values(r.values()))
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Features of `P′(u_n)` with the given boundary points.
    pub fn features(&self, projector: &Projector, boundary: Vec<[f64; 2]>) -> Result<FeatureSet> {
        FeatureSet::new(projector.space(), self.coefficient.clone(), self.diffusion, boundary)
    }
}

/// Spectral Laplacian of a grid function whose boundary values are zero
/// (boundary values are ignored).
pub fn laplacian(u: &GridFunction) -> GridFunction {
    let grid = u.grid();
    let n = grid.interior_per_dim();
    let g = grid.intervals() as f64;
    let interior = grid.interior_of(u.values());
    let out = match grid.dim() {
        1 => {
            let dst = Dst1::new(n);
            let mut b = dst.apply(&interior);
            for (j, b) in b.iter_mut().enumerate() {
                let k = PI * (j + 1) as f64;
                *b *= -k * k * 2.0 / g;
            }
            dst.apply(&b)
        }
        _ => {
            let dst = Dst2::new(n);
            let mut b = dst.apply(&interior);
            for i in 0..n {
                for j in 0..n {
                    let k2 = PI * PI * (((i + 1) * (i + 1) + (j + 1) * (j + 1)) as f64);
                    b[i * n + j] *= -k2 * 4.0 / (g * g);
                }
            }
            dst.apply(&b)
        }
    };
    GridFunction::new(grid, grid.from_interior(&out)).expect("sized")
}
