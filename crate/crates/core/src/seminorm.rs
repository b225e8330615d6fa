//! The discretized negative Sobolev seminorm
//! `|f|_Φ = sqrt([f, φ]ᵀ A⁻¹ [f, φ])`, with `A` the `H^s` stiffness matrix of
//! the test space.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::function_spaces::{MeasurementVector, TestSpace};

#[derive(Clone, Debug)]
enum Factor {
    /// Square roots of a diagonal stiffness.
    Diagonal(DVector<f64>),
    /// Lower Cholesky factor.
    Dense(DMatrix<f64>),
}

/// Stiffness matrix of a test space at exponent `s`, with its factorization
/// `A = L Lᵀ` cached.
#[derive(Clone, Debug)]
pub struct SeminormContext {
    space: TestSpace,
    s: f64,
    stiffness: DMatrix<f64>,
    factor: Factor,
}

impl SeminormContext {
    pub fn new(space: TestSpace, s: f64) -> Result<Self> {
        let stiffness = space.stiffness_matrix(s)?;
        let factor = if space.is_orthonormal() {
            Factor::Diagonal(stiffness.diagonal().map(f64::sqrt))
        } else {
            let chol = stiffness
                .clone()
                .cholesky()
                .ok_or_else(|| Error::invalid("stiffness matrix is not positive definite"))?;
            Factor::Dense(chol.l())
        };
        Ok(SeminormContext {
            space,
            s,
            stiffness,
            factor,
        })
    }

    pub fn space(&self) -> TestSpace {
        self.space
    }

    pub fn exponent(&self) -> f64 {
        self.s
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// The lower-triangular factor `L`.
    pub fn factor(&self) -> DMatrix<f64> {
        match &self.factor {
            Factor::Diagonal(d) => DMatrix::from_diagonal(d),
            Factor::Dense(l) => l.clone(),
        }
    }

    fn check(&self, m: &MeasurementVector) -> Result<()> {
        if m.space() != self.space {
            return Err(Error::invalid(format!(
                "measurement from a {} space of size {} used with a {} space of size {}",
                m.space().kind().name(),
                m.len(),
                self.space.kind().name(),
                self.space.len()
            )));
        }
        Ok(())
    }

    /// `L⁻¹ v`.
    pub fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            Factor::Diagonal(d) => v.component_div(d),
            Factor::Dense(l) => l
                .solve_lower_triangular(v)
                .expect("Cholesky factor has a positive diagonal"),
        }
    }

    /// `A⁻¹ v` through two triangular solves.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            Factor::Diagonal(d) => v.component_div(&d.component_mul(d)),
            Factor::Dense(l) => {
                let z = self.whiten(v);
                l.tr_solve_lower_triangular(&z)
                    .expect("Cholesky factor has a positive diagonal")
            }
        }
    }

    /// `|f|_Φ` from the measurements `m = [f, φ]`.
    pub fn seminorm(&self, m: &MeasurementVector) -> Result<f64> {
        self.check(m)?;
        Ok(self.whiten(m.values()).norm())
    }

    pub fn seminorm_squared(&self, m: &MeasurementVector) -> Result<f64> {
        self.check(m)?;
        Ok(self.whiten(m.values()).norm_squared())
    }

    /// Gradient of `mᵀ A⁻¹ m`, i.e. `2 A⁻¹ m`.
    pub fn seminorm_squared_gradient(&self, m: &MeasurementVector) -> Result<MeasurementVector> {
        self.check(m)?;
        MeasurementVector::new(self.space, self.solve(m.values()) * 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(space: TestSpace, a: usize) -> MeasurementVector {
        let mut v = vec![0.0; space.len()];
        v[a] = 1.0;
        MeasurementVector::from_vec(space, v).unwrap()
    }

    #[test]
    fn single_modes() {
        let space = TestSpace::sine_1d(5).unwrap();
        let ctx = SeminormContext::new(space, 1.0).unwrap();
        assert!((ctx.seminorm(&unit(space, 0)).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((ctx.seminorm(&unit(space, 1)).unwrap() - 0.5 / PI).abs() < 1e-15);
        assert_eq!(ctx.seminorm(&MeasurementVector::zeros(space)).unwrap(), 0.0);
    }

    #[test]
    fn gradient_of_first_mode() {
        let space = TestSpace::sine_1d(2).unwrap();
        let ctx = SeminormContext::new(space, 1.0).unwrap();
        let g = ctx.seminorm_squared_gradient(&unit(space, 0)).unwrap();
        assert!((g.as_slice()[0] - 2.0 / (PI * PI)).abs() < 1e-15);
        assert_eq!(g.as_slice()[1], 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let ctx = SeminormContext::new(TestSpace::sine_1d(3).unwrap(), 1.0).unwrap();
        let other = MeasurementVector::zeros(TestSpace::sine_1d(4).unwrap());
        assert!(matches!(ctx.seminorm(&other), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn dense_factor_reproduces_stiffness() {
        let ctx = SeminormContext::new(TestSpace::fem_1d(6).unwrap(), 1.0).unwrap();
        let l = ctx.factor();
        let diff = &l * l.transpose() - ctx.stiffness();
        assert!(diff.norm() <= 1e-10 * ctx.stiffness().norm());
    }
}
