//! Equality-constrained primal-dual gradient dynamics in Brayton-Moser form.
//!
//! With `z = (x, λ)`, `Q = diag(-τ_x, τ_λ)` and mixed potential
//! `P(z) = f(x) + λᵀh(x)`, the dynamics `Q ż = ∇P(z) + (u, 0)` read
//!
//! ```text
//! -τ_x ẋ = ∇f(x) + ∇h(x)ᵀλ + u
//!  τ_λ λ̇ = h(x)
//! ```
//!
//! The system is passive with respect to the port pair `(u̇, ẏ)`, `y = -x`,
//! with the Krasovskii-type storage `P̃ = ½ ẋᵀτ_x ẋ + ½ λ̇ᵀτ_λ λ̇`.

use crate::error::{check_dim, Error, Result};
use crate::problem::{lagrangian_gradient, ConvexProblem, Matrix, Vector};

/// A symmetric positive definite time-constant matrix with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeConstants {
    matrix: Matrix,
    inverse: Matrix,
}

impl TimeConstants {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Invalid("time-constant matrix must be square".into()));
        }
        if (&matrix - matrix.transpose()).amax() > 1e-12 * (1.0 + matrix.amax()) {
            return Err(Error::Invalid(
                "time-constant matrix must be symmetric".into(),
            ));
        }
        let chol = matrix.clone().cholesky().ok_or_else(|| {
            Error::Invalid("time-constant matrix must be positive definite".into())
        })?;
        Ok(Self {
            inverse: chol.inverse(),
            matrix,
        })
    }

    /// Diagonal matrix from positive entries.
    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Invalid(format!(
                "time constants must be positive, got {bad}"
            )));
        }
        let d = Vector::from_column_slice(entries);
        Ok(Self {
            matrix: Matrix::from_diagonal(&d),
            inverse: Matrix::from_diagonal(&d.map(|t| 1.0 / t)),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    /// `½ vᵀ τ v`
    pub fn half_quadratic_form(&self, v: &Vector) -> f64 {
        0.5 * v.dot(&(&self.matrix * v))
    }
}

/// Equality-constrained problem together with its primal and dual time constants.
#[derive(Debug, Clone)]
pub struct BmSystem {
    problem: ConvexProblem,
    tau_x: TimeConstants,
    tau_lambda: TimeConstants,
}

/// Output of [`bm_vector_field`].
#[derive(Debug, Clone, PartialEq)]
pub struct BmRates {
    pub x_dot: Vector,
    pub lambda_dot: Vector,
    /// Output port `y = -x`.
    pub y: Vector,
}

impl BmSystem {
    /// `problem` must not carry inequality constraints; see
    /// [`ConvexProblem::equality_part`].
    pub fn new(
        problem: ConvexProblem,
        tau_x: TimeConstants,
        tau_lambda: TimeConstants,
    ) -> Result<Self> {
        if problem.p() != 0 {
            return Err(Error::Invalid(
                "Brayton-Moser system takes the equality-constrained part only".into(),
            ));
        }
        check_dim("primal time constants", problem.n(), tau_x.dim())?;
        check_dim("dual time constants", problem.m(), tau_lambda.dim())?;
        Ok(Self {
            problem,
            tau_x,
            tau_lambda,
        })
    }

    pub fn problem(&self) -> &ConvexProblem {
        &self.problem
    }
    pub fn tau_x(&self) -> &TimeConstants {
        &self.tau_x
    }
    pub fn tau_lambda(&self) -> &TimeConstants {
        &self.tau_lambda
    }
}

impl ConvexProblem {
    /// The same problem with every inequality dropped.
    pub fn equality_part(&self) -> ConvexProblem {
        ConvexProblem::new(
            self.objective().clone(),
            self.equality().clone(),
            Vec::new(),
        )
        .expect("dimensions already validated")
    }
}

pub fn bm_vector_field(sys: &BmSystem, x: &Vector, lambda: &Vector, u: &Vector) -> Result<BmRates> {
    check_dim("input port", sys.problem.n(), u.len())?;
    let empty = Vector::zeros(0);
    let (grad, h, _) = lagrangian_gradient(&sys.problem, x, lambda, &empty)?;
    let x_dot = -(sys.tau_x.inverse() * (grad + u));
    let lambda_dot = sys.tau_lambda.inverse() * h;
    Ok(BmRates {
        x_dot,
        lambda_dot,
        y: -x,
    })
}

/// `P(z) = f(x) + λᵀh(x)`; indefinite, kept for diagnostics.
pub fn mixed_potential(sys: &BmSystem, x: &Vector, lambda: &Vector) -> Result<f64> {
    check_dim("primal vector", sys.problem.n(), x.len())?;
    check_dim("equality multipliers", sys.problem.m(), lambda.len())?;
    Ok(sys.problem.objective().value(x) + lambda.dot(&sys.problem.equality().eval(x)))
}

/// `½ ẋᵀτ_x ẋ + ½ λ̇ᵀτ_λ λ̇`
pub fn krasovskii_storage(sys: &BmSystem, x_dot: &Vector, lambda_dot: &Vector) -> f64 {
    sys.tau_x.half_quadratic_form(x_dot) + sys.tau_lambda.half_quadratic_form(lambda_dot)
}

/// Closed-form time derivative of [`krasovskii_storage`] along the flow,
/// `-ẋᵀ∇²f(x)ẋ - ẋᵀu̇`. Relies on `h` being affine.
pub fn storage_rate(
    sys: &BmSystem,
    x: &Vector,
    lambda: &Vector,
    u: &Vector,
    u_dot: &Vector,
) -> Result<f64> {
    check_dim("input port rate", sys.problem.n(), u_dot.len())?;
    let rates = bm_vector_field(sys, x, lambda, u)?;
    let hess = sys.problem.objective().hessian(x);
    Ok(-rates.x_dot.dot(&(hess * &rates.x_dot)) - rates.x_dot.dot(u_dot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{AffineMap, Quadratic};
    use std::sync::Arc;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn scalar_sys(tau: f64) -> BmSystem {
        let f = Quadratic::new(Matrix::from_element(1, 1, 2.0), v(&[-4.0]), 4.0).unwrap();
        let p = ConvexProblem::new(Arc::new(f), AffineMap::empty(1), vec![]).unwrap();
        BmSystem::new(
            p,
            TimeConstants::diagonal(&[tau]).unwrap(),
            TimeConstants::diagonal(&[]).unwrap(),
        )
        .unwrap()
    }

    fn eq_sys() -> BmSystem {
        let f = Quadratic::new(Matrix::identity(2, 2) * 2.0, Vector::zeros(2), 0.0).unwrap();
        let h = AffineMap::new(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[-2.0])).unwrap();
        let p = ConvexProblem::new(Arc::new(f), h, vec![]).unwrap();
        BmSystem::new(
            p,
            TimeConstants::diagonal(&[1.0, 1.0]).unwrap(),
            TimeConstants::diagonal(&[1.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn vector_field_examples() {
        let s = scalar_sys(1.0);
        let r = bm_vector_field(&s, &v(&[0.0]), &v(&[]), &v(&[0.0])).unwrap();
        assert_eq!(r.x_dot, v(&[4.0]));
        assert_eq!(r.y, v(&[-0.0]));
        let r = bm_vector_field(&s, &v(&[2.0]), &v(&[]), &v(&[0.0])).unwrap();
        assert_eq!(r.x_dot, v(&[0.0]));

        let r = bm_vector_field(&eq_sys(), &v(&[1.0, 1.0]), &v(&[-2.0]), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(r.x_dot.amax(), 0.0);
        assert_eq!(r.lambda_dot, v(&[0.0]));
    }

    #[test]
    fn time_constants_scale_the_rates() {
        let r = bm_vector_field(&scalar_sys(4.0), &v(&[0.0]), &v(&[]), &v(&[1.0])).unwrap();
        assert_eq!(r.x_dot, v(&[0.75]));
    }

    #[test]
    fn mixed_potential_examples() {
        assert_eq!(
            mixed_potential(&scalar_sys(1.0), &v(&[0.0]), &v(&[])).unwrap(),
            4.0
        );
        let s = eq_sys();
        assert_eq!(
            mixed_potential(&s, &v(&[1.0, 1.0]), &v(&[-2.0])).unwrap(),
            2.0
        );
        assert_eq!(
            mixed_potential(&s, &v(&[0.0, 0.0]), &v(&[1.0])).unwrap(),
            -2.0
        );
    }

    #[test]
    fn storage_examples() {
        assert_eq!(
            krasovskii_storage(&scalar_sys(1.0), &v(&[0.0]), &v(&[])),
            0.0
        );
        assert_eq!(
            krasovskii_storage(&scalar_sys(2.0), &v(&[1.0]), &v(&[])),
            1.0
        );
        assert_eq!(
            krasovskii_storage(&eq_sys(), &v(&[1.0, 1.0]), &v(&[2.0])),
            3.0
        );
    }

    #[test]
    fn storage_rate_examples() {
        let s = scalar_sys(1.0);
        assert_eq!(
            storage_rate(&s, &v(&[2.0]), &v(&[]), &v(&[0.0]), &v(&[0.0])).unwrap(),
            0.0
        );
        assert_eq!(
            storage_rate(&s, &v(&[0.0]), &v(&[]), &v(&[0.0]), &v(&[0.0])).unwrap(),
            -32.0
        );
    }

    #[test]
    fn storage_rate_matches_finite_difference_along_flow() {
        // Flow of the scalar system: x(t) = 2 - 2 e^{-2t} from x(0)=0.
        let s = scalar_sys(1.0);
        let storage_at = |t: f64| {
            let x = v(&[2.0 - 2.0 * (-2.0 * t).exp()]);
            let r = bm_vector_field(&s, &x, &v(&[]), &v(&[0.0])).unwrap();
            krasovskii_storage(&s, &r.x_dot, &r.lambda_dot)
        };
        let t = 0.3;
        let h = 1e-5;
        let fd = (storage_at(t + h) - storage_at(t - h)) / (2.0 * h);
        let x = v(&[2.0 - 2.0 * (-2.0 * t).exp()]);
        let exact = storage_rate(&s, &x, &v(&[]), &v(&[0.0]), &v(&[0.0])).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-8, "fd {fd} vs {exact}");
    }

    #[test]
    fn rejects_inequalities_and_bad_time_constants() {
        assert!(TimeConstants::diagonal(&[0.0]).is_err());
        assert!(TimeConstants::new(Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(TimeConstants::new(Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).is_err());

        let f = Quadratic::new(Matrix::from_element(1, 1, 2.0), v(&[0.0]), 0.0).unwrap();
        let p = ConvexProblem::quadratic(
            f,
            AffineMap::empty(1),
            &Matrix::from_element(1, 1, 1.0),
            &v(&[-1.0]),
        )
        .unwrap();
        let r = BmSystem::new(
            p.clone(),
            TimeConstants::diagonal(&[1.0]).unwrap(),
            TimeConstants::diagonal(&[]).unwrap(),
        );
        assert!(r.is_err());
        assert!(BmSystem::new(
            p.equality_part(),
            TimeConstants::diagonal(&[1.0]).unwrap(),
            TimeConstants::diagonal(&[]).unwrap(),
        )
        .is_ok());
    }
}
