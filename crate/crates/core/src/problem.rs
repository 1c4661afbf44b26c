//! Convex programs with affine equalities and convex inequalities.
//!
//! A problem is
//!
//! ```text
//! minimize f(x)  subject to  h(x) = A_h x + b_h = 0,   g_i(x) <= 0,  i = 1..p
//! ```
//!
//! with `f` strictly convex and each `g_i` convex. The objective and the
//! inequalities are oracles returning value, gradient and Hessian. The
//! brute-force [`active_set_oracle`] solves the quadratic/affine subclass exactly
//! and is the ground truth the dynamics are compared against.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Largest number of inequalities the active-set enumeration accepts.
pub const MAX_ENUMERATED_CONSTRAINTS: usize = 20;

/// A C² scalar function of the primal variable.
pub trait Objective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian(&self, x: &Vector) -> Matrix;

    /// Exposes the quadratic data when the function is quadratic.
    fn as_quadratic(&self) -> Option<&Quadratic> {
        None
    }
}

/// A convex inequality `g(x) <= 0`.
pub trait Constraint: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian(&self, x: &Vector) -> Matrix;

    /// `(a, b)` with `g(x) = a·x + b` when the constraint is affine.
    fn as_affine(&self) -> Option<(Vector, f64)> {
        None
    }
}

/// `½ xᵀ H x + cᵀ x + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub hessian: Matrix,
    pub linear: Vector,
    pub constant: f64,
}

impl Quadratic {
    pub fn new(hessian: Matrix, linear: Vector, constant: f64) -> Result<Self> {
        let n = linear.len();
        check_dim("quadratic hessian rows", n, hessian.nrows())?;
        check_dim("quadratic hessian cols", n, hessian.ncols())?;
        let asym = (&hessian - hessian.transpose()).amax();
        if asym > 1e-12 * (1.0 + hessian.amax()) {
            return Err(Error::Invalid(format!(
                "quadratic hessian is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(Self {
            hessian,
            linear,
            constant,
        })
    }

    fn eval(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x) + self.constant
    }

    fn grad(&self, x: &Vector) -> Vector {
        &self.hessian * x + &self.linear
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.linear.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.eval(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        self.grad(x)
    }
    fn hessian(&self, _x: &Vector) -> Matrix {
        self.hessian.clone()
    }
    fn as_quadratic(&self) -> Option<&Quadratic> {
        Some(self)
    }
}

impl Constraint for Quadratic {
    fn dim(&self) -> usize {
        self.linear.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.eval(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        self.grad(x)
    }
    fn hessian(&self, _x: &Vector) -> Matrix {
        self.hessian.clone()
    }
    fn as_affine(&self) -> Option<(Vector, f64)> {
        (self.hessian.amax() == 0.0).then(|| (self.linear.clone(), self.constant))
    }
}

/// `g(x) = a·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub a: Vector,
    pub b: f64,
}

impl Affine {
    pub fn new(a: Vector, b: f64) -> Self {
        Self { a, b }
    }
}

impl Constraint for Affine {
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.a.dot(x) + self.b
    }
    fn gradient(&self, _x: &Vector) -> Vector {
        self.a.clone()
    }
    fn hessian(&self, _x: &Vector) -> Matrix {
        Matrix::zeros(self.a.len(), self.a.len())
    }
    fn as_affine(&self) -> Option<(Vector, f64)> {
        Some((self.a.clone(), self.b))
    }
}

/// `h(x) = A x + b`, one row per equality constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub a: Matrix,
    pub b: Vector,
}

impl AffineMap {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        check_dim("equality offset", a.nrows(), b.len())?;
        Ok(Self { a, b })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            a: Matrix::zeros(0, n),
            b: Vector::zeros(0),
        }
    }

    pub fn eval(&self, x: &Vector) -> Vector {
        &self.a * x + &self.b
    }
}

/// A convex program with oracles for every function involved.
#[derive(Debug, Clone)]
pub struct ConvexProblem {
    objective: Arc<dyn Objective>,
    equality: AffineMap,
    inequalities: Vec<Arc<dyn Constraint>>,
}

impl ConvexProblem {
    pub fn new(
        objective: Arc<dyn Objective>,
        equality: AffineMap,
        inequalities: Vec<Arc<dyn Constraint>>,
    ) -> Result<Self> {
        let n = objective.dim();
        check_dim("equality columns", n, equality.a.ncols())?;
        for g in &inequalities {
            check_dim("inequality argument", n, g.dim())?;
        }
        Ok(Self {
            objective,
            equality,
            inequalities,
        })
    }

    /// Quadratic objective, affine equalities `A_h x + b_h = 0` and affine
    /// inequalities `G x + g0 <= 0`.
    pub fn quadratic(
        objective: Quadratic,
        equality: AffineMap,
        ineq_a: &Matrix,
        ineq_b: &Vector,
    ) -> Result<Self> {
        check_dim("inequality offsets", ineq_a.nrows(), ineq_b.len())?;
        let inequalities = (0..ineq_a.nrows())
            .map(|i| {
                Arc::new(Affine::new(ineq_a.row(i).transpose(), ineq_b[i])) as Arc<dyn Constraint>
            })
            .collect();
        Self::new(Arc::new(objective), equality, inequalities)
    }

    pub fn n(&self) -> usize {
        self.objective.dim()
    }
    pub fn m(&self) -> usize {
        self.equality.a.nrows()
    }
    pub fn p(&self) -> usize {
        self.inequalities.len()
    }

    pub fn objective(&self) -> &Arc<dyn Objective> {
        &self.objective
    }
    pub fn equality(&self) -> &AffineMap {
        &self.equality
    }
    pub fn inequalities(&self) -> &[Arc<dyn Constraint>] {
        &self.inequalities
    }

    pub fn inequality_values(&self, x: &Vector) -> Vector {
        Vector::from_iterator(self.p(), self.inequalities.iter().map(|g| g.value(x)))
    }

    /// Checks the convexity assumptions at `x`: positive definite objective
    /// Hessian and positive semidefinite constraint Hessians.
    pub fn check_convexity_at(&self, x: &Vector) -> Result<()> {
        check_dim("convexity point", self.n(), x.len())?;
        let h = self.objective.hessian(x);
        if h.clone().cholesky().is_none() {
            return Err(Error::Invalid(
                "objective hessian is not positive definite".into(),
            ));
        }
        for (i, g) in self.inequalities.iter().enumerate() {
            let min_eig = g
                .hessian(x)
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if min_eig < -1e-12 {
                return Err(Error::Invalid(format!(
                    "hessian of inequality {} is not positive semidefinite",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// A candidate primal-dual optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktPoint {
    pub x_star: Vector,
    pub lambda_star: Vector,
    pub mu_star: Vector,
}

/// Max-norm of each KKT defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    pub stationarity: f64,
    pub equality: f64,
    pub inequality: f64,
    pub complementarity: f64,
    pub dual: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        [
            self.stationarity,
            self.equality,
            self.inequality,
            self.complementarity,
            self.dual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn ensure_finite(what: &str, v: &Vector) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Evaluation(format!(
            "{what} returned a non-finite value"
        )))
    }
}

/// Gradient of the Lagrangian in `x`, together with `h(x)` and `g(x)`.
pub fn lagrangian_gradient(
    problem: &ConvexProblem,
    x: &Vector,
    lambda: &Vector,
    mu: &Vector,
) -> Result<(Vector, Vector, Vector)> {
    check_dim("primal vector", problem.n(), x.len())?;
    check_dim("equality multipliers", problem.m(), lambda.len())?;
    check_dim("inequality multipliers", problem.p(), mu.len())?;
    if mu.iter().any(|&v| v < 0.0) {
        return Err(Error::Invalid("inequality multipliers must be >= 0".into()));
    }

    let mut grad = problem.objective.gradient(x);
    ensure_finite("objective gradient", &grad)?;
    grad += problem.equality.a.tr_mul(lambda);
    for (g, &mu_i) in problem.inequalities.iter().zip(mu.iter()) {
        if mu_i != 0.0 {
            grad.axpy(mu_i, &g.gradient(x), 1.0);
        }
    }
    let h = problem.equality.eval(x);
    let g = problem.inequality_values(x);
    ensure_finite("inequality oracle", &g)?;
    Ok((grad, h, g))
}

/// KKT defects of `point`. All components vanish exactly at a KKT point.
pub fn kkt_residual(problem: &ConvexProblem, point: &KktPoint) -> Result<KktResidual> {
    check_dim("inequality multipliers", problem.p(), point.mu_star.len())?;
    // Negative multipliers are reported as a defect, not rejected.
    let mu_plus = point.mu_star.map(|v| v.max(0.0));
    let (grad, h, g) = lagrangian_gradient(problem, &point.x_star, &point.lambda_star, &mu_plus)?;
    let mut grad = grad;
    for (gi, &mu_i) in problem.inequalities.iter().zip(point.mu_star.iter()) {
        if mu_i < 0.0 {
            grad.axpy(mu_i, &gi.gradient(&point.x_star), 1.0);
        }
    }
    Ok(KktResidual {
        stationarity: max_abs(&grad),
        equality: max_abs(&h),
        inequality: g.iter().fold(0.0, |acc, &v| acc.max(v)),
        complementarity: g
            .iter()
            .zip(point.mu_star.iter())
            .fold(0.0, |acc, (gi, mi)| acc.max((gi * mi).abs())),
        dual: point.mu_star.iter().fold(0.0, |acc, &v| acc.max(-v)),
    })
}

/// Visits all subsets of `0..p` ordered by size, then lexicographically.
fn for_each_subset(p: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    for k in 0..=p {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            if visit(&idx) {
                return;
            }
            // advance to the next k-combination
            match (0..k).rev().find(|&i| idx[i] < p - k + i) {
                None => break,
                Some(i) => {
                    idx[i] += 1;
                    for j in i + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                }
            }
        }
    }
}

/// Exact KKT point of a quadratic/affine problem by exhaustive active-set
/// enumeration.
///
/// Candidate active sets are tried by increasing size, then in lexicographic
/// order; a candidate whose KKT system is singular is skipped. The first
/// candidate that is primal feasible with nonnegative active multipliers is
/// returned.
pub fn active_set_oracle(problem: &ConvexProblem) -> Result<KktPoint> {
    let quad = problem
        .objective
        .as_quadratic()
        .ok_or_else(|| Error::Capability("active-set oracle needs a quadratic objective".into()))?;
    let p = problem.p();
    if p > MAX_ENUMERATED_CONSTRAINTS {
        return Err(Error::Capability(format!(
            "active-set enumeration is limited to {MAX_ENUMERATED_CONSTRAINTS} inequalities, got {p}"
        )));
    }
    let rows: Vec<(Vector, f64)> = problem
        .inequalities
        .iter()
        .enumerate()
        .map(|(i, g)| {
            g.as_affine().ok_or_else(|| {
                Error::Capability(format!(
                    "active-set oracle needs affine inequalities (constraint {} is not)",
                    i + 1
                ))
            })
        })
        .collect::<Result<_>>()?;
    if quad.hessian.clone().cholesky().is_none() {
        return Err(Error::Invalid(
            "objective hessian is not positive definite".into(),
        ));
    }

    let n = problem.n();
    let m = problem.m();
    let eq = &problem.equality;
    let scale = 1.0
        + quad.hessian.amax()
        + quad.linear.amax()
        + eq.a.amax()
        + eq.b.amax()
        + rows
            .iter()
            .fold(0.0_f64, |acc, (a, b)| acc.max(a.amax()).max(b.abs()));
    let feas_tol = 1e-11 * scale;

    let mut found = None;
    for_each_subset(p, |active| {
        let k = active.len();
        let dim = n + m + k;
        let mut kkt = Matrix::zeros(dim, dim);
        let mut rhs = Vector::zeros(dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&quad.hessian);
        rhs.rows_mut(0, n).copy_from(&(-&quad.linear));
        for r in 0..m {
            for c in 0..n {
                kkt[(n + r, c)] = eq.a[(r, c)];
                kkt[(c, n + r)] = eq.a[(r, c)];
            }
            rhs[n + r] = -eq.b[r];
        }
        for (j, &i) in active.iter().enumerate() {
            let (a, b) = &rows[i];
            for c in 0..n {
                kkt[(n + m + j, c)] = a[c];
                kkt[(c, n + m + j)] = a[c];
            }
            rhs[n + m + j] = -b;
        }

        let svals = kkt.clone().singular_values();
        let smax = svals.max();
        if dim > 0 && svals.min() <= 1e-12 * smax.max(1.0) {
            return false;
        }
        let lu = kkt.clone().lu();
        let Some(mut sol) = lu.solve(&rhs) else {
            return false;
        };
        // one step of iterative refinement
        if let Some(corr) = lu.solve(&(&rhs - &kkt * &sol)) {
            sol += corr;
        }

        let x = sol.rows(0, n).into_owned();
        let mut mu = Vector::zeros(p);
        for (j, &i) in active.iter().enumerate() {
            mu[i] = sol[n + m + j];
        }
        let mu_ok = active.iter().all(|&i| mu[i] >= -feas_tol);
        let feasible = rows
            .iter()
            .all(|(a, b)| a.dot(&x) + b <= feas_tol * (1.0 + max_abs(&x)));
        if mu_ok && feasible {
            for v in mu.iter_mut() {
                *v = v.max(0.0);
            }
            found = Some(KktPoint {
                x_star: x,
                lambda_star: sol.rows(n, m).into_owned(),
                mu_star: mu,
            });
            return true;
        }
        false
    });

    found.ok_or(Error::Infeasible)
}
