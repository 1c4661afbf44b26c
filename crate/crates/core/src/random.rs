//! Seeded random instances with known solutions.
//!
//! Quadratic programs are built backwards from a prescribed KKT point with
//! strict complementarity: pick `x*`, the active rows, `λ*` and `μ* > 0`,
//! then solve stationarity for the linear term. Inactive rows get a slack of
//! at least 0.5 at `x*`. Constraint rows are unit vectors and the stacked
//! active Jacobian is kept well conditioned, so the KKT point is unique.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::problem::{Affine, Constraint, Matrix, Vector};
use crate::scenario::QpData;
use crate::switched::ProjectionSystem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Size and conditioning limits for generated programs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub max_n: usize,
    pub max_m: usize,
    pub max_p: usize,
    /// Range of the objective Hessian's eigenvalues.
    pub eig: (f64, f64),
    /// Range of every time constant.
    pub tau: (f64, f64),
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            max_n: 5,
            max_m: 2,
            max_p: 4,
            eig: (0.5, 5.0),
            tau: (0.5, 2.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomQp {
    pub data: QpData,
    pub x_star: Vector,
    pub lambda_star: Vector,
    pub mu_star: Vector,
    pub tau_x: Vec<f64>,
    pub tau_lambda: Vec<f64>,
    pub tau_mu: Vec<f64>,
    pub x0: Vector,
    pub lambda0: Vector,
    pub mu0: Vector,
}

fn uniform_vec<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.gen_range(lo..hi))
}

fn unit_row<R: Rng>(rng: &mut R, n: usize) -> Vector {
    loop {
        let v = uniform_vec(rng, n, -1.0, 1.0);
        let norm = v.norm();
        if norm > 0.2 {
            return v / norm;
        }
    }
}

/// Symmetric matrix with eigenvalues drawn from `eig`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, eig: (f64, f64)) -> Matrix {
    let q = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
        .qr()
        .q();
    let d = Matrix::from_diagonal(&uniform_vec(rng, n, eig.0, eig.1));
    let h = &q * d * q.transpose();
    // exact symmetry
    (&h + h.transpose()) * 0.5
}

fn min_singular(rows: &[Vector], n: usize) -> f64 {
    if rows.is_empty() {
        return f64::INFINITY;
    }
    let m = Matrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    m.singular_values().min()
}

/// A strictly convex QP within `spec` and its unique KKT point.
pub fn random_qp<R: Rng>(rng: &mut R, spec: &InstanceSpec) -> RandomQp {
    let n = rng.gen_range(1..=spec.max_n);
    let m = rng.gen_range(0..=spec.max_m.min(n - 1));
    let p = rng.gen_range(0..=spec.max_p);
    let h = random_spd(rng, n, spec.eig);
    let x_star = uniform_vec(rng, n, -2.0, 2.0);

    let k = rng.gen_range(0..=p.min(n - m));
    let mut active: Vec<usize> = (0..p).collect();
    active.shuffle(rng);
    active.truncate(k);

    let (eq_rows, act_rows) = loop {
        let eq: Vec<Vector> = (0..m).map(|_| unit_row(rng, n)).collect();
        let act: Vec<Vector> = (0..k).map(|_| unit_row(rng, n)).collect();
        let stacked: Vec<Vector> = eq.iter().chain(&act).cloned().collect();
        if min_singular(&stacked, n) > 0.5 {
            break (eq, act);
        }
    };
    let eq_a = Matrix::from_fn(m, n, |i, j| eq_rows[i][j]);
    let eq_b = -(&eq_a * &x_star);
    let lambda_star = uniform_vec(rng, m, -2.0, 2.0);

    let mut ineq_a = Matrix::zeros(p, n);
    let mut ineq_b = Vector::zeros(p);
    let mut mu_star = Vector::zeros(p);
    let mut next_active = act_rows.iter();
    for i in 0..p {
        let row = if active.contains(&i) {
            mu_star[i] = rng.gen_range(0.5..2.0);
            next_active
                .next()
                .expect("one row per active index")
                .clone()
        } else {
            unit_row(rng, n)
        };
        let slack = if active.contains(&i) {
            0.0
        } else {
            rng.gen_range(0.5..2.0)
        };
        ineq_b[i] = -row.dot(&x_star) - slack;
        ineq_a.row_mut(i).copy_from(&row.transpose());
    }
    let linear = -(&h * &x_star) - eq_a.transpose() * &lambda_star - ineq_a.transpose() * &mu_star;

    let taus = |rng: &mut R, k: usize| -> Vec<f64> {
        (0..k)
            .map(|_| rng.gen_range(spec.tau.0..spec.tau.1))
            .collect()
    };
    let tau_x = taus(rng, n);
    let tau_lambda = taus(rng, m);
    let tau_mu = taus(rng, p);
    let x0 = uniform_vec(rng, n, -3.0, 3.0);
    let lambda0 = Vector::zeros(m);
    let mu0 = Vector::from_fn(p, |_, _| {
        if rng.gen_bool(0.5) {
            0.0
        } else {
            rng.gen_range(0.0..1.0)
        }
    });
    RandomQp {
        data: QpData {
            hessian: h,
            linear,
            constant: 0.0,
            eq_a,
            eq_b,
            ineq_a,
            ineq_b,
        },
        x_star,
        lambda_star,
        mu_star,
        tau_x,
        tau_lambda,
        tau_mu,
        x0,
        lambda0,
        mu0,
    }
}

/// A projection system with affine constraints, a constant input `ũ*` at
/// which every constraint is satisfied (some with equality), an initial
/// multiplier, and the equilibrium multiplier the flow reaches from it.
#[derive(Debug, Clone)]
pub struct RandomProjection {
    pub proj: ProjectionSystem,
    pub u_star: Vector,
    pub mu0: Vector,
    pub mu_bar: Vector,
}

pub fn random_projection<R: Rng>(rng: &mut R, spec: &InstanceSpec) -> RandomProjection {
    let n = rng.gen_range(1..=spec.max_n);
    let p = rng.gen_range(1..=spec.max_p);
    let u_star = uniform_vec(rng, n, -2.0, 2.0);
    let mut constraints: Vec<Arc<dyn Constraint>> = Vec::with_capacity(p);
    let mut mu0 = Vector::zeros(p);
    let mut mu_bar = Vector::zeros(p);
    for i in 0..p {
        let a = unit_row(rng, n);
        let on_boundary = rng.gen_bool(0.3);
        let slack = if on_boundary {
            0.0
        } else {
            rng.gen_range(0.2..2.0)
        };
        let b = -a.dot(&u_star) - slack;
        mu0[i] = if rng.gen_bool(0.2) {
            0.0
        } else {
            rng.gen_range(0.0..2.0)
        };
        if on_boundary {
            mu_bar[i] = mu0[i];
        }
        constraints.push(Arc::new(Affine::new(a, b)));
    }
    let tau_mu = (0..p)
        .map(|_| rng.gen_range(spec.tau.0..spec.tau.1))
        .collect();
    RandomProjection {
        proj: ProjectionSystem::new(n, constraints, tau_mu).expect("consistent dimensions"),
        u_star,
        mu0,
        mu_bar,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{active_set_oracle, kkt_residual, KktPoint};

    #[test]
    fn generated_point_is_the_oracle_solution() {
        let mut r = rng(7);
        for _ in 0..50 {
            let inst = random_qp(&mut r, &InstanceSpec::default());
            let problem = inst.data.problem().unwrap();
            let prescribed = KktPoint {
                x_star: inst.x_star.clone(),
                lambda_star: inst.lambda_star.clone(),
                mu_star: inst.mu_star.clone(),
            };
            assert!(kkt_residual(&problem, &prescribed).unwrap().max() < 1e-10);
            let oracle = active_set_oracle(&problem).unwrap();
            assert!((oracle.x_star - &inst.x_star).amax() < 1e-8);
            assert!((oracle.mu_star - &inst.mu_star).amax() < 1e-8);
        }
    }

    #[test]
    fn hessian_spectrum_is_in_range() {
        let mut r = rng(3);
        for n in 1..=5 {
            let h = random_spd(&mut r, n, (0.5, 5.0));
            for e in h.symmetric_eigenvalues().iter() {
                assert!((0.5 - 1e-12..=5.0 + 1e-12).contains(e));
            }
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = random_qp(&mut rng(11), &InstanceSpec::default());
        let b = random_qp(&mut rng(11), &InstanceSpec::default());
        assert_eq!(a.data, b.data);
        assert_eq!(a.x0, b.x0);
    }
}
