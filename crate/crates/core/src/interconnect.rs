//! Power-conserving interconnection of the equality system and the projection
//! system, giving the full primal-dual gradient dynamics
//!
//! ```text
//! -τ_x ẋ = ∇f(x) + Σ λ_i ∇h_i(x) + Σ μ_i ∇g_i(x) + v
//!  τ_λ λ̇ = h(x)
//!  τ_μ μ̇ = (g(x))⁺_μ
//! ```
//!
//! The projection system is fed `ũ = x` and its output `ỹ = Σ μ_i ∇g_i(x)`
//! enters the equality system as `u = ỹ + v`. With that coupling the
//! port powers `u̇ᵀẏ` and `ũ̇ᵀỹ̇` cancel in the composite storage rate, leaving
//! `-v̇ᵀẋ` as the only external supply.

use serde::{Deserialize, Serialize};

use crate::bm::{bm_vector_field, krasovskii_storage, BmSystem, TimeConstants};
use crate::error::{check_dim, Error, Result};
use crate::problem::{ConvexProblem, Vector};
use crate::signal::InputSignal;
use crate::switched::{compute_sigma, output_port, switched_storage, ActiveSet, ProjectionSystem};

#[derive(Debug, Clone)]
pub struct ComposedSystem {
    problem: ConvexProblem,
    bm: BmSystem,
    proj: ProjectionSystem,
    v: InputSignal,
}

impl ComposedSystem {
    pub fn new(
        problem: ConvexProblem,
        tau_x: TimeConstants,
        tau_lambda: TimeConstants,
        tau_mu: Vec<f64>,
    ) -> Result<Self> {
        let bm = BmSystem::new(problem.equality_part(), tau_x, tau_lambda)?;
        let proj = ProjectionSystem::new(problem.n(), problem.inequalities().to_vec(), tau_mu)?;
        let v = InputSignal::zero(problem.n());
        Ok(Self {
            problem,
            bm,
            proj,
            v,
        })
    }

    /// Diagonal time constants.
    pub fn with_diagonal_taus(
        problem: ConvexProblem,
        tau_x: &[f64],
        tau_lambda: &[f64],
        tau_mu: &[f64],
    ) -> Result<Self> {
        Self::new(
            problem,
            TimeConstants::diagonal(tau_x)?,
            TimeConstants::diagonal(tau_lambda)?,
            tau_mu.to_vec(),
        )
    }

    /// Replaces the exogenous input `v` (default zero).
    pub fn with_input(mut self, v: InputSignal) -> Result<Self> {
        check_dim("exogenous input", self.problem.n(), v.dim())?;
        self.v = v;
        Ok(self)
    }

    pub fn problem(&self) -> &ConvexProblem {
        &self.problem
    }
    pub fn bm(&self) -> &BmSystem {
        &self.bm
    }
    pub fn proj(&self) -> &ProjectionSystem {
        &self.proj
    }
    pub fn input(&self) -> &InputSignal {
        &self.v
    }
}

/// Primal variable, both multiplier vectors, and the active set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub x: Vector,
    pub lambda: Vector,
    pub mu: Vector,
    pub sigma: ActiveSet,
}

impl FullState {
    /// Builds a state with `σ` computed from `(μ, g(x))`. Multipliers in `σ`
    /// are set to exactly zero.
    pub fn new(sys: &ComposedSystem, x: Vector, lambda: Vector, mut mu: Vector) -> Result<Self> {
        check_dim("primal vector", sys.problem.n(), x.len())?;
        check_dim("equality multipliers", sys.problem.m(), lambda.len())?;
        check_dim("inequality multipliers", sys.problem.p(), mu.len())?;
        if let Some(bad) = mu.iter().find(|&&m| !(m >= 0.0)) {
            return Err(Error::Invalid(format!(
                "inequality multipliers must be >= 0, got {bad}"
            )));
        }
        let sigma = compute_sigma(&mu, &sys.proj.values(&x));
        for i in sigma.iter() {
            mu[i] = 0.0;
        }
        Ok(Self {
            x,
            lambda,
            mu,
            sigma,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub x_dot: Vector,
    pub lambda_dot: Vector,
    pub mu_dot: Vector,
}

/// Right-hand side of the full dynamics in mode `state.sigma`, with
/// exogenous input `v`.
pub fn composed_vector_field(sys: &ComposedSystem, state: &FullState, v: &Vector) -> Result<Rates> {
    check_dim("exogenous input", sys.problem.n(), v.len())?;
    if state.mu.iter().any(|&m| m < 0.0) {
        return Err(Error::Invariant("negative inequality multiplier".into()));
    }
    mode_vector_field(sys, state, v)
}

/// The smooth field of mode `state.sigma`, defined for any `μ`. Runge-Kutta
/// stages may extrapolate a multiplier slightly below zero before the event
/// that clamps it is located.
pub(crate) fn mode_vector_field(
    sys: &ComposedSystem,
    state: &FullState,
    v: &Vector,
) -> Result<Rates> {
    let y_tilde = output_port(&sys.proj, &state.x, &state.mu)?;
    let bm = bm_vector_field(&sys.bm, &state.x, &state.lambda, &(y_tilde + v))?;
    let g = sys.proj.values(&state.x);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation(
            "inequality oracle returned a non-finite value".into(),
        ));
    }
    Ok(Rates {
        x_dot: bm.x_dot,
        lambda_dot: bm.lambda_dot,
        mu_dot: sys.proj.mode_rates(&g, &state.sigma),
    })
}

/// `S̃_σ = P̃ + S_σ`
pub fn composite_storage(sys: &ComposedSystem, state: &FullState, rates: &Rates) -> f64 {
    krasovskii_storage(&sys.bm, &rates.x_dot, &rates.lambda_dot)
        + switched_storage(&sys.proj, &state.sigma, &rates.mu_dot)
}

/// Instantaneous power through each port.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PortPower {
    /// `u̇ᵀẏ` of the equality system, `u = ỹ + v`, `y = -x`.
    pub equality: f64,
    /// `u_sᵀy_s = ũ̇ᵀỹ̇` of the projection system.
    pub inequality: f64,
    /// `-v̇ᵀẋ`
    pub external: f64,
}

pub fn port_power(
    sys: &ComposedSystem,
    state: &FullState,
    rates: &Rates,
    v_dot: &Vector,
) -> PortPower {
    let y_tilde_dot = sys
        .proj
        .output_rate(&state.x, &rates.x_dot, &state.mu, &rates.mu_dot);
    let external = -v_dot.dot(&rates.x_dot);
    PortPower {
        equality: -(y_tilde_dot.dot(&rates.x_dot)) + external,
        inequality: rates.x_dot.dot(&y_tilde_dot),
        external,
    }
}
