//! Inequality multipliers as a state-dependent switched system.
//!
//! Each multiplier follows `τ_μ,i μ̇_i = (g_i(ũ))⁺_{μ_i}`: the full rate while
//! `μ_i > 0`, clamped to `max(0, g_i)` on the boundary `μ_i = 0`. The clamped
//! indices form the active set `σ`, and for a fixed `σ` the dynamics are smooth
//! with mode storage `S_σ = ½ Σ_{i∉σ} τ_μ,i μ̇_i²`.
//!
//! Switches come in two kinds. An activation happens when `μ_i` reaches zero
//! while `g_i < 0`; the term `½ τ_μ,i μ̇_i²` leaves the storage, so `S` drops. A
//! deactivation happens when `g_i` rises through zero while `μ_i = 0`; the
//! term entering the storage is zero at that instant, so `S` is continuous.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::problem::{Constraint, Matrix, Vector};

/// Multipliers at or below this value count as zero when forming `σ`.
pub const MU_ZERO_THRESHOLD: f64 = 1e-12;

/// Indices (0-based) where the projection clamps the multiplier rate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActiveSet(BTreeSet<usize>);

impl ActiveSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full(p: usize) -> Self {
        Self((0..p).collect())
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        Self(indices.into_iter().collect())
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }
    pub fn insert(&mut self, i: usize) -> bool {
        self.0.insert(i)
    }
    pub fn remove(&mut self, i: usize) -> bool {
        self.0.remove(&i)
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
    pub fn is_subset(&self, other: &ActiveSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Bit `i` set iff index `i` is active. Supports up to 64 constraints.
    pub fn to_bitmask(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &i| acc | (1u64 << i))
    }

    pub fn from_bitmask(mask: u64) -> Self {
        Self((0..64).filter(|i| mask & (1u64 << i) != 0).collect())
    }
}

impl fmt::Display for ActiveSet {
    /// 1-based, e.g. `{3,4}`; the empty set prints as `{}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// Inequality constraints `g_i(ũ) <= 0` with their multiplier time constants.
#[derive(Debug, Clone)]
pub struct ProjectionSystem {
    n: usize,
    constraints: Vec<Arc<dyn Constraint>>,
    tau_mu: Vec<f64>,
}

impl ProjectionSystem {
    pub fn new(n: usize, constraints: Vec<Arc<dyn Constraint>>, tau_mu: Vec<f64>) -> Result<Self> {
        check_dim("multiplier time constants", constraints.len(), tau_mu.len())?;
        for g in &constraints {
            check_dim("constraint argument", n, g.dim())?;
        }
        if let Some(bad) = tau_mu.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Invalid(format!(
                "multiplier time constants must be positive, got {bad}"
            )));
        }
        Ok(Self {
            n,
            constraints,
            tau_mu,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> usize {
        self.constraints.len()
    }
    pub fn tau_mu(&self) -> &[f64] {
        &self.tau_mu
    }
    pub fn constraints(&self) -> &[Arc<dyn Constraint>] {
        &self.constraints
    }

    pub fn values(&self, u: &Vector) -> Vector {
        Vector::from_iterator(self.p(), self.constraints.iter().map(|g| g.value(u)))
    }

    /// Multiplier rates of mode `sigma`: `g_i/τ_i` off the set, zero on it.
    pub fn mode_rates(&self, g_vals: &Vector, sigma: &ActiveSet) -> Vector {
        Vector::from_iterator(
            self.p(),
            (0..self.p()).map(|i| {
                if sigma.contains(i) {
                    0.0
                } else {
                    g_vals[i] / self.tau_mu[i]
                }
            }),
        )
    }

    /// `ỹ̇ = Σ μ̇_i ∇g_i(ũ) + Σ μ_i ∇²g_i(ũ) ũ̇`
    pub fn output_rate(&self, u: &Vector, u_dot: &Vector, mu: &Vector, mu_dot: &Vector) -> Vector {
        let mut out = Vector::zeros(self.n);
        for (i, g) in self.constraints.iter().enumerate() {
            if mu_dot[i] != 0.0 {
                out.axpy(mu_dot[i], &g.gradient(u), 1.0);
            }
            if mu[i] != 0.0 {
                out.axpy(mu[i], &(g.hessian(u) * u_dot), 1.0);
            }
        }
        out
    }

    /// `ũ̇ᵀ (Σ μ_i ∇²g_i(ũ)) ũ̇`, nonnegative for convex constraints and `μ >= 0`.
    pub fn curvature(&self, u: &Vector, u_dot: &Vector, mu: &Vector) -> f64 {
        let mut weighted = Matrix::zeros(self.n, self.n);
        for (i, g) in self.constraints.iter().enumerate() {
            if mu[i] != 0.0 {
                weighted += g.hessian(u) * mu[i];
            }
        }
        u_dot.dot(&(weighted * u_dot))
    }
}

/// `(g)⁺_μ`: `g` when `μ > 0` or `g > 0`, otherwise 0.
pub fn positive_projection(g_val: f64, mu: f64) -> Result<f64> {
    if mu < 0.0 {
        return Err(Error::Invariant(format!(
            "negative multiplier {mu} reached the projection"
        )));
    }
    Ok(if mu > 0.0 { g_val } else { g_val.max(0.0) })
}

/// `σ = { i : μ_i <= ε_μ and g_i <= 0 }`
pub fn compute_sigma(mu: &Vector, g_vals: &Vector) -> ActiveSet {
    ActiveSet::from_indices(
        mu.iter()
            .zip(g_vals.iter())
            .enumerate()
            .filter(|(_, (&m, &g))| m <= MU_ZERO_THRESHOLD && g <= 0.0)
            .map(|(i, _)| i),
    )
}

pub fn multiplier_vector_field(
    sys: &ProjectionSystem,
    u_tilde: &Vector,
    mu: &Vector,
) -> Result<Vector> {
    check_dim("projection input", sys.n, u_tilde.len())?;
    check_dim("multipliers", sys.p(), mu.len())?;
    if let Some(bad) = mu.iter().find(|&&m| m < 0.0) {
        return Err(Error::Invariant(format!("negative multiplier {bad}")));
    }
    let g = sys.values(u_tilde);
    Ok(sys.mode_rates(&g, &compute_sigma(mu, &g)))
}

/// `S_σ = ½ Σ_{i∉σ} τ_μ,i μ̇_i²`
pub fn switched_storage(sys: &ProjectionSystem, sigma: &ActiveSet, mu_dot: &Vector) -> f64 {
    // fold from +0.0: an empty float sum is -0.0
    0.5 * (0..sys.p())
        .filter(|&i| !sigma.contains(i))
        .map(|i| sys.tau_mu[i] * mu_dot[i] * mu_dot[i])
        .fold(0.0, |a, b| a + b)
}

/// `ỹ = Σ_i μ_i ∇g_i(ũ)`
pub fn output_port(sys: &ProjectionSystem, u_tilde: &Vector, mu: &Vector) -> Result<Vector> {
    check_dim("projection input", sys.n, u_tilde.len())?;
    check_dim("multipliers", sys.p(), mu.len())?;
    let mut y = Vector::zeros(sys.n);
    for (g, &m) in sys.constraints.iter().zip(mu.iter()) {
        if m != 0.0 {
            y.axpy(m, &g.gradient(u_tilde), 1.0);
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwitchKind {
    /// `μ_i` reached zero with `g_i < 0`; the index joins `σ`.
    Activation,
    /// `g_i` rose through zero with `μ_i = 0`; the index leaves `σ`.
    Deactivation,
}

impl fmt::Display for SwitchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SwitchKind::Activation => "activation",
            SwitchKind::Deactivation => "deactivation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub time: f64,
    /// 0-based constraint index.
    pub index: usize,
    pub kind: SwitchKind,
    pub storage_before: f64,
    pub storage_after: f64,
}

/// Ordered switch events of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SwitchLedger {
    pub events: Vec<SwitchEvent>,
}

impl SwitchLedger {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
    pub fn len(&self) -> usize {
        self.events.len()
    }
    pub fn activations(&self) -> impl Iterator<Item = &SwitchEvent> {
        self.events
            .iter()
            .filter(|e| e.kind == SwitchKind::Activation)
    }
    pub fn deactivations(&self) -> impl Iterator<Item = &SwitchEvent> {
        self.events
            .iter()
            .filter(|e| e.kind == SwitchKind::Deactivation)
    }
}

/// Turns a change of active set into switch events.
///
/// Changed indices are processed in increasing order; each event's storage
/// values are taken under the active set just before and just after that
/// single index changes, all at the same `(μ, g)`.
pub fn classify_switch(
    sys: &ProjectionSystem,
    prev: &ActiveSet,
    next: &ActiveSet,
    mu: &Vector,
    g_vals: &Vector,
    t: f64,
) -> Result<Vec<SwitchEvent>> {
    check_dim("multipliers", sys.p(), mu.len())?;
    check_dim("constraint values", sys.p(), g_vals.len())?;
    let mut events = Vec::new();
    let mut current = prev.clone();
    for i in 0..sys.p() {
        let (was, is) = (prev.contains(i), next.contains(i));
        if was == is {
            continue;
        }
        let member = mu[i] <= MU_ZERO_THRESHOLD && g_vals[i] <= 0.0;
        // A consistent switch lands exactly on the membership condition; a
        // mismatch means the index crossed back within the step.
        if member != is {
            return Err(Error::StepTooLarge { t, index: i });
        }
        let before = switched_storage(sys, &current, &sys.mode_rates(g_vals, &current));
        let kind = if is {
            current.insert(i);
            SwitchKind::Activation
        } else {
            current.remove(i);
            SwitchKind::Deactivation
        };
        let after = switched_storage(sys, &current, &sys.mode_rates(g_vals, &current));
        events.push(SwitchEvent {
            time: t,
            index: i,
            kind,
            storage_before: before,
            storage_after: after,
        });
    }
    Ok(events)
}
