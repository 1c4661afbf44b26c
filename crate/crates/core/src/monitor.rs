//! Post-hoc checks of the passivity and stability certificates over recorded
//! trajectories.
//!
//! Every inequality check allows a violation budget of
//! `max(1e-8, 10 · rtol · scale)`, where `scale` is the largest magnitude of
//! the checked signal over the run. The budget is stored in each report.
//! Supplied energies come from the port-energy columns, which the integrator
//! carries as quadrature states.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{kkt_residual, ConvexProblem, KktPoint, Vector};
use crate::switched::{ActiveSet, SwitchKind};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    UnforcedDecrease,
    HybridPassivity,
    SwitchLedger,
    QuadraticNorm,
    Convergence,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Certificate::UnforcedDecrease => "unforced_decrease",
            Certificate::HybridPassivity => "hybrid_passivity",
            Certificate::SwitchLedger => "switch_ledger",
            Certificate::QuadraticNorm => "quadratic_norm",
            Certificate::Convergence => "convergence",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Passed,
    Failed,
    /// The certificate's hypothesis never occurs in the run.
    NotApplicable,
    /// The run is too short to decide.
    Inconclusive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Passed => "pass",
            Outcome::Failed => "FAIL",
            Outcome::NotApplicable => "n/a",
            Outcome::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub name: Certificate,
    /// What the check was applied to, e.g. an active set.
    pub target: String,
    pub outcome: Outcome,
    pub passed: bool,
    pub worst_violation: f64,
    /// Sample time of the worst violation.
    pub location: Option<f64>,
    pub tolerance: f64,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

impl CertificateReport {
    pub fn failed(&self) -> bool {
        self.outcome == Outcome::Failed
    }

    pub fn not_applicable(name: Certificate, target: String, detail: String) -> Self {
        Self {
            name,
            target,
            outcome: Outcome::NotApplicable,
            passed: false,
            worst_violation: 0.0,
            location: None,
            tolerance: 0.0,
            detail,
            metrics: BTreeMap::new(),
        }
    }
}

/// Violation budget for a signal of magnitude `scale`.
pub fn violation_budget(traj: &Trajectory, scale: f64) -> f64 {
    (10.0 * traj.options.tolerance() * scale).max(1e-8)
}

/// Tracks the largest violation and where it happened.
#[derive(Default)]
struct Worst {
    value: f64,
    at: Option<f64>,
}

impl Worst {
    fn see(&mut self, v: f64, t: f64) {
        if v > self.value || (self.at.is_none() && v >= self.value) {
            self.value = v.max(0.0);
            self.at = Some(t);
        }
    }
}

fn supplied(traj: &Trajectory, k: usize) -> f64 {
    let e = &traj.samples[k].energy;
    e.equality + e.inequality
}

/// Closed-loop storage never increases by more than the energy supplied.
///
/// The storage is `P̃` for runs without inequalities and the composite
/// `S̃_σ = P̃ + S_σ` otherwise. With constant exogenous inputs the supply is
/// zero and this is plain monotone decrease.
pub fn check_unforced_decrease(traj: &Trajectory) -> CertificateReport {
    let use_p = traj.dims.p == 0;
    let storage = |k: usize| {
        let s = &traj.samples[k].storage;
        if use_p {
            s.p_tilde
        } else {
            s.s_tilde
        }
    };
    let scale = (0..traj.samples.len())
        .map(|k| storage(k).abs())
        .fold(0.0, f64::max);
    let budget = violation_budget(traj, scale);
    let mut worst = Worst::default();
    for k in 1..traj.samples.len() {
        let rise = storage(k) - storage(k - 1);
        let supply = supplied(traj, k) - supplied(traj, k - 1);
        worst.see(rise - supply, traj.samples[k].t);
    }
    let outcome = if worst.value <= budget {
        Outcome::Passed
    } else {
        Outcome::Failed
    };
    CertificateReport {
        name: Certificate::UnforcedDecrease,
        target: if use_p { "P_tilde" } else { "S_tilde" }.into(),
        passed: outcome == Outcome::Passed,
        outcome,
        worst_violation: worst.value,
        location: worst.at,
        tolerance: budget,
        detail: format!(
            "storage increase beyond supplied energy over {} samples",
            traj.samples.len()
        ),
        metrics: BTreeMap::from([("scale".into(), scale)]),
    }
}

/// Revisit inequality for mode `sigma_p`: for every pair of visit start
/// times `t_i < t_j`, `S_σp(t_j) - S_σp(t_i) <= ∫ u_sᵀ y_s dt` over `[t_i, t_j]`.
pub fn check_hybrid_passivity(traj: &Trajectory, sigma_p: &ActiveSet) -> CertificateReport {
    let visits: Vec<usize> = traj
        .mode_visits()
        .into_iter()
        .filter(|(_, s)| s == sigma_p)
        .map(|(k, _)| k)
        .collect();
    if visits.len() < 2 {
        return CertificateReport::not_applicable(
            Certificate::HybridPassivity,
            sigma_p.to_string(),
            format!("mode visited {} time(s); needs a revisit", visits.len()),
        );
    }
    let s_at = |k: usize| traj.samples[k].storage.s_sigma;
    let w_at = |k: usize| traj.samples[k].energy.inequality;
    let mut scale: f64 = 0.0;
    for &k in &visits {
        scale = scale
            .max(s_at(k).abs())
            .max((w_at(k) - w_at(visits[0])).abs());
    }
    let budget = violation_budget(traj, scale);
    let mut worst = Worst::default();
    let mut pairs = 0usize;
    for (a, &i) in visits.iter().enumerate() {
        for &j in &visits[a + 1..] {
            pairs += 1;
            worst.see(s_at(j) - s_at(i) - (w_at(j) - w_at(i)), traj.samples[j].t);
        }
    }
    CertificateReport {
        name: Certificate::HybridPassivity,
        target: sigma_p.to_string(),
        outcome: if worst.value <= budget {
            Outcome::Passed
        } else {
            Outcome::Failed
        },
        passed: worst.value <= budget,
        worst_violation: worst.value,
        location: worst.at,
        tolerance: budget,
        detail: format!("{} visits, {pairs} revisit pairs", visits.len()),
        metrics: BTreeMap::from([
            ("scale".into(), scale),
            ("visits".into(), visits.len() as f64),
        ]),
    }
}

/// [`check_hybrid_passivity`] for every visited mode. When no mode is
/// revisited the result is a single not-applicable report.
pub fn check_hybrid_passivity_all(traj: &Trajectory) -> Vec<CertificateReport> {
    let mut modes: Vec<ActiveSet> = traj.mode_visits().into_iter().map(|(_, s)| s).collect();
    modes.sort();
    modes.dedup();
    let reports: Vec<_> = modes
        .iter()
        .map(|m| check_hybrid_passivity(traj, m))
        .filter(|r| r.outcome != Outcome::NotApplicable)
        .collect();
    if reports.is_empty() {
        vec![CertificateReport::not_applicable(
            Certificate::HybridPassivity,
            "all modes".into(),
            "no mode is revisited".into(),
        )]
    } else {
        reports
    }
}

/// Activations strictly lower `S_σ`, deactivations preserve it, multipliers
/// stay nonnegative, and event times are ordered within the horizon.
pub fn check_switch_ledger(traj: &Trajectory) -> CertificateReport {
    let scale = traj
        .samples
        .iter()
        .map(|s| s.storage.s_sigma.abs())
        .chain(
            traj.ledger
                .events
                .iter()
                .flat_map(|e| [e.storage_before.abs(), e.storage_after.abs()]),
        )
        .fold(0.0, f64::max);
    let budget = violation_budget(traj, scale);
    let mut worst = Worst::default();
    let mut problems = Vec::new();

    for e in &traj.ledger.events {
        let change = e.storage_after - e.storage_before;
        match e.kind {
            SwitchKind::Activation => {
                worst.see(change.max(0.0), e.time);
                if change >= 0.0 {
                    problems.push(format!(
                        "activation of {} at t={} did not lower the storage",
                        e.index + 1,
                        e.time
                    ));
                }
            }
            SwitchKind::Deactivation => worst.see(change.abs(), e.time),
        }
    }
    let mut last_t = 0.0;
    for e in &traj.ledger.events {
        if e.time < last_t || e.time > traj.options.horizon || e.time < 0.0 {
            problems.push(format!("event time {} out of order or range", e.time));
        }
        last_t = e.time;
    }
    let mut mu_neg: f64 = 0.0;
    for s in &traj.samples {
        let lowest = s.state.mu.iter().fold(0.0_f64, |a, &m| a.min(m));
        if lowest < 0.0 {
            mu_neg = mu_neg.max(-lowest);
            worst.see(-lowest, s.t);
        }
    }
    if mu_neg > 0.0 {
        problems.push(format!("negative multiplier down to {}", -mu_neg));
    }

    if problems
        .iter()
        .any(|p| !p.starts_with("negative multiplier"))
    {
        // strictness and ordering have no size; report them as unbounded
        worst.value = f64::INFINITY;
    }
    let passed = problems.is_empty() && worst.value <= budget;
    let activations = traj.ledger.activations().count();
    let deactivations = traj.ledger.deactivations().count();
    let detail = if traj.ledger.is_empty() && passed {
        "vacuous: no switch events".to_string()
    } else if problems.is_empty() {
        format!("{activations} activations, {deactivations} deactivations")
    } else {
        problems.join("; ")
    };
    CertificateReport {
        name: Certificate::SwitchLedger,
        target: "ledger".into(),
        outcome: if passed {
            Outcome::Passed
        } else {
            Outcome::Failed
        },
        passed,
        worst_violation: worst.value,
        location: worst.at,
        tolerance: budget,
        detail,
        metrics: BTreeMap::from([
            ("scale".into(), scale),
            ("activations".into(), activations as f64),
            ("deactivations".into(), deactivations as f64),
        ]),
    }
}

/// `V(μ) = ½ (μ - μ̄)ᵀ τ_μ (μ - μ̄)` is non-increasing for a run with constant
/// projection input. `mu_bar` must be an equilibrium for that input:
/// `g(ũ*) <= 0` and `μ̄_i g_i(ũ*) = 0`, within `1e-6`.
pub fn check_quadratic_norm(traj: &Trajectory, mu_bar: &Vector) -> Result<CertificateReport> {
    const OMEGA_TOL: f64 = 1e-6;
    if mu_bar.len() != traj.dims.p {
        return Err(Error::Dimension {
            context: "equilibrium multipliers",
            expected: traj.dims.p,
            got: mu_bar.len(),
        });
    }
    let first = &traj.initial().state.x;
    let drift = traj
        .samples
        .iter()
        .map(|s| (&s.state.x - first).amax())
        .fold(0.0, f64::max);
    if drift > 1e-12 * (1.0 + first.amax()) {
        return Err(Error::Invalid(format!(
            "quadratic-norm check needs a constant projection input (input drifts by {drift:e})"
        )));
    }
    let g = &traj.terminal().g;
    for i in 0..traj.dims.p {
        if mu_bar[i] < 0.0 || g[i] > OMEGA_TOL || (mu_bar[i] * g[i]).abs() > OMEGA_TOL {
            return Err(Error::Invalid(format!(
                "reference multipliers are not an equilibrium: index {} has mu={} g={}",
                i + 1,
                mu_bar[i],
                g[i]
            )));
        }
    }

    let v_of = |mu: &Vector| {
        0.5 * (0..mu.len())
            .map(|i| traj.tau_mu[i] * (mu[i] - mu_bar[i]).powi(2))
            .sum::<f64>()
    };
    let values: Vec<f64> = traj.samples.iter().map(|s| v_of(&s.state.mu)).collect();
    let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let budget = violation_budget(traj, scale);
    let mut worst = Worst::default();
    for k in 1..values.len() {
        worst.see(values[k] - values[k - 1], traj.samples[k].t);
    }
    Ok(CertificateReport {
        name: Certificate::QuadraticNorm,
        target: format!("mu_bar={:?}", mu_bar.as_slice()),
        outcome: if worst.value <= budget {
            Outcome::Passed
        } else {
            Outcome::Failed
        },
        passed: worst.value <= budget,
        worst_violation: worst.value,
        location: worst.at,
        tolerance: budget,
        detail: format!("V from {} to {}", values[0], values[values.len() - 1]),
        metrics: BTreeMap::from([
            ("scale".into(), scale),
            ("v_initial".into(), values[0]),
            ("v_terminal".into(), values[values.len() - 1]),
        ]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTolerance {
    /// Max-norm error on the primal variable.
    pub x: f64,
    /// Max KKT residual component at the terminal state.
    pub kkt: f64,
}

impl Default for ConvergenceTolerance {
    fn default() -> Self {
        Self { x: 1e-4, kkt: 1e-6 }
    }
}

/// Terminal primal error against `oracle` and terminal KKT residual.
///
/// `worst_violation` is the larger of the two normalised errors
/// `err_x / tol.x` and `kkt / tol.kkt`, so the tolerance is 1. The settling
/// time (first time after which the primal error stays below `tol.x`) is in
/// `metrics`.
pub fn check_convergence(
    traj: &Trajectory,
    problem: &ConvexProblem,
    oracle: &KktPoint,
    tol: ConvergenceTolerance,
) -> Result<CertificateReport> {
    if oracle.x_star.len() != traj.dims.n {
        return Err(Error::Dimension {
            context: "oracle primal point",
            expected: traj.dims.n,
            got: oracle.x_star.len(),
        });
    }
    let errors: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| (&s.state.x - &oracle.x_star).amax())
        .collect();
    let terminal = traj.terminal();
    let err_x = errors[errors.len() - 1];
    let residual = kkt_residual(
        problem,
        &KktPoint {
            x_star: terminal.state.x.clone(),
            lambda_star: terminal.state.lambda.clone(),
            mu_star: terminal.state.mu.clone(),
        },
    )?;
    let kkt = residual.max();
    let settling = errors
        .iter()
        .rposition(|&e| e > tol.x)
        .map_or(Some(traj.initial().t), |k| {
            traj.samples.get(k + 1).map(|s| s.t)
        });

    let ratio = (err_x / tol.x).max(kkt / tol.kkt);
    let outcome = if ratio <= 1.0 {
        Outcome::Passed
    } else {
        // still improving at the end of the run: the horizon was too short
        let k_ref = traj
            .samples
            .iter()
            .position(|s| s.t >= 0.9 * terminal.t)
            .unwrap_or(0);
        if errors.len() > 1 && err_x < errors[k_ref] {
            Outcome::Inconclusive
        } else {
            Outcome::Failed
        }
    };
    let mut metrics = BTreeMap::from([
        ("x_error".into(), err_x),
        ("kkt_residual".into(), kkt),
        ("stationarity".into(), residual.stationarity),
        ("complementarity".into(), residual.complementarity),
    ]);
    if let Some(t) = settling {
        metrics.insert("settling_time".into(), t);
    }
    Ok(CertificateReport {
        name: Certificate::Convergence,
        target: "oracle".into(),
        passed: outcome == Outcome::Passed,
        outcome,
        worst_violation: ratio,
        location: Some(terminal.t),
        tolerance: 1.0,
        detail: format!(
            "terminal |x - x*| = {err_x:e} (tol {:e}), KKT residual {kkt:e} (tol {:e})",
            tol.x, tol.kkt
        ),
        metrics,
    })
}

impl CertificateReport {
    pub fn settling_time(&self) -> Option<f64> {
        self.metrics.get("settling_time").copied()
    }
}

/// Fixed-width table, one line per report.
pub fn render_table(reports: &[CertificateReport]) -> String {
    let mut out = format!(
        "{:<18} {:<24} {:<13} {:>12} {:>12} {:>12}\n",
        "certificate", "target", "outcome", "worst", "tolerance", "at t"
    );
    for r in reports {
        let target: String = r.target.chars().take(24).collect();
        out.push_str(&format!(
            "{:<18} {:<24} {:<13} {:>12.3e} {:>12.3e} {:>12}\n",
            r.name.to_string(),
            target,
            r.outcome.to_string(),
            r.worst_violation,
            r.tolerance,
            r.location.map_or("-".into(), |t| format!("{t:.4}")),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{simulate, DrivenProjection, IntegratorOptions};
    use crate::interconnect::{ComposedSystem, FullState};
    use crate::problem::{active_set_oracle, Affine, AffineMap, Constraint, Matrix, Quadratic};
    use crate::signal::InputSignal;
    use crate::switched::ProjectionSystem;
    use std::sync::Arc;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn eq_qp() -> ComposedSystem {
        let p = ConvexProblem::quadratic(
            Quadratic::new(Matrix::identity(2, 2) * 2.0, Vector::zeros(2), 0.0).unwrap(),
            AffineMap::new(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[-2.0])).unwrap(),
            &Matrix::zeros(0, 2),
            &Vector::zeros(0),
        )
        .unwrap();
        ComposedSystem::with_diagonal_taus(p, &[1.0, 1.0], &[1.0], &[]).unwrap()
    }

    fn scalar_ineq() -> ComposedSystem {
        let p = ConvexProblem::quadratic(
            Quadratic::new(Matrix::from_element(1, 1, 2.0), v(&[-4.0]), 4.0).unwrap(),
            AffineMap::empty(1),
            &Matrix::from_element(1, 1, 1.0),
            &v(&[-1.0]),
        )
        .unwrap();
        ComposedSystem::with_diagonal_taus(p, &[1.0], &[], &[1.0]).unwrap()
    }

    fn opts(horizon: f64) -> IntegratorOptions {
        IntegratorOptions {
            horizon,
            ..Default::default()
        }
    }

    #[test]
    fn equality_run_decreases_and_converges() {
        let sys = eq_qp();
        let init = FullState::new(&sys, v(&[0.0, 0.0]), v(&[0.0]), v(&[])).unwrap();
        let traj = simulate(&sys, &init, &opts(40.0)).unwrap();
        let r = check_unforced_decrease(&traj);
        assert!(r.passed, "{r:?}");
        assert!(r.worst_violation <= 1e-8);

        let l = check_switch_ledger(&traj);
        assert!(l.passed);
        assert!(l.detail.starts_with("vacuous"));
        let h = check_hybrid_passivity_all(&traj);
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].outcome, Outcome::NotApplicable);

        let oracle = active_set_oracle(sys.problem()).unwrap();
        let c = check_convergence(
            &traj,
            sys.problem(),
            &oracle,
            ConvergenceTolerance::default(),
        )
        .unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn corrupted_sample_is_caught() {
        let sys = eq_qp();
        let init = FullState::new(&sys, v(&[0.0, 0.0]), v(&[0.0]), v(&[])).unwrap();
        let mut traj = simulate(&sys, &init, &opts(5.0)).unwrap();
        let k = traj.samples.len() / 2;
        traj.samples[k].storage.p_tilde += 1.0;
        let r = check_unforced_decrease(&traj);
        assert!(r.failed());
        assert_eq!(r.location, Some(traj.samples[k].t));
    }

    #[test]
    fn equilibrium_run_is_flat() {
        let sys = eq_qp();
        let init = FullState::new(&sys, v(&[1.0, 1.0]), v(&[-2.0]), v(&[])).unwrap();
        let traj = simulate(&sys, &init, &opts(2.0)).unwrap();
        let r = check_unforced_decrease(&traj);
        assert!(r.passed);
        assert_eq!(r.worst_violation, 0.0);
        let oracle = active_set_oracle(sys.problem()).unwrap();
        let c = check_convergence(
            &traj,
            sys.problem(),
            &oracle,
            ConvergenceTolerance::default(),
        )
        .unwrap();
        assert_eq!(c.settling_time(), Some(0.0));
    }

    #[test]
    fn inequality_run_passes_every_check() {
        let sys = scalar_ineq();
        let init = FullState::new(&sys, v(&[0.0]), v(&[]), v(&[0.0])).unwrap();
        let traj = simulate(&sys, &init, &opts(40.0)).unwrap();
        assert!(check_unforced_decrease(&traj).passed);
        assert!(check_switch_ledger(&traj).passed);
        let oracle = active_set_oracle(sys.problem()).unwrap();
        let c = check_convergence(
            &traj,
            sys.problem(),
            &oracle,
            ConvergenceTolerance::default(),
        )
        .unwrap();
        assert!(c.passed, "{c:?}");
        assert!((traj.terminal().state.x[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn short_horizon_is_inconclusive() {
        // x(t) = 2(1 - exp(-2t)) approaches the optimum monotonically
        let p = ConvexProblem::quadratic(
            Quadratic::new(Matrix::from_element(1, 1, 2.0), v(&[-4.0]), 4.0).unwrap(),
            AffineMap::empty(1),
            &Matrix::zeros(0, 1),
            &Vector::zeros(0),
        )
        .unwrap();
        let sys = ComposedSystem::with_diagonal_taus(p, &[1.0], &[], &[]).unwrap();
        let init = FullState::new(&sys, v(&[0.0]), v(&[]), v(&[])).unwrap();
        let traj = simulate(&sys, &init, &opts(1.0)).unwrap();
        let oracle = active_set_oracle(sys.problem()).unwrap();
        let c = check_convergence(
            &traj,
            sys.problem(),
            &oracle,
            ConvergenceTolerance::default(),
        )
        .unwrap();
        assert_eq!(c.outcome, Outcome::Inconclusive);
        assert!((c.metrics["x_error"] - 2.0 * (-2.0f64).exp()).abs() < 1e-9);
    }

    fn constant_projection(g: f64, tau: f64) -> DrivenProjection {
        let c: Arc<dyn Constraint> = Arc::new(Affine::new(v(&[0.0]), g));
        DrivenProjection::new(
            ProjectionSystem::new(1, vec![c], vec![tau]).unwrap(),
            InputSignal::zero(1),
        )
        .unwrap()
    }

    #[test]
    fn quadratic_norm_follows_closed_form() {
        let tau = 1.0;
        let sys = constant_projection(-1.0, tau);
        let traj = simulate(&sys, &sys.initial_state(v(&[0.5])).unwrap(), &opts(2.0)).unwrap();
        let r = check_quadratic_norm(&traj, &v(&[0.0])).unwrap();
        assert!(r.passed);
        for s in &traj.samples {
            let expected = if s.t < 0.5 * tau {
                0.5 * tau * (0.5 - s.t / tau).powi(2)
            } else {
                0.0
            };
            let got = 0.5 * tau * s.state.mu[0].powi(2);
            assert!(
                (got - expected).abs() < 1e-12,
                "t={} {got} vs {expected}",
                s.t
            );
        }
    }

    #[test]
    fn quadratic_norm_trivial_cases() {
        // at the reference point already
        let sys = constant_projection(-1.0, 1.0);
        let traj = simulate(&sys, &sys.initial_state(v(&[0.0])).unwrap(), &opts(1.0)).unwrap();
        let r = check_quadratic_norm(&traj, &v(&[0.0])).unwrap();
        assert_eq!(r.worst_violation, 0.0);
        assert_eq!(r.metrics["v_terminal"], 0.0);

        // boundary equilibrium: g = 0, μ keeps its value
        let sys = constant_projection(0.0, 1.0);
        let traj = simulate(&sys, &sys.initial_state(v(&[0.7])).unwrap(), &opts(1.0)).unwrap();
        let r = check_quadratic_norm(&traj, &v(&[0.7])).unwrap();
        assert_eq!(r.metrics["v_initial"], 0.0);
        assert_eq!(r.metrics["v_terminal"], 0.0);
    }

    #[test]
    fn quadratic_norm_rejects_non_equilibrium_reference() {
        let sys = constant_projection(-1.0, 1.0);
        let traj = simulate(&sys, &sys.initial_state(v(&[0.5])).unwrap(), &opts(1.0)).unwrap();
        assert!(check_quadratic_norm(&traj, &v(&[0.3])).is_err());
        let sys = constant_projection(0.5, 1.0);
        let traj = simulate(&sys, &sys.initial_state(v(&[0.5])).unwrap(), &opts(1.0)).unwrap();
        assert!(check_quadratic_norm(&traj, &v(&[0.0])).is_err());
    }

    #[test]
    fn tampered_ledger_fails() {
        let sys = constant_projection(-1.0, 1.0);
        let mut traj = simulate(&sys, &sys.initial_state(v(&[0.5])).unwrap(), &opts(1.0)).unwrap();
        assert!(check_switch_ledger(&traj).passed);
        let e = &mut traj.ledger.events[0];
        e.storage_after = e.storage_before;
        let r = check_switch_ledger(&traj);
        assert!(r.failed(), "{r:?}");
    }

    #[test]
    fn table_has_a_row_per_report() {
        let sys = eq_qp();
        let init = FullState::new(&sys, v(&[0.0, 0.0]), v(&[0.0]), v(&[])).unwrap();
        let traj = simulate(&sys, &init, &opts(1.0)).unwrap();
        let reports = vec![check_unforced_decrease(&traj), check_switch_ledger(&traj)];
        let t = render_table(&reports);
        assert_eq!(t.lines().count(), 3);
        assert!(t.contains("unforced_decrease"));
    }
}
