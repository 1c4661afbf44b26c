//! Event-exact time stepping of the hybrid multiplier dynamics.
//!
//! Within a mode the vector field is smooth and is advanced with the
//! Dormand–Prince 5(4) pair. At the end of every step the armed event
//! functions are checked: `μ_i` for indices outside `σ`, `g_i(x)` for indices
//! inside. When one has changed sign, the step length is bisected on the
//! exact-length step until the earliest crossing is bracketed to `event_tol`;
//! the state at the right end of the bracket is the event state. Multipliers
//! that crossed zero are clamped to exactly zero, `σ` is recomputed from
//! scratch, and the switch is classified into the ledger.
//!
//! Port energies are carried as three extra quadrature states so the
//! passivity checks integrate the supply rates at the integrator's accuracy.

use serde::{Deserialize, Serialize};

use crate::bm::krasovskii_storage;
use crate::error::{Error, Result};
use crate::interconnect::{
    mode_vector_field, port_power, ComposedSystem, FullState, PortPower, Rates,
};
use crate::problem::Vector;
use crate::signal::InputSignal;
use crate::switched::{
    classify_switch, compute_sigma, switched_storage, ActiveSet, ProjectionSystem, SwitchEvent,
    SwitchKind, SwitchLedger,
};
use crate::trajectory::{Dims, Sample, StorageValues, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Width of the final bracket around an event time.
    pub event_tol: f64,
    pub horizon: f64,
    pub record_stride: f64,
    pub rtol: f64,
    pub atol: f64,
    /// With `false` every step has length `dt_max` (apart from record and
    /// horizon boundaries) and the error estimate is ignored.
    pub adaptive: bool,
    /// Upper bound on switch events per run; guards against Zeno chattering.
    pub max_events: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            dt_min: 1e-12,
            dt_max: 0.1,
            event_tol: 1e-10,
            horizon: 50.0,
            record_stride: 0.1,
            rtol: 1e-10,
            atol: 1e-12,
            adaptive: true,
            max_events: 10_000,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Invalid(format!("integrator options: {msg}")));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad("need 0 < dt_min <= dt_init <= dt_max");
        }
        if !(self.event_tol > 0.0) {
            return bad("event_tol must be positive");
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be finite and >= 0");
        }
        if !(self.record_stride > 0.0) {
            return bad("record_stride must be positive");
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("rtol and atol must be positive");
        }
        Ok(())
    }

    /// The relative tolerance that drives the monitors' violation budgets.
    pub fn tolerance(&self) -> f64 {
        self.rtol
    }
}

/// Everything the integrator and the monitors need at one point of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub rates: Rates,
    pub g: Vector,
    pub storage: StorageValues,
    pub power: PortPower,
}

/// A hybrid system with multiplier projection that [`simulate`] can drive.
pub trait HybridModel {
    fn dims(&self) -> Dims;
    fn projection(&self) -> &ProjectionSystem;
    /// Integrated coordinates, in the order used by `pack`/`unpack`.
    fn state_len(&self) -> usize;
    fn pack(&self, state: &FullState) -> Vec<f64>;
    fn unpack(&self, t: f64, y: &[f64], sigma: &ActiveSet) -> FullState;
    fn evaluate(&self, t: f64, state: &FullState) -> Result<Evaluation>;
    /// Rates of the integrated coordinates.
    fn pack_rates(&self, rates: &Rates) -> Vec<f64>;
}

impl HybridModel for ComposedSystem {
    fn dims(&self) -> Dims {
        Dims {
            n: self.problem().n(),
            m: self.problem().m(),
            p: self.problem().p(),
        }
    }

    fn projection(&self) -> &ProjectionSystem {
        self.proj()
    }

    fn state_len(&self) -> usize {
        let d = self.dims();
        d.n + d.m + d.p
    }

    fn pack(&self, s: &FullState) -> Vec<f64> {
        s.x.iter()
            .chain(s.lambda.iter())
            .chain(s.mu.iter())
            .copied()
            .collect()
    }

    fn unpack(&self, _t: f64, y: &[f64], sigma: &ActiveSet) -> FullState {
        let d = self.dims();
        FullState {
            x: Vector::from_column_slice(&y[..d.n]),
            lambda: Vector::from_column_slice(&y[d.n..d.n + d.m]),
            mu: Vector::from_column_slice(&y[d.n + d.m..d.n + d.m + d.p]),
            sigma: sigma.clone(),
        }
    }

    fn evaluate(&self, t: f64, state: &FullState) -> Result<Evaluation> {
        let v = self.input().value(t);
        let v_dot = self.input().rate(t);
        let rates = mode_vector_field(self, state, &v)?;
        let p_tilde = krasovskii_storage(self.bm(), &rates.x_dot, &rates.lambda_dot);
        let s_sigma = switched_storage(self.proj(), &state.sigma, &rates.mu_dot);
        let power = port_power(self, state, &rates, &v_dot);
        Ok(Evaluation {
            g: self.proj().values(&state.x),
            storage: StorageValues {
                p_tilde,
                s_sigma,
                s_tilde: p_tilde + s_sigma,
            },
            power,
            rates,
        })
    }

    fn pack_rates(&self, r: &Rates) -> Vec<f64> {
        r.x_dot
            .iter()
            .chain(r.lambda_dot.iter())
            .chain(r.mu_dot.iter())
            .copied()
            .collect()
    }
}

/// The projection system on its own, driven by a prescribed input `ũ(t)`.
///
/// The recorded `x` is `ũ(t)`; there are no equality multipliers, `P̃ = 0`,
/// and only the inequality port carries power.
#[derive(Debug, Clone)]
pub struct DrivenProjection {
    proj: ProjectionSystem,
    input: InputSignal,
}

impl DrivenProjection {
    pub fn new(proj: ProjectionSystem, input: InputSignal) -> Result<Self> {
        if input.dim() != proj.n() {
            return Err(Error::Dimension {
                context: "projection input signal",
                expected: proj.n(),
                got: input.dim(),
            });
        }
        Ok(Self { proj, input })
    }

    pub fn input(&self) -> &InputSignal {
        &self.input
    }

    /// State at `t = 0` with `σ` computed from `(μ, g(ũ(0)))`.
    pub fn initial_state(&self, mut mu: Vector) -> Result<FullState> {
        if mu.len() != self.proj.p() {
            return Err(Error::Dimension {
                context: "initial multipliers",
                expected: self.proj.p(),
                got: mu.len(),
            });
        }
        if mu.iter().any(|&m| !(m >= 0.0)) {
            return Err(Error::Invalid("initial multipliers must be >= 0".into()));
        }
        let x = self.input.value(0.0);
        let sigma = compute_sigma(&mu, &self.proj.values(&x));
        for i in sigma.iter() {
            mu[i] = 0.0;
        }
        Ok(FullState {
            x,
            lambda: Vector::zeros(0),
            mu,
            sigma,
        })
    }
}

impl HybridModel for DrivenProjection {
    fn dims(&self) -> Dims {
        Dims {
            n: self.proj.n(),
            m: 0,
            p: self.proj.p(),
        }
    }
    fn projection(&self) -> &ProjectionSystem {
        &self.proj
    }
    fn state_len(&self) -> usize {
        self.proj.p()
    }
    fn pack(&self, s: &FullState) -> Vec<f64> {
        s.mu.iter().copied().collect()
    }
    fn unpack(&self, t: f64, y: &[f64], sigma: &ActiveSet) -> FullState {
        FullState {
            x: self.input.value(t),
            lambda: Vector::zeros(0),
            mu: Vector::from_column_slice(y),
            sigma: sigma.clone(),
        }
    }
    fn evaluate(&self, t: f64, state: &FullState) -> Result<Evaluation> {
        let u_dot = self.input.rate(t);
        let g = self.proj.values(&state.x);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation(
                "inequality oracle returned a non-finite value".into(),
            ));
        }
        let mu_dot = self.proj.mode_rates(&g, &state.sigma);
        let y_dot = self.proj.output_rate(&state.x, &u_dot, &state.mu, &mu_dot);
        let s_sigma = switched_storage(&self.proj, &state.sigma, &mu_dot);
        Ok(Evaluation {
            storage: StorageValues {
                p_tilde: 0.0,
                s_sigma,
                s_tilde: s_sigma,
            },
            power: PortPower {
                equality: 0.0,
                inequality: u_dot.dot(&y_dot),
                external: 0.0,
            },
            rates: Rates {
                x_dot: u_dot,
                lambda_dot: Vector::zeros(0),
                mu_dot,
            },
            g,
        })
    }
    fn pack_rates(&self, r: &Rates) -> Vec<f64> {
        r.mu_dot.iter().copied().collect()
    }
}

/// One armed event function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventFunction {
    pub index: usize,
    pub mu: f64,
    pub g: f64,
    /// `Activation`: watching `μ_i` fall through zero (index outside `σ`).
    /// `Deactivation`: watching `g_i` rise through zero (index inside `σ`).
    pub watches: SwitchKind,
}

impl EventFunction {
    pub fn value(&self) -> f64 {
        match self.watches {
            SwitchKind::Activation => self.mu,
            SwitchKind::Deactivation => self.g,
        }
    }

    /// Whether the watched function has crossed zero in its switching
    /// direction.
    pub fn triggered(&self) -> bool {
        match self.watches {
            SwitchKind::Activation => self.mu < 0.0,
            SwitchKind::Deactivation => self.g > 0.0,
        }
    }
}

pub fn event_functions<M: HybridModel + ?Sized>(
    model: &M,
    state: &FullState,
) -> Vec<EventFunction> {
    let g = model.projection().values(&state.x);
    (0..model.dims().p)
        .map(|i| EventFunction {
            index: i,
            mu: state.mu[i],
            g: g[i],
            watches: if state.sigma.contains(i) {
                SwitchKind::Deactivation
            } else {
                SwitchKind::Activation
            },
        })
        .collect()
}

const ENERGY_LEN: usize = 3;

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Augmented right-hand side: model rates followed by port powers.
fn augmented_rhs<M: HybridModel + ?Sized>(
    model: &M,
    t: f64,
    y: &[f64],
    sigma: &ActiveSet,
) -> Result<Vec<f64>> {
    let k = model.state_len();
    let state = model.unpack(t, &y[..k], sigma);
    let ev = model.evaluate(t, &state)?;
    let mut out = model.pack_rates(&ev.rates);
    out.extend([ev.power.equality, ev.power.inequality, ev.power.external]);
    Ok(out)
}

/// One Dormand–Prince step of length `h`; returns the 5th-order solution and
/// the embedded error estimate.
fn dp5_step<M: HybridModel + ?Sized>(
    model: &M,
    t: f64,
    y: &[f64],
    sigma: &ActiveSet,
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    let mut stage = vec![0.0; len];
    for s in 0..7 {
        stage.copy_from_slice(y);
        for (j, a) in A[s].iter().enumerate() {
            if *a != 0.0 {
                for (st, kj) in stage.iter_mut().zip(&k[j]) {
                    *st += h * a * kj;
                }
            }
        }
        match augmented_rhs(model, t + C[s] * h, &stage, sigma) {
            Ok(ks) => k.push(ks),
            // non-finite stage: let the caller shrink the step or report divergence
            Err(Error::Evaluation(_)) if !all_finite(&stage) || !all_finite(y) => {
                return Ok((vec![f64::NAN; len], vec![f64::NAN; len]));
            }
            Err(e) => return Err(e),
        }
    }
    let mut y_new = y.to_vec();
    let mut err = vec![0.0; len];
    for s in 0..7 {
        for i in 0..len {
            y_new[i] += h * B[s] * k[s][i];
            err[i] += h * E[s] * k[s][i];
        }
    }
    Ok((y_new, err))
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], opts: &IntegratorOptions) -> f64 {
    let sum: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / y.len().max(1) as f64).sqrt()
}

fn any_triggered<M: HybridModel + ?Sized>(model: &M, t: f64, y: &[f64], sigma: &ActiveSet) -> bool {
    let state = model.unpack(t, &y[..model.state_len()], sigma);
    event_functions(model, &state)
        .iter()
        .any(EventFunction::triggered)
}

fn all_finite(y: &[f64]) -> bool {
    y.iter().all(|v| v.is_finite() && v.abs() < 1e150)
}

/// Result of attempting one step from `t`.
enum Advance {
    /// No event inside the step.
    Smooth { y: Vec<f64>, err: f64 },
    /// An event was bracketed; `h` is the right end of the bracket.
    Event { h: f64, y: Vec<f64> },
}

fn advance<M: HybridModel + ?Sized>(
    model: &M,
    t: f64,
    y: &[f64],
    sigma: &ActiveSet,
    h: f64,
    opts: &IntegratorOptions,
) -> Result<Advance> {
    let (y_new, err_vec) = dp5_step(model, t, y, sigma, h)?;
    let err = error_norm(y, &y_new, &err_vec, opts);
    if !all_finite(&y_new) || !any_triggered(model, t + h, &y_new, sigma) {
        return Ok(Advance::Smooth { y: y_new, err });
    }
    if opts.adaptive && err > 1.0 {
        // refine the step before locating anything inside it
        return Ok(Advance::Smooth { y: y_new, err });
    }
    let (mut lo, mut hi) = (0.0, h);
    let mut y_hi = y_new;
    while hi - lo > opts.event_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (y_mid, _) = dp5_step(model, t, y, sigma, mid)?;
        if !all_finite(&y_mid) {
            return Err(Error::EventIsolation {
                t: t + mid,
                reason: "non-finite state while bracketing an event".into(),
            });
        }
        if any_triggered(model, t + mid, &y_mid, sigma) {
            hi = mid;
            y_hi = y_mid;
        } else {
            lo = mid;
        }
    }
    Ok(Advance::Event { h: hi, y: y_hi })
}

/// Clamps crossed multipliers, recomputes `σ`, and classifies the switch.
/// Returns the new active set, the events, and the clamped coordinates.
fn apply_event<M: HybridModel + ?Sized>(
    model: &M,
    t: f64,
    y: &mut [f64],
    sigma: &ActiveSet,
) -> Result<(ActiveSet, Vec<SwitchEvent>)> {
    let k = model.state_len();
    let mut state = model.unpack(t, &y[..k], sigma);
    for i in 0..state.mu.len() {
        if !sigma.contains(i) && state.mu[i] < 0.0 {
            state.mu[i] = 0.0;
        }
    }
    let g = model.projection().values(&state.x);
    let next = compute_sigma(&state.mu, &g);
    for i in next.iter() {
        state.mu[i] = 0.0;
    }
    let events = if next == *sigma {
        Vec::new()
    } else {
        classify_switch(model.projection(), sigma, &next, &state.mu, &g, t)?
    };
    y[..k].copy_from_slice(&model.pack(&state));
    Ok((next, events))
}

fn record<M: HybridModel + ?Sized>(
    model: &M,
    t: f64,
    y: &[f64],
    sigma: &ActiveSet,
) -> Result<Sample> {
    let k = model.state_len();
    let state = model.unpack(t, &y[..k], sigma);
    let ev = model.evaluate(t, &state)?;
    Ok(Sample {
        t,
        state,
        g: ev.g,
        rates: ev.rates,
        storage: ev.storage,
        power: ev.power,
        energy: PortPower {
            equality: y[k],
            inequality: y[k + 1],
            external: y[k + 2],
        },
    })
}

/// Outcome of [`step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: FullState,
    pub events: Vec<SwitchEvent>,
}

/// Advances `state` from `t` by exactly `dt` with fixed-length
/// Dormand–Prince steps, stopping at each event, applying it, and re-stepping
/// the remainder.
pub fn step<M: HybridModel + ?Sized>(
    model: &M,
    t: f64,
    state: &FullState,
    dt: f64,
    opts: &IntegratorOptions,
) -> Result<StepOutcome> {
    opts.validate()?;
    if !(dt >= opts.dt_min && dt <= opts.dt_max) {
        return Err(Error::Invalid(format!(
            "step length {dt} outside [{}, {}]",
            opts.dt_min, opts.dt_max
        )));
    }
    let fixed = IntegratorOptions {
        adaptive: false,
        ..*opts
    };
    let mut y = model.pack(state);
    y.extend([0.0; ENERGY_LEN]);
    let mut sigma = state.sigma.clone();
    let mut events = Vec::new();
    let (mut now, end) = (t, t + dt);
    while now < end {
        let h = end - now;
        match advance(model, now, &y, &sigma, h, &fixed)? {
            Advance::Smooth { y: y_new, .. } => {
                if !all_finite(&y_new) {
                    return Err(Error::Divergence {
                        t: end,
                        last_valid_t: now,
                        last_valid_state: y[..model.state_len()].to_vec(),
                    });
                }
                y = y_new;
                now = end;
            }
            Advance::Event { h, y: mut y_e } => {
                now = if h >= end - now { end } else { now + h };
                let (next, ev) = apply_event(model, now, &mut y_e, &sigma)?;
                sigma = next;
                events.extend(ev);
                if events.len() > opts.max_events {
                    return Err(Error::EventIsolation {
                        t: now,
                        reason: "too many switch events within one step".into(),
                    });
                }
                y = y_e;
            }
        }
    }
    Ok(StepOutcome {
        state: model.unpack(end, &y[..model.state_len()], &sigma),
        events,
    })
}

/// Integrates from `t = 0` to `opts.horizon`.
///
/// Samples are recorded at every multiple of `record_stride`, at the horizon,
/// and on both sides of every switch.
pub fn simulate<M: HybridModel + ?Sized>(
    model: &M,
    initial: &FullState,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let dims = model.dims();
    if initial.mu.len() != dims.p || initial.x.len() != dims.n || initial.lambda.len() != dims.m {
        return Err(Error::Invalid(
            "initial state has the wrong dimensions".into(),
        ));
    }
    if initial.mu.iter().any(|&m| !(m >= 0.0)) {
        return Err(Error::Invalid("initial multipliers must be >= 0".into()));
    }

    let mut y = model.pack(initial);
    y.extend([0.0; ENERGY_LEN]);
    let mut sigma = initial.sigma.clone();
    let (next, _) = apply_event(model, 0.0, &mut y, &sigma)?;
    sigma = next;

    let mut samples = vec![record(model, 0.0, &y, &sigma)?];
    let mut ledger = SwitchLedger::default();
    let mut t = 0.0;
    let mut h = if opts.adaptive {
        opts.dt_init
    } else {
        opts.dt_max
    };
    let mut k_rec: u64 = 1;

    let diverged = |t_bad: f64, t_ok: f64, y_ok: &[f64]| Error::Divergence {
        t: t_bad,
        last_valid_t: t_ok,
        last_valid_state: y_ok[..model.state_len()].to_vec(),
    };

    while t < opts.horizon {
        let t_rec = (k_rec as f64 * opts.record_stride).min(opts.horizon);
        let h_try = h.min(opts.dt_max).min(t_rec - t);
        let hits_record = h_try >= t_rec - t;

        match advance(model, t, &y, &sigma, h_try, opts)? {
            Advance::Smooth { y: y_new, err } => {
                let finite = all_finite(&y_new);
                if opts.adaptive && (err > 1.0 || !finite) {
                    let factor = if finite {
                        (0.9 * err.powf(-0.2)).max(0.2)
                    } else {
                        0.25
                    };
                    h = h_try * factor;
                    if h < opts.dt_min {
                        return Err(diverged(t + h_try, t, &y));
                    }
                    continue;
                }
                if !finite {
                    return Err(diverged(t + h_try, t, &y));
                }
                y = y_new;
                if hits_record {
                    t = t_rec;
                    samples.push(record(model, t, &y, &sigma)?);
                    k_rec += 1;
                } else {
                    t += h_try;
                }
                if opts.adaptive {
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    let proposed = h_try * factor;
                    // a step cut short by a record boundary says little about the next one
                    h = if hits_record {
                        h.max(proposed)
                    } else {
                        proposed
                    };
                    h = h.clamp(opts.dt_min, opts.dt_max);
                } else {
                    h = opts.dt_max;
                }
            }
            Advance::Event { h: h_e, y: mut y_e } => {
                let t_e = if h_e >= t_rec - t { t_rec } else { t + h_e };
                let (next, events) = apply_event(model, t_e, &mut y_e, &sigma)?;
                if !events.is_empty() {
                    samples.push(record(model, t_e, &y_e, &sigma)?);
                    samples.push(record(model, t_e, &y_e, &next)?);
                }
                ledger.events.extend(events);
                if ledger.events.len() > opts.max_events {
                    return Err(Error::EventIsolation {
                        t: t_e,
                        reason: format!("more than {} switch events", opts.max_events),
                    });
                }
                sigma = next;
                y = y_e;
                if t_e == t_rec {
                    if samples.last().map(|s| s.t) != Some(t_e) {
                        samples.push(record(model, t_e, &y, &sigma)?);
                    }
                    k_rec += 1;
                }
                t = t_e;
            }
        }
    }

    Ok(Trajectory {
        dims,
        tau_mu: model.projection().tau_mu().to_vec(),
        options: *opts,
        samples,
        ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Affine, AffineMap, Constraint, ConvexProblem, Matrix, Quadratic};
    use std::sync::Arc;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
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

    fn equality_qp() -> ComposedSystem {
        let p = ConvexProblem::quadratic(
            Quadratic::new(Matrix::identity(2, 2) * 2.0, Vector::zeros(2), 0.0).unwrap(),
            AffineMap::new(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[-2.0])).unwrap(),
            &Matrix::zeros(0, 2),
            &Vector::zeros(0),
        )
        .unwrap();
        ComposedSystem::with_diagonal_taus(p, &[1.0, 1.0], &[1.0], &[]).unwrap()
    }

    /// Projection of a single constraint with constant value `g`.
    fn constant_constraint(g: f64, tau: f64) -> DrivenProjection {
        let c: Arc<dyn Constraint> = Arc::new(Affine::new(v(&[0.0]), g));
        let proj = ProjectionSystem::new(1, vec![c], vec![tau]).unwrap();
        DrivenProjection::new(proj, InputSignal::zero(1)).unwrap()
    }

    #[test]
    fn activation_time_of_linear_decay() {
        // μ(t) = 0.5 - t/τ hits zero at t = 0.5 τ
        for &tau in &[1.0, 2.5] {
            let sys = constant_constraint(-1.0, tau);
            let init = sys.initial_state(v(&[0.5])).unwrap();
            let opts = IntegratorOptions {
                horizon: 2.0 * tau,
                ..Default::default()
            };
            let traj = simulate(&sys, &init, &opts).unwrap();
            assert_eq!(traj.ledger.len(), 1);
            let e = &traj.ledger.events[0];
            assert_eq!(e.kind, SwitchKind::Activation);
            assert!(
                (e.time - 0.5 * tau).abs() <= opts.event_tol,
                "{} vs {}",
                e.time,
                0.5 * tau
            );
            assert_eq!(traj.terminal().state.mu[0], 0.0);
            assert!(traj.samples.iter().all(|s| s.state.mu[0] >= 0.0));
        }
    }

    #[test]
    fn clamped_multiplier_stays_zero() {
        let sys = constant_constraint(-1.0, 1.0);
        let init = sys.initial_state(v(&[0.0])).unwrap();
        let traj = simulate(
            &sys,
            &init,
            &IntegratorOptions {
                horizon: 3.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(traj.ledger.is_empty());
        assert!(traj.samples.iter().all(|s| s.state.mu[0] == 0.0));
    }

    #[test]
    fn event_functions_arm_by_mode() {
        let sys = scalar_ineq();
        let st = FullState::new(&sys, v(&[0.0]), v(&[]), v(&[0.0])).unwrap();
        let ef = event_functions(&sys, &st);
        assert_eq!(ef[0].watches, SwitchKind::Deactivation);
        assert_eq!(ef[0].value(), -1.0);
        let st = FullState::new(&sys, v(&[0.0]), v(&[]), v(&[0.3])).unwrap();
        let ef = event_functions(&sys, &st);
        assert_eq!(ef[0].watches, SwitchKind::Activation);
        assert_eq!(ef[0].value(), 0.3);
        // falling μ with g > 0 never triggers: μ̇ = g/τ > 0
        let st = FullState::new(&sys, v(&[3.0]), v(&[]), v(&[0.3])).unwrap();
        assert!(!event_functions(&sys, &st)[0].triggered());
    }

    #[test]
    fn scalar_inequality_converges_to_kkt_point() {
        let sys = scalar_ineq();
        let init = FullState::new(&sys, v(&[0.0]), v(&[]), v(&[0.0])).unwrap();
        let traj = simulate(
            &sys,
            &init,
            &IntegratorOptions {
                horizon: 40.0,
                ..Default::default()
            },
        )
        .unwrap();
        let end = &traj.terminal().state;
        assert!((end.x[0] - 1.0).abs() < 1e-4);
        assert!((end.mu[0] - 2.0).abs() < 1e-4);
        // x overshoots 1 first, deactivating the clamp
        assert_eq!(traj.ledger.events[0].kind, SwitchKind::Deactivation);
    }

    #[test]
    fn equality_qp_converges() {
        let sys = equality_qp();
        let init = FullState::new(&sys, v(&[0.0, 0.0]), v(&[0.0]), v(&[])).unwrap();
        let traj = simulate(
            &sys,
            &init,
            &IntegratorOptions {
                horizon: 40.0,
                ..Default::default()
            },
        )
        .unwrap();
        let end = &traj.terminal().state;
        assert!((&end.x - v(&[1.0, 1.0])).amax() < 1e-8);
        assert!((end.lambda[0] + 2.0).abs() < 1e-8);
        assert!(traj.ledger.is_empty());
    }

    #[test]
    fn zero_horizon_keeps_only_the_initial_sample() {
        let sys = equality_qp();
        let init = FullState::new(&sys, v(&[0.0, 0.0]), v(&[0.0]), v(&[])).unwrap();
        let traj = simulate(
            &sys,
            &init,
            &IntegratorOptions {
                horizon: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.samples[0].t, 0.0);
    }

    #[test]
    fn fixed_step_without_constraints_matches_plain_dp5() {
        // one step on the equality-only problem is just the smooth integrator
        let sys = equality_qp();
        let init = FullState::new(&sys, v(&[0.3, -0.2]), v(&[0.1]), v(&[])).unwrap();
        let opts = IntegratorOptions::default();
        let out = step(&sys, 0.0, &init, 0.05, &opts).unwrap();
        assert!(out.events.is_empty());
        let mut y = sys.pack(&init);
        y.extend([0.0; 3]);
        let (y_new, _) = dp5_step(&sys, 0.0, &y, &init.sigma, 0.05).unwrap();
        assert_eq!(sys.pack(&out.state), y_new[..3].to_vec());
    }

    #[test]
    fn step_reports_events_and_restarts() {
        let sys = constant_constraint(-1.0, 1.0);
        let init = sys.initial_state(v(&[0.05])).unwrap();
        let out = step(&sys, 0.0, &init, 0.1, &IntegratorOptions::default()).unwrap();
        assert_eq!(out.events.len(), 1);
        assert!((out.events[0].time - 0.05).abs() <= 1e-10);
        assert_eq!(out.state.mu[0], 0.0);
        assert_eq!(out.state.sigma, ActiveSet::full(1));
    }

    /// Claims to be convex but has gradient -x³, so ẋ = x³ blows up at t = 1/2.
    #[derive(Debug)]
    struct Broken;

    impl crate::problem::Objective for Broken {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &Vector) -> f64 {
            -x[0].powi(4) / 4.0
        }
        fn gradient(&self, x: &Vector) -> Vector {
            v(&[-x[0].powi(3)])
        }
        fn hessian(&self, x: &Vector) -> Matrix {
            Matrix::from_element(1, 1, -3.0 * x[0] * x[0])
        }
    }

    #[test]
    fn divergence_is_reported() {
        let p = ConvexProblem::new(Arc::new(Broken), AffineMap::empty(1), vec![]).unwrap();
        let sys = ComposedSystem::with_diagonal_taus(p, &[1.0], &[], &[]).unwrap();
        let init = FullState::new(&sys, v(&[1.0]), v(&[]), v(&[])).unwrap();
        let r = simulate(
            &sys,
            &init,
            &IntegratorOptions {
                horizon: 1.0,
                ..Default::default()
            },
        );
        match r {
            Err(Error::Divergence {
                last_valid_t,
                last_valid_state,
                ..
            }) => {
                assert!(last_valid_t < 0.5 && last_valid_t > 0.49);
                assert!(last_valid_state[0].is_finite());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn options_are_validated() {
        let bad = IntegratorOptions {
            dt_min: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(IntegratorOptions {
            horizon: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(IntegratorOptions::default().validate().is_ok());
    }
}
