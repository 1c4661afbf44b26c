//! Multi-zone building energy management: the steady-state RC thermal
//! network, the social-welfare problem over zone temperatures and supply,
//! its primal-dual dynamics, and time-of-use priced daily runs.
//!
//! The primal variable is ordered `(T_1, …, T_N, q)`. Inequalities are the
//! `N` lower comfort bounds followed by the `N` upper bounds, so multiplier
//! `i` (0-based) is `μ_l[i]` for `i < N` and `μ_h[i - N]` otherwise.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::integrator::{simulate, IntegratorOptions};
use crate::interconnect::{ComposedSystem, FullState};
use crate::monitor::{check_convergence, CertificateReport, ConvergenceTolerance, Outcome};
use crate::problem::{
    active_set_oracle, AffineMap, ConvexProblem, KktPoint, Matrix, Quadratic, Vector,
};
use crate::switched::MU_ZERO_THRESHOLD;
use crate::trajectory::Trajectory;

/// Steady-state thermal network. Units: °C, kW, °C/kW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalNetwork {
    /// Zone capacitances (kWh/°C). Only the steady state enters the
    /// welfare problem, so these are carried for reporting.
    pub capacitance: Vec<f64>,
    /// Symmetric inter-zone resistances; 0 means no coupling.
    pub r_zone: Vec<Vec<f64>>,
    /// Zone-to-ambient resistances `R_i0`.
    pub r_amb: Vec<f64>,
    pub t_inf: f64,
    /// Internal heat gains.
    pub d: Vec<f64>,
    /// Conversion from consumption to demand.
    pub theta: f64,
}

impl ThermalNetwork {
    /// `n` identical zones in a chain: `R_i0 = 11.5`, `T∞ = 30`, `d_i = 0.5`,
    /// `θ = 3`, adjacent zones coupled through `R = 20`.
    pub fn reference(n: usize) -> Self {
        let mut r_zone = vec![vec![0.0; n]; n];
        for i in 1..n {
            r_zone[i - 1][i] = 20.0;
            r_zone[i][i - 1] = 20.0;
        }
        Self {
            capacitance: vec![2.0; n],
            r_zone,
            r_amb: vec![11.5; n],
            t_inf: 30.0,
            d: vec![0.5; n],
            theta: 3.0,
        }
    }

    pub fn zones(&self) -> usize {
        self.r_amb.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.zones();
        if n == 0 {
            return Err(Error::Invalid(
                "thermal network needs at least one zone".into(),
            ));
        }
        check_dim("zone capacitances", n, self.capacitance.len())?;
        check_dim("heat gains", n, self.d.len())?;
        check_dim("inter-zone resistance rows", n, self.r_zone.len())?;
        for (i, row) in self.r_zone.iter().enumerate() {
            check_dim("inter-zone resistance columns", n, row.len())?;
            for (j, &r) in row.iter().enumerate() {
                if !(r >= 0.0 && r.is_finite()) || r != self.r_zone[j][i] {
                    return Err(Error::Invalid(format!(
                        "inter-zone resistance ({},{}) must be symmetric and >= 0",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        if let Some(i) = self.r_amb.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Invalid(format!(
                "ambient resistance of zone {} must be > 0",
                i + 1
            )));
        }
        if let Some(i) = self.capacitance.iter().position(|&c| !(c > 0.0)) {
            return Err(Error::Invalid(format!(
                "capacitance of zone {} must be > 0",
                i + 1
            )));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::Invalid("conversion factor theta must be > 0".into()));
        }
        if !self.t_inf.is_finite() || self.d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(
                "ambient temperature and heat gains must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Steady-state heat extracted from every zone, summed and scaled by θ.
    /// Used to cross-check [`steady_state_constraint`].
    pub fn total_demand(&self, t: &[f64]) -> f64 {
        let n = self.zones();
        let mut total = 0.0;
        for i in 0..n {
            let mut zone = (self.t_inf - t[i]) / self.r_amb[i] + self.d[i];
            for j in 0..n {
                if self.r_zone[i][j] > 0.0 {
                    zone += (t[j] - t[i]) / self.r_zone[i][j];
                }
            }
            total += zone;
        }
        self.theta * total
    }
}

/// Comfort utilities `U_i(T_i) = b_i - γ_i (T_i - T_ref,i)²` and generation
/// cost `U(q) = ρ₁q² + ρ₂q + ρ₃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareParams {
    pub gamma: Vec<f64>,
    pub t_ref: Vec<f64>,
    pub b_util: Vec<f64>,
    pub rho: [f64; 3],
    pub t_min: Vec<f64>,
    pub t_max: Vec<f64>,
}

impl WelfareParams {
    /// `γ = 1`, `T_ref = 20.5`, `b = 40`, `ρ = (0.5, 0, 0)`, bounds `[18, 24]`.
    pub fn reference(n: usize) -> Self {
        Self {
            gamma: vec![1.0; n],
            t_ref: vec![20.5; n],
            b_util: vec![40.0; n],
            rho: [0.5, 0.0, 0.0],
            t_min: vec![18.0; n],
            t_max: vec![24.0; n],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_dim("comfort weights", n, self.gamma.len())?;
        check_dim("reference temperatures", n, self.t_ref.len())?;
        check_dim("utility offsets", n, self.b_util.len())?;
        check_dim("lower comfort bounds", n, self.t_min.len())?;
        check_dim("upper comfort bounds", n, self.t_max.len())?;
        if let Some(i) = self.gamma.iter().position(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::Invalid(format!(
                "comfort weight of zone {} must be > 0",
                i + 1
            )));
        }
        if !(self.rho[0] > 0.0) || self.rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::Invalid("generation cost needs rho1 > 0".into()));
        }
        for i in 0..n {
            if !(self.t_min[i] < self.t_max[i]) {
                return Err(Error::Invalid(format!(
                    "zone {} comfort bounds need T_min < T_max",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Generation cost scaled by the price multiplier `π`:
    /// `ρ₁ → π ρ₁`, `ρ₂ → π ρ₂`.
    pub fn at_price(&self, price: f64) -> Self {
        let mut out = self.clone();
        out.rho[0] *= price;
        out.rho[1] *= price;
        out
    }
}

/// Piecewise-constant price over one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouSchedule {
    /// Hours, from 0 to 24, strictly increasing; one more than `prices`.
    pub breakpoints: Vec<f64>,
    pub prices: Vec<f64>,
}

impl TouSchedule {
    pub fn flat(price: f64) -> Self {
        Self {
            breakpoints: vec![0.0, 24.0],
            prices: vec![price],
        }
    }

    /// Same breakpoints, every interval at the lowest price.
    pub fn flattened(&self) -> Self {
        let low = self.prices.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            breakpoints: self.breakpoints.clone(),
            prices: vec![low; self.prices.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.prices.is_empty() || self.breakpoints.len() != self.prices.len() + 1 {
            return Err(Error::Invalid(format!(
                "schedule has {} breakpoints for {} prices; need one more breakpoint than prices",
                self.breakpoints.len(),
                self.prices.len()
            )));
        }
        if self.breakpoints[0] != 0.0 || self.breakpoints[self.breakpoints.len() - 1] != 24.0 {
            return Err(Error::Invalid(
                "schedule must cover the whole day: breakpoints start at 0 and end at 24".into(),
            ));
        }
        if self.breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid(
                "schedule breakpoints must be strictly increasing".into(),
            ));
        }
        if let Some(i) = self
            .prices
            .iter()
            .position(|&p| !(p >= 0.0 && p.is_finite()))
        {
            return Err(Error::Invalid(format!(
                "price of interval {} must be >= 0",
                i + 1
            )));
        }
        Ok(())
    }

    /// `(start, end, price)` per interval.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.prices)
            .map(|(w, &p)| (w[0], w[1], p))
    }
}

/// Synthetic internal heat gains: a static base, an occupancy plateau over
/// working hours with cosine ramps, and a half-sine solar bump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadProfile {
    pub base: Vec<f64>,
    #[serde(default)]
    pub occupancy_peak: f64,
    #[serde(default)]
    pub solar_peak: f64,
    #[serde(default = "defaults::occupancy_start")]
    pub occupancy_start: f64,
    #[serde(default = "defaults::occupancy_end")]
    pub occupancy_end: f64,
    #[serde(default = "defaults::ramp")]
    pub ramp: f64,
    #[serde(default = "defaults::solar_noon")]
    pub solar_noon: f64,
    #[serde(default = "defaults::solar_half_width")]
    pub solar_half_width: f64,
    /// Per-zone share of the solar peak, e.g. by facade orientation.
    /// Empty means 1 for every zone.
    #[serde(default)]
    pub solar_weights: Vec<f64>,
}

mod defaults {
    pub fn occupancy_start() -> f64 {
        8.0
    }
    pub fn occupancy_end() -> f64 {
        18.0
    }
    pub fn ramp() -> f64 {
        1.0
    }
    pub fn solar_noon() -> f64 {
        12.0
    }
    pub fn solar_half_width() -> f64 {
        6.0
    }
}

impl LoadProfile {
    pub fn constant(base: Vec<f64>) -> Self {
        Self {
            base,
            occupancy_peak: 0.0,
            solar_peak: 0.0,
            occupancy_start: defaults::occupancy_start(),
            occupancy_end: defaults::occupancy_end(),
            ramp: defaults::ramp(),
            solar_noon: defaults::solar_noon(),
            solar_half_width: defaults::solar_half_width(),
            solar_weights: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.solar_weights.is_empty() {
            check_dim("solar weights", self.base.len(), self.solar_weights.len())?;
        }
        let ok = self.occupancy_peak >= 0.0
            && self.solar_peak >= 0.0
            && self.ramp > 0.0
            && self.solar_half_width > 0.0
            && 0.0 <= self.occupancy_start
            && self.occupancy_start + 2.0 * self.ramp <= self.occupancy_end
            && self.occupancy_end <= 24.0;
        if !ok {
            return Err(Error::Invalid(
                "load profile needs nonnegative peaks, positive widths, and an occupancy window of at least two ramps inside [0, 24]".into(),
            ));
        }
        Ok(())
    }
}

fn occupancy_shape(p: &LoadProfile, t: f64) -> f64 {
    let (a, b, r) = (p.occupancy_start, p.occupancy_end, p.ramp);
    let smooth = |s: f64| 0.5 * (1.0 - (PI * s).cos());
    if t <= a || t >= b {
        0.0
    } else if t < a + r {
        smooth((t - a) / r)
    } else if t > b - r {
        smooth((b - t) / r)
    } else {
        1.0
    }
}

fn solar_shape(p: &LoadProfile, t: f64) -> f64 {
    let s = (t - p.solar_noon) / p.solar_half_width;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (0.5 * PI * (s + 1.0)).sin()
    }
}

/// Heat gains `d(t)` at hour `t ∈ [0, 24)`.
pub fn synth_internal_load(profile: &LoadProfile, t: f64) -> Result<Vector> {
    if !(0.0..24.0).contains(&t) {
        return Err(Error::Invalid(format!(
            "load profile hour {t} outside [0, 24)"
        )));
    }
    let occ = profile.occupancy_peak * occupancy_shape(profile, t);
    let sun = profile.solar_peak * solar_shape(profile, t);
    Ok(Vector::from_iterator(
        profile.base.len(),
        profile
            .base
            .iter()
            .enumerate()
            .map(|(i, &b)| b + occ + sun * profile.solar_weights.get(i).copied().unwrap_or(1.0)),
    ))
}

/// `(A, b)` with `A·T + b` the total θ-scaled demand. Inter-zone terms
/// cancel in the sum, so `A_i = -θ/R_i0` and `b = θ Σ (T∞/R_i0 + d_i)`.
pub fn steady_state_constraint(net: &ThermalNetwork) -> (Matrix, f64) {
    let n = net.zones();
    let a = Matrix::from_iterator(1, n, net.r_amb.iter().map(|r| -net.theta / r));
    let b = net.theta
        * net
            .r_amb
            .iter()
            .zip(&net.d)
            .map(|(r, d)| net.t_inf / r + d)
            .sum::<f64>();
    (a, b)
}

/// Welfare problem over `x = (T, q)`: minimise `U(q) - Σ U_i(T_i)` subject
/// to `A·T + b - q = 0`, `T_min - T <= 0`, `T - T_max <= 0`.
pub fn build_welfare_problem(
    net: &ThermalNetwork,
    params: &WelfareParams,
) -> Result<ConvexProblem> {
    net.validate()?;
    let n = net.zones();
    params.validate(n)?;
    let dim = n + 1;
    let mut hessian = Matrix::zeros(dim, dim);
    let mut linear = Vector::zeros(dim);
    let mut constant = params.rho[2];
    for i in 0..n {
        hessian[(i, i)] = 2.0 * params.gamma[i];
        linear[i] = -2.0 * params.gamma[i] * params.t_ref[i];
        constant += params.gamma[i] * params.t_ref[i].powi(2) - params.b_util[i];
    }
    hessian[(n, n)] = 2.0 * params.rho[0];
    linear[n] = params.rho[1];

    let (a, b) = steady_state_constraint(net);
    let mut eq = Matrix::zeros(1, dim);
    eq.view_mut((0, 0), (1, n)).copy_from(&a);
    eq[(0, n)] = -1.0;

    let mut g_a = Matrix::zeros(2 * n, dim);
    let mut g_b = Vector::zeros(2 * n);
    for i in 0..n {
        g_a[(i, i)] = -1.0;
        g_b[i] = params.t_min[i];
        g_a[(n + i, i)] = 1.0;
        g_b[n + i] = -params.t_max[i];
    }
    ConvexProblem::quadratic(
        Quadratic::new(hessian, linear, constant)?,
        AffineMap::new(eq, Vector::from_element(1, b))?,
        &g_a,
        &g_b,
    )
}

/// Diagonal time constants of the building dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvacTaus {
    pub t: Vec<f64>,
    pub q: f64,
    pub lambda: f64,
    pub mu_l: Vec<f64>,
    pub mu_h: Vec<f64>,
}

impl HvacTaus {
    pub fn uniform(n: usize, tau: f64) -> Self {
        Self {
            t: vec![tau; n],
            q: tau,
            lambda: tau,
            mu_l: vec![tau; n],
            mu_h: vec![tau; n],
        }
    }

    pub fn max(&self) -> f64 {
        self.t
            .iter()
            .chain(&self.mu_l)
            .chain(&self.mu_h)
            .chain([&self.q, &self.lambda])
            .copied()
            .fold(0.0, f64::max)
    }
}

/// `(T, q, λ, μ_l, μ_h)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvacState {
    pub t: Vector,
    pub q: f64,
    pub lambda: f64,
    pub mu_l: Vector,
    pub mu_h: Vector,
}

impl HvacState {
    pub fn from_full(state: &FullState) -> Result<Self> {
        let n = state.x.len().saturating_sub(1);
        check_dim("building multipliers", 2 * n, state.mu.len())?;
        check_dim("building equality multipliers", 1, state.lambda.len())?;
        Ok(Self {
            t: state.x.rows(0, n).into_owned(),
            q: state.x[n],
            lambda: state.lambda[0],
            mu_l: state.mu.rows(0, n).into_owned(),
            mu_h: state.mu.rows(n, n).into_owned(),
        })
    }

    pub fn to_full(&self, sys: &HvacSystem) -> Result<FullState> {
        let n = self.t.len();
        let mut x = Vector::zeros(n + 1);
        x.rows_mut(0, n).copy_from(&self.t);
        x[n] = self.q;
        let mut mu = Vector::zeros(2 * n);
        mu.rows_mut(0, n).copy_from(&self.mu_l);
        mu.rows_mut(n, n).copy_from(&self.mu_h);
        FullState::new(&sys.composed, x, Vector::from_element(1, self.lambda), mu)
    }
}

/// Time derivatives in the layout of [`HvacState`].
#[derive(Debug, Clone, PartialEq)]
pub struct HvacRates {
    pub t: Vector,
    pub q: f64,
    pub lambda: f64,
    pub mu_l: Vector,
    pub mu_h: Vector,
}

/// A building instance: network, welfare parameters, time constants, and
/// the generic composed system they induce.
#[derive(Debug, Clone)]
pub struct HvacSystem {
    pub net: ThermalNetwork,
    pub params: WelfareParams,
    pub taus: HvacTaus,
    composed: ComposedSystem,
}

impl HvacSystem {
    pub fn new(net: ThermalNetwork, params: WelfareParams, taus: HvacTaus) -> Result<Self> {
        let n = net.zones();
        let problem = build_welfare_problem(&net, &params)?;
        check_dim("zone time constants", n, taus.t.len())?;
        check_dim("lower-bound time constants", n, taus.mu_l.len())?;
        check_dim("upper-bound time constants", n, taus.mu_h.len())?;
        let mut tau_x = taus.t.clone();
        tau_x.push(taus.q);
        let tau_mu: Vec<f64> = taus.mu_l.iter().chain(&taus.mu_h).copied().collect();
        let composed =
            ComposedSystem::with_diagonal_taus(problem, &tau_x, &[taus.lambda], &tau_mu)?;
        Ok(Self {
            net,
            params,
            taus,
            composed,
        })
    }

    pub fn zones(&self) -> usize {
        self.net.zones()
    }

    pub fn composed(&self) -> &ComposedSystem {
        &self.composed
    }

    pub fn problem(&self) -> &ConvexProblem {
        self.composed.problem()
    }

    /// Welfare objective `U(q) - Σ U_i(T_i)` at `(T, q)`.
    pub fn objective(&self, t: &Vector, q: f64) -> f64 {
        let p = &self.params;
        let cost = p.rho[0] * q * q + p.rho[1] * q + p.rho[2];
        let utility: f64 = (0..t.len())
            .map(|i| p.b_util[i] - p.gamma[i] * (t[i] - p.t_ref[i]).powi(2))
            .sum();
        cost - utility
    }
}

fn projected(g: f64, mu: f64, tau: f64) -> f64 {
    if mu <= MU_ZERO_THRESHOLD && g <= 0.0 {
        0.0
    } else {
        g / tau
    }
}

/// Building dynamics written out per block:
///
/// ```text
/// τ_T Ṫ = ∇U(T) - Aᵀλ + μ_l - μ_h
/// τ_q q̇ = -∇U(q) + λ
/// τ_λ λ̇ = A·T + b - q
/// τ_μl μ̇_l = (T_min - T)⁺
/// τ_μh μ̇_h = (T - T_max)⁺
/// ```
pub fn hvac_vector_field(state: &HvacState, sys: &HvacSystem) -> Result<HvacRates> {
    let n = sys.zones();
    check_dim("zone temperatures", n, state.t.len())?;
    check_dim("lower-bound multipliers", n, state.mu_l.len())?;
    check_dim("upper-bound multipliers", n, state.mu_h.len())?;
    if state.mu_l.iter().chain(state.mu_h.iter()).any(|&m| m < 0.0) {
        return Err(Error::Invariant("negative comfort-bound multiplier".into()));
    }
    let p = &sys.params;
    let taus = &sys.taus;
    let (a, b) = steady_state_constraint(&sys.net);

    let t_dot = Vector::from_fn(n, |i, _| {
        let grad_u = -2.0 * p.gamma[i] * (state.t[i] - p.t_ref[i]);
        (grad_u - a[(0, i)] * state.lambda + state.mu_l[i] - state.mu_h[i]) / taus.t[i]
    });
    let grad_cost = 2.0 * p.rho[0] * state.q + p.rho[1];
    let q_dot = (-grad_cost + state.lambda) / taus.q;
    let lambda_dot = ((&a * &state.t)[0] + b - state.q) / taus.lambda;
    let mu_l = Vector::from_fn(n, |i, _| {
        projected(p.t_min[i] - state.t[i], state.mu_l[i], taus.mu_l[i])
    });
    let mu_h = Vector::from_fn(n, |i, _| {
        projected(state.t[i] - p.t_max[i], state.mu_h[i], taus.mu_h[i])
    });
    Ok(HvacRates {
        t: t_dot,
        q: q_dot,
        lambda: lambda_dot,
        mu_l,
        mu_h,
    })
}

/// Settings for a daily run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TouOptions {
    pub integrator: IntegratorOptions,
    /// Flow time simulated per price interval; `None` means 100 of the
    /// largest time constant.
    pub settle_time: Option<f64>,
    pub tolerance: ConvergenceTolerance,
}

#[derive(Debug, Clone)]
pub struct IntervalResult {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub price: f64,
    /// Heat gains used for the interval, taken at its midpoint.
    pub load: Vector,
    pub oracle: KktPoint,
    pub terminal: HvacState,
    pub objective: f64,
    pub convergence: CertificateReport,
    pub trajectory: Trajectory,
}

impl IntervalResult {
    pub fn settling_time(&self) -> Option<f64> {
        self.convergence.settling_time()
    }
}

#[derive(Debug, Clone)]
pub struct DailyReport {
    pub zones: usize,
    pub intervals: Vec<IntervalResult>,
}

impl DailyReport {
    /// Largest settled supply over the day.
    pub fn peak_supply(&self) -> f64 {
        self.intervals
            .iter()
            .map(|r| r.terminal.q)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Supply integrated over the day (kWh).
    pub fn energy(&self) -> f64 {
        self.intervals
            .iter()
            .map(|r| r.terminal.q * (r.end - r.start))
            .sum()
    }

    pub fn csv_header(zones: usize) -> Vec<String> {
        let mut h: Vec<String> = ["interval", "start_h", "end_h", "price", "q"]
            .map(String::from)
            .to_vec();
        h.extend((1..=zones).map(|i| format!("T{i}")));
        h.extend(["lambda", "objective", "load", "settling_time"].map(String::from));
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(self.zones))?;
        for r in &self.intervals {
            let mut row = vec![
                (r.index + 1).to_string(),
                r.start.to_string(),
                r.end.to_string(),
                r.price.to_string(),
                r.terminal.q.to_string(),
            ];
            row.extend(r.terminal.t.iter().map(f64::to_string));
            row.push(r.terminal.lambda.to_string());
            row.push(r.objective.to_string());
            row.push(r.load.sum().to_string());
            row.push(r.settling_time().map_or(String::new(), |t| t.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Relative reduction of the peak supply of `run` against `baseline`.
pub fn peak_reduction(baseline: &DailyReport, run: &DailyReport) -> f64 {
    let base = baseline.peak_supply();
    if base == 0.0 {
        0.0
    } else {
        (base - run.peak_supply()) / base
    }
}

/// Runs one day. Each price interval is treated quasi-statically: the
/// welfare problem is rebuilt with the interval's price and midpoint heat
/// gains, the flow is warm-started from the previous interval's terminal
/// state and simulated for the settle time, and the terminal state is
/// checked against the active-set oracle.
pub fn run_tou_scenario(
    net: &ThermalNetwork,
    params: &WelfareParams,
    schedule: &TouSchedule,
    loads: &LoadProfile,
    taus: &HvacTaus,
    initial: &HvacState,
    opts: &TouOptions,
) -> Result<DailyReport> {
    schedule.validate()?;
    loads.validate()?;
    net.validate()?;
    check_dim("load profile zones", net.zones(), loads.base.len())?;
    let mut integrator = opts.integrator;
    integrator.horizon = opts.settle_time.unwrap_or(100.0 * taus.max());
    integrator.validate()?;

    let mut state = initial.clone();
    let mut intervals = Vec::with_capacity(schedule.prices.len());
    for (index, (start, end, price)) in schedule.intervals().enumerate() {
        let load = synth_internal_load(loads, 0.5 * (start + end))?;
        let mut net_k = net.clone();
        net_k.d = load.iter().copied().collect();
        let sys = HvacSystem::new(net_k, params.at_price(price), taus.clone())?;
        let oracle = active_set_oracle(sys.problem())?;
        let trajectory = simulate(sys.composed(), &state.to_full(&sys)?, &integrator)?;
        let convergence = check_convergence(&trajectory, sys.problem(), &oracle, opts.tolerance)?;
        if convergence.outcome != Outcome::Passed {
            return Err(Error::IntervalNotConverged {
                interval: index + 1,
                detail: convergence.detail,
            });
        }
        state = HvacState::from_full(&trajectory.terminal().state)?;
        intervals.push(IntervalResult {
            index,
            start,
            end,
            price,
            objective: sys.objective(&state.t, state.q),
            load,
            oracle,
            terminal: state.clone(),
            convergence,
            trajectory,
        });
    }
    Ok(DailyReport {
        zones: net.zones(),
        intervals,
    })
}
