//! JSON scenario files.
//!
//! A file holds either a generic `problem` section (quadratic objective,
//! affine equalities and inequalities) or an `hvac` section, plus `dynamics`
//! and `outputs`. Parsing gives a [`ScenarioFile`], which may use shorthand
//! (a scalar where a per-index vector is expected, omitted defaults);
//! [`ScenarioFile::resolve`] validates it into a fully explicit [`Scenario`].
//! [`Scenario::manifest`] writes the explicit form back out, and that file
//! resolves to the same scenario. The field reference is `docs/scenario.md`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hvac::{HvacSystem, HvacTaus, LoadProfile, ThermalNetwork, TouSchedule, WelfareParams};
use crate::integrator::IntegratorOptions;
use crate::interconnect::{ComposedSystem, FullState};
use crate::monitor::Certificate;
use crate::problem::{AffineMap, ConvexProblem, Matrix, Quadratic, Vector};
use crate::signal::InputSignal;

/// A scalar applied to every index, or one value per index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerIndex {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerIndex {
    fn resolve(&self, n: usize, path: &str) -> Result<Vec<f64>> {
        let out = match self {
            PerIndex::Uniform(v) => vec![*v; n],
            PerIndex::Each(v) if v.len() == n => v.clone(),
            PerIndex::Each(v) => {
                return Err(invalid(
                    path,
                    format!("expected {n} entries, got {}", v.len()),
                ))
            }
        };
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(invalid(&format!("{path}[{i}]"), "must be finite"));
        }
        Ok(out)
    }
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Invalid(format!("{path}: {msg}"))
}

/// Prefixes library validation errors with the scenario path.
fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Invalid(m) => invalid(path, m),
        other => invalid(path, other),
    })
}

fn uniform(v: f64) -> PerIndex {
    PerIndex::Uniform(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hvac: Option<HvacSection>,
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub outputs: OutputsSection,
}

/// `f(x) = ½xᵀHx + cᵀx + c₀`, `A_h x + b_h = 0`, `A_g x + b_g <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub hessian: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    #[serde(default)]
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equality: Option<AffineRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequality: Option<AffineRows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineRows {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HvacSection {
    pub zones: usize,
    pub network: NetworkSection,
    pub welfare: WelfareSection,
    /// Used by daily runs; a single simulation uses `price`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<TouSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loads: Option<LoadSection>,
    /// Price multiplier on the generation cost for a single simulation.
    #[serde(default = "one")]
    pub price: f64,
}

fn one() -> f64 {
    1.0
}

/// Inter-zone resistances: a scalar couples adjacent zones in a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZoneCoupling {
    Chain(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default = "default_capacitance")]
    pub capacitance: PerIndex,
    #[serde(default = "default_coupling")]
    pub r_zone: ZoneCoupling,
    pub r_amb: PerIndex,
    pub t_inf: f64,
    pub d: PerIndex,
    pub theta: f64,
}

fn default_capacitance() -> PerIndex {
    uniform(2.0)
}
fn default_coupling() -> ZoneCoupling {
    ZoneCoupling::Chain(20.0)
}
fn default_gamma() -> PerIndex {
    uniform(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WelfareSection {
    #[serde(default = "default_gamma")]
    pub gamma: PerIndex,
    pub t_ref: PerIndex,
    pub b_util: PerIndex,
    pub rho: [f64; 3],
    pub t_min: PerIndex,
    pub t_max: PerIndex,
}

/// Load profile on top of the network's static heat gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    #[serde(default)]
    pub occupancy_peak: f64,
    #[serde(default)]
    pub solar_peak: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solar_noon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solar_half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solar_weights: Option<PerIndex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default = "default_tau")]
    pub tau_x: PerIndex,
    #[serde(default = "default_tau")]
    pub tau_lambda: PerIndex,
    #[serde(default = "default_tau")]
    pub tau_mu: PerIndex,
    pub initial: InitialSection,
    /// Exogenous input `v`; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSignal>,
    #[serde(default)]
    pub integrator: IntegratorOptions,
}

fn default_tau() -> PerIndex {
    uniform(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x: PerIndex,
    #[serde(default = "zero")]
    pub lambda: PerIndex,
    #[serde(default = "zero")]
    pub mu: PerIndex,
}

fn zero() -> PerIndex {
    uniform(0.0)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    /// Sampling stride; overrides `dynamics.integrator.record_stride`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<f64>,
    /// Certificates for `verify`; all but `quadratic_norm` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificates: Option<Vec<Certificate>>,
}

impl ScenarioFile {
    /// Parses JSON text. Syntax and type errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Format(format!(
                "scenario line {}, column {}: {}",
                e.line(),
                e.column(),
                strip_location(&e.to_string())
            ))
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let model = match (&self.problem, &self.hvac) {
            (Some(p), None) => Model::Problem(resolve_problem(p)?),
            (None, Some(h)) => Model::Hvac(resolve_hvac(h)?),
            _ => {
                return Err(invalid(
                    "scenario",
                    "exactly one of the `problem` and `hvac` sections is required",
                ))
            }
        };
        let (n, m, p) = model.dims();
        let d = &self.dynamics;
        let tau_x = d.tau_x.resolve(n, "dynamics.tau_x")?;
        let tau_lambda = d.tau_lambda.resolve(m, "dynamics.tau_lambda")?;
        let tau_mu = d.tau_mu.resolve(p, "dynamics.tau_mu")?;
        for (path, taus) in [
            ("dynamics.tau_x", &tau_x),
            ("dynamics.tau_lambda", &tau_lambda),
            ("dynamics.tau_mu", &tau_mu),
        ] {
            if let Some(i) = taus.iter().position(|&t| !(t > 0.0)) {
                return Err(invalid(
                    &format!("{path}[{i}]"),
                    "time constants must be > 0",
                ));
            }
        }
        let x0 = d.initial.x.resolve(n, "dynamics.initial.x")?;
        let lambda0 = d.initial.lambda.resolve(m, "dynamics.initial.lambda")?;
        let mu0 = d.initial.mu.resolve(p, "dynamics.initial.mu")?;
        if let Some(i) = mu0.iter().position(|&v| v < 0.0) {
            return Err(invalid(
                &format!("dynamics.initial.mu[{i}]"),
                "multipliers must be >= 0",
            ));
        }
        let input = match &d.input {
            Some(s) => {
                if s.dim() != n {
                    return Err(invalid(
                        "dynamics.input",
                        format!("expected dimension {n}, got {}", s.dim()),
                    ));
                }
                s.clone()
            }
            None => InputSignal::zero(n),
        };

        let mut integrator = d.integrator;
        if let Some(stride) = self.outputs.stride {
            let default_stride = IntegratorOptions::default().record_stride;
            if integrator.record_stride != default_stride && integrator.record_stride != stride {
                return Err(invalid(
                    "outputs.stride",
                    "conflicts with dynamics.integrator.record_stride",
                ));
            }
            integrator.record_stride = stride;
        }
        at("dynamics.integrator", integrator.validate())?;

        let scenario = Scenario {
            name: self.name.clone(),
            description: self.description.clone(),
            model,
            tau_x,
            tau_lambda,
            tau_mu,
            x0,
            lambda0,
            mu0,
            input,
            integrator,
            directory: self.outputs.directory.clone(),
            certificates: self.outputs.certificates.clone().unwrap_or_else(|| {
                vec![
                    Certificate::UnforcedDecrease,
                    Certificate::HybridPassivity,
                    Certificate::SwitchLedger,
                    Certificate::Convergence,
                ]
            }),
        };
        // builds the system once so structural problems surface here
        at("dynamics", scenario.system().map(|_| ()))?;
        Ok(scenario)
    }
}

fn strip_location(msg: &str) -> &str {
    msg.rfind(" at line ").map_or(msg, |i| &msg[..i])
}

fn matrix(rows: &[Vec<f64>], ncols: usize, path: &str) -> Result<Matrix> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(invalid(
                &format!("{path}[{i}]"),
                format!("expected {ncols} columns, got {}", r.len()),
            ));
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(invalid(&format!("{path}[{i}][{j}]"), "must be finite"));
        }
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Explicit data of a generic quadratic program.
#[derive(Debug, Clone, PartialEq)]
pub struct QpData {
    pub hessian: Matrix,
    pub linear: Vector,
    pub constant: f64,
    pub eq_a: Matrix,
    pub eq_b: Vector,
    pub ineq_a: Matrix,
    pub ineq_b: Vector,
}

impl QpData {
    pub fn problem(&self) -> Result<ConvexProblem> {
        ConvexProblem::quadratic(
            Quadratic::new(self.hessian.clone(), self.linear.clone(), self.constant)?,
            AffineMap::new(self.eq_a.clone(), self.eq_b.clone())?,
            &self.ineq_a,
            &self.ineq_b,
        )
    }
}

fn resolve_problem(p: &ProblemSection) -> Result<QpData> {
    let n = p.linear.len();
    if n == 0 {
        return Err(invalid(
            "problem.linear",
            "the problem needs at least one variable",
        ));
    }
    if p.hessian.len() != n {
        return Err(invalid(
            "problem.hessian",
            format!("expected {n} rows, got {}", p.hessian.len()),
        ));
    }
    let hessian = matrix(&p.hessian, n, "problem.hessian")?;
    if hessian.clone().cholesky().is_none() {
        return Err(invalid(
            "problem.hessian",
            "must be symmetric positive definite",
        ));
    }
    let rows = |r: &Option<AffineRows>, path: &str| -> Result<(Matrix, Vector)> {
        match r {
            None => Ok((Matrix::zeros(0, n), Vector::zeros(0))),
            Some(r) => {
                let a = matrix(&r.a, n, &format!("{path}.a"))?;
                if r.b.len() != a.nrows() {
                    return Err(invalid(
                        &format!("{path}.b"),
                        format!("expected {} entries, got {}", a.nrows(), r.b.len()),
                    ));
                }
                Ok((a, Vector::from_column_slice(&r.b)))
            }
        }
    };
    let (eq_a, eq_b) = rows(&p.equality, "problem.equality")?;
    let (ineq_a, ineq_b) = rows(&p.inequality, "problem.inequality")?;
    if eq_a.nrows() > 0 && eq_a.clone().svd(false, false).rank(1e-10) < eq_a.nrows() {
        return Err(invalid(
            "problem.equality.a",
            "rows must be linearly independent",
        ));
    }
    let data = QpData {
        hessian,
        linear: Vector::from_column_slice(&p.linear),
        constant: p.constant,
        eq_a,
        eq_b,
        ineq_a,
        ineq_b,
    };
    at("problem", data.problem())?;
    Ok(data)
}

/// Explicit data of a building scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct HvacData {
    pub net: ThermalNetwork,
    pub params: WelfareParams,
    pub schedule: TouSchedule,
    pub loads: LoadProfile,
    pub price: f64,
}

fn resolve_hvac(h: &HvacSection) -> Result<HvacData> {
    let n = h.zones;
    if n == 0 {
        return Err(invalid("hvac.zones", "must be >= 1"));
    }
    let nw = &h.network;
    let r_zone = match &nw.r_zone {
        ZoneCoupling::Chain(r) => {
            let mut m = vec![vec![0.0; n]; n];
            for i in 1..n {
                m[i - 1][i] = *r;
                m[i][i - 1] = *r;
            }
            m
        }
        ZoneCoupling::Matrix(rows) => {
            if rows.len() != n {
                return Err(invalid(
                    "hvac.network.r_zone",
                    format!("expected {n} rows, got {}", rows.len()),
                ));
            }
            matrix(rows, n, "hvac.network.r_zone")?;
            rows.clone()
        }
    };
    let net = ThermalNetwork {
        capacitance: nw.capacitance.resolve(n, "hvac.network.capacitance")?,
        r_zone,
        r_amb: nw.r_amb.resolve(n, "hvac.network.r_amb")?,
        t_inf: nw.t_inf,
        d: nw.d.resolve(n, "hvac.network.d")?,
        theta: nw.theta,
    };
    at("hvac.network", net.validate())?;
    let w = &h.welfare;
    let params = WelfareParams {
        gamma: w.gamma.resolve(n, "hvac.welfare.gamma")?,
        t_ref: w.t_ref.resolve(n, "hvac.welfare.t_ref")?,
        b_util: w.b_util.resolve(n, "hvac.welfare.b_util")?,
        rho: w.rho,
        t_min: w.t_min.resolve(n, "hvac.welfare.t_min")?,
        t_max: w.t_max.resolve(n, "hvac.welfare.t_max")?,
    };
    at("hvac.welfare", params.validate(n))?;
    let schedule = h.schedule.clone().unwrap_or_else(|| TouSchedule::flat(1.0));
    at("hvac.schedule", schedule.validate())?;
    let mut loads = LoadProfile::constant(net.d.clone());
    if let Some(l) = &h.loads {
        loads.occupancy_peak = l.occupancy_peak;
        loads.solar_peak = l.solar_peak;
        loads.occupancy_start = l.occupancy_start.unwrap_or(loads.occupancy_start);
        loads.occupancy_end = l.occupancy_end.unwrap_or(loads.occupancy_end);
        loads.ramp = l.ramp.unwrap_or(loads.ramp);
        loads.solar_noon = l.solar_noon.unwrap_or(loads.solar_noon);
        loads.solar_half_width = l.solar_half_width.unwrap_or(loads.solar_half_width);
        if let Some(w) = &l.solar_weights {
            loads.solar_weights = w.resolve(n, "hvac.loads.solar_weights")?;
        }
    }
    at("hvac.loads", loads.validate())?;
    if !(h.price >= 0.0 && h.price.is_finite()) {
        return Err(invalid("hvac.price", "must be >= 0"));
    }
    Ok(HvacData {
        net,
        params,
        schedule,
        loads,
        price: h.price,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Problem(QpData),
    Hvac(HvacData),
}

impl Model {
    /// `(n, m, p)`
    pub fn dims(&self) -> (usize, usize, usize) {
        match self {
            Model::Problem(q) => (q.linear.len(), q.eq_a.nrows(), q.ineq_a.nrows()),
            Model::Hvac(h) => {
                let n = h.net.zones();
                (n + 1, 1, 2 * n)
            }
        }
    }
}

/// A validated scenario with every value explicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub model: Model,
    pub tau_x: Vec<f64>,
    pub tau_lambda: Vec<f64>,
    pub tau_mu: Vec<f64>,
    pub x0: Vec<f64>,
    pub lambda0: Vec<f64>,
    pub mu0: Vec<f64>,
    pub input: InputSignal,
    pub integrator: IntegratorOptions,
    pub directory: Option<String>,
    pub certificates: Vec<Certificate>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        ScenarioFile::read(path)?.resolve()
    }

    pub fn problem(&self) -> Result<ConvexProblem> {
        match &self.model {
            Model::Problem(q) => q.problem(),
            Model::Hvac(h) => {
                crate::hvac::build_welfare_problem(&h.net, &h.params.at_price(h.price))
            }
        }
    }

    /// Building time constants in block form, for building scenarios.
    pub fn hvac_taus(&self) -> Option<HvacTaus> {
        let Model::Hvac(h) = &self.model else {
            return None;
        };
        let n = h.net.zones();
        Some(HvacTaus {
            t: self.tau_x[..n].to_vec(),
            q: self.tau_x[n],
            lambda: self.tau_lambda[0],
            mu_l: self.tau_mu[..n].to_vec(),
            mu_h: self.tau_mu[n..].to_vec(),
        })
    }

    pub fn hvac_system(&self) -> Result<Option<HvacSystem>> {
        let Model::Hvac(h) = &self.model else {
            return Ok(None);
        };
        let taus = self.hvac_taus().expect("building scenario");
        HvacSystem::new(h.net.clone(), h.params.at_price(h.price), taus).map(Some)
    }

    pub fn system(&self) -> Result<ComposedSystem> {
        ComposedSystem::with_diagonal_taus(
            self.problem()?,
            &self.tau_x,
            &self.tau_lambda,
            &self.tau_mu,
        )?
        .with_input(self.input.clone())
    }

    pub fn initial_state(&self, sys: &ComposedSystem) -> Result<FullState> {
        FullState::new(
            sys,
            Vector::from_column_slice(&self.x0),
            Vector::from_column_slice(&self.lambda0),
            Vector::from_column_slice(&self.mu0),
        )
    }

    /// Command-line overrides of the horizon and maximum step.
    pub fn with_overrides(mut self, horizon: Option<f64>, dt_max: Option<f64>) -> Result<Self> {
        if let Some(h) = horizon {
            self.integrator.horizon = h;
        }
        if let Some(d) = dt_max {
            self.integrator.dt_max = d;
            self.integrator.dt_init = self.integrator.dt_init.min(d);
        }
        at("overrides", self.integrator.validate())?;
        Ok(self)
    }

    /// The explicit scenario file; it resolves back to `self`.
    pub fn manifest(&self) -> ScenarioFile {
        let each = |v: &[f64]| PerIndex::Each(v.to_vec());
        let rows = |m: &Matrix| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        let (problem, hvac) = match &self.model {
            Model::Problem(q) => (
                Some(ProblemSection {
                    hessian: rows(&q.hessian),
                    linear: q.linear.iter().copied().collect(),
                    constant: q.constant,
                    equality: (q.eq_a.nrows() > 0).then(|| AffineRows {
                        a: rows(&q.eq_a),
                        b: q.eq_b.iter().copied().collect(),
                    }),
                    inequality: (q.ineq_a.nrows() > 0).then(|| AffineRows {
                        a: rows(&q.ineq_a),
                        b: q.ineq_b.iter().copied().collect(),
                    }),
                }),
                None,
            ),
            Model::Hvac(h) => {
                let l = &h.loads;
                (
                    None,
                    Some(HvacSection {
                        zones: h.net.zones(),
                        network: NetworkSection {
                            capacitance: each(&h.net.capacitance),
                            r_zone: ZoneCoupling::Matrix(h.net.r_zone.clone()),
                            r_amb: each(&h.net.r_amb),
                            t_inf: h.net.t_inf,
                            d: each(&h.net.d),
                            theta: h.net.theta,
                        },
                        welfare: WelfareSection {
                            gamma: each(&h.params.gamma),
                            t_ref: each(&h.params.t_ref),
                            b_util: each(&h.params.b_util),
                            rho: h.params.rho,
                            t_min: each(&h.params.t_min),
                            t_max: each(&h.params.t_max),
                        },
                        schedule: Some(h.schedule.clone()),
                        loads: Some(LoadSection {
                            occupancy_peak: l.occupancy_peak,
                            solar_peak: l.solar_peak,
                            occupancy_start: Some(l.occupancy_start),
                            occupancy_end: Some(l.occupancy_end),
                            ramp: Some(l.ramp),
                            solar_noon: Some(l.solar_noon),
                            solar_half_width: Some(l.solar_half_width),
                            solar_weights: (!l.solar_weights.is_empty())
                                .then(|| each(&l.solar_weights)),
                        }),
                        price: h.price,
                    }),
                )
            }
        };
        ScenarioFile {
            name: self.name.clone(),
            description: self.description.clone(),
            problem,
            hvac,
            dynamics: DynamicsSection {
                tau_x: each(&self.tau_x),
                tau_lambda: each(&self.tau_lambda),
                tau_mu: each(&self.tau_mu),
                initial: InitialSection {
                    x: each(&self.x0),
                    lambda: each(&self.lambda0),
                    mu: each(&self.mu0),
                },
                input: Some(self.input.clone()),
                integrator: self.integrator,
            },
            outputs: OutputsSection {
                directory: self.directory.clone(),
                stride: None,
                certificates: Some(self.certificates.clone()),
            },
        }
    }
}
