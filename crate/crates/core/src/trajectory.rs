//! Sampled trajectories, switch ledgers, and their CSV forms.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::IntegratorOptions;
use crate::interconnect::{FullState, PortPower, Rates};
use crate::problem::Vector;
use crate::switched::{ActiveSet, SwitchEvent, SwitchKind, SwitchLedger};

/// `(P̃, S_σ, S̃_σ)` at one sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StorageValues {
    pub p_tilde: f64,
    pub s_sigma: f64,
    pub s_tilde: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: FullState,
    /// `g(x)` at the sample.
    pub g: Vector,
    pub rates: Rates,
    pub storage: StorageValues,
    pub power: PortPower,
    /// Port energies integrated from the initial time.
    pub energy: PortPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

/// Output of one simulation.
///
/// Sample times are non-decreasing; each switch contributes a pair of samples
/// at the same instant, one under the old active set and one under the new.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dims: Dims,
    pub tau_mu: Vec<f64>,
    pub options: IntegratorOptions,
    pub samples: Vec<Sample>,
    pub ledger: SwitchLedger,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn initial(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn terminal(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory has at least one sample")
    }

    /// Visit start times of every active set: the first sample, and each
    /// post-switch sample. Returns `(sample index, active set)` pairs.
    pub fn mode_visits(&self) -> Vec<(usize, ActiveSet)> {
        let mut visits = Vec::new();
        for (k, s) in self.samples.iter().enumerate() {
            let starts = k == 0 || self.samples[k - 1].state.sigma != s.state.sigma;
            if starts {
                visits.push((k, s.state.sigma.clone()));
            }
        }
        visits
    }

    pub fn csv_header(dims: Dims) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        let indexed = |h: &mut Vec<String>, prefix: &str, k: usize| {
            h.extend((1..=k).map(|i| format!("{prefix}{i}")));
        };
        indexed(&mut h, "x", dims.n);
        indexed(&mut h, "lambda", dims.m);
        indexed(&mut h, "mu", dims.p);
        h.extend(
            [
                "sigma",
                "P_tilde",
                "S_sigma",
                "S_tilde",
                "power_eq",
                "power_ineq",
                "power_ext",
            ]
            .map(String::from),
        );
        indexed(&mut h, "g", dims.p);
        indexed(&mut h, "xdot", dims.n);
        indexed(&mut h, "lambdadot", dims.m);
        indexed(&mut h, "mudot", dims.p);
        h.extend(["energy_eq", "energy_ineq", "energy_ext"].map(String::from));
        h
    }

    /// Writes one row per sample. Floats use the shortest representation that
    /// round-trips exactly.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        if self.dims.p > 64 {
            return Err(Error::Capability(
                "active-set bitmask column supports at most 64 constraints".into(),
            ));
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(self.dims))?;
        for s in &self.samples {
            let mut row: Vec<String> = vec![s.t.to_string()];
            let push = |row: &mut Vec<String>, v: &Vector| row.extend(v.iter().map(f64::to_string));
            push(&mut row, &s.state.x);
            push(&mut row, &s.state.lambda);
            push(&mut row, &s.state.mu);
            row.push(s.state.sigma.to_bitmask().to_string());
            for v in [
                s.storage.p_tilde,
                s.storage.s_sigma,
                s.storage.s_tilde,
                s.power.equality,
                s.power.inequality,
                s.power.external,
            ] {
                row.push(v.to_string());
            }
            push(&mut row, &s.g);
            push(&mut row, &s.rates.x_dot);
            push(&mut row, &s.rates.lambda_dot);
            push(&mut row, &s.rates.mu_dot);
            for v in [s.energy.equality, s.energy.inequality, s.energy.external] {
                row.push(v.to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads samples written by [`Trajectory::write_csv`]. The ledger, time
    /// constants and options are not part of the CSV and are supplied here.
    pub fn read_csv<R: Read>(
        input: R,
        tau_mu: Vec<f64>,
        options: IntegratorOptions,
        ledger: SwitchLedger,
    ) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
        let count = |prefix: &str| {
            header
                .iter()
                .filter(|h| {
                    h.strip_prefix(prefix).is_some_and(|rest| {
                        !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit())
                    })
                })
                .count()
        };
        let dims = Dims {
            n: count("x"),
            m: count("lambda"),
            p: count("mu"),
        };
        if header != Self::csv_header(dims) {
            return Err(Error::Format("unexpected trajectory CSV header".into()));
        }
        if tau_mu.len() != dims.p {
            return Err(Error::Format(format!(
                "trajectory has {} multipliers but {} time constants were supplied",
                dims.p,
                tau_mu.len()
            )));
        }

        let mut samples = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut fields = rec.iter();
            let mut next = |what: &str| -> Result<f64> {
                let f = fields
                    .next()
                    .ok_or_else(|| Error::Format(format!("row {}: missing {what}", line + 2)))?;
                f.parse::<f64>()
                    .map_err(|_| Error::Format(format!("row {}: bad {what} value '{f}'", line + 2)))
            };
            let mut vec_of = |k: usize, what: &str| -> Result<Vector> {
                let vals = (0..k).map(|_| next(what)).collect::<Result<Vec<_>>>()?;
                Ok(Vector::from_vec(vals))
            };
            let t = vec_of(1, "t")?[0];
            let x = vec_of(dims.n, "x")?;
            let lambda = vec_of(dims.m, "lambda")?;
            let mu = vec_of(dims.p, "mu")?;
            let sigma_raw = vec_of(1, "sigma")?[0];
            let scalars = vec_of(6, "storage/power")?;
            let g = vec_of(dims.p, "g")?;
            let x_dot = vec_of(dims.n, "xdot")?;
            let lambda_dot = vec_of(dims.m, "lambdadot")?;
            let mu_dot = vec_of(dims.p, "mudot")?;
            let energy = vec_of(3, "energy")?;
            samples.push(Sample {
                t,
                state: FullState {
                    x,
                    lambda,
                    mu,
                    sigma: ActiveSet::from_bitmask(sigma_raw as u64),
                },
                g,
                rates: Rates {
                    x_dot,
                    lambda_dot,
                    mu_dot,
                },
                storage: StorageValues {
                    p_tilde: scalars[0],
                    s_sigma: scalars[1],
                    s_tilde: scalars[2],
                },
                power: PortPower {
                    equality: scalars[3],
                    inequality: scalars[4],
                    external: scalars[5],
                },
                energy: PortPower {
                    equality: energy[0],
                    inequality: energy[1],
                    external: energy[2],
                },
            });
        }
        if samples.is_empty() {
            return Err(Error::Format("trajectory CSV has no samples".into()));
        }
        Ok(Self {
            dims,
            tau_mu,
            options,
            samples,
            ledger,
        })
    }

    /// Storage trace for plotting: `t, sigma, P_tilde, S_sigma, S_tilde,
    /// supplied`, where `supplied` is the energy delivered through the
    /// ports since the start and `sigma` is printed 1-based.
    pub fn write_storage_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "sigma", "P_tilde", "S_sigma", "S_tilde", "supplied"])?;
        for s in &self.samples {
            w.write_record([
                s.t.to_string(),
                s.state.sigma.to_string(),
                s.storage.p_tilde.to_string(),
                s.storage.s_sigma.to_string(),
                s.storage.s_tilde.to_string(),
                (s.energy.equality + s.energy.inequality).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per visited active set, in the layout of a switching-sequence
    /// table: interval, active set, storage expression, storage at entry.
    pub fn sigma_table(&self) -> Vec<SigmaRow> {
        let visits = self.mode_visits();
        visits
            .iter()
            .enumerate()
            .map(|(k, (idx, sigma))| {
                let terms: Vec<String> = (0..self.dims.p)
                    .filter(|&i| !sigma.contains(i))
                    .map(|i| format!("{}*mudot{}^2", self.tau_mu[i], i + 1))
                    .collect();
                SigmaRow {
                    start: self.samples[*idx].t,
                    end: visits.get(k + 1).map(|(j, _)| self.samples[*j].t),
                    sigma: sigma.clone(),
                    expression: if terms.is_empty() {
                        "0".into()
                    } else {
                        format!("0.5*({})", terms.join(" + "))
                    },
                    storage_at_start: self.samples[*idx].storage.s_sigma,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaRow {
    pub start: f64,
    /// `None` for the final, open-ended interval.
    pub end: Option<f64>,
    pub sigma: ActiveSet,
    pub expression: String,
    pub storage_at_start: f64,
}

pub fn write_sigma_table<W: Write>(rows: &[SigmaRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["interval", "sigma", "S_sigma", "S_at_start"])?;
    for r in rows {
        let interval = match r.end {
            Some(e) => format!("[{}, {})", r.start, e),
            None => format!("[{}, inf)", r.start),
        };
        w.write_record([
            interval,
            r.sigma.to_string(),
            r.expression.clone(),
            r.storage_at_start.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

impl SwitchLedger {
    /// Columns `t, index, kind, S_before, S_after`; indices are 1-based.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "index", "kind", "S_before", "S_after"])?;
        for e in &self.events {
            w.write_record([
                e.time.to_string(),
                (e.index + 1).to_string(),
                e.kind.to_string(),
                e.storage_before.to_string(),
                e.storage_after.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        if r.headers()? != vec!["t", "index", "kind", "S_before", "S_after"] {
            return Err(Error::Format("unexpected ledger CSV header".into()));
        }
        let mut events = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Format(format!("ledger row {}: bad {what}", line + 2));
            let num = |i: usize, what: &str| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(what))
            };
            let index: usize = rec
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("index"))?;
            if index == 0 {
                return Err(bad("index"));
            }
            let kind = match rec.get(2) {
                Some("activation") => SwitchKind::Activation,
                Some("deactivation") => SwitchKind::Deactivation,
                _ => return Err(bad("kind")),
            };
            events.push(SwitchEvent {
                time: num(0, "t")?,
                index: index - 1,
                kind,
                storage_before: num(3, "S_before")?,
                storage_after: num(4, "S_after")?,
            });
        }
        Ok(Self { events })
    }
}
