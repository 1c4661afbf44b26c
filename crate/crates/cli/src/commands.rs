use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use pdflow::hvac::{peak_reduction, run_tou_scenario, DailyReport, HvacState, TouOptions};
use pdflow::integrator::{simulate as integrate, IntegratorOptions};
use pdflow::interconnect::{ComposedSystem, FullState};
use pdflow::monitor::{
    check_convergence, check_hybrid_passivity_all, check_quadratic_norm, check_switch_ledger,
    check_unforced_decrease, render_table, Certificate, CertificateReport, ConvergenceTolerance,
};
use pdflow::problem::{active_set_oracle, kkt_residual, KktPoint};
use pdflow::random::{random_qp, rng, InstanceSpec};
use pdflow::scenario::{Model, Scenario};
use pdflow::switched::SwitchLedger;
use pdflow::trajectory::{write_sigma_table, Trajectory};
use pdflow::Error;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_DIVERGENCE: u8 = 2;
pub const EXIT_CERTIFICATE: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Divergence { .. }
            | Error::StepTooLarge { .. }
            | Error::EventIsolation { .. } => EXIT_DIVERGENCE,
            Error::IntervalNotConverged { .. } => EXIT_CERTIFICATE,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), Failure>;

fn context<T>(what: &str, r: pdflow::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{what}: {}", f.message);
        f
    })
}

fn output_dir(out: Option<PathBuf>, scenario: &Scenario) -> PathBuf {
    out.or_else(|| scenario.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").join(&scenario.name))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure {
        code: EXIT_VALIDATION,
        message: format!("{}: {e}", path.display()),
    })
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure {
        code: EXIT_VALIDATION,
        message: format!("{}: {e}", path.display()),
    })
}

fn make_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| Failure {
        code: EXIT_VALIDATION,
        message: format!("{}: {e}", dir.display()),
    })
}

fn load(path: &Path, horizon: Option<f64>, dt_max: Option<f64>) -> Result<Scenario, Failure> {
    let s = Scenario::load(path).and_then(|s| s.with_overrides(horizon, dt_max));
    context(&path.display().to_string(), s)
}

fn write_run(dir: &Path, traj: &Trajectory) -> CliResult {
    context(
        "trajectory.csv",
        traj.write_csv(create(&dir.join("trajectory.csv"))?),
    )?;
    context(
        "ledger.csv",
        traj.ledger.write_csv(create(&dir.join("ledger.csv"))?),
    )?;
    context(
        "storage.csv",
        traj.write_storage_csv(create(&dir.join("storage.csv"))?),
    )?;
    context(
        "sigma_table.csv",
        write_sigma_table(&traj.sigma_table(), create(&dir.join("sigma_table.csv"))?),
    )
}

fn fmt_vec(v: &pdflow::problem::Vector) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Simulates and, on divergence, dumps the last valid state next to the
/// manifest before failing.
fn run(
    sys: &ComposedSystem,
    init: &FullState,
    opts: &IntegratorOptions,
    dir: &Path,
) -> Result<Trajectory, Failure> {
    match integrate(sys, init, opts) {
        Ok(t) => Ok(t),
        Err(Error::Divergence {
            t,
            last_valid_t,
            last_valid_state,
        }) => {
            let dump = serde_json::json!({
                "t": t,
                "last_valid_t": last_valid_t,
                "last_valid_state": last_valid_state,
            });
            let path = dir.join("divergence.json");
            write_text(&path, &serde_json::to_string_pretty(&dump).expect("json"))?;
            Err(Failure {
                code: EXIT_DIVERGENCE,
                message: format!(
                    "trajectory diverged at t = {t}; last valid state (t = {last_valid_t}) {:?} written to {}",
                    last_valid_state,
                    path.display()
                ),
            })
        }
        Err(e) => Err(e.into()),
    }
}

pub fn simulate(
    path: &Path,
    out: Option<PathBuf>,
    horizon: Option<f64>,
    dt_max: Option<f64>,
) -> CliResult {
    let scenario = load(path, horizon, dt_max)?;
    let dir = output_dir(out, &scenario);
    make_dir(&dir)?;
    write_text(&dir.join("manifest.json"), &scenario.manifest().to_json())?;

    let sys = scenario.system()?;
    let init = scenario.initial_state(&sys)?;
    let traj = run(&sys, &init, &scenario.integrator, &dir)?;
    write_run(&dir, &traj)?;

    let end = traj.terminal();
    println!(
        "{}: {} samples, {} activations, {} deactivations",
        scenario.name,
        traj.samples.len(),
        traj.ledger.activations().count(),
        traj.ledger.deactivations().count()
    );
    println!(
        "t = {}  x = {}  lambda = {}  mu = {}  sigma = {}",
        end.t,
        fmt_vec(&end.state.x),
        fmt_vec(&end.state.lambda),
        fmt_vec(&end.state.mu),
        end.state.sigma
    );
    println!("artifacts in {}", dir.display());
    Ok(())
}

fn read_artifacts(dir: &Path) -> Result<(Scenario, Trajectory), Failure> {
    let corrupt = |what: &str, e: Error| Failure {
        code: EXIT_VALIDATION,
        message: format!(
            "missing or corrupt artifact {}: {e}",
            dir.join(what).display()
        ),
    };
    let scenario =
        Scenario::load(&dir.join("manifest.json")).map_err(|e| corrupt("manifest.json", e))?;
    let open = |name: &str| File::open(dir.join(name)).map_err(|e| corrupt(name, e.into()));
    let ledger =
        SwitchLedger::read_csv(open("ledger.csv")?).map_err(|e| corrupt("ledger.csv", e))?;
    let traj = Trajectory::read_csv(
        open("trajectory.csv")?,
        scenario.tau_mu.clone(),
        scenario.integrator,
        ledger,
    )
    .map_err(|e| corrupt("trajectory.csv", e))?;
    let (n, m, p) = scenario.model.dims();
    if (traj.dims.n, traj.dims.m, traj.dims.p) != (n, m, p) {
        return Err(corrupt(
            "trajectory.csv",
            Error::Format("dimensions do not match the manifest".into()),
        ));
    }
    Ok((scenario, traj))
}

fn convergence_report(
    dir: &Path,
    scenario: &Scenario,
    traj: &Trajectory,
) -> Result<CertificateReport, Failure> {
    let problem = scenario.problem()?;
    let oracle_path = dir.join("oracle.json");
    let oracle = if oracle_path.exists() {
        let text = fs::read_to_string(&oracle_path).map_err(|e| Failure {
            code: EXIT_VALIDATION,
            message: format!("{}: {e}", oracle_path.display()),
        })?;
        serde_json::from_str::<KktPoint>(&text).map_err(|e| Failure {
            code: EXIT_VALIDATION,
            message: format!("corrupt artifact {}: {e}", oracle_path.display()),
        })?
    } else {
        match active_set_oracle(&problem) {
            Ok(k) => k,
            Err(e) => {
                return Ok(CertificateReport::not_applicable(
                    Certificate::Convergence,
                    "oracle".into(),
                    format!("no oracle point: {e}"),
                ))
            }
        }
    };
    Ok(check_convergence(
        traj,
        &problem,
        &oracle,
        ConvergenceTolerance::default(),
    )?)
}

pub fn verify(dir: &Path) -> CliResult {
    let (scenario, traj) = read_artifacts(dir)?;
    let mut reports = Vec::new();
    for cert in &scenario.certificates {
        match cert {
            Certificate::UnforcedDecrease => reports.push(check_unforced_decrease(&traj)),
            Certificate::HybridPassivity => reports.extend(check_hybrid_passivity_all(&traj)),
            Certificate::SwitchLedger => reports.push(check_switch_ledger(&traj)),
            Certificate::QuadraticNorm => {
                let mu_bar = traj.terminal().state.mu.clone();
                reports.push(check_quadratic_norm(&traj, &mu_bar).unwrap_or_else(|e| {
                    CertificateReport::not_applicable(
                        Certificate::QuadraticNorm,
                        "terminal mu".into(),
                        e.to_string(),
                    )
                }))
            }
            Certificate::Convergence => reports.push(convergence_report(dir, &scenario, &traj)?),
        }
    }
    let table = render_table(&reports);
    write_text(&dir.join("report.txt"), &table)?;
    write_text(
        &dir.join("report.json"),
        &serde_json::to_string_pretty(&reports).expect("reports serialise"),
    )?;
    print!("{table}");
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| r.failed())
        .map(|r| format!("{} ({})", r.name, r.target))
        .collect();
    if failed.is_empty() {
        println!("all applicable certificates hold");
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_CERTIFICATE,
            message: format!("certificate failure: {}", failed.join(", ")),
        })
    }
}

pub fn oracle(path: &Path, out: Option<PathBuf>) -> CliResult {
    let scenario = load(path, None, None)?;
    let problem = scenario.problem()?;
    let k = active_set_oracle(&problem)?;
    let r = kkt_residual(&problem, &k)?;
    println!("x*      = {}", fmt_vec(&k.x_star));
    println!("lambda* = {}", fmt_vec(&k.lambda_star));
    println!("mu*     = {}", fmt_vec(&k.mu_star));
    println!(
        "residuals: stationarity {:e}, equality {:e}, inequality {:e}, complementarity {:e}",
        r.stationarity, r.equality, r.inequality, r.complementarity
    );
    let dir = output_dir(out, &scenario);
    make_dir(&dir)?;
    write_text(
        &dir.join("oracle.json"),
        &serde_json::to_string_pretty(&k).expect("json"),
    )?;
    Ok(())
}

pub fn hvac_day(
    path: &Path,
    out: Option<PathBuf>,
    horizon: Option<f64>,
    dt_max: Option<f64>,
) -> CliResult {
    let scenario = load(path, None, dt_max)?;
    let Model::Hvac(h) = &scenario.model else {
        return Err(Failure {
            code: EXIT_VALIDATION,
            message: format!("{}: hvac-day needs an `hvac` scenario", path.display()),
        });
    };
    let dir = output_dir(out, &scenario);
    make_dir(&dir)?;
    write_text(&dir.join("manifest.json"), &scenario.manifest().to_json())?;

    let taus = scenario.hvac_taus().expect("building scenario");
    let initial = HvacState::from_full(&FullState {
        x: scenario.x0.clone().into(),
        lambda: scenario.lambda0.clone().into(),
        mu: scenario.mu0.clone().into(),
        sigma: Default::default(),
    })?;
    let opts = TouOptions {
        integrator: scenario.integrator,
        settle_time: horizon,
        tolerance: ConvergenceTolerance::default(),
    };
    let flat = h.schedule.flattened();
    let (tou, baseline) = std::thread::scope(|s| {
        let base = s
            .spawn(|| run_tou_scenario(&h.net, &h.params, &flat, &h.loads, &taus, &initial, &opts));
        let tou = run_tou_scenario(
            &h.net,
            &h.params,
            &h.schedule,
            &h.loads,
            &taus,
            &initial,
            &opts,
        );
        (tou, base.join().expect("baseline thread"))
    });
    let (tou, baseline): (DailyReport, DailyReport) = (tou?, baseline?);

    context("daily.csv", tou.write_csv(create(&dir.join("daily.csv"))?))?;
    context(
        "baseline.csv",
        baseline.write_csv(create(&dir.join("baseline.csv"))?),
    )?;
    for r in &tou.intervals {
        let sub = dir.join(format!("interval_{:02}", r.index + 1));
        make_dir(&sub)?;
        write_run(&sub, &r.trajectory)?;
    }
    for r in &tou.intervals {
        println!(
            "[{:>5.2}, {:>5.2}) h  price {:<5}  q = {:>8.4} kW  T = {}",
            r.start,
            r.end,
            r.price,
            r.terminal.q,
            fmt_vec(&r.terminal.t)
        );
    }
    println!(
        "peak supply {:.4} kW against {:.4} kW at flat price: peak reduction {:.2}%",
        tou.peak_supply(),
        baseline.peak_supply(),
        100.0 * peak_reduction(&baseline, &tou)
    );
    Ok(())
}

pub fn selftest(seed: u64, count: usize) -> CliResult {
    let mut r = rng(seed);
    let opts = IntegratorOptions {
        horizon: 300.0,
        ..Default::default()
    };
    let mut failures = Vec::new();
    for i in 0..count {
        let inst = random_qp(&mut r, &InstanceSpec::default());
        let problem = inst.data.problem()?;
        let sys = ComposedSystem::with_diagonal_taus(
            problem,
            &inst.tau_x,
            &inst.tau_lambda,
            &inst.tau_mu,
        )?;
        let init = FullState::new(
            &sys,
            inst.x0.clone(),
            inst.lambda0.clone(),
            inst.mu0.clone(),
        )?;
        let traj = integrate(&sys, &init, &opts)?;
        let oracle = active_set_oracle(sys.problem())?;
        let reports = [
            check_convergence(
                &traj,
                sys.problem(),
                &oracle,
                ConvergenceTolerance::default(),
            )?,
            check_unforced_decrease(&traj),
            check_switch_ledger(&traj),
        ];
        for rep in reports.iter().filter(|r| !r.passed) {
            failures.push(format!(
                "instance {i}: {} {} ({})",
                rep.name, rep.outcome, rep.detail
            ));
        }
    }
    println!(
        "selftest seed {seed}: {} of {count} instances passed",
        count - failures.len()
    );
    for f in &failures {
        println!("  {f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_CERTIFICATE,
            message: format!("{} selftest failures", failures.len()),
        })
    }
}
