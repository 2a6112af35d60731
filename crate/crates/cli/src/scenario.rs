//! Sweep execution, CSV rows and the route-equivalence report.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use casimir_core::barton::{barton_energy, BartonSetup};
use casimir_core::kernel::{friction_force, CouplingDrive};
use casimir_core::model::{product_coupling_operator, ProductSystem};
use casimir_core::perturbation::dissipated_energy_perturbative;
use casimir_core::propagator::{exact_dissipation, PropagationConfig};
use casimir_core::spectral::{dissipation_spectral, dissipation_timedomain, TimeDomainOptions};
use casimir_core::{CasimirError, DriveProfile, FockTruncation, OscillatorPair, ThermalEnsemble};
use rayon::prelude::*;

use crate::config::{DriveKind, Route, ScenarioConfig};
use crate::CliError;

/// A failed route on one row: a stable code for the CSV cell plus the message.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteError {
    pub code: &'static str,
    pub message: String,
}

impl From<CasimirError> for RouteError {
    fn from(e: CasimirError) -> Self {
        let code = match e {
            CasimirError::Domain { .. } => "domain",
            CasimirError::InvalidSystem(_) => "invalid_system",
            CasimirError::TruncationTail { .. } => "truncation_tail",
            CasimirError::TruncationSensitivity { .. } => "truncation_sensitivity",
            CasimirError::Quadrature { .. } => "quadrature",
            CasimirError::Precondition(_) => "precondition",
            CasimirError::StepUnderflow { .. } => "step_underflow",
            CasimirError::NormDrift { .. } => "norm_drift",
            CasimirError::StepBudget { .. } => "step_budget",
            CasimirError::ScalingNonConvergence { .. } => "scaling",
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn precondition(msg: &str) -> RouteError {
    CasimirError::Precondition(msg.into()).into()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub levels: Option<usize>,
    pub max_transition: Option<f64>,
    pub perturbative_valid: Option<bool>,
    pub norm_drift: Option<f64>,
    pub timedomain_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub coords: Vec<f64>,
    /// ΔE per route; the exact route reports ΔE/λ².
    pub values: BTreeMap<Route, Result<f64, RouteError>>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equivalence {
    pub a: Route,
    pub b: Route,
    pub max_rel_dev: f64,
    pub tolerance: f64,
    /// Rows where either route failed.
    pub failed_rows: usize,
}

impl Equivalence {
    pub fn pass(&self) -> bool {
        self.failed_rows == 0 && self.max_rel_dev <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub axes: Vec<String>,
    pub routes: Vec<Route>,
    pub rows: Vec<ReportRow>,
    pub equivalence: Vec<Equivalence>,
}

/// How far a route may sit from the exact first-order ΔE.
pub fn route_tolerance(route: Route, config: &ScenarioConfig) -> f64 {
    match route {
        Route::Perturbative | Route::Spectral | Route::Barton => 5e-13,
        // Truncated product space against the closed-form kernel.
        Route::Kubo => 1e-8,
        Route::Timedomain => 10.0 * config.timedomain_rel_tol,
        // ΔE/λ² carries an O(λ²) remainder on top of the integrator error.
        Route::Exact => 1e-4,
    }
}

pub fn relative_deviation(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

pub fn load_drive(kind: &DriveKind) -> Result<Option<DriveProfile>, CliError> {
    let DriveKind::Sampled { path } = kind else {
        return Ok(None);
    };
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let cols: Vec<f64> = content
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::DriveFile {
                path: path.clone(),
                line: i + 1,
            })?;
        let [t, q] = cols[..] else {
            return Err(CliError::DriveFile {
                path: path.clone(),
                line: i + 1,
            });
        };
        times.push(t);
        values.push(q);
    }
    Ok(Some(DriveProfile::sampled(times, values)?))
}

fn profile_for(c: &ScenarioConfig, sampled: Option<&DriveProfile>) -> Result<DriveProfile, RouteError> {
    Ok(match &c.drive {
        DriveKind::RampDamped { eta } => DriveProfile::ramp_damped(*eta)?,
        DriveKind::GaussianPulse { amplitude, center, width } => DriveProfile::gaussian_pulse(*amplitude, *center, *width)?,
        DriveKind::Sampled { .. } => sampled.cloned().ok_or_else(|| precondition("sampled drive not loaded"))?,
    })
}

fn truncation_for(c: &ScenarioConfig, pair: &OscillatorPair, e: ThermalEnsemble) -> Result<FockTruncation, RouteError> {
    Ok(match c.levels {
        Some(n) => {
            let t = FockTruncation::new(n)?.with_tolerance(c.tail_tolerance);
            t.check(pair, e)?;
            t
        }
        None => FockTruncation::for_ensemble(pair, e, c.tail_tolerance)?,
    })
}

/// Evaluates every requested route at one resolved parameter point.
pub fn evaluate_point(c: &ScenarioConfig, sampled: Option<&DriveProfile>) -> (BTreeMap<Route, Result<f64, RouteError>>, Diagnostics) {
    let mut diag = Diagnostics::default();
    let setup = (|| -> Result<_, RouteError> {
        let pair = OscillatorPair::new(c.m1, c.m2, c.omega1, c.omega2_effective(), c.hbar)?;
        let e = match c.beta {
            Some(b) => ThermalEnsemble::new(b)?,
            None => ThermalEnsemble::zero_temperature(),
        };
        Ok((pair, e, profile_for(c, sampled)?))
    })();
    let (pair, e, q) = match setup {
        Ok(s) => s,
        Err(err) => return (c.routes.iter().map(|&r| (r, Err(err.clone()))).collect(), diag),
    };

    let needs_space = c
        .routes
        .iter()
        .any(|r| matches!(r, Route::Perturbative | Route::Spectral | Route::Timedomain | Route::Exact));
    let space: Option<Result<ProductSystem, RouteError>> = needs_space.then(|| {
        let t = truncation_for(c, &pair, e)?;
        Ok(product_coupling_operator(&pair, &t, c.coupling)?)
    });
    if let Some(Ok(ps)) = &space {
        diag.levels = Some(ps.levels);
    }
    let system = || match &space {
        Some(Ok(ps)) => Ok(&ps.system),
        Some(Err(err)) => Err(err.clone()),
        None => unreachable!("product space is built whenever a route needs it"),
    };

    let mut values = BTreeMap::new();
    for &route in &c.routes {
        let v: Result<f64, RouteError> = match route {
            Route::Perturbative => system().and_then(|s| {
                let d = dissipated_energy_perturbative(s, e, &q, c.hbar)?;
                diag.max_transition = Some(d.populations.max_transition);
                diag.perturbative_valid = Some(d.populations.valid);
                Ok(d.energy)
            }),
            Route::Spectral => system().and_then(|s| Ok(dissipation_spectral(s, e, &q, c.hbar)?)),
            Route::Timedomain => system().and_then(|s| {
                let opts = TimeDomainOptions {
                    rel_tol: c.timedomain_rel_tol,
                    ..TimeDomainOptions::default()
                };
                let td = dissipation_timedomain(s, e, &q, c.hbar, opts)?;
                diag.timedomain_residual = Some(td.residual);
                Ok(td.energy)
            }),
            Route::Exact => system().and_then(|s| {
                let mut cfg = PropagationConfig::for_drive(&q, c.lambda).with_tolerance(c.exact_tolerance);
                cfg.hbar = c.hbar;
                let r = exact_dissipation(s, e, &q, &cfg)?;
                diag.norm_drift = Some(r.norm_drift);
                Ok(r.de_exact / (c.lambda * c.lambda))
            }),
            Route::Kubo => match &c.drive {
                DriveKind::RampDamped { eta } => (|| {
                    // ΔE = −v·F_f/(4η) for q = t e^{−ηt} with v·∇ψ = g.
                    let d = CouplingDrive::along_x(c.coupling, *eta)?;
                    let f = friction_force(&pair, e, &d)?;
                    Ok(-d.velocity.dot(&f.f_friction) / (4.0 * eta))
                })(),
                _ => Err(precondition("the kubo route needs drive.kind = ramp_damped")),
            },
            Route::Barton => {
                if !e.is_zero_temperature() {
                    Err(precondition("the barton route is a zero-temperature computation"))
                } else if pair.omega1 != pair.omega2 || pair.m1 != pair.m2 {
                    Err(precondition("the barton route needs identical oscillators"))
                } else {
                    (|| {
                        let s = BartonSetup::new(pair.omega1, pair.m1, pair.hbar)?;
                        Ok(c.coupling * c.coupling * barton_energy(&s, &q)?.energy)
                    })()
                }
            }
        };
        values.insert(route, v);
    }
    (values, diag)
}

/// Runs the sweep (points in parallel, rows in row-major order) and compares routes.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, CliError> {
    let sampled = load_drive(&config.drive)?;
    let grid = config.grid();
    let rows: Vec<ReportRow> = grid
        .par_iter()
        .map(|point| {
            let (values, diagnostics) = evaluate_point(&config.at(point), sampled.as_ref());
            ReportRow {
                coords: point.clone(),
                values,
                diagnostics,
            }
        })
        .collect();

    let mut equivalence = Vec::new();
    for (i, &a) in config.routes.iter().enumerate() {
        for &b in &config.routes[i + 1..] {
            let mut eq = Equivalence {
                a,
                b,
                max_rel_dev: 0.0,
                tolerance: route_tolerance(a, config) + route_tolerance(b, config),
                failed_rows: 0,
            };
            for row in &rows {
                match (&row.values[&a], &row.values[&b]) {
                    (Ok(x), Ok(y)) => eq.max_rel_dev = eq.max_rel_dev.max(relative_deviation(*x, *y)),
                    _ => eq.failed_rows += 1,
                }
            }
            equivalence.push(eq);
        }
    }
    Ok(ScenarioReport {
        axes: config.sweeps.iter().map(|a| a.param.key().to_string()).collect(),
        routes: config.routes.clone(),
        rows,
        equivalence,
    })
}

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.equivalence.iter().all(Equivalence::pass)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = self.axes.clone();
        h.extend(self.routes.iter().map(|r| format!("{r}_dE")));
        h.extend(
            ["levels", "max_transition", "perturbative_valid", "norm_drift", "timedomain_residual", "errors"]
                .map(String::from),
        );
        h
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.coords.iter().map(|&x| fmt_float(x)).collect();
            let mut errors = Vec::new();
            for r in &self.routes {
                rec.push(match &row.values[r] {
                    Ok(v) => fmt_float(*v),
                    Err(e) => {
                        errors.push(format!("{r}: {}", e.message));
                        format!("error:{}", e.code)
                    }
                });
            }
            let d = &row.diagnostics;
            rec.push(d.levels.map(|l| l.to_string()).unwrap_or_default());
            rec.push(opt_float(d.max_transition));
            rec.push(d.perturbative_valid.map(|v| v.to_string()).unwrap_or_default());
            rec.push(opt_float(d.norm_drift));
            rec.push(opt_float(d.timedomain_residual));
            rec.push(errors.join(" | "));
            w.write_record(rec)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is built from UTF-8 strings"))
    }

    /// One line per route pair: `pair max_rel_dev tolerance PASS|FAIL`.
    pub fn equivalence_text(&self) -> String {
        self.equivalence
            .iter()
            .map(|e| {
                format!(
                    "{}-{} {} {} {}\n",
                    e.a,
                    e.b,
                    fmt_float(e.max_rel_dev),
                    fmt_float(e.tolerance),
                    if e.pass() { "PASS" } else { "FAIL" }
                )
            })
            .collect()
    }

    /// Writes `results.csv` and `equivalence.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let io = |source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        };
        fs::create_dir_all(dir).map_err(io)?;
        fs::write(dir.join("results.csv"), self.to_csv()?).map_err(io)?;
        fs::write(dir.join("equivalence.txt"), self.equivalence_text()).map_err(io)?;
        Ok(())
    }
}
