//! Refinement tables: η → 0 toward the resonance weight, more Fock levels, tighter
//! integrator tolerance.

use std::fmt::Write as _;

use casimir_core::kernel::{delta_weight_coefficient, detuning_integral, CouplingDrive};
use casimir_core::model::product_coupling_operator;
use casimir_core::perturbation::dissipated_energy_perturbative;
use casimir_core::propagator::{exact_dissipation, PropagationConfig};
use casimir_core::spectral::{dissipation_spectral, dissipation_timedomain, TimeDomainOptions};
use casimir_core::{CasimirError, DriveProfile, FockTruncation, OscillatorPair, ThermalEnsemble};

use crate::config::{DriveKind, Route, ScenarioConfig};
use crate::scenario::{fmt_float, load_drive, relative_deviation};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    HalveEta,
    AddLevels,
    HalveTolerance,
}

impl Refinement {
    pub fn name(self) -> &'static str {
        match self {
            Refinement::HalveEta => "halve_eta",
            Refinement::AddLevels => "add_levels",
            Refinement::HalveTolerance => "halve_tolerance",
        }
    }
}

/// Expected successive error ratio for an O(η) approach, and the accepted spread.
pub const ETA_RATIO: f64 = 0.5;
pub const ETA_RATIO_SPREAD: f64 = 0.15;
/// Change between level additions regarded as converged.
pub const LEVELS_CONVERGED: f64 = 1e-10;
/// Largest accepted change under a halved integrator tolerance.
pub const TOLERANCE_CHANGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub step: usize,
    /// η, levels per oscillator, or local tolerance.
    pub parameter: f64,
    pub observable: Result<f64, String>,
    /// |observable − reference| for halve_eta, relative change to the previous row otherwise.
    pub change: Option<f64>,
    pub ratio: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub refinement: Refinement,
    pub observable: String,
    pub reference: Option<f64>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn render(&self) -> String {
        let mut s = format!("# {} on {}", self.refinement.name(), self.observable);
        if let Some(r) = self.reference {
            let _ = write!(s, " (reference {})", fmt_float(r));
        }
        s.push_str("\nstep,parameter,observable,change,ratio,status\n");
        for r in &self.rows {
            let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.step,
                fmt_float(r.parameter),
                match &r.observable {
                    Ok(v) => fmt_float(*v),
                    Err(e) => format!("error: {}", e.replace(',', ";")),
                },
                opt(r.change),
                opt(r.ratio),
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        s
    }
}

fn ensemble(c: &ScenarioConfig) -> Result<ThermalEnsemble, CasimirError> {
    c.beta.map_or(Ok(ThermalEnsemble::zero_temperature()), ThermalEnsemble::new)
}

/// Refines one parameter of the scenario's base point (first sweep point when sweeps exist).
pub fn convergence_report(config: &ScenarioConfig, refinement: Refinement, steps: usize) -> Result<ConvergenceTable, CliError> {
    if steps < 2 {
        return Err(CliError::Usage("convergence needs --steps >= 2".into()));
    }
    let base = config.at(&config.grid()[0]);
    match refinement {
        Refinement::HalveEta => halve_eta(&base, steps),
        Refinement::AddLevels => add_levels(&base, steps),
        Refinement::HalveTolerance => halve_tolerance(&base, steps),
    }
}

/// 4η·ΔE of the difference channel integrated over detuning, against the η-independent
/// resonance weight; the errors should halve with η.
fn halve_eta(c: &ScenarioConfig, steps: usize) -> Result<ConvergenceTable, CliError> {
    let DriveKind::RampDamped { eta } = c.drive else {
        return Err(CliError::Usage("halve_eta needs drive.kind = ramp_damped".into()));
    };
    let pair = OscillatorPair::new(c.m1, c.m2, c.omega1, c.omega1, c.hbar)?;
    let e = ensemble(c)?;
    let g2 = c.coupling * c.coupling;
    let reference = -g2 * delta_weight_coefficient(&pair, e);
    let range = (-c.kubo_halfwidth * c.omega1, c.kubo_halfwidth * c.omega1);
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for step in 0..steps {
        let eta = eta / 2f64.powi(step as i32);
        let obs = CouplingDrive::along_x(c.coupling, eta)
            .and_then(|d| detuning_integral(&pair, e, &d, range, c.kubo_panels))
            .map(|r| -g2 * r.coefficient)
            .map_err(|err| err.to_string());
        let change = obs.as_ref().ok().map(|v| (v - reference).abs());
        let prev = rows.last().and_then(|r| r.change);
        let ratio = match (change, prev) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        };
        let pass = match (&obs, ratio) {
            (Err(_), _) => false,
            // Exact agreement (e.g. T = 0, where both sides vanish).
            (Ok(_), None) => step == 0 || change == Some(0.0),
            (Ok(_), Some(r)) => (r - ETA_RATIO).abs() <= ETA_RATIO_SPREAD,
        };
        rows.push(ConvergenceRow {
            step,
            parameter: eta,
            observable: obs,
            change,
            ratio,
            pass,
        });
    }
    Ok(ConvergenceTable {
        refinement: Refinement::HalveEta,
        observable: "4 eta dE, difference channel integrated over detuning".into(),
        reference: Some(reference),
        rows,
    })
}

fn successive(rows: &[ConvergenceRow], obs: &Result<f64, String>) -> (Option<f64>, Option<f64>) {
    let prev = rows.last();
    let change = match (prev.map(|r| &r.observable), obs) {
        (Some(Ok(a)), Ok(b)) => Some(relative_deviation(*a, *b)),
        _ => None,
    };
    let ratio = match (change, prev.and_then(|r| r.change)) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    (change, ratio)
}

fn add_levels(c: &ScenarioConfig, steps: usize) -> Result<ConvergenceTable, CliError> {
    let sampled = load_drive(&c.drive)?;
    let q = drive_profile(c, sampled)?;
    let pair = OscillatorPair::new(c.m1, c.m2, c.omega1, c.omega2_effective(), c.hbar)?;
    let e = ensemble(c)?;
    let start = match c.levels {
        Some(n) => n,
        None => FockTruncation::for_ensemble(&pair, e, c.tail_tolerance)?.levels,
    };
    let route = c
        .routes
        .iter()
        .copied()
        .find(|r| matches!(r, Route::Perturbative | Route::Spectral | Route::Timedomain | Route::Exact))
        .unwrap_or(Route::Perturbative);
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for step in 0..steps {
        let levels = start + step;
        let obs = (|| -> Result<f64, CasimirError> {
            let ps = product_coupling_operator(&pair, &FockTruncation::new(levels)?, c.coupling)?;
            let s = &ps.system;
            Ok(match route {
                Route::Spectral => dissipation_spectral(s, e, &q, c.hbar)?,
                Route::Timedomain => {
                    let opts = TimeDomainOptions {
                        rel_tol: c.timedomain_rel_tol,
                        ..TimeDomainOptions::default()
                    };
                    dissipation_timedomain(s, e, &q, c.hbar, opts)?.energy
                }
                Route::Exact => {
                    let mut cfg = PropagationConfig::for_drive(&q, c.lambda).with_tolerance(c.exact_tolerance);
                    cfg.hbar = c.hbar;
                    exact_dissipation(s, e, &q, &cfg)?.de_exact / (c.lambda * c.lambda)
                }
                _ => dissipated_energy_perturbative(s, e, &q, c.hbar)?.energy,
            })
        })()
        .map_err(|err| err.to_string());
        let (change, ratio) = successive(&rows, &obs);
        let pass = obs.is_ok()
            && match change {
                None => step == 0,
                Some(ch) => ch <= LEVELS_CONVERGED || ratio.is_none_or(|r| r <= 1.0),
            };
        rows.push(ConvergenceRow {
            step,
            parameter: levels as f64,
            observable: obs,
            change,
            ratio,
            pass,
        });
    }
    Ok(ConvergenceTable {
        refinement: Refinement::AddLevels,
        observable: format!("{route} dE"),
        reference: None,
        rows,
    })
}

fn halve_tolerance(c: &ScenarioConfig, steps: usize) -> Result<ConvergenceTable, CliError> {
    let sampled = load_drive(&c.drive)?;
    let q = drive_profile(c, sampled)?;
    let pair = OscillatorPair::new(c.m1, c.m2, c.omega1, c.omega2_effective(), c.hbar)?;
    let e = ensemble(c)?;
    let trunc = match c.levels {
        Some(n) => FockTruncation::new(n)?,
        None => FockTruncation::for_ensemble(&pair, e, c.tail_tolerance)?,
    };
    let ps = product_coupling_operator(&pair, &trunc, c.coupling)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for step in 0..steps {
        let tol = c.exact_tolerance / 2f64.powi(step as i32);
        let mut cfg = PropagationConfig::for_drive(&q, c.lambda).with_tolerance(tol);
        cfg.hbar = c.hbar;
        let obs = exact_dissipation(&ps.system, e, &q, &cfg)
            .map(|r| r.de_exact / (c.lambda * c.lambda))
            .map_err(|err| err.to_string());
        let (change, ratio) = successive(&rows, &obs);
        let pass = obs.is_ok() && change.is_none_or(|ch| ch < TOLERANCE_CHANGE);
        rows.push(ConvergenceRow {
            step,
            parameter: tol,
            observable: obs,
            change,
            ratio,
            pass,
        });
    }
    Ok(ConvergenceTable {
        refinement: Refinement::HalveTolerance,
        observable: format!("exact dE/lambda^2 ({} levels)", trunc.levels),
        reference: None,
        rows,
    })
}

fn drive_profile(c: &ScenarioConfig, sampled: Option<DriveProfile>) -> Result<DriveProfile, CliError> {
    Ok(match c.drive {
        DriveKind::RampDamped { eta } => DriveProfile::ramp_damped(eta)?,
        DriveKind::GaussianPulse { amplitude, center, width } => DriveProfile::gaussian_pulse(amplitude, center, width)?,
        DriveKind::Sampled { .. } => sampled.expect("load_drive returns the sampled profile"),
    })
}
