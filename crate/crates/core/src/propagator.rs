//! Exact dynamics of a truncated level system under H(t) = H₀ − λ A q(t).
//!
//! Amplitudes are evolved in the interaction picture, c_n = e^{iE_n t/ħ}⟨n|ψ⟩,
//!
//!   ċ_n = (iλ q(t)/ħ) Σ_m A_nm e^{iω_nm t} c_m,
//!
//! with an adaptive Dormand–Prince 5(4) pair. The norm is monitored, never
//! restored, so integrator defects surface as errors instead of being hidden.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::drive::DriveProfile;
use crate::error::{positive, CasimirError, Result};
use crate::model::{boltzmann_weights, product_coupling_operator, FockTruncation, LevelSystem, OscillatorPair, ThermalEnsemble};
use crate::perturbation::dissipated_energy_perturbative;
use crate::quadrature::pairwise_sum;

pub const DEFAULT_LOCAL_TOLERANCE: f64 = 1e-10;
pub const NORM_DRIFT_LIMIT: f64 = 1e-9;
/// Relative change allowed when two Fock levels are added per oscillator.
pub const TRUNCATION_SENSITIVITY: f64 = 1e-8;
const AMPLITUDE_FLOOR_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub initial_step: f64,
    pub local_tolerance: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            initial_step: 1e-2,
            local_tolerance: DEFAULT_LOCAL_TOLERANCE,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub lambda: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub step_control: StepControl,
    /// Keep the constant ψ(r₀) part of the coupling, H = H₀ − λA(ψ₀ + q(t)).
    pub include_static: bool,
    pub static_offset: f64,
    pub hbar: f64,
}

impl PropagationConfig {
    /// Window covering the drive's support, ħ = 1, default step control.
    pub fn for_drive(profile: &DriveProfile, lambda: f64) -> Self {
        let (t_start, t_end) = profile.support();
        Self {
            lambda,
            t_start,
            t_end,
            step_control: StepControl::default(),
            include_static: false,
            static_offset: 0.0,
            hbar: 1.0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_tolerance(mut self, local_tolerance: f64) -> Self {
        self.step_control.local_tolerance = local_tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(CasimirError::Precondition(format!(
                "need t_end > t_start, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        let tol = self.step_control.local_tolerance;
        if !(tol > 1e-14 && tol < 1e-4) {
            return Err(CasimirError::Domain {
                name: "local_tolerance",
                value: tol,
                domain: "(1e-14, 1e-4)",
            });
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(CasimirError::Domain {
                name: "lambda",
                value: self.lambda,
                domain: ">= 0",
            });
        }
        positive("initial_step", self.step_control.initial_step)?;
        positive("hbar", self.hbar)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Schrödinger-picture amplitudes ⟨n|ψ(t_end)⟩.
    pub amplitudes: DVector<Complex64>,
    pub norm_drift: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    /// Final amplitudes for each propagated initial eigenstate, keyed by its index.
    pub final_amplitudes: Vec<(usize, DVector<Complex64>)>,
    pub norm_drift: f64,
    /// Σ_m P_m (⟨ψ_m|H₀|ψ_m⟩ − E_m).
    pub de_exact: f64,
    pub step_count: usize,
    /// Thermal weight of initial states not propagated (P_m below 1e-17 of the largest).
    pub skipped_weight: f64,
}

struct Rhs<'a> {
    nonzeros: Vec<(usize, usize, Complex64)>,
    energies: Vec<f64>,
    profile: &'a DriveProfile,
    config: &'a PropagationConfig,
}

impl Rhs<'_> {
    fn coupling_factor(&self, t: f64) -> f64 {
        let mut f = self.profile.value(t);
        if self.config.include_static {
            f += self.config.static_offset;
        }
        self.config.lambda * f / self.config.hbar
    }

    fn eval(&self, t: f64, c: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        let f = self.coupling_factor(t);
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        if f == 0.0 {
            return;
        }
        // v = e^{−iEt/ħ} c, w = A v, ċ = i f e^{iEt/ħ} w.
        for (k, s) in scratch.iter_mut().enumerate() {
            *s = Complex64::from_polar(1.0, -self.energies[k] * t / self.config.hbar) * c[k];
        }
        for &(i, j, a) in &self.nonzeros {
            out[i] += a * scratch[j];
        }
        for (k, o) in out.iter_mut().enumerate() {
            let back = Complex64::from_polar(1.0, self.energies[k] * t / self.config.hbar);
            *o = Complex64::new(0.0, f) * back * *o;
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Evolves the eigenstate `initial_index` from `t_start` to `t_end`.
pub fn evolve_state(
    system: &LevelSystem,
    profile: &DriveProfile,
    config: &PropagationConfig,
    initial_index: usize,
) -> Result<Trajectory> {
    config.validate()?;
    let n = system.dim();
    if initial_index >= n {
        return Err(CasimirError::Precondition(format!(
            "initial index {initial_index} outside {n} levels"
        )));
    }
    profile.check_decayed(config.t_end)?;
    let rhs = make_rhs(system, profile, config);
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    c[initial_index] = Complex64::new(1.0, 0.0);
    let (c, norm_drift, steps) = integrate(&rhs, c, config, amplitude_floor(system, profile, config))?;
    let amplitudes = DVector::from_iterator(
        n,
        c.iter().enumerate().map(|(k, z)| {
            Complex64::from_polar(1.0, -rhs.energies[k] * config.t_end / config.hbar) * z
        }),
    );
    Ok(Trajectory {
        amplitudes,
        norm_drift,
        steps,
    })
}

fn make_rhs<'a>(system: &LevelSystem, profile: &'a DriveProfile, config: &'a PropagationConfig) -> Rhs<'a> {
    let e0 = system.energies()[0];
    Rhs {
        nonzeros: system.coupling_nonzeros(),
        // Shifting by the ground energy only changes a global phase.
        energies: system.energies().iter().map(|e| e - e0).collect(),
        profile,
        config,
    }
}

/// Absolute floor of the per-component error scale: a fraction of the crude
/// amplitude bound λ·max|A|·max|q|·duration/ħ (capped at 1).
///
/// The bound overestimates off-resonant amplitudes by orders of magnitude; taking
/// a small fraction keeps them resolved relative to their own size, which is what
/// makes dE converge under tolerance refinement.
fn amplitude_floor(system: &LevelSystem, profile: &DriveProfile, config: &PropagationConfig) -> f64 {
    let a_max = system.coupling().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut q = profile.peak_magnitude();
    if config.include_static {
        q += config.static_offset.abs();
    }
    (AMPLITUDE_FLOOR_FRACTION * config.lambda * a_max * q * (config.t_end - config.t_start) / config.hbar).clamp(1e-300, 1.0)
}

fn integrate(
    rhs: &Rhs<'_>,
    mut y: Vec<Complex64>,
    config: &PropagationConfig,
    floor: f64,
) -> Result<(Vec<Complex64>, f64, usize)> {
    let n = y.len();
    let sc = config.step_control;
    let tol = sc.local_tolerance;
    let (t_start, t_end) = (config.t_start, config.t_end);
    let mut k = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let mut stage = vec![Complex64::new(0.0, 0.0); n];
    let mut y_new = vec![Complex64::new(0.0, 0.0); n];
    let mut t = t_start;
    let mut h = sc.initial_step.min(t_end - t_start);
    let mut drift = 0.0f64;
    let mut steps = 0usize;
    let mut attempts = 0usize;
    rhs.eval(t, &y, &mut k[0], &mut scratch);
    while t < t_end {
        attempts += 1;
        if attempts > sc.max_steps {
            return Err(CasimirError::StepBudget {
                budget: sc.max_steps,
                t,
            });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (r, kr) in k.iter().enumerate().take(s) {
                    let a = A[s][r];
                    if a != 0.0 {
                        acc += kr[i] * (h * a);
                    }
                }
                stage[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs.eval(t + C[s] * h, &stage, &mut tail[0], &mut scratch);
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
        }
        // Error estimate from the embedded pair.
        let mut err = 0.0f64;
        for i in 0..n {
            let mut e = Complex64::new(0.0, 0.0);
            for (r, kr) in k.iter().enumerate() {
                if E[r] != 0.0 {
                    e += kr[i] * (h * E[r]);
                }
            }
            let scale = tol * (floor + y[i].norm().max(y_new[i].norm()));
            err = err.max(e.norm() / scale);
        }
        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: the last stage is the derivative at the new point.
            k.swap(0, 6);
            steps += 1;
            let norm = pairwise_sum(&y.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).sqrt();
            drift = drift.max((norm - 1.0).abs());
            if drift > NORM_DRIFT_LIMIT {
                return Err(CasimirError::NormDrift {
                    drift,
                    limit: NORM_DRIFT_LIMIT,
                    steps,
                    budget: sc.max_steps,
                });
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if t < t_end && h < 1e-14 * t.abs().max(1.0) {
            return Err(CasimirError::StepUnderflow { t, step: h });
        }
    }
    Ok((y, drift, steps))
}

/// Thermally averaged energy change of the driven system.
pub fn exact_dissipation(
    system: &LevelSystem,
    ensemble: ThermalEnsemble,
    profile: &DriveProfile,
    config: &PropagationConfig,
) -> Result<EvolutionResult> {
    config.validate()?;
    profile.check_decayed(config.t_end)?;
    let bw = boltzmann_weights(ensemble, system.energies())?;
    let p_max = bw.weights.iter().copied().fold(0.0, f64::max);
    let (run, skipped): (Vec<usize>, Vec<usize>) =
        (0..system.dim()).partition(|&m| bw.weights[m] > 1e-17 * p_max);
    let skipped_weight = pairwise_sum(&skipped.iter().map(|&m| bw.weights[m]).collect::<Vec<_>>());

    let e = system.energies();
    let trajectories: Vec<(usize, Trajectory)> = run
        .par_iter()
        .map(|&m| evolve_state(system, profile, config, m).map(|tr| (m, tr)))
        .collect::<Result<_>>()?;
    let terms: Vec<f64> = trajectories
        .iter()
        .map(|(m, tr)| {
            let gains: Vec<f64> = tr
                .amplitudes
                .iter()
                .enumerate()
                .filter(|&(n, _)| n != *m)
                .map(|(n, z)| z.norm_sqr() * (e[n] - e[*m]))
                .collect();
            bw.weights[*m] * pairwise_sum(&gains)
        })
        .collect();
    Ok(EvolutionResult {
        de_exact: pairwise_sum(&terms),
        norm_drift: trajectories.iter().map(|t| t.1.norm_drift).fold(0.0, f64::max),
        step_count: trajectories.iter().map(|t| t.1.steps).sum(),
        final_amplitudes: trajectories.into_iter().map(|(m, t)| (m, t.amplitudes)).collect(),
        skipped_weight,
    })
}

/// Exact dissipation of the oscillator pair with A = −strength·x₁x₂, checked for
/// truncation stability by repeating with two more levels per oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEvolution {
    pub result: EvolutionResult,
    pub levels: usize,
    pub extended_de: f64,
    pub relative_change: f64,
}

pub fn exact_dissipation_pair(
    pair: &OscillatorPair,
    ensemble: ThermalEnsemble,
    profile: &DriveProfile,
    config: &PropagationConfig,
    truncation: &FockTruncation,
    strength: f64,
) -> Result<PairEvolution> {
    truncation.check(pair, ensemble)?;
    let coarse = product_coupling_operator(pair, truncation, strength)?;
    let bigger = truncation.extended(2);
    let fine = product_coupling_operator(pair, &bigger, strength)?;
    let result = exact_dissipation(&coarse.system, ensemble, profile, config)?;
    let extended = exact_dissipation(&fine.system, ensemble, profile, config)?;
    let relative_change = relative(result.de_exact, extended.de_exact);
    if relative_change > TRUNCATION_SENSITIVITY {
        return Err(CasimirError::TruncationSensitivity {
            levels: truncation.levels,
            levels_plus_two: bigger.levels,
            coarse: result.de_exact,
            fine: extended.de_exact,
            relative: relative_change,
        });
    }
    Ok(PairEvolution {
        levels: truncation.levels,
        extended_de: extended.de_exact,
        relative_change,
        result,
    })
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub lambda: f64,
    pub de_exact: f64,
    pub ratio: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// Relative change of dE/λ² between the last two entries.
    pub last_change: f64,
    /// Richardson estimate of lim dE/λ² (corrections are O(λ²)).
    pub limit: f64,
    /// First-order ΔE at unit coupling on the same system.
    pub perturbative: f64,
    pub limit_deviation: f64,
}

/// dE(λ)/λ² for a descending λ list; errors if the last two ratios differ by 1 % or more.
pub fn quadratic_scaling_check(
    system: &LevelSystem,
    ensemble: ThermalEnsemble,
    profile: &DriveProfile,
    lambdas: &[f64],
    config: &PropagationConfig,
) -> Result<ScalingTable> {
    if lambdas.len() < 3 {
        return Err(CasimirError::Precondition("need at least 3 lambda values".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) || lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CasimirError::Precondition(
            "lambda values must be positive and strictly descending".into(),
        ));
    }
    let rows: Vec<ScalingRow> = lambdas
        .iter()
        .map(|&lambda| {
            let r = exact_dissipation(system, ensemble, profile, &config.with_lambda(lambda))?;
            Ok(ScalingRow {
                lambda,
                de_exact: r.de_exact,
                ratio: r.de_exact / (lambda * lambda),
                norm_drift: r.norm_drift,
            })
        })
        .collect::<Result<_>>()?;
    let k = rows.len();
    let (prev, last) = (&rows[k - 2], &rows[k - 1]);
    let last_change = relative(last.ratio, prev.ratio);
    if !(last_change < 0.01) {
        return Err(CasimirError::ScalingNonConvergence {
            table: rows.iter().map(|r| (r.lambda, r.ratio)).collect(),
        });
    }
    let s = (prev.lambda / last.lambda).powi(2);
    let limit = (s * last.ratio - prev.ratio) / (s - 1.0);
    let perturbative = dissipated_energy_perturbative(system, ensemble, profile, config.hbar)?.energy;
    Ok(ScalingTable {
        last_change,
        limit,
        limit_deviation: relative(limit, perturbative),
        perturbative,
        rows,
    })
}
