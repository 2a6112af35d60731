//! Kubo-route friction: the commutator kernel φ(t), its damped moments and the
//! reversible and friction forces at finite convergence rate η.
//!
//! The two channels of the kernel are kept apart throughout. The sum channel
//! (frequency Ω₁ = ω₁ + ω₂) raises or lowers both oscillators together and is the
//! only one present at T = 0. The difference channel (Ω₂ = ω₁ − ω₂) exchanges a
//! quantum between the oscillators; it vanishes pointwise at resonance and its
//! weight there is only visible after integrating over the detuning.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{positive, CasimirError, Result};
use crate::model::{thermal_occupation, OscillatorPair, ThermalEnsemble};
use crate::quadrature::{gauss_legendre_10_nodes, pairwise_sum};

pub type Vec3 = Vector3<f64>;

/// Linearized coupling ψ(r₀ + vt) ≈ ψ₀ + (v·∇ψ) t, switched off as e^{−ηt}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingDrive {
    pub psi0: f64,
    pub grad_psi: Vec3,
    pub velocity: Vec3,
    pub eta: f64,
}

impl CouplingDrive {
    pub fn new(psi0: f64, grad_psi: Vec3, velocity: Vec3, eta: f64) -> Result<Self> {
        positive("eta", eta)?;
        if !psi0.is_finite() || grad_psi.iter().chain(velocity.iter()).any(|x| !x.is_finite()) {
            return Err(CasimirError::Domain {
                name: "grad_psi/velocity",
                value: f64::NAN,
                domain: "finite",
            });
        }
        Ok(Self {
            psi0,
            grad_psi,
            velocity,
            eta,
        })
    }

    /// Drive along x with unit gradient and the given speed.
    pub fn along_x(speed: f64, eta: f64) -> Result<Self> {
        Self::new(0.0, Vec3::x(), Vec3::new(speed, 0.0, 0.0), eta)
    }

    /// g = v·∇ψ, the rate at which the coupling changes.
    pub fn coupling_rate(&self) -> f64 {
        self.velocity.dot(&self.grad_psi)
    }

    /// G = (∇ψ)(v·∇ψ).
    pub fn dyadic(&self) -> Vec3 {
        self.grad_psi * self.coupling_rate()
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.psi0, self.grad_psi, self.velocity, eta)
    }

    pub fn with_velocity(&self, velocity: Vec3) -> Result<Self> {
        Self::new(self.psi0, self.grad_psi, velocity, self.eta)
    }
}

/// Per-unit-G friction contributions of the two channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelBreakdown {
    pub omega1_plus_omega2_term: f64,
    pub omega1_minus_omega2_term: f64,
}

impl ChannelBreakdown {
    pub fn total(&self) -> f64 {
        self.omega1_plus_omega2_term + self.omega1_minus_omega2_term
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionResult {
    pub f_friction: Vec3,
    /// F_r / t; the reversible force grows linearly in t.
    pub reversible_rate: Vec3,
    pub eta_used: f64,
    pub channel_breakdown: ChannelBreakdown,
}

impl FrictionResult {
    pub fn reversible_at(&self, t: f64) -> Vec3 {
        self.reversible_rate * t
    }
}

/// The pair of coth factors (c₁, c₂) = (coth(βħω₁/2), coth(βħω₂/2)).
fn coth_factors(pair: &OscillatorPair, ensemble: ThermalEnsemble) -> Result<(f64, f64)> {
    Ok((
        thermal_occupation(ensemble, pair.omega1, pair.hbar)?.coth_factor,
        thermal_occupation(ensemble, pair.omega2, pair.hbar)?.coth_factor,
    ))
}

/// c₂ − c₁ from the sinh form, free of cancellation near resonance.
fn coth_gap(pair: &OscillatorPair, ensemble: ThermalEnsemble) -> f64 {
    if ensemble.is_zero_temperature() {
        return 0.0;
    }
    let h = 0.5 * ensemble.beta() * pair.hbar;
    let (x1, x2) = (h * pair.omega1, h * pair.omega2);
    let s = h * (pair.omega1 - pair.omega2);
    if x1.max(x2) > 350.0 {
        // sinh overflows; coth_2 − coth_1 = 2(e^{−2x₂} − e^{−2x₁}) + O(e^{−4x})
        return 2.0 * ((-2.0 * x2).exp() - (-2.0 * x1).exp());
    }
    s.sinh() / (x1.sinh() * x2.sinh())
}

/// φ(t) = D[c₁ cos ω₁t sin ω₂t + c₂ cos ω₂t sin ω₁t].
pub fn phi_kernel(t: f64, pair: &OscillatorPair, ensemble: ThermalEnsemble) -> Result<f64> {
    let (c1, c2) = coth_factors(pair, ensemble)?;
    let (w1, w2) = (pair.omega1, pair.omega2);
    Ok(pair.kernel_amplitude()
        * (c1 * (w1 * t).cos() * (w2 * t).sin() + c2 * (w2 * t).cos() * (w1 * t).sin()))
}

/// S(a) = ∫₀^∞ t e^{−ηt} sin(at) dt = 2ηa/(η² + a²)².
fn first_moment_sine(a: f64, eta: f64) -> f64 {
    let d = eta * eta + a * a;
    2.0 * eta * a / (d * d)
}

/// L(a) = ∫₀^∞ e^{−ηt} sin(at) dt = a/(η² + a²).
fn zeroth_moment_sine(a: f64, eta: f64) -> f64 {
    a / (eta * eta + a * a)
}

/// ∫₀^∞ t e^{−ηt} cos(ω₁t) sin(ω₂t) dt = ηΩ₁/(η²+Ω₁²)² − ηΩ₂/(η²+Ω₂²)².
pub fn damped_first_moment(omega1: f64, omega2: f64, eta: f64) -> Result<f64> {
    positive("eta", eta)?;
    let sum = omega1 + omega2;
    let diff = omega1 - omega2;
    Ok(0.5 * (first_moment_sine(sum, eta) - first_moment_sine(diff, eta)))
}

/// coth(βħω₁/2) − coth(βħω₂/2), returned in the form
/// −sinh(βħΩ₂/2) / (sinh(βħω₁/2) sinh(βħω₂/2)).
pub fn coth_prefactor_difference(
    ensemble: ThermalEnsemble,
    omega1: f64,
    omega2: f64,
    hbar: f64,
) -> Result<f64> {
    if ensemble.is_zero_temperature() {
        return Err(CasimirError::Domain {
            name: "beta",
            value: f64::INFINITY,
            domain: "finite (the coth identity is a finite-temperature statement)",
        });
    }
    let pair = OscillatorPair::new(1.0, 1.0, omega1, omega2, hbar)?;
    let stable = -coth_gap(&pair, ensemble);
    let (c1, c2) = coth_factors(&pair, ensemble)?;
    debug_assert!(
        (c1 - c2 - stable).abs() <= 1e-12 * (c1 + c2),
        "coth identity violated: {} vs {}",
        c1 - c2,
        stable
    );
    Ok(stable)
}

fn channels(pair: &OscillatorPair, ensemble: ThermalEnsemble, eta: f64) -> Result<ChannelBreakdown> {
    let (c1, c2) = coth_factors(pair, ensemble)?;
    let half_d = 0.5 * pair.kernel_amplitude();
    let sum = pair.omega1 + pair.omega2;
    let diff = pair.omega1 - pair.omega2;
    Ok(ChannelBreakdown {
        omega1_plus_omega2_term: -half_d * (c1 + c2) * first_moment_sine(sum, eta),
        omega1_minus_omega2_term: -half_d * coth_gap(pair, ensemble) * first_moment_sine(diff, eta),
    })
}

/// ∫₀^∞ φ(u) e^{−ηu} du in closed form.
fn damped_kernel_integral(pair: &OscillatorPair, ensemble: ThermalEnsemble, eta: f64) -> Result<f64> {
    let (c1, c2) = coth_factors(pair, ensemble)?;
    let sum = pair.omega1 + pair.omega2;
    let diff = pair.omega1 - pair.omega2;
    Ok(0.5
        * pair.kernel_amplitude()
        * ((c1 + c2) * zeroth_moment_sine(sum, eta)
            + coth_gap(pair, ensemble) * zeroth_moment_sine(diff, eta)))
}

/// F_f = −G ∫₀^∞ φ(u) u e^{−ηu} du, together with the reversible rate G ∫₀^∞ φ(u) e^{−ηu} du.
pub fn friction_force(
    pair: &OscillatorPair,
    ensemble: ThermalEnsemble,
    drive: &CouplingDrive,
) -> Result<FrictionResult> {
    let eta = positive("eta", drive.eta)?;
    let breakdown = channels(pair, ensemble, eta)?;
    let g = drive.dyadic();
    Ok(FrictionResult {
        f_friction: g * breakdown.total(),
        reversible_rate: g * damped_kernel_integral(pair, ensemble, eta)?,
        eta_used: eta,
        channel_breakdown: breakdown,
    })
}

/// F_r(t) = G t ∫₀^∞ φ(u) e^{−ηu} du.
pub fn reversible_force(
    pair: &OscillatorPair,
    ensemble: ThermalEnsemble,
    drive: &CouplingDrive,
    t: f64,
) -> Result<Vec3> {
    let eta = positive("eta", drive.eta)?;
    Ok(drive.dyadic() * (t * damped_kernel_integral(pair, ensemble, eta)?))
}

/// Friction from the frequency derivative of the damped transform
/// φ̃(ω) = ∫₀^∞ φ(t) e^{−iωt} e^{−ηt} dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDerivative {
    pub force: Vec3,
    /// Complex value of −i ∂φ̃/∂ω at ω = 0.
    pub derivative: Complex64,
    /// |Im| / |·| of that value.
    pub imaginary_residual: f64,
}

/// F_f = −iG ∂φ̃(ω)/∂ω |_{ω=0}, evaluated in complex arithmetic.
pub fn friction_via_spectral_derivative(
    pair: &OscillatorPair,
    ensemble: ThermalEnsemble,
    drive: &CouplingDrive,
) -> Result<SpectralDerivative> {
    let eta = positive("eta", drive.eta)?;
    let (c1, c2) = coth_factors(pair, ensemble)?;
    let i = Complex64::i();
    let z = Complex64::new(eta, 0.0); // η + iω at ω = 0
    // φ̃(ω) = (D/2) Σ_k w_k a_k / ((η+iω)² + a_k²) ; d/dω of the k-th term:
    let d_term = |a: f64| -> Complex64 {
        let den = z * z + a * a;
        -(2.0 * i * a * z) / (den * den)
    };
    let sum = pair.omega1 + pair.omega2;
    let diff = pair.omega1 - pair.omega2;
    let dphi = 0.5 * pair.kernel_amplitude() * ((c1 + c2) * d_term(sum) + coth_gap(pair, ensemble) * d_term(diff));
    let value = -i * dphi;
    let modulus = value.norm();
    Ok(SpectralDerivative {
        force: drive.dyadic() * value.re,
        derivative: value,
        imaginary_residual: if modulus > 0.0 { value.im.abs() / modulus } else { 0.0 },
    })
}

/// Coefficient of δ(ω₁ − ω₂) in the friction force per unit G:
/// −πβħ² / (8 m₁ m₂ ω₁² sinh²(βħω₁/2)).
pub fn delta_weight_coefficient(pair: &OscillatorPair, ensemble: ThermalEnsemble) -> f64 {
    if ensemble.is_zero_temperature() {
        return 0.0;
    }
    let beta = ensemble.beta();
    let x = 0.5 * beta * pair.hbar * pair.omega1;
    let sh = x.sinh();
    -PI * beta * pair.hbar * pair.hbar / (8.0 * pair.m1 * pair.m2 * pair.omega1.powi(2) * sh * sh)
}

/// The difference-channel friction force integrated over detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningIntegral {
    pub force: Vec3,
    /// Scalar multiplying G.
    pub coefficient: f64,
    pub eta: f64,
    pub range: (f64, f64),
    pub warning: Option<String>,
}

/// Which kernel channels enter a detuning integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetuningChannel {
    /// Only the Ω₂ = ω₁ − ω₂ channel, the one that builds the resonance weight.
    Difference,
    /// Both channels; the sum channel adds a smooth, η-independent background.
    Both,
}

/// Quadrature nodes `(Ω₂, weight)` for ∫ f(Ω₂) dΩ₂ over `range`.
///
/// The peak of width η at Ω₂ = 0 is resolved with the substitution Ω₂ = η sinh u;
/// `n_panels` 10-point Gauss–Legendre panels cover the u range.
pub fn detuning_nodes(eta: f64, range: (f64, f64), n_panels: usize) -> Result<Vec<(f64, f64)>> {
    positive("eta", eta)?;
    let (lo, hi) = range;
    if !(lo < 0.0 && hi > 0.0) {
        return Err(CasimirError::Precondition(format!(
            "detuning range ({lo}, {hi}) must straddle resonance"
        )));
    }
    if n_panels == 0 {
        return Err(CasimirError::Precondition("n_panels must be >= 1".into()));
    }
    let (u_lo, u_hi) = ((lo / eta).asinh(), (hi / eta).asinh());
    let h = (u_hi - u_lo) / n_panels as f64;
    let mut nodes = Vec::with_capacity(10 * n_panels);
    for k in 0..n_panels {
        let a = u_lo + h * k as f64;
        let b = if k + 1 == n_panels { u_hi } else { a + h };
        for (u, w) in gauss_legendre_10_nodes(a, b) {
            nodes.push((eta * u.sinh(), w * eta * u.cosh()));
        }
    }
    Ok(nodes)
}

/// Integrates the difference-channel friction over detunings Ω₂ ∈ `range`, with ω₁
/// held fixed and ω₂ = ω₁ − Ω₂.
pub fn detuning_integral(
    template: &OscillatorPair,
    ensemble: ThermalEnsemble,
    drive: &CouplingDrive,
    range: (f64, f64),
    n_panels: usize,
) -> Result<DetuningIntegral> {
    detuning_integral_channels(template, ensemble, drive, range, n_panels, DetuningChannel::Difference)
}

pub fn detuning_integral_channels(
    template: &OscillatorPair,
    ensemble: ThermalEnsemble,
    drive: &CouplingDrive,
    range: (f64, f64),
    n_panels: usize,
    channel: DetuningChannel,
) -> Result<DetuningIntegral> {
    let eta = positive("eta", drive.eta)?;
    let (lo, hi) = range;
    if hi >= template.omega1 {
        return Err(CasimirError::Precondition(format!(
            "detuning {hi} would make omega2 non-positive (omega1 = {})",
            template.omega1
        )));
    }
    let nodes = detuning_nodes(eta, range, n_panels)?;
    let warning = (hi - lo < 20.0 * eta)
        .then(|| format!("detuning range width {} is below 20 eta = {}", hi - lo, 20.0 * eta));

    let terms: Vec<f64> = nodes
        .par_iter()
        .map(|&(detuning, w)| {
            let pair = template.with_omega2(template.omega1 - detuning)?;
            let ch = channels(&pair, ensemble, eta)?;
            Ok(w * match channel {
                DetuningChannel::Difference => ch.omega1_minus_omega2_term,
                DetuningChannel::Both => ch.total(),
            })
        })
        .collect::<Result<_>>()?;
    let coefficient = pairwise_sum(&terms);
    Ok(DetuningIntegral {
        force: drive.dyadic() * coefficient,
        coefficient,
        eta,
        range,
        warning,
    })
}
