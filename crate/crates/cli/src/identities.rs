//! Closed-form identities checked against independent numerics, on seeded random parameters.

use std::f64::consts::{PI, SQRT_2};

use casimir_core::barton::{mode_matrix_element, normal_mode_drives, BartonSetup};
use casimir_core::kernel::{coth_prefactor_difference, damped_first_moment};
use casimir_core::model::thermal_occupation;
use casimir_core::quadrature::{integrate_with_breaks, uniform_breaks, QuadOptions};
use casimir_core::{DriveProfile, Result, ThermalEnsemble};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn pass(&self) -> bool {
        self.deviation <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<32} max deviation {:.3e} (tolerance {:.0e})",
            if self.pass() { "PASS" } else { "FAIL" },
            self.name,
            self.deviation,
            self.tolerance
        )
    }
}

/// `CF_SEED` if set to an integer, otherwise [`DEFAULT_SEED`].
pub fn seed_from_env() -> u64 {
    std::env::var("CF_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-11,
        max_intervals: 100_000,
    }
}

/// Half-period panels out to e^{−60} of the ramp.
fn ramp_breaks(eta: f64, omega: f64) -> Vec<f64> {
    uniform_breaks(0.0, 60.0 / eta, PI / omega.max(eta))
}

/// ∫₀^∞ t e^{−ηt} cos(ω₁t) sin(ω₂t) dt.
fn damped_moment(rng: &mut ChaCha8Rng, samples: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (w1, w2, eta) = (rng.random_range(0.5..2.5), rng.random_range(0.5..2.5), rng.random_range(0.2..1.0));
        let q = integrate_with_breaks(
            |t: f64| t * (-eta * t).exp() * (w1 * t).cos() * (w2 * t).sin(),
            &ramp_breaks(eta, w1 + w2),
            opts(),
        )?;
        worst = worst.max(rel(damped_first_moment(w1, w2, eta)?, q.value));
    }
    Ok(worst)
}

/// coth x₁ − coth x₂ in the sinh form, and coth(βħω/2) = 2⟨n⟩ + 1.
fn coth_prefactors(rng: &mut ChaCha8Rng, samples: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let beta = rng.random_range(0.2..3.0);
        let (w1, w2) = (rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
        let e = ThermalEnsemble::new(beta)?;
        let (c1, c2) = (1.0 / (0.5 * beta * w1).tanh(), 1.0 / (0.5 * beta * w2).tanh());
        let gap = coth_prefactor_difference(e, w1, w2, 1.0)?;
        worst = worst.max((gap - (c1 - c2)).abs() / (c1 + c2));
        worst = worst.max(rel(thermal_occupation(e, w1, 1.0)?.coth_factor, c1));
    }
    Ok(worst)
}

/// ∫ q̇² dt = 1/(4η) and ∫ q̇ q dt = 0 for q = t e^{−ηt}.
fn ramp_energy_factor(rng: &mut ChaCha8Rng, samples: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let eta = rng.random_range(0.01..2.0);
        let q = DriveProfile::ramp_damped(eta)?;
        let br = ramp_breaks(eta, eta);
        let tight = QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-13,
            ..opts()
        };
        let sq = integrate_with_breaks(|t: f64| q.derivative(t).powi(2), &br, tight)?;
        let scale = integrate_with_breaks(|t: f64| (q.derivative(t) * q.value(t)).abs(), &br, opts())?;
        let cross = integrate_with_breaks(
            |t: f64| q.derivative(t) * q.value(t),
            &br,
            QuadOptions {
                abs_tol: 1e-13 * scale.value,
                ..tight
            },
        )?;
        worst = worst.max(rel(sq.value, 1.0 / (4.0 * eta))).max(cross.value.abs() / scale.value);
    }
    Ok(worst)
}

/// ⟨2|y²|0⟩ = √2 b and y₁y₂ = ½(y₊² − y₋²).
fn mode_element(rng: &mut ChaCha8Rng, samples: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let s = BartonSetup::new(rng.random_range(0.3..3.0), rng.random_range(0.3..3.0), 1.0)?;
        worst = worst.max(rel(mode_matrix_element(&s)? / s.b(), SQRT_2));
        let d = normal_mode_drives(&s, 12)?;
        worst = worst.max(d.identity_deviation / d.product.amax());
    }
    Ok(worst)
}

/// q̂(ω) = 1/(η + iω)² for the ramp, against direct quadrature.
fn ramp_fourier(rng: &mut ChaCha8Rng, samples: usize) -> Result<f64> {
    let unit = DriveProfile::ramp_damped(1.0)?.fourier(0.0)?;
    let mut worst = (unit - Complex64::new(1.0, 0.0)).norm();
    for _ in 0..samples {
        let (eta, w) = (rng.random_range(0.2..1.5), rng.random_range(0.0..4.0));
        let q = DriveProfile::ramp_damped(eta)?;
        let direct = integrate_with_breaks(
            |t: f64| Complex64::from_polar(q.value(t), -w * t),
            &ramp_breaks(eta, w),
            opts(),
        )?;
        let analytic = q.fourier(w)?;
        worst = worst.max((analytic - direct.value).norm() / analytic.norm());
    }
    Ok(worst)
}

pub fn run_identities(seed: u64) -> Result<Vec<IdentityCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        IdentityCheck {
            name: "damped first moment",
            deviation: damped_moment(&mut rng, 8)?,
            tolerance: 1e-10,
        },
        IdentityCheck {
            name: "coth prefactor difference",
            deviation: coth_prefactors(&mut rng, 16)?,
            tolerance: 1e-12,
        },
        IdentityCheck {
            name: "ramp energy factor 1/(4 eta)",
            deviation: ramp_energy_factor(&mut rng, 8)?,
            tolerance: 1e-12,
        },
        IdentityCheck {
            name: "normal-mode matrix element",
            deviation: mode_element(&mut rng, 8)?,
            tolerance: 1e-13,
        },
        IdentityCheck {
            name: "ramp Fourier transform",
            deviation: ramp_fourier(&mut rng, 8)?,
            tolerance: 1e-10,
        },
    ])
}
