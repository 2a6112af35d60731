//! Zero-temperature dissipation of two identical oscillators coupled through
//! q(t)·y₁y₂, computed twice: in the normal-mode basis y± = (y₁ ± y₂)/√2, and as
//! the single |00⟩ → |11⟩ transition of the general perturbative machinery.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::drive::DriveProfile;
use crate::error::{positive, CasimirError, Result};
use crate::model::{position_matrix, product_coupling_operator, FockTruncation, Oscillator, OscillatorPair};
use crate::perturbation::transition_amplitudes;
use crate::quadrature::{gauss_legendre_10, pairwise_sum, uniform_breaks};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BartonSetup {
    pub omega: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl BartonSetup {
    pub fn new(omega: f64, mass: f64, hbar: f64) -> Result<Self> {
        Ok(Self {
            omega: positive("omega", omega)?,
            mass: positive("mass", mass)?,
            hbar: positive("hbar", hbar)?,
        })
    }

    /// b = ħ/(2mω).
    pub fn b(&self) -> f64 {
        self.hbar / (2.0 * self.mass * self.omega)
    }

    pub fn oscillator(&self) -> Oscillator {
        Oscillator {
            mass: self.mass,
            omega: self.omega,
            hbar: self.hbar,
        }
    }

    pub fn pair(&self) -> OscillatorPair {
        OscillatorPair {
            m1: self.mass,
            m2: self.mass,
            omega1: self.omega,
            omega2: self.omega,
            hbar: self.hbar,
        }
    }
}

/// q = e²/s³ for charge e and separation s in Gaussian units.
pub fn gaussian_units_coupling(e: f64, s: f64) -> Result<f64> {
    positive("s", s)?;
    Ok(e * e / s.powi(3))
}

/// A sampled drive q(t) = e²/s(t)³ along a separation history.
pub fn drive_from_trajectory(
    e: f64,
    separation: impl Fn(f64) -> f64,
    t0: f64,
    t1: f64,
    samples: usize,
) -> Result<DriveProfile> {
    if samples < 2 || !(t1 > t0) {
        return Err(CasimirError::Precondition("need at least two samples on t0 < t1".into()));
    }
    let h = (t1 - t0) / (samples - 1) as f64;
    let times: Vec<f64> = (0..samples).map(|k| t0 + h * k as f64).collect();
    let values = times
        .iter()
        .map(|&t| gaussian_units_coupling(e, separation(t)))
        .collect::<Result<Vec<f64>>>()?;
    DriveProfile::sampled(times, values)
}

/// Operators on the truncated product space, in the product basis |n₁ n₂⟩ (index n₁·N + n₂).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeDrives {
    /// +½ y₊²: multiplies q(t) in H_int.
    pub plus_mode: DMatrix<f64>,
    /// −½ y₋².
    pub minus_mode: DMatrix<f64>,
    pub plus_coupling: f64,
    pub minus_coupling: f64,
    pub product: DMatrix<f64>,
    /// max |y₁y₂ − (plus_mode + minus_mode)| entrywise.
    pub identity_deviation: f64,
}

pub fn normal_mode_drives(setup: &BartonSetup, levels: usize) -> Result<NormalModeDrives> {
    let x = position_matrix(&setup.oscillator(), levels)?;
    let id = DMatrix::<f64>::identity(levels, levels);
    let y1 = x.kronecker(&id);
    let y2 = id.kronecker(&x);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let yp = (&y1 + &y2) * s;
    let ym = (&y1 - &y2) * s;
    let (plus_coupling, minus_coupling) = (0.5, -0.5);
    let plus_mode = &yp * &yp * plus_coupling;
    let minus_mode = &ym * &ym * minus_coupling;
    let product = &y1 * &y2;
    let identity_deviation = (&product - (&plus_mode + &minus_mode)).amax();
    Ok(NormalModeDrives {
        plus_mode,
        minus_mode,
        plus_coupling,
        minus_coupling,
        product,
        identity_deviation,
    })
}

/// ⟨2|y²|0⟩ for one mode, read off the truncated position matrix.
pub fn mode_matrix_element(setup: &BartonSetup) -> Result<f64> {
    let x = position_matrix(&setup.oscillator(), 4)?;
    Ok((&x * &x)[(2, 0)])
}

/// One normal mode's share of the Barton energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeContribution {
    pub coupling: f64,
    /// First-order amplitude for |0⟩ → |2⟩ of this mode.
    pub amplitude: Complex64,
    pub probability: f64,
    /// 2ħω × probability.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BartonEnergy {
    pub energy: f64,
    /// I(∞) = −(i/2ħ) ∫ q(t) e^{2iωt} dt.
    pub integral: Complex64,
    pub integral_error: f64,
    pub modes: [ModeContribution; 2],
}

/// I(∞) = −(i/2ħ) ∫ q(t) e^{2iωt} dt by composite 10-point Gauss–Legendre.
///
/// Panels are at most a quarter period wide (and narrower than a Gaussian's
/// width), with breaks at kinks and sample knots; the error estimate is the
/// change under one uniform halving. Fixed panels avoid the roundoff floor an
/// adaptive scheme hits on long ramp windows.
pub fn barton_integral(setup: &BartonSetup, profile: &DriveProfile) -> Result<(Complex64, f64)> {
    let (t0, mut t1) = profile.support();
    let mut width = 0.25 * std::f64::consts::PI / setup.omega;
    match profile {
        // The default window leaves ~e^{−30} of the drive; go to e^{−80}.
        DriveProfile::RampDamped { eta } => t1 = t0 + 80.0 / eta,
        DriveProfile::GaussianPulse { width: w, .. } => width = width.min(0.5 * w),
        DriveProfile::Sampled(_) => {}
    }
    let mut breaks = uniform_breaks(t0, t1, width);
    breaks.extend(profile.kinks().into_iter().filter(|&k| k > t0 && k < t1));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let w2 = 2.0 * setup.omega;
    let f = |t: f64| profile.value(t) * Complex64::from_polar(1.0, w2 * t);
    let composite = |split: usize| {
        let panels: Vec<Complex64> = breaks
            .windows(2)
            .flat_map(|w| {
                let h = (w[1] - w[0]) / split as f64;
                (0..split).map(move |k| (w[0] + h * k as f64, w[0] + h * (k + 1) as f64))
            })
            .map(|(a, b)| gauss_legendre_10(&f, a, b))
            .collect();
        pairwise_sum(&panels)
    };
    let (coarse, fine) = (composite(1), composite(2));
    let pref = Complex64::new(0.0, -0.5 / setup.hbar);
    Ok((pref * fine, (fine - coarse).norm() / (2.0 * setup.hbar)))
}

/// ΔE = 8ħω b² |I(∞)|², assembled mode by mode.
pub fn barton_energy(setup: &BartonSetup, profile: &DriveProfile) -> Result<BartonEnergy> {
    let (integral, integral_error) = barton_integral(setup, profile)?;
    let element = mode_matrix_element(setup)?;
    let mode = |coupling: f64| {
        // (1/iħ) ∫ ⟨2|coupling·q y²|0⟩ e^{2iωt} dt = 2·coupling·⟨2|y²|0⟩·I(∞)
        let amplitude = integral * (2.0 * coupling * element);
        let probability = amplitude.norm_sqr();
        ModeContribution {
            coupling,
            amplitude,
            probability,
            energy: 2.0 * setup.hbar * setup.omega * probability,
        }
    };
    let modes = [mode(0.5), mode(-0.5)];
    Ok(BartonEnergy {
        energy: modes[0].energy + modes[1].energy,
        integral,
        integral_error,
        modes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct B1100Route {
    /// ⟨11|A|00⟩ for A = −y₁y₂.
    pub a_1100: f64,
    pub b_1100: f64,
    pub energy: f64,
}

/// ΔE = 2ħω B₁₁₀₀ from the product-basis transition table with A = −y₁y₂.
pub fn b1100_route_energy(setup: &BartonSetup, profile: &DriveProfile) -> Result<B1100Route> {
    let pair = setup.pair();
    let trunc = FockTruncation::new(3)?;
    let ps = product_coupling_operator(&pair, &trunc, 1.0)?;
    let table = transition_amplitudes(&ps.system, profile, setup.hbar)?;
    let (g, e) = (ps.index(0, 0), ps.index(1, 1));
    let a_1100 = ps.system.coupling()[(e, g)];
    if a_1100.im != 0.0 {
        return Err(CasimirError::InvalidSystem("A_1100 should be real".into()));
    }
    let b_1100 = table.probabilities[(e, g)];
    Ok(B1100Route {
        a_1100: a_1100.re,
        b_1100,
        energy: 2.0 * setup.hbar * setup.omega * b_1100,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowCouplingRow {
    pub eta: f64,
    pub de: f64,
    /// 4ηΔE, the friction-power proxy.
    pub eta_times_de: f64,
    /// ΔE·(η² + 4ω²)², constant for the ramp drive.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlowCouplingTable {
    pub rows: Vec<SlowCouplingRow>,
    /// b²/(8ħω³): the η → 0 limit at unit coupling.
    pub limit: f64,
    pub proxy_monotone: bool,
    pub bounded: bool,
}

/// ΔE(η) for q = t e^{−ηt} along a descending η sequence.
pub fn slow_coupling_null(setup: &BartonSetup, etas: &[f64]) -> Result<SlowCouplingTable> {
    if etas.is_empty() || etas.iter().any(|&e| !(e > 0.0)) || etas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CasimirError::Precondition(
            "eta sequence must be positive and strictly descending".into(),
        ));
    }
    let w = setup.omega;
    let rows: Vec<SlowCouplingRow> = etas
        .iter()
        .map(|&eta| {
            let de = b1100_route_energy(setup, &DriveProfile::ramp_damped(eta)?)?.energy;
            Ok(SlowCouplingRow {
                eta,
                de,
                eta_times_de: 4.0 * eta * de,
                normalized: de * (eta * eta + 4.0 * w * w).powi(2),
            })
        })
        .collect::<Result<_>>()?;
    let b = setup.b();
    let limit = b * b / (8.0 * setup.hbar * w.powi(3));
    Ok(SlowCouplingTable {
        proxy_monotone: rows.windows(2).all(|r| r[1].eta_times_de < r[0].eta_times_de),
        bounded: rows.iter().all(|r| r.de <= limit),
        rows,
        limit,
    })
}

/// First-order amplitudes out of the product ground state, (n₁, n₂, |b|²).
pub fn ground_state_channels(setup: &BartonSetup, profile: &DriveProfile, levels: usize) -> Result<Vec<(usize, usize, f64)>> {
    let ps = product_coupling_operator(&setup.pair(), &FockTruncation::new(levels)?, 1.0)?;
    let table = transition_amplitudes(&ps.system, profile, setup.hbar)?;
    let g = ps.index(0, 0);
    Ok((0..ps.system.dim())
        .filter(|&k| k != g)
        .map(|k| {
            let (a, b) = ps.label(k);
            (a, b, table.probabilities[(k, g)])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> BartonSetup {
        BartonSetup::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn mode_identity_holds() {
        let d = normal_mode_drives(&unit(), 8).unwrap();
        assert!(d.identity_deviation < 1e-13);
        assert_eq!(d.plus_coupling, -d.minus_coupling);
        let odd = BartonSetup::new(1.7, 0.6, 0.9).unwrap();
        for n in [2, 5, 12] {
            assert!(normal_mode_drives(&odd, n).unwrap().identity_deviation < 1e-13);
        }
    }

    #[test]
    fn mode_matrix_element_is_sqrt2_b() {
        for s in [unit(), BartonSetup::new(2.5, 0.3, 1.2).unwrap()] {
            let v = mode_matrix_element(&s).unwrap();
            assert!((v / s.b() - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_drive_gives_zero() {
        let q = DriveProfile::gaussian_pulse(0.0, 3.0, 1.0).unwrap();
        assert_eq!(barton_energy(&unit(), &q).unwrap().energy, 0.0);
        assert_eq!(b1100_route_energy(&unit(), &q).unwrap().energy, 0.0);
    }

    #[test]
    fn b1100_element_and_probability() {
        let s = BartonSetup::new(1.3, 0.8, 1.0).unwrap();
        let q = DriveProfile::ramp_damped(0.2).unwrap();
        let r = b1100_route_energy(&s, &q).unwrap();
        assert!((r.a_1100 + s.b()).abs() < 1e-15);
        let (i, _) = barton_integral(&s, &q).unwrap();
        assert!((r.b_1100 - 4.0 * s.b().powi(2) * i.norm_sqr()).abs() < 1e-12 * r.b_1100);
    }

    #[test]
    fn routes_agree_for_ramp() {
        let s = unit();
        let q = DriveProfile::ramp_damped(0.2).unwrap();
        let a = barton_energy(&s, &q).unwrap();
        let b = b1100_route_energy(&s, &q).unwrap();
        assert!((a.energy - b.energy).abs() <= 1e-12 * b.energy, "{} vs {}", a.energy, b.energy);
        // 2ħω b² |q̂(2ω)|² / ħ²
        let want = 2.0 * s.b().powi(2) * q.power(2.0).unwrap();
        assert!((a.energy - want).abs() <= 1e-12 * want);
        assert!((a.modes[0].energy - a.modes[1].energy).abs() == 0.0);
    }

    #[test]
    fn routes_agree_for_sampled_pulse() {
        let s = unit();
        let q = DriveProfile::sample_fn(|t| (-(t - 3.0f64).powi(2)).exp(), -5.0, 11.0, 801).unwrap();
        let a = barton_energy(&s, &q).unwrap();
        let b = b1100_route_energy(&s, &q).unwrap();
        assert!((a.energy - b.energy).abs() <= 1e-10 * b.energy, "{} vs {}", a.energy, b.energy);
    }

    #[test]
    fn only_the_double_excitation_is_reached() {
        let q = DriveProfile::ramp_damped(0.3).unwrap();
        for (a, b, p) in ground_state_channels(&unit(), &q, 5).unwrap() {
            if (a, b) == (1, 1) {
                assert!(p > 0.0);
            } else {
                assert_eq!(p, 0.0, "({a}, {b})");
            }
        }
    }

    #[test]
    fn slow_coupling_table() {
        let t = slow_coupling_null(&unit(), &[0.1, 0.05, 0.025]).unwrap();
        assert!(t.proxy_monotone && t.bounded);
        for w in t.rows.windows(2) {
            let r = w[1].eta_times_de / w[0].eta_times_de;
            assert!((r - 0.5).abs() < 0.01, "{r}");
            assert!((w[1].normalized - w[0].normalized).abs() <= 1e-12 * w[0].normalized);
        }
        assert!((t.limit - 1.0 / 32.0).abs() < 1e-16);
        assert!(slow_coupling_null(&unit(), &[0.1, 0.2]).is_err());
    }

    #[test]
    fn limit_scales_with_frequency_at_fixed_b() {
        // b ∝ 1/ω at fixed mass; with b held fixed the limit goes as ω⁻³.
        let s1 = unit();
        let s10 = BartonSetup::new(10.0, 0.1, 1.0).unwrap();
        assert!((s10.b() - s1.b()).abs() < 1e-15);
        let a = slow_coupling_null(&s1, &[1e-3]).unwrap().limit;
        let b = slow_coupling_null(&s10, &[1e-3]).unwrap().limit;
        assert!((a / b - 1e3).abs() < 1e-9);
    }

    #[test]
    fn gaussian_units_helper() {
        assert_eq!(gaussian_units_coupling(2.0, 2.0).unwrap(), 0.5);
        assert!(gaussian_units_coupling(1.0, 0.0).is_err());
        let q = drive_from_trajectory(1.0, |t| 2.0 + t * t, -20.0, 20.0, 401).unwrap();
        assert!((q.value(0.0) - 0.125).abs() < 1e-12);
        assert!(drive_from_trajectory(1.0, |t| t, -1.0, 1.0, 11).is_err());
    }
}
