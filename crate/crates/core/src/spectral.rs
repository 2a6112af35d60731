//! The spectral route: φ_AA(t) from the eigen-decomposition of a level system,
//! the dissipated energy from its spectral weights, the time-domain double
//! integral, and the resonant closed forms for the oscillator pair.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::drive::{DriveProfile, RAMP_DECAY_WINDOW};
use crate::error::{positive, CasimirError, Result};
use crate::kernel::{
    delta_weight_coefficient, detuning_integral_channels, detuning_nodes, CouplingDrive,
    DetuningChannel, DetuningIntegral,
};
use crate::model::{
    boltzmann_weights, product_coupling_operator, FockTruncation, LevelSystem, OscillatorPair,
    ThermalEnsemble,
};
use crate::perturbation::{dissipated_energy_perturbative, grouped_sinh_weight};
use crate::quadrature::{gauss_legendre_10_nodes, integrate_with_breaks, pairwise_sum, QuadOptions};

/// Spectral weights M_nm = −(1/Z) e^{−β(E_n+E_m)/2} sinh(βΔ_nm/2) |A_nm|².
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResponse {
    /// Antisymmetric: M_mn = −M_nm, M_nn = 0.
    pub m: DMatrix<f64>,
    pub omega_nm: DMatrix<f64>,
    /// Z = Σ e^{−βE_n}; NaN at T = 0, where the ground multiplet is used directly.
    pub partition: f64,
    pub hbar: f64,
}

pub fn spectral_response(
    system: &LevelSystem,
    ensemble: ThermalEnsemble,
    hbar: f64,
) -> Result<SpectralResponse> {
    positive("hbar", hbar)?;
    let n = system.dim();
    let e = system.energies();
    let a = system.coupling();
    let bw = boltzmann_weights(ensemble, e)?;
    let shifted: Vec<f64> = e.iter().map(|x| x - bw.energy_shift).collect();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j + 1..n {
            let a2 = a[(i, j)].norm_sqr();
            if a2 == 0.0 {
                continue;
            }
            let w = if ensemble.is_zero_temperature() {
                0.5 * (bw.weights[j] - bw.weights[i])
            } else {
                grouped_sinh_weight(bw.beta, shifted[i], shifted[j]) / bw.shifted_partition
            };
            m[(i, j)] = -w * a2;
            m[(j, i)] = w * a2;
        }
    }
    Ok(SpectralResponse {
        m,
        omega_nm: DMatrix::from_fn(n, n, |i, j| (e[i] - e[j]) / hbar),
        partition: bw.partition(),
        hbar,
    })
}

impl SpectralResponse {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// φ_AA(t) = (1/iħ) Σ_nm M_nm (e^{−iω_nm t} − e^{iω_nm t}), summed literally.
    pub fn phi_complex(&self, t: f64) -> Complex64 {
        let n = self.dim();
        let mut terms = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let mnm = self.m[(i, j)];
                if mnm != 0.0 {
                    let ph = Complex64::from_polar(1.0, -self.omega_nm[(i, j)] * t);
                    terms.push(mnm * (ph - ph.conj()));
                }
            }
        }
        pairwise_sum(&terms) / Complex64::new(0.0, self.hbar)
    }

    /// Real part of [`Self::phi_complex`] via −(2/ħ) Σ M_nm sin(ω_nm t).
    pub fn phi(&self, t: f64) -> f64 {
        pairwise_sum(
            &self
                .sine_series()
                .iter()
                .map(|&(w, c)| c * (w * t).sin())
                .collect::<Vec<_>>(),
        )
    }

    /// φ_AA(t) = Σ_k c_k sin(ω_k t) over distinct positive frequencies.
    pub fn sine_series(&self) -> Vec<(f64, f64)> {
        let n = self.dim();
        let mut raw = Vec::new();
        for j in 0..n {
            for i in j + 1..n {
                let w = self.omega_nm[(i, j)];
                let mnm = self.m[(i, j)];
                if mnm != 0.0 && w > 0.0 {
                    raw.push((w, -4.0 * mnm / self.hbar));
                }
            }
        }
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (w, c) in raw {
            match merged.last_mut() {
                Some(last) if (w - last.0).abs() <= 1e-14 * w => last.1 += c,
                _ => merged.push((w, c)),
            }
        }
        merged
    }
}

/// ΔE = (1/ħ) Σ_nm M_nm ω_mn q̂(ω_nm) q̂(−ω_nm), the frequency bound as ω_mn = −ω_nm.
///
/// With M as defined above this binding reproduces the population route term by
/// term and is non-negative; q̂(−ω) is taken as conj q̂(ω).
pub fn dissipation_spectral(
    system: &LevelSystem,
    ensemble: ThermalEnsemble,
    profile: &DriveProfile,
    hbar: f64,
) -> Result<f64> {
    let resp = spectral_response(system, ensemble, hbar)?;
    dissipation_from_response(&resp, profile)
}

pub fn dissipation_from_response(resp: &SpectralResponse, profile: &DriveProfile) -> Result<f64> {
    let n = resp.dim();
    let mut terms = Vec::new();
    for j in 0..n {
        for i in j + 1..n {
            let mnm = resp.m[(i, j)];
            if mnm == 0.0 {
                continue;
            }
            let w = resp.omega_nm[(i, j)];
            let qhat = profile.fourier(w)?;
            let power = (qhat * qhat.conj()).re;
            // (n, m) and (m, n) contribute equally.
            terms.push(mnm * (-w) * power);
            terms.push(resp.m[(j, i)] * w * power);
        }
    }
    Ok(pairwise_sum(&terms) / resp.hbar)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainOptions {
    /// End of the outer integral; defaults to the drive's decay window (30/η for ramps).
    pub t_max: Option<f64>,
    pub rel_tol: f64,
    /// Refinement levels (each halves every panel) before giving up.
    pub max_refinements: usize,
}

impl Default for TimeDomainOptions {
    fn default() -> Self {
        Self {
            t_max: None,
            rel_tol: 1e-6,
            max_refinements: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomainDissipation {
    pub energy: f64,
    /// |last − previous| between the two finest refinements.
    pub residual: f64,
    pub panels: usize,
    pub t_range: (f64, f64),
}

/// ΔE = −∫ dt q̇(t) ∫_{−∞}^t φ_AA(t − t') q(t') dt' by nested Gauss–Legendre panels.
///
/// The kernel is a finite sine series, so sin(ω(t − t')) splits into running
/// cos/sin moments of q; on each refinement every panel is halved until two
/// successive estimates agree to `rel_tol`.
pub fn dissipation_timedomain(
    system: &LevelSystem,
    ensemble: ThermalEnsemble,
    profile: &DriveProfile,
    hbar: f64,
    opts: TimeDomainOptions,
) -> Result<TimeDomainDissipation> {
    let resp = spectral_response(system, ensemble, hbar)?;
    timedomain_from_response(&resp, profile, opts)
}

pub fn timedomain_from_response(
    resp: &SpectralResponse,
    profile: &DriveProfile,
    opts: TimeDomainOptions,
) -> Result<TimeDomainDissipation> {
    let (t0, default_end) = profile.support();
    let t_max = opts.t_max.unwrap_or(default_end);
    if !(t_max > t0) {
        return Err(CasimirError::Precondition(format!(
            "t_max = {t_max} does not exceed the drive start {t0}"
        )));
    }
    profile.check_decayed(t_max)?;
    let series = resp.sine_series();
    if series.is_empty() || profile.peak_magnitude() == 0.0 {
        return Ok(TimeDomainDissipation {
            energy: 0.0,
            residual: 0.0,
            panels: 0,
            t_range: (t0, t_max),
        });
    }
    let w_max = series.iter().map(|s| s.0).fold(0.0, f64::max);
    let span = t_max - t0;
    let mut base: Vec<f64> = vec![t0];
    let mut kinks: Vec<f64> = profile
        .kinks()
        .into_iter()
        .filter(|&k| k > t0 && k < t_max)
        .collect();
    kinks.push(t_max);
    let width = (std::f64::consts::PI / w_max).min(span / 8.0);
    for k in kinks {
        let last = *base.last().unwrap();
        let pieces = ((k - last) / width).ceil().max(1.0) as usize;
        for p in 1..=pieces {
            base.push(if p == pieces { k } else { last + (k - last) * p as f64 / pieces as f64 });
        }
    }

    let mut previous: Option<f64> = None;
    let mut breaks = base;
    for _ in 0..=opts.max_refinements {
        let energy = nested_panels(&series, profile, &breaks);
        if let Some(prev) = previous {
            let residual = (energy - prev).abs();
            if residual <= opts.rel_tol * energy.abs() || residual == 0.0 {
                return Ok(TimeDomainDissipation {
                    energy,
                    residual,
                    panels: breaks.len() - 1,
                    t_range: (t0, t_max),
                });
            }
        }
        previous = Some(energy);
        breaks = bisect(&breaks);
    }
    let energy = previous.unwrap();
    let finer = nested_panels(&series, profile, &breaks);
    Err(CasimirError::Quadrature {
        estimate: finer,
        residual: (finer - energy).abs(),
        intervals: breaks.len() - 1,
    })
}

fn bisect(breaks: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * breaks.len());
    for w in breaks.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*breaks.last().unwrap());
    out
}

fn nested_panels(series: &[(f64, f64)], profile: &DriveProfile, breaks: &[f64]) -> f64 {
    let k = series.len();
    // Running ∫_{t0}^{a} cos(ω t') q(t') dt' and the sine counterpart.
    let mut cos_mom = vec![0.0; k];
    let mut sin_mom = vec![0.0; k];
    let mut outer = Vec::with_capacity(breaks.len());
    let mut partial_c = vec![0.0; k];
    let mut partial_s = vec![0.0; k];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut panel = 0.0;
        for (t, wt) in gauss_legendre_10_nodes(a, b) {
            partial_c.copy_from_slice(&cos_mom);
            partial_s.copy_from_slice(&sin_mom);
            for (tp, wp) in gauss_legendre_10_nodes(a, t) {
                let q = profile.value(tp) * wp;
                for (idx, &(om, _)) in series.iter().enumerate() {
                    let (s, c) = (om * tp).sin_cos();
                    partial_c[idx] += c * q;
                    partial_s[idx] += s * q;
                }
            }
            let mut inner = 0.0;
            for (idx, &(om, coef)) in series.iter().enumerate() {
                let (s, c) = (om * t).sin_cos();
                inner += coef * (s * partial_c[idx] - c * partial_s[idx]);
            }
            panel -= wt * profile.derivative(t) * inner;
        }
        outer.push(panel);
        for (tp, wp) in gauss_legendre_10_nodes(a, b) {
            let q = profile.value(tp) * wp;
            for (idx, &(om, _)) in series.iter().enumerate() {
                let (s, c) = (om * tp).sin_cos();
                cos_mom[idx] += c * q;
                sin_mom[idx] += s * q;
            }
        }
    }
    pairwise_sum(&outer)
}

/// Closed forms for the resonant pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantClosedForm {
    /// πβγ²/(8η sinh²(βħω₁/2)) with γ² = (Dħ/2)(v·∇ψ)²; zero at T = 0.
    pub delta_weight_de: f64,
    pub gamma_sq: f64,
    /// ∫₀^∞ q̇² dt by quadrature, and its exact value 1/(4η).
    pub qdot_sq_integral: f64,
    pub qdot_sq_exact: f64,
    /// ∫₀^∞ q̇ q dt by quadrature (exactly zero), relative to ∫ |q̇ q| dt.
    pub qdot_q_relative: f64,
    /// −v·F/(4η) from the detuning-integrated friction force.
    pub energy_from_friction: f64,
    pub detuning: DetuningIntegral,
}

pub fn resonant_closed_form(
    pair: &OscillatorPair,
    ensemble: ThermalEnsemble,
    drive: &CouplingDrive,
    range: (f64, f64),
    n_panels: usize,
    channel: DetuningChannel,
) -> Result<ResonantClosedForm> {
    let eta = positive("eta", drive.eta)?;
    let g = drive.coupling_rate();
    let gamma_sq = 0.5 * pair.kernel_amplitude() * pair.hbar * g * g;
    // delta_weight_coefficient carries −πβħ²/(8m₁m₂ω₁² sinh²); γ² absorbs Dħ/2 = ħ²/(4m₁m₂ω₁ω₂).
    let delta_weight_de = if ensemble.is_zero_temperature() {
        0.0
    } else {
        let x = 0.5 * ensemble.beta() * pair.hbar * pair.omega1;
        std::f64::consts::PI * ensemble.beta() * gamma_sq / (8.0 * eta * x.sinh().powi(2))
    };
    debug_assert!({
        let via_force = -delta_weight_coefficient(pair, ensemble) * g * g / (4.0 * eta);
        pair.omega1 != pair.omega2
            || (via_force - delta_weight_de).abs() <= 1e-12 * delta_weight_de.abs().max(1e-300)
    });

    let q = DriveProfile::ramp_damped(eta)?;
    let upper = 2.0 * RAMP_DECAY_WINDOW / eta;
    let breaks = crate::quadrature::uniform_breaks(0.0, upper, 1.0 / eta);
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 10_000,
    };
    let sq = integrate_with_breaks(|t: f64| q.derivative(t).powi(2), &breaks, opts)?;
    let cross_scale =
        integrate_with_breaks(|t: f64| (q.derivative(t) * q.value(t)).abs(), &breaks, opts)?;
    // The signed integral vanishes; its tolerance is set against ∫|q̇q|.
    let cross = integrate_with_breaks(
        |t: f64| q.derivative(t) * q.value(t),
        &breaks,
        QuadOptions {
            abs_tol: 1e-13 * cross_scale.value,
            ..opts
        },
    )?;

    let detuning = detuning_integral_channels(pair, ensemble, drive, range, n_panels, channel)?;
    let energy_from_friction = -drive.velocity.dot(&detuning.force) / (4.0 * eta);
    Ok(ResonantClosedForm {
        delta_weight_de,
        gamma_sq,
        qdot_sq_integral: sq.value,
        qdot_sq_exact: 1.0 / (4.0 * eta),
        qdot_q_relative: cross.value.abs() / cross_scale.value,
        energy_from_friction,
        detuning,
    })
}

/// The pair's perturbative ΔE integrated over detuning with the same nodes as the
/// friction-force detuning integral.
#[derive(Debug, Clone, PartialEq)]
pub struct DetunedPerturbative {
    pub energy: f64,
    pub max_levels: usize,
    pub nodes: usize,
}

/// ∫ ΔE(Ω₂) dΩ₂ with ΔE from first-order perturbation theory on the truncated
/// product space, coupling A = −(v·∇ψ) x₁x₂ and q = t e^{−ηt}.
pub fn detuning_integrated_perturbative(
    template: &OscillatorPair,
    ensemble: ThermalEnsemble,
    drive: &CouplingDrive,
    range: (f64, f64),
    n_panels: usize,
    tail_tolerance: f64,
) -> Result<DetunedPerturbative> {
    let eta = positive("eta", drive.eta)?;
    if range.1 >= template.omega1 {
        return Err(CasimirError::Precondition(format!(
            "detuning {} would make omega2 non-positive",
            range.1
        )));
    }
    let nodes = detuning_nodes(eta, range, n_panels)?;
    let q = DriveProfile::ramp_damped(eta)?;
    let g = drive.coupling_rate();
    let rows: Vec<(f64, usize)> = nodes
        .par_iter()
        .map(|&(detuning, w)| {
            let pair = template.with_omega2(template.omega1 - detuning)?;
            let trunc = FockTruncation::for_ensemble(&pair, ensemble, tail_tolerance)?;
            let ps = product_coupling_operator(&pair, &trunc, g)?;
            let d = dissipated_energy_perturbative(&ps.system, ensemble, &q, pair.hbar)?;
            Ok((w * d.energy, trunc.levels))
        })
        .collect::<Result<_>>()?;
    let terms: Vec<f64> = rows.iter().map(|r| r.0).collect();
    Ok(DetunedPerturbative {
        energy: pairwise_sum(&terms),
        max_levels: rows.iter().map(|r| r.1).max().unwrap_or(0),
        nodes: nodes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{friction_force, phi_kernel};
    use crate::perturbation::dissipated_energy_perturbative;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ens(beta: f64) -> ThermalEnsemble {
        ThermalEnsemble::new(beta).unwrap()
    }

    fn random_system(rng: &mut ChaCha8Rng, n: usize) -> LevelSystem {
        let mut e: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
        e.sort_by(f64::total_cmp);
        let mut a = DMatrix::from_element(n, n, c(0.0));
        for j in 0..n {
            for i in j + 1..n {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        LevelSystem::new(e, a).unwrap()
    }

    fn two_level(gap: f64, a01: f64) -> LevelSystem {
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0), c(a01), c(a01), c(0.0)]);
        LevelSystem::new(vec![0.0, gap], a).unwrap()
    }

    #[test]
    fn diagonal_coupling_has_no_response() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-2.0), c(0.5)]));
        let s = LevelSystem::new(vec![0.0, 1.0, 3.0], a).unwrap();
        let r = spectral_response(&s, ens(1.0), 1.0).unwrap();
        assert!(r.m.iter().all(|&x| x == 0.0));
        assert_eq!(r.phi(2.3), 0.0);
        let q = DriveProfile::ramp_damped(0.3).unwrap();
        assert_eq!(dissipation_spectral(&s, ens(1.0), &q, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn phi_vanishes_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = spectral_response(&random_system(&mut rng, 6), ens(0.7), 1.0).unwrap();
        assert_eq!(r.phi_complex(0.0).norm(), 0.0);
        assert_eq!(r.phi(0.0), 0.0);
    }

    #[test]
    fn phi_matches_pair_kernel() {
        let pair = OscillatorPair::natural(1.0, 1.0).unwrap();
        let e = ens(1.0);
        let trunc = FockTruncation::for_ensemble(&pair, e, 1e-12).unwrap();
        let g = 0.7;
        let ps = product_coupling_operator(&pair, &trunc, g).unwrap();
        let r = spectral_response(&ps.system, e, 1.0).unwrap();
        for k in 0..=40 {
            let t = 0.5 * k as f64;
            let want = g * g * phi_kernel(t, &pair, e).unwrap();
            let got = r.phi_complex(t);
            assert!((got.re - want).abs() <= 1e-8 * want.abs().max(1.0), "t={t}: {} vs {want}", got.re);
            assert!(got.im.abs() <= 1e-13 * got.norm().max(1e-300));
        }
    }

    #[test]
    fn two_level_timedomain_matches_spectral() {
        let s = two_level(2.0, 0.1);
        let q = DriveProfile::ramp_damped(0.25).unwrap();
        let spec = dissipation_spectral(&s, ens(1.0), &q, 1.0).unwrap();
        let td = dissipation_timedomain(&s, ens(1.0), &q, 1.0, TimeDomainOptions::default()).unwrap();
        assert!((td.energy - spec).abs() <= 1e-6 * spec, "{} vs {spec}", td.energy);
        assert!(spec > 0.0);
    }

    #[test]
    fn timedomain_rejects_short_window() {
        let s = two_level(2.0, 0.1);
        let q = DriveProfile::ramp_damped(0.25).unwrap();
        let opts = TimeDomainOptions {
            t_max: Some(10.0),
            ..Default::default()
        };
        assert!(matches!(
            dissipation_timedomain(&s, ens(1.0), &q, 1.0, opts),
            Err(CasimirError::Precondition(_))
        ));
    }

    #[test]
    fn timedomain_handles_pulses() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_system(&mut rng, 5);
        let q = DriveProfile::gaussian_pulse(0.8, 5.0, 0.7).unwrap();
        let spec = dissipation_spectral(&s, ens(2.0), &q, 1.0).unwrap();
        let td = dissipation_timedomain(&s, ens(2.0), &q, 1.0, TimeDomainOptions::default()).unwrap();
        assert!((td.energy - spec).abs() <= 1e-6 * spec);
    }

    #[test]
    fn drive_identities_and_resonant_weight() {
        let pair = OscillatorPair::natural(1.0, 1.0).unwrap();
        let d = CouplingDrive::along_x(1.0, 0.5).unwrap();
        let r = resonant_closed_form(&pair, ens(1.0), &d, (-0.5, 0.5), 40, DetuningChannel::Difference)
            .unwrap();
        assert!((r.qdot_sq_integral - 0.5).abs() < 1e-13);
        assert!(r.qdot_q_relative < 1e-13);

        // β = 1, ω₁ = 1, γ = 1, η = 0.01.
        let gamma = 1.0;
        let g = (gamma * gamma / (0.5 * pair.kernel_amplitude())).sqrt();
        let d = CouplingDrive::along_x(g, 0.01).unwrap();
        let r = resonant_closed_form(&pair, ens(1.0), &d, (-0.5, 0.5), 200, DetuningChannel::Difference)
            .unwrap();
        let sh = (0.5f64).sinh();
        let want = 100.0 * std::f64::consts::PI / (8.0 * sh * sh);
        assert!((r.delta_weight_de - want).abs() < 1e-10 * want);
        assert!((r.delta_weight_de - 144.619).abs() < 1e-3);
        assert!((r.energy_from_friction - want).abs() < 0.02 * want);

        let cold = resonant_closed_form(
            &pair,
            ThermalEnsemble::zero_temperature(),
            &d,
            (-0.5, 0.5),
            20,
            DetuningChannel::Difference,
        )
        .unwrap();
        assert_eq!(cold.delta_weight_de, 0.0);
    }

    #[test]
    fn detuned_perturbative_matches_friction_relation() {
        let pair = OscillatorPair::natural(1.0, 1.0).unwrap();
        let d = CouplingDrive::along_x(1.0, 0.05).unwrap();
        let e = ens(1.0);
        let pert = detuning_integrated_perturbative(&pair, e, &d, (-0.5, 0.5), 6, 1e-10).unwrap();
        let kubo =
            resonant_closed_form(&pair, e, &d, (-0.5, 0.5), 6, DetuningChannel::Both).unwrap();
        let rel = (pert.energy - kubo.energy_from_friction).abs() / kubo.energy_from_friction;
        assert!(rel < 1e-8, "{} vs {} ({rel})", pert.energy, kubo.energy_from_friction);
    }

    #[test]
    fn pointwise_pair_energy_is_kubo_friction_work() {
        let pair = OscillatorPair::natural(1.3, 0.8).unwrap();
        let e = ens(0.9);
        let eta = 0.2;
        let d = CouplingDrive::along_x(0.6, eta).unwrap();
        let trunc = FockTruncation::for_ensemble(&pair, e, 1e-14).unwrap();
        let ps = product_coupling_operator(&pair, &trunc, d.coupling_rate()).unwrap();
        let q = DriveProfile::ramp_damped(eta).unwrap();
        let pert = dissipated_energy_perturbative(&ps.system, e, &q, 1.0).unwrap().energy;
        let f = friction_force(&pair, e, &d).unwrap();
        let kubo = -d.velocity.dot(&f.f_friction) / (4.0 * eta);
        assert!((pert - kubo).abs() < 1e-10 * kubo, "{pert} vs {kubo}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn spectral_equals_perturbative(
            seed in any::<u64>(), n in 5usize..13, beta in 0.2f64..10.0, eta in 0.05f64..1.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_system(&mut rng, n);
            let q = DriveProfile::ramp_damped(eta).unwrap();
            let p = dissipated_energy_perturbative(&s, ens(beta), &q, 1.0).unwrap().energy;
            let sp = dissipation_spectral(&s, ens(beta), &q, 1.0).unwrap();
            prop_assert!(sp >= 0.0);
            prop_assert!((p - sp).abs() <= 1e-12 * p, "{p} vs {sp}");
        }

        #[test]
        fn response_is_antisymmetric_and_real(seed in any::<u64>(), n in 2usize..10, beta in 0.2f64..10.0, t in 0.0f64..30.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = spectral_response(&random_system(&mut rng, n), ens(beta), 1.0).unwrap();
            for i in 0..n {
                prop_assert_eq!(r.m[(i, i)], 0.0);
                for j in 0..n {
                    prop_assert_eq!(r.m[(i, j)], -r.m[(j, i)]);
                }
            }
            let z = r.phi_complex(t);
            prop_assert!(z.im.abs() <= 1e-13 * z.norm().max(1e-300));
            prop_assert!((z.re - r.phi(t)).abs() <= 1e-12 * r.m.iter().map(|x| x.abs()).sum::<f64>());
        }
    }
}
