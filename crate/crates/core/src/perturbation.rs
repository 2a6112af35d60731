//! First-order perturbation theory for a level system driven by −A q(t).
//!
//! Amplitudes b_nm = −(1/iħ) A_nm q̂(−ω_nm), probabilities B_nm = |b_nm|², the
//! perturbed populations and the dissipated energy ΔE = Σ (E_n − E_m) P_m B_nm.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::drive::DriveProfile;
use crate::error::{positive, CasimirError, Result};
use crate::model::{boltzmann_weights, LevelSystem, ThermalEnsemble};
use crate::quadrature::pairwise_sum;

/// Above this transition probability first-order theory is flagged as suspect.
pub const VALIDITY_THRESHOLD: f64 = 0.1;

/// q̂(ω) = ∫ q(t) e^{−iωt} dt.
pub fn fourier_of_drive(profile: &DriveProfile, omega: f64) -> Result<Complex64> {
    profile.fourier(omega)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    pub amplitudes: DMatrix<Complex64>,
    /// B_nm; exactly symmetric by construction.
    pub probabilities: DMatrix<f64>,
    pub omega_nm: DMatrix<f64>,
    /// Largest absolute error bound reported by the drive transform.
    pub fourier_error: f64,
}

impl TransitionTable {
    pub fn dim(&self) -> usize {
        self.probabilities.nrows()
    }

    /// max B_nm over n ≠ m.
    pub fn max_transition(&self) -> f64 {
        let n = self.dim();
        let mut max = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    max = max.max(self.probabilities[(i, j)]);
                }
            }
        }
        max
    }
}

pub fn transition_amplitudes(
    system: &LevelSystem,
    profile: &DriveProfile,
    hbar: f64,
) -> Result<TransitionTable> {
    positive("hbar", hbar)?;
    let n = system.dim();
    let e = system.energies();
    let a = system.coupling();
    let omega_nm = DMatrix::from_fn(n, n, |i, j| (e[i] - e[j]) / hbar);
    let mut amplitudes = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let mut probabilities = DMatrix::zeros(n, n);
    let mut fourier_error = 0.0f64;
    // −1/(iħ) = i/ħ
    let pref = Complex64::new(0.0, 1.0 / hbar);
    for j in 0..n {
        for i in j..n {
            let (aij, aji) = (a[(i, j)], a[(j, i)]);
            if aij == Complex64::new(0.0, 0.0) && aji == Complex64::new(0.0, 0.0) {
                continue;
            }
            // One transform per pair; q̂(−ω) = conj q̂(ω) for real drives.
            let (qhat, err) = profile.fourier_with_error(omega_nm[(i, j)])?;
            fourier_error = fourier_error.max(err);
            let b_ij = pref * aij * qhat.conj();
            let b_ji = pref * aji * qhat;
            amplitudes[(i, j)] = b_ij;
            amplitudes[(j, i)] = b_ji;
            let p = b_ij.norm_sqr();
            probabilities[(i, j)] = p;
            probabilities[(j, i)] = p;
        }
    }
    Ok(TransitionTable {
        amplitudes,
        probabilities,
        omega_nm,
        fourier_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationVector {
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    pub max_transition: f64,
    /// False when max B_nm exceeds [`VALIDITY_THRESHOLD`].
    pub valid: bool,
}

/// P1_n = P_n + Σ_m (P_m − P_n) B_nm.
pub fn perturbed_populations(p: &[f64], table: &TransitionTable) -> Result<PopulationVector> {
    let n = table.dim();
    if p.len() != n {
        return Err(CasimirError::Precondition(format!(
            "{} populations for a {n}-level table",
            p.len()
        )));
    }
    let total = pairwise_sum(p);
    if (total - 1.0).abs() > 1e-12 || p.iter().any(|&x| !(x >= 0.0)) {
        return Err(CasimirError::Precondition(format!(
            "populations must be a probability vector (sum {total})"
        )));
    }
    let after = (0..n)
        .map(|i| {
            let transfer: Vec<f64> = (0..n)
                .filter(|&m| m != i)
                .map(|m| (p[m] - p[i]) * table.probabilities[(i, m)])
                .collect();
            p[i] + pairwise_sum(&transfer)
        })
        .collect();
    let max_transition = table.max_transition();
    Ok(PopulationVector {
        before: p.to_vec(),
        after,
        max_transition,
        valid: max_transition <= VALIDITY_THRESHOLD,
    })
}

/// e^{−β(E_n+E_m)/2} sinh(β(E_n−E_m)/2) on energies already shifted to be ≥ 0.
///
/// The literal product is used while it is representable; beyond that the
/// equivalent ½(e^{−βE_m} − e^{−βE_n}) avoids overflow.
pub fn grouped_sinh_weight(beta: f64, e_n: f64, e_m: f64) -> f64 {
    let mean = 0.5 * beta * (e_n + e_m);
    let half_gap = 0.5 * beta * (e_n - e_m);
    if mean < 700.0 && half_gap.abs() < 700.0 {
        (-mean).exp() * half_gap.sinh()
    } else {
        0.5 * ((-beta * e_m).exp() - (-beta * e_n).exp())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbativeDissipation {
    /// Σ_{n>m} Δ_nm (P_m − P_n) B_nm: every term is ≥ 0.
    pub energy: f64,
    /// Σ_nm (E_n − E_m) P_m B_nm evaluated literally.
    pub direct: f64,
    /// (1/Z) Σ_nm e^{−β(E_n+E_m)/2} Δ_nm sinh(βΔ_nm/2) B_nm (grouped weights; P-difference form at T = 0).
    pub symmetrized: f64,
    /// |direct − symmetrized| / Σ |terms|.
    pub form_gap: f64,
    pub populations: PopulationVector,
    pub fourier_error: f64,
    pub ground_degeneracy: usize,
    pub notes: Vec<String>,
}

pub fn dissipated_energy_perturbative(
    system: &LevelSystem,
    ensemble: ThermalEnsemble,
    profile: &DriveProfile,
    hbar: f64,
) -> Result<PerturbativeDissipation> {
    let table = transition_amplitudes(system, profile, hbar)?;
    dissipation_from_table(system, ensemble, &table)
}

/// As [`dissipated_energy_perturbative`] for a precomputed table.
pub fn dissipation_from_table(
    system: &LevelSystem,
    ensemble: ThermalEnsemble,
    table: &TransitionTable,
) -> Result<PerturbativeDissipation> {
    let n = system.dim();
    if table.dim() != n {
        return Err(CasimirError::Precondition("table does not match system".into()));
    }
    let e = system.energies();
    let bw = boltzmann_weights(ensemble, e)?;
    let p = &bw.weights;
    let mut notes = Vec::new();
    if ensemble.is_zero_temperature() && bw.ground_degeneracy > 1 {
        notes.push(format!(
            "degenerate ground multiplet ({} states) weighted uniformly",
            bw.ground_degeneracy
        ));
    }
    let shifted: Vec<f64> = e.iter().map(|x| x - bw.energy_shift).collect();

    let mut direct_terms = Vec::new();
    let mut pair_terms = Vec::new();
    let mut sym_terms = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let b = table.probabilities[(i, j)];
            if i == j || b == 0.0 {
                continue;
            }
            let gap = e[i] - e[j];
            direct_terms.push(gap * p[j] * b);
            let w = if ensemble.is_zero_temperature() {
                0.5 * (p[j] - p[i])
            } else {
                grouped_sinh_weight(bw.beta, shifted[i], shifted[j]) / bw.shifted_partition
            };
            sym_terms.push(gap * w * b);
            if i > j {
                pair_terms.push(gap * (p[j] - p[i]) * b);
            }
        }
    }
    let direct = pairwise_sum(&direct_terms);
    let symmetrized = pairwise_sum(&sym_terms);
    let energy = pairwise_sum(&pair_terms);
    let scale: f64 = direct_terms.iter().map(|x| x.abs()).sum();
    let form_gap = if scale > 0.0 {
        (direct - symmetrized).abs() / scale
    } else {
        0.0
    };
    let populations = perturbed_populations(p, table)?;
    if !populations.valid {
        notes.push(format!(
            "max transition probability {:.3e} exceeds {VALIDITY_THRESHOLD}",
            populations.max_transition
        ));
    }
    Ok(PerturbativeDissipation {
        energy,
        direct,
        symmetrized,
        form_gap,
        populations,
        fourier_error: table.fourier_error,
        ground_degeneracy: bw.ground_degeneracy,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{product_coupling_operator, FockTruncation, OscillatorPair};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_level(gap: f64, a01: Complex64) -> LevelSystem {
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), a01, a01.conj(), c(0.0, 0.0)]);
        LevelSystem::new(vec![0.0, gap], a).unwrap()
    }

    fn random_system(rng: &mut ChaCha8Rng, n: usize) -> LevelSystem {
        let mut e: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        e.sort_by(f64::total_cmp);
        let mut a = DMatrix::from_element(n, n, c(0.0, 0.0));
        for j in 0..n {
            a[(j, j)] = c(rng.random_range(-1.0..1.0), 0.0);
            for i in j + 1..n {
                let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        LevelSystem::new(e, a).unwrap()
    }

    #[test]
    fn fourier_examples() {
        let ramp = DriveProfile::ramp_damped(1.0).unwrap();
        assert_eq!(fourier_of_drive(&ramp, 0.0).unwrap(), c(1.0, 0.0));
        let v = fourier_of_drive(&ramp, 1.0).unwrap();
        assert!((v - c(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn zero_coupling_gives_zero_amplitudes() {
        let s = two_level(1.0, c(0.0, 0.0));
        let t = transition_amplitudes(&s, &DriveProfile::ramp_damped(0.3).unwrap(), 1.0).unwrap();
        assert!(t.amplitudes.iter().all(|z| z.norm() == 0.0));
        let d = dissipation_from_table(&s, ThermalEnsemble::new(1.0).unwrap(), &t).unwrap();
        assert_eq!(d.energy, 0.0);
    }

    #[test]
    fn two_level_resonant_probability() {
        // E = {0, 2ħω}, A₁₀ = −b.
        let (w, b, eta, hbar) = (1.3, 0.4, 0.2, 0.7);
        let s = two_level(2.0 * hbar * w, c(-b, 0.0));
        let t = transition_amplitudes(&s, &DriveProfile::ramp_damped(eta).unwrap(), hbar).unwrap();
        let want = b * b / (hbar * hbar * (eta * eta + 4.0 * w * w).powi(2));
        assert!((t.probabilities[(1, 0)] - want).abs() < 1e-15 * want.max(1.0));
        assert_eq!(t.probabilities[(0, 1)], t.probabilities[(1, 0)]);
        assert!((t.omega_nm[(1, 0)] - 2.0 * w).abs() < 1e-15);
    }

    #[test]
    fn degenerate_levels_transfer_population_without_energy() {
        let s = two_level(0.0, c(0.3, 0.1));
        let t = transition_amplitudes(&s, &DriveProfile::ramp_damped(0.5).unwrap(), 1.0).unwrap();
        assert!(t.probabilities[(1, 0)] > 0.0);
        let pops = perturbed_populations(&[0.75, 0.25], &t).unwrap();
        assert!(pops.after[0] < 0.75);
        let d = dissipation_from_table(&s, ThermalEnsemble::new(2.0).unwrap(), &t).unwrap();
        assert_eq!(d.energy, 0.0);
        assert_eq!(d.direct, 0.0);
    }

    #[test]
    fn uniform_populations_are_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_system(&mut rng, 6);
        let t = transition_amplitudes(&s, &DriveProfile::ramp_damped(0.4).unwrap(), 1.0).unwrap();
        let p = vec![1.0 / 6.0; 6];
        let pops = perturbed_populations(&p, &t).unwrap();
        assert_eq!(pops.after, pops.before);
        assert!(perturbed_populations(&[0.5, 0.2], &t).is_err());
    }

    #[test]
    fn validity_flag_trips_for_strong_drives() {
        let s = two_level(0.1, c(3.0, 0.0));
        let t = transition_amplitudes(&s, &DriveProfile::ramp_damped(0.5).unwrap(), 1.0).unwrap();
        let d = dissipation_from_table(&s, ThermalEnsemble::new(1.0).unwrap(), &t).unwrap();
        assert!(!d.populations.valid);
        assert!(!d.notes.is_empty());
    }

    #[test]
    fn zero_temperature_resonant_pair() {
        let (w, g, eta) = (1.0, 0.3, 0.1);
        let pair = OscillatorPair::natural(w, w).unwrap();
        let trunc = FockTruncation::new(4).unwrap();
        let ps = product_coupling_operator(&pair, &trunc, g).unwrap();
        let d = dissipated_energy_perturbative(
            &ps.system,
            ThermalEnsemble::zero_temperature(),
            &DriveProfile::ramp_damped(eta).unwrap(),
            1.0,
        )
        .unwrap();
        let b = pair.first().harmonic_length_sq();
        let want = 2.0 * w * g * g * b * b / (eta * eta + 4.0 * w * w).powi(2);
        assert!((d.energy - want).abs() < 1e-14 * want, "{} vs {want}", d.energy);
        assert_eq!(d.ground_degeneracy, 1);
    }

    #[test]
    fn degenerate_ground_multiplet_is_noted() {
        let a = DMatrix::from_fn(3, 3, |i, j| if i != j { c(0.2, 0.0) } else { c(0.0, 0.0) });
        let s = LevelSystem::new(vec![0.0, 0.0, 1.0], a).unwrap();
        let d = dissipated_energy_perturbative(
            &s,
            ThermalEnsemble::zero_temperature(),
            &DriveProfile::ramp_damped(0.3).unwrap(),
            1.0,
        )
        .unwrap();
        assert_eq!(d.ground_degeneracy, 2);
        assert!(d.notes.iter().any(|n| n.contains("degenerate")));
        assert!(d.energy > 0.0);
    }

    #[test]
    fn grouped_weight_identity() {
        for (beta, en, em) in [(1.0, 2.0, 0.5), (40.0, 3.0, 1.0), (900.0, 1.0, 0.0), (0.2, 0.0, 4.0)] {
            let lhs = grouped_sinh_weight(beta, en, em);
            let rhs = 0.5 * ((-beta * em).exp() - (-beta * en).exp());
            assert!((lhs - rhs).abs() <= 1e-14 * rhs.abs().max(1e-300), "{lhs} vs {rhs}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn dissipation_is_non_negative_and_forms_agree(
            seed in any::<u64>(), n in 2usize..9, beta in 0.1f64..20.0, eta in 0.05f64..1.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_system(&mut rng, n);
            let d = dissipated_energy_perturbative(
                &s, ThermalEnsemble::new(beta).unwrap(), &DriveProfile::ramp_damped(eta).unwrap(), 1.0,
            ).unwrap();
            prop_assert!(d.energy >= 0.0);
            let scale = d.energy.max(1e-300);
            prop_assert!((d.direct - d.symmetrized).abs() <= 1e-12 * scale, "{} vs {}", d.direct, d.symmetrized);
            prop_assert!((d.symmetrized - d.energy).abs() <= 1e-12 * scale);
        }

        #[test]
        fn probability_is_conserved(seed in any::<u64>(), n in 2usize..10, beta in 0.1f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_system(&mut rng, n).scaled(0.1);
            let t = transition_amplitudes(&s, &DriveProfile::ramp_damped(0.5).unwrap(), 1.0).unwrap();
            let bw = boltzmann_weights(ThermalEnsemble::new(beta).unwrap(), s.energies()).unwrap();
            let pops = perturbed_populations(&bw.weights, &t).unwrap();
            let total = pairwise_sum(&pops.after);
            prop_assert!((total - pairwise_sum(&pops.before)).abs() < 1e-13);
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(t.probabilities[(i, j)], t.probabilities[(j, i)]);
                }
            }
        }

        #[test]
        fn infinite_temperature_null(seed in any::<u64>(), n in 2usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_system(&mut rng, n);
            let d = dissipated_energy_perturbative(
                &s, ThermalEnsemble::new(1e-300).unwrap(), &DriveProfile::ramp_damped(0.3).unwrap(), 1.0,
            ).unwrap();
            prop_assert_eq!(d.energy, 0.0);
            let scale: f64 = s.energies().iter().map(|e| e.abs()).sum::<f64>() + 1.0;
            prop_assert!(d.direct.abs() < 1e-13 * scale);
        }

        #[test]
        fn real_drive_power_is_real_and_non_negative(w in -20.0f64..20.0, eta in 0.01f64..2.0) {
            let q = DriveProfile::ramp_damped(eta).unwrap();
            let prod = fourier_of_drive(&q, w).unwrap() * fourier_of_drive(&q, -w).unwrap();
            prop_assert!(prod.im.abs() <= 1e-14 * prod.norm());
            prop_assert!(prod.re >= 0.0);
        }
    }
}
