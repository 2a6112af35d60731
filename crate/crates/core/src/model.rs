//! Oscillator parameters, truncated Fock-space operators and thermal statistics.
//!
//! Natural units: ħ is carried explicitly (default 1) and k_B is folded into β.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{positive, CasimirError, Result};

/// A single harmonic oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator {
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
}

impl Oscillator {
    pub fn new(mass: f64, omega: f64, hbar: f64) -> Result<Self> {
        Ok(Self {
            mass: positive("mass", mass)?,
            omega: positive("omega", omega)?,
            hbar: positive("hbar", hbar)?,
        })
    }

    /// Squared harmonic length b = ħ/(2mω).
    pub fn harmonic_length_sq(&self) -> f64 {
        self.hbar / (2.0 * self.mass * self.omega)
    }

    pub fn level_energy(&self, n: usize) -> f64 {
        self.hbar * self.omega * (n as f64 + 0.5)
    }
}

/// Two oscillators coupled through their internal coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorPair {
    pub m1: f64,
    pub m2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub hbar: f64,
}

impl OscillatorPair {
    pub fn new(m1: f64, m2: f64, omega1: f64, omega2: f64, hbar: f64) -> Result<Self> {
        Ok(Self {
            m1: positive("m1", m1)?,
            m2: positive("m2", m2)?,
            omega1: positive("omega1", omega1)?,
            omega2: positive("omega2", omega2)?,
            hbar: positive("hbar", hbar)?,
        })
    }

    /// Unit masses, ħ = 1.
    pub fn natural(omega1: f64, omega2: f64) -> Result<Self> {
        Self::new(1.0, 1.0, omega1, omega2, 1.0)
    }

    pub fn first(&self) -> Oscillator {
        Oscillator {
            mass: self.m1,
            omega: self.omega1,
            hbar: self.hbar,
        }
    }

    pub fn second(&self) -> Oscillator {
        Oscillator {
            mass: self.m2,
            omega: self.omega2,
            hbar: self.hbar,
        }
    }

    /// D = ħ/(2 m₁ m₂ ω₁ ω₂), the amplitude of the commutator kernel.
    pub fn kernel_amplitude(&self) -> f64 {
        self.hbar / (2.0 * self.m1 * self.m2 * self.omega1 * self.omega2)
    }

    /// Same pair with the second frequency replaced.
    pub fn with_omega2(&self, omega2: f64) -> Result<Self> {
        Self::new(self.m1, self.m2, self.omega1, omega2, self.hbar)
    }
}

/// Canonical ensemble at inverse temperature β; β = +∞ is the ground state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalEnsemble {
    beta: f64,
}

impl ThermalEnsemble {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && !beta.is_nan() {
            Ok(Self { beta })
        } else {
            Err(CasimirError::Domain {
                name: "beta",
                value: beta,
                domain: "> 0 (use +inf for T = 0)",
            })
        }
    }

    pub fn zero_temperature() -> Self {
        Self {
            beta: f64::INFINITY,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta.is_infinite()
    }
}

/// Mean occupation and the matching coth factor 2⟨n⟩ + 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupation {
    pub mean_n: f64,
    pub coth_factor: f64,
}

/// Bose occupation of one mode: ⟨n⟩ = 1/(e^{βħω} − 1), 2⟨n⟩ + 1 = coth(βħω/2).
pub fn thermal_occupation(ensemble: ThermalEnsemble, omega: f64, hbar: f64) -> Result<Occupation> {
    if ensemble.is_zero_temperature() {
        return Ok(Occupation {
            mean_n: 0.0,
            coth_factor: 1.0,
        });
    }
    let x = ensemble.beta() * hbar * omega;
    if !(x > 0.0) || !x.is_finite() {
        return Err(CasimirError::Domain {
            name: "beta*hbar*omega",
            value: x,
            domain: "finite and > 0",
        });
    }
    let mean_n = 1.0 / x.exp_m1();
    Ok(Occupation {
        mean_n,
        coth_factor: 2.0 * mean_n + 1.0,
    })
}

/// Boltzmann populations together with the partition function.
///
/// Energies are shifted by their minimum before exponentiation; `shifted_partition`
/// is Σ e^{−β(E_n − E_min)} and the physical Z is recovered by [`BoltzmannWeights::partition`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannWeights {
    pub weights: Vec<f64>,
    pub shifted_partition: f64,
    pub energy_shift: f64,
    pub beta: f64,
    /// Number of states sharing the ground energy (relevant at T = 0).
    pub ground_degeneracy: usize,
}

impl BoltzmannWeights {
    /// Z = Σ e^{−βE_n}; infinite/zero limits follow IEEE arithmetic.
    pub fn partition(&self) -> f64 {
        if self.beta.is_infinite() {
            return f64::NAN;
        }
        self.shifted_partition * (-self.beta * self.energy_shift).exp()
    }
}

const DEGENERACY_RTOL: f64 = 1e-14;

pub fn boltzmann_weights(ensemble: ThermalEnsemble, energies: &[f64]) -> Result<BoltzmannWeights> {
    if energies.is_empty() {
        return Err(CasimirError::InvalidSystem("no energy levels".into()));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(CasimirError::InvalidSystem("non-finite energy".into()));
    }
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = e_min.abs().max(1.0);
    let ground_degeneracy = energies
        .iter()
        .filter(|&&e| e - e_min <= DEGENERACY_RTOL * scale)
        .count();
    let beta = ensemble.beta();
    if ensemble.is_zero_temperature() {
        let w = 1.0 / ground_degeneracy as f64;
        let weights = energies
            .iter()
            .map(|&e| if e - e_min <= DEGENERACY_RTOL * scale { w } else { 0.0 })
            .collect();
        return Ok(BoltzmannWeights {
            weights,
            shifted_partition: ground_degeneracy as f64,
            energy_shift: e_min,
            beta,
            ground_degeneracy,
        });
    }
    let raw: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
    let z = crate::quadrature::pairwise_sum(&raw);
    Ok(BoltzmannWeights {
        weights: raw.iter().map(|w| w / z).collect(),
        shifted_partition: z,
        energy_shift: e_min,
        beta,
        ground_degeneracy,
    })
}

/// A finite-level system: eigenenergies of H₀ and the matrix of the coupling operator A.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSystem {
    energies: DVector<f64>,
    coupling: DMatrix<Complex64>,
}

impl LevelSystem {
    /// Validates dimensions, ascending energies and Hermiticity of `coupling`.
    pub fn new(energies: Vec<f64>, coupling: DMatrix<Complex64>) -> Result<Self> {
        let n = energies.len();
        if n == 0 {
            return Err(CasimirError::InvalidSystem("no energy levels".into()));
        }
        if coupling.nrows() != n || coupling.ncols() != n {
            return Err(CasimirError::InvalidSystem(format!(
                "coupling is {}x{} but there are {n} levels",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(CasimirError::InvalidSystem("non-finite energy".into()));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(CasimirError::InvalidSystem(
                "energies must be sorted ascending".into(),
            ));
        }
        let scale = coupling.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..=i {
                let d = (coupling[(i, j)] - coupling[(j, i)].conj()).norm();
                if d > 1e-13 * scale.max(f64::MIN_POSITIVE) {
                    return Err(CasimirError::InvalidSystem(format!(
                        "coupling not Hermitian at ({i}, {j}): deviation {d:e}"
                    )));
                }
            }
        }
        Ok(Self {
            energies: DVector::from_vec(energies),
            coupling,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        self.energies.as_slice()
    }

    pub fn coupling(&self) -> &DMatrix<Complex64> {
        &self.coupling
    }

    /// Same energies, coupling multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            energies: self.energies.clone(),
            coupling: self.coupling.map(|z| z * factor),
        }
    }

    /// Nonzero coupling entries as `(row, col, value)`.
    pub fn coupling_nonzeros(&self) -> Vec<(usize, usize, Complex64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let z = self.coupling[(i, j)];
                if z != Complex64::new(0.0, 0.0) {
                    out.push((i, j, z));
                }
            }
        }
        out
    }
}

/// Number of Fock levels kept per oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockTruncation {
    pub levels: usize,
    pub tail_tolerance: f64,
}

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Levels kept above the highest thermally relevant one; the coupling reaches one level up.
pub const TRUNCATION_MARGIN: usize = 2;

impl FockTruncation {
    pub fn new(levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(CasimirError::Domain {
                name: "levels",
                value: levels as f64,
                domain: ">= 2",
            });
        }
        Ok(Self {
            levels,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        })
    }

    pub fn with_tolerance(mut self, tail_tolerance: f64) -> Self {
        self.tail_tolerance = tail_tolerance;
        self
    }

    /// Smallest truncation whose discarded Boltzmann weight is below `tail_tolerance`,
    /// plus [`TRUNCATION_MARGIN`] levels.
    pub fn for_ensemble(
        pair: &OscillatorPair,
        ensemble: ThermalEnsemble,
        tail_tolerance: f64,
    ) -> Result<Self> {
        positive("tail_tolerance", tail_tolerance)?;
        let mut relevant = 1usize;
        while tail_weight(pair, ensemble, relevant) >= tail_tolerance {
            relevant += 1;
            if relevant > 10_000 {
                return Err(CasimirError::Precondition(
                    "temperature too high for a Fock truncation".into(),
                ));
            }
        }
        Ok(Self {
            levels: relevant + TRUNCATION_MARGIN,
            tail_tolerance,
        })
    }

    pub fn tail_weight(&self, pair: &OscillatorPair, ensemble: ThermalEnsemble) -> f64 {
        tail_weight(pair, ensemble, self.levels)
    }

    pub fn check(&self, pair: &OscillatorPair, ensemble: ThermalEnsemble) -> Result<()> {
        let tail = self.tail_weight(pair, ensemble);
        if tail < self.tail_tolerance {
            Ok(())
        } else {
            Err(CasimirError::TruncationTail {
                levels: self.levels,
                tail,
                tolerance: self.tail_tolerance,
            })
        }
    }

    pub fn extended(&self, extra: usize) -> Self {
        Self {
            levels: self.levels + extra,
            ..*self
        }
    }
}

/// Exact Boltzmann weight of product states with n₁ ≥ `levels` or n₂ ≥ `levels`.
pub fn tail_weight(pair: &OscillatorPair, ensemble: ThermalEnsemble, levels: usize) -> f64 {
    if ensemble.is_zero_temperature() {
        return 0.0;
    }
    let n = levels as f64;
    let p1 = (-ensemble.beta() * pair.hbar * pair.omega1 * n).exp();
    let p2 = (-ensemble.beta() * pair.hbar * pair.omega2 * n).exp();
    p1 + p2 - p1 * p2
}

/// x = √(ħ/(2mω)) (a + a†) in the lowest `levels` Fock states.
pub fn position_matrix(osc: &Oscillator, levels: usize) -> Result<DMatrix<f64>> {
    let osc = Oscillator::new(osc.mass, osc.omega, osc.hbar)?;
    if levels < 2 {
        return Err(CasimirError::Domain {
            name: "levels",
            value: levels as f64,
            domain: ">= 2",
        });
    }
    let b = osc.harmonic_length_sq();
    let mut x = DMatrix::zeros(levels, levels);
    for n in 0..levels - 1 {
        let v = (b * (n + 1) as f64).sqrt();
        x[(n, n + 1)] = v;
        x[(n + 1, n)] = v;
    }
    Ok(x)
}

/// A level system on the product Fock space of an oscillator pair, states sorted by energy.
#[derive(Debug, Clone)]
pub struct ProductSystem {
    pub system: LevelSystem,
    pub levels: usize,
    labels: Vec<(usize, usize)>,
    index: Vec<usize>,
}

impl ProductSystem {
    /// Occupation numbers (n₁, n₂) of level `k`.
    pub fn label(&self, k: usize) -> (usize, usize) {
        self.labels[k]
    }

    /// Level index of the product state |n₁ n₂⟩.
    pub fn index(&self, n1: usize, n2: usize) -> usize {
        self.index[n1 * self.levels + n2]
    }
}

/// Builds A = −g·x₁x₂ (so that −A q(t) = g q(t) x₁x₂) on the truncated product space.
pub fn product_coupling_operator(
    pair: &OscillatorPair,
    trunc: &FockTruncation,
    strength: f64,
) -> Result<ProductSystem> {
    if !strength.is_finite() {
        return Err(CasimirError::Domain {
            name: "strength",
            value: strength,
            domain: "finite",
        });
    }
    let n = trunc.levels;
    let x1 = position_matrix(&pair.first(), n)?;
    let x2 = position_matrix(&pair.second(), n)?;
    let (o1, o2) = (pair.first(), pair.second());

    let mut order: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let energy = |&(a, b): &(usize, usize)| o1.level_energy(a) + o2.level_energy(b);
    order.sort_by(|p, q| energy(p).total_cmp(&energy(q)).then(p.cmp(q)));

    let mut index = vec![0; n * n];
    for (k, &(a, b)) in order.iter().enumerate() {
        index[a * n + b] = k;
    }
    let dim = n * n;
    let mut coupling = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (k, &(a, b)) in order.iter().enumerate() {
        // Only |Δn₁| = |Δn₂| = 1 moves couple.
        for a2 in [a.wrapping_sub(1), a + 1] {
            if a2 >= n {
                continue;
            }
            for b2 in [b.wrapping_sub(1), b + 1] {
                if b2 >= n {
                    continue;
                }
                let v = -strength * x1[(a2, a)] * x2[(b2, b)];
                coupling[(index[a2 * n + b2], k)] = Complex64::new(v, 0.0);
            }
        }
    }
    let energies = order.iter().map(energy).collect();
    Ok(ProductSystem {
        system: LevelSystem::new(energies, coupling)?,
        levels: n,
        labels: order,
        index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};
    use proptest::prelude::*;

    fn unit() -> Oscillator {
        Oscillator::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn position_matrix_ladder_entries() {
        let x = position_matrix(&unit(), 2).unwrap();
        assert!((x[(0, 1)] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(x[(0, 1)], x[(1, 0)]);
        assert_eq!(x[(0, 0)], 0.0);
        assert_eq!(x[(1, 1)], 0.0);
        let x3 = position_matrix(&unit(), 3).unwrap();
        assert!((x3[(1, 2)] - 1.0).abs() < 1e-15);
    }

    /// Hermite-function overlap ⟨0|x|1⟩ by quadrature, independent of the ladder algebra.
    #[test]
    fn position_element_matches_hermite_overlap() {
        let (m, w, hbar) = (2.0, 3.0, 1.0);
        let alpha = m * w / hbar;
        let psi0 = move |x: f64| (alpha / std::f64::consts::PI).powf(0.25) * (-alpha * x * x / 2.0).exp();
        let psi1 = move |x: f64| psi0(x) * (2.0 * alpha).sqrt() * x;
        let q = integrate(|x| psi0(x) * x * psi1(x), -12.0, 12.0, QuadOptions::default()).unwrap();
        assert!((q.value - (1.0f64 / 12.0).sqrt()).abs() < 1e-12);
        let x = position_matrix(&Oscillator::new(m, w, hbar).unwrap(), 4).unwrap();
        assert!((x[(0, 1)] - q.value).abs() < 1e-12);
    }

    #[test]
    fn position_matrix_rejects_bad_parameters() {
        let bad = Oscillator {
            mass: -1.0,
            omega: 1.0,
            hbar: 1.0,
        };
        assert!(matches!(
            position_matrix(&bad, 3),
            Err(CasimirError::Domain { name: "mass", .. })
        ));
        assert!(position_matrix(&unit(), 1).is_err());
        assert!(Oscillator::new(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn product_operator_resonant_element() {
        let pair = OscillatorPair::natural(1.0, 1.0).unwrap();
        let p = product_coupling_operator(&pair, &FockTruncation::new(4).unwrap(), 1.0).unwrap();
        let a = p.system.coupling();
        let (s11, s00, s20) = (p.index(1, 1), p.index(0, 0), p.index(2, 0));
        assert!((a[(s11, s00)].re + 0.5).abs() < 1e-15);
        assert_eq!(a[(s00, s00)], Complex64::new(0.0, 0.0));
        assert_eq!(a[(s20, s00)], Complex64::new(0.0, 0.0));
        assert_eq!(p.label(0), (0, 0));
        assert!((p.system.energies()[s11] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn thermal_occupation_values() {
        let t0 = thermal_occupation(ThermalEnsemble::zero_temperature(), 1.0, 1.0).unwrap();
        assert_eq!((t0.mean_n, t0.coth_factor), (0.0, 1.0));
        let o = thermal_occupation(ThermalEnsemble::new(1.0).unwrap(), 1.0, 1.0).unwrap();
        // Independent series: 1/(e−1) = Σ_{k≥1} e^{−k}, coth(1/2) = 1 + 2Σ_{k≥1} e^{−k}.
        let series: f64 = (1..200).map(|k| (-(k as f64)).exp()).sum();
        assert!((o.mean_n - series).abs() < 1e-15);
        assert!((o.coth_factor - (1.0 + 2.0 * series)).abs() < 1e-12);
        assert!((o.mean_n - 0.581976706869326).abs() < 1e-12);
        assert!((o.coth_factor - 2.163953413738653).abs() < 1e-12);
        let ln2 = thermal_occupation(ThermalEnsemble::new(std::f64::consts::LN_2).unwrap(), 1.0, 1.0)
            .unwrap();
        assert!((ln2.mean_n - 1.0).abs() < 1e-15);
        assert!((ln2.coth_factor - 3.0).abs() < 1e-14);
    }

    #[test]
    fn thermal_occupation_rejects_zero_argument() {
        let e = ThermalEnsemble::new(1.0).unwrap();
        assert!(thermal_occupation(e, 0.0, 1.0).is_err());
        assert!(ThermalEnsemble::new(0.0).is_err());
        assert!(ThermalEnsemble::new(-1.0).is_err());
    }

    #[test]
    fn boltzmann_examples() {
        let w = boltzmann_weights(ThermalEnsemble::new(1.0).unwrap(), &[0.0, std::f64::consts::LN_2])
            .unwrap();
        assert!((w.weights[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w.weights[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((w.partition() - 1.5).abs() < 1e-15);

        let t0 = boltzmann_weights(ThermalEnsemble::zero_temperature(), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t0.weights, vec![1.0, 0.0, 0.0]);

        let deg = boltzmann_weights(ThermalEnsemble::zero_temperature(), &[1.0, 1.0, 3.0]).unwrap();
        assert_eq!(deg.weights, vec![0.5, 0.5, 0.0]);
        assert_eq!(deg.ground_degeneracy, 2);

        let e = ThermalEnsemble::new(2.0).unwrap();
        let a = boltzmann_weights(e, &[0.5, 1.5, 2.5]).unwrap();
        let b = boltzmann_weights(e, &[0.0, 1.0, 2.0]).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(boltzmann_weights(e, &[]).is_err());
    }

    #[test]
    fn boltzmann_survives_huge_energies() {
        let w = boltzmann_weights(ThermalEnsemble::new(50.0).unwrap(), &[1e4, 1e4 + 0.1]).unwrap();
        assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(w.weights[1] > 0.0);
    }

    #[test]
    fn truncation_tail_criterion() {
        let pair = OscillatorPair::natural(1.0, 1.3).unwrap();
        let ens = ThermalEnsemble::new(1.0).unwrap();
        let t = FockTruncation::for_ensemble(&pair, ens, 1e-8).unwrap();
        t.check(&pair, ens).unwrap();
        // Brute-force check: the Boltzmann weight of levels ≥ N-2 (the margin) computed on a
        // much larger product space is already below tolerance.
        let big = product_coupling_operator(&pair, &FockTruncation::new(t.levels + 40).unwrap(), 1.0)
            .unwrap();
        let w = boltzmann_weights(ens, big.system.energies()).unwrap();
        let relevant = t.levels - TRUNCATION_MARGIN;
        let discarded: f64 = (0..big.system.dim())
            .filter(|&k| {
                let (a, b) = big.label(k);
                a >= relevant || b >= relevant
            })
            .map(|k| w.weights[k])
            .sum();
        assert!(discarded < 1e-8, "{discarded:e}");
        assert!(FockTruncation::new(3).unwrap().check(&pair, ens).is_err());
        assert!(FockTruncation::new(1).is_err());
    }

    #[test]
    fn level_system_validation() {
        let mut a = DMatrix::from_element(2, 2, Complex64::new(0.0, 0.0));
        a[(0, 1)] = Complex64::new(0.0, 1.0);
        a[(1, 0)] = Complex64::new(0.0, 1.0);
        assert!(LevelSystem::new(vec![0.0, 1.0], a.clone()).is_err());
        a[(1, 0)] = Complex64::new(0.0, -1.0);
        assert!(LevelSystem::new(vec![0.0, 1.0], a.clone()).is_ok());
        assert!(LevelSystem::new(vec![1.0, 0.0], a.clone()).is_err());
        assert!(LevelSystem::new(vec![0.0, 1.0, 2.0], a).is_err());
    }

    proptest! {
        #[test]
        fn product_operator_is_hermitian_with_selection_rule(
            w1 in 0.3f64..3.0, w2 in 0.3f64..3.0, m1 in 0.5f64..2.0, m2 in 0.5f64..2.0,
            levels in 2usize..7, g in -2.0f64..2.0,
        ) {
            let pair = OscillatorPair::new(m1, m2, w1, w2, 1.0).unwrap();
            let p = product_coupling_operator(&pair, &FockTruncation::new(levels).unwrap(), g).unwrap();
            let a = p.system.coupling();
            for i in 0..p.system.dim() {
                for j in 0..p.system.dim() {
                    prop_assert_eq!(a[(i, j)], a[(j, i)].conj());
                    let (a1, b1) = p.label(i);
                    let (a2, b2) = p.label(j);
                    if a[(i, j)].norm() != 0.0 {
                        prop_assert!(a1.abs_diff(a2) == 1 && b1.abs_diff(b2) == 1);
                    }
                }
            }
        }

        #[test]
        fn boltzmann_shift_invariance(
            energies in proptest::collection::vec(-5.0f64..5.0, 1..12),
            beta in 0.05f64..20.0, shift in -100.0f64..100.0,
        ) {
            let e = ThermalEnsemble::new(beta).unwrap();
            let a = boltzmann_weights(e, &energies).unwrap();
            let shifted: Vec<f64> = energies.iter().map(|x| x + shift).collect();
            let b = boltzmann_weights(e, &shifted).unwrap();
            prop_assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for (x, y) in a.weights.iter().zip(&b.weights) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn coth_identity_against_series(x in 0.05f64..30.0) {
            let o = thermal_occupation(ThermalEnsemble::new(x).unwrap(), 1.0, 1.0).unwrap();
            // coth(x/2) = 1 + 2 Σ e^{−kx}
            let terms = ((40.0 / x).ceil() as usize).max(1);
            let s: f64 = (1..=terms).map(|k| (-(k as f64) * x).exp()).rev().sum();
            prop_assert!((o.coth_factor - (1.0 + 2.0 * s)).abs() < 1e-12 * o.coth_factor);
        }
    }
}
