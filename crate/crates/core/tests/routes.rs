use casimir_core::barton::{b1100_route_energy, barton_energy, BartonSetup};
use casimir_core::kernel::{friction_force, phi_kernel, CouplingDrive};
use casimir_core::model::product_coupling_operator;
use casimir_core::perturbation::dissipated_energy_perturbative;
use casimir_core::propagator::{exact_dissipation, PropagationConfig};
use casimir_core::spectral::{dissipation_spectral, dissipation_timedomain, spectral_response, TimeDomainOptions};
use casimir_core::{DriveProfile, FockTruncation, OscillatorPair, ThermalEnsemble};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

#[test]
fn four_routes_agree_on_a_detuned_pair() {
    let pair = OscillatorPair::natural(1.0, 0.7).unwrap();
    let e = ThermalEnsemble::new(3.0).unwrap();
    let trunc = FockTruncation::for_ensemble(&pair, e, 1e-9).unwrap();
    let ps = product_coupling_operator(&pair, &trunc, 0.4).unwrap();
    let q = DriveProfile::ramp_damped(0.6).unwrap();

    let pert = dissipated_energy_perturbative(&ps.system, e, &q, 1.0).unwrap();
    let spec = dissipation_spectral(&ps.system, e, &q, 1.0).unwrap();
    let td = dissipation_timedomain(&ps.system, e, &q, 1.0, TimeDomainOptions::default()).unwrap();
    let lambda = 1e-3;
    let exact = exact_dissipation(&ps.system, e, &q, &PropagationConfig::for_drive(&q, lambda)).unwrap();

    assert!(pert.energy > 0.0);
    assert!(rel(pert.energy, spec) < 1e-12);
    assert!(rel(td.energy, spec) < 1e-5);
    assert!(rel(exact.de_exact / (lambda * lambda), pert.energy) < 1e-3);
}

#[test]
fn truncated_response_reproduces_the_closed_kernel() {
    let pair = OscillatorPair::natural(1.3, 0.9).unwrap();
    let e = ThermalEnsemble::new(2.0).unwrap();
    let trunc = FockTruncation::for_ensemble(&pair, e, 1e-13).unwrap();
    let ps = product_coupling_operator(&pair, &trunc, 1.0).unwrap();
    let r = spectral_response(&ps.system, e, 1.0).unwrap();
    for k in 0..50 {
        let t = 0.37 * k as f64;
        let want = phi_kernel(t, &pair, e).unwrap();
        assert!((r.phi(t) - want).abs() < 1e-9, "t = {t}");
    }
}

#[test]
fn friction_opposes_motion_at_finite_temperature() {
    let pair = OscillatorPair::natural(1.0, 1.02).unwrap();
    let d = CouplingDrive::along_x(0.5, 0.05).unwrap();
    let f = friction_force(&pair, ThermalEnsemble::new(1.0).unwrap(), &d).unwrap();
    assert!(f.f_friction.dot(&d.velocity) < 0.0);
}

#[test]
fn barton_routes_coincide_on_a_collision_pulse() {
    let setup = BartonSetup::new(1.4, 0.8, 1.0).unwrap();
    // Closest approach s = 3 at t = 0, speed 0.5; q = e²/s³ with e = 1.
    let q = casimir_core::barton::drive_from_trajectory(1.0, |t| (9.0 + 0.25 * t * t).sqrt(), -80.0, 80.0, 4001)
        .unwrap();
    let a = barton_energy(&setup, &q).unwrap();
    let b = b1100_route_energy(&setup, &q).unwrap();
    assert!(a.energy > 0.0);
    assert!(rel(a.energy, b.energy) < 1e-10);
}
