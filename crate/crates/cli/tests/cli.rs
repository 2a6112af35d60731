use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_casimir-friction");

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("scenario.cfg");
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

const SWEEP: &str = "\
# thermal pair, two-axis sweep
system.omega1 = 1
system.omega2 = 0.8
system.coupling = 0.5
ensemble.beta = 2
drive.eta = 0.3
run.routes = spectral, perturbative, kubo
sweep.eta = drive.eta geometric 0.6 0.15 3
sweep.beta = ensemble.beta linear 1 3 2
";

#[test]
fn run_writes_deterministic_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SWEEP);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = run(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(out.status.code(), Some(0));

    let csv = fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.join("results.csv")).unwrap());
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "drive.eta,ensemble.beta,kubo_dE,perturbative_dE,spectral_dE,levels,max_transition,perturbative_valid,norm_drift,timedomain_residual,errors"
    );
    assert_eq!(lines.count(), 6);

    let eq = fs::read_to_string(a.join("equivalence.txt")).unwrap();
    let pairs: Vec<&str> = eq.lines().map(|l| l.split(' ').next().unwrap()).collect();
    assert_eq!(pairs, ["kubo-perturbative", "kubo-spectral", "perturbative-spectral"]);
    assert!(eq.lines().all(|l| l.ends_with(" PASS")), "{eq}");
}

#[test]
fn a_failing_route_exits_with_two_and_still_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "system.omega1 = 1\nsystem.omega2 = 1\nensemble.beta = 1\ndrive.eta = 0.2\nrun.routes = perturbative, barton\nrun.output = res\n",
    );
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let eq = fs::read_to_string(tmp.path().join("res/equivalence.txt")).unwrap();
    assert!(eq.starts_with("perturbative-barton") && eq.trim_end().ends_with("FAIL"), "{eq}");
    let csv = fs::read_to_string(tmp.path().join("res/results.csv")).unwrap();
    assert!(csv.contains("error:precondition"));
}

#[test]
fn invalid_config_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "system.omega1 = 1\nsystem.omega2 = 1\nensemble.beta = 1\ndrive.eta = -0.1\nrun.routes = perturbative\n",
    );
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4") && err.contains("drive.eta") && err.contains("> 0"), "{err}");
}

#[test]
fn barton_zero_temperature_with_sampled_drive() {
    let tmp = tempfile::tempdir().unwrap();
    let samples: String = (0..=1600)
        .map(|k| {
            let t = -8.0 + 0.01 * k as f64;
            format!("{t} {}\n", 0.6 * (-(t * t) / 2.0).exp())
        })
        .collect();
    fs::write(tmp.path().join("pulse.txt"), samples).unwrap();
    let cfg = write_config(
        tmp.path(),
        "system.omega1 = 1.1\nsystem.omega2 = 1.1\nensemble.zero_temperature = true\n\
         drive.kind = sampled\ndrive.file = pulse.txt\nrun.routes = barton, perturbative, spectral\n",
    );
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn converge_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "system.omega1 = 1\nsystem.omega2 = 1\nensemble.beta = 1\ndrive.eta = 0.08\nrun.routes = kubo\n",
    );
    let out = run(&["converge", cfg.to_str().unwrap(), "--mode", "halve_eta", "--steps", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8_lossy(&out.stdout);
    assert_eq!(table.lines().filter(|l| l.ends_with(",PASS")).count(), 4);

    let out = run(&["converge", cfg.to_str().unwrap(), "--mode", "halve_eta", "--steps", "1"]);
    assert_eq!(out.status.code(), Some(1));

    let cold = write_config(
        tmp.path(),
        "system.omega1 = 1\nsystem.omega2 = 1\nensemble.beta = 4\ndrive.eta = 0.5\ntruncation.levels = 6\n\
         truncation.tail_tolerance = 1e-9\nrun.routes = exact\n",
    );
    let out = run(&["converge", cold.to_str().unwrap(), "--mode", "halve_tolerance", "--steps", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn identities_pass() {
    let out = Command::new(BIN).arg("identities").env("CF_SEED", "99").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("seed 99"));
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{text}");
}
