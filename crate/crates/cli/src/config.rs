//! Scenario configuration: flat `section.key = value` lines, `#` comments.
//!
//! ```text
//! system.omega1 = 1
//! system.omega2 = 1
//! ensemble.beta = 1
//! drive.eta = 0.1
//! run.routes = perturbative, spectral
//! sweep.eta = drive.eta geometric 0.4 0.05 4
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Route {
    Kubo,
    Perturbative,
    Spectral,
    Timedomain,
    Exact,
    Barton,
}

impl Route {
    /// CSV column order.
    pub const ALL: [Route; 6] = [
        Route::Kubo,
        Route::Perturbative,
        Route::Spectral,
        Route::Timedomain,
        Route::Exact,
        Route::Barton,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Route::Kubo => "kubo",
            Route::Perturbative => "perturbative",
            Route::Spectral => "spectral",
            Route::Timedomain => "timedomain",
            Route::Exact => "exact",
            Route::Barton => "barton",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriveKind {
    RampDamped { eta: f64 },
    GaussianPulse { amplitude: f64, center: f64, width: f64 },
    /// Two-column text file `t q`, resolved against the config's directory.
    Sampled { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Geometric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub label: String,
    pub param: Param,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                let s = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * s,
                    Spacing::Geometric => self.start * (self.stop / self.start).powf(s),
                }
            })
            .collect()
    }
}

/// Numeric fields that a sweep axis may drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    M1,
    M2,
    Omega1,
    Omega2,
    Detuning,
    Hbar,
    Coupling,
    Beta,
    Eta,
    Amplitude,
    Center,
    Width,
    Lambda,
}

impl Param {
    const ALL: [Param; 13] = [
        Param::M1,
        Param::M2,
        Param::Omega1,
        Param::Omega2,
        Param::Detuning,
        Param::Hbar,
        Param::Coupling,
        Param::Beta,
        Param::Eta,
        Param::Amplitude,
        Param::Center,
        Param::Width,
        Param::Lambda,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Param::M1 => "system.m1",
            Param::M2 => "system.m2",
            Param::Omega1 => "system.omega1",
            Param::Omega2 => "system.omega2",
            Param::Detuning => "system.detuning",
            Param::Hbar => "system.hbar",
            Param::Coupling => "system.coupling",
            Param::Beta => "ensemble.beta",
            Param::Eta => "drive.eta",
            Param::Amplitude => "drive.amplitude",
            Param::Center => "drive.center",
            Param::Width => "drive.width",
            Param::Lambda => "exact.lambda",
        }
    }

    fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.key() == key)
    }

    /// Domain check for a single value, as a human-readable rule on failure.
    fn check(self, v: f64) -> Result<(), &'static str> {
        let ok = match self {
            Param::Coupling | Param::Amplitude | Param::Center | Param::Detuning => v.is_finite(),
            _ => v.is_finite() && v > 0.0,
        };
        if ok {
            Ok(())
        } else if matches!(self, Param::Coupling | Param::Amplitude | Param::Center | Param::Detuning) {
            Err("must be finite")
        } else {
            Err("must be finite and > 0")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub m1: f64,
    pub m2: f64,
    pub omega1: f64,
    /// ω₂ = ω₁ − detuning when the detuning is set.
    pub omega2: f64,
    pub detuning: Option<f64>,
    pub hbar: f64,
    /// g in A = −g·x₁x₂ (g = v·∇ψ for the moving pair).
    pub coupling: f64,
    /// None means T = 0.
    pub beta: Option<f64>,
    pub drive: DriveKind,
    /// Fixed levels per oscillator; otherwise chosen from the Boltzmann tail.
    pub levels: Option<usize>,
    pub tail_tolerance: f64,
    pub lambda: f64,
    pub exact_tolerance: f64,
    pub timedomain_rel_tol: f64,
    /// Detuning integrals in the convergence table span ±halfwidth·ω₁ with this many panels.
    pub kubo_panels: usize,
    pub kubo_halfwidth: f64,
    pub sweeps: Vec<SweepAxis>,
    pub routes: Vec<Route>,
    pub output: PathBuf,
}

impl ScenarioConfig {
    pub fn omega2_effective(&self) -> f64 {
        self.detuning.map_or(self.omega2, |d| self.omega1 - d)
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::M1 => self.m1,
            Param::M2 => self.m2,
            Param::Omega1 => self.omega1,
            Param::Omega2 => self.omega2,
            Param::Detuning => self.detuning.unwrap_or(self.omega1 - self.omega2),
            Param::Hbar => self.hbar,
            Param::Coupling => self.coupling,
            Param::Beta => self.beta.unwrap_or(f64::INFINITY),
            Param::Eta => match self.drive {
                DriveKind::RampDamped { eta } => eta,
                _ => f64::NAN,
            },
            Param::Amplitude | Param::Center | Param::Width => match self.drive {
                DriveKind::GaussianPulse { amplitude, center, width } => match p {
                    Param::Amplitude => amplitude,
                    Param::Center => center,
                    _ => width,
                },
                _ => f64::NAN,
            },
            Param::Lambda => self.lambda,
        }
    }

    pub fn set(&mut self, p: Param, v: f64) {
        match p {
            Param::M1 => self.m1 = v,
            Param::M2 => self.m2 = v,
            Param::Omega1 => self.omega1 = v,
            Param::Omega2 => {
                self.omega2 = v;
                self.detuning = None;
            }
            Param::Detuning => self.detuning = Some(v),
            Param::Hbar => self.hbar = v,
            Param::Coupling => self.coupling = v,
            Param::Beta => self.beta = Some(v),
            Param::Eta => self.drive = DriveKind::RampDamped { eta: v },
            Param::Amplitude | Param::Center | Param::Width => {
                if let DriveKind::GaussianPulse { amplitude, center, width } = &mut self.drive {
                    match p {
                        Param::Amplitude => *amplitude = v,
                        Param::Center => *center = v,
                        _ => *width = v,
                    }
                }
            }
            Param::Lambda => self.lambda = v,
        }
    }

    /// All sweep points in row-major order (first axis slowest).
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let mut grid = vec![Vec::new()];
        for axis in &self.sweeps {
            grid = grid
                .into_iter()
                .flat_map(|prefix| {
                    axis.values().into_iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        grid
    }

    pub fn at(&self, point: &[f64]) -> ScenarioConfig {
        let mut c = self.clone();
        for (axis, &v) in self.sweeps.iter().zip(point) {
            c.set(axis.param, v);
        }
        c
    }
}

/// One violation, located by key and (when known) line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

const KNOWN_KEYS: &[&str] = &[
    "system.m1",
    "system.m2",
    "system.omega1",
    "system.omega2",
    "system.detuning",
    "system.hbar",
    "system.coupling",
    "ensemble.beta",
    "ensemble.zero_temperature",
    "drive.kind",
    "drive.eta",
    "drive.amplitude",
    "drive.center",
    "drive.width",
    "drive.file",
    "truncation.levels",
    "truncation.tail_tolerance",
    "exact.lambda",
    "exact.tolerance",
    "timedomain.rel_tol",
    "kubo.panels",
    "kubo.halfwidth",
    "run.routes",
    "run.output",
];

pub const MAX_SWEEP_AXES: usize = 2;

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    issues: Vec<ConfigIssue>,
}

impl Entries {
    fn issue(&mut self, line: Option<usize>, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|e| e.0)
    }

    fn float(&mut self, key: &str, domain: Option<Param>, default: Option<f64>) -> f64 {
        let Some((line, raw)) = self.map.get(key).cloned() else {
            return match default {
                Some(d) => d,
                None => {
                    self.issue(None, key, "missing required key");
                    f64::NAN
                }
            };
        };
        let v = match raw.parse::<f64>() {
            Ok(v) => v,
            Err(_) => {
                self.issue(Some(line), key, format!("`{raw}` is not a number"));
                return f64::NAN;
            }
        };
        if let Some(p) = domain {
            if let Err(rule) = p.check(v) {
                self.issue(Some(line), key, format!("{v} out of domain: {rule}"));
            }
        }
        v
    }

    fn positive(&mut self, key: &str, default: f64) -> f64 {
        let v = self.float(key, None, Some(default));
        if !(v.is_finite() && v > 0.0) && !v.is_nan() {
            let line = self.line(key);
            self.issue(line, key, format!("{v} out of domain: must be finite and > 0"));
        }
        v
    }

    fn count(&mut self, key: &str, min: usize) -> Option<usize> {
        let (line, raw) = self.map.get(key).cloned()?;
        match raw.parse::<usize>() {
            Ok(n) if n >= min => Some(n),
            _ => {
                self.issue(Some(line), key, format!("`{raw}` must be an integer >= {min}"));
                None
            }
        }
    }
}

/// Parses and validates a scenario; every violation is reported, not just the first.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ScenarioConfig, ConfigErrors> {
    let mut e = Entries {
        map: BTreeMap::new(),
        issues: Vec::new(),
    };
    let mut sweep_lines: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            e.issue(Some(line), content, "expected `section.key = value`");
            continue;
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if let Some(label) = key.strip_prefix("sweep.") {
            if label.is_empty() {
                e.issue(Some(line), &key, "sweep axes need a label, e.g. `sweep.eta`");
            } else {
                sweep_lines.push((line, key.clone(), value));
            }
            continue;
        }
        if !KNOWN_KEYS.contains(&key.as_str()) {
            e.issue(Some(line), &key, "unknown key");
            continue;
        }
        if let Some((first, _)) = e.map.get(&key) {
            let msg = format!("duplicate key (first set on line {first})");
            e.issue(Some(line), &key, msg);
            continue;
        }
        e.map.insert(key, (line, value));
    }

    let m1 = e.float("system.m1", Some(Param::M1), Some(1.0));
    let m2 = e.float("system.m2", Some(Param::M2), Some(1.0));
    let omega1 = e.float("system.omega1", Some(Param::Omega1), None);
    let hbar = e.float("system.hbar", Some(Param::Hbar), Some(1.0));
    let coupling = e.float("system.coupling", Some(Param::Coupling), Some(1.0));
    let (omega2, detuning) = match (e.has("system.omega2"), e.has("system.detuning")) {
        (true, true) => {
            let line = e.line("system.detuning");
            e.issue(line, "system.detuning", "set either system.omega2 or system.detuning, not both");
            (f64::NAN, None)
        }
        (false, true) => {
            let d = e.float("system.detuning", Some(Param::Detuning), None);
            if omega1 - d <= 0.0 {
                let line = e.line("system.detuning");
                e.issue(line, "system.detuning", format!("{d} out of domain: must be < system.omega1"));
            }
            (omega1 - d, Some(d))
        }
        _ => (e.float("system.omega2", Some(Param::Omega2), None), None),
    };

    let beta = match (e.has("ensemble.beta"), e.map.get("ensemble.zero_temperature").cloned()) {
        (true, Some((line, _))) => {
            e.issue(Some(line), "ensemble.zero_temperature", "set either ensemble.beta or ensemble.zero_temperature");
            None
        }
        (true, None) => Some(e.float("ensemble.beta", Some(Param::Beta), None)),
        (false, Some((line, v))) => {
            if v != "true" {
                e.issue(Some(line), "ensemble.zero_temperature", "only `true` is meaningful; set ensemble.beta instead");
            }
            None
        }
        (false, None) => {
            e.issue(None, "ensemble.beta", "missing required key (or set ensemble.zero_temperature = true)");
            None
        }
    };

    let kind = e.map.get("drive.kind").cloned();
    let drive = match kind.as_ref().map(|(l, v)| (*l, v.as_str())) {
        None | Some((_, "ramp_damped")) => DriveKind::RampDamped {
            eta: e.float("drive.eta", Some(Param::Eta), None),
        },
        Some((_, "gaussian_pulse")) => DriveKind::GaussianPulse {
            amplitude: e.float("drive.amplitude", Some(Param::Amplitude), Some(1.0)),
            center: e.float("drive.center", Some(Param::Center), Some(0.0)),
            width: e.float("drive.width", Some(Param::Width), None),
        },
        Some((_, "sampled")) => match e.map.get("drive.file").cloned() {
            Some((_, p)) => DriveKind::Sampled { path: base_dir.join(p) },
            None => {
                e.issue(None, "drive.file", "missing required key for drive.kind = sampled");
                DriveKind::Sampled { path: PathBuf::new() }
            }
        },
        Some((line, other)) => {
            e.issue(
                Some(line),
                "drive.kind",
                format!("`{other}` is not one of ramp_damped, gaussian_pulse, sampled"),
            );
            DriveKind::RampDamped { eta: f64::NAN }
        }
    };
    // Keys that belong to a different drive kind are almost certainly mistakes.
    let used: &[&str] = match drive {
        DriveKind::RampDamped { .. } => &["drive.eta"],
        DriveKind::GaussianPulse { .. } => &["drive.amplitude", "drive.center", "drive.width"],
        DriveKind::Sampled { .. } => &["drive.file"],
    };
    for key in ["drive.eta", "drive.amplitude", "drive.center", "drive.width", "drive.file"] {
        if e.has(key) && !used.contains(&key) {
            let line = e.line(key);
            e.issue(line, key, "not used by this drive.kind");
        }
    }

    let levels = e.count("truncation.levels", 2);
    let tail_tolerance = e.positive("truncation.tail_tolerance", 1e-12);
    let lambda = e.float("exact.lambda", Some(Param::Lambda), Some(1e-3));
    let exact_tolerance = e.positive("exact.tolerance", 1e-10);
    let timedomain_rel_tol = e.positive("timedomain.rel_tol", 1e-6);
    let kubo_panels = e.count("kubo.panels", 1).unwrap_or(400);
    let kubo_halfwidth = e.float("kubo.halfwidth", None, Some(0.9));
    if !(kubo_halfwidth > 0.0 && kubo_halfwidth < 1.0) {
        let line = e.line("kubo.halfwidth");
        e.issue(line, "kubo.halfwidth", format!("{kubo_halfwidth} out of domain: must lie in (0, 1)"));
    }

    let routes = match e.map.get("run.routes").cloned() {
        None => {
            e.issue(None, "run.routes", "missing required key");
            Vec::new()
        }
        Some((line, raw)) => {
            let mut routes = Vec::new();
            for name in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match Route::parse(name) {
                    Some(r) if !routes.contains(&r) => routes.push(r),
                    Some(_) => {}
                    None => e.issue(
                        Some(line),
                        "run.routes",
                        format!("unknown route `{name}` (kubo, perturbative, spectral, timedomain, exact, barton)"),
                    ),
                }
            }
            if routes.is_empty() {
                e.issue(Some(line), "run.routes", "no routes given");
            }
            routes.sort();
            routes
        }
    };
    let output = e
        .map
        .get("run.output")
        .map(|(_, p)| base_dir.join(p))
        .unwrap_or_else(|| base_dir.join("out"));

    let mut config = ScenarioConfig {
        m1,
        m2,
        omega1,
        omega2,
        detuning,
        hbar,
        coupling,
        beta,
        drive,
        levels,
        tail_tolerance,
        lambda,
        exact_tolerance,
        timedomain_rel_tol,
        kubo_panels,
        kubo_halfwidth,
        sweeps: Vec::new(),
        routes,
        output,
    };

    if sweep_lines.len() > MAX_SWEEP_AXES {
        let (line, key, _) = &sweep_lines[MAX_SWEEP_AXES];
        e.issue(Some(*line), key, format!("at most {MAX_SWEEP_AXES} sweep axes"));
    }
    for (line, key, value) in sweep_lines.iter().take(MAX_SWEEP_AXES) {
        if let Some(axis) = parse_axis(&mut e, &config, *line, key, value) {
            if config.sweeps.iter().any(|a| a.param == axis.param) {
                e.issue(Some(*line), key, format!("{} is already swept", axis.param.key()));
            } else {
                config.sweeps.push(axis);
            }
        }
    }

    if e.issues.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(e.issues))
    }
}

/// `sweep.<label> = <param> <linear|geometric> <start> <stop> <points>`
fn parse_axis(e: &mut Entries, config: &ScenarioConfig, line: usize, key: &str, value: &str) -> Option<SweepAxis> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    let [param, spacing, start, stop, points] = parts[..] else {
        e.issue(Some(line), key, "expected `<param> <linear|geometric> <start> <stop> <points>`");
        return None;
    };
    let Some(param) = Param::from_key(param) else {
        e.issue(Some(line), key, format!("`{param}` is not a sweepable field"));
        return None;
    };
    let applicable = match param {
        Param::Eta => matches!(config.drive, DriveKind::RampDamped { .. }),
        Param::Amplitude | Param::Center | Param::Width => matches!(config.drive, DriveKind::GaussianPulse { .. }),
        Param::Beta => config.beta.is_some(),
        Param::Omega2 => config.detuning.is_none(),
        Param::Detuning => !e.has("system.omega2"),
        _ => true,
    };
    if !applicable {
        e.issue(Some(line), key, format!("{} does not apply to this scenario", param.key()));
        return None;
    }
    let spacing = match spacing {
        "linear" => Spacing::Linear,
        "geometric" => Spacing::Geometric,
        other => {
            e.issue(Some(line), key, format!("spacing `{other}` is not linear or geometric"));
            return None;
        }
    };
    let (Ok(start), Ok(stop)) = (start.parse::<f64>(), stop.parse::<f64>()) else {
        e.issue(Some(line), key, "start and stop must be numbers");
        return None;
    };
    let Ok(points) = points.parse::<usize>() else {
        e.issue(Some(line), key, "points must be a positive integer");
        return None;
    };
    if points == 0 {
        e.issue(Some(line), key, "points must be a positive integer");
        return None;
    }
    let mut ok = true;
    for v in [start, stop] {
        if let Err(rule) = param.check(v) {
            e.issue(Some(line), key, format!("bound {v} for {} out of domain: {rule}", param.key()));
            ok = false;
        }
    }
    if param == Param::Detuning && start.max(stop) >= config.omega1 {
        e.issue(Some(line), key, "detuning bounds must stay below system.omega1");
        ok = false;
    }
    if spacing == Spacing::Geometric && !(start * stop > 0.0) {
        e.issue(Some(line), key, "geometric spacing needs nonzero bounds of equal sign");
        ok = false;
    }
    ok.then(|| SweepAxis {
        label: key.trim_start_matches("sweep.").to_string(),
        param,
        start,
        stop,
        points,
        spacing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "system.omega1 = 1\nsystem.omega2 = 1\nensemble.beta = 1\ndrive.eta = 0.1\nrun.routes = perturbative\n";

    fn parse(text: &str) -> Result<ScenarioConfig, ConfigErrors> {
        parse_config(text, Path::new("/base"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!((c.m1, c.m2, c.hbar, c.coupling), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(c.drive, DriveKind::RampDamped { eta: 0.1 });
        assert_eq!(c.beta, Some(1.0));
        assert_eq!(c.routes, vec![Route::Perturbative]);
        assert_eq!(c.output, PathBuf::from("/base/out"));
        assert_eq!(c.grid(), vec![Vec::<f64>::new()]);
    }

    #[test]
    fn negative_eta_names_the_key() {
        let err = parse(&MINIMAL.replace("drive.eta = 0.1", "drive.eta = -0.1")).unwrap_err();
        assert_eq!(err.0.len(), 1);
        let i = &err.0[0];
        assert_eq!(i.key, "drive.eta");
        assert_eq!(i.line, Some(4));
        assert!(i.message.contains("> 0"), "{}", i.message);
    }

    #[test]
    fn three_axes_are_refused() {
        let text = format!(
            "{MINIMAL}sweep.a = drive.eta geometric 0.4 0.1 3\nsweep.b = ensemble.beta linear 1 2 2\nsweep.c = system.coupling linear 1 2 2\n"
        );
        let err = parse(&text).unwrap_err();
        assert!(err.0.iter().any(|i| i.message.contains("at most 2 sweep axes") && i.line == Some(8)));
    }

    #[test]
    fn all_violations_are_collected() {
        let text = "system.omega1 = 0\nfoo.bar = 1\nensemble.beta = x\ndrive.eta = 1\nrun.routes = perturbative, magic\n";
        let err = parse(text).unwrap_err();
        let keys: Vec<&str> = err.0.iter().map(|i| i.key.as_str()).collect();
        for k in ["foo.bar", "system.omega1", "system.omega2", "ensemble.beta", "run.routes"] {
            assert!(keys.contains(&k), "{k} missing from {keys:?}");
        }
        assert!(err.to_string().contains("line 2: `foo.bar`: unknown key"));
    }

    #[test]
    fn sweeps_expand_row_major() {
        let text = format!("{MINIMAL}sweep.eta = drive.eta geometric 0.4 0.1 3\nsweep.beta = ensemble.beta linear 1 2 2\n");
        let c = parse(&text).unwrap();
        let g = c.grid();
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![0.4, 1.0]);
        assert_eq!(g[1], vec![0.4, 2.0]);
        assert!((g[2][0] - 0.2).abs() < 1e-15);
        assert_eq!(g[5][1], 2.0);
        let at = c.at(&g[3]);
        assert_eq!(at.beta, Some(2.0));
    }

    #[test]
    fn sweep_bounds_respect_domains() {
        let bad = format!("{MINIMAL}sweep.eta = drive.eta linear 0.1 -0.1 3\n");
        let err = parse(&bad).unwrap_err();
        assert!(err.0[0].message.contains("drive.eta"));
        let bogus = format!("{MINIMAL}sweep.x = system.nothing linear 0 1 2\n");
        assert!(parse(&bogus).is_err());
        let geo = format!("{MINIMAL}sweep.x = system.coupling geometric 0 1 2\n");
        assert!(parse(&geo).is_err());
    }

    #[test]
    fn detuning_and_zero_temperature() {
        let text = "system.omega1 = 1\nsystem.detuning = 0.25\nensemble.zero_temperature = true\ndrive.eta = 0.1\nrun.routes = barton, kubo\n";
        let c = parse(text).unwrap();
        assert_eq!(c.omega2_effective(), 0.75);
        assert_eq!(c.beta, None);
        assert_eq!(c.routes, vec![Route::Kubo, Route::Barton]);
        let both = text.replace("system.detuning = 0.25", "system.detuning = 0.25\nsystem.omega2 = 1");
        assert!(parse(&both).is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# scenario\n\n{}", MINIMAL.replace("drive.eta = 0.1", "drive.eta = 0.1   # convergence factor"));
        assert_eq!(parse(&text).unwrap().drive, DriveKind::RampDamped { eta: 0.1 });
    }
}
