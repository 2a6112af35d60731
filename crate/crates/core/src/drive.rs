//! Classical drive histories q(t) and their Fourier transforms
//! q̂(ω) = ∫ q(t) e^{−iωt} dt.

use num_complex::Complex64;

use crate::error::{positive, CasimirError, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

/// Relative error bound demanded of quadrature-backed transforms.
pub const SAMPLED_FOURIER_RTOL: f64 = 1e-8;

/// ηt at which the default ramp window ends; q has decayed below 1e-11 of its peak.
pub const RAMP_DECAY_WINDOW: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub enum DriveProfile {
    /// q(t) = t e^{−ηt} for t > 0, zero before; q̂(ω) = 1/(η + iω)².
    RampDamped { eta: f64 },
    /// q(t) = A exp(−((t − t₀)/w)²).
    GaussianPulse {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Natural cubic spline through samples, zero outside the grid.
    Sampled(SampledDrive),
}

impl DriveProfile {
    pub fn ramp_damped(eta: f64) -> Result<Self> {
        Ok(Self::RampDamped {
            eta: positive("drive.eta", eta)?,
        })
    }

    pub fn gaussian_pulse(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if !amplitude.is_finite() || !center.is_finite() {
            return Err(CasimirError::Domain {
                name: "drive.amplitude/center",
                value: f64::NAN,
                domain: "finite",
            });
        }
        Ok(Self::GaussianPulse {
            amplitude,
            center,
            width: positive("drive.width", width)?,
        })
    }

    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self::Sampled(SampledDrive::new(times, values)?))
    }

    /// Samples `f` on `n` equally spaced points of `[t0, t1]`.
    pub fn sample_fn(f: impl Fn(f64) -> f64, t0: f64, t1: f64, n: usize) -> Result<Self> {
        if n < 4 || !(t1 > t0) {
            return Err(CasimirError::Precondition(
                "need at least 4 samples on a non-empty interval".into(),
            ));
        }
        let h = (t1 - t0) / (n - 1) as f64;
        let times: Vec<f64> = (0..n).map(|k| t0 + h * k as f64).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::sampled(times, values)
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::RampDamped { eta } => {
                if t > 0.0 {
                    t * (-eta * t).exp()
                } else {
                    0.0
                }
            }
            Self::GaussianPulse {
                amplitude,
                center,
                width,
            } => {
                let s = (t - center) / width;
                amplitude * (-s * s).exp()
            }
            Self::Sampled(s) => s.value(t),
        }
    }

    /// q̇(t).
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Self::RampDamped { eta } => {
                if t > 0.0 {
                    (1.0 - eta * t) * (-eta * t).exp()
                } else {
                    0.0
                }
            }
            Self::GaussianPulse {
                amplitude,
                center,
                width,
            } => {
                let s = (t - center) / width;
                -2.0 * s / width * amplitude * (-s * s).exp()
            }
            Self::Sampled(s) => s.derivative(t),
        }
    }

    /// Interval outside which q is negligible (zero for sampled drives).
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::RampDamped { eta } => (0.0, RAMP_DECAY_WINDOW / eta),
            Self::GaussianPulse { center, width, .. } => (center - 8.0 * width, center + 8.0 * width),
            Self::Sampled(s) => (s.times[0], *s.times.last().unwrap()),
        }
    }

    /// Points where q or q̇ is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Self::RampDamped { .. } => vec![0.0],
            Self::GaussianPulse { .. } => vec![],
            Self::Sampled(s) => s.times.clone(),
        }
    }

    pub fn peak_magnitude(&self) -> f64 {
        match self {
            Self::RampDamped { eta } => 1.0 / (std::f64::consts::E * eta),
            Self::GaussianPulse { amplitude, .. } => amplitude.abs(),
            Self::Sampled(s) => s.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// Checks |q(t_end)| < 1e-10·max|q|.
    pub fn check_decayed(&self, t_end: f64) -> Result<()> {
        let peak = self.peak_magnitude();
        let tail = self.value(t_end).abs();
        if tail <= 1e-10 * peak {
            Ok(())
        } else {
            Err(CasimirError::Precondition(format!(
                "drive has not decayed by t = {t_end}: |q| = {tail:e}, peak {peak:e}"
            )))
        }
    }

    /// q̂(ω) and an absolute error bound (zero for analytic kinds).
    pub fn fourier_with_error(&self, omega: f64) -> Result<(Complex64, f64)> {
        match self {
            Self::RampDamped { eta } => {
                let z = Complex64::new(*eta, omega);
                Ok((1.0 / (z * z), 0.0))
            }
            Self::GaussianPulse {
                amplitude,
                center,
                width,
            } => {
                let mag = amplitude * width * std::f64::consts::PI.sqrt()
                    * (-(omega * width).powi(2) / 4.0).exp();
                Ok((Complex64::from_polar(mag, -omega * center), 0.0))
            }
            Self::Sampled(s) => s.fourier(omega),
        }
    }

    pub fn fourier(&self, omega: f64) -> Result<Complex64> {
        self.fourier_with_error(omega).map(|(v, _)| v)
    }

    /// |q̂(ω)|² = q̂(ω) q̂(−ω) for real q.
    pub fn power(&self, omega: f64) -> Result<f64> {
        self.fourier(omega).map(|z| z.norm_sqr())
    }
}

/// Natural cubic spline through `(times, values)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDrive {
    times: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl SampledDrive {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = times.len();
        if n < 4 || values.len() != n {
            return Err(CasimirError::Precondition(
                "sampled drive needs >= 4 (t, q) pairs of equal length".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CasimirError::Precondition(
                "sample times must be strictly increasing".into(),
            ));
        }
        if values.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(CasimirError::Precondition("non-finite sample".into()));
        }
        // Tridiagonal solve for the spline second derivatives (natural end conditions).
        let mut second = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = times[i] - times[i - 1];
            let h1 = times[i + 1] - times[i];
            diag[i] = 2.0 * (h0 + h1);
            rhs[i] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
        }
        for i in 2..n - 1 {
            let h0 = times[i] - times[i - 1];
            let m = h0 / diag[i - 1];
            diag[i] -= m * h0;
            rhs[i] -= m * rhs[i - 1];
        }
        for i in (1..n - 1).rev() {
            let h1 = times[i + 1] - times[i];
            let upper = if i + 1 < n - 1 { h1 * second[i + 1] } else { 0.0 };
            second[i] = (rhs[i] - upper) / diag[i];
        }
        Ok(Self {
            times,
            values,
            second,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, t: f64) -> Option<usize> {
        let n = self.times.len();
        if t < self.times[0] || t > self.times[n - 1] {
            return None;
        }
        let k = self.times.partition_point(|&x| x <= t);
        Some(k.clamp(1, n - 1) - 1)
    }

    pub fn value(&self, t: f64) -> f64 {
        let Some(i) = self.segment(t) else { return 0.0 };
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let Some(i) = self.segment(t) else { return 0.0 };
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        (self.values[i + 1] - self.values[i]) / h
            + ((1.0 - 3.0 * a * a) * self.second[i] + (3.0 * b * b - 1.0) * self.second[i + 1]) * h
                / 6.0
    }

    /// Transform of the interpolant by segment-wise adaptive quadrature.
    ///
    /// The absolute floor is set against ∫|q| dt: that is where summation
    /// roundoff sits, however small the transform itself is.
    pub fn fourier(&self, omega: f64) -> Result<(Complex64, f64)> {
        let l1: f64 = self
            .times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].abs() + v[1].abs()))
            .sum();
        let floor = 1e-13 * l1;
        let q = integrate_with_breaks(
            |t: f64| Complex64::from_polar(self.value(t), -omega * t),
            &self.times,
            QuadOptions {
                abs_tol: floor,
                rel_tol: 1e-13,
                max_intervals: self.times.len() * 64,
            },
        )?;
        if q.error > SAMPLED_FOURIER_RTOL * q.value.norm() && q.error > floor {
            return Err(CasimirError::Quadrature {
                estimate: q.value.norm(),
                residual: q.error,
                intervals: q.intervals,
            });
        }
        Ok((q.value, q.error))
    }
}
