//! Adaptive Gauss–Kronrod quadrature and deterministic summation.
//!
//! Every integral in the crate that is not available in closed form goes
//! through [`integrate`]. The integrator is a globally adaptive G10K21 scheme
//! (bisect the interval with the largest error estimate) that works on both
//! real and complex integrands. Final sums are formed by pairwise summation in
//! interval order, so results do not depend on the order in which intervals
//! were refined.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{CasimirError, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Values that can be integrated: `f64` and `Complex64`.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Pairwise (cascade) summation. Deterministic for a given slice order.
pub fn pairwise_sum<T: QuadValue>(values: &[T]) -> T {
    const BLOCK: usize = 8;
    if values.len() <= BLOCK {
        values.iter().fold(T::zero(), |acc, &v| acc + v)
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 200_000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

/// An integral estimate with its error bound.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// One G10K21 panel: (kronrod estimate, error estimate).
fn gk21<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut kronrod = f_center * WGK[10];
    let mut gauss = T::zero();
    let mut abs_sum = f_center.magnitude() * WGK[10];
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let lo = f(center - x);
        let hi = f(center + x);
        fv1[j] = lo;
        fv2[j] = hi;
        kronrod = kronrod + (lo + hi) * WGK[j];
        abs_sum += WGK[j] * (lo.magnitude() + hi.magnitude());
        if j % 2 == 1 {
            gauss = gauss + (lo + hi) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[10] * (f_center - mean).magnitude();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }
    let value = kronrod * half;
    let asc = asc * half.abs();
    let abs_sum = abs_sum * half.abs();
    let mut err = ((kronrod - gauss) * half).magnitude();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs_sum;
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && floor > err {
        err = floor;
    }
    (value, err)
}

/// Fixed 10-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre_10<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> T {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = T::zero();
    for (k, &w) in WG.iter().enumerate() {
        let x = half * XGK[2 * k + 1];
        sum = sum + (f(center - x) + f(center + x)) * w;
    }
    sum * half
}

/// Abscissae and weights of the 10-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre_10_nodes(a: f64, b: f64) -> [(f64, f64); 10] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 10];
    for (k, &w) in WG.iter().enumerate() {
        let x = half * XGK[2 * k + 1];
        out[2 * k] = (center - x, w * half);
        out[2 * k + 1] = (center + x, w * half);
    }
    out
}

/// Adaptive integration over `[a, b]`.
pub fn integrate<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Quadrature<T>> {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Adaptive integration with user-supplied initial breakpoints.
///
/// `breaks` must be strictly increasing and contain both end points. Seeding
/// breakpoints at oscillation periods or known peaks keeps the bisection from
/// missing features on long intervals.
pub fn integrate_with_breaks<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<Quadrature<T>> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CasimirError::Precondition(
            "quadrature breakpoints must be strictly increasing".into(),
        ));
    }
    let mut heap = BinaryHeap::with_capacity(breaks.len() * 2);
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        let (value, error) = gk21(&f, w[0], w[1]);
        total_err += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let current_value = |heap: &BinaryHeap<Segment<T>>| {
        let mut segs: Vec<&Segment<T>> = heap.iter().collect();
        segs.sort_by(|x, y| x.a.total_cmp(&y.a));
        let vals: Vec<T> = segs.iter().map(|s| s.value).collect();
        pairwise_sum(&vals)
    };
    let mut value = current_value(&heap);
    let mut since_resum = 0usize;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * value.magnitude());
        if total_err <= target {
            break;
        }
        if heap.len() >= opts.max_intervals {
            value = current_value(&heap);
            return Err(CasimirError::Quadrature {
                estimate: value.magnitude(),
                residual: total_err,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval cannot be split further in floating point.
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        total_err += e1 + e2 - worst.error;
        value = value + v1 + v2 - worst.value;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        since_resum += 1;
        if since_resum >= 256 {
            value = current_value(&heap);
            total_err = heap.iter().map(|s| s.error).sum();
            since_resum = 0;
        }
    }
    let intervals = heap.len();
    let error = heap.iter().map(|s| s.error).sum::<f64>();
    Ok(Quadrature {
        value: current_value(&heap),
        error,
        intervals,
    })
}

/// Evenly spaced breakpoints on `[a, b]` no wider than `max_width`.
pub fn uniform_breaks(a: f64, b: f64, max_width: f64) -> Vec<f64> {
    let n = ((b - a) / max_width).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let mut out: Vec<f64> = (0..n).map(|k| a + h * k as f64).collect();
    out.push(b);
    out
}
