//! Monte Carlo and adaptive quadrature integrators.
//!
//! Quadrature is a 7/15-point Gauss-Kronrod rule with greedy bisection of the
//! worst interval; infinite ranges are folded onto (0, 1) by r = t/(1-t).
//! Quadrature is used for one-dimensional (usually radial) integrals only;
//! anything higher-dimensional goes through [`mc_integrate`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{RandresError, Result};
use crate::stats::estimate::{EstimateCI, Welford};
use crate::stats::rng::RngStream;

/// Monte Carlo mean of `f` over points produced by `sample`.
///
/// `sample` fills a `dim`-sized buffer with one draw; the estimate, standard
/// error and 95% CI refer to the mean of `f` under the sampling law.
pub fn mc_integrate<S, F>(dim: usize, mut sample: S, mut f: F, n: u64, stream: &mut RngStream) -> EstimateCI
where
    S: FnMut(&mut RngStream, &mut [f64]),
    F: FnMut(&[f64]) -> f64,
{
    assert!(n >= 2, "mc_integrate needs n >= 2");
    let mut buf = vec![0.0; dim];
    let mut acc = Welford::new();
    for _ in 0..n {
        sample(stream, &mut buf);
        acc.push(f(&buf));
    }
    acc.finish()
}

// 15-point Kronrod abscissae on [0, 1] endpoint side (symmetric), the Kronrod
// weights, and the embedded 7-point Gauss weights (nodes 1, 3, 5 and center).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_6,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 7/15 evaluation: returns (integral, error estimate).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = h * x;
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        k += wk * (f1 + f2);
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Segment {
    err: f64,
    val: f64,
    a: f64,
    b: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

const MAX_SEGMENTS: usize = 4000;

/// Adaptive quadrature of `f` on the finite interval [a, b] to absolute
/// tolerance `tol`. Fails with a non-convergence error when the subdivision
/// budget is exhausted.
pub fn quad_1d<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    assert!(tol > 0.0, "quad_1d needs tol > 0");
    assert!(a.is_finite() && b.is_finite() && a <= b, "quad_1d needs a finite ordered interval");
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { err: e, val: v, a, b });
    let mut total_val = v;
    let mut total_err = e;
    while total_err > tol && heap.len() < MAX_SEGMENTS {
        let worst = heap.pop().expect("heap nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // interval is at floating-point resolution; give up on it
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        total_val += v1 + v2 - worst.val;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { err: e1, val: v1, a: worst.a, b: m });
        heap.push(Segment { err: e2, val: v2, a: m, b: worst.b });
    }
    if !(total_err <= tol) {
        return Err(RandresError::QuadratureNonConvergent {
            achieved: total_err,
            requested: tol,
        });
    }
    Ok(total_val)
}

/// Integral of `f` over [0, infinity), folded onto (0, 1) by w = t/(1-t).
pub fn quad_0_inf<F: FnMut(f64) -> f64>(mut f: F, tol: f64) -> Result<f64> {
    quad_1d(
        |t| {
            let om = 1.0 - t;
            f(t / om) / (om * om)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Integral of `f` over the whole real line (two half-line folds).
pub fn quad_real_line<F: FnMut(f64) -> f64>(mut f: F, tol: f64) -> Result<f64> {
    let half = 0.5 * tol;
    let pos = quad_0_inf(|w| f(w), half)?;
    let neg = quad_0_inf(|w| f(-w), half)?;
    Ok(pos + neg)
}

/// Gamma(n/2) for integer n >= 1, by the half-integer recurrence.
pub fn gamma_half(n: usize) -> f64 {
    assert!(n >= 1);
    if n % 2 == 0 {
        // Gamma(k) = (k-1)!
        (1..n / 2).map(|i| i as f64).product()
    } else {
        let target = n as f64 / 2.0;
        let mut v = PI.sqrt(); // Gamma(1/2)
        let mut x = 0.5;
        while x + 1.0 <= target + 1e-9 {
            v *= x;
            x += 1.0;
        }
        v
    }
}

/// Surface area of the unit sphere in R^q: 2 pi^{q/2} / Gamma(q/2).
pub fn unit_sphere_area(q: usize) -> f64 {
    assert!(q >= 1);
    2.0 * PI.powf(q as f64 / 2.0) / gamma_half(q)
}

/// Integral of the radial function h(||w||) over R^q.
///
/// Splits the radial axis at the supplied break radii (put kinks of `h`
/// here), then maps the final piece to infinity. The tolerance is split
/// evenly across pieces.
pub fn radial_integral<F: FnMut(f64) -> f64>(
    q: usize,
    h: F,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    radial_integral_over(q, h, 0.0, None, breaks, tol)
}

/// Integral of h(||w||) over the radial shell lo <= ||w|| <= hi of R^q
/// (hi = None means infinity). Break radii inside the shell split the
/// quadrature; radii outside are ignored.
pub fn radial_integral_over<F: FnMut(f64) -> f64>(
    q: usize,
    mut h: F,
    lo: f64,
    hi: Option<f64>,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    assert!(q >= 1);
    assert!(lo >= 0.0);
    let area = unit_sphere_area(q);
    let qm1 = (q - 1) as i32;
    let mut g = |r: f64| h(r) * r.powi(qm1);
    let cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b > lo && hi.map_or(true, |h| b < h))
        .collect();
    let per = tol / (cuts.len() + 1) as f64 / area;
    let mut from = lo;
    let mut acc = 0.0;
    for &b in &cuts {
        assert!(b > from, "break radii must be strictly increasing");
        acc += quad_1d(&mut g, from, b, per)?;
        from = b;
    }
    match hi {
        Some(end) => {
            assert!(end >= from, "empty or inverted radial range");
            acc += quad_1d(&mut g, from, end, per)?;
        }
        None => {
            acc += quad_1d(
                |t| {
                    let om = 1.0 - t;
                    g(from + t / om) / (om * om)
                },
                0.0,
                1.0,
                per,
            )?;
        }
    }
    Ok(area * acc)
}
