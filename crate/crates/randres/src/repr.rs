//! Evaluable integral-representation density for ReLU feature sampling.
//!
//! For a target `f` whose Fourier weight `g` has a finite high-order moment
//! (`v*`, see [`crate::targets::FourierMoments::v_star`]), `f` restricted to
//! the input ball `||v|| <= M` can be written as an integral of ridge
//! functions `sigma(<v,w> + u)` against a signed density `alpha(w,u)`
//! supported in the slab `u in (-M||w||, 1]`. A spherical inversion
//! `w -> R^2 w / ||w||^2` then folds the unbounded `w`-range into the
//! punctured ball `B_R \ {0}`, giving the compactly supported density `pi`
//! on the box `B_R x [-max(MR,1), max(MR,1)]` that the importance sampler in
//! [`crate::ranfeat`] draws its readout weights from.
//!
//! [`ReprDensity`] evaluates `alpha1`, `alpha2` and `pi` pointwise; it never
//! tabulates them. [`ReprDensity::check_representation`] verifies the
//! reconstruction `f(v) = int pi(w,u) sigma(<v,w> + u) dw du` by Monte Carlo,
//! and [`ReprDensity::pi_l2_norm`] estimates the weighted squared norm
//! `int ||(w,u)||^2 pi^2` next to its a-priori moment bound.

use crate::error::{RandresError, Result};
use crate::reservoir::vol_ball;
use crate::stats::{mc_integrate, EstimateCI, RngStream};
use crate::targets::FourierTarget;
use num_complex::Complex64;

/// Signed representation density on `B_R x [-u_bound, u_bound]`.
///
/// Immutable after [`build_repr`]; pointwise evaluation is pure, so shared
/// references can be used from parallel workers.
#[derive(Clone)]
pub struct ReprDensity {
    /// Target whose Fourier weight drives the density.
    pub target: FourierTarget,
    /// Support radius `R` of the hidden-weight ball.
    pub r_support: f64,
    /// Input-domain radius `M`; reconstruction holds for `||v|| <= M`.
    pub bound_m: f64,
    /// Hidden-weight dimension `q`.
    pub dim_q: usize,
    /// Half-width of the offset interval: `max(M * R, 1)`.
    pub u_bound: f64,
    /// Whether `g` is even (declared via a radial profile); saves one
    /// Fourier-weight evaluation per point.
    even: bool,
}

impl std::fmt::Debug for ReprDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReprDensity")
            .field("kind", &self.target.kind)
            .field("dim_q", &self.dim_q)
            .field("bound_m", &self.bound_m)
            .field("r_support", &self.r_support)
            .field("u_bound", &self.u_bound)
            .finish()
    }
}

/// Builds the representation density for `target` with hidden-weight support
/// radius `r_support`.
///
/// Fails if `r_support` is not positive or the target's `v*` moment does not
/// converge (the construction has no finite variance bound in that case).
pub fn build_repr(target: &FourierTarget, r_support: f64) -> Result<ReprDensity> {
    if !(r_support > 0.0 && r_support.is_finite()) {
        return Err(RandresError::invalid(
            "r_support",
            "support radius must be positive and finite",
        ));
    }
    let v_star = target.moments().v_star()?;
    if !v_star.is_finite() {
        return Err(RandresError::invalid(
            "target",
            "weighted moment v* must be finite",
        ));
    }
    let m = target.bound_m;
    Ok(ReprDensity {
        target: target.clone(),
        r_support,
        bound_m: m,
        dim_q: target.dim_q,
        u_bound: (m * r_support).max(1.0),
        even: target.g_radial().is_some(),
    })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl ReprDensity {
    /// `g(w)` and `g(-w)`, sharing one evaluation when `g` is even.
    fn g_pair(&self, w: &[f64]) -> (Complex64, Complex64) {
        let gp = self.target.eval_g(w);
        if self.even {
            (gp, gp)
        } else {
            let neg: Vec<f64> = w.iter().map(|x| -x).collect();
            (gp, self.target.eval_g(&neg))
        }
    }

    /// Ridge-kernel piece: `-[Re(e^{-iu} g(w)) + Re(e^{iu} g(-w))]` on the
    /// offset window `u in (-M||w||, 0]`, zero elsewhere.
    pub fn eval_alpha1(&self, w: &[f64], u: f64) -> f64 {
        debug_assert_eq!(w.len(), self.dim_q);
        let nw = norm2(w);
        if !(u <= 0.0 && u > -self.bound_m * nw) {
            return 0.0;
        }
        let (gp, gn) = self.g_pair(w);
        -(u.cos() * (gp.re + gn.re) + u.sin() * (gp.im - gn.im))
    }

    /// Constant-and-gradient correction piece, supported on `|u| <= 1`.
    ///
    /// The weight is `g~ = 2 Re g - Im g`: integrating `(v.w + u)` over
    /// `u in [0,1]` picks up the constant part at weight 1/2 (`int_0^1 u du`),
    /// so `Re g` needs the factor 2 for the u-integral to reproduce
    /// `f(0) + grad f(0) . v` in full, while the odd w-moment identity carries
    /// `Im g` with a sign flip. (A weight of `Re g - Im g` would rebuild only
    /// half the constant term; the reconstruction tests below pin this down.)
    pub fn eval_alpha2(&self, w: &[f64], u: f64) -> f64 {
        debug_assert_eq!(w.len(), self.dim_q);
        if !(u.abs() <= 1.0) {
            return 0.0;
        }
        let (gp, gn) = self.g_pair(w);
        let mut total = 0.0;
        if u >= 0.0 {
            total += 2.0 * gp.re - gp.im;
        }
        if u <= 0.0 {
            total -= 2.0 * gn.re - gn.im;
        }
        total
    }

    /// `alpha1 + alpha2` with the support tests done before any Fourier-weight
    /// evaluation; `w_norm` is passed in because the reflected call computes
    /// it more accurately as `R^2/||w||` than from the scaled coordinates.
    fn alpha_at(&self, w: &[f64], w_norm: f64, u: f64) -> f64 {
        let a1_live = u <= 0.0 && u > -self.bound_m * w_norm;
        let a2_pos = u >= 0.0 && u <= 1.0;
        let a2_neg = u >= -1.0 && u <= 0.0;
        if !a1_live && !a2_pos && !a2_neg {
            return 0.0;
        }
        let (gp, gn) = self.g_pair(w);
        let mut total = 0.0;
        if a1_live {
            total -= u.cos() * (gp.re + gn.re) + u.sin() * (gp.im - gn.im);
        }
        if a2_pos {
            total += 2.0 * gp.re - gp.im;
        }
        if a2_neg {
            total -= 2.0 * gn.re - gn.im;
        }
        total
    }

    /// The folded density
    /// `pi(w,u) = alpha(w,u) + (R^2/||w||^2)^{q+2} alpha(R^2 (w,u) / ||w||^2)`
    /// on the punctured open ball, zero for `||w|| >= R`, `w = 0`, or
    /// `|u| > u_bound` (the boundary and center are measure-zero, so setting
    /// zero there changes no integral).
    pub fn eval_pi(&self, w: &[f64], u: f64) -> f64 {
        debug_assert_eq!(w.len(), self.dim_q);
        let nw = norm2(w);
        if !(nw > 0.0) || nw >= self.r_support || u.abs() > self.u_bound {
            return 0.0;
        }
        let direct = self.alpha_at(w, nw, u);

        // Reflected term. The scale s = R^2/||w||^2 blows up near the center,
        // so test the reflected supports before forming s^{q+2}:
        //   alpha1's window is scale-invariant (s u in (-M s||w||, 0] iff
        //   u in (-M||w||, 0]), and alpha2 needs |s u| <= 1.
        let s = (self.r_support / nw).powi(2);
        if !s.is_finite() {
            // ||w|| below ~1e-154: the true reflected value is an underflowed
            // Fourier weight times a power of s, i.e. zero to double precision.
            return direct;
        }
        let refl_norm = self.r_support * self.r_support / nw;
        let refl_u = s * u;
        let a1_live = refl_u <= 0.0 && refl_u > -self.bound_m * refl_norm;
        let a2_live = refl_u.abs() <= 1.0;
        if !a1_live && !a2_live {
            return direct;
        }
        let wr: Vec<f64> = w.iter().map(|&x| x * s).collect();
        let ar = self.alpha_at(&wr, refl_norm, refl_u);
        if ar == 0.0 {
            return direct;
        }
        let mut refl = s.powi(self.dim_q as i32 + 2) * ar;
        if !refl.is_finite() {
            // The power overflowed while alpha stayed representable; finish
            // the product in log space. A finite v* forces alpha to decay
            // faster than s^{-(q+2)}, so this recovers a finite value.
            let ln_term = (self.dim_q as f64 + 2.0) * s.ln() + ar.abs().ln();
            refl = ar.signum() * ln_term.exp();
        }
        direct + refl
    }

    /// Monte Carlo check of the reconstruction
    /// `f(v) = int pi(w,u) sigma(<v,w> + u) dw du`.
    /// `w` is uniform on the ball; the offset is then uniform on the window
    /// where the integrand can be nonzero, `(-max(M||w||, 1), 1]` cut down by
    /// the ReLU to offsets above `-<v,w>`. Sampling is uniform rather than
    /// |pi|-proportional because pi changes sign; the per-draw window length
    /// keeps the estimator unbiased. Returns the estimate with its standard
    /// error.
    pub fn check_representation(
        &self,
        v: &[f64],
        n_samples: u64,
        stream: &mut RngStream,
    ) -> Result<EstimateCI> {
        if v.len() != self.dim_q {
            return Err(RandresError::invalid(
                "v",
                "probe dimension must match the density",
            ));
        }
        if norm2(v) > self.bound_m * (1.0 + 1e-12) {
            return Err(RandresError::invalid(
                "v",
                "reconstruction only holds for ||v|| <= M",
            ));
        }
        if n_samples < 1_000 {
            return Err(RandresError::invalid("n_samples", "need at least 1000"));
        }
        let q = self.dim_q;
        let vol_w = vol_ball(q, self.r_support);
        let window = |w: &[f64]| {
            let dot = w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            let support_lo = -(self.bound_m * norm2(w)).max(1.0);
            (dot, support_lo.max(-dot))
        };
        Ok(mc_integrate(
            q + 1,
            |rng, buf| {
                rng.fill_uniform_ball(self.r_support, &mut buf[..q]);
                let (_, lo) = window(&buf[..q]);
                // An empty window means the integrand vanishes for every
                // offset; park u above the support so eval returns zero.
                buf[q] = if lo < 1.0 { rng.uniform(lo, 1.0) } else { 2.0 };
            },
            |wu| {
                let (w, u) = (&wu[..q], wu[q]);
                let (dot, lo) = window(w);
                let pre = dot + u;
                if lo >= 1.0 || pre <= 0.0 {
                    0.0
                } else {
                    vol_w * (1.0 - lo) * pre * self.eval_pi(w, u)
                }
            },
            n_samples,
            stream,
        ))
    }

    /// Monte Carlo estimate of `int ||(w,u)||^2 pi(w,u)^2 dw du` over the
    /// support box, reported next to [`ReprDensity::weighted_norm_bound`].
    pub fn pi_l2_norm(&self, n_samples: u64, stream: &mut RngStream) -> Result<PiWeightedNorm> {
        if n_samples < 1_000 {
            return Err(RandresError::invalid("n_samples", "need at least 1000"));
        }
        let q = self.dim_q;
        let vol = vol_ball(q, self.r_support) * 2.0 * self.u_bound;
        let estimate = mc_integrate(
            q + 1,
            |rng, buf| {
                rng.fill_uniform_ball(self.r_support, &mut buf[..q]);
                buf[q] = rng.uniform(-self.u_bound, self.u_bound);
            },
            |wu| {
                let (w, u) = (&wu[..q], wu[q]);
                let p = self.eval_pi(w, u);
                if p == 0.0 {
                    return 0.0;
                }
                let n2 = w.iter().map(|x| x * x).sum::<f64>() + u * u;
                vol * n2 * p * p
            },
            n_samples,
            stream,
        );
        let bound = self.weighted_norm_bound()?;
        Ok(PiWeightedNorm { estimate, bound })
    }

    /// A-priori bound on the weighted squared norm of `pi`:
    /// `8 (M^3 + M + 2) * truncation_l2(R)` in terms of the split weighted
    /// L2 moments of `g` (see [`crate::targets::FourierMoments::truncation_l2`]).
    pub fn weighted_norm_bound(&self) -> Result<f64> {
        let m = self.bound_m;
        let bracket = self.target.moments().truncation_l2(self.r_support)?;
        Ok(8.0 * (m.powi(3) + m + 2.0) * bracket)
    }
}

/// Estimated weighted squared norm of `pi` and its a-priori bound.
#[derive(Clone, Copy, Debug)]
pub struct PiWeightedNorm {
    /// Monte Carlo estimate of `int ||(w,u)||^2 pi^2`.
    pub estimate: EstimateCI,
    /// Moment bound the estimate must stay below.
    pub bound: f64,
}

/// Evenly spaced probe points `t * (M/sqrt(q)) * (1,..,1)` for `t in [-1,1]`:
/// a diagonal transect of the input ball with `||v|| = |t| M <= M`.
pub fn diagonal_grid(dim_q: usize, bound_m: f64, points: usize) -> Vec<Vec<f64>> {
    assert!(points >= 1 && dim_q >= 1 && bound_m > 0.0);
    let scale = bound_m / (dim_q as f64).sqrt();
    (0..points)
        .map(|i| {
            let t = if points == 1 {
                0.0
            } else {
                -1.0 + 2.0 * i as f64 / (points - 1) as f64
            };
            vec![t * scale; dim_q]
        })
        .collect()
}
