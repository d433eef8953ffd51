//! Approximation targets and the Fourier-moment functionals behind every
//! error constant in the crate.
//!
//! A static target is a pair (f, g) with f(v) = int e^{i<w,v>} g(w) dw; g is
//! the (complex, signed) Fourier density. Targets are restricted to
//! closed-form pairs so the tests always have a trustworthy f to compare
//! against. Dynamic targets (functionals of an input sequence) reduce to
//! static ones on reservoir states.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{RandresError, Result};
use crate::stats::{self, mc_integrate, radial_integral_over, RngStream};

type RealFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type ComplexFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;
type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    GaussianBump,
    ScaledGaussianBump,
    ZeroTarget,
    UserClosedForm,
}

/// A static approximation target with closed-form Fourier data.
#[derive(Clone)]
pub struct FourierTarget {
    pub dim_q: usize,
    pub bound_m: f64,
    pub kind: TargetKind,
    f: RealFn,
    g: ComplexFn,
    /// Radial profile p with g(w) = p(||w||) real, when available. Enables
    /// quadrature (rather than Monte Carlo) moment evaluation.
    g_radial: Option<RadialFn>,
}

impl fmt::Debug for FourierTarget {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("FourierTarget")
            .field("kind", &self.kind)
            .field("dim_q", &self.dim_q)
            .field("bound_m", &self.bound_m)
            .finish()
    }
}

fn check_qm(q: usize, m: f64) -> Result<()> {
    if q == 0 {
        return Err(RandresError::invalid("q", "input dimension must be >= 1"));
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(RandresError::invalid("M", format!("input bound must be positive, got {m}")));
    }
    Ok(())
}

impl FourierTarget {
    /// The canonical test target f(v) = exp(-||v||^2/2); its Fourier density
    /// is the standard normal density (f is the N(0, I_q) characteristic
    /// function).
    pub fn gaussian_bump(q: usize, m: f64) -> Result<Self> {
        let mut t = Self::scaled_gaussian_bump(q, m, 1.0, 1.0)?;
        t.kind = TargetKind::GaussianBump;
        Ok(t)
    }

    /// f(v) = amp * exp(-sigma^2 ||v||^2 / 2), the scaled characteristic
    /// function of N(0, sigma^2 I_q); g = amp * N(0, sigma^2 I_q) density.
    pub fn scaled_gaussian_bump(q: usize, m: f64, amp: f64, sigma: f64) -> Result<Self> {
        check_qm(q, m)?;
        if !(sigma > 0.0) {
            return Err(RandresError::invalid("sigma", "density scale must be positive"));
        }
        if !amp.is_finite() {
            return Err(RandresError::invalid("amp", "amplitude must be finite"));
        }
        let s2 = sigma * sigma;
        let norm = amp / (2.0 * std::f64::consts::PI * s2).powf(q as f64 / 2.0);
        let profile = move |r: f64| norm * (-0.5 * r * r / s2).exp();
        Ok(FourierTarget {
            dim_q: q,
            bound_m: m,
            kind: TargetKind::ScaledGaussianBump,
            f: Arc::new(move |v: &[f64]| {
                let n2: f64 = v.iter().map(|x| x * x).sum();
                amp * (-0.5 * s2 * n2).exp()
            }),
            g: Arc::new(move |w: &[f64]| {
                let r = norm2(w);
                Complex64::new(profile(r), 0.0)
            }),
            g_radial: Some(Arc::new(profile)),
        })
    }

    /// The zero function with zero density.
    pub fn zero(q: usize, m: f64) -> Result<Self> {
        check_qm(q, m)?;
        Ok(FourierTarget {
            dim_q: q,
            bound_m: m,
            kind: TargetKind::ZeroTarget,
            f: Arc::new(|_| 0.0),
            g: Arc::new(|_| Complex64::new(0.0, 0.0)),
            g_radial: Some(Arc::new(|_| 0.0)),
        })
    }

    /// A user-supplied closed-form pair. Pass the radial profile of g when it
    /// has one; without it, moment functionals fall back to Monte Carlo and
    /// may signal non-convergence.
    pub fn user_closed_form(
        q: usize,
        m: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        g: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
        g_radial: Option<RadialFn>,
    ) -> Result<Self> {
        check_qm(q, m)?;
        Ok(FourierTarget {
            dim_q: q,
            bound_m: m,
            kind: TargetKind::UserClosedForm,
            f: Arc::new(f),
            g: Arc::new(g),
            g_radial,
        })
    }

    pub fn eval_f(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim_q);
        (self.f)(v)
    }

    pub fn eval_g(&self, w: &[f64]) -> Complex64 {
        debug_assert_eq!(w.len(), self.dim_q);
        (self.g)(w)
    }

    /// |g| as a function of radius, when g is radial.
    pub fn g_radial(&self) -> Option<&RadialFn> {
        self.g_radial.as_ref()
    }

    /// Moment functionals of |g| evaluated at the default tolerance.
    pub fn moments(&self) -> FourierMoments<'_> {
        FourierMoments { target: self, tol: 1e-9 }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Region selector for the split weighted L2 moment.
#[derive(Clone, Copy, Debug)]
pub enum L2Split {
    /// Integrate over the ball ||w|| <= R.
    Inside(f64),
    /// Integrate over the complement ||w|| > R.
    Outside(f64),
}

/// Scalar functionals of the Fourier density used by the error constants.
///
/// Radial targets evaluate by adaptive quadrature (splitting at the kink of
/// max(1, r^p) and at region boundaries); non-radial targets fall back to
/// importance-sampled Monte Carlo and signal non-convergence when the
/// standard error refuses to shrink.
pub struct FourierMoments<'a> {
    target: &'a FourierTarget,
    tol: f64,
}

impl<'a> FourierMoments<'a> {
    pub fn with_tol(mut self, tol: f64) -> Self {
        assert!(tol > 0.0);
        self.tol = tol;
        self
    }

    /// Integral of h_weight(||w||) * |g| or |g|^2 over a radial shell.
    fn radial_moment(
        &self,
        weight: impl Fn(f64) -> f64,
        squared: bool,
        lo: f64,
        hi: Option<f64>,
        breaks: &[f64],
    ) -> Result<f64> {
        let q = self.target.dim_q;
        if let Some(profile) = &self.target.g_radial {
            radial_integral_over(
                q,
                |r| {
                    let g = profile(r).abs();
                    let gv = if squared { g * g } else { g };
                    // Once the density underflows to zero the true product is
                    // below ~1e-300 for any weight of a finite moment; return
                    // 0 instead of letting an overflowed weight produce NaN.
                    // Divergent moments are still caught: the weight saturates
                    // to infinity while g is representable, and that window
                    // keeps the error estimate above any tolerance.
                    if gv == 0.0 {
                        0.0
                    } else {
                        weight(r) * gv
                    }
                },
                lo,
                hi,
                breaks,
                self.tol,
            )
        } else {
            self.mc_moment(&weight, squared, lo, hi)
        }
    }

    /// Monte Carlo fallback for non-radial densities: importance sampling
    /// under N(0, 4 I_q). Requires the integrand to be dominated by the
    /// proposal; otherwise the convergence check fails loudly.
    fn mc_moment(
        &self,
        weight: &impl Fn(f64) -> f64,
        squared: bool,
        lo: f64,
        hi: Option<f64>,
    ) -> Result<f64> {
        let q = self.target.dim_q;
        let sd = 2.0;
        let log_norm = -(q as f64) * (2.0 * std::f64::consts::PI * sd * sd).ln() / 2.0;
        let proposal_pdf = move |w: &[f64]| {
            let n2: f64 = w.iter().map(|x| x * x).sum();
            (log_norm - 0.5 * n2 / (sd * sd)).exp()
        };
        let mut stream = RngStream::new(0x4D43_4D4F_4D45_4E54, 0);
        let est = mc_integrate(
            q,
            |rng, buf| {
                for x in buf.iter_mut() {
                    *x = sd * rng.standard_normal();
                }
            },
            |w| {
                let r = norm2(w);
                if r < lo || hi.map_or(false, |h| r > h) {
                    return 0.0;
                }
                let g = self.target.eval_g(w).norm();
                let gv = if squared { g * g } else { g };
                if gv == 0.0 {
                    0.0
                } else {
                    weight(r) * gv / proposal_pdf(w)
                }
            },
            2_000_000,
            &mut stream,
        );
        let budget = self.tol.max(1e-4 * est.mean.abs()).max(1e-7);
        if est.stderr > budget {
            return Err(RandresError::EstimatorNonConvergent(format!(
                "moment stderr {:.3e} above budget {:.3e} (non-radial density)",
                est.stderr, budget
            )));
        }
        Ok(est.mean)
    }

    /// tail_mass(R) = int_{||w|| > R} |g(w)| dw.
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        assert!(r >= 0.0);
        self.radial_moment(|_| 1.0, false, r, None, &[])
    }

    /// abs_moment(k) = int ||w||^k |g(w)| dw.
    pub fn abs_moment(&self, k: u32) -> Result<f64> {
        let ki = k as i32;
        self.radial_moment(move |r| r.powi(ki), false, 0.0, None, &[])
    }

    /// exp_moment(k, C) = int exp(C ||w||^k) |g(w)| dw.
    pub fn exp_moment(&self, k: u32, c: f64) -> Result<f64> {
        assert!(k >= 1 && c > 0.0);
        let ki = k as i32;
        self.radial_moment(move |r| (c * r.powi(ki)).exp(), false, 0.0, None, &[])
    }

    /// weighted_l2(p, split) = int max(1, ||w||^p) |g(w)|^2 dw over the whole
    /// space (None) or one side of the radius-R split.
    pub fn weighted_l2(&self, p: f64, split: Option<L2Split>) -> Result<f64> {
        let weight = move |r: f64| 1f64.max(r.powf(p));
        let (lo, hi) = match split {
            None => (0.0, None),
            Some(L2Split::Inside(r)) => (0.0, Some(r)),
            Some(L2Split::Outside(r)) => (r, None),
        };
        self.radial_moment(weight, true, lo, hi, &[1.0])
    }

    /// Split weighted L2 bracket entering both the density-norm bound and
    /// the sampling variance constant: the cubic weight inside the radius-r
    /// ball plus the inversion-weighted high-order moment outside,
    /// int_{B_r} max(1,||w||^3)|g|^2 + int_{||w||>r} max(1,||w||^{2q+5}) r^{-(2q+2)} |g|^2.
    pub fn truncation_l2(&self, r: f64) -> Result<f64> {
        assert!(r > 0.0, "truncation_l2 needs a positive radius");
        let q = self.target.dim_q as f64;
        let inside = self.weighted_l2(3.0, Some(L2Split::Inside(r)))?;
        let outside = self.weighted_l2(2.0 * q + 5.0, Some(L2Split::Outside(r)))?;
        Ok(inside + outside / r.powf(2.0 * q + 2.0))
    }

    /// v* = int max(1, ||w||^{2q+6}) |g(w)|^2 dw, the smoothness constant
    /// gating the representation density.
    pub fn v_star(&self) -> Result<f64> {
        self.weighted_l2((2 * self.target.dim_q + 6) as f64, None)
    }

    /// C_g* = (int max(1, ||w||^3) |g(w)|^2 dw)^{1/2}.
    pub fn c_g_star(&self) -> Result<f64> {
        Ok(self.weighted_l2(3.0, None)?.sqrt())
    }
}

/// The exponentially fading dynamic target
/// H*(z) = exp(-1/2 sum_{i>=0} lambda^i z_{-i}^2), with scalar inputs.
#[derive(Clone, Copy, Debug)]
pub struct GaussianFunctionalTarget {
    pub lambda: f64,
    pub bound_m: f64,
}

impl GaussianFunctionalTarget {
    pub fn new(lambda: f64, bound_m: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(RandresError::invalid(
                "lambda",
                format!("needs 0 < lambda < 1, got {lambda}"),
            ));
        }
        check_qm(1, bound_m)?;
        Ok(GaussianFunctionalTarget { lambda, bound_m })
    }

    /// Evaluate the truncated functional H*_T on the lag window
    /// z = (z_0, z_{-1}, ..., z_{-T}) (most recent entry first).
    pub fn eval_dynamic(&self, z: &[f64]) -> f64 {
        assert!(!z.is_empty());
        assert!(
            z.iter().all(|zi| zi.abs() <= self.bound_m + 1e-12),
            "inputs must satisfy |z_i| <= M"
        );
        let mut s = 0.0;
        let mut pow = 1.0;
        for &zi in z {
            s += pow * zi * zi;
            pow *= self.lambda;
        }
        (-0.5 * s).exp()
    }

    /// Input-norm bound for states stacking T+1 lags: M_T = sqrt(T+1) * M.
    pub fn m_t(&self, t_horizon: usize) -> f64 {
        ((t_horizon + 1) as f64).sqrt() * self.bound_m
    }

    /// The truncated functional seen through the shift reservoir with decay
    /// rho = sqrt(lambda): on states x = (z_0, rho z_{-1}, ..., rho^T z_{-T})
    /// it reduces to the standard Gaussian bump G(x) = exp(-||x||^2/2) in
    /// dimension T+1. H*_T is the characteristic function of N(0, Sigma) with
    /// Sigma = diag(1, lambda, ..., lambda^T) = K K^T, and the reservoir's K
    /// absorbs Sigma^{1/2} exactly, leaving the isotropic bump.
    pub fn target_on_states(&self, t_horizon: usize) -> FourierTarget {
        FourierTarget::gaussian_bump(t_horizon + 1, self.m_t(t_horizon))
            .expect("dimension and bound are positive")
    }
}

/// A contraction reservoir map F*(x, z) = a * exp(-(||x||^2 + ||z||^2)/2)
/// used as the ground truth for the output-feedback experiments.
#[derive(Clone, Debug)]
pub struct ContractionTarget {
    pub state_dim: usize,
    pub input_dim: usize,
    pub bound_m: f64,
    pub amplitude: Vec<f64>,
    pub contraction_r: f64,
}

impl ContractionTarget {
    pub fn new(state_dim: usize, input_dim: usize, bound_m: f64, amplitude: Vec<f64>) -> Result<Self> {
        if state_dim == 0 || input_dim == 0 {
            return Err(RandresError::invalid("dims", "state and input dimensions must be >= 1"));
        }
        check_qm(state_dim + input_dim, bound_m)?;
        if amplitude.len() != state_dim {
            return Err(RandresError::DimMismatch(format!(
                "amplitude has {} entries for state dimension {}",
                amplitude.len(),
                state_dim
            )));
        }
        let a_norm = norm2(&amplitude);
        if a_norm > bound_m {
            return Err(RandresError::invalid(
                "amplitude",
                format!("||a|| = {a_norm} exceeds the range bound M = {bound_m}"),
            ));
        }
        let contraction_r = a_norm * (-0.5f64).exp();
        if !(contraction_r < 1.0) {
            return Err(RandresError::invalid(
                "amplitude",
                format!("contraction factor {contraction_r} is not < 1"),
            ));
        }
        Ok(ContractionTarget {
            state_dim,
            input_dim,
            bound_m,
            amplitude,
            contraction_r,
        })
    }

    /// Default experiment target: scalar state, scalar input, amplitude
    /// 0.5*M, giving contraction factor 0.5*M*e^{-1/2}.
    pub fn default_for(m: f64) -> Result<Self> {
        ContractionTarget::new(1, 1, m, vec![0.5 * m])
    }

    /// Joint dimension n = N* + d of the (x, z) argument.
    pub fn joint_dim(&self) -> usize {
        self.state_dim + self.input_dim
    }

    /// Norm bound of the joint argument over B_{M+1} x [-M, M]^d. This is
    /// what the representation of each component must cover: probe states
    /// reach ||x|| = M+1 while inputs add up to d*M^2 more.
    pub fn joint_bound(&self) -> f64 {
        let m = self.bound_m;
        ((m + 1.0) * (m + 1.0) + self.input_dim as f64 * m * m).sqrt()
    }

    /// Evaluate F*(x, z).
    pub fn eval(&self, x: &[f64], z: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.state_dim);
        assert_eq!(z.len(), self.input_dim);
        let n2: f64 = x.iter().chain(z.iter()).map(|t| t * t).sum();
        let bump = (-0.5 * n2).exp();
        self.amplitude.iter().map(|a| a * bump).collect()
    }

    /// Component F*_j as a static target on the joint (x, z) space, with the
    /// input bound set to the joint norm bound.
    pub fn component_target(&self, j: usize) -> FourierTarget {
        assert!(j < self.state_dim);
        FourierTarget::scaled_gaussian_bump(self.joint_dim(), self.joint_bound(), self.amplitude[j], 1.0)
            .expect("parameters validated at construction")
    }

    /// Smoothness constant C_f of component j:
    /// (Vol_n(B_1) int max(1, ||w||^{2(n+3)}) |f_hat|^2 dw)^{1/2}, n = N*+d.
    pub fn component_cf(&self, j: usize) -> Result<f64> {
        let n = self.joint_dim();
        let t = self.component_target(j);
        let vol = crate::reservoir::vol_ball(n, 1.0);
        let integral = t.moments().weighted_l2(2.0 * (n as f64 + 3.0), None)?;
        Ok((vol * integral).sqrt())
    }

    /// C_{H*} = sum_j C_{F*_j}.
    pub fn c_h_star(&self) -> Result<f64> {
        let mut s = 0.0;
        for j in 0..self.state_dim {
            s += self.component_cf(j)?;
        }
        Ok(s)
    }
}

/// Monte Carlo check of the Fourier identity f(v) =? int e^{i<w,v>} g(w) dw
/// by importance sampling under N(0, I_q). Returns the estimate of the
/// integral's real part.
pub fn fourier_identity_estimate(
    t: &FourierTarget,
    v: &[f64],
    n: u64,
    stream: &mut RngStream,
) -> stats::EstimateCI {
    let q = t.dim_q;
    let log_norm = -(q as f64) * (2.0 * std::f64::consts::PI).ln() / 2.0;
    mc_integrate(
        q,
        |rng, buf| {
            for x in buf.iter_mut() {
                *x = rng.standard_normal();
            }
        },
        |w| {
            let dot: f64 = w.iter().zip(v).map(|(wi, vi)| wi * vi).sum();
            let n2: f64 = w.iter().map(|x| x * x).sum();
            let pdf = (log_norm - 0.5 * n2).exp();
            let g = t.eval_g(w);
            (Complex64::new(0.0, dot).exp() * g).re / pdf
        },
        n,
        stream,
    )
}
