//! Static random ReLU feature networks.
//!
//! A network here is `H(z) = W sigma(A z + zeta)` with the hidden rows
//! `(A_i, zeta_i)` *sampled once and never trained*. The interesting part is
//! the readout `W`:
//!
//! * [`oracle_readout`] sets `W_i = dalpha/dpi(A_i, zeta_i) / N`, the
//!   importance-sampling weights against the representation density of
//!   [`crate::repr`]. Each summand is then an unbiased estimator of the
//!   target, and the mean squared error decays like `C*/N` with the fully
//!   explicit constant [`cstar_uniform`].
//! * [`ridge_readout`] is the practical trained baseline: a ridge solve of
//!   the last layer on labeled samples.
//!
//! [`mse_vs_n`] sweeps network widths and seeds to produce the convergence
//! table behind the `static-conv` experiment, [`schedule_r`] computes the
//! support-radius schedules that balance truncation against variance, and
//! [`universal_workflow`] picks `(R, N, rho)` for a requested accuracy.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{RandresError, Result};
use crate::linalg::spd_solve;
use crate::repr::ReprDensity;
use crate::reservoir::vol_ball;
use crate::stats::{EstimateCI, RngStream, Welford};
use crate::targets::FourierTarget;

/// Sampler + density data for a general product measure `pi_X (x) pi_R`.
///
/// `f_pi(x) = 2 int_{-x}^0 du / pi_R(u)` is supplied by the caller (it has a
/// closed form for the usual choices; `4 c x` for uniform `pi_R` on
/// `[-c, c]`).
#[derive(Clone)]
pub struct GeneralProduct {
    /// Hidden-weight dimension.
    pub q: usize,
    /// Draws a row of `A` from `pi_X`.
    pub sample_x: Arc<dyn Fn(&mut RngStream, &mut [f64]) + Send + Sync>,
    /// Density of `pi_X` w.r.t. Lebesgue measure on `R^q`.
    pub density_x: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    /// Draws an offset from `pi_R`.
    pub sample_u: Arc<dyn Fn(&mut RngStream) -> f64 + Send + Sync>,
    /// Density of `pi_R` on the real line.
    pub density_u: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// The weight function `F_pi`.
    pub f_pi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

/// How hidden rows `(A_i, zeta_i)` are drawn.
#[derive(Clone)]
pub enum FeatureSampler {
    /// Rows uniform on `B_R`, offsets uniform on `[-u_bound, u_bound]`;
    /// the box matching [`crate::repr::ReprDensity`].
    UniformBall { r: f64, q: usize, u_bound: f64 },
    /// Row support size `k` drawn from `level_probs` (index `k-1` holds
    /// `P(K = k)`), `k` positions chosen uniformly, the nonzero block drawn
    /// uniformly from `B_R` in `k` dimensions. Offsets as in `UniformBall`.
    Sparse {
        r: f64,
        q: usize,
        level_probs: Vec<f64>,
        u_bound: f64,
    },
    /// Explicit product measure with user-supplied densities.
    GeneralProduct(GeneralProduct),
}

impl FeatureSampler {
    /// Uniform-ball sampler on the box of a density with input radius `m`.
    pub fn uniform_ball(r: f64, q: usize, m: f64) -> Result<Self> {
        if !(r > 0.0 && m > 0.0) || q == 0 {
            return Err(RandresError::invalid(
                "sampler",
                "uniform ball needs r > 0, m > 0, q >= 1",
            ));
        }
        Ok(FeatureSampler::UniformBall {
            r,
            q,
            u_bound: (m * r).max(1.0),
        })
    }

    /// Sparse sampler with the given level probabilities.
    pub fn sparse(r: f64, q: usize, level_probs: Vec<f64>, m: f64) -> Result<Self> {
        if !(r > 0.0 && m > 0.0) || q == 0 {
            return Err(RandresError::invalid(
                "sampler",
                "sparse needs r > 0, m > 0, q >= 1",
            ));
        }
        if level_probs.len() != q {
            return Err(RandresError::invalid(
                "level_probs",
                "need one probability per level 1..=q",
            ));
        }
        if level_probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(RandresError::invalid(
                "level_probs",
                "probabilities must be nonnegative",
            ));
        }
        let total: f64 = level_probs.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(RandresError::invalid(
                "level_probs",
                "probabilities must sum to 1",
            ));
        }
        Ok(FeatureSampler::Sparse {
            r,
            q,
            level_probs,
            u_bound: (m * r).max(1.0),
        })
    }

    /// The general-product sampler that reproduces [`Self::uniform_ball`]:
    /// `pi_X` uniform on `B_R`, `pi_R` uniform on `[-max(mr,1), max(mr,1)]`,
    /// `F_pi(x) = 4 max(mr,1) x`.
    pub fn general_uniform(r: f64, q: usize, m: f64) -> Result<Self> {
        if !(r > 0.0 && m > 0.0) || q == 0 {
            return Err(RandresError::invalid(
                "sampler",
                "general uniform needs r > 0, m > 0, q >= 1",
            ));
        }
        let c = (m * r).max(1.0);
        let inv_vol = 1.0 / vol_ball(q, r);
        Ok(FeatureSampler::GeneralProduct(GeneralProduct {
            q,
            sample_x: Arc::new(move |rng, out| rng.fill_uniform_ball(r, out)),
            density_x: Arc::new(move |w| {
                let n2: f64 = w.iter().map(|x| x * x).sum();
                if n2.sqrt() <= r {
                    inv_vol
                } else {
                    0.0
                }
            }),
            sample_u: Arc::new(move |rng| rng.uniform(-c, c)),
            density_u: Arc::new(move |_| 0.5 / c),
            f_pi: Arc::new(move |x| 4.0 * c * x),
        }))
    }

    /// Hidden-weight dimension.
    pub fn dim_q(&self) -> usize {
        match self {
            FeatureSampler::UniformBall { q, .. } => *q,
            FeatureSampler::Sparse { q, .. } => *q,
            FeatureSampler::GeneralProduct(gp) => gp.q,
        }
    }
}

/// Draws `n` i.i.d. hidden rows, returning the `n x q` matrix `A` and the
/// offset vector `zeta`.
///
/// Draw order per row is fixed (coordinates of `A_i`, then `zeta_i`; for
/// sparse rows: level, positions, block, then `zeta_i`), so a given
/// `(sampler, stream)` pair reproduces the same weights everywhere.
pub fn sample_hidden(
    s: &FeatureSampler,
    n: usize,
    stream: &mut RngStream,
) -> Result<(Array2<f64>, Array1<f64>)> {
    if n == 0 {
        return Err(RandresError::invalid("n", "need at least one row"));
    }
    let q = s.dim_q();
    let mut a = Array2::zeros((n, q));
    let mut zeta = Array1::zeros(n);
    let mut buf = vec![0.0; q];
    for i in 0..n {
        match s {
            FeatureSampler::UniformBall { r, u_bound, .. } => {
                stream.fill_uniform_ball(*r, &mut buf);
                a.row_mut(i).assign(&ArrayView1::from(&buf[..]));
                zeta[i] = stream.uniform(-u_bound, *u_bound);
            }
            FeatureSampler::Sparse {
                r,
                q,
                level_probs,
                u_bound,
            } => {
                // level k via the cumulative distribution
                let draw = stream.uniform(0.0, 1.0);
                let mut acc = 0.0;
                let mut k = *q;
                for (idx, p) in level_probs.iter().enumerate() {
                    acc += p;
                    if draw < acc {
                        k = idx + 1;
                        break;
                    }
                }
                // k distinct positions by partial Fisher-Yates
                let mut pos: Vec<usize> = (0..*q).collect();
                for j in 0..k {
                    let swap = j + stream.index(*q - j);
                    pos.swap(j, swap);
                }
                let mut chosen = pos[..k].to_vec();
                chosen.sort_unstable();
                // nonzero block uniform on the k-dimensional ball
                stream.fill_uniform_ball(*r, &mut buf[..k]);
                let mut row = a.row_mut(i);
                row.fill(0.0);
                for (slot, &coord) in chosen.iter().enumerate() {
                    row[coord] = buf[slot];
                }
                zeta[i] = stream.uniform(-u_bound, *u_bound);
            }
            FeatureSampler::GeneralProduct(gp) => {
                (gp.sample_x)(stream, &mut buf);
                a.row_mut(i).assign(&ArrayView1::from(&buf[..]));
                zeta[i] = (gp.sample_u)(stream);
            }
        }
    }
    Ok((a, zeta))
}

/// A random-feature network `z -> W sigma(A z + zeta)`.
#[derive(Clone, Debug)]
pub struct RandomFeatureNet {
    /// Hidden weights, one row per feature (`N x q`).
    pub a: Array2<f64>,
    /// Hidden offsets (`N`).
    pub zeta: Array1<f64>,
    /// Readout (`m x N`).
    pub w: Array2<f64>,
}

impl RandomFeatureNet {
    pub fn new(a: Array2<f64>, zeta: Array1<f64>, w: Array2<f64>) -> Result<Self> {
        if zeta.len() != a.nrows() || w.ncols() != a.nrows() {
            return Err(RandresError::DimMismatch(format!(
                "net shapes disagree: A is {}x{}, zeta has {}, W is {}x{}",
                a.nrows(),
                a.ncols(),
                zeta.len(),
                w.nrows(),
                w.ncols()
            )));
        }
        Ok(RandomFeatureNet { a, zeta, w })
    }

    pub fn n_features(&self) -> usize {
        self.a.nrows()
    }

    /// `sigma(A z + zeta)`.
    pub fn features(&self, z: &[f64]) -> Array1<f64> {
        let mut f = self.a.dot(&ArrayView1::from(z));
        f += &self.zeta;
        f.mapv_inplace(|x| x.max(0.0));
        f
    }

    /// `W sigma(A z + zeta)`.
    pub fn forward(&self, z: &[f64]) -> Array1<f64> {
        self.w.dot(&self.features(z))
    }

    /// Scalar output for the `m = 1` networks this crate builds.
    pub fn forward_scalar(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(self.w.nrows(), 1);
        self.forward(z)[0]
    }

    /// Feature matrix for a batch of inputs (`n x q` in, `n x N` out).
    pub fn features_batch(&self, zs: ArrayView2<f64>) -> Array2<f64> {
        relu_features(&self.a, &self.zeta, zs)
    }

    /// Batched forward pass (`n x q` in, `n x m` out).
    pub fn forward_batch(&self, zs: ArrayView2<f64>) -> Array2<f64> {
        self.features_batch(zs).dot(&self.w.t())
    }
}

/// `sigma(Z A^T + zeta)` for a batch of inputs `Z` (`n x q` -> `n x N`).
pub fn relu_features(a: &Array2<f64>, zeta: &Array1<f64>, zs: ArrayView2<f64>) -> Array2<f64> {
    let mut f = zs.dot(&a.t());
    f += &zeta.view().insert_axis(ndarray::Axis(0));
    f.mapv_inplace(|x| x.max(0.0));
    f
}

/// Importance-sampling readout: `W_i = dalpha/dpi(A_i, zeta_i) / N`.
///
/// For the uniform-ball sampler the density ratio is
/// `2 max(MR,1) Vol_q(B_R) pi(A_i, zeta_i)`; for a general product sampler it
/// is `alpha(A_i, zeta_i) / (p_X(A_i) pi_R(zeta_i))` with `alpha = alpha1 +
/// alpha2` (the unreflected pieces; the fold onto `B_R` exists precisely to
/// make the uniform box work, a general `pi_X` carries `alpha` directly).
/// Sparse samplers have no joint density w.r.t. a product measure, so they
/// are rejected here.
///
/// Errors if a row lies outside the sampler's support or the sampler does
/// not match the density's box.
pub fn oracle_readout(
    r: &ReprDensity,
    s: &FeatureSampler,
    a: &Array2<f64>,
    zeta: &Array1<f64>,
) -> Result<Array2<f64>> {
    let n = a.nrows();
    if zeta.len() != n || a.ncols() != r.dim_q {
        return Err(RandresError::DimMismatch(format!(
            "readout shapes: A is {}x{}, zeta has {}, density has q = {}",
            n,
            a.ncols(),
            zeta.len(),
            r.dim_q
        )));
    }
    let mut w = Array2::zeros((1, n));
    match s {
        FeatureSampler::UniformBall { r: br, q, u_bound } => {
            if *q != r.dim_q
                || (br - r.r_support).abs() > 1e-9 * r.r_support
                || (u_bound - r.u_bound).abs() > 1e-9 * r.u_bound
            {
                return Err(RandresError::invalid(
                    "sampler",
                    "uniform-ball box does not match the density's support box",
                ));
            }
            let scale = 2.0 * r.u_bound * vol_ball(r.dim_q, r.r_support) / n as f64;
            let tol = 1.0 + 1e-9;
            for i in 0..n {
                let row = a.row(i);
                let nw = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nw > r.r_support * tol || zeta[i].abs() > r.u_bound * tol {
                    return Err(RandresError::invalid(
                        "rows",
                        "hidden row outside the density's support box",
                    ));
                }
                w[(0, i)] = scale * r.eval_pi(row.as_slice().expect("C-order row"), zeta[i]);
            }
        }
        FeatureSampler::GeneralProduct(gp) => {
            if gp.q != r.dim_q {
                return Err(RandresError::invalid(
                    "sampler",
                    "general product dimension does not match the density",
                ));
            }
            for i in 0..n {
                let row = a.row(i);
                let rs = row.as_slice().expect("C-order row");
                let px = (gp.density_x)(rs);
                let pu = (gp.density_u)(zeta[i]);
                if !(px > 0.0 && pu > 0.0) || !px.is_finite() || !pu.is_finite() {
                    return Err(RandresError::invalid(
                        "rows",
                        "sampler density vanishes at a drawn row",
                    ));
                }
                let alpha = r.eval_alpha1(rs, zeta[i]) + r.eval_alpha2(rs, zeta[i]);
                w[(0, i)] = alpha / (px * pu * n as f64);
            }
        }
        FeatureSampler::Sparse { .. } => {
            return Err(RandresError::invalid(
                "sampler",
                "sparse rows have no joint density over the support box; \
                 use the uniform or general-product sampler with the oracle readout",
            ));
        }
    }
    Ok(w)
}

/// Ridge readout: minimizes `sum_j ||W phi_j - y_j||^2 + lambda ||W||_F^2`
/// over `W` given the feature matrix `phi` (`N x n`, one column per sample)
/// and labels (`m x n`).
///
/// Solved through the normal equations with a symmetric factorization, using
/// whichever Gram matrix (`N x N` or `n x n`) is smaller. A requested
/// `lambda = 0` is retried with a floor of `1e-12` if the factorization
/// fails; if the floored system still fails or the relative residual exceeds
/// `1e-10`, the system is reported as singular.
pub fn ridge_readout(
    features: ArrayView2<f64>,
    labels: ArrayView2<f64>,
    ridge_lambda: f64,
) -> Result<Array2<f64>> {
    let (n_feat, n_samp) = features.dim();
    if labels.ncols() != n_samp {
        return Err(RandresError::DimMismatch(format!(
            "ridge: features are {}x{}, labels {}x{}",
            n_feat,
            n_samp,
            labels.nrows(),
            labels.ncols()
        )));
    }
    if !(ridge_lambda >= 0.0) {
        return Err(RandresError::invalid("ridge_lambda", "must be nonnegative"));
    }

    let attempt = |lam: f64| -> Result<(Array2<f64>, f64)> {
        if n_feat <= n_samp {
            // primal: (phi phi^T + lam I) W^T = phi Y^T
            let mut gram = features.dot(&features.t());
            for d in 0..n_feat {
                gram[(d, d)] += lam;
            }
            let rhs = features.dot(&labels.t());
            let (x, resid) = spd_solve(gram.view(), rhs.view())?;
            Ok((x.t().to_owned(), resid))
        } else {
            // dual: W = Y (phi^T phi + lam I)^{-1} phi^T
            let mut gram = features.t().dot(&features);
            for d in 0..n_samp {
                gram[(d, d)] += lam;
            }
            let (c, resid) = spd_solve(gram.view(), labels.t())?;
            Ok((features.dot(&c).t().to_owned(), resid))
        }
    };

    let first = attempt(ridge_lambda);
    let (w, resid) = match first {
        Ok(pair) => pair,
        Err(_) if ridge_lambda == 0.0 => attempt(1e-12)?,
        Err(e) => return Err(e),
    };
    if resid > 1e-10 {
        return Err(RandresError::LinearSolve(format!(
            "ridge normal equations residual {resid:.3e} above 1e-10 \
             (system effectively singular)"
        )));
    }
    Ok(w)
}

/// The fully explicit variance constant for the uniform-ball sampler:
/// `16 max(MR,1) Vol_q(B_R) (M+1)^2 (M^3+M+2) * truncation_l2(R)`.
///
/// `m` is the input radius the network will be used on (usually
/// `target.bound_m`, but the formula is valid for any `m > 0`).
pub fn cstar_uniform(target: &FourierTarget, m: f64, r: f64, q: usize) -> Result<f64> {
    if q != target.dim_q {
        return Err(RandresError::invalid("q", "must match the target dimension"));
    }
    if !(m > 0.0 && r > 0.0) {
        return Err(RandresError::invalid("m/r", "must be positive"));
    }
    let bracket = target.moments().truncation_l2(r)?;
    Ok(16.0
        * (m * r).max(1.0)
        * vol_ball(q, r)
        * (m + 1.0).powi(2)
        * (m.powi(3) + m + 2.0)
        * bracket)
}

/// The variance constant for a general product sampler, by Monte Carlo over
/// `pi_X`:
/// `M^2 E[F_pi(M ||w||) ||w||^2 g(w)^2] + 8 M^2 (F_pi(1) - F_pi(-1)) E[max(||w||^2,1) g(w)^2]`
/// with `g` the density ratio `d(|mu| + |mu|^-)/d pi_X`.
pub fn cstar_general(
    gp: &GeneralProduct,
    g_ratio: &(dyn Fn(&[f64]) -> f64 + Sync),
    m: f64,
    n_samples: u64,
    stream: &mut RngStream,
) -> Result<f64> {
    if !(m > 0.0) {
        return Err(RandresError::invalid("m", "must be positive"));
    }
    if n_samples < 2 {
        return Err(RandresError::invalid("n_samples", "need at least 2"));
    }
    let spread = (gp.f_pi)(1.0) - (gp.f_pi)(-1.0);
    if !spread.is_finite() {
        return Err(RandresError::invalid("f_pi", "diverges on [-1, 1]"));
    }
    let mut acc = Welford::new();
    let mut buf = vec![0.0; gp.q];
    for _ in 0..n_samples {
        (gp.sample_x)(stream, &mut buf);
        let n2: f64 = buf.iter().map(|x| x * x).sum();
        let g = g_ratio(&buf);
        let g2 = g * g;
        let fp = (gp.f_pi)(m * n2.sqrt());
        if !fp.is_finite() {
            return Err(RandresError::invalid("f_pi", "diverges on the sampled range"));
        }
        acc.push(m * m * (fp * n2 * g2 + 8.0 * spread * n2.max(1.0) * g2));
    }
    Ok(acc.finish().mean)
}

/// Support-radius schedule.
#[derive(Clone, Copy, Debug)]
pub enum ScheduleMode {
    /// Polynomial Fourier moments of order `k`: `R = N^{1/(2k+q+1)}`.
    Poly { k: u32 },
    /// Exponential moments `exp(C ||w||^k)`: `R = (ln(sqrt N)/C)^{1/k}`.
    Exp { k: u32, c: f64 },
}

/// A schedule value with its predicted MSE rate exponent (poly mode only;
/// the exponential schedule decays at the parametric rate up to logs).
#[derive(Clone, Copy, Debug)]
pub struct Schedule {
    pub r: f64,
    pub rate_exponent: Option<f64>,
}

/// Evaluates the support-radius schedule at network width `n`.
pub fn schedule_r(n: f64, mode: ScheduleMode, q: usize) -> Result<Schedule> {
    if !(n >= 2.0) {
        return Err(RandresError::invalid("n", "schedule needs n >= 2"));
    }
    if q == 0 {
        return Err(RandresError::invalid("q", "dimension must be >= 1"));
    }
    match mode {
        ScheduleMode::Poly { k } => {
            if k == 0 {
                return Err(RandresError::invalid("k", "moment order must be >= 1"));
            }
            let kf = k as f64;
            let r = n.powf(1.0 / (2.0 * kf + q as f64 + 1.0));
            let exponent = 1.0 / (2.0 + (q as f64 + 1.0) / kf);
            Ok(Schedule {
                r,
                rate_exponent: Some(exponent),
            })
        }
        ScheduleMode::Exp { k, c } => {
            if k == 0 {
                return Err(RandresError::invalid("k", "moment order must be >= 1"));
            }
            if !(c > 0.0) {
                return Err(RandresError::invalid("c", "moment scale must be positive"));
            }
            let r = (n.sqrt().ln() / c).powf(1.0 / k as f64);
            Ok(Schedule {
                r,
                rate_exponent: None,
            })
        }
    }
}

/// Input law for experiment sweeps; must stay inside the ball `||z|| <= M`.
#[derive(Clone)]
pub enum InputLaw {
    /// i.i.d. coordinates uniform on `[-M/sqrt(q), M/sqrt(q)]`.
    UniformCube,
    /// User-supplied sampler (responsible for respecting the input ball).
    Custom(Arc<dyn Fn(&mut RngStream, &mut [f64]) + Send + Sync>),
}

impl InputLaw {
    fn fill(&self, m: f64, rng: &mut RngStream, out: &mut [f64]) {
        match self {
            InputLaw::UniformCube => {
                let half = m / (out.len() as f64).sqrt();
                for x in out.iter_mut() {
                    *x = rng.uniform(-half, half);
                }
            }
            InputLaw::Custom(f) => f(rng, out),
        }
    }
}

/// Which readout produced a row of the convergence table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReadoutKind {
    Oracle,
    Ridge,
}

impl ReadoutKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReadoutKind::Oracle => "oracle",
            ReadoutKind::Ridge => "ridge",
        }
    }
}

/// One row of the width-sweep convergence table.
#[derive(Clone, Copy, Debug)]
pub struct MseRow {
    pub n_features: usize,
    pub readout: ReadoutKind,
    /// Across-seed mean squared error with its confidence interval.
    pub mse: EstimateCI,
    /// `cstar_uniform / N`, the variance part of the error bound.
    pub cstar_over_n: f64,
    /// Truncation part: `tau (tau + 2 sqrt(C*/N))` with `tau` the Fourier
    /// tail mass outside `B_R` (the cross term from splitting off the
    /// truncated target).
    pub truncation_bound: f64,
    pub seed_count: usize,
}

/// Ridge baseline settings for [`mse_vs_n`].
#[derive(Clone, Copy, Debug)]
pub struct RidgeSpec {
    pub n_train: usize,
    pub lambda: f64,
}

/// Configuration of a width sweep.
#[derive(Clone)]
pub struct MseVsNConfig {
    pub target: FourierTarget,
    pub r_support: f64,
    pub n_grid: Vec<usize>,
    pub input_law: InputLaw,
    pub n_test: usize,
    pub n_seeds: usize,
    /// Also fit and report a ridge readout on fresh training samples.
    pub ridge: Option<RidgeSpec>,
    pub seed: u64,
}

/// Sweeps network widths: for each `N`, averages the empirical squared error
/// of the oracle readout (and optionally a ridge readout on the same hidden
/// weights) over independent weight draws. Seeds run in parallel; each seed
/// owns a pre-derived child stream, so the table is identical at any thread
/// count.
pub fn mse_vs_n(cfg: &MseVsNConfig) -> Result<Vec<MseRow>> {
    let q = cfg.target.dim_q;
    let m = cfg.target.bound_m;
    if cfg.n_grid.is_empty() || cfg.n_seeds < 2 || cfg.n_test == 0 {
        return Err(RandresError::invalid(
            "config",
            "need a nonempty width grid, at least 2 seeds and 1 test point",
        ));
    }
    let density = crate::repr::build_repr(&cfg.target, cfg.r_support)?;
    let sampler = FeatureSampler::uniform_ball(cfg.r_support, q, m)?;
    let cstar = cstar_uniform(&cfg.target, m, cfg.r_support, q)?;
    let tail = cfg.target.moments().tail_mass(cfg.r_support)?;
    let root = RngStream::new(cfg.seed, 0);

    let mut rows = Vec::new();
    for (ni, &n) in cfg.n_grid.iter().enumerate() {
        let seeds: Vec<RngStream> = (0..cfg.n_seeds)
            .map(|s| root.child((ni * cfg.n_seeds + s) as u64))
            .collect();
        let per_seed: Result<Vec<(f64, Option<f64>)>> = seeds
            .into_par_iter()
            .map(|mut rng| seed_mse(&cfg.target, &density, &sampler, cfg, n, &mut rng))
            .collect();
        let per_seed = per_seed?;

        let cstar_over_n = cstar / n as f64;
        let truncation = tail * (tail + 2.0 * cstar_over_n.sqrt());
        let oracle_mses: Vec<f64> = per_seed.iter().map(|p| p.0).collect();
        let oracle = EstimateCI::from_samples(&oracle_mses);
        rows.push(MseRow {
            n_features: n,
            readout: ReadoutKind::Oracle,
            mse: oracle,
            cstar_over_n,
            truncation_bound: truncation,
            seed_count: cfg.n_seeds,
        });
        if cfg.ridge.is_some() {
            let ridge_mses: Vec<f64> = per_seed
                .iter()
                .map(|p| p.1.expect("ridge mse present"))
                .collect();
            let ridge = EstimateCI::from_samples(&ridge_mses);
            rows.push(MseRow {
                n_features: n,
                readout: ReadoutKind::Ridge,
                mse: ridge,
                cstar_over_n,
                truncation_bound: truncation,
                seed_count: cfg.n_seeds,
            });
        }
    }
    Ok(rows)
}

/// One weight draw: returns the oracle-readout test MSE and, if configured,
/// the ridge-readout MSE on the same hidden weights and test set.
fn seed_mse(
    target: &FourierTarget,
    density: &ReprDensity,
    sampler: &FeatureSampler,
    cfg: &MseVsNConfig,
    n: usize,
    rng: &mut RngStream,
) -> Result<(f64, Option<f64>)> {
    let q = target.dim_q;
    let m = target.bound_m;
    let (a, zeta) = sample_hidden(sampler, n, rng)?;
    let w_oracle = oracle_readout(density, sampler, &a, &zeta)?;

    let ridge_net = match cfg.ridge {
        None => None,
        Some(spec) => {
            let mut ztr = Array2::zeros((spec.n_train, q));
            let mut buf = vec![0.0; q];
            let mut labels = Array2::zeros((1, spec.n_train));
            for j in 0..spec.n_train {
                cfg.input_law.fill(m, rng, &mut buf);
                ztr.row_mut(j).assign(&ArrayView1::from(&buf[..]));
                labels[(0, j)] = target.eval_f(&buf);
            }
            let phi = relu_features(&a, &zeta, ztr.view());
            let w = ridge_readout(phi.t(), labels.view(), spec.lambda)?;
            Some(RandomFeatureNet::new(a.clone(), zeta.clone(), w)?)
        }
    };
    let net = RandomFeatureNet::new(a, zeta, w_oracle)?;

    let mut zte = Array2::zeros((cfg.n_test, q));
    let mut truth = Array1::zeros(cfg.n_test);
    let mut buf = vec![0.0; q];
    for j in 0..cfg.n_test {
        cfg.input_law.fill(m, rng, &mut buf);
        zte.row_mut(j).assign(&ArrayView1::from(&buf[..]));
        truth[j] = target.eval_f(&buf);
    }
    let mse_of = |net: &RandomFeatureNet| -> f64 {
        let out = net.forward_batch(zte.view());
        let mut acc = 0.0;
        for j in 0..cfg.n_test {
            let d = out[(j, 0)] - truth[j];
            acc += d * d;
        }
        acc / cfg.n_test as f64
    };
    Ok((mse_of(&net), ridge_net.as_ref().map(&mse_of)))
}

/// Hyperparameters picked by the universal-approximation recipe.
#[derive(Clone, Copy, Debug)]
pub struct WorkflowPick {
    pub r_support: f64,
    pub n_features: usize,
    /// Offset half-width to sample with: `max(M R, 1)`.
    pub rho: f64,
}

/// Picks `(R, N, rho)` for accuracy `eps` at confidence `1 - delta`:
/// first grow `R` until the Fourier tail mass outside `B_R` drops below
/// `eps sqrt(delta) / 4`, then take `N` with `sqrt(C*_R / N)` below the same
/// threshold.
pub fn universal_workflow(target: &FourierTarget, eps: f64, delta: f64) -> Result<WorkflowPick> {
    if !(eps > 0.0) {
        return Err(RandresError::invalid("eps", "accuracy must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(RandresError::invalid("delta", "confidence must be in (0,1)"));
    }
    let threshold = eps * delta.sqrt() / 4.0;
    let moments = target.moments();
    let mut r = 1.0;
    for _ in 0..200 {
        if moments.tail_mass(r)? < threshold {
            let cstar = cstar_uniform(target, target.bound_m, r, target.dim_q)?;
            let n = (cstar / (threshold * threshold)).floor() as usize + 1;
            return Ok(WorkflowPick {
                r_support: r,
                n_features: n.max(1),
                rho: (target.bound_m * r).max(1.0),
            });
        }
        r *= 1.5;
    }
    Err(RandresError::EstimatorNonConvergent(format!(
        "tail mass did not drop below {threshold:.3e} for any tried radius"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::build_repr;
    use num_complex::Complex64;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn uniform_ball_support_and_moment() {
        let s = FeatureSampler::uniform_ball(1.0, 3, 1.0).unwrap();
        let mut rng = RngStream::new(11, 0);
        let (a, zeta) = sample_hidden(&s, 100, &mut rng).unwrap();
        for i in 0..100 {
            assert!(norm(a.row(i).as_slice().unwrap()) <= 1.0 + 1e-12);
            assert!(zeta[i].abs() <= 1.0);
        }

        // second moment of ||A_i||^2 is q/(q+2) for the unit ball
        let s2 = FeatureSampler::uniform_ball(1.0, 2, 1.0).unwrap();
        let (a2, _) = sample_hidden(&s2, 100_000, &mut rng).unwrap();
        let mut acc = Welford::new();
        for i in 0..a2.nrows() {
            let r = a2.row(i);
            acc.push(r.iter().map(|x| x * x).sum::<f64>());
        }
        let est = acc.finish();
        assert!(
            (est.mean - 0.5).abs() <= 4.0 * est.stderr,
            "ball second moment {} +- {}",
            est.mean,
            est.stderr
        );
    }

    #[test]
    fn sparse_levels_and_support() {
        let q = 4;
        let s = FeatureSampler::sparse(2.0, q, vec![0.25; 4], 1.0).unwrap();
        let mut rng = RngStream::new(12, 0);
        let n = 10_000;
        let (a, zeta) = sample_hidden(&s, n, &mut rng).unwrap();
        let mut counts = [0usize; 4];
        for i in 0..n {
            let row = a.row(i);
            let k = row.iter().filter(|x| **x != 0.0).count();
            assert!((1..=q).contains(&k), "row has {k} nonzeros");
            counts[k - 1] += 1;
            assert!(norm(row.as_slice().unwrap()) <= 2.0 + 1e-12);
            assert!(zeta[i].abs() <= 2.0);
        }
        // multinomial: each level fraction within 4 sqrt(p(1-p)/n) of 1/4
        let band = 4.0 * (0.25 * 0.75 / n as f64).sqrt();
        for (k, c) in counts.iter().enumerate() {
            let frac = *c as f64 / n as f64;
            assert!(
                (frac - 0.25).abs() <= band,
                "level {} fraction {frac}",
                k + 1
            );
        }
    }

    #[test]
    fn sparse_concentrated_on_q_matches_uniform_ball() {
        // with all probability on k = q the sparse law IS the uniform ball;
        // two-sample Kolmogorov-Smirnov on norms and first coordinates
        let q = 4;
        let n = 4_000;
        let root = RngStream::new(13, 0);
        let sp = FeatureSampler::sparse(1.5, q, vec![0.0, 0.0, 0.0, 1.0], 1.0).unwrap();
        let ub = FeatureSampler::uniform_ball(1.5, q, 1.0).unwrap();
        let (a_sp, _) = sample_hidden(&sp, n, &mut root.child(0)).unwrap();
        let (a_ub, _) = sample_hidden(&ub, n, &mut root.child(1)).unwrap();

        let ks = |mut xs: Vec<f64>, mut ys: Vec<f64>| -> f64 {
            xs.sort_by(f64::total_cmp);
            ys.sort_by(f64::total_cmp);
            let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
            while i < xs.len() && j < ys.len() {
                if xs[i] <= ys[j] {
                    i += 1;
                } else {
                    j += 1;
                }
                let gap = (i as f64 / xs.len() as f64 - j as f64 / ys.len() as f64).abs();
                d = d.max(gap);
            }
            d
        };
        // asymptotic two-sample critical value at alpha = 0.01
        let crit = 1.628 * ((2 * n) as f64 / (n as f64 * n as f64)).sqrt();
        let norms = |a: &Array2<f64>| -> Vec<f64> {
            (0..a.nrows())
                .map(|i| norm(a.row(i).as_slice().unwrap()))
                .collect()
        };
        let d_norm = ks(norms(&a_sp), norms(&a_ub));
        assert!(d_norm < crit, "norm KS statistic {d_norm} vs {crit}");
        let coord = |a: &Array2<f64>| -> Vec<f64> { a.column(0).to_vec() };
        let d_coord = ks(coord(&a_sp), coord(&a_ub));
        assert!(d_coord < crit, "coordinate KS statistic {d_coord} vs {crit}");
    }

    #[test]
    fn sampler_construction_rejects_bad_input() {
        assert!(FeatureSampler::uniform_ball(0.0, 2, 1.0).is_err());
        assert!(FeatureSampler::sparse(1.0, 2, vec![0.5], 1.0).is_err());
        assert!(FeatureSampler::sparse(1.0, 2, vec![0.7, 0.7], 1.0).is_err());
        assert!(FeatureSampler::sparse(1.0, 2, vec![-0.1, 1.1], 1.0).is_err());
        assert!(sample_hidden(
            &FeatureSampler::uniform_ball(1.0, 2, 1.0).unwrap(),
            0,
            &mut RngStream::new(0, 0)
        )
        .is_err());
    }

    #[test]
    fn oracle_readout_zero_target_and_mismatch() {
        let zero = FourierTarget::zero(1, 1.0).unwrap();
        let d = build_repr(&zero, 5.0).unwrap();
        let s = FeatureSampler::uniform_ball(5.0, 1, 1.0).unwrap();
        let mut rng = RngStream::new(14, 0);
        let (a, zeta) = sample_hidden(&s, 32, &mut rng).unwrap();
        let w = oracle_readout(&d, &s, &a, &zeta).unwrap();
        assert!(w.iter().all(|x| *x == 0.0));
        let net = RandomFeatureNet::new(a.clone(), zeta.clone(), w).unwrap();
        assert_eq!(net.forward_scalar(&[0.3]), 0.0);

        // wrong box
        let s_bad = FeatureSampler::uniform_ball(4.0, 1, 1.0).unwrap();
        assert!(oracle_readout(&d, &s_bad, &a, &zeta).is_err());
        // row outside the box
        let mut a_bad = a.clone();
        a_bad[(0, 0)] = 7.5;
        assert!(oracle_readout(&d, &s, &a_bad, &zeta).is_err());
        // sparse sampler has no density
        let sp = FeatureSampler::sparse(5.0, 1, vec![1.0], 1.0).unwrap();
        assert!(oracle_readout(&d, &sp, &a, &zeta).is_err());
    }

    #[test]
    fn oracle_readout_is_unbiased_across_seeds() {
        let target = FourierTarget::gaussian_bump(1, 1.0).unwrap();
        let d = build_repr(&target, 5.0).unwrap();
        let s = FeatureSampler::uniform_ball(5.0, 1, 1.0).unwrap();
        let root = RngStream::new(15, 0);
        let probes = [vec![0.0], vec![0.7]];
        for (pi, z) in probes.iter().enumerate() {
            let mut acc = Welford::new();
            for seed in 0..200u64 {
                let mut rng = root.child(seed * 2 + pi as u64);
                let (a, zeta) = sample_hidden(&s, 64, &mut rng).unwrap();
                let w = oracle_readout(&d, &s, &a, &zeta).unwrap();
                let net = RandomFeatureNet::new(a, zeta, w).unwrap();
                acc.push(net.forward_scalar(z));
            }
            let est = acc.finish();
            let truth = target.eval_f(z);
            assert!(
                (est.mean - truth).abs() <= 4.0 * est.stderr,
                "z={z:?}: mean {} vs {truth} (stderr {})",
                est.mean,
                est.stderr
            );
        }
    }

    #[test]
    fn general_product_matches_uniform_for_compact_weight() {
        // When the Fourier weight is supported inside B_R the inversion fold
        // contributes nothing and the two readout formulas must agree row by
        // row: 2 max(MR,1) Vol pi(w,u) == alpha(w,u) / (p_X(w) p_R(u)).
        let r = 3.0;
        let t = FourierTarget::user_closed_form(
            2,
            1.0,
            |_v| 0.0, // f not needed for weight comparison
            |w| {
                let n2: f64 = w.iter().map(|x| x * x).sum();
                let r2 = n2 / 4.0;
                if r2 < 1.0 {
                    Complex64::new((1.0 - r2).powi(2), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            },
            Some(Arc::new(|rad: f64| {
                let r2 = rad * rad / 4.0;
                if r2 < 1.0 {
                    (1.0 - r2).powi(2)
                } else {
                    0.0
                }
            })),
        )
        .unwrap();
        let d = build_repr(&t, r).unwrap();
        let ub = FeatureSampler::uniform_ball(r, 2, 1.0).unwrap();
        let gp = FeatureSampler::general_uniform(r, 2, 1.0).unwrap();
        let mut rng = RngStream::new(16, 0);
        let (a, zeta) = sample_hidden(&ub, 512, &mut rng).unwrap();
        let w_ub = oracle_readout(&d, &ub, &a, &zeta).unwrap();
        let w_gp = oracle_readout(&d, &gp, &a, &zeta).unwrap();
        let mut live = 0;
        for i in 0..512 {
            let (x, y) = (w_ub[(0, i)], w_gp[(0, i)]);
            assert!(
                (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-300),
                "row {i}: uniform {x} vs general {y}"
            );
            if x != 0.0 {
                live += 1;
            }
        }
        // about 18% of the box is live for this weight; 60 is ~3.6 sigma low
        assert!(live > 60, "need live rows for a meaningful comparison");
    }

    #[test]
    fn cstar_uniform_frozen_and_scaling() {
        let t = FourierTarget::gaussian_bump(1, 1.0).unwrap();
        let c = cstar_uniform(&t, 1.0, 5.0, 1).unwrap();
        let want = 4541.710_947_436_066;
        assert!(
            (c - want).abs() <= 1e-6 * want,
            "cstar_uniform = {c}, want {want}"
        );
        // zero target
        let z = FourierTarget::zero(1, 1.0).unwrap();
        assert_eq!(cstar_uniform(&z, 1.0, 5.0, 1).unwrap(), 0.0);
        // doubling M: (M+1)^2 (M^3+M+2) grows by 6.75, max(MR,1) doubles,
        // integrals unchanged -> full constant grows by 13.5
        let c2 = cstar_uniform(&t, 2.0, 5.0, 1).unwrap();
        assert!((c2 / c - 13.5).abs() < 1e-9);
        assert!(cstar_uniform(&t, 1.0, 5.0, 2).is_err());
    }

    #[test]
    fn cstar_general_within_factor_of_uniform() {
        let t = FourierTarget::gaussian_bump(1, 1.0).unwrap();
        let (r, m, q) = (5.0, 1.0, 1usize);
        let FeatureSampler::GeneralProduct(gp) = FeatureSampler::general_uniform(r, q, m).unwrap()
        else {
            unreachable!()
        };
        // F_pi(1) = 4 c with c = max(MR,1) = 5
        assert_eq!((gp.f_pi)(1.0), 20.0);

        let vol = vol_ball(q, r);
        let tt = t.clone();
        let g_ratio = move |w: &[f64]| {
            // d(|mu| + |mu|^-)/d pi_X = (|g(w)| + |g(-w)|) Vol for w in B_R
            let neg: Vec<f64> = w.iter().map(|x| -x).collect();
            (tt.eval_g(w).norm() + tt.eval_g(&neg).norm()) * vol
        };
        let mut rng = RngStream::new(17, 0);
        let cg = cstar_general(&gp, &g_ratio, m, 200_000, &mut rng).unwrap();
        let cu = cstar_uniform(&t, m, r, q).unwrap();
        assert!(
            cg < 8.0 * cu && cu < 8.0 * cg,
            "general {cg} vs uniform {cu}"
        );
        // degenerate ratio gives zero
        let zero_ratio = |_: &[f64]| 0.0;
        assert_eq!(
            cstar_general(&gp, &zero_ratio, m, 1_000, &mut rng).unwrap(),
            0.0
        );
    }

    #[test]
    fn empirical_variance_below_cstar() {
        let t = FourierTarget::gaussian_bump(1, 1.0).unwrap();
        let d = build_repr(&t, 5.0).unwrap();
        let s = FeatureSampler::uniform_ball(5.0, 1, 1.0).unwrap();
        let cstar = cstar_uniform(&t, 1.0, 5.0, 1).unwrap();
        let root = RngStream::new(18, 0);
        let mut zs_rng = root.child(1000);
        for slot in 0..4u64 {
            let z = [zs_rng.uniform(-1.0, 1.0)];
            let mut rng = root.child(slot);
            let (a, zeta) = sample_hidden(&s, 30_000, &mut rng).unwrap();
            let w = oracle_readout(&d, &s, &a, &zeta).unwrap();
            // V_i sigma(<A_i, z> + zeta_i) = N W_i sigma(...)
            let mut acc = Welford::new();
            let n = a.nrows() as f64;
            for i in 0..a.nrows() {
                let act = (a[(i, 0)] * z[0] + zeta[i]).max(0.0);
                acc.push(n * w[(0, i)] * act);
            }
            let var = acc.variance();
            assert!(
                var <= 1.05 * cstar,
                "z={}: empirical variance {var} vs C* {cstar}",
                z[0]
            );
        }
    }

    #[test]
    fn ridge_interpolates_and_fits_zero() {
        // square invertible feature matrix: lambda = 0 is an exact solve
        let mut rng = RngStream::new(19, 0);
        let n = 32;
        let phi = Array2::from_shape_fn((n, n), |_| rng.standard_normal());
        let labels = Array2::from_shape_fn((1, n), |(_, j)| (3.0 * j as f64 / n as f64).sin());
        let w = ridge_readout(phi.view(), labels.view(), 0.0).unwrap();
        let fit = w.dot(&phi);
        let num: f64 = (&fit - &labels).iter().map(|x| x * x).sum::<f64>().sqrt();
        let den: f64 = labels.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(num / den <= 1e-8, "interpolation residual {}", num / den);

        let zero_labels = Array2::zeros((1, n));
        let w0 = ridge_readout(phi.view(), zero_labels.view(), 1e-6).unwrap();
        assert!(w0.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn ridge_signals_singular_system() {
        // a dead feature next to a large one leaves the Gram matrix rank
        // deficient at a scale the 1e-12 fallback cannot rescue
        let mut phi = Array2::zeros((3, 4));
        phi[(0, 0)] = 100.0;
        phi[(0, 1)] = 100.0;
        phi[(2, 2)] = 1.0;
        phi[(2, 3)] = -1.0;
        let labels = Array2::from_elem((1, 4), 1.0);
        let err = ridge_readout(phi.view(), labels.view(), 0.0).unwrap_err();
        assert!(matches!(err, RandresError::LinearSolve(_)), "got {err}");
        // a real ridge weight repairs it
        assert!(ridge_readout(phi.view(), labels.view(), 1e-6).is_ok());
        assert!(ridge_readout(phi.view(), labels.view(), -1.0).is_err());
    }

    #[test]
    fn ridge_beats_oracle_on_training_distribution() {
        let target = FourierTarget::gaussian_bump(1, 1.0).unwrap();
        let cfg = MseVsNConfig {
            target,
            r_support: 5.0,
            n_grid: vec![256],
            input_law: InputLaw::UniformCube,
            n_test: 512,
            n_seeds: 4,
            ridge: Some(RidgeSpec {
                n_train: 4096,
                lambda: 1e-6,
            }),
            seed: 20,
        };
        let rows = mse_vs_n(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        let oracle = rows.iter().find(|r| r.readout == ReadoutKind::Oracle).unwrap();
        let ridge = rows.iter().find(|r| r.readout == ReadoutKind::Ridge).unwrap();
        assert!(
            ridge.mse.mean <= oracle.mse.mean,
            "ridge {} should not lose to oracle {}",
            ridge.mse.mean,
            oracle.mse.mean
        );
    }

    #[test]
    fn mse_decays_with_width() {
        let target = FourierTarget::gaussian_bump(1, 1.0).unwrap();
        let cfg = MseVsNConfig {
            target,
            r_support: 5.0,
            n_grid: vec![32, 128, 512],
            input_law: InputLaw::UniformCube,
            n_test: 256,
            n_seeds: 12,
            ridge: None,
            seed: 21,
        };
        let rows = mse_vs_n(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!(
                r.mse.mean <= r.cstar_over_n + r.truncation_bound,
                "N={}: mse {} above bound {}",
                r.n_features,
                r.mse.mean,
                r.cstar_over_n
            );
        }
        let first = rows[0].mse.mean;
        let last = rows[2].mse.mean;
        assert!(
            first / last > 4.0,
            "16x width should cut the mse well beyond 4x: {first} -> {last}"
        );
    }

    #[test]
    fn schedule_values() {
        let s = schedule_r(1024.0, ScheduleMode::Poly { k: 1 }, 1).unwrap();
        assert!((s.r - 1024f64.powf(0.25)).abs() < 1e-12);
        assert_eq!(s.rate_exponent, Some(0.25));

        let e = schedule_r(std::f64::consts::E.powi(4), ScheduleMode::Exp { k: 2, c: 1.0 }, 1)
            .unwrap();
        assert!((e.r - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(e.rate_exponent, None);

        // k -> infinity pushes the poly exponent toward 1/2
        let hi = schedule_r(1024.0, ScheduleMode::Poly { k: 1000 }, 1).unwrap();
        assert!(hi.rate_exponent.unwrap() > 0.49);

        assert!(schedule_r(1.0, ScheduleMode::Poly { k: 1 }, 1).is_err());
        assert!(schedule_r(16.0, ScheduleMode::Exp { k: 2, c: 0.0 }, 1).is_err());
    }

    #[test]
    fn universal_workflow_picks() {
        let zero = FourierTarget::zero(1, 1.0).unwrap();
        let p = universal_workflow(&zero, 0.5, 0.5).unwrap();
        assert_eq!((p.r_support, p.n_features, p.rho), (1.0, 1, 1.0));

        let t = FourierTarget::gaussian_bump(1, 1.0).unwrap();
        let pick = universal_workflow(&t, 0.5, 0.5).unwrap();
        let thr = 0.5 * 0.5f64.sqrt() / 4.0;
        let m = t.moments();
        assert!(m.tail_mass(pick.r_support).unwrap() < thr);
        let c = cstar_uniform(&t, 1.0, pick.r_support, 1).unwrap();
        assert!((c / pick.n_features as f64).sqrt() < thr);
        assert!((pick.rho - pick.r_support.max(1.0)).abs() < 1e-12);

        // quartering eps multiplies the width requirement by >= 16
        let tighter = universal_workflow(&t, 0.125, 0.5).unwrap();
        assert!(tighter.n_features >= 16 * pick.n_features);
        assert!(universal_workflow(&t, 0.0, 0.5).is_err());
        assert!(universal_workflow(&t, 0.5, 1.5).is_err());
    }
}
