//! Echo state networks with output feedback (Jordan networks).
//!
//! The static machinery in [`crate::ranfeat`] approximates one function; here
//! the object is a state map. A [`JordanEsn`] iterates
//!
//! ```text
//!     x_t = sigma(A y_{t-1} + C z_t + zeta),    y_t = W x_t,
//! ```
//!
//! so the readout output is fed back as the next state argument. The hidden
//! rows are sampled exactly like static features on the joint (state, input)
//! space, and the readout `W` is not trained: block `i` of `W` carries the
//! importance-sampling weights of the representation densities of the target
//! map's components, so each output coordinate is an `N`-fold average of
//! one-step unbiased estimators ([`build_jordan`]).
//!
//! Against a contracting target map ([`crate::targets::ContractionTarget`])
//! the module estimates three quantities:
//!
//! * [`esp_event_probability`]: how often the sampled readout keeps all
//!   one-step images inside the state ball, the event on which the iterated
//!   system forgets its initialization;
//! * [`risk_gap`]: the gap between the risks of the sampled filter and of the
//!   target filter, next to the theoretical `O(1/sqrt(N))` bound;
//! * [`s_n_estimate`]: the mean-field defect, i.e. how far the expected
//!   one-step map sits from the target map. With the exact representation
//!   density the defect is zero and the estimate only measures quadrature
//!   noise; a truncation knob exposes the biased regime.

use crate::error::{RandresError, Result};
use crate::repr::{build_repr, diagonal_grid, ReprDensity};
use crate::reservoir::vol_ball;
use crate::stats::{median_ci, quad_1d, unit_sphere_area, MedianCI, RngStream};
use crate::targets::ContractionTarget;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use std::f64::consts::PI;

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Random echo state network with output feedback.
///
/// The hidden layer stacks `n_blocks` blocks of `state_dim` neurons. Row
/// `(i, j)` (neuron `j` of block `i`) holds a weight pair `(A_j, C_j)` drawn
/// uniformly from the unit ball of the joint space and an offset `zeta_j`
/// drawn uniformly from `[-u_bound, u_bound]`. The readout is the averaged
/// block-diagonal matrix `W = (1/N)(W_1 ... W_N)` with
/// `W_i = diag(v[i][0], ..., v[i][state_dim-1])`: output coordinate `j` only
/// ever reads neuron `j` of each block.
#[derive(Clone, Debug)]
pub struct JordanEsn {
    /// Number of readout blocks `N`.
    pub n_blocks: usize,
    /// Output (and fed-back state) dimension.
    pub state_dim: usize,
    /// Input dimension.
    pub input_dim: usize,
    /// Range bound `M` of the target map; states are probed over the ball of
    /// radius `M + 1`.
    pub bound_m: f64,
    /// Half-width of the offset sampling interval.
    pub u_bound: f64,
    /// Hidden state weights, `(n_blocks * state_dim) x state_dim`.
    pub a: Array2<f64>,
    /// Hidden input weights, `(n_blocks * state_dim) x input_dim`.
    pub c: Array2<f64>,
    /// Hidden offsets.
    pub zeta: Array1<f64>,
    /// Readout values `v[(i, j)]`, the diagonal of block `i` before the
    /// `1/N` average.
    pub v: Array2<f64>,
}

impl JordanEsn {
    /// Number of hidden neurons, `n_blocks * state_dim`.
    pub fn hidden_dim(&self) -> usize {
        self.n_blocks * self.state_dim
    }

    /// One application of the hidden layer: `sigma(A y + C z + zeta)`.
    pub fn hidden_step(&self, y: ArrayView1<f64>, z: ArrayView1<f64>) -> Array1<f64> {
        let mut h = self.a.dot(&y) + self.c.dot(&z) + &self.zeta;
        h.mapv_inplace(|t| t.max(0.0));
        h
    }

    /// The readout `W x` computed from the stored diagonals, without
    /// materializing `W`.
    pub fn apply_w(&self, x: ArrayView1<f64>) -> Array1<f64> {
        debug_assert_eq!(x.len(), self.hidden_dim());
        let scale = 1.0 / self.n_blocks as f64;
        let mut y = Array1::zeros(self.state_dim);
        for i in 0..self.n_blocks {
            for j in 0..self.state_dim {
                y[j] += self.v[(i, j)] * x[i * self.state_dim + j];
            }
        }
        y.mapv_inplace(|t| t * scale);
        y
    }

    /// One full step `y -> W sigma(A y + C z + zeta)`.
    pub fn one_step(&self, y: ArrayView1<f64>, z: ArrayView1<f64>) -> Array1<f64> {
        self.apply_w(self.hidden_step(y, z).view())
    }

    /// The dense readout matrix, `state_dim x hidden_dim`. Only the
    /// block-diagonal positions `(j, i * state_dim + j)` are ever nonzero.
    pub fn w_matrix(&self) -> Array2<f64> {
        let mut w = Array2::zeros((self.state_dim, self.hidden_dim()));
        let scale = 1.0 / self.n_blocks as f64;
        for i in 0..self.n_blocks {
            for j in 0..self.state_dim {
                w[(j, i * self.state_dim + j)] = scale * self.v[(i, j)];
            }
        }
        w
    }
}

/// Samples a [`JordanEsn`] for `target` and assembles its oracle readout.
///
/// Each hidden row draws `(A_j, C_j)` uniformly from the unit ball of the
/// joint space and its offset uniformly from `[-u_bound, u_bound]`, where
/// `u_bound` is the full offset support of the components' representation
/// densities. That support reaches `max(M_B, 1)` with `M_B` the joint input
/// bound (states of norm up to `M + 1` plus inputs of norm up to
/// `sqrt(d) M`), which is slightly wider than `M + 1`; a narrower offset law
/// would miss part of the density's support and bias the readout. The
/// readout value of neuron `(i, j)` is the importance-sampling ratio
///
/// ```text
///     v[(i, j)] = pi_j(row) / (sampling density)
///               = 2 Vol(B_1) u_bound * pi_j(A_j, C_j, zeta_j),
/// ```
///
/// where `pi_j` is the representation density of the target's component `j`
/// built with unit weight-support radius. Averaging blocks then makes every
/// one-step output an unbiased estimator of the target map (checked in the
/// tests at four standard errors).
pub fn build_jordan(
    target: &ContractionTarget,
    n_blocks: usize,
    stream: &mut RngStream,
) -> Result<JordanEsn> {
    if n_blocks == 0 {
        return Err(RandresError::invalid("n_blocks", "need at least one readout block"));
    }
    let nstar = target.state_dim;
    let d = target.input_dim;
    let joint = nstar + d;
    let reprs: Vec<ReprDensity> = (0..nstar)
        .map(|j| build_repr(&target.component_target(j), 1.0))
        .collect::<Result<_>>()?;
    let u_bound = reprs[0].u_bound;
    let ratio = 2.0 * vol_ball(joint, 1.0) * u_bound;

    let hidden = n_blocks * nstar;
    let mut a = Array2::zeros((hidden, nstar));
    let mut c = Array2::zeros((hidden, d));
    let mut zeta = Array1::zeros(hidden);
    let mut v = Array2::zeros((n_blocks, nstar));
    let mut row = vec![0.0; joint];
    for i in 0..n_blocks {
        for j in 0..nstar {
            stream.fill_uniform_ball(1.0, &mut row);
            let u = stream.uniform(-u_bound, u_bound);
            let val = ratio * reprs[j].eval_pi(&row, u);
            if !val.is_finite() {
                return Err(RandresError::EstimatorNonConvergent(format!(
                    "readout weight for block {i}, coordinate {j} is not finite"
                )));
            }
            let r = i * nstar + j;
            for k in 0..nstar {
                a[(r, k)] = row[k];
            }
            for k in 0..d {
                c[(r, k)] = row[nstar + k];
            }
            zeta[r] = u;
            v[(i, j)] = val;
        }
    }
    Ok(JordanEsn {
        n_blocks,
        state_dim: nstar,
        input_dim: d,
        bound_m: target.bound_m,
        u_bound,
        a,
        c,
        zeta,
        v,
    })
}

/// Iterates the network over `inputs` (one row per step, oldest first) from
/// the initialization `xi` and returns the output trajectory, one row per
/// step.
///
/// Requires `||xi|| <= M`: the unbiasedness and stability arguments only
/// cover states inside the target's range ball.
pub fn run_jordan(esn: &JordanEsn, inputs: ArrayView2<f64>, xi: &[f64]) -> Result<Array2<f64>> {
    if xi.len() != esn.state_dim {
        return Err(RandresError::DimMismatch(format!(
            "initial state has {} entries, network state dimension is {}",
            xi.len(),
            esn.state_dim
        )));
    }
    if inputs.ncols() != esn.input_dim {
        return Err(RandresError::DimMismatch(format!(
            "inputs have {} columns, network input dimension is {}",
            inputs.ncols(),
            esn.input_dim
        )));
    }
    if inputs.nrows() == 0 {
        return Err(RandresError::invalid("inputs", "need at least one step"));
    }
    let xi_norm = norm2(xi);
    if !(xi_norm <= esn.bound_m) {
        return Err(RandresError::invalid(
            "xi",
            format!("||xi|| = {xi_norm} exceeds the state bound M = {}", esn.bound_m),
        ));
    }
    let mut y = Array1::from(xi.to_vec());
    let mut out = Array2::zeros((inputs.nrows(), esn.state_dim));
    for (t, z) in inputs.outer_iter().enumerate() {
        y = esn.one_step(y.view(), z);
        out.row_mut(t).assign(&y);
    }
    Ok(out)
}

/// Lower bound for the sup of `||W sigma(A x + C z + zeta)||` over states
/// `x` in the ball of radius `M + 1` and the given inputs.
///
/// Probe states are a `grid_size`-point diagonal transect of the ball, the
/// origin, and the axis boundary points `+-(M+1) e_j`; every input row is
/// paired with every probe. The zero-start trajectory driven by the same
/// inputs is also included, so a certificate `<= M + 1` directly certifies
/// that trajectory's outputs. A grid sup can only under-estimate the true
/// sup, so event memberships decided with it err toward optimism; the grid
/// size is part of any reported result.
pub fn esp_certificate(esn: &JordanEsn, inputs: ArrayView2<f64>, grid_size: usize) -> f64 {
    let m1 = esn.bound_m + 1.0;
    let mut probes = diagonal_grid(esn.state_dim, m1, grid_size);
    probes.push(vec![0.0; esn.state_dim]);
    for j in 0..esn.state_dim {
        for s in [-1.0, 1.0] {
            let mut e = vec![0.0; esn.state_dim];
            e[j] = s * m1;
            probes.push(e);
        }
    }
    let mut sup = 0.0f64;
    for z in inputs.outer_iter() {
        for p in &probes {
            let y = esn.one_step(ArrayView1::from(&p[..]), z);
            sup = sup.max(norm2(y.as_slice().expect("owned output is contiguous")));
        }
    }
    let mut y = Array1::zeros(esn.state_dim);
    for z in inputs.outer_iter() {
        y = esn.one_step(y.view(), z);
        sup = sup.max(norm2(y.as_slice().expect("owned output is contiguous")));
    }
    sup
}

/// Fraction of `n_trials` independently built networks whose
/// [`esp_certificate`] over a fresh input window of length `t_horizon + 1`
/// stays within `M + 1`.
///
/// Inside this event the feedback iteration cannot leave the probed state
/// ball, which is what makes long trajectories forget their initialization.
pub fn esp_event_probability(
    target: &ContractionTarget,
    n_blocks: usize,
    t_horizon: usize,
    n_trials: usize,
    grid_size: usize,
    stream: &mut RngStream,
) -> Result<f64> {
    if n_trials < 30 {
        return Err(RandresError::invalid(
            "n_trials",
            "need at least 30 trials for a stable frequency",
        ));
    }
    let children: Vec<RngStream> = (0..n_trials).map(|i| stream.child(i as u64)).collect();
    let m1 = target.bound_m + 1.0;
    let d = target.input_dim;
    let hits: Result<Vec<bool>> = children
        .into_par_iter()
        .map(|mut ch| {
            let esn = build_jordan(target, n_blocks, &mut ch)?;
            let mut z = Array2::zeros((t_horizon + 1, d));
            for t in 0..=t_horizon {
                for k in 0..d {
                    z[(t, k)] = ch.uniform(-target.bound_m, target.bound_m);
                }
            }
            Ok(esp_certificate(&esn, z.view(), grid_size) <= m1)
        })
        .collect();
    let hits = hits?;
    Ok(hits.iter().filter(|&&b| b).count() as f64 / n_trials as f64)
}

/// Loss functions admitted by [`RiskSpec`], each with an explicit Lipschitz
/// constant in both arguments.
#[derive(Clone, Copy, Debug)]
pub enum LossKind {
    /// `L(x, y) = ||x - y||`, Lipschitz constant 1.
    Absolute,
    /// `L(x, y) = min(||x - y||, clip)^2`, Lipschitz constant `2 clip`.
    SquaredClipped {
        /// Clipping level; must be positive.
        clip: f64,
    },
}

impl LossKind {
    /// Lipschitz constant `L_L` with respect to either argument.
    pub fn lipschitz(&self) -> f64 {
        match self {
            LossKind::Absolute => 1.0,
            LossKind::SquaredClipped { clip } => 2.0 * clip,
        }
    }

    /// Evaluate the loss.
    pub fn eval(&self, pred: &[f64], label: &[f64]) -> f64 {
        debug_assert_eq!(pred.len(), label.len());
        let dist = pred
            .iter()
            .zip(label)
            .map(|(p, l)| (p - l) * (p - l))
            .sum::<f64>()
            .sqrt();
        match self {
            LossKind::Absolute => dist,
            LossKind::SquaredClipped { clip } => {
                let t = dist.min(*clip);
                t * t
            }
        }
    }
}

/// Risk-experiment configuration: loss, label noise, horizon, and the
/// confidence budget `delta` at which the theoretical bound is reported.
#[derive(Clone, Copy, Debug)]
pub struct RiskSpec {
    pub loss: LossKind,
    /// Scale of the centered Gaussian noise added to the target filter's
    /// output to form labels.
    pub label_noise: f64,
    /// Trajectory horizon `T`; risks compare outputs after `T + 1` steps.
    pub t_horizon: usize,
    /// Confidence budget of the reported bound.
    pub delta: f64,
}

impl RiskSpec {
    /// Default experiment: absolute loss, noise 0.01, `delta = 1/2`, and the
    /// horizon chosen so the forgetting term `r^{T+1}` is below `1e-6` and
    /// the width term dominates the bound at every practical `N`.
    pub fn for_target(target: &ContractionTarget) -> Self {
        RiskSpec {
            loss: LossKind::Absolute,
            label_noise: 0.01,
            t_horizon: horizon_for_tail(target.contraction_r, 1e-6),
            delta: 0.5,
        }
    }
}

/// Smallest horizon `T` with `r^{T+1} <= tol` for a contraction factor
/// `r in (0, 1)`.
pub fn horizon_for_tail(r: f64, tol: f64) -> usize {
    assert!(r > 0.0 && r < 1.0, "contraction factor must be in (0, 1)");
    assert!(tol > 0.0 && tol < 1.0, "tolerance must be in (0, 1)");
    let steps = (tol.ln() / r.ln()).ceil().max(1.0) as usize;
    steps - 1
}

/// The bound constant `C* = 16 sqrt(3 ((M+1)^3 + M + 3)(M+1)) C_{H*}`, where
/// `C_{H*}` sums the components' smoothness constants
/// [`ContractionTarget::c_h_star`].
pub fn c_star(target: &ContractionTarget) -> Result<f64> {
    let m1 = target.bound_m + 1.0;
    Ok(16.0 * (3.0 * (m1.powi(3) + target.bound_m + 3.0) * m1).sqrt() * target.c_h_star()?)
}

/// Theoretical risk-gap bound at confidence budget `spec.delta`:
///
/// ```text
///     (L_L / delta) [ 2 (M+1) C* / ((1 - r) sqrt(N)) + 2 (M+1) r^{T+1} ].
/// ```
///
/// `cstar` is passed in so sweeps do not recompute the quadrature behind
/// [`c_star`].
pub fn risk_bound(target: &ContractionTarget, cstar: f64, spec: &RiskSpec, n_blocks: usize) -> f64 {
    let m1 = target.bound_m + 1.0;
    let r = target.contraction_r;
    let tail = r.powi(spec.t_horizon as i32 + 1);
    (spec.loss.lipschitz() / spec.delta)
        * (2.0 * m1 * cstar / ((1.0 - r) * (n_blocks as f64).sqrt()) + 2.0 * m1 * tail)
}

/// One row of the risk sweep: the across-seed distribution of the empirical
/// risk gap at a given width, next to the theoretical bound.
#[derive(Clone, Debug)]
pub struct RiskRow {
    pub n_blocks: usize,
    /// Median and confidence interval of `|R(H_W) - R(H*)|` across seeds.
    pub gap: MedianCI,
    /// [`risk_bound`] at the [`RiskSpec`] confidence budget `delta`.
    pub bound: f64,
    /// Fraction of seeds whose gap stayed within the bound.
    pub within_bound_frac: f64,
}

/// Empirical risk gap of a single sampled network against the target filter.
///
/// Both risks average the same `n_mc` input windows, so the common Monte
/// Carlo noise cancels in the difference and the gap isolates the network's
/// deviation. Labels are the target filter's output plus centered noise;
/// both filters start from the zero state.
fn seed_gap(
    target: &ContractionTarget,
    spec: &RiskSpec,
    esn: &JordanEsn,
    n_mc: usize,
    ch: &mut RngStream,
) -> Result<f64> {
    let steps = spec.t_horizon + 1;
    let d = target.input_dim;
    let nstar = target.state_dim;
    let m = target.bound_m;
    let xi0 = vec![0.0; nstar];
    let mut z = Array2::zeros((steps, d));
    let mut label = vec![0.0; nstar];
    let mut risk_w = 0.0;
    let mut risk_star = 0.0;
    for _ in 0..n_mc {
        for t in 0..steps {
            for k in 0..d {
                z[(t, k)] = ch.uniform(-m, m);
            }
        }
        let mut ystar = vec![0.0; nstar];
        for t in 0..steps {
            let zt = z.row(t);
            ystar = target.eval(&ystar, zt.as_slice().expect("row of a standard-layout array"));
        }
        for (l, y) in label.iter_mut().zip(&ystar) {
            *l = y + spec.label_noise * ch.standard_normal();
        }
        let traj = run_jordan(esn, z.view(), &xi0)?;
        let yw = traj.row(steps - 1);
        risk_w += spec.loss.eval(yw.as_slice().expect("row of a standard-layout array"), &label);
        risk_star += spec.loss.eval(&ystar, &label);
    }
    Ok(((risk_w - risk_star) / n_mc as f64).abs())
}

/// Sweeps the empirical risk gap over the widths in `n_grid`.
///
/// For each width, `n_seeds` networks are built and evaluated on `n_mc`
/// fresh input windows each (seed-parallel; each seed's accumulation is
/// sequential, so results do not depend on the thread schedule). Rows carry
/// the across-seed median with confidence interval, the theoretical bound at
/// `spec.delta`, and the fraction of seeds within the bound.
pub fn risk_gap(
    target: &ContractionTarget,
    spec: &RiskSpec,
    n_grid: &[usize],
    n_mc: usize,
    n_seeds: usize,
    stream: &mut RngStream,
) -> Result<Vec<RiskRow>> {
    if n_grid.is_empty() || n_grid.iter().any(|&n| n == 0) {
        return Err(RandresError::invalid("n_grid", "widths must be nonempty and positive"));
    }
    if n_mc == 0 {
        return Err(RandresError::invalid("n_mc", "need at least one input window"));
    }
    if n_seeds < 2 {
        return Err(RandresError::invalid("n_seeds", "need at least two seeds for a median"));
    }
    if !(spec.delta > 0.0 && spec.delta < 1.0) {
        return Err(RandresError::invalid("delta", "confidence budget must be in (0, 1)"));
    }
    if !(spec.label_noise >= 0.0 && spec.label_noise.is_finite()) {
        return Err(RandresError::invalid("label_noise", "noise scale must be finite and >= 0"));
    }
    let cstar = c_star(target)?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for (bi, &nb) in n_grid.iter().enumerate() {
        let children: Vec<RngStream> = (0..n_seeds)
            .map(|s| stream.child((bi * n_seeds + s) as u64))
            .collect();
        let gaps: Result<Vec<f64>> = children
            .into_par_iter()
            .map(|mut ch| {
                let esn = build_jordan(target, nb, &mut ch)?;
                seed_gap(target, spec, &esn, n_mc, &mut ch)
            })
            .collect();
        let gaps = gaps?;
        let bound = risk_bound(target, cstar, spec, nb);
        let within = gaps.iter().filter(|&&g| g <= bound).count() as f64 / n_seeds as f64;
        rows.push(RiskRow {
            n_blocks: nb,
            gap: median_ci(&gaps),
            bound,
            within_bound_frac: within,
        });
    }
    Ok(rows)
}

/// Surface integral of `max(0, a theta_1 + u)` over the unit sphere of
/// `R^n`, for `a >= 0`: the angular factor that turns the mean-field
/// integral over a radial density into a one-dimensional radial integral.
/// Dimensions 1 and 2 are closed forms; higher dimensions integrate the
/// `sin^{n-2}` weight with the kink split out.
fn angular_sigma(n: usize, a: f64, u: f64) -> Result<f64> {
    debug_assert!(a >= 0.0);
    match n {
        1 => Ok((a + u).max(0.0) + (u - a).max(0.0)),
        2 => {
            if u >= a {
                Ok(2.0 * PI * u)
            } else if u <= -a {
                Ok(0.0)
            } else {
                let phi = (-u / a).acos();
                Ok(2.0 * (a * phi.sin() + u * phi))
            }
        }
        _ => {
            if u <= -a {
                return Ok(0.0);
            }
            let area = unit_sphere_area(n - 1);
            let pow = n as i32 - 2;
            let f = |phi: f64| {
                let t = a * phi.cos() + u;
                if t > 0.0 {
                    t * phi.sin().powi(pow)
                } else {
                    0.0
                }
            };
            let val = if a > 0.0 && u < a {
                let cut = (-u / a).acos();
                quad_1d(f, 0.0, cut, 5e-13)? + quad_1d(f, cut, PI, 5e-13)?
            } else {
                quad_1d(f, 0.0, PI, 1e-12)?
            };
            Ok(area * val)
        }
    }
}

/// The expected one-step map component `int sigma(<v, w> + u) pi(w, u) dw du`
/// by nested adaptive quadrature in radial coordinates (the density must
/// have a radial Fourier weight).
///
/// With `trunc_r = None` the folded density of `repr` is integrated over its
/// full support and the result reproduces the target component on the input
/// ball up to quadrature error. With `trunc_r = Some(R_t)` the unfolded
/// ridge density is integrated over weights of norm `<= R_t` only, dropping
/// the tail mass: the biased mean-field map of a truncated sampling scheme.
fn component_mean_field(repr: &ReprDensity, trunc_r: Option<f64>, v: &[f64]) -> Result<f64> {
    let n = repr.dim_q;
    debug_assert_eq!(v.len(), n);
    if repr.target.g_radial().is_none() {
        return Err(RandresError::invalid(
            "target",
            "the mean-field quadrature needs a radial Fourier weight",
        ));
    }
    let vnorm = norm2(v);
    let (r_hi, folded) = match trunc_r {
        Some(rt) => {
            if !(rt > 0.0 && rt.is_finite()) {
                return Err(RandresError::invalid(
                    "trunc_r",
                    "truncation radius must be positive and finite",
                ));
            }
            (rt, false)
        }
        None => (repr.r_support, true),
    };
    // Offset support: both alpha pieces vanish above u = 1; below, the ridge
    // window reaches -M ||w||, capped by the integration radius (the folded
    // density additionally never leaves [-u_bound, u_bound]).
    let u_lo = if folded {
        -repr.u_bound
    } else {
        -(repr.bound_m * r_hi).max(1.0)
    };
    let u_hi = 1.0;
    let mut w = vec![0.0; n];
    let mut inner_err: Option<RandresError> = None;
    let refl_scale = repr.r_support * repr.r_support;
    let outer = quad_1d(
        |r| {
            let a = r * vnorm;
            // Split the offset axis at every support edge the integrand can
            // jump or kink across: the two ridge-window edges, the edges of
            // the reflected correction piece (|u| = ||w||^2 / R^2), and the
            // kinks of the angular factor at |u| = a.
            let mut cuts = vec![u_lo, u_hi];
            let refl_edge = r * r / refl_scale;
            for c in [-1.0, 0.0, -(repr.bound_m * r), refl_edge, -refl_edge, a, -a] {
                if c > u_lo && c < u_hi {
                    cuts.push(c);
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut acc = 0.0;
            for pair in cuts.windows(2) {
                let piece = quad_1d(
                    |u| {
                        w[0] = r;
                        let dens = if folded {
                            repr.eval_pi(&w, u)
                        } else {
                            repr.eval_alpha1(&w, u) + repr.eval_alpha2(&w, u)
                        };
                        if dens == 0.0 {
                            return 0.0;
                        }
                        match angular_sigma(n, a, u) {
                            Ok(s) => dens * s,
                            Err(e) => {
                                inner_err = Some(e);
                                f64::NAN
                            }
                        }
                    },
                    pair[0],
                    pair[1],
                    1e-12,
                );
                match piece {
                    Ok(p) => acc += p,
                    Err(e) => {
                        inner_err = Some(e);
                        return f64::NAN;
                    }
                }
            }
            acc * r.powi(n as i32 - 1)
        },
        0.0,
        r_hi,
        1e-9,
    );
    if let Some(e) = inner_err {
        return Err(e);
    }
    let val = outer?;
    if !val.is_finite() {
        return Err(RandresError::EstimatorNonConvergent(
            "mean-field quadrature returned a non-finite value".into(),
        ));
    }
    Ok(val)
}

/// Estimates the mean-field defect
/// `max over probed (x, Z_t) of || E[one-step map](x, Z_t) - F*(x, Z_t) ||`,
/// a grid lower bound of the sup over the state ball.
///
/// Probe states are a `n_grid`-point diagonal transect of the ball of radius
/// `M + 1`; inputs are `t_horizon + 1` fresh uniform draws. The expected
/// one-step map does not depend on the number of blocks (every block
/// averages the same density), so the estimate applies to every width. With
/// `trunc_r = None` the sampling density is exact and any nonzero result is
/// quadrature noise; `trunc_r = Some(R_t)` reports the bias of a density
/// truncated to weights of norm `<= R_t`.
pub fn s_n_estimate(
    target: &ContractionTarget,
    t_horizon: usize,
    n_grid: usize,
    trunc_r: Option<f64>,
    stream: &mut RngStream,
) -> Result<f64> {
    if n_grid == 0 {
        return Err(RandresError::invalid("n_grid", "need at least one probe state"));
    }
    let nstar = target.state_dim;
    let d = target.input_dim;
    let reprs: Vec<ReprDensity> = (0..nstar)
        .map(|j| build_repr(&target.component_target(j), 1.0))
        .collect::<Result<_>>()?;
    let probes = diagonal_grid(nstar, target.bound_m + 1.0, n_grid);
    let mut inputs = vec![vec![0.0; d]; t_horizon + 1];
    for zt in inputs.iter_mut() {
        for e in zt.iter_mut() {
            *e = stream.uniform(-target.bound_m, target.bound_m);
        }
    }
    let mut worst = 0.0f64;
    let mut v = vec![0.0; nstar + d];
    for zt in &inputs {
        for x in &probes {
            v[..nstar].copy_from_slice(x);
            v[nstar..].copy_from_slice(zt);
            let truth = target.eval(x, zt);
            let mut dev2 = 0.0;
            for (j, repr) in reprs.iter().enumerate() {
                let mean_field = component_mean_field(repr, trunc_r, &v)?;
                dev2 += (mean_field - truth[j]) * (mean_field - truth[j]);
            }
            worst = worst.max(dev2.sqrt());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Welford;
    use ndarray::array;

    fn default_target() -> ContractionTarget {
        ContractionTarget::default_for(1.0).unwrap()
    }

    fn zero_target() -> ContractionTarget {
        ContractionTarget::new(1, 1, 1.0, vec![0.0]).unwrap()
    }

    #[test]
    fn w_is_exactly_block_diagonal() {
        let t = ContractionTarget::new(3, 1, 1.0, vec![0.2, 0.2, 0.2]).unwrap();
        let mut s = RngStream::new(11, 0);
        let esn = build_jordan(&t, 2, &mut s).unwrap();
        assert_eq!(esn.hidden_dim(), 6);
        assert_eq!(esn.a.dim(), (6, 3));
        assert_eq!(esn.c.dim(), (6, 1));
        assert_eq!(esn.zeta.len(), 6);
        assert_eq!(esn.v.dim(), (2, 3));

        let w = esn.w_matrix();
        assert_eq!(w.dim(), (3, 6));
        for j in 0..3 {
            for col in 0..6 {
                if col % 3 == j {
                    assert_eq!(w[(j, col)], 0.5 * esn.v[(col / 3, j)]);
                } else {
                    assert_eq!(w[(j, col)], 0.0, "off-diagonal entry ({j}, {col}) leaked");
                }
            }
        }

        // the implicit readout agrees with the dense matrix
        let x = Array1::from((0..6).map(|i| 0.3 * i as f64 - 0.7).collect::<Vec<_>>());
        let dense = w.dot(&x);
        let implicit = esn.apply_w(x.view());
        for j in 0..3 {
            assert!((dense[j] - implicit[j]).abs() <= 1e-14);
        }

        // sampled rows live where the density expects them
        for r in 0..6 {
            let joint = [esn.a[(r, 0)], esn.a[(r, 1)], esn.a[(r, 2)], esn.c[(r, 0)]];
            let nrm = norm2(&joint);
            assert!(nrm <= 1.0 + 1e-12, "row {r} left the unit ball: {nrm}");
            assert!(esn.zeta[r].abs() <= esn.u_bound + 1e-12);
        }
        // joint offset support is the wider representation window, not M + 1
        assert!((esn.u_bound - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_amplitude_freezes_the_network() {
        let t = zero_target();
        let mut s = RngStream::new(12, 0);
        let esn = build_jordan(&t, 8, &mut s).unwrap();
        assert!(esn.v.iter().all(|&v| v == 0.0));
        assert!(esn.w_matrix().iter().all(|&w| w == 0.0));
        let z = array![[0.4], [-0.9], [0.1]];
        let out = run_jordan(&esn, z.view(), &[0.5]).unwrap();
        assert!(out.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn single_step_matches_direct_formula() {
        let t = default_target();
        let mut s = RngStream::new(5, 1);
        let esn = build_jordan(&t, 1, &mut s).unwrap();
        let z = array![[0.25]];
        let out = run_jordan(&esn, z.view(), &[0.4]).unwrap();
        let pre = esn.a[(0, 0)] * 0.4 + esn.c[(0, 0)] * 0.25 + esn.zeta[0];
        let manual = esn.v[(0, 0)] * pre.max(0.0);
        assert!((out[(0, 0)] - manual).abs() <= 1e-15, "{} vs {manual}", out[(0, 0)]);
    }

    #[test]
    fn constructors_and_runs_validate() {
        let t = default_target();
        let mut s = RngStream::new(6, 1);
        assert!(build_jordan(&t, 0, &mut s).is_err());
        let esn = build_jordan(&t, 4, &mut s).unwrap();
        let z = array![[0.1], [0.2]];
        // initialization outside the state bound
        assert!(run_jordan(&esn, z.view(), &[1.5]).is_err());
        // wrong state dimension
        assert!(run_jordan(&esn, z.view(), &[0.1, 0.1]).is_err());
        // wrong input dimension
        let z2 = array![[0.1, 0.2]];
        assert!(run_jordan(&esn, z2.view(), &[0.1]).is_err());
        // empty window
        let z0 = Array2::zeros((0, 1));
        assert!(run_jordan(&esn, z0.view(), &[0.1]).is_err());
        // frequency estimates need enough trials
        assert!(esp_event_probability(&t, 4, 2, 10, 5, &mut s).is_err());
        // truncation radius must be positive
        assert!(s_n_estimate(&t, 1, 3, Some(-1.0), &mut s).is_err());
        assert_eq!(horizon_for_tail(t.contraction_r, 1e-6), 11);
    }

    /// Across independently sampled networks, the one-step output at a fixed
    /// (state, input) probe averages to the target map there: the readout is
    /// an unbiased importance-sampling estimator.
    #[test]
    fn one_step_outputs_are_unbiased() {
        let t = default_target();
        let probes = [(-2.0, 0.3), (-1.0, -1.0), (0.0, 0.0), (0.7, 0.5), (1.9, -0.2)];
        let mut accs = vec![Welford::new(); probes.len()];
        let root = RngStream::new(77, 3);
        for seed in 0..400 {
            let mut ch = root.child(seed);
            let esn = build_jordan(&t, 64, &mut ch).unwrap();
            for (acc, &(x, z)) in accs.iter_mut().zip(&probes) {
                let xs = [x];
                let zs = [z];
                let y = esn.one_step(ArrayView1::from(&xs[..]), ArrayView1::from(&zs[..]));
                acc.push(y[0]);
            }
        }
        for (acc, &(x, z)) in accs.iter().zip(&probes) {
            let est = acc.finish();
            let truth = t.eval(&[x], &[z])[0];
            assert!(est.stderr > 0.0);
            assert!(
                (est.mean - truth).abs() <= 4.0 * est.stderr,
                "probe ({x}, {z}): mean {} vs target {truth}, stderr {}",
                est.mean,
                est.stderr
            );
        }
    }

    #[test]
    fn esp_certain_for_zero_amplitude() {
        let t = zero_target();
        let p = esp_event_probability(&t, 8, 2, 30, 5, &mut RngStream::new(9, 4)).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn esp_probability_high_at_moderate_width() {
        let t = default_target();
        let p = esp_event_probability(&t, 512, 3, 30, 9, &mut RngStream::new(21, 4)).unwrap();
        assert!(p >= 0.9, "event probability {p} at 512 blocks");
    }

    /// Trials whose certificate stays within M + 1 really do keep the
    /// zero-start trajectory inside the ball.
    #[test]
    fn certified_trials_keep_outputs_bounded() {
        let t = default_target();
        let root = RngStream::new(33, 5);
        let mut certified = 0;
        for trial in 0..30 {
            let mut ch = root.child(trial);
            let esn = build_jordan(&t, 512, &mut ch).unwrap();
            let mut z = Array2::zeros((4, 1));
            for r in 0..4 {
                z[(r, 0)] = ch.uniform(-1.0, 1.0);
            }
            if esp_certificate(&esn, z.view(), 7) <= 2.0 {
                certified += 1;
                let out = run_jordan(&esn, z.view(), &[0.0]).unwrap();
                for &y in out.iter() {
                    assert!(y.abs() <= 2.0, "certified trial {trial} produced |y| = {}", y.abs());
                }
            }
        }
        assert!(certified >= 15, "only {certified}/30 trials certified");
    }

    #[test]
    fn loss_kinds_are_lipschitz_on_random_quadruples() {
        for loss in [LossKind::Absolute, LossKind::SquaredClipped { clip: 2.0 }] {
            let ll = loss.lipschitz();
            let mut s = RngStream::new(3, 9);
            for _ in 0..1000 {
                let draw = |s: &mut RngStream| {
                    [3.0 * s.standard_normal(), 3.0 * s.standard_normal(), 3.0 * s.standard_normal()]
                };
                let (x, y, xb, yb) = (draw(&mut s), draw(&mut s), draw(&mut s), draw(&mut s));
                let lhs = (loss.eval(&x, &y) - loss.eval(&xb, &yb)).abs();
                let dx: f64 = x.iter().zip(&xb).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let dy: f64 = y.iter().zip(&yb).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                assert!(lhs <= ll * (dx + dy) + 1e-12, "{lhs} vs {}", ll * (dx + dy));
            }
        }
    }

    #[test]
    fn bound_constants_frozen() {
        let t = default_target();
        let cs = c_star(&t).unwrap();
        // 16 sqrt(3 * 12 * 2) * C_{H*} with C_{H*} = 2.745004762982
        assert!((cs - 372.674_204_6).abs() / cs < 1e-5, "{cs}");
        let spec = RiskSpec::for_target(&t);
        assert_eq!(spec.t_horizon, 11);
        let r = t.contraction_r;
        let by_hand = 2.0 * (4.0 * cs / ((1.0 - r) * 8.0) + 4.0 * r.powi(12));
        assert!((risk_bound(&t, cs, &spec, 64) - by_hand).abs() < 1e-9);
    }

    #[test]
    fn risk_gap_shrinks_with_width_and_respects_bound() {
        let t = default_target();
        let spec = RiskSpec::for_target(&t);
        let rows = risk_gap(&t, &spec, &[32, 256], 200, 8, &mut RngStream::new(55, 6)).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(row.bound.is_finite() && row.bound > 0.0);
            assert!(row.gap.median.is_finite() && row.gap.median >= 0.0);
            assert!(row.within_bound_frac >= 0.5, "width {}: {}", row.n_blocks, row.within_bound_frac);
        }
        assert!(
            rows[1].gap.median <= rows[0].gap.median,
            "gap did not shrink: {} -> {}",
            rows[0].gap.median,
            rows[1].gap.median
        );
        // invalid configurations are rejected
        assert!(risk_gap(&t, &spec, &[], 10, 4, &mut RngStream::new(1, 1)).is_err());
        assert!(risk_gap(&t, &spec, &[8], 0, 4, &mut RngStream::new(1, 1)).is_err());
        assert!(risk_gap(&t, &spec, &[8], 10, 1, &mut RngStream::new(1, 1)).is_err());
        let mut bad = spec;
        bad.delta = 0.0;
        assert!(risk_gap(&t, &bad, &[8], 10, 4, &mut RngStream::new(1, 1)).is_err());
    }

    /// With the exact sampling density the expected one-step map IS the
    /// target map; the defect estimate only sees quadrature noise.
    #[test]
    fn mean_field_defect_vanishes_for_exact_density() {
        let t = default_target();
        let s = s_n_estimate(&t, 2, 5, None, &mut RngStream::new(8, 7)).unwrap();
        assert!(s <= 1e-6, "defect {s} above quadrature noise budget");
    }

    /// Truncating the sampling density to a weight ball of radius R_t biases
    /// the mean-field map by the dropped tail, which shrinks as R_t grows.
    #[test]
    fn mean_field_defect_tracks_truncation_tail() {
        let t = default_target();
        let at = |rt: f64| s_n_estimate(&t, 2, 5, Some(rt), &mut RngStream::new(8, 7)).unwrap();
        let s_quarter = at(0.25);
        let s_half = at(0.5);
        let s_one = at(1.0);
        let s_three = at(3.0);
        assert!(s_half > 1e-3, "truncation at 0.5 should bite: {s_half}");
        assert!(
            s_quarter > s_half && s_half > s_one && s_one > s_three,
            "defect not monotone in the truncation radius: {s_quarter}, {s_half}, {s_one}, {s_three}"
        );
    }
}
