//! Builds one random feature network with the importance-sampling readout
//! and inspects it: outputs against the target on a probe grid, and the
//! single-feature variance against the theoretical constant `cstar_uniform`
//! that drives the O(1/N) mean squared error bound.
//!
//! Run with `cargo run --release --example importance_readout`.

use randres::ranfeat::{
    cstar_uniform, oracle_readout, sample_hidden, FeatureSampler, RandomFeatureNet,
};
use randres::repr::{build_repr, diagonal_grid};
use randres::reservoir::vol_ball;
use randres::stats::{RngStream, Welford};
use randres::targets::FourierTarget;
use randres::Result;

fn main() -> Result<()> {
    let (q, m, r_support, n) = (1, 1.0, 5.0, 1024);
    let target = FourierTarget::gaussian_bump(q, m)?;
    let density = build_repr(&target, r_support)?;
    let sampler = FeatureSampler::uniform_ball(r_support, q, m)?;
    let mut stream = RngStream::new(11, 0);

    // One net: z -> W sigma(A z + zeta), where W_i is the density ratio of
    // the signed representation over the sampler, divided by N.
    let (a, zeta) = sample_hidden(&sampler, n, &mut stream)?;
    let w = oracle_readout(&density, &sampler, &a, &zeta)?;
    let net = RandomFeatureNet::new(a, zeta, w)?;
    println!("one net with N = {n} features:");
    println!("{:>8} {:>12} {:>12} {:>10}", "z", "net(z)", "f(z)", "error");
    for z in diagonal_grid(q, m, 5) {
        let out = net.forward_scalar(&z);
        let truth = target.eval_f(&z);
        println!("{:>8.3} {:>12.6} {:>12.6} {:>10.2e}", z[0], out, truth, (out - truth).abs());
    }

    // The error of the N-term average is governed by the variance of one
    // importance-weighted feature, which the constant cstar_uniform bounds.
    let cstar = cstar_uniform(&target, m, r_support, q)?;
    let scale = 2.0 * density.u_bound * vol_ball(q, r_support);
    let mut z = [0.0];
    stream.fill_uniform_ball(m, &mut z);
    let mut acc = Welford::new();
    let mut w_row = [0.0];
    for _ in 0..100_000 {
        stream.fill_uniform_ball(r_support, &mut w_row);
        let u = stream.uniform(-density.u_bound, density.u_bound);
        let pre = (w_row[0] * z[0] + u).max(0.0);
        acc.push(scale * density.eval_pi(&w_row, u) * pre);
    }
    println!("\nsingle-feature variance at z = {:.3}: {:.1}", z[0], acc.variance());
    println!("cstar_uniform bound:                 {cstar:.1}");
    println!("predicted root MSE at N = {n}: {:.4}", (cstar / n as f64).sqrt());
    Ok(())
}
