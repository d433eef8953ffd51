//! Evaluates the constants that appear in the static error bound
//! `E[MSE] <= C*/N + truncation`, for the canonical Gaussian bump target:
//! the variance constant of the uniform sampler, the truncation bracket and
//! tail mass at the support radius, and the predicted root MSE at a chosen
//! width. The CLI subcommand `randres constants` writes the same table as
//! CSV.
//!
//! Run with `cargo run --release --example constants`.

use randres::ranfeat::cstar_uniform;
use randres::targets::FourierTarget;
use randres::Result;

fn main() -> Result<()> {
    let (q, m, r_support, n_at) = (1usize, 1.0, 5.0, 1024usize);
    let target = FourierTarget::gaussian_bump(q, m)?;
    let moments = target.moments();
    let cstar = cstar_uniform(&target, m, r_support, q)?;

    println!("target: Gaussian bump, q = {q}, M = {m}, support radius R = {r_support}");
    println!("{:<18} {:>14.6}", "cstar_uniform", cstar);
    println!("{:<18} {:>14.6}", "c_g_r", moments.truncation_l2(r_support)?);
    println!("{:<18} {:>14.6}", "c_g_star", moments.c_g_star()?);
    println!("{:<18} {:>14.3e}", "tail_mass", moments.tail_mass(r_support)?);
    println!("{:<18} {:>14.6}", "predicted_rmse", (cstar / n_at as f64).sqrt());
    println!("\npredicted_rmse = sqrt(cstar_uniform / N) at N = {n_at}");
    Ok(())
}
