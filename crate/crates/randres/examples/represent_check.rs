//! Verifies the integral representation behind every construction in this
//! crate: on the ball `||v|| <= M` the target satisfies
//!
//! ```text
//!     f(v) = int pi(w, u) sigma(<v, w> + u) dw du,
//! ```
//!
//! so a ReLU feature with importance-weighted amplitude is an unbiased
//! estimator of f. The example builds the density for the canonical Gaussian
//! bump, reconstructs f by Monte Carlo at a few probes and prints the
//! agreement in units of the standard error.
//!
//! Run with `cargo run --release --example represent_check`.

use randres::repr::{build_repr, diagonal_grid};
use randres::stats::RngStream;
use randres::targets::FourierTarget;
use randres::Result;

fn main() -> Result<()> {
    let q = 1;
    let m = 1.0;
    let r_support = 5.0;
    let n_samples = 200_000;

    let target = FourierTarget::gaussian_bump(q, m)?;
    let density = build_repr(&target, r_support)?;
    println!(
        "density support: ||w|| <= {}, u in (-max(M||w||, 1), 1] inside |u| <= {:.4}  (q = {q}, M = {m})",
        density.r_support, density.u_bound
    );
    println!("{:>8} {:>12} {:>12} {:>10} {:>8}", "v", "estimate", "f(v)", "stderr", "dev/se");

    let root = RngStream::new(7, 0);
    for (i, v) in diagonal_grid(q, m, 5).iter().enumerate() {
        let mut stream = root.child(i as u64);
        let est = density.check_representation(v, n_samples, &mut stream)?;
        let truth = target.eval_f(v);
        println!(
            "{:>8.3} {:>12.6} {:>12.6} {:>10.2e} {:>8.2}",
            v[0],
            est.mean,
            truth,
            est.stderr,
            (est.mean - truth).abs() / est.stderr
        );
    }
    println!("\nevery row should sit within a few standard errors of f(v)");
    Ok(())
}
