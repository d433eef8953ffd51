//! A compact width sweep for the static approximation: mean squared error
//! of the importance-sampled readout at doubling widths, the fitted log-log
//! slope (the theory predicts -1), and the `C*/N` budget next to it.
//!
//! This is the desk-scale version of `randres static-conv`; the CLI runs the
//! full grid with confidence intervals and writes CSV.
//!
//! Run with `cargo run --release --example static_rate`.

use randres::ranfeat::{mse_vs_n, InputLaw, MseVsNConfig};
use randres::stats::fit_rate;
use randres::targets::FourierTarget;
use randres::Result;

fn main() -> Result<()> {
    let table = mse_vs_n(&MseVsNConfig {
        target: FourierTarget::gaussian_bump(1, 1.0)?,
        r_support: 5.0,
        n_grid: vec![32, 64, 128, 256, 512, 1024],
        input_law: InputLaw::UniformCube,
        n_test: 256,
        n_seeds: 10,
        ridge: None,
        seed: 3,
    })?;

    println!("{:>6} {:>12} {:>12} {:>12}", "N", "mse_mean", "mse_hi", "cstar/N");
    for row in &table {
        println!(
            "{:>6} {:>12.3e} {:>12.3e} {:>12.3e}",
            row.n_features, row.mse.mean, row.mse.hi, row.cstar_over_n
        );
    }

    let pairs: Vec<(f64, f64)> =
        table.iter().map(|r| (r.n_features as f64, r.mse.mean)).collect();
    let fit = fit_rate(&pairs)?;
    println!("\nfitted log-log slope: {:.3} (theory: -1), r^2 = {:.3}", fit.slope, fit.r2);
    Ok(())
}
