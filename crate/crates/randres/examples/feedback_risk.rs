//! The output-feedback construction: an echo state network whose readout
//! feeds back into the state, sampled so that one step of the network
//! approximates one step of a contracting target system. The example prints
//! the theoretical risk bound, measures the empirical risk gap at two
//! widths, estimates how often the echo state property event holds, and
//! quantifies the mean-field defect `s_n` of the sampling density (zero for
//! the exact density, positive once the density is truncated).
//!
//! Run with `cargo run --release --example feedback_risk`.

use randres::feedback::{
    c_star, esp_event_probability, risk_bound, risk_gap, s_n_estimate, RiskSpec,
};
use randres::stats::RngStream;
use randres::targets::ContractionTarget;
use randres::Result;

fn main() -> Result<()> {
    let target = ContractionTarget::new(1, 1, 1.0, vec![0.5])?;
    let spec = RiskSpec::for_target(&target);
    let cstar = c_star(&target)?;
    println!("contraction factor r = {:.4}", target.contraction_r);
    println!("horizon T = {} (contraction tail below 1e-6)", spec.t_horizon);
    println!("bound constant C* = {cstar:.1}");
    println!(
        "risk-gap bound at delta = {}: N = 64 -> {:.3}, N = 1024 -> {:.3}\n",
        spec.delta,
        risk_bound(&target, cstar, &spec, 64),
        risk_bound(&target, cstar, &spec, 1024)
    );

    // Empirical risk gap: |R(W) - R(*)| over paired input windows.
    let mut stream = RngStream::new(13, 0);
    let rows = risk_gap(&target, &spec, &[32, 128], 200, 6, &mut stream)?;
    println!("{:>6} {:>12} {:>12} {:>10} {:>12}", "N", "gap_median", "gap_hi", "bound", "within");
    for row in &rows {
        println!(
            "{:>6} {:>12.4} {:>12.4} {:>10.3} {:>12.2}",
            row.n_blocks, row.gap.median, row.gap.hi, row.bound, row.within_bound_frac
        );
    }

    // The bound conditions on the trajectory staying inside the state ball;
    // this frequency estimates how often that event holds.
    let mut esp_stream = RngStream::new(13, 1);
    let esp = esp_event_probability(&target, 128, spec.t_horizon, 30, 5, &mut esp_stream)?;
    println!("\nESP event frequency at N = 128: {esp:.2} over 30 trials");

    // Mean-field defect of the sampling density: the exact density
    // reproduces the target one-step map up to quadrature error, a truncated
    // density misses the dropped tail.
    let mut sn_stream = RngStream::new(13, 2);
    let exact = s_n_estimate(&target, spec.t_horizon, 3, None, &mut sn_stream)?;
    let mut sn_stream = RngStream::new(13, 2);
    let truncated = s_n_estimate(&target, spec.t_horizon, 3, Some(0.5), &mut sn_stream)?;
    println!("mean-field defect s_n: exact density {exact:.2e}, truncated at 0.5: {truncated:.2e}");
    Ok(())
}
