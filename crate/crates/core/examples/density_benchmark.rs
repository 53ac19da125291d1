//! Estimation error of the chain estimator and KDE as N grows.
//!
//! cargo run --release --example density_benchmark [spec]

use mcde::bench::{run_de_experiment, DEExperimentConfig};

fn main() -> mcde::Result<()> {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "chisq:5".into());
    let mut config = DEExperimentConfig::new(spec.parse()?, vec![1, 3], vec![100, 300, 1000]);
    config.r = 4;
    let report = run_de_experiment(&config)?;

    println!("{spec}");
    println!("{:>2} {:>5} {:>8} {:>8} {:>11} {:>11} {:>7}", "D", "N", "h_mcde", "h_kde", "scaled_mcde", "scaled_kde", "ratio");
    for c in &report.cells {
        println!(
            "{:>2} {:>5} {:>8.4} {:>8.4} {:>11.3} {:>11.3} {:>7.3}",
            c.dim, c.n, c.h_mcde, c.h_kde, c.scaled_emse_mcde, c.scaled_emse_kde, c.performance_ratio
        );
    }
    for f in &report.failures {
        println!("D = {}, N = {} failed: {}", f.dim, f.n, f.error);
    }
    Ok(())
}
