//! Fit a 1-D density to chi-squared draws and compare it with the truth.
//!
//! cargo run --release --example fit_density

use mcde::estimator::{fit_mcde, FitConfig};
use mcde::synthdata::{pdf_eval, sample_product, DistributionSpec};

fn main() -> mcde::Result<()> {
    let spec: DistributionSpec = "chisq:5".parse()?;
    let sample = sample_product(&spec, 1000, 1, 42)?;
    let model = fit_mcde(&sample, &FitConfig::default())?;

    println!("h* = {:.4}", model.h_star);
    println!(
        "normalization constant C = {:.4} (MC std error {:.1e})",
        model.normalization_constant, model.integral.std_error
    );
    println!("{:>6} {:>10} {:>10}", "x", "estimate", "true");
    for x in [0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 12.0] {
        println!("{x:>6.1} {:>10.5} {:>10.5}", model.density(&[x]), pdf_eval(&spec, &[x]));
    }
    Ok(())
}
