//! Boundary bias on a half-line: plain fit, reflection, and a log transform,
//! on half-normal data (zero slope at the boundary, where reflection is
//! unbiased).
//!
//! cargo run --release --example boundary_remedies

use mcde::estimator::{fit_mcde, FitConfig};
use mcde::preprocess::{reflect_boundary, transform_variable, VariableTransform};
use mcde::synthdata::{sample_product, DistributionSpec};
use mcde::Sample;

fn main() -> mcde::Result<()> {
    let draws = sample_product(&DistributionSpec::normal(0.0, 1.0), 800, 1, 3)?;
    let sample = Sample::new(draws.as_slice().iter().map(|v| v.abs()).collect(), 1)?;
    let truth = |x: f64| 2.0 * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let config = FitConfig::default();

    let plain = fit_mcde(&sample, &config)?;
    let reflected = fit_mcde(&reflect_boundary(&sample, 0.0)?, &config)?;
    let logged = fit_mcde(&transform_variable(&sample, VariableTransform::Log)?, &config)?;

    println!("{:>5} {:>8} {:>8} {:>9} {:>8}", "x", "true", "plain", "reflected", "log");
    for x in [0.02, 0.1, 0.3, 0.7, 1.5, 2.5] {
        // Reflection spreads mass over both sides; fold it back.
        let r = 2.0 * reflected.density(&[x]);
        // Change of variables y = ln x.
        let l = logged.density(&[x.ln()]) / x;
        println!("{x:>5.2} {:>8.4} {:>8.4} {r:>9.4} {l:>8.4}", truth(x), plain.density(&[x]));
    }
    Ok(())
}
