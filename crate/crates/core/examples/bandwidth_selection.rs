//! Loss curves of the three bandwidth selectors on one sample.
//!
//! cargo run --release --example bandwidth_selection

use mcde::bandwidth::{kde_kfold_cv_curve, loo_curve, GridSpec, LossCurve};
use mcde::estimator::{nll_curve, FitConfig};
use mcde::synthdata::{sample_product, DistributionSpec};
use mcde::Kernel;

fn show(name: &str, curve: &LossCurve) {
    println!("{name}:");
    for p in &curve.points {
        match p.loss {
            Some(l) => println!("  h = {:.4}  loss = {l:.5}", p.h),
            None => println!("  h = {:.4}  failed: {}", p.h, p.failure.as_deref().unwrap_or("?")),
        }
    }
    println!(
        "  -> h* = {:.4} (interior minimum: {})",
        curve.best_h().unwrap_or(f64::NAN),
        curve.has_interior_minimum()
    );
}

fn main() -> mcde::Result<()> {
    let sample = sample_product(&DistributionSpec::normal(0.0, 1.0), 500, 1, 7)?;
    let grid = GridSpec::default().resolve(sample.len())?;

    show("chain NLL (b = 1, f2)", &nll_curve(&sample, &FitConfig::default(), &grid)?);
    show("KDE leave-one-out", &loo_curve(&sample, Kernel::Gaussian, &grid)?);
    show("KDE 5-fold CV", &kde_kfold_cv_curve(&sample, Kernel::Gaussian, &grid, 5, 7)?);
    println!("Silverman's rule for comparison: {:.4}", 1.06 * 500f64.powf(-0.2));
    Ok(())
}
