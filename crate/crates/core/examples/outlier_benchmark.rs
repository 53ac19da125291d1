//! Mean AUC over seeds for the three synthetic outlier datasets.
//!
//! cargo run --release --example outlier_benchmark

use mcde::bench::{run_outlier_experiment, DatasetRef, OutlierExperimentConfig};
use mcde::estimator::FitConfig;

fn main() -> mcde::Result<()> {
    let config = OutlierExperimentConfig {
        datasets: ["dataset1", "dataset2", "dataset3"]
            .into_iter()
            .map(|n| DatasetRef::Named(n.into()))
            .collect(),
        dims: vec![1, 2, 4],
        k_values: vec![5, 20, 60, 100],
        r: 4,
        seed: 0,
        fit: FitConfig::default(),
        whiten: true,
    };
    let report = run_outlier_experiment(&config)?;
    for row in &report.rows {
        println!(
            "{:<9} D={} k={:>3}  AUC {:.3} +- {:.3}{}",
            row.dataset,
            row.dim,
            row.k,
            row.mean_auc,
            row.half_width.unwrap_or(0.0),
            if row.grey_zone { "  (k below outlier count)" } else { "" }
        );
    }
    Ok(())
}
