//! Score the points of a labeled synthetic dataset and report AUC for a
//! range of neighborhood sizes.
//!
//! cargo run --release --example outlier_detection

use mcde::estimator::FitConfig;
use mcde::outlier::OutlierDetector;
use mcde::synthdata::OutlierDataset;

fn main() -> mcde::Result<()> {
    let dataset = OutlierDataset::dataset1();
    let data = dataset.generate(4, 1)?;
    let detector = OutlierDetector::fit(&data.points, &FitConfig::default(), true)?;
    println!("{} points in D = 4, h* = {:.4}", data.points.len(), detector.h_star());

    let full = detector.neighbors(150)?;
    for k in [5, 10, 25, 50, 75, 150] {
        let report = detector.report_with(&full.truncated(k)?, Some(&data.labels))?;
        let flag = if k < dataset.n_out { " (fewer neighbors than outliers)" } else { "" };
        println!("k = {k:>3}: AUC = {:.3}{flag}", report.auc.unwrap_or(f64::NAN));
    }

    let report = detector.report(75, None)?;
    let mut ranked: Vec<usize> = (0..report.scores.len()).collect();
    ranked.sort_by(|&a, &b| report.scores[b].total_cmp(&report.scores[a]));
    let hits = ranked[..dataset.n_out].iter().filter(|&&i| data.labels[i]).count();
    println!("top {} scores contain {hits} true outliers", dataset.n_out);
    Ok(())
}
