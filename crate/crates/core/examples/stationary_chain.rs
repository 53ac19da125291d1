//! Build the chain on a tiny sample and check its stationary distribution
//! against power iteration.
//!
//! cargo run --example stationary_chain

use mcde::chain::{distance_matrix, stationary_distribution, transition_matrix, weight_matrix, Metric};
use mcde::{Kernel, Sample};

fn main() -> mcde::Result<()> {
    let sample = Sample::from_values(&[0.0, 1.0, 3.0])?;
    let d = distance_matrix(&sample, Metric::Euclidean)?;
    let w = weight_matrix(&d, Kernel::Gaussian, 1.0, 1.0)?;
    let q = transition_matrix(&w)?;
    let pi = stationary_distribution(&w)?;

    for i in 0..q.n() {
        println!("Q[{i}] = {:.4?}", q.row(i));
    }
    println!("pi (row sums)      = {:.4?}", pi.as_slice());

    let mut v = vec![1.0 / 3.0; 3];
    for _ in 0..200 {
        let next = q.left_multiply(&v);
        v = v.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
    }
    println!("pi (power iteration) = {v:.4?}");
    Ok(())
}
