//! A lone tuple ringed by another class: KDE votes the majority class
//! everywhere, 1-NN does not, and weighting the rare class restores it.

use ppkde::harness::scenarios::{unbalanced_ring, unit_grid};
use ppkde::kde::{kde_classify, knn_classify_majority};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = unbalanced_ring(40, 0.15);
    let sigma = 0.3;
    let grid = unit_grid(41);
    let count = |f: &dyn Fn(&[f64]) -> usize| grid.iter().filter(|q| f(q) == 1).count();
    let weighted = data.clone().with_class_weights(vec![1.0, 40.0])?;
    println!("grid points called the rare class, out of {}:", grid.len());
    println!(
        "  kde          {}",
        count(&|q| kde_classify(&data, q, sigma).unwrap())
    );
    println!(
        "  1-nn         {}",
        count(&|q| knn_classify_majority(&data, q, 1).unwrap())
    );
    println!(
        "  weighted kde {}",
        count(&|q| kde_classify(&weighted, q, sigma).unwrap())
    );
    Ok(())
}
