//! Plaintext reference classifiers on a small dataset, including k-NN seen
//! as KDE with a uniform kernel.

use ppkde::kde::{kde_scores, knn_classify_majority, uniform_kernel_scores, DataTuple, Dataset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = [
        ([0.10, 0.20], 0),
        ([0.20, 0.15], 0),
        ([0.30, 0.30], 0),
        ([0.70, 0.80], 1),
        ([0.85, 0.75], 1),
        ([0.60, 0.65], 1),
    ];
    let data = Dataset::from_tuples(
        2,
        2,
        rows.iter()
            .map(|(f, l)| DataTuple::new(f.to_vec(), *l))
            .collect(),
    )?;
    for q in [[0.2, 0.2], [0.5, 0.5], [0.75, 0.7]] {
        let gauss = kde_scores(&data, &q, 0.2)?;
        let uniform = uniform_kernel_scores(&data, &q, 3)?;
        println!(
            "q={q:?}: gaussian {:?} -> {}, uniform {:?} -> {}, 3-NN -> {}",
            gauss.scores,
            gauss.argmax(),
            uniform.scores,
            uniform.argmax(),
            knn_classify_majority(&data, &q, 3)?
        );
    }
    Ok(())
}
