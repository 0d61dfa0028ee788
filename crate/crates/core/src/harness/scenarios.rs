//! Synthetic datasets with known behavior.

use crate::kde::{DataTuple, Dataset};

/// One class-1 tuple at the center of `[0, 1]^2` surrounded by a ring of
/// `ring` class-0 tuples at `radius`. With a wide enough kernel, KDE calls
/// every point of the square class 0, while 1-NN still answers class 1 next
/// to the lone tuple.
pub fn unbalanced_ring(ring: usize, radius: f64) -> Dataset {
    let mut tuples = vec![DataTuple::new(vec![0.5, 0.5], 1)];
    for i in 0..ring {
        let a = std::f64::consts::TAU * i as f64 / ring as f64;
        tuples.push(DataTuple::new(
            vec![0.5 + radius * a.cos(), 0.5 + radius * a.sin()],
            0,
        ));
    }
    Dataset::from_tuples(2, 2, tuples).expect("well-formed scenario")
}

/// Regular `res x res` grid over `[0, 1]^2`, corners included.
pub fn unit_grid(res: usize) -> Vec<Vec<f64>> {
    let step = 1.0 / (res.max(2) - 1) as f64;
    (0..res)
        .flat_map(|i| (0..res).map(move |j| vec![i as f64 * step, j as f64 * step]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kde::{kde_classify, knn_classify_majority};

    #[test]
    fn kde_drowns_the_rare_class_until_reweighted() {
        let data = unbalanced_ring(40, 0.15);
        let sigma = 0.3;
        assert!(unit_grid(21)
            .iter()
            .all(|q| kde_classify(&data, q, sigma).unwrap() == 0));
        assert_eq!(knn_classify_majority(&data, &[0.5, 0.5], 1).unwrap(), 1);
        assert_eq!(knn_classify_majority(&data, &[0.52, 0.49], 1).unwrap(), 1);
        let weighted = data.with_class_weights(vec![1.0, 40.0]).unwrap();
        assert_eq!(kde_classify(&weighted, &[0.5, 0.5], sigma).unwrap(), 1);
    }
}
