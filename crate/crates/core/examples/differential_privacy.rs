//! Laplace noise on the class sums, scaled to the kernel peak.

use ppkde::dp::{argmax_frequencies, sensitivity, DpParams};
use ppkde::kde::{DataTuple, Dataset};
use ppkde::math::seeded_rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sigma = 0.2;
    let data = Dataset::from_tuples(
        1,
        2,
        vec![
            DataTuple::new(vec![0.30], 0),
            DataTuple::new(vec![0.35], 0),
            DataTuple::new(vec![0.60], 1),
        ],
    )?;
    println!("sensitivity {:.4}", sensitivity(sigma)?);
    let mut rng = seeded_rng(5);
    for eps in [0.1, 1.0, 10.0] {
        let p = DpParams::for_epsilon(eps, sigma)?;
        let f = argmax_frequencies(&data, &[0.45], &p, 20_000, &mut rng)?;
        println!(
            "epsilon {eps:>4}: lambda {:.4}, class frequencies {f:.3?}",
            p.lambda
        );
    }
    Ok(())
}
