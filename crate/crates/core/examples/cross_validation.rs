//! Loading a CSV, a seeded stratified split with training-only scaling, and
//! grid search for k and sigma.

use ppkde::harness::{
    cross_validate, load_csv, prepare, stratified_split, CsvSchema, DistanceMatrix, Hyper,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/cancer2.csv".into());
    let table = load_csv(path.as_ref(), &CsvSchema::default())?;
    let split = stratified_split(&table.labels, 0.2, 7)?;
    let p = prepare(&table, &split)?;
    println!(
        "{} train / {} test, {} features, classes {:?}",
        p.train.len(),
        p.test.len(),
        table.m(),
        table.class_names
    );

    let ks: Vec<Hyper> = [1, 3, 5, 9, 15].iter().map(|&k| Hyper::K(k)).collect();
    let sigmas: Vec<Hyper> = [0.05, 0.1, 0.2, 0.4, 0.8]
        .iter()
        .map(|&s| Hyper::Sigma(s))
        .collect();
    let dm = DistanceMatrix::between(&p.train, &p.test);
    for grid in [ks, sigmas] {
        let cv = cross_validate(&p.train, &grid, 5, 7)?;
        for (h, acc) in &cv.grid {
            println!("  {h:<12} cv {acc:6.2}%");
        }
        let pred = dm.predict(&p.train, cv.best)?;
        println!(
            "best {}: test accuracy {:.2}%",
            cv.best,
            ppkde::harness::accuracy_pct(&pred, &p.test)
        );
    }
    Ok(())
}
