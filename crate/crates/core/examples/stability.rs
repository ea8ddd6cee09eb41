//! Selection stability across cross-validation training folds: pairwise
//! Jaccard similarity of the selected groups at every lambda.
//!
//! cargo run --release --example stability

use pulasso::evaluate::selection_stability;
use pulasso::{gen_mixture, CvConfig, GroupSpec, PathConfig, Scheme, SimConfig, SolverConfig};

fn main() -> pulasso::Result<()> {
    let sim = gen_mixture(&SimConfig {
        n_l: 200,
        n_u: 300,
        p: 20,
        s: 4,
        rho: 0.3,
        d: 2.5,
        scheme: Scheme::Logistic,
        seed: 4,
    })?;
    let path = PathConfig {
        n_lambda: 15,
        lambda_min_ratio: Some(0.02),
        ..PathConfig::default()
    };
    let cv = CvConfig {
        folds: 5,
        ..CvConfig::default()
    };
    let table = selection_stability(&sim.data, &GroupSpec::singletons(20), &path, &SolverConfig::default(), &cv)?;
    println!("{:>10} {:>8} {:>8} {:>8}", "lambda", "median", "min", "selected");
    for r in &table {
        println!(
            "{:>10.3e} {:>8.3} {:>8.3} {:>8.1}",
            r.lambda, r.summary.median, r.summary.min, r.mean_selected
        );
    }
    Ok(())
}
