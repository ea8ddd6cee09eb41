//! Test-set misclassification of the PU fit against an oracle fitted on the
//! true labels and a naive fit that treats unlabeled as negative.
//!
//! cargo run --release --example classification

use pulasso::simulate::{classification_rep, ClassifyOptions};
use pulasso::{PathConfig, Scheme, SimConfig};

fn main() -> pulasso::Result<()> {
    let cfg = SimConfig {
        n_l: 300,
        n_u: 300,
        p: 10,
        s: 5,
        rho: 0.0,
        d: 3.5,
        scheme: Scheme::Logistic,
        seed: 2,
    };
    let opts = ClassifyOptions {
        reps: 3,
        n_test: 1000,
        folds: 5,
        path: PathConfig {
            n_lambda: 20,
            ..PathConfig::default()
        },
        ..ClassifyOptions::default()
    };
    for rep in 0..opts.reps as u64 {
        let row = classification_rep(&cfg, rep, &opts)?;
        let cells: Vec<String> = row
            .iter()
            .map(|(m, mis, f1)| format!("{}: err {mis:.3} f1 {f1:.3}", m.name()))
            .collect();
        println!("rep {rep}: {}", cells.join(" | "));
    }
    Ok(())
}
