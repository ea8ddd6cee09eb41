//! Regularization path on simulated presence-only data with grouped
//! covariates, written to a coefficient-path file and read back.
//!
//! cargo run --example fit_path

use pulasso::io::{read_path, write_path, CoefficientPath, PathRecord, default_names};
use pulasso::{fit_path, gen_mixture, Algorithm, GroupSpec, PathConfig, Scheme, SimConfig, SolverConfig, Standardizer, StorageMode};

fn main() -> pulasso::Result<()> {
    let sim = gen_mixture(&SimConfig {
        n_l: 300,
        n_u: 300,
        p: 12,
        s: 4,
        rho: 0.2,
        d: 3.0,
        scheme: Scheme::Logistic,
        seed: 11,
    })?;
    println!("prevalence pi = {:.3}, true signal in columns {:?}", sim.pi, sim.active);

    // columns (0,1), (2,3), ... form groups
    let groups = GroupSpec::new((0..6).map(|j| vec![2 * j, 2 * j + 1]).collect(), None)?;
    let sd = Standardizer::build(sim.data.x(), &groups, StorageMode::Dense)?;
    let path = PathConfig {
        n_lambda: 30,
        ..PathConfig::default()
    };
    let fits = fit_path(&sim.data, &sd, &path, &SolverConfig::default(), Algorithm::QmEm)?;

    println!("{:>10} {:>12} {:>7} {:>6}", "lambda", "objective", "groups", "iters");
    for f in fits.iter().step_by(3) {
        println!("{:>10.3e} {:>12.6} {:>7} {:>6}", f.lambda, f.objective, f.active_groups.len(), f.outer_iters);
    }

    let dir = tempfile::tempdir()?;
    let file = dir.path().join("path.csv");
    let cp = CoefficientPath {
        names: default_names(12),
        records: fits.iter().map(PathRecord::from).collect(),
    };
    write_path(&file, &cp)?;
    let back = read_path(&file)?;
    assert_eq!(back, cp);
    println!("path file round trip: {} records, exact", back.records.len());
    Ok(())
}
