//! K-fold cross-validation of the path, then a refit at the selected lambda.
//!
//! cargo run --release --example cross_validation

use pulasso::{
    cross_validate, fit, gen_mixture, Algorithm, CvConfig, GroupSpec, PathConfig, Scheme, SimConfig, SolverConfig,
    Standardizer, StorageMode,
};

fn main() -> pulasso::Result<()> {
    let sim = gen_mixture(&SimConfig {
        n_l: 250,
        n_u: 250,
        p: 15,
        s: 3,
        rho: 0.0,
        d: 3.0,
        scheme: Scheme::Logistic,
        seed: 21,
    })?;
    let groups = GroupSpec::singletons(15);
    let path = PathConfig {
        n_lambda: 25,
        lambda_min_ratio: Some(0.01),
        ..PathConfig::default()
    };
    let solver = SolverConfig::default();
    let cv = CvConfig {
        folds: 5,
        seed: 1,
        ..CvConfig::default()
    };
    let res = cross_validate(&sim.data, &groups, &path, &solver, &cv)?;
    for (i, l) in res.lambdas.iter().enumerate().step_by(4) {
        println!("lambda {l:.3e}: deviance {:.2} +- {:.2}", res.mean_deviance[i], res.se_deviance[i]);
    }
    println!("lambda_min = {:.3e}, lambda_1se = {:.3e}", res.lambda_min, res.lambda_1se);

    let sd = Standardizer::build(sim.data.x(), &groups, StorageMode::Dense)?;
    let f = fit(&sim.data, &sd, res.lambda_1se, None, &solver, Algorithm::QmEm)?;
    println!("selected at lambda_1se: {:?}; true support {:?}", f.active_groups, sim.active);
    Ok(())
}
