//! With unlabeled samples scored as negatives the ROC curve is biased; the
//! prevalence correction recovers the AUC one would get against true labels.
//!
//! cargo run --release --example adjusted_auc

use pulasso::evaluate::auc;
use pulasso::{adjusted_roc, gen_mixture, Scheme, SimConfig};

fn main() -> pulasso::Result<()> {
    let sim = gen_mixture(&SimConfig {
        n_l: 5000,
        n_u: 15000,
        p: 10,
        s: 4,
        rho: 0.0,
        d: 2.0,
        scheme: Scheme::Logistic,
        seed: 8,
    })?;
    // score with the true linear predictor
    let theta = sim.theta_star.as_ref().expect("logistic scheme");
    let scores = sim.data.x().linear_predictor(theta)?;

    let unlabeled: Vec<usize> = (0..scores.len()).filter(|&i| !sim.data.z()[i]).collect();
    let oracle = auc(
        &unlabeled.iter().map(|&i| scores[i]).collect::<Vec<_>>(),
        &unlabeled.iter().map(|&i| sim.y[i]).collect::<Vec<_>>(),
    )?;
    let roc = adjusted_roc(&scores, sim.data.z(), sim.pi)?;
    println!("pi = {:.3}", sim.pi);
    println!("naive AUC (unlabeled as negative): {:.4}", roc.auc_naive);
    println!("adjusted AUC:                      {:.4}", roc.auc_adj);
    println!("oracle AUC on true labels:         {oracle:.4}");
    Ok(())
}
