//! Estimation error shrinks like sqrt(s log p / n). A small version of the
//! experiment: calibrate c_s on a pilot run, then regress error on the rate.
//!
//! cargo run --release --example mse_scaling

use pulasso::simulate::{calibrate_cs, mse_experiment, MseOptions};

fn main() -> pulasso::Result<()> {
    let opts = MseOptions {
        p: 50,
        reps: 4,
        seed: 7,
        ..MseOptions::default()
    };
    let s_grid = [2, 5];
    let n_grid = [400, 800, 1600];
    let grid = [0.1, 0.2, 0.3, 0.5];
    let c_s = s_grid
        .iter()
        .map(|&s| calibrate_cs(s, 800, &grid, &MseOptions { reps: 2, ..opts.clone() }))
        .collect::<pulasso::Result<Vec<_>>>()?;
    println!("calibrated c_s: {c_s:?}");
    let table = mse_experiment(&s_grid, &n_grid, &c_s, &opts)?;
    println!("{:>3} {:>6} {:>8} {:>10}", "s", "n", "rate", "l2 error");
    for p in &table.points {
        println!("{:>3} {:>6} {:>8.4} {:>10.4}", p.s, p.n, p.rate, p.mean_error);
    }
    println!("slope {:.3}, R^2 through the origin {:.3}", table.slope, table.r_squared);
    Ok(())
}
